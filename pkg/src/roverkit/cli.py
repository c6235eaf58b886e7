"""Command-line front end.

Subcommands: combine, decode, segment, score, simulate, distill,
report.  Exit codes: 0 on success, 1 for usage errors, 2 for data
errors (malformed or missing inputs).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .decoders import (
    beam_hypothesis,
    ctc_greedy,
    ctc_prefix_beam,
    load_joint_grid,
    load_posterior_grid,
    rnnt_greedy,
)
from .errors import DataError, DuplicateRecordError
from .evaluation import corpus_wer, duration_buckets, gap_report
from .pipeline import (
    load_config,
    render_report,
    run_distill,
    run_report,
    write_manifest,
)
from .segmenter import SegmentParams, segment_manifest, serialize_segments
from .simulate import ensemble_gain_experiment, gen_corpus, make_profiles
from .transcripts import (
    DEFAULT_POLICY,
    Hypothesis,
    load_hypotheses,
    normalize_hypothesis,
    serialize_hypotheses,
)
from .voting import ORDER_POLICIES, VoteParams, combine


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this tool reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _unit_float(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text} is not a positive number")
    return value


def _name_value(text: str) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name or not value:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name, value


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_by_utterance(path, label: str) -> dict[str, Hypothesis]:
    table: dict[str, Hypothesis] = {}
    for hyp in load_hypotheses(path):
        if hyp.utterance_id in table:
            raise DuplicateRecordError(
                f"{label} {path}: duplicate utterance {hyp.utterance_id!r}"
            )
        table[hyp.utterance_id] = hyp
    return table


def build_parser() -> _Parser:
    # --seed/--workers/--config are accepted both before and after the
    # subcommand.  Subparsers parse into a fresh namespace and copy it
    # over the root one, so the duplicated flags use SUPPRESS defaults:
    # unset they leave the root value alone, set they override it.
    parser = _Parser(prog="roverkit", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="run seed (subcommand flags win)")
    parser.add_argument("--workers", type=_positive_int, default=None, help="parallel workers")
    parser.add_argument("--config", default=None, help="pipeline config (used by distill)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("combine", help="fuse hypothesis files with ROVER voting")
    p.add_argument("--inputs", nargs="+", required=True, help="hypothesis JSONL files")
    p.add_argument("--alpha", type=_unit_float, default=1.0)
    p.add_argument("--null-conf", type=_unit_float, default=0.0)
    p.add_argument("--order", choices=ORDER_POLICIES, default="input")
    p.add_argument("--out", default=None, help="fused hypotheses (default stdout)")
    p.add_argument("--trace", default=None, help="per-utterance vote trace JSONL")
    p.set_defaults(func=_cmd_combine)

    p = sub.add_parser("decode", help="decode posterior/joint grids into hypotheses")
    dsub = p.add_subparsers(dest="decoder", required=True, metavar="DECODER")
    ctc = dsub.add_parser("ctc", help="CTC greedy or prefix beam decoding")
    ctc.add_argument("--grid", required=True, help=".pgrid file or directory")
    ctc.add_argument("--mode", choices=("greedy", "beam"), default="greedy")
    ctc.add_argument("--beam", type=_positive_int, default=8)
    ctc.add_argument("--system", default=None, help="system id (default: mode name)")
    ctc.add_argument("--utt", default=None, help="utterance id (single file only)")
    ctc.add_argument("--out", default=None)
    ctc.set_defaults(func=_cmd_decode_ctc)
    rnnt = dsub.add_parser("rnnt", help="transducer greedy decoding")
    rnnt.add_argument("--grid", required=True, help=".jgrid file or directory")
    rnnt.add_argument("--system", default="rnnt")
    rnnt.add_argument("--utt", default=None)
    rnnt.add_argument("--out", default=None)
    rnnt.set_defaults(func=_cmd_decode_rnnt)

    p = sub.add_parser("segment", help="cut long streams into utterances")
    p.add_argument("--manifest", required=True, help="TSV: source_id<TAB>duration")
    p.add_argument("--min", dest="min_len", type=_positive_float, default=5.0)
    p.add_argument("--max", dest="max_len", type=_positive_float, default=15.0)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("score", help="WER and gap metrics")
    ssub = p.add_subparsers(dest="metric", required=True, metavar="METRIC")
    wer = ssub.add_parser("wer", help="corpus WER of hypotheses vs references")
    wer.add_argument("--ref", required=True)
    wer.add_argument("--hyp", required=True)
    wer.add_argument("--bucket-threshold", type=_positive_float, default=40.0)
    wer.add_argument("--durations", default=None, help="TSV: utterance_id<TAB>seconds")
    wer.add_argument("--no-normalize", action="store_true")
    wer.add_argument("--out", default=None)
    wer.set_defaults(func=_cmd_score_wer)
    gap = ssub.add_parser("gap", help="teacher-student relative WER increase")
    gap.add_argument("--teacher", type=_positive_float, required=True)
    gap.add_argument("--student", type=float, required=True)
    gap.set_defaults(func=_cmd_score_gap)

    p = sub.add_parser("simulate", help="synthetic ensemble-gain experiment")
    p.add_argument("--teachers", type=_positive_int, default=3)
    p.add_argument("--sub-rate", type=_unit_float, default=0.15)
    p.add_argument("--del-rate", type=_unit_float, default=0.0)
    p.add_argument("--ins-rate", type=_unit_float, default=0.0)
    p.add_argument("--categories", choices=("disjoint", "shared"), default="disjoint")
    p.add_argument("--sentences", type=_positive_int, default=200)
    p.add_argument("--words", type=_positive_int, default=20)
    p.add_argument("--vocab", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--alpha", type=_unit_float, default=1.0)
    p.add_argument("--null-conf", type=_unit_float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("distill", help="run the pseudo-labeling pipeline")
    p.add_argument("--config", default=argparse.SUPPRESS, help="pipeline config JSON")
    p.add_argument("--workers", type=_positive_int, default=argparse.SUPPRESS)
    p.add_argument("--out", default=None, help="manifest path (overrides config)")
    p.set_defaults(func=_cmd_distill)

    p = sub.add_parser("report", help="per-model WER and gap tables")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyp", type=_name_value, action="append", default=[], metavar="NAME=PATH")
    p.add_argument("--teacher-wer", type=_name_value, action="append", default=[], metavar="NAME=WER")
    p.add_argument("--baseline", type=_name_value, action="append", default=[], metavar="NAME=WER")
    p.add_argument("--format", choices=("text", "tsv"), default="text")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)
    return parser


def _resolve(value, default):
    return default if value is None else value


def _cmd_combine(args) -> int:
    by_utterance: dict[str, list[Hypothesis]] = {}
    for path in args.inputs:
        for hyp in load_hypotheses(path):
            by_utterance.setdefault(hyp.utterance_id, []).append(hyp)
    if not by_utterance:
        raise DataError("no hypotheses in the input files")
    system_sets = {
        utt: tuple(sorted(hyp.system_id for hyp in hyps))
        for utt, hyps in by_utterance.items()
    }
    distinct = set(system_sets.values())
    if len(distinct) > 1:
        raise DataError(
            f"utterances are covered by different system sets: {sorted(distinct)}"
        )
    params = VoteParams(alpha=args.alpha, null_conf=args.null_conf)
    fused = []
    traces = []
    for utt in sorted(by_utterance):
        hypothesis, trace = combine(by_utterance[utt], params, args.order)
        fused.append(hypothesis)
        traces.append(trace)
    _write_text(args.out, serialize_hypotheses(fused))
    if args.trace is not None:
        lines = []
        for trace in traces:
            lines.append(
                json.dumps(
                    {
                        "utt": trace.utterance_id,
                        "sets": [
                            {
                                "winner": decision.winner,
                                "winner_score": decision.winner_score,
                                "runner_up": decision.runner_up,
                                "runner_up_score": decision.runner_up_score,
                                "tie": decision.tie_broken,
                            }
                            for decision in trace.decisions
                        ],
                    },
                    ensure_ascii=False,
                )
            )
        _write_text(args.trace, "".join(line + "\n" for line in lines))
    return 0


def _grid_paths(root: str, suffix: str) -> list[Path]:
    path = Path(root)
    if path.is_dir():
        paths = sorted(path.glob(f"*{suffix}"))
        if not paths:
            raise DataError(f"no {suffix} files under {path}")
        return paths
    if not path.exists():
        raise DataError(f"grid path not found: {path}")
    return [path]


def _cmd_decode_ctc(args) -> int:
    system = args.system or ("ctc-beam" if args.mode == "beam" else "ctc-greedy")
    hyps = []
    for grid_path in _grid_paths(args.grid, ".pgrid"):
        utt = args.utt if args.utt and not Path(args.grid).is_dir() else grid_path.stem
        grid = load_posterior_grid(grid_path)
        if args.mode == "greedy":
            hyps.append(ctc_greedy(grid, utt, system))
        else:
            hyps.append(beam_hypothesis(ctc_prefix_beam(grid, args.beam), utt, system))
    _write_text(args.out, serialize_hypotheses(hyps))
    return 0


def _cmd_decode_rnnt(args) -> int:
    hyps = []
    for grid_path in _grid_paths(args.grid, ".jgrid"):
        utt = args.utt if args.utt and not Path(args.grid).is_dir() else grid_path.stem
        hyps.append(rnnt_greedy(load_joint_grid(grid_path), utt, args.system))
    _write_text(args.out, serialize_hypotheses(hyps))
    return 0


def _cmd_segment(args) -> int:
    params = SegmentParams(
        min_len=args.min_len,
        max_len=args.max_len,
        seed=_resolve(args.seed, 0),
    )
    with open(args.manifest, encoding="utf-8") as stream:
        records = segment_manifest(stream, params)
    _write_text(args.out, serialize_segments(records))
    return 0


def _read_durations(path) -> dict[str, float]:
    durations: dict[str, float] = {}
    with open(path, encoding="utf-8") as stream:
        for line_no, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{line_no}: expected 'utterance_id<TAB>seconds'")
            try:
                durations[parts[0]] = float(parts[1])
            except ValueError as exc:
                raise DataError(f"{path}:{line_no}: {exc}") from exc
    return durations


def _hyp_duration(hyp: Hypothesis) -> float | None:
    times = [word.t1 for word in hyp.words if word.t1 is not None]
    return max(times) if times else None


def _cmd_score_wer(args) -> int:
    refs = _load_by_utterance(args.ref, "reference file")
    hyps = _load_by_utterance(args.hyp, "hypothesis file")
    missing = sorted(set(refs) - set(hyps))
    if missing:
        raise DataError(f"hypotheses missing for utterances: {missing}")
    policy = None if args.no_normalize else DEFAULT_POLICY
    tokens = {}
    for utt, ref in refs.items():
        hyp = hyps[utt]
        if policy is not None:
            ref = normalize_hypothesis(ref, policy)
            hyp = normalize_hypothesis(hyp, policy)
        tokens[utt] = (ref.tokens(), hyp.tokens())
    report = corpus_wer(tokens.values()).as_dict()

    durations = _read_durations(args.durations) if args.durations else {
        utt: duration
        for utt, hyp in refs.items()
        if (duration := _hyp_duration(hyp)) is not None
    }
    if durations:
        missing = sorted(set(refs) - set(durations))
        if missing:
            raise DataError(f"durations missing for utterances: {missing}")
        records = [
            (durations[utt], ref_tokens, hyp_tokens)
            for utt, (ref_tokens, hyp_tokens) in tokens.items()
        ]
        buckets = duration_buckets(records, args.bucket_threshold)
        report["buckets"] = {name: rep.as_dict() for name, rep in buckets.items()}
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return 0


def _cmd_score_gap(args) -> int:
    row = gap_report(args.teacher, args.student)
    sys.stdout.write(
        f"teacher {row.teacher_wer:.4f}\tstudent {row.student_wer:.4f}\t"
        f"increase {100.0 * row.relative_increase:+.2f}%\n"
    )
    return 0


def _cmd_simulate(args) -> int:
    seed = _resolve(args.seed, 11)
    corpus = gen_corpus(args.sentences, args.words, args.vocab, seed)
    profiles = make_profiles(
        args.teachers,
        sub_rate=args.sub_rate,
        del_rate=args.del_rate,
        ins_rate=args.ins_rate,
        categories=args.categories,
        seed=seed,
    )
    params = VoteParams(alpha=args.alpha, null_conf=args.null_conf)
    report = ensemble_gain_experiment(profiles, corpus, params)
    _write_text(args.out, json.dumps(report.as_dict(), indent=2) + "\n")
    return 0


def _cmd_distill(args) -> int:
    if args.config is None:
        raise DataError("distill needs --config")
    config = load_config(args.config)
    run = run_distill(config, workers=args.workers)
    out = args.out or config.output
    if out is None:
        raise DataError("no output path: set --out or 'output' in the config")
    write_manifest(run.records, out)
    sys.stdout.write(json.dumps(run.summary.as_dict(), indent=2) + "\n")
    return 0


def _cmd_report(args) -> int:
    if not args.hyp:
        raise DataError("report needs at least one --hyp NAME=PATH")
    refs = load_hypotheses(args.refs)
    models = [(name, load_hypotheses(path)) for name, path in args.hyp]
    try:
        teacher_wers = {name: float(value) for name, value in args.teacher_wer}
        baselines = {name: float(value) for name, value in args.baseline}
    except ValueError as exc:
        raise DataError(f"bad WER value: {exc}") from exc
    rows = run_report(
        refs,
        models,
        teacher_wers=teacher_wers,
        baselines=baselines,
        policy=None if args.no_normalize else DEFAULT_POLICY,
    )
    _write_text(args.out, render_report(rows, args.format))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
