"""Pseudo-label production: decode teachers, fuse, and report.

``run_distill`` drives the full path from teacher sources (hypothesis
files or grid directories) to a pseudo-label manifest.  Only
utterances covered by every teacher are fused; the rest are counted
and skipped, because silently voting over a smaller ensemble would
change the meaning of the vote.  Records are emitted in utterance-id
order and each one stores everything needed to re-verify it:
per-teacher transcripts, vote parameters, and the fused result.

``run_report`` turns reference/hypothesis files plus externally
provided teacher and baseline WERs into the gap tables used to compare
models.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .decoders import (
    beam_hypothesis,
    ctc_greedy,
    ctc_prefix_beam,
    load_joint_grid,
    load_posterior_grid,
    rnnt_greedy,
)
from .errors import DataError, DuplicateRecordError, FormatError
from .evaluation import corpus_wer, gap_report, relative_change
from .transcripts import (
    DEFAULT_POLICY,
    Hypothesis,
    NormalizationPolicy,
    Word,
    load_hypotheses,
    normalize_hypothesis,
)
from .voting import ORDER_POLICIES, VoteParams, combine

GRID_DECODERS = ("ctc-greedy", "ctc-beam", "rnnt")
_GRID_SUFFIX = {"ctc-greedy": ".pgrid", "ctc-beam": ".pgrid", "rnnt": ".jgrid"}


@dataclass(frozen=True)
class TeacherSource:
    """One teacher: a hypothesis file, or a grid directory plus decoder."""

    system_id: str
    kind: str  # "hypotheses" or one of GRID_DECODERS
    path: Path
    beam: int = 8

    def __post_init__(self):
        if self.kind != "hypotheses" and self.kind not in GRID_DECODERS:
            raise ValueError(f"unknown teacher kind {self.kind!r}")
        if self.beam < 1:
            raise ValueError(f"beam must be >= 1, got {self.beam}")


@dataclass(frozen=True)
class PipelineConfig:
    teachers: tuple[TeacherSource, ...]
    params: VoteParams = VoteParams()
    order: str = "input"
    normalization: NormalizationPolicy = DEFAULT_POLICY
    output: Path | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "teachers", tuple(self.teachers))
        if not self.teachers:
            raise ValueError("config needs at least one teacher")
        ids = [teacher.system_id for teacher in self.teachers]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate teacher system ids: {sorted(ids)}")
        if self.order not in ORDER_POLICIES:
            raise ValueError(f"unknown order policy {self.order!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


def load_config(path) -> PipelineConfig:
    """Read a pipeline config; relative paths resolve against the file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError(f"config {path}: expected a JSON object")
    base = path.parent
    try:
        teachers = tuple(
            _parse_teacher(entry, base) for entry in raw.get("teachers", [])
        )
        combine_cfg = raw.get("combine", {})
        params = VoteParams(
            alpha=float(combine_cfg.get("alpha", 1.0)),
            null_conf=float(combine_cfg.get("null_conf", 0.0)),
        )
        norm_cfg = raw.get("normalization", {})
        normalization = NormalizationPolicy(
            lowercase=bool(norm_cfg.get("lowercase", True)),
            strip_punctuation=bool(norm_cfg.get("strip_punctuation", True)),
            collapse_whitespace=bool(norm_cfg.get("collapse_whitespace", True)),
        )
        output = raw.get("output")
        return PipelineConfig(
            teachers=teachers,
            params=params,
            order=str(combine_cfg.get("order", "input")),
            normalization=normalization,
            output=base / output if output else None,
            seed=int(raw.get("seed", 0)),
            workers=int(raw.get("workers", 1)),
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise FormatError(f"config {path}: {exc}") from exc


def _parse_teacher(entry: dict, base: Path) -> TeacherSource:
    system_id = entry["system_id"]
    has_hyp = "hypotheses" in entry
    has_grid = "grids" in entry
    if has_hyp == has_grid:
        raise ValueError(
            f"teacher {system_id!r} must set exactly one of 'hypotheses' or 'grids'"
        )
    if has_hyp:
        return TeacherSource(system_id, "hypotheses", base / entry["hypotheses"])
    decoder = entry.get("decoder")
    if decoder not in GRID_DECODERS:
        raise ValueError(
            f"teacher {system_id!r} needs 'decoder' in {GRID_DECODERS}, got {decoder!r}"
        )
    return TeacherSource(
        system_id, decoder, base / entry["grids"], beam=int(entry.get("beam", 8))
    )


class _TeacherFeed:
    """Runtime view of one teacher: covered utterances plus lazy lookup."""

    def __init__(self, source: TeacherSource):
        self.source = source
        self._hyps: dict[str, Hypothesis] = {}
        self._grids: dict[str, Path] = {}
        if source.kind == "hypotheses":
            for hyp in load_hypotheses(source.path):
                if hyp.utterance_id in self._hyps:
                    raise DuplicateRecordError(
                        f"{source.path}: duplicate utterance {hyp.utterance_id!r} "
                        f"in teacher {source.system_id!r}"
                    )
                self._hyps[hyp.utterance_id] = Hypothesis(
                    hyp.utterance_id, source.system_id, hyp.words
                )
        else:
            suffix = _GRID_SUFFIX[source.kind]
            if not source.path.is_dir():
                raise DataError(f"grid directory not found: {source.path}")
            for grid_path in sorted(source.path.glob(f"*{suffix}")):
                self._grids[grid_path.stem] = grid_path

    @property
    def utterances(self) -> set[str]:
        return set(self._hyps) | set(self._grids)

    def get(self, utterance_id: str) -> Hypothesis:
        if self.source.kind == "hypotheses":
            return self._hyps[utterance_id]
        path = self._grids[utterance_id]
        try:
            if self.source.kind == "rnnt":
                return rnnt_greedy(load_joint_grid(path), utterance_id, self.source.system_id)
            grid = load_posterior_grid(path)
            if self.source.kind == "ctc-greedy":
                return ctc_greedy(grid, utterance_id, self.source.system_id)
            result = ctc_prefix_beam(grid, self.source.beam)
            return beam_hypothesis(result, utterance_id, self.source.system_id)
        except (FormatError, ValueError) as exc:
            raise DataError(f"utterance {utterance_id!r}: {exc}") from exc


@dataclass(frozen=True)
class PseudoLabelRecord:
    """One fused utterance with full provenance for replay checks."""

    utterance_id: str
    fused: Hypothesis
    teachers: tuple[tuple[str, Hypothesis], ...]
    ties: int
    mean_winner_score: float | None
    params: VoteParams
    order: str


@dataclass(frozen=True)
class RunSummary:
    per_teacher_counts: tuple[tuple[str, int], ...]
    emitted: int
    skipped: int
    ties_total: int
    mean_winner_score: float | None

    def as_dict(self) -> dict:
        return {
            "per_teacher_counts": {name: count for name, count in self.per_teacher_counts},
            "emitted": self.emitted,
            "skipped": self.skipped,
            "ties_total": self.ties_total,
            "mean_winner_score": self.mean_winner_score,
        }


@dataclass(frozen=True)
class DistillRun:
    records: tuple[PseudoLabelRecord, ...]
    summary: RunSummary


def _fuse_one(
    utterance_id: str, feeds: list[_TeacherFeed], config: PipelineConfig
) -> PseudoLabelRecord:
    normalized = [
        normalize_hypothesis(feed.get(utterance_id), config.normalization)
        for feed in feeds
    ]
    fused, trace = combine(normalized, config.params, config.order)
    ties = sum(1 for decision in trace.decisions if decision.tie_broken)
    scores = [decision.winner_score for decision in trace.decisions]
    mean_score = sum(scores) / len(scores) if scores else None
    return PseudoLabelRecord(
        utterance_id=utterance_id,
        fused=fused,
        teachers=tuple((hyp.system_id, hyp) for hyp in normalized),
        ties=ties,
        mean_winner_score=mean_score,
        params=config.params,
        order=config.order,
    )


def run_distill(config: PipelineConfig, workers: int | None = None) -> DistillRun:
    """Fuse every utterance covered by all teachers into pseudo-labels.

    Output order and content are identical for every worker count; the
    per-utterance work is pure and results are emitted sorted.
    """
    workers = config.workers if workers is None else workers
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    feeds = [_TeacherFeed(source) for source in config.teachers]
    coverage = [feed.utterances for feed in feeds]
    common = sorted(set.intersection(*coverage))
    everything = set.union(*coverage)
    skipped = len(everything) - len(common)

    if workers == 1:
        records = [_fuse_one(utt, feeds, config) for utt in common]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda utt: _fuse_one(utt, feeds, config), common))

    ties_total = sum(record.ties for record in records)
    means = [
        record.mean_winner_score
        for record in records
        if record.mean_winner_score is not None
    ]
    mean_score = sum(means) / len(means) if means else None
    summary = RunSummary(
        per_teacher_counts=tuple(
            (feed.source.system_id, len(feed.utterances)) for feed in feeds
        ),
        emitted=len(records),
        skipped=skipped,
        ties_total=ties_total,
        mean_winner_score=mean_score,
    )
    return DistillRun(tuple(records), summary)


def _transcript_json(hyp: Hypothesis) -> dict:
    return {
        "words": [word.token for word in hyp.words],
        "conf": [word.confidence for word in hyp.words],
    }


def record_to_json(record: PseudoLabelRecord) -> str:
    payload = {
        "utt": record.utterance_id,
        "fused": _transcript_json(record.fused),
        "teachers": {name: _transcript_json(hyp) for name, hyp in record.teachers},
        "ties": record.ties,
        "mean_winner_score": record.mean_winner_score,
        "params": {
            "alpha": record.params.alpha,
            "null_conf": record.params.null_conf,
            "order": record.order,
        },
    }
    return json.dumps(payload, ensure_ascii=False)


def _transcript_from_json(utterance_id: str, system_id: str, blob: dict) -> Hypothesis:
    words = tuple(
        Word(token, confidence)
        for token, confidence in zip(blob["words"], blob["conf"], strict=True)
    )
    return Hypothesis(utterance_id, system_id, words)


def record_from_json(line: str, line_no: int | None = None) -> PseudoLabelRecord:
    try:
        blob = json.loads(line)
        utterance_id = blob["utt"]
        fused = _transcript_from_json(utterance_id, "rover", blob["fused"])
        teachers = tuple(
            (name, _transcript_from_json(utterance_id, name, transcript))
            for name, transcript in blob["teachers"].items()
        )
        params_blob = blob["params"]
        params = VoteParams(params_blob["alpha"], params_blob["null_conf"])
        return PseudoLabelRecord(
            utterance_id=utterance_id,
            fused=fused,
            teachers=teachers,
            ties=blob["ties"],
            mean_winner_score=blob["mean_winner_score"],
            params=params,
            order=params_blob["order"],
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad pseudo-label record: {exc}", line_no) from exc


def write_manifest(records, path) -> None:
    Path(path).write_text(
        "".join(record_to_json(record) + "\n" for record in records), encoding="utf-8"
    )


def read_manifest(path) -> list[PseudoLabelRecord]:
    records = []
    with open(path, encoding="utf-8") as stream:
        for line_no, line in enumerate(stream, start=1):
            if line.strip():
                records.append(record_from_json(line, line_no))
    return records


def replay_record(record: PseudoLabelRecord) -> Hypothesis:
    """Recombine the stored teacher transcripts under the stored params.

    The result must equal the stored fused transcript bit-exactly; the
    golden tests assert this for every manifest record.
    """
    hyps = [hyp for _, hyp in record.teachers]
    fused, _ = combine(hyps, record.params, record.order)
    return fused


@dataclass(frozen=True)
class ReportRow:
    """One model's WER with optional teacher and baseline comparisons."""

    model: str
    wer: float
    teacher_wer: float | None = None
    vs_teacher_pct: float | None = None
    baseline_wer: float | None = None
    vs_baseline_pct: float | None = None


def _reference_tokens(refs, policy: NormalizationPolicy | None) -> dict[str, list[str]]:
    table: dict[str, list[str]] = {}
    for hyp in refs:
        if hyp.utterance_id in table:
            raise DuplicateRecordError(f"duplicate reference utterance {hyp.utterance_id!r}")
        normalized = normalize_hypothesis(hyp, policy) if policy else hyp
        table[hyp.utterance_id] = list(normalized.tokens())
    if not table:
        raise DataError("reference file holds no utterances")
    return table


def run_report(
    refs,
    models,
    teacher_wers: dict[str, float] | None = None,
    baselines: dict[str, float] | None = None,
    policy: NormalizationPolicy | None = DEFAULT_POLICY,
) -> list[ReportRow]:
    """Score each model against the references and attach comparisons.

    ``models`` is an ordered list of (name, hypotheses).  Every
    reference utterance must be covered by every model.  Teacher and
    baseline WERs are externally measured numbers keyed by model name;
    names without a scored model are an error.
    """
    teacher_wers = dict(teacher_wers or {})
    baselines = dict(baselines or {})
    ref_tokens = _reference_tokens(refs, policy)
    model_names = [name for name, _ in models]
    for name in list(teacher_wers) + list(baselines):
        if name not in model_names:
            raise DataError(f"model {name!r} listed without hypotheses")
    rows = []
    for name, hyps in models:
        by_utt: dict[str, Hypothesis] = {}
        for hyp in hyps:
            if hyp.utterance_id in by_utt:
                raise DuplicateRecordError(
                    f"model {name!r}: duplicate utterance {hyp.utterance_id!r}"
                )
            by_utt[hyp.utterance_id] = normalize_hypothesis(hyp, policy) if policy else hyp
        missing = sorted(set(ref_tokens) - set(by_utt))
        if missing:
            raise DataError(f"model {name!r} missing utterances: {missing}")
        pairs = [
            (tokens, list(by_utt[utt].tokens())) for utt, tokens in ref_tokens.items()
        ]
        wer = corpus_wer(pairs).wer
        row = ReportRow(model=name, wer=wer)
        if name in teacher_wers:
            gap = gap_report(teacher_wers[name], wer)
            row = replace(
                row,
                teacher_wer=gap.teacher_wer,
                vs_teacher_pct=100.0 * gap.relative_increase,
            )
        if name in baselines:
            row = replace(
                row,
                baseline_wer=baselines[name],
                vs_baseline_pct=relative_change(baselines[name], wer),
            )
        rows.append(row)
    return rows


_COLUMNS = (
    ("model", lambda row: row.model),
    ("wer", lambda row: f"{row.wer:.4f}"),
    ("teacher_wer", lambda row: _fmt(row.teacher_wer, "{:.4f}")),
    ("vs_teacher", lambda row: _fmt(row.vs_teacher_pct, "{:+.2f}%")),
    ("baseline_wer", lambda row: _fmt(row.baseline_wer, "{:.4f}")),
    ("vs_baseline", lambda row: _fmt(row.vs_baseline_pct, "{:+.2f}%")),
)


def _fmt(value, spec: str) -> str:
    return "-" if value is None else spec.format(value)


def render_report(rows, fmt: str = "text") -> str:
    """Render report rows as aligned text or tab-separated values."""
    header = [name for name, _ in _COLUMNS]
    body = [[render(row) for _, render in _COLUMNS] for row in rows]
    if fmt == "tsv":
        return "\n".join("\t".join(cells) for cells in [header] + body) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    widths = [
        max(len(header[col]), *(len(cells[col]) for cells in body)) if body else len(header[col])
        for col in range(len(header))
    ]
    lines = []
    for cells in [header] + body:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip())
    return "\n".join(lines) + "\n"
