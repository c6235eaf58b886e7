"""Regenerate the mini distillation corpus under tests/data/mini.

The corpus is ten utterances covered by three teachers: two hypothesis
files and one directory of CTC posterior grids.  u00 to u02 are fixed
by hand so their fused outputs can be audited step by step; the rest are
seeded corruptions of a small reference vocabulary.  The script writes
the teacher inputs, the pipeline config, and the golden manifest, then
re-checks that every grid decodes to its intended transcript, that
every manifest record replays bit-exactly, and that worker counts do
not change the output bytes.

Run from the repository root:

    python3 tools/make_mini_corpus.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from roverkit.cli import main as cli_main
from roverkit.decoders import (
    BLANK_TOKEN,
    PosteriorGrid,
    beam_hypothesis,
    ctc_prefix_beam,
    save_posterior_grid,
)
from roverkit.pipeline import read_manifest, replay_record
from roverkit.transcripts import Hypothesis, Word, save_hypotheses

MINI = Path(__file__).resolve().parent.parent / "tests" / "data" / "mini"
SEED = 20240817

VOCAB = (
    "the quick brown fox jumps over lazy dog speech systems make errors "
    "often voting fixes most single model outputs while ensembles agree"
).split()
CONFUSION = "zebra quartz violet nimbus copper anchor meadow turbine".split()

REFS = {
    "u00": "the quick brown fox",
    "u01": "jumps over the lazy dog",
    "u02": "speech systems make errors",
}

# Hand-fixed teacher views of u00 to u02; None means "use the reference".
FIXED = {
    "scribe_a": {"u00": "The quick brown fox.", "u01": None, "u02": "speech systems errors"},
    "scribe_b": {"u00": None, "u01": "jumps over the lazy hog", "u02": None},
    "acoustic": {"u00": None, "u01": None, "u02": "speech systems make errors often"},
}

RATES = {"scribe_a": (0.10, 0.05, 0.0), "scribe_b": (0.20, 0.0, 0.0), "acoustic": (0.10, 0.0, 0.05)}

CONFIG = """\
{
  "teachers": [
    {"system_id": "scribe_a", "hypotheses": "teacher_a.jsonl"},
    {"system_id": "scribe_b", "hypotheses": "teacher_b.jsonl"},
    {"system_id": "acoustic", "grids": "grids", "decoder": "ctc-beam", "beam": 8}
  ],
  "combine": {"alpha": 0.9, "null_conf": 0.25},
  "output": "golden_manifest.jsonl"
}
"""


def draw_refs(rng) -> dict[str, list[str]]:
    refs = {utt: text.split() for utt, text in REFS.items()}
    for index in range(3, 10):
        n = int(rng.integers(4, 8))
        refs[f"u{index:02d}"] = [VOCAB[int(rng.integers(0, len(VOCAB)))] for _ in range(n)]
    return refs


def corrupt_tokens(tokens: list[str], rates, rng) -> list[str]:
    sub_rate, del_rate, ins_rate = rates
    out = []
    for token in tokens:
        draw = rng.random()
        if draw < sub_rate:
            out.append(CONFUSION[int(rng.integers(0, len(CONFUSION)))])
        elif draw < sub_rate + del_rate:
            continue
        else:
            out.append(token)
            if rng.random() < ins_rate:
                out.append(CONFUSION[int(rng.integers(0, len(CONFUSION)))])
    return out or [tokens[0]]


def teacher_tokens(system: str, refs: dict[str, list[str]], rng) -> dict[str, list[str]]:
    views = {}
    for utt, ref in refs.items():
        fixed = FIXED[system].get(utt, "absent")
        if fixed != "absent":
            views[utt] = (fixed or " ".join(ref)).split()
        else:
            views[utt] = corrupt_tokens(ref, RATES[system], rng)
    return views


def with_confidences(views: dict[str, list[str]], refs, system: str, rng) -> list[Hypothesis]:
    hyps = []
    for utt in sorted(views):
        ref = set(refs[utt])
        words = tuple(
            Word(
                token,
                round(float(rng.uniform(0.8, 1.0) if token.lower().strip(".") in ref else rng.uniform(0.4, 0.7)), 4),
            )
            for token in views[utt]
        )
        hyps.append(Hypothesis(utt, system, words))
    return hyps


def grid_for(tokens: list[str], rng) -> PosteriorGrid:
    """Two frames per token (label then blank), label mass around 0.86."""
    vocab = (BLANK_TOKEN,) + tuple(dict.fromkeys(tokens))
    rows = []
    for token in tokens:
        label = np.full(len(vocab), 0.06 / (len(vocab) - 1))
        label[0] = 0.08
        label[vocab.index(token)] = 0.86
        rows.append(label)
        blank = np.full(len(vocab), 0.10 / (len(vocab) - 1))
        blank[0] = 0.90
        rows.append(blank)
    probs = np.array(rows) * rng.uniform(0.95, 1.05, size=(len(rows), len(vocab)))
    probs /= probs.sum(axis=1, keepdims=True)
    return PosteriorGrid(vocab, np.log(probs))


def build() -> None:
    rng = np.random.default_rng(SEED)
    MINI.mkdir(parents=True, exist_ok=True)
    grids_dir = MINI / "grids"
    grids_dir.mkdir(exist_ok=True)

    refs = draw_refs(rng)
    save_hypotheses(
        MINI / "refs.jsonl",
        [Hypothesis(utt, "ref", tuple(Word(t) for t in refs[utt])) for utt in sorted(refs)],
    )

    views_a = teacher_tokens("scribe_a", refs, rng)
    views_b = teacher_tokens("scribe_b", refs, rng)
    views_g = teacher_tokens("acoustic", refs, rng)
    save_hypotheses(MINI / "teacher_a.jsonl", with_confidences(views_a, refs, "scribe_a", rng))
    save_hypotheses(MINI / "teacher_b.jsonl", with_confidences(views_b, refs, "scribe_b", rng))

    for utt in sorted(views_g):
        grid = grid_for(views_g[utt], rng)
        decoded = beam_hypothesis(ctc_prefix_beam(grid, 8)).tokens()
        if decoded != views_g[utt]:
            raise SystemExit(f"{utt}: grid decodes to {decoded}, wanted {views_g[utt]}")
        save_posterior_grid(grid, grids_dir / f"{utt}.pgrid")

    (MINI / "distill_config.json").write_text(CONFIG, encoding="utf-8")

    config = str(MINI / "distill_config.json")
    if cli_main(["distill", "--config", config]) != 0:
        raise SystemExit("distill failed")

    golden = MINI / "golden_manifest.jsonl"
    for record in read_manifest(golden):
        if replay_record(record) != record.fused:
            raise SystemExit(f"{record.utterance_id}: replay mismatch")
    reference = golden.read_bytes()
    for workers in (1, 4):
        target = MINI / "check.tmp"
        if cli_main(["distill", "--config", config, "--workers", str(workers), "--out", str(target)]) != 0:
            raise SystemExit("distill recheck failed")
        if target.read_bytes() != reference:
            raise SystemExit(f"workers={workers} changed the manifest bytes")
        target.unlink()
    print(f"wrote {len(refs)} utterances under {MINI}")


if __name__ == "__main__":
    build()
