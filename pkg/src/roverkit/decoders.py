"""Grid-based decoders that turn posterior tables into hypotheses.

Three decoders are provided:

* ``ctc_greedy``: per-frame argmax followed by the CTC collapse rule
  (merge adjacent repeats, then drop blanks).
* ``ctc_prefix_beam``: prefix beam search that sums path probabilities
  per collapsed label sequence, keeping separate blank-ending and
  non-blank-ending mass for every prefix.  With a beam at least as
  wide as the number of reachable prefixes the top-1 result is the
  exact marginal argmax, which small-grid enumeration tests exploit.
* ``rnnt_greedy``: transducer-style greedy loop over a
  (frame, emission-count) grid of joint logits.  Blank advances the
  frame, a label advances the emission counter, and the emission
  counter is capped by forcing blank.

Grids are plain log-probability / logit tables loaded from text files;
there is no model inference here.  The ``JointGrid`` conditions on the
number of emitted labels only, not their identity, which keeps the
exact decoding control flow of a transducer without a trained
prediction network.

All argmax ties break toward the lowest index so decoding is
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .transcripts import Hypothesis, Word

BLANK_TOKEN = "<b>"

# Per-row normalization slack allowed in posterior grids.
_ROW_MASS_TOL = 1e-4


def _row_logsumexp(logp: np.ndarray) -> np.ndarray:
    peak = logp.max(axis=1)
    if not np.all(np.isfinite(peak)):
        return np.full(logp.shape[0], np.nan)
    return peak + np.log(np.exp(logp - peak[:, None]).sum(axis=1))


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    """Per-frame label log-probabilities with blank at index 0."""

    vocab: tuple[str, ...]
    logp: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vocab", tuple(self.vocab))
        logp = np.asarray(self.logp, dtype=float)
        object.__setattr__(self, "logp", logp)
        if len(self.vocab) < 2:
            raise ValueError("vocabulary must hold blank plus at least one label")
        if self.vocab[0] != BLANK_TOKEN:
            raise ValueError(f"vocab[0] must be {BLANK_TOKEN!r}, got {self.vocab[0]!r}")
        for token in self.vocab:
            if not token or token.split() != [token]:
                raise ValueError(f"grid token {token!r} is empty or contains whitespace")
        if logp.ndim != 2 or logp.shape[0] < 1 or logp.shape[1] != len(self.vocab):
            raise ValueError(f"logp must be T x {len(self.vocab)}, got shape {logp.shape}")
        mass = _row_logsumexp(logp)
        deviation = np.where(np.isnan(mass), np.inf, np.abs(mass))
        if not np.all(deviation <= _ROW_MASS_TOL):
            worst = int(np.argmax(deviation))
            raise ValueError(
                f"row {worst} is not normalized: log mass {mass[worst]:.6g}"
            )

    @property
    def T(self) -> int:
        return self.logp.shape[0]

    @property
    def V(self) -> int:
        return len(self.vocab)


@dataclass(frozen=True, eq=False)
class JointGrid:
    """(frame, emission-count) table of joint logits; blank is last.

    ``logits`` has shape T x (U_max + 1) x (V + 1) where V excludes
    blank.  Values are unnormalized; decoding applies a softmax per
    cell for confidences.
    """

    vocab: tuple[str, ...]
    logits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vocab", tuple(self.vocab))
        logits = np.asarray(self.logits, dtype=float)
        object.__setattr__(self, "logits", logits)
        for token in self.vocab:
            if not token or token.split() != [token]:
                raise ValueError(f"grid token {token!r} is empty or contains whitespace")
        if logits.ndim != 3 or logits.shape[0] < 1 or logits.shape[1] < 1:
            raise ValueError(f"logits must be T x (U_max+1) x (V+1), got {logits.shape}")
        if logits.shape[2] != len(self.vocab) + 1:
            raise ValueError(
                f"last axis must be {len(self.vocab) + 1} (labels plus blank), "
                f"got {logits.shape[2]}"
            )
        if not np.all(np.isfinite(logits)):
            raise ValueError("joint logits must be finite")

    @property
    def T(self) -> int:
        return self.logits.shape[0]

    @property
    def U_max(self) -> int:
        return self.logits.shape[1] - 1

    @property
    def V(self) -> int:
        return len(self.vocab)


@dataclass(frozen=True)
class BeamResult:
    """N-best collapsed label sequences with log marginal probabilities."""

    nbest: tuple[tuple[tuple[str, ...], float], ...]

    def __post_init__(self):
        object.__setattr__(self, "nbest", tuple(self.nbest))
        previous = 0.0
        for tokens, logprob in self.nbest:
            if logprob > 0.0:
                raise ValueError(f"log probability {logprob} for {tokens} exceeds 0")
            if logprob > previous:
                raise ValueError("n-best list must be non-increasing in probability")
            previous = logprob

    def top(self) -> tuple[str, ...]:
        return self.nbest[0][0]


def ctc_collapse(path, vocab, blank: int = 0) -> list[str]:
    """Collapse a frame label path: merge adjacent repeats, drop blanks."""
    tokens = []
    previous = None
    for index in path:
        if not 0 <= index < len(vocab):
            raise ValueError(f"label index {index} outside vocabulary of {len(vocab)}")
        if index != previous and index != blank:
            tokens.append(vocab[index])
        previous = index
    return tokens


def ctc_greedy(grid: PosteriorGrid, utterance_id: str = "utt", system_id: str = "ctc") -> Hypothesis:
    """Best-path decoding: per-frame argmax, collapsed.

    Each output token's confidence is the geometric mean of its run's
    frame probabilities, i.e. ``exp(mean log p)`` over the frames that
    emitted the run.
    """
    path = np.argmax(grid.logp, axis=1)
    words = []
    run_logps: list[float] = []
    previous = -1
    for t, label in enumerate(path):
        if label != previous and previous > 0:
            words.append(_run_word(grid, previous, run_logps))
        if label != previous:
            run_logps = []
        if label > 0:
            run_logps.append(float(grid.logp[t, label]))
        previous = int(label)
    if previous > 0:
        words.append(_run_word(grid, previous, run_logps))
    return Hypothesis(utterance_id, system_id, tuple(words))


def _run_word(grid: PosteriorGrid, label: int, run_logps: list[float]) -> Word:
    confidence = math.exp(sum(run_logps) / len(run_logps))
    return Word(grid.vocab[label], min(1.0, confidence))


def ctc_prefix_beam(grid: PosteriorGrid, beam: int) -> BeamResult:
    """Prefix beam search over collapsed label sequences.

    Keeps (blank-ending, non-blank-ending) log mass per prefix and
    prunes to the ``beam`` most probable prefixes per frame.  Prefix
    rank ties break lexicographically for determinism.
    """
    if beam < 1:
        raise ValueError(f"beam must be >= 1, got {beam}")
    neg_inf = float("-inf")
    # prefix -> [log P(prefix, ends in blank), log P(prefix, ends in label)]
    beams: dict[tuple[str, ...], list[float]] = {(): [0.0, neg_inf]}
    for t in range(grid.T):
        row = grid.logp[t]
        step: dict[tuple[str, ...], list[float]] = {}
        for prefix, (p_blank, p_label) in beams.items():
            total = float(np.logaddexp(p_blank, p_label))
            _accumulate(step, prefix, 0, total + float(row[0]))
            last = prefix[-1] if prefix else None
            for index in range(1, grid.V):
                logp = float(row[index])
                if logp == neg_inf:
                    continue
                token = grid.vocab[index]
                if token == last:
                    # Same label again: without a blank it merges into
                    # the existing prefix; after a blank it extends.
                    if p_label > neg_inf:
                        _accumulate(step, prefix, 1, p_label + logp)
                    if p_blank > neg_inf:
                        _accumulate(step, prefix + (token,), 1, p_blank + logp)
                elif total > neg_inf:
                    _accumulate(step, prefix + (token,), 1, total + logp)
        ranked = sorted(step.items(), key=_beam_rank)
        beams = dict(ranked[:beam])
    final = sorted(beams.items(), key=_beam_rank)
    nbest = tuple(
        (prefix, min(0.0, float(np.logaddexp(p_blank, p_label))))
        for prefix, (p_blank, p_label) in final
    )
    return BeamResult(nbest)


def _accumulate(step, prefix, slot, logp):
    entry = step.get(prefix)
    if entry is None:
        entry = [float("-inf"), float("-inf")]
        step[prefix] = entry
    entry[slot] = float(np.logaddexp(entry[slot], logp))


def _beam_rank(item):
    prefix, (p_blank, p_label) = item
    return (-np.logaddexp(p_blank, p_label), prefix)


def beam_hypothesis(
    result: BeamResult, utterance_id: str = "utt", system_id: str = "ctc"
) -> Hypothesis:
    """Wrap a beam top-1 as a hypothesis.

    Per-word confidence is the length-normalized sequence probability
    ``exp(logp / n)``; sequence-level confidence definitions are not
    standardized, so this keeps values comparable across lengths.
    """
    tokens, logprob = result.nbest[0]
    confidence = math.exp(logprob / len(tokens)) if tokens else 1.0
    words = tuple(Word(token, min(1.0, confidence)) for token in tokens)
    return Hypothesis(utterance_id, system_id, words)


def rnnt_greedy(
    grid: JointGrid, utterance_id: str = "utt", system_id: str = "rnnt"
) -> Hypothesis:
    """Greedy transducer decoding over the joint grid.

    Starting at frame 0 with 0 emissions, repeatedly take the argmax
    of ``logits[t][u]``: blank advances ``t``, a label is emitted and
    advances ``u``.  Once ``u`` reaches ``U_max`` blank is forced, so
    the loop always performs exactly T blank transitions.  Confidence
    is the label's softmax probability at its step.
    """
    t, u = 0, 0
    words = []
    blank = grid.V
    while t < grid.T:
        if u == grid.U_max:
            t += 1
            continue
        cell = grid.logits[t, u]
        best = int(np.argmax(cell))
        if best == blank:
            t += 1
            continue
        shifted = np.exp(cell - cell.max())
        confidence = float(shifted[best] / shifted.sum())
        words.append(Word(grid.vocab[best], min(1.0, confidence)))
        u += 1
    return Hypothesis(utterance_id, system_id, tuple(words))


def _grid_lines(path: Path) -> list[str]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read grid {path}: {exc}") from exc
    return text.splitlines()


def _parse_floats(line: str, expected: int, line_no: int, path: Path) -> list[float]:
    parts = line.split()
    if len(parts) != expected:
        raise FormatError(
            f"{path}: expected {expected} values, got {len(parts)}", line_no
        )
    try:
        return [float(part) for part in parts]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}", line_no) from exc


def load_posterior_grid(path) -> PosteriorGrid:
    """Read a CTC grid file: header, vocabulary line, T rows of log-probs."""
    path = Path(path)
    lines = _grid_lines(path)
    if not lines:
        raise FormatError(f"{path}: empty grid file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "CTC":
        raise FormatError(f"{path}: expected header 'CTC <T> <V>', got {lines[0]!r}", 1)
    try:
        n_frames, n_labels = int(header[1]), int(header[2])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}", 1) from exc
    if len(lines) < 2 + n_frames:
        raise FormatError(f"{path}: expected {2 + n_frames} lines, got {len(lines)}")
    vocab = tuple(lines[1].split())
    if len(vocab) != n_labels:
        raise FormatError(f"{path}: header says V={n_labels}, vocab line has {len(vocab)}", 2)
    rows = [
        _parse_floats(lines[2 + t], n_labels, 3 + t, path) for t in range(n_frames)
    ]
    try:
        return PosteriorGrid(vocab, np.array(rows))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_posterior_grid(grid: PosteriorGrid, path) -> None:
    path = Path(path)
    lines = [f"CTC {grid.T} {grid.V}", " ".join(grid.vocab)]
    for row in grid.logp:
        lines.append(" ".join(f"{value!r}" for value in row.tolist()))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_joint_grid(path) -> JointGrid:
    """Read a transducer grid file: header, labels, T*(U_max+1) logit rows."""
    path = Path(path)
    lines = _grid_lines(path)
    if not lines:
        raise FormatError(f"{path}: empty grid file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "RNNT":
        raise FormatError(
            f"{path}: expected header 'RNNT <T> <U_max> <V>', got {lines[0]!r}", 1
        )
    try:
        n_frames, u_max, n_labels = int(header[1]), int(header[2]), int(header[3])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}", 1) from exc
    vocab = tuple(lines[1].split())
    if len(vocab) != n_labels:
        raise FormatError(f"{path}: header says V={n_labels}, vocab line has {len(vocab)}", 2)
    expected = 2 + n_frames * (u_max + 1)
    if len(lines) < expected:
        raise FormatError(f"{path}: expected {expected} lines, got {len(lines)}")
    values = [
        _parse_floats(lines[2 + k], n_labels + 1, 3 + k, path)
        for k in range(n_frames * (u_max + 1))
    ]
    logits = np.array(values).reshape(n_frames, u_max + 1, n_labels + 1)
    try:
        return JointGrid(vocab, logits)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_joint_grid(grid: JointGrid, path) -> None:
    path = Path(path)
    lines = [f"RNNT {grid.T} {grid.U_max} {grid.V}", " ".join(grid.vocab)]
    for t in range(grid.T):
        for u in range(grid.U_max + 1):
            lines.append(" ".join(f"{value!r}" for value in grid.logits[t, u].tolist()))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
