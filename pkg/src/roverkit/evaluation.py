"""Word error rate scoring and teacher-student gap reporting.

WER here is always corpus-level pooled: substitution, insertion, and
deletion counts are summed over all utterances and divided by the
total reference word count.  Averaging per-utterance WERs would weight
short utterances up and is deliberately not offered.
"""

from __future__ import annotations

from dataclasses import dataclass

Token = str
AlignedPair = tuple[Token | None, Token | None]

# Backtrace step kinds, preferred in this order on cost ties.
_DIAGONAL = 0
_VERTICAL = 1   # consumes a reference word: deletion
_HORIZONTAL = 2  # consumes a hypothesis word: insertion


@dataclass(frozen=True)
class EditCounts:
    """Word-level edit operations of one alignment."""

    substitutions: int
    insertions: int
    deletions: int

    @property
    def total(self) -> int:
        return self.substitutions + self.insertions + self.deletions


@dataclass(frozen=True)
class WerReport:
    substitutions: int
    insertions: int
    deletions: int
    ref_words: int
    wer: float

    def __post_init__(self):
        for name in ("substitutions", "insertions", "deletions", "ref_words"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.wer < 0:
            raise ValueError("wer must be non-negative")

    def as_dict(self) -> dict:
        return {
            "substitutions": self.substitutions,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "ref_words": self.ref_words,
            "wer": self.wer,
        }


@dataclass(frozen=True)
class GapReport:
    """Teacher vs student WER with the relative increase as a fraction."""

    teacher_wer: float
    student_wer: float
    relative_increase: float


def edit_alignment(ref, hyp) -> tuple[EditCounts, list[AlignedPair]]:
    """Align two token lists with minimal substitutions + edits.

    Returns the edit counts and the aligned pairs, where a deleted
    reference word pairs with ``None`` and an inserted hypothesis word
    has ``None`` on the reference side.  The backtrace resolves cost
    ties diagonal > vertical > horizontal, so output is deterministic.
    """
    ref = list(ref)
    hyp = list(hyp)
    m, n = len(ref), len(hyp)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        table[i][0] = i
    for j in range(1, n + 1):
        table[0][j] = j
    for i in range(1, m + 1):
        row, above = table[i], table[i - 1]
        for j in range(1, n + 1):
            sub = 0 if ref[i - 1] == hyp[j - 1] else 1
            row[j] = min(above[j - 1] + sub, above[j] + 1, row[j - 1] + 1)

    steps = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = 0 if ref[i - 1] == hyp[j - 1] else 1
            if table[i][j] == table[i - 1][j - 1] + sub:
                steps.append(_DIAGONAL)
                i, j = i - 1, j - 1
                continue
        if i > 0 and table[i][j] == table[i - 1][j] + 1:
            steps.append(_VERTICAL)
            i -= 1
            continue
        steps.append(_HORIZONTAL)
        j -= 1
    steps.reverse()

    pairs: list[AlignedPair] = []
    substitutions = insertions = deletions = 0
    i = j = 0
    for step in steps:
        if step == _DIAGONAL:
            pairs.append((ref[i], hyp[j]))
            if ref[i] != hyp[j]:
                substitutions += 1
            i, j = i + 1, j + 1
        elif step == _VERTICAL:
            pairs.append((ref[i], None))
            deletions += 1
            i += 1
        else:
            pairs.append((None, hyp[j]))
            insertions += 1
            j += 1
    return EditCounts(substitutions, insertions, deletions), pairs


def corpus_wer(pairs) -> WerReport:
    """Pool edit counts over (ref, hyp) token-list pairs.

    Utterances with empty references still contribute their insertions
    to the numerator; only the total reference word count must be
    positive.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cannot score an empty corpus")
    substitutions = insertions = deletions = ref_words = 0
    for ref, hyp in pairs:
        counts, _ = edit_alignment(ref, hyp)
        substitutions += counts.substitutions
        insertions += counts.insertions
        deletions += counts.deletions
        ref_words += len(list(ref))
    if ref_words == 0:
        raise ValueError("corpus has zero reference words")
    wer = (substitutions + insertions + deletions) / ref_words
    return WerReport(substitutions, insertions, deletions, ref_words, wer)


def relative_change(before: float, after: float) -> float:
    """Percent change from ``before`` to ``after``; negative improves."""
    if before <= 0:
        raise ValueError(f"baseline must be positive, got {before}")
    return 100.0 * (after - before) / before


def gap_report(teacher_wer: float, student_wer: float) -> GapReport:
    """Relative WER increase of a student over its teacher."""
    if teacher_wer <= 0:
        raise ValueError(f"teacher WER must be positive, got {teacher_wer}")
    increase = (student_wer - teacher_wer) / teacher_wer
    return GapReport(teacher_wer, student_wer, increase)


def duration_buckets(records, threshold: float = 40.0) -> dict[str, WerReport]:
    """Pool WER separately for short (< threshold) and long utterances.

    ``records`` holds (duration, ref, hyp) triples.  Empty buckets are
    omitted from the result.
    """
    short = []
    long_ = []
    for duration, ref, hyp in records:
        if duration < 0:
            raise ValueError(f"negative duration {duration}")
        (short if duration < threshold else long_).append((ref, hyp))
    reports: dict[str, WerReport] = {}
    if short:
        reports["short"] = corpus_wer(short)
    if long_:
        reports["long"] = corpus_wer(long_)
    return reports
