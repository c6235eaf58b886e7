"""Word transition networks: build one from a transcript, align more into it.

A word transition network (WTN) is an ordered list of correspondence
sets.  Each set holds one word arc per registered system; an arc's word
may be NULL (``None``), meaning "this system emitted nothing here".
Arcs sharing the same word within a set are merged, accumulating the
contributing systems and their confidences.

Alignment of a new transcript into an existing WTN is a dynamic program
over (set index, word index) with unit costs:

    match        0   the word equals some arc word already in the set
    substitution 1   the word joins the set as a new arc
    deletion     1   the new system contributes NULL to an existing set
    insertion    1   a fresh set is created for the word; every
                     previously registered system gets a NULL arc there

The backtrace is deterministic: on cost ties it prefers the diagonal
step (match/substitution), then the vertical step (NULL into an
existing set), then the horizontal step (new set).  With a WTN built
from a single transcript this reduces to classic word-level Levenshtein
alignment, which the tests use as an independent oracle.

Word times are not carried into the network: voting is over words, and
time semantics across systems are undefined.
"""

from __future__ import annotations

from dataclasses import dataclass

from .transcripts import Hypothesis

# Backtrace step kinds.
_DIAGONAL = 0
_VERTICAL = 1
_HORIZONTAL = 2


@dataclass(frozen=True)
class WordArc:
    """One word (or NULL) in a correspondence set with its supporters.

    ``conf_sum`` accumulates the contributing systems' word confidences;
    NULL arcs carry no confidence of their own (a NULL confidence is
    assigned at vote time).
    """

    word: str | None
    conf_sum: float
    systems: frozenset[str]

    def __post_init__(self):
        if not self.systems:
            raise ValueError("an arc must carry at least one system")
        if self.word is None:
            if self.conf_sum != 0.0:
                raise ValueError("NULL arcs carry conf_sum 0")
        elif not 0.0 <= self.conf_sum <= len(self.systems):
            raise ValueError(
                f"conf_sum {self.conf_sum} outside [0, {len(self.systems)}] for {self.word!r}"
            )


@dataclass(frozen=True)
class CorrespondenceSet:
    """One aligned position: word arcs covering every registered system."""

    arcs: tuple[WordArc, ...]

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        words = [arc.word for arc in self.arcs]
        if len(words) != len(set(words)):
            raise ValueError("arcs within a set must have distinct words")

    def words(self) -> set[str]:
        return {arc.word for arc in self.arcs if arc.word is not None}

    def find(self, word: str | None) -> WordArc | None:
        for arc in self.arcs:
            if arc.word == word:
                return arc
        return None


@dataclass(frozen=True)
class WordTransitionNetwork:
    """Ordered correspondence sets over an ordered list of systems."""

    sets: tuple[CorrespondenceSet, ...]
    systems: tuple[str, ...]
    utterance_id: str = "utt"

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        object.__setattr__(self, "systems", tuple(self.systems))
        if len(set(self.systems)) != len(self.systems):
            raise ValueError("systems list must not contain duplicates")
        registered = set(self.systems)
        for index, cset in enumerate(self.sets):
            covered: list[str] = []
            for arc in cset.arcs:
                covered.extend(arc.systems)
            if len(covered) != len(registered) or set(covered) != registered:
                raise ValueError(
                    f"set {index} covers {sorted(covered)}, expected {sorted(registered)}"
                )


def wtn_from_hypothesis(hyp: Hypothesis) -> WordTransitionNetwork:
    """Start a network from one transcript: one single-arc set per word."""
    system = frozenset({hyp.system_id})
    sets = tuple(
        CorrespondenceSet((WordArc(word.token, word.confidence, system),))
        for word in hyp.words
    )
    return WordTransitionNetwork(sets, (hyp.system_id,), hyp.utterance_id)


def _dp_table(wtn: WordTransitionNetwork, hyp: Hypothesis) -> list[list[int]]:
    """Fill the alignment cost table D[i][j] over (set index, word index)."""
    set_words = [cset.words() for cset in wtn.sets]
    tokens = [word.token for word in hyp.words]
    m, n = len(set_words), len(tokens)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        table[i][0] = i
    for j in range(1, n + 1):
        table[0][j] = j
    for i in range(1, m + 1):
        row, above = table[i], table[i - 1]
        words = set_words[i - 1]
        for j in range(1, n + 1):
            sub = 0 if tokens[j - 1] in words else 1
            row[j] = min(above[j - 1] + sub, above[j] + 1, row[j - 1] + 1)
    return table


def _backtrace(table: list[list[int]], wtn, hyp) -> list[int]:
    """Recover the edit path, resolving ties diagonal > vertical > horizontal."""
    set_words = [cset.words() for cset in wtn.sets]
    tokens = [word.token for word in hyp.words]
    steps: list[int] = []
    i, j = len(set_words), len(tokens)
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = 0 if tokens[j - 1] in set_words[i - 1] else 1
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
    return steps


def _with_system_on_word(cset: CorrespondenceSet, word, system: str) -> CorrespondenceSet:
    """Merge one system's word (or NULL contribution) into an existing set."""
    token = word.token if word is not None else None
    confidence = word.confidence if word is not None else 0.0
    arcs = []
    merged = False
    for arc in cset.arcs:
        if arc.word == token:
            arcs.append(
                WordArc(arc.word, arc.conf_sum + confidence, arc.systems | {system})
            )
            merged = True
        else:
            arcs.append(arc)
    if not merged:
        arcs.append(WordArc(token, confidence, frozenset({system})))
    return CorrespondenceSet(tuple(arcs))


def align_hypothesis(wtn: WordTransitionNetwork, hyp: Hypothesis) -> WordTransitionNetwork:
    """Align one more transcript into the network, returning a new network.

    The input network is not modified.  Raises ValueError if the
    hypothesis' system is already registered.
    """
    if hyp.system_id in wtn.systems:
        raise ValueError(f"system {hyp.system_id!r} is already registered in the network")
    table = _dp_table(wtn, hyp)
    steps = _backtrace(table, wtn, hyp)

    previous = frozenset(wtn.systems)
    new_sets: list[CorrespondenceSet] = []
    i = j = 0
    for step in steps:
        if step == _DIAGONAL:
            new_sets.append(_with_system_on_word(wtn.sets[i], hyp.words[j], hyp.system_id))
            i, j = i + 1, j + 1
        elif step == _VERTICAL:
            new_sets.append(_with_system_on_word(wtn.sets[i], None, hyp.system_id))
            i += 1
        else:
            word = hyp.words[j]
            new_sets.append(
                CorrespondenceSet(
                    (
                        WordArc(word.token, word.confidence, frozenset({hyp.system_id})),
                        WordArc(None, 0.0, previous),
                    )
                )
            )
            j += 1
    return WordTransitionNetwork(
        tuple(new_sets), wtn.systems + (hyp.system_id,), wtn.utterance_id
    )


def alignment_cost(wtn: WordTransitionNetwork, hyp: Hypothesis) -> int:
    """Minimum edit cost of aligning the hypothesis into the network.

    For a network built from a single transcript this equals the
    word-level Levenshtein distance between the two token sequences.
    """
    if hyp.system_id in wtn.systems:
        raise ValueError(f"system {hyp.system_id!r} is already registered in the network")
    return _dp_table(wtn, hyp)[len(wtn.sets)][len(hyp.words)]


def wtn_dump(wtn: WordTransitionNetwork) -> str:
    """Debug rendering: one line per set, NULL shown as ``@``.

    Each arc prints as ``word(count,conf_sum)`` in arc order; conf_sum
    uses ``%g`` so golden files stay readable.
    """
    lines = []
    for cset in wtn.sets:
        lines.append(
            " ".join(
                f"{'@' if arc.word is None else arc.word}({len(arc.systems)},{arc.conf_sum:g})"
                for arc in cset.arcs
            )
        )
    return "\n".join(lines)
