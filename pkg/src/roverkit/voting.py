"""Majority voting over a word transition network.

Every correspondence set is scored arc by arc and the best arc wins;
winning NULL arcs emit nothing.  With ``Ns`` registered systems, an
arc supported by ``N`` of them scores

    score = alpha * N / Ns + (1 - alpha) * mean_confidence

where ``mean_confidence`` averages the supporters' word confidences
(``conf_sum / N``), with NULL arcs assigned ``null_conf``.  ``alpha=1``
is pure frequency voting and ignores confidences entirely.

Score ties are broken deterministically, in order: more supporting
systems, larger confidence sum (NULL arcs store 0), real word over
NULL, lexicographically smaller word.  The last stage makes the vote
independent of arc insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .transcripts import Hypothesis, Word
from .wtn import (
    CorrespondenceSet,
    WordArc,
    WordTransitionNetwork,
    align_hypothesis,
    wtn_from_hypothesis,
)

ROVER_SYSTEM_ID = "rover"

ORDER_POLICIES = ("input", "length-desc")


@dataclass(frozen=True)
class VoteParams:
    """Voting knobs: frequency weight and the stand-in NULL confidence."""

    alpha: float = 1.0
    null_conf: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.null_conf <= 1.0:
            raise ValueError(f"null_conf must be in [0, 1], got {self.null_conf}")


DEFAULT_PARAMS = VoteParams()


@dataclass(frozen=True)
class SetDecision:
    """Outcome of one correspondence set's vote.

    ``winner`` is ``None`` when the NULL arc won.  ``runner_up_score``
    is ``None`` only for single-arc sets (then ``runner_up`` is too);
    a present score with ``runner_up=None`` means NULL placed second.
    ``tie_broken`` marks winners decided by the tie-break chain rather
    than by score.
    """

    winner: str | None
    winner_score: float
    runner_up: str | None
    runner_up_score: float | None
    tie_broken: bool


@dataclass(frozen=True)
class VoteTrace:
    """Per-set decisions for one utterance, in set order."""

    utterance_id: str
    decisions: tuple[SetDecision, ...]


def score_arc(arc: WordArc, n_systems: int, params: VoteParams) -> float:
    """Score one arc; see the module docstring for the formula."""
    frequency = len(arc.systems) / n_systems
    if arc.word is None:
        mean_conf = params.null_conf
    else:
        mean_conf = arc.conf_sum / len(arc.systems)
    return params.alpha * frequency + (1.0 - params.alpha) * mean_conf


def vote_set(cset: CorrespondenceSet, n_systems: int, params: VoteParams) -> SetDecision:
    """Rank one set's arcs and record winner, runner-up, and tie flag."""

    def rank(arc: WordArc):
        # Ascending sort; stage order: score, supporter count, stored
        # confidence sum, word-over-NULL, then smallest word.  NULL's
        # word slot is never reached because only one NULL arc exists.
        return (
            -score_arc(arc, n_systems, params),
            -len(arc.systems),
            -arc.conf_sum,
            arc.word is None,
            arc.word or "",
        )

    ranked = sorted(cset.arcs, key=rank)
    winner = ranked[0]
    winner_score = score_arc(winner, n_systems, params)
    if len(ranked) > 1:
        runner_up = ranked[1]
        runner_up_score = score_arc(runner_up, n_systems, params)
        tie_broken = runner_up_score == winner_score
        return SetDecision(
            winner.word, winner_score, runner_up.word, runner_up_score, tie_broken
        )
    return SetDecision(winner.word, winner_score, None, None, False)


def vote(
    wtn: WordTransitionNetwork, params: VoteParams = DEFAULT_PARAMS
) -> tuple[Hypothesis, VoteTrace]:
    """Reduce a network to a single fused transcript plus its trace.

    The fused transcript carries system id ``"rover"`` and per-word
    confidence equal to the winning score (clamped into [0, 1] against
    float drift).  Winning NULL arcs emit nothing; an all-NULL vote
    yields an empty transcript.
    """
    if not wtn.systems:
        raise ValueError("cannot vote on a network with no registered systems")
    n_systems = len(wtn.systems)
    words = []
    decisions = []
    for cset in wtn.sets:
        decision = vote_set(cset, n_systems, params)
        decisions.append(decision)
        if decision.winner is not None:
            confidence = min(1.0, max(0.0, decision.winner_score))
            words.append(Word(decision.winner, confidence))
    fused = Hypothesis(wtn.utterance_id, ROVER_SYSTEM_ID, tuple(words))
    return fused, VoteTrace(wtn.utterance_id, tuple(decisions))


def order_hypotheses(hypotheses, order: str = "input") -> list[Hypothesis]:
    """Apply an alignment-order policy.

    ``"input"`` keeps list order; ``"length-desc"`` puts longer
    transcripts first, breaking length ties by system id.
    """
    hypotheses = list(hypotheses)
    if order == "input":
        return hypotheses
    if order == "length-desc":
        return sorted(hypotheses, key=lambda hyp: (-len(hyp.words), hyp.system_id))
    raise ValueError(f"unknown order policy {order!r}; expected one of {ORDER_POLICIES}")


def build_network(hypotheses, order: str = "input") -> WordTransitionNetwork:
    """Iteratively align one utterance's transcripts into a network.

    All transcripts must share an utterance id and come from distinct
    systems.
    """
    hypotheses = order_hypotheses(hypotheses, order)
    if not hypotheses:
        raise ValueError("cannot build a network from zero hypotheses")
    utterance_ids = {hyp.utterance_id for hyp in hypotheses}
    if len(utterance_ids) != 1:
        raise ValueError(f"hypotheses span multiple utterances: {sorted(utterance_ids)}")
    systems = [hyp.system_id for hyp in hypotheses]
    if len(set(systems)) != len(systems):
        raise ValueError(f"duplicate system ids in ensemble: {sorted(systems)}")
    wtn = wtn_from_hypothesis(hypotheses[0])
    for hyp in hypotheses[1:]:
        wtn = align_hypothesis(wtn, hyp)
    return wtn


def combine(
    hypotheses, params: VoteParams = DEFAULT_PARAMS, order: str = "input"
) -> tuple[Hypothesis, VoteTrace]:
    """Align one utterance's transcripts and vote: the full ROVER step."""
    return vote(build_network(hypotheses, order), params)
