"""Synthetic noisy-teacher channels and the ensemble-gain experiment.

The experiment validates, at desk scale, that fusing diverse teachers
beats every single teacher: each teacher corrupts the same reference
corpus through an independent word-level error channel, the corrupted
transcripts are combined per sentence, and all outputs are scored
against the references.

Diversity is modeled by confusion categories: substituted and inserted
words come from per-category pools that are disjoint from each other
and from the reference vocabulary.  Teachers with distinct categories
therefore never agree on a wrong word, while teachers sharing a
category sometimes do, and clone teachers (same seed and rates) agree
on everything and show exactly zero gain.

Error positions are independent: at each reference word exactly one of
substitute / delete / insert-after / keep-clean happens.  Corrupted
words carry confidences drawn uniformly from [0.3, 0.7]; clean words
from [0.8, 1.0], so confidence-sum tie-breaks favor clean words.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import corpus_wer, relative_change
from .seeding import derive_seed
from .transcripts import Hypothesis, Word
from .voting import DEFAULT_PARAMS, VoteParams, combine

_POOL_SIZE = 20
_CLEAN_CONF = (0.8, 1.0)
_ERROR_CONF = (0.3, 0.7)


@dataclass(frozen=True)
class TeacherProfile:
    """Word-level error channel of one synthetic teacher."""

    system_id: str
    sub_rate: float = 0.0
    del_rate: float = 0.0
    ins_rate: float = 0.0
    confusion_category: int = 0
    seed: int = 0

    def __post_init__(self):
        rates = (self.sub_rate, self.del_rate, self.ins_rate)
        if any(rate < 0 for rate in rates):
            raise ValueError(f"error rates must be non-negative, got {rates}")
        if sum(rates) > 1:
            raise ValueError(f"error rates sum to {sum(rates)}, must be <= 1")


@dataclass(frozen=True)
class SynthCorpus:
    sentences: tuple[tuple[str, ...], ...]
    vocab_size: int
    seed: int

    def __post_init__(self):
        object.__setattr__(
            self, "sentences", tuple(tuple(sentence) for sentence in self.sentences)
        )

    @property
    def total_words(self) -> int:
        return sum(len(sentence) for sentence in self.sentences)


def vocab_word(index: int) -> str:
    return f"w{index:03d}"


def category_pool(category: int) -> tuple[str, ...]:
    """Wrong-word pool of one confusion category.

    Pools of distinct categories are disjoint, and no pool word ever
    collides with the ``w###`` reference vocabulary.
    """
    return tuple(f"c{category}e{k:02d}" for k in range(_POOL_SIZE))


def gen_corpus(
    num_sentences: int, words_per_sentence: int, vocab_size: int, seed: int
) -> SynthCorpus:
    """Draw i.i.d. uniform token sentences."""
    if min(num_sentences, words_per_sentence, vocab_size) < 1:
        raise ValueError("all corpus parameters must be >= 1")
    rng = np.random.default_rng(seed)
    indices = rng.integers(0, vocab_size, size=(num_sentences, words_per_sentence))
    sentences = tuple(
        tuple(vocab_word(int(index)) for index in row) for row in indices
    )
    return SynthCorpus(sentences, vocab_size, seed)


def corrupt(
    sentence,
    profile: TeacherProfile,
    rng: np.random.Generator | None = None,
    utterance_id: str = "utt",
) -> Hypothesis:
    """Pass one sentence through a teacher's error channel.

    With no ``rng`` a fresh generator is seeded from the profile; batch
    callers pass one shared generator so sentences stay independent.
    """
    if rng is None:
        rng = np.random.default_rng(profile.seed)
    pool = category_pool(profile.confusion_category)
    sub_edge = profile.sub_rate
    del_edge = sub_edge + profile.del_rate
    ins_edge = del_edge + profile.ins_rate
    words = []
    for token in sentence:
        draw = rng.random()
        if draw < sub_edge:
            words.append(_error_word(rng, pool))
        elif draw < del_edge:
            continue
        elif draw < ins_edge:
            words.append(_clean_word(rng, token))
            words.append(_error_word(rng, pool))
        else:
            words.append(_clean_word(rng, token))
    return Hypothesis(utterance_id, profile.system_id, tuple(words))


def _clean_word(rng, token: str) -> Word:
    return Word(token, float(rng.uniform(*_CLEAN_CONF)))


def _error_word(rng, pool) -> Word:
    token = pool[int(rng.integers(0, len(pool)))]
    return Word(token, float(rng.uniform(*_ERROR_CONF)))


def sentence_id(index: int) -> str:
    return f"s{index:04d}"


def corrupt_corpus(corpus: SynthCorpus, profile: TeacherProfile) -> list[Hypothesis]:
    """Corrupt every sentence with one continuous seeded stream."""
    rng = np.random.default_rng(profile.seed)
    return [
        corrupt(sentence, profile, rng, sentence_id(index))
        for index, sentence in enumerate(corpus.sentences)
    ]


@dataclass(frozen=True)
class EnsembleGainReport:
    """Per-teacher WERs, fused WER, and the gain over the best single."""

    per_teacher_wer: tuple[tuple[str, float], ...]
    fused_wer: float
    best_single_wer: float
    gain_percent: float

    def as_dict(self) -> dict:
        return {
            "per_teacher_wer": {name: wer for name, wer in self.per_teacher_wer},
            "fused_wer": self.fused_wer,
            "best_single_wer": self.best_single_wer,
            "gain_percent": self.gain_percent,
        }


def ensemble_gain_experiment(
    profiles, corpus: SynthCorpus, params: VoteParams = DEFAULT_PARAMS
) -> EnsembleGainReport:
    """Corrupt, fuse, and score: the diverse-vs-single comparison.

    ``gain_percent`` is the relative change from the best (lowest)
    single-teacher WER to the fused WER; negative means the ensemble
    beats every individual teacher.
    """
    profiles = list(profiles)
    if len(profiles) < 2:
        raise ValueError("the experiment needs at least 2 teachers")
    teacher_hyps = [corrupt_corpus(corpus, profile) for profile in profiles]
    fused = [
        combine([hyps[index] for hyps in teacher_hyps], params)[0]
        for index in range(len(corpus.sentences))
    ]
    refs = corpus.sentences
    per_teacher = tuple(
        (
            profile.system_id,
            corpus_wer(zip(refs, (hyp.tokens() for hyp in hyps))).wer,
        )
        for profile, hyps in zip(profiles, teacher_hyps)
    )
    fused_wer = corpus_wer(zip(refs, (hyp.tokens() for hyp in fused))).wer
    best_single = min(wer for _, wer in per_teacher)
    gain = relative_change(best_single, fused_wer) if best_single > 0 else 0.0
    return EnsembleGainReport(per_teacher, fused_wer, best_single, gain)


def make_profiles(
    num_teachers: int,
    sub_rate: float,
    del_rate: float = 0.0,
    ins_rate: float = 0.0,
    categories: str = "disjoint",
    seed: int = 0,
) -> list[TeacherProfile]:
    """Build an ensemble: per-teacher seeds, disjoint or shared pools."""
    if num_teachers < 2:
        raise ValueError("need at least 2 teachers")
    if categories not in ("disjoint", "shared"):
        raise ValueError(f"categories must be 'disjoint' or 'shared', got {categories!r}")
    profiles = []
    for index in range(num_teachers):
        system_id = f"teacher{index + 1}"
        profiles.append(
            TeacherProfile(
                system_id=system_id,
                sub_rate=sub_rate,
                del_rate=del_rate,
                ins_rate=ins_rate,
                confusion_category=index if categories == "disjoint" else 0,
                seed=derive_seed(seed, system_id),
            )
        )
    return profiles
