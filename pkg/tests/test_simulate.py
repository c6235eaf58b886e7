import numpy as np
import pytest

from roverkit.evaluation import corpus_wer
from roverkit.simulate import (
    SynthCorpus,
    TeacherProfile,
    category_pool,
    corrupt,
    corrupt_corpus,
    ensemble_gain_experiment,
    gen_corpus,
    make_profiles,
    sentence_id,
    vocab_word,
)


class TestCorpus:
    def test_shape_and_vocab(self):
        corpus = gen_corpus(5, 12, 30, seed=2)
        assert len(corpus.sentences) == 5
        assert corpus.total_words == 60
        for sentence in corpus.sentences:
            assert len(sentence) == 12
            for token in sentence:
                assert token == vocab_word(int(token[1:]))
                assert 0 <= int(token[1:]) < 30

    def test_deterministic(self):
        assert gen_corpus(3, 4, 10, seed=9) == gen_corpus(3, 4, 10, seed=9)
        assert gen_corpus(3, 4, 10, seed=9) != gen_corpus(3, 4, 10, seed=10)

    def test_validation(self):
        with pytest.raises(ValueError):
            gen_corpus(0, 4, 10, seed=1)
        with pytest.raises(ValueError):
            gen_corpus(3, 4, 0, seed=1)


class TestProfiles:
    def test_rate_validation(self):
        with pytest.raises(ValueError):
            TeacherProfile("t", sub_rate=-0.1)
        with pytest.raises(ValueError):
            TeacherProfile("t", sub_rate=0.6, del_rate=0.5)

    def test_pools_are_disjoint(self):
        pools = [set(category_pool(category)) for category in range(5)]
        for i, pool in enumerate(pools):
            assert len(pool) == 20
            for other in pools[i + 1 :]:
                assert pool.isdisjoint(other)
        vocab = {vocab_word(i) for i in range(1000)}
        for pool in pools:
            assert pool.isdisjoint(vocab)

    def test_make_profiles(self):
        disjoint = make_profiles(3, sub_rate=0.2)
        assert [p.system_id for p in disjoint] == ["teacher1", "teacher2", "teacher3"]
        assert len({p.confusion_category for p in disjoint}) == 3
        assert len({p.seed for p in disjoint}) == 3
        shared = make_profiles(3, sub_rate=0.2, categories="shared")
        assert {p.confusion_category for p in shared} == {0}
        with pytest.raises(ValueError):
            make_profiles(1, sub_rate=0.1)
        with pytest.raises(ValueError):
            make_profiles(3, sub_rate=0.1, categories="overlapping")


class TestCorrupt:
    def test_zero_rates_are_identity(self):
        sentence = ("w001", "w002", "w003")
        hypothesis = corrupt(sentence, TeacherProfile("clean", seed=5))
        assert tuple(hypothesis.tokens()) == sentence
        for word in hypothesis.words:
            assert 0.8 <= word.confidence <= 1.0

    def test_pure_substitution_hits_every_word(self):
        sentence = tuple(vocab_word(i) for i in range(10))
        profile = TeacherProfile("bad", sub_rate=1.0, confusion_category=2, seed=3)
        hypothesis = corrupt(sentence, profile)
        pool = set(category_pool(2))
        assert len(hypothesis.words) == 10
        for word in hypothesis.words:
            assert word.token in pool
            assert 0.3 <= word.confidence <= 0.7

    def test_deletion_only_shrinks(self):
        sentence = tuple(vocab_word(i) for i in range(50))
        hypothesis = corrupt(sentence, TeacherProfile("del", del_rate=0.3, seed=8))
        assert len(hypothesis.words) < 50
        assert all(word.token in sentence for word in hypothesis.words)

    def test_insertion_adds_pool_words_after_clean(self):
        sentence = tuple(vocab_word(i) for i in range(50))
        profile = TeacherProfile("ins", ins_rate=1.0, confusion_category=1, seed=4)
        hypothesis = corrupt(sentence, profile)
        assert len(hypothesis.words) == 100
        pool = set(category_pool(1))
        for k, word in enumerate(hypothesis.words):
            if k % 2 == 0:
                assert word.token == sentence[k // 2]
            else:
                assert word.token in pool

    def test_error_rate_concentrates(self):
        corpus = gen_corpus(100, 25, 200, seed=6)
        profile = TeacherProfile("t", sub_rate=0.2, seed=7)
        hyps = corrupt_corpus(corpus, profile)
        report = corpus_wer(
            zip(corpus.sentences, (hyp.tokens() for hyp in hyps))
        )
        assert report.wer == pytest.approx(0.2, abs=0.02)
        assert report.insertions == report.deletions == 0

    def test_batch_is_one_stream(self):
        # Reseeding per sentence would make identical sentences corrupt
        # identically; the batch path must not do that.
        corpus = SynthCorpus((("w001", "w002"),) * 6, vocab_size=5, seed=0)
        profile = TeacherProfile("t", sub_rate=0.5, seed=11)
        hyps = corrupt_corpus(corpus, profile)
        assert [hyp.utterance_id for hyp in hyps] == [sentence_id(i) for i in range(6)]
        assert len({tuple((w.token, w.confidence) for w in hyp.words) for hyp in hyps}) > 1

    def test_corrupt_deterministic(self):
        sentence = tuple(vocab_word(i) for i in range(20))
        profile = TeacherProfile("t", sub_rate=0.3, ins_rate=0.1, seed=21)
        assert corrupt(sentence, profile) == corrupt(sentence, profile)


class TestEnsembleGain:
    def test_clone_teachers_gain_exactly_zero(self):
        corpus = gen_corpus(40, 15, 100, seed=1)
        for k in (2, 3, 5):
            base = TeacherProfile("t", sub_rate=0.15, seed=42)
            clones = [
                TeacherProfile(f"t{i}", sub_rate=0.15, seed=42) for i in range(k)
            ]
            report = ensemble_gain_experiment(clones, corpus)
            single = corpus_wer(
                zip(
                    corpus.sentences,
                    (h.tokens() for h in corrupt_corpus(corpus, base)),
                )
            ).wer
            assert report.fused_wer == report.best_single_wer == single
            assert report.gain_percent == 0.0

    def test_isolated_errors_are_outvoted(self):
        # Each teacher wrecks a different sentence; the other two carry
        # every vote, so fusion reconstructs the references exactly.
        refs = (("w001", "w002"), ("w003", "w004"), ("w005", "w006"))
        corpus = SynthCorpus(refs, vocab_size=10, seed=0)
        teacher_hyps = []
        for t in range(3):
            hyps = []
            for index, sentence in enumerate(refs):
                tokens = tuple(f"c{t}e00" for _ in sentence) if index == t else sentence
                hyps.append(
                    corrupt(tokens, TeacherProfile(f"t{t}", seed=t), utterance_id=sentence_id(index))
                )
            teacher_hyps.append(hyps)
        from roverkit.voting import combine

        for index, sentence in enumerate(refs):
            fused, _ = combine([hyps[index] for hyps in teacher_hyps])
            assert tuple(fused.tokens()) == sentence

    def test_diverse_beats_best_single(self):
        corpus = gen_corpus(120, 20, 150, seed=3)
        profiles = make_profiles(3, sub_rate=0.15, seed=5)
        report = ensemble_gain_experiment(profiles, corpus)
        assert report.best_single_wer == min(w for _, w in report.per_teacher_wer)
        assert report.fused_wer < report.best_single_wer
        assert report.gain_percent < 0
        for _, wer in report.per_teacher_wer:
            assert wer == pytest.approx(0.15, abs=0.05)

    def test_shared_category_is_no_better(self):
        corpus = gen_corpus(120, 20, 150, seed=3)
        diverse = ensemble_gain_experiment(make_profiles(3, 0.15, seed=5), corpus)
        shared = ensemble_gain_experiment(
            make_profiles(3, 0.15, categories="shared", seed=5), corpus
        )
        assert diverse.fused_wer <= shared.fused_wer

    def test_deterministic_and_dict_shape(self):
        corpus = gen_corpus(20, 10, 50, seed=14)
        profiles = make_profiles(2, sub_rate=0.1, seed=2)
        first = ensemble_gain_experiment(profiles, corpus)
        second = ensemble_gain_experiment(profiles, corpus)
        assert first == second
        payload = first.as_dict()
        assert set(payload) == {
            "per_teacher_wer",
            "fused_wer",
            "best_single_wer",
            "gain_percent",
        }
        assert set(payload["per_teacher_wer"]) == {"teacher1", "teacher2"}

    def test_needs_two_teachers(self):
        corpus = gen_corpus(5, 5, 10, seed=0)
        with pytest.raises(ValueError):
            ensemble_gain_experiment([TeacherProfile("t")], corpus)
