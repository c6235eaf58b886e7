import itertools
import json

import numpy as np
import pytest

from roverkit.errors import DuplicateRecordError, FormatError
from roverkit.transcripts import (
    DEFAULT_POLICY,
    Hypothesis,
    NormalizationPolicy,
    Word,
    normalize_hypothesis,
    normalize_transcript,
    parse_hypotheses,
    serialize_hypotheses,
)

VOCAB = ["hola", "mundo", "así", "que", "vamos", "bien", "ya"]


def random_hypothesis(rng, utt, system):
    words = []
    t = 0.0
    for _ in range(int(rng.integers(0, 8))):
        token = VOCAB[int(rng.integers(0, len(VOCAB)))]
        conf = float(rng.random())
        if rng.random() < 0.5:
            length = float(rng.random())
            words.append(Word(token, conf, t, t + length))
            t += length
        else:
            words.append(Word(token, conf))
    return Hypothesis(utt, system, tuple(words))


class TestNormalize:
    def test_defaults(self):
        assert normalize_transcript("Hello,  World") == ["hello", "world"]
        assert normalize_transcript("") == []
        assert normalize_transcript("a b  c.") == ["a", "b", "c"]

    def test_spanish_punctuation(self):
        assert normalize_transcript("¿Qué tal?") == ["qué", "tal"]

    def test_policy_toggles(self):
        keep_case = NormalizationPolicy(lowercase=False)
        assert normalize_transcript("Ab cd", keep_case) == ["Ab", "cd"]
        keep_punct = NormalizationPolicy(strip_punctuation=False)
        assert normalize_transcript("a, b.", keep_punct) == ["a,", "b."]

    def test_idempotent_for_every_policy(self):
        rng = np.random.default_rng(101)
        pieces = ["Hola,", "MUNDO", "a..b", "¡sí!", "x", "...", "Y-z"]
        for lc, sp, cw in itertools.product([True, False], repeat=3):
            policy = NormalizationPolicy(lc, sp, cw)
            for _ in range(25):
                raw = "  ".join(
                    pieces[int(rng.integers(0, len(pieces)))]
                    for _ in range(int(rng.integers(0, 6)))
                )
                once = normalize_transcript(raw, policy)
                again = normalize_transcript(" ".join(once), policy)
                assert again == once

    def test_tokens_never_contain_whitespace(self):
        for token in normalize_transcript("a\tb\nc  d"):
            assert token.split() == [token]

    def test_normalize_hypothesis_keeps_conf_and_times(self):
        hyp = Hypothesis("u", "s", (Word("Hola,", 0.7, 1.0, 2.0), Word("...", 0.2),))
        out = normalize_hypothesis(hyp)
        assert out.tokens() == ["hola"]
        assert out.words[0].confidence == 0.7
        assert out.words[0].t0 == 1.0


class TestWordAndHypothesis:
    def test_word_validation(self):
        with pytest.raises(ValueError):
            Word("")
        with pytest.raises(ValueError):
            Word("two words")
        with pytest.raises(ValueError):
            Word("x", 1.5)
        with pytest.raises(ValueError):
            Word("x", 0.5, 2.0, 1.0)

    def test_hypothesis_validation(self):
        with pytest.raises(ValueError):
            Hypothesis("", "s", ())
        with pytest.raises(ValueError):
            Hypothesis("u", "", ())
        with pytest.raises(ValueError):
            Hypothesis("u", "s", (Word("a", 1.0, 5.0, 6.0), Word("b", 1.0, 1.0, 2.0)))

    def test_empty_transcript_is_valid(self):
        assert Hypothesis("u", "s", ()).tokens() == []


class TestHypothesisIO:
    def test_empty_round_trip(self):
        assert serialize_hypotheses([]) == ""
        assert parse_hypotheses([]) == []

    def test_single_record(self):
        hyp = Hypothesis("u1", "sysA", (Word("hola", 0.5),))
        text = serialize_hypotheses([hyp])
        assert text.count("\n") == 1
        assert parse_hypotheses(text.splitlines()) == [hyp]

    def test_round_trip_random(self):
        rng = np.random.default_rng(7)
        for trial in range(50):
            hyps = [
                random_hypothesis(rng, f"u{k}", f"sys{trial}")
                for k in range(int(rng.integers(1, 6)))
            ]
            text = serialize_hypotheses(hyps)
            assert parse_hypotheses(text.splitlines()) == hyps

    def test_missing_conf_defaults_to_one(self):
        line = json.dumps({"utt": "u", "system": "s", "words": [{"w": "hi"}]})
        (hyp,) = parse_hypotheses([line])
        assert hyp.words[0].confidence == 1.0

    def test_unknown_keys_ignored(self):
        line = json.dumps(
            {"utt": "u", "system": "s", "words": [{"w": "hi", "extra": 1}], "meta": {}}
        )
        (hyp,) = parse_hypotheses([line])
        assert hyp.tokens() == ["hi"]

    def test_blank_lines_skipped(self):
        line = json.dumps({"utt": "u", "system": "s", "words": []})
        assert len(parse_hypotheses(["", line, "   ", ""])) == 1

    def test_duplicate_record_error(self):
        line = json.dumps({"utt": "u", "system": "s", "words": []})
        with pytest.raises(DuplicateRecordError):
            parse_hypotheses([line, line])

    def test_malformed_record_names_line(self):
        good = json.dumps({"utt": "u", "system": "s", "words": []})
        with pytest.raises(FormatError, match="line 2"):
            parse_hypotheses([good, "{not json"])
        with pytest.raises(FormatError, match="line 1"):
            parse_hypotheses([json.dumps({"utt": "u", "words": []})])
        with pytest.raises(FormatError, match="line 1"):
            parse_hypotheses([json.dumps({"utt": "u", "system": "s", "words": [{}]})])

    def test_policy_double_application_matches_single(self):
        assert DEFAULT_POLICY == NormalizationPolicy(True, True, True)
