"""Transcript domain types, normalization, and hypothesis file I/O.

A hypothesis is one system's transcript for one utterance: an ordered
word sequence with per-word confidences and optional time stamps.
Hypotheses are exchanged on disk as JSON Lines, one object per line:

    {"utt": "<id>", "system": "<id>",
     "words": [{"w": "<token>", "conf": <0..1>, "t0": <sec>, "t1": <sec>}, ...]}

``conf``, ``t0`` and ``t1`` are optional per word; unknown keys are
ignored on read and never emitted on write.  Files are UTF-8.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from typing import Iterable

from .errors import DuplicateRecordError, FormatError

# A token is a plain string: non-empty, no internal whitespace.
Token = str

# Characters removed from token edges by strip_punctuation.
_PUNCTUATION = string.punctuation + "¿¡«»“”‘’„…–—"


@dataclass(frozen=True)
class NormalizationPolicy:
    """Switches for making transcripts from different systems comparable."""

    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True


DEFAULT_POLICY = NormalizationPolicy()


@dataclass(frozen=True)
class Word:
    """One transcript word with its confidence and optional time span."""

    token: Token
    confidence: float = 1.0
    t0: float | None = None
    t1: float | None = None

    def __post_init__(self):
        if not self.token or any(ch.isspace() for ch in self.token):
            raise ValueError(f"token must be non-empty with no whitespace: {self.token!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence outside [0, 1]: {self.confidence!r}")
        if self.t0 is not None and self.t1 is not None and self.t0 > self.t1:
            raise ValueError(f"word times reversed: t0={self.t0} > t1={self.t1}")


@dataclass(frozen=True)
class Hypothesis:
    """One system's transcript for one utterance."""

    utterance_id: str
    system_id: str
    words: tuple[Word, ...] = ()

    def __post_init__(self):
        if not self.utterance_id:
            raise ValueError("utterance_id must be non-empty")
        if not self.system_id:
            raise ValueError("system_id must be non-empty")
        object.__setattr__(self, "words", tuple(self.words))
        prev_t0 = None
        for word in self.words:
            if word.t0 is None:
                continue
            if prev_t0 is not None and word.t0 < prev_t0:
                raise ValueError(
                    f"word start times must be non-decreasing "
                    f"({word.t0} after {prev_t0} in {self.utterance_id!r})"
                )
            prev_t0 = word.t0

    def tokens(self) -> list[Token]:
        return [word.token for word in self.words]

    def text(self) -> str:
        return " ".join(self.tokens())


def normalize_transcript(raw: str, policy: NormalizationPolicy = DEFAULT_POLICY) -> list[Token]:
    """Split a raw transcript into normalized tokens.

    Tokens can never contain whitespace, so runs of any whitespace always
    delimit tokens regardless of ``collapse_whitespace``; the flag is kept
    on the policy so configurations can state it explicitly.  Tokens that
    normalize to the empty string (pure punctuation) are dropped.
    Idempotent: re-normalizing the joined output is a no-op.
    """
    if policy.lowercase:
        raw = raw.lower()
    tokens = raw.split()
    if policy.strip_punctuation:
        tokens = [token.strip(_PUNCTUATION) for token in tokens]
    return [token for token in tokens if token]


def normalize_hypothesis(hyp: Hypothesis, policy: NormalizationPolicy = DEFAULT_POLICY) -> Hypothesis:
    """Apply a normalization policy to every word of a hypothesis.

    Words whose token normalizes away (pure punctuation) are removed;
    confidences and times of the surviving words are preserved.
    """
    words = []
    for word in hyp.words:
        for token in normalize_transcript(word.token, policy):
            words.append(Word(token, word.confidence, word.t0, word.t1))
    return Hypothesis(hyp.utterance_id, hyp.system_id, tuple(words))


def _parse_word(obj, line_no: int) -> Word:
    if not isinstance(obj, dict):
        raise FormatError(f"word entry must be an object, got {type(obj).__name__}", line_no)
    if "w" not in obj:
        raise FormatError("word entry missing 'w'", line_no)
    try:
        return Word(
            token=obj["w"],
            confidence=float(obj.get("conf", 1.0)),
            t0=None if obj.get("t0") is None else float(obj["t0"]),
            t1=None if obj.get("t1") is None else float(obj["t1"]),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc), line_no) from exc


def parse_hypotheses(stream: Iterable[str]) -> list[Hypothesis]:
    """Parse a JSON Lines hypothesis stream.

    Blank lines are skipped.  A malformed line raises FormatError naming
    the line number; a repeated (utterance_id, system_id) pair raises
    DuplicateRecordError.  A word without "conf" gets confidence 1.0.
    """
    hypotheses: list[Hypothesis] = []
    seen: set[tuple[str, str]] = set()
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", line_no) from exc
        if not isinstance(record, dict):
            raise FormatError("record must be a JSON object", line_no)
        for key in ("utt", "system", "words"):
            if key not in record:
                raise FormatError(f"record missing {key!r}", line_no)
        if not isinstance(record["words"], list):
            raise FormatError("'words' must be a list", line_no)
        words = tuple(_parse_word(w, line_no) for w in record["words"])
        try:
            hyp = Hypothesis(record["utt"], record["system"], words)
        except (TypeError, ValueError) as exc:
            raise FormatError(str(exc), line_no) from exc
        key = (hyp.utterance_id, hyp.system_id)
        if key in seen:
            raise DuplicateRecordError(f"duplicate record for utterance {key[0]!r}, system {key[1]!r}", line_no)
        seen.add(key)
        hypotheses.append(hyp)
    return hypotheses


def serialize_hypotheses(hypotheses: Iterable[Hypothesis]) -> str:
    """Render hypotheses as a JSON Lines string, one record per line.

    Round trip: ``parse_hypotheses(serialize_hypotheses(h).splitlines()) == h``.
    """
    lines = []
    for hyp in hypotheses:
        words = []
        for word in hyp.words:
            entry: dict = {"w": word.token, "conf": word.confidence}
            if word.t0 is not None:
                entry["t0"] = word.t0
            if word.t1 is not None:
                entry["t1"] = word.t1
            words.append(entry)
        record = {"utt": hyp.utterance_id, "system": hyp.system_id, "words": words}
        lines.append(json.dumps(record, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def load_hypotheses(path) -> list[Hypothesis]:
    with open(path, encoding="utf-8") as handle:
        return parse_hypotheses(handle)


def save_hypotheses(path, hypotheses: Iterable[Hypothesis]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_hypotheses(hypotheses))
