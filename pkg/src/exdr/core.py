"""Domain types shared by every module, plus corpus/dataset ingestion.

The unit being verified is a :class:`Sample` (image + text claim).  Retrieved
evidence comes from :class:`CorpusEntry` records that carry an explanation and
a fine-grained deception label.  Model output is normalized into a
:class:`ModelResponse` holding the predicted label, the explanation, and the
token-level probability information the confidence scores are computed from.

All types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

from .errors import (
    DuplicateId,
    MalformedRecord,
    UnknownFineLabel,
    UnparseableResponse,
)

# Floor probability used whenever a label word is absent from a candidate
# list or a probability degenerates to 0 or 1.
PROB_EPSILON = 1e-6
LOGPROB_FLOOR = math.log(PROB_EPSILON)
LOGPROB_CEIL = math.log(1.0 - PROB_EPSILON)

# An image is an opaque reference (path, URI, or id).  The engine never
# decodes pixels; only backends do.
ImageRef = str


class BinaryLabel(Enum):
    """Two-way verdict on an image-text pair."""

    REAL = "real"
    FAKE = "fake"

    @classmethod
    def parse(cls, text: str) -> "BinaryLabel":
        """Case-insensitive parse; rejects anything but real/fake."""
        normalized = text.strip().lower()
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(f"not a binary label: {text!r}")

    def opposite(self) -> "BinaryLabel":
        return BinaryLabel.FAKE if self is BinaryLabel.REAL else BinaryLabel.REAL


class FineGrainedLabel(Enum):
    """Six-way deception category; declaration order is the canonical order."""

    REAL_NEWS = "real_news"
    IMAGE_FABRICATION = "image_fabrication"
    ENTITY_INCONSISTENCY = "entity_inconsistency"
    EVENT_INCONSISTENCY = "event_inconsistency"
    TIME_OR_SPACE_INCONSISTENCY = "time_or_space_inconsistency"
    INEFFECTIVE_VISUAL_INFORMATION = "ineffective_visual_information"

    @classmethod
    def parse(cls, text: str) -> "FineGrainedLabel":
        normalized = text.strip().lower()
        for member in cls:
            if member.value == normalized:
                return member
        raise UnknownFineLabel(f"unknown fine-grained label: {text!r}")


def binary_of(fine: FineGrainedLabel) -> BinaryLabel:
    """Project a fine-grained label onto its binary verdict.

    Only real_news maps to REAL; the five deception categories are FAKE.
    """
    if fine is FineGrainedLabel.REAL_NEWS:
        return BinaryLabel.REAL
    return BinaryLabel.FAKE


@dataclass(frozen=True)
class Sample:
    """One image+text claim, optionally carrying gold labels."""

    id: str
    image: ImageRef
    text: str
    gold_binary: Optional[BinaryLabel] = None
    gold_fine: Optional[FineGrainedLabel] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("sample id must be non-empty")
        if not self.text:
            raise ValueError(f"sample {self.id!r}: text must be non-empty")
        if self.gold_fine is not None and self.gold_binary is not None:
            if binary_of(self.gold_fine) is not self.gold_binary:
                raise ValueError(
                    f"sample {self.id!r}: gold_fine {self.gold_fine.value} does not "
                    f"project to gold_binary {self.gold_binary.value}"
                )


@dataclass(frozen=True)
class CorpusEntry:
    """One retrievable evidence unit: image, text, explanation, fine label."""

    id: str
    image: ImageRef
    text: str
    explanation: str
    fine_label: FineGrainedLabel

    def __post_init__(self):
        if not self.id:
            raise ValueError("corpus id must be non-empty")
        if not self.explanation:
            raise ValueError(f"corpus entry {self.id!r}: explanation must be non-empty")

    @property
    def binary_label(self) -> BinaryLabel:
        return binary_of(self.fine_label)


@dataclass(frozen=True)
class TokenInfo:
    """One generated token with its logprob and the top alternatives at its position."""

    token: str
    logprob: float
    top: tuple = ()  # tuple of (token, logprob), sorted by the backend or not

    @classmethod
    def from_wire(cls, obj: dict) -> "TokenInfo":
        top = tuple((str(c["t"]), float(c["logprob"])) for c in obj.get("top", []))
        return cls(token=str(obj["t"]), logprob=float(obj["logprob"]), top=top)


class LabelLogprobs:
    """Clamped logprobs of the two verdict words at the classification position."""

    __slots__ = ("real", "fake")

    def __init__(self, real: float, fake: float):
        self.real = clamp_logprob(real)
        self.fake = clamp_logprob(fake)

    def __iter__(self):
        return iter((self.real, self.fake))

    def __eq__(self, other):
        return (
            isinstance(other, LabelLogprobs)
            and self.real == other.real
            and self.fake == other.fake
        )

    def __repr__(self):
        return f"LabelLogprobs(real={self.real!r}, fake={self.fake!r})"


def clamp_logprob(value: float) -> float:
    """Clamp a logprob into the finite, strictly negative range.

    -inf (p = 0) becomes log(eps); anything >= 0 (p >= 1) becomes log(1 - eps).
    NaN is rejected by the confidence ops, not here.
    """
    if value == float("-inf"):
        return LOGPROB_FLOOR
    if value >= 0.0:
        return LOGPROB_CEIL
    return value


@dataclass(frozen=True)
class ModelResponse:
    """Parsed generation output.

    ``classification_position`` is the index of the verdict token in the
    generated stream, or None when the token stream does not expose it (the
    label logprobs then fall back to the floor value on both sides).
    """

    predicted: BinaryLabel
    explanation: str
    explanation_token_logprobs: tuple = ()  # tuple of (token, logprob)
    classification_position: Optional[int] = None
    top_candidates: tuple = ()  # tuple of (token, logprob), logprob descending
    label_logprobs: LabelLogprobs = field(
        default_factory=lambda: LabelLogprobs(LOGPROB_FLOOR, LOGPROB_FLOOR)
    )


# Word-piece markers emitted by common tokenizers; stripped before any
# lexical comparison so lexicons do not have to anticipate them.
_WORDPIECE_MARKERS = ("▁", "##")
_STRIP_CHARS = string.punctuation + string.whitespace


def normalize_token(token: str) -> str:
    """Lowercase a token and strip word-piece markers and edge punctuation."""
    text = token.strip()
    changed = True
    while changed:
        changed = False
        for marker in _WORDPIECE_MARKERS:
            if text.startswith(marker):
                text = text[len(marker):]
                changed = True
    return text.lower().strip(_STRIP_CHARS)


_RESPONSE_PATTERN = re.compile(
    r"^\s*the\s+pair\s+is\s+(real|fake)\s+because\b\s*(.*)$",
    re.IGNORECASE | re.DOTALL,
)


def serialize_response(predicted: BinaryLabel, explanation: str) -> str:
    """Render a verdict + explanation in the canonical response form."""
    return f"The pair is {predicted.value} because {explanation}"


def _extract_label_logprobs(top_candidates: Sequence[tuple]) -> LabelLogprobs:
    # First candidate whose normalized form matches each verdict word wins;
    # an absent word gets the floor probability.
    logp_real = None
    logp_fake = None
    for token, logprob in top_candidates:
        norm = normalize_token(token)
        if norm == "real" and logp_real is None:
            logp_real = logprob
        elif norm == "fake" and logp_fake is None:
            logp_fake = logprob
        if logp_real is not None and logp_fake is not None:
            break
    return LabelLogprobs(
        LOGPROB_FLOOR if logp_real is None else logp_real,
        LOGPROB_FLOOR if logp_fake is None else logp_fake,
    )


def parse_response(raw_text: str, tokens: Sequence[TokenInfo] = (),
                   top_k: Optional[int] = None) -> ModelResponse:
    """Parse generated text (and its token stream) into a :class:`ModelResponse`.

    The text must start, after whitespace, with "The pair is {real|fake}
    because"; the match is case-insensitive.  When a token stream is supplied
    and concatenates back to a matching text, token offsets locate the
    classification position and the explanation tokens exactly; otherwise the
    split falls back to scanning for the verdict and "because" tokens.

    ``top_k`` caps the candidate list kept at the classification position
    (highest logprobs win); label logprobs are extracted from the capped list.

    Raises UnparseableResponse when the pattern is absent.
    """
    tokens = tuple(tokens)
    concat = "".join(t.token for t in tokens)

    source = None
    match = None
    if tokens:
        match = _RESPONSE_PATTERN.match(concat)
        if match is not None:
            source = concat
    if match is None:
        match = _RESPONSE_PATTERN.match(raw_text)
        if match is not None:
            source = raw_text
    if match is None:
        raise UnparseableResponse(
            f"response does not open with a verdict: {raw_text[:80]!r}"
        )

    predicted = BinaryLabel.parse(match.group(1))
    explanation = match.group(2).strip()

    classification_position = None
    explanation_tokens: list = []
    if tokens:
        if source is concat:
            # Exact character offsets over the token concatenation.
            label_start = match.start(1)
            expl_start = match.start(2)
            offset = 0
            for i, tok in enumerate(tokens):
                end = offset + len(tok.token)
                if classification_position is None and offset <= label_start < end:
                    classification_position = i
                if end > expl_start:
                    explanation_tokens.append((tok.token, tok.logprob))
                offset = end
        else:
            # Token stream does not reproduce the text; fall back to scanning.
            because_at = None
            for i, tok in enumerate(tokens):
                norm = normalize_token(tok.token)
                if classification_position is None and norm == predicted.value:
                    classification_position = i
                if because_at is None and norm == "because":
                    because_at = i
            split_at = because_at if because_at is not None else classification_position
            if split_at is not None:
                explanation_tokens = [
                    (t.token, t.logprob) for t in tokens[split_at + 1 :]
                ]

    top_candidates: tuple = ()
    if classification_position is not None:
        raw_top = tokens[classification_position].top
        top_candidates = tuple(sorted(raw_top, key=lambda pair: -pair[1]))
        if top_k is not None:
            top_candidates = top_candidates[:top_k]

    return ModelResponse(
        predicted=predicted,
        explanation=explanation,
        explanation_token_logprobs=tuple(explanation_tokens),
        classification_position=classification_position,
        top_candidates=top_candidates,
        label_logprobs=_extract_label_logprobs(top_candidates),
    )


# -- file ingestion -----------------------------------------------------------

_CORPUS_FIELDS = ("id", "image", "text", "explanation", "fine_label")
_DATASET_FIELDS = ("id", "image", "text")


def _iter_jsonl(path: Union[str, Path]) -> Iterator[tuple]:
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise MalformedRecord(line_no, "record is not a JSON object")
            yield line_no, obj


def _require_str(obj: dict, key: str, line_no: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise MalformedRecord(line_no, f"missing or empty field {key!r}")
    return value


def load_corpus(path: Union[str, Path], format: str = "jsonl") -> list:
    """Load a JSONL evidence corpus, validating every record.

    Returns entries in file order.  Raises MalformedRecord, UnknownFineLabel,
    or DuplicateId.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format: {format!r}")
    entries = []
    seen = set()
    for line_no, obj in _iter_jsonl(path):
        fields = {key: _require_str(obj, key, line_no) for key in _CORPUS_FIELDS}
        fine = FineGrainedLabel.parse(fields["fine_label"])
        if fields["id"] in seen:
            raise DuplicateId(f"duplicate corpus id {fields['id']!r} at line {line_no}")
        seen.add(fields["id"])
        try:
            entries.append(
                CorpusEntry(
                    id=fields["id"],
                    image=fields["image"],
                    text=fields["text"],
                    explanation=fields["explanation"],
                    fine_label=fine,
                )
            )
        except ValueError as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
    return entries


def load_dataset(path: Union[str, Path]) -> list:
    """Load a JSONL dataset of samples with optional gold labels."""
    samples = []
    seen = set()
    for line_no, obj in _iter_jsonl(path):
        fields = {key: _require_str(obj, key, line_no) for key in _DATASET_FIELDS}
        gold_binary = None
        gold_fine = None
        if "gold_binary" in obj:
            try:
                gold_binary = BinaryLabel.parse(str(obj["gold_binary"]))
            except ValueError as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
        if "gold_fine" in obj:
            gold_fine = FineGrainedLabel.parse(str(obj["gold_fine"]))
            if gold_binary is None:
                gold_binary = binary_of(gold_fine)
        if fields["id"] in seen:
            raise DuplicateId(f"duplicate sample id {fields['id']!r} at line {line_no}")
        seen.add(fields["id"])
        try:
            samples.append(
                Sample(
                    id=fields["id"],
                    image=fields["image"],
                    text=fields["text"],
                    gold_binary=gold_binary,
                    gold_fine=gold_fine,
                )
            )
        except ValueError as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
    return samples
