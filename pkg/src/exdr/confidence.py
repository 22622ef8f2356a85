"""Multi-level confidence scores computed from one model response.

Three complementary scores drive the retrieval trigger:

* label uncertainty: |log p_real - log p_fake| / |log p_real + log p_fake|,
  the normalized log-odds gap between the two verdict words;
* token support: the fraction of top-K candidate tokens at the verdict
  position that agree with the predicted label, decided by a two-stage
  (lexicon, then sentence-similarity) token classifier;
* sentence confidence: exp of the mean token logprob of the explanation,
  i.e. the geometric-mean token probability.

A response that could not be parsed at all is assigned the sentinel triple
(0, 0, 0): the least-confident state, which always triggers retrieval.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .core import BinaryLabel, ModelResponse, clamp_logprob, normalize_token
from .errors import NonFiniteInput

# Label-related lexicons and sentence templates for the token classifier.
# These are the engine defaults; alternatives load via SupportLexicons.from_json.
REAL_WORDS = (
    "real", "genuine", "authentic", "true", "legitimate", "realistic",
    "legit", "fact", "accurate", "related", "likely", "consistent",
    "plausible",
)
FAKE_WORDS = (
    "fake", "missing", "false", "fabric", "fict", "un", "mis", "fraud",
    "unrelated", "fictional", "inconsistent",
)
QUERY_TEMPLATE = "This post is {}."
REAL_TEMPLATE = "The post is {} and factually correct."
FAKE_TEMPLATE = "The post is {} and contains misinformation."


@dataclass(frozen=True)
class ConfidenceTriple:
    tau_label: float
    tau_tok: float
    tau_sent: float

    def as_dict(self) -> dict:
        return {
            "tau_label": self.tau_label,
            "tau_tok": self.tau_tok,
            "tau_sent": self.tau_sent,
        }


# Sentinel for unparseable responses: maximally unconfident on every axis.
SENTINEL_TRIPLE = ConfidenceTriple(0.0, 0.0, 0.0)


class Support(Enum):
    """Which verdict a candidate token semantically backs."""

    REAL = "real"
    FAKE = "fake"

    def matches(self, label: BinaryLabel) -> bool:
        return self.value == label.value


@dataclass(frozen=True)
class SupportLexicons:
    """Verdict word lists plus the query/reference sentence templates."""

    real_words: frozenset = frozenset(REAL_WORDS)
    fake_words: frozenset = frozenset(FAKE_WORDS)
    real_template: str = REAL_TEMPLATE
    fake_template: str = FAKE_TEMPLATE
    query_template: str = QUERY_TEMPLATE

    def __post_init__(self):
        object.__setattr__(self, "real_words", frozenset(self.real_words))
        object.__setattr__(self, "fake_words", frozenset(self.fake_words))
        if self.real_words & self.fake_words:
            raise ValueError("real/fake lexicons must be disjoint")
        for name in ("real_template", "fake_template", "query_template"):
            template = getattr(self, name)
            if template.count("{}") != 1:
                raise ValueError(f"{name} must contain exactly one {{}} placeholder")

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SupportLexicons":
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
        return cls(
            real_words=frozenset(obj["real_words"]),
            fake_words=frozenset(obj["fake_words"]),
            real_template=obj.get("real_template", REAL_TEMPLATE),
            fake_template=obj.get("fake_template", FAKE_TEMPLATE),
            query_template=obj.get("query_template", QUERY_TEMPLATE),
        )


DEFAULT_LEXICONS = SupportLexicons()


def label_uncertainty(logp_real: float, logp_fake: float) -> float:
    """Normalized log-odds gap between the verdict words, in [0, 1).

    Both arguments are logprobs; a value of exactly 0 (p = 1) is clamped to
    log(1 - eps) so the denominator stays strictly negative.  Symmetric in
    its two arguments.
    """
    for value in (logp_real, logp_fake):
        if math.isnan(value) or value == float("inf"):
            raise NonFiniteInput(f"logprob is not usable: {value!r}")
    a = clamp_logprob(logp_real)
    b = clamp_logprob(logp_fake)
    return abs((a - b) / (a + b))


def sentence_confidence(token_logprobs: Sequence) -> float:
    """Geometric-mean token probability of the explanation, in (0, 1].

    Accepts (token, logprob) pairs or bare logprobs.  An empty explanation is
    floored to 0.0, the maximally unconfident value.
    """
    values = []
    for item in token_logprobs:
        if isinstance(item, (tuple, list)):
            values.append(float(item[1]))
        else:
            values.append(float(item))
    if not values:
        return 0.0
    if any(math.isnan(v) or v == float("inf") for v in values):
        raise NonFiniteInput("explanation logprobs contain NaN/Inf")
    return math.exp(math.fsum(values) / len(values))


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class TokenSupportClassifier:
    """Two-stage token classifier behind the token-support score.

    Stage 1 is an exact lexicon hit on the normalized token.  Stage 2 embeds
    the query sentence "This post is {token}." and compares its mean cosine
    similarity against the real and fake reference sentence groups; the
    larger side wins and an exact tie counts as FAKE (the low-confidence
    side, so ties can only cause extra retrieval, never skip it).

    Classification is deterministic, so the per-run memo table can be shared
    across worker threads without affecting results.
    """

    def __init__(self, backend, lexicons: SupportLexicons = DEFAULT_LEXICONS):
        self.backend = backend
        self.lexicons = lexicons
        self._memo = {}
        self._reference_cache = None

    def _references(self):
        if self._reference_cache is None:
            real = [
                self.backend.embed_sentence(self.lexicons.real_template.format(word))
                for word in sorted(self.lexicons.real_words)
            ]
            fake = [
                self.backend.embed_sentence(self.lexicons.fake_template.format(word))
                for word in sorted(self.lexicons.fake_words)
            ]
            self._reference_cache = (real, fake)
        return self._reference_cache

    def classify(self, token: str) -> Support:
        norm = normalize_token(token)
        if not norm:
            raise ValueError("token is empty after normalization")
        cached = self._memo.get(norm)
        if cached is not None:
            return cached
        result = self._classify_normalized(norm)
        self._memo[norm] = result
        return result

    def _classify_normalized(self, norm: str) -> Support:
        if norm in self.lexicons.real_words:
            return Support.REAL
        if norm in self.lexicons.fake_words:
            return Support.FAKE
        query = self.backend.embed_sentence(self.lexicons.query_template.format(norm))
        real_refs, fake_refs = self._references()
        sim_real = float(np.mean([_cosine(query, ref) for ref in real_refs]))
        sim_fake = float(np.mean([_cosine(query, ref) for ref in fake_refs]))
        return Support.REAL if sim_real > sim_fake else Support.FAKE


def classify_token(token: str, lexicons: SupportLexicons, backend) -> Support:
    """One-off token classification; see :class:`TokenSupportClassifier`."""
    return TokenSupportClassifier(backend, lexicons).classify(token)


def token_support(resp: ModelResponse, classifier: TokenSupportClassifier,
                  k: Optional[int] = None) -> float:
    """Fraction of top-K candidate tokens that back the predicted label.

    The denominator is the requested K even when candidates normalize to
    empty strings (those are skipped, not reclassified) or the backend
    returned fewer alternatives.
    """
    candidates = resp.top_candidates
    if not candidates:
        raise ValueError("response has no top candidates at the verdict position")
    if k is None:
        k = len(candidates)
    if k < 1:
        raise ValueError("k must be >= 1")
    supporting = 0
    for token, _ in candidates[:k]:
        if not normalize_token(token):
            continue
        if classifier.classify(token).matches(resp.predicted):
            supporting += 1
    return supporting / k


def confidence_of(resp: ModelResponse, classifier: TokenSupportClassifier,
                  k_tok: Optional[int] = None) -> ConfidenceTriple:
    """Compose the three scores for one parsed response."""
    tau_label = label_uncertainty(resp.label_logprobs.real, resp.label_logprobs.fake)
    if resp.top_candidates:
        tau_tok = token_support(resp, classifier, k=k_tok)
    else:
        tau_tok = 0.0
    tau_sent = sentence_confidence(resp.explanation_token_logprobs)
    return ConfidenceTriple(tau_label=tau_label, tau_tok=tau_tok, tau_sent=tau_sent)
