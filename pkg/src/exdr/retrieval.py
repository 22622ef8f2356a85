"""Fine-grained label inference and contrastive evidence selection.

Once retrieval is triggered for a sample, three steps pick its evidence:

1. the model's explanation is embedded and matched against the corpus
   explanation index; the k nearest neighbors vote on a fine-grained
   deception label;
2. the positive example is the highest-dot-product corpus record whose fine
   label equals the inferred one, the negative the highest-scoring record
   whose binary label differs from the current prediction;
3. both examples are prepended to the query as in-context turns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .backends import GenerationRequest, Turn
from .core import BinaryLabel, CorpusEntry, FineGrainedLabel, binary_of, Sample
from .errors import (
    EmptyIndex,
    MissingCorpusEntry,
    NoNegativePool,
    NoPositivePool,
)
from .index import ExplanationRecord, IndexRecord
from .prompts import DEFAULT_PROMPTS, PromptSet

DEFAULT_VOTE_K = 10

# Canonical order used for final vote tie-breaking.
_LABEL_ORDER = {label: i for i, label in enumerate(FineGrainedLabel)}


@dataclass(frozen=True)
class InferredLabel:
    """Majority-vote outcome over the nearest explanation neighbors."""

    label: FineGrainedLabel
    votes: dict  # FineGrainedLabel -> count
    k_used: int


@dataclass(frozen=True)
class ContrastivePair:
    """The chosen positive/negative evidence ids with their scores.

    ``positive_binary_fallback`` marks pairs whose positive was selected by
    matching binary label only, because no record carried the inferred fine
    label.
    """

    positive: str
    negative: str
    pos_score: float
    neg_score: float
    positive_binary_fallback: bool = False

    def __post_init__(self):
        if self.positive == self.negative:
            raise ValueError("positive and negative evidence must differ")


def infer_fine_label(expl_vec: np.ndarray, expl_index: Sequence[ExplanationRecord],
                     k: int = DEFAULT_VOTE_K) -> InferredLabel:
    """Nearest-neighbor majority vote over explanation vectors.

    Vectors are unit-norm, so the dot product is the cosine similarity.
    Neighbor selection breaks score ties by corpus id; vote ties go to the
    label with the larger summed similarity, then to canonical label order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not expl_index:
        raise EmptyIndex("explanation index is empty")
    q = np.asarray(expl_vec, dtype=np.float64)
    matrix = np.stack([r.expl_vec for r in expl_index])
    scores = matrix @ q
    ranked = sorted(
        zip(expl_index, scores.tolist()),
        key=lambda pair: (-pair[1], pair[0].corpus_id),
    )
    neighbors = ranked[:k]

    votes: dict = {}
    sims: dict = {}
    for record, sim in neighbors:
        votes[record.fine_label] = votes.get(record.fine_label, 0) + 1
        sims[record.fine_label] = sims.get(record.fine_label, 0.0) + sim
    winner = min(
        votes,
        key=lambda lab: (-votes[lab], -sims[lab], _LABEL_ORDER[lab]),
    )
    return InferredLabel(label=winner, votes=votes, k_used=len(neighbors))


def _argmax(index: Sequence[IndexRecord], scores: np.ndarray, keep) -> Optional[tuple]:
    best = None
    for record, score in zip(index, scores.tolist()):
        if not keep(record):
            continue
        key = (-score, record.corpus_id)
        if best is None or key < best[0]:
            best = (key, record, score)
    if best is None:
        return None
    return best[1], best[2]


def retrieve_contrastive(fused_q: np.ndarray, inferred: FineGrainedLabel,
                         predicted: BinaryLabel,
                         index: Sequence[IndexRecord]) -> ContrastivePair:
    """Pick the contrastive evidence pair for one query.

    Positive: best dot product among records with the inferred fine label
    (relaxed to matching binary label when that pool is empty; the pair is
    flagged).  Negative: best among records whose binary label differs from
    the prediction, excluding the positive so the pair is always distinct.
    Ties break by corpus id ascending.
    """
    if not index:
        raise EmptyIndex("fused index is empty")
    q = np.asarray(fused_q, dtype=np.float64)
    scores = np.stack([r.fused for r in index]) @ q

    fallback = False
    pos = _argmax(index, scores, lambda r: r.fine_label is inferred)
    if pos is None:
        fallback = True
        pos = _argmax(index, scores, lambda r: r.binary_label is binary_of(inferred))
        if pos is None:
            raise NoPositivePool(
                f"no corpus record matches inferred label {inferred.value} "
                "or its binary projection"
            )
    pos_record, pos_score = pos

    def negative_ok(record: IndexRecord) -> bool:
        return record.binary_label is not predicted and record.corpus_id != pos_record.corpus_id

    neg = _argmax(index, scores, negative_ok)
    if neg is None:
        # The only opposite-binary record may be the chosen positive; yield it
        # to the negative side and re-pick the positive.
        neg = _argmax(index, scores, lambda r: r.binary_label is not predicted)
        if neg is None:
            raise NoNegativePool(
                f"corpus has no record with binary label != {predicted.value}"
            )
        neg_record, neg_score = neg
        keep_pos = (
            (lambda r: r.fine_label is inferred)
            if not fallback
            else (lambda r: r.binary_label is binary_of(inferred))
        )
        pos = _argmax(
            index, scores,
            lambda r: keep_pos(r) and r.corpus_id != neg_record.corpus_id,
        )
        if pos is None:
            raise NoNegativePool(
                "cannot form a distinct contrastive pair from this corpus"
            )
        pos_record, pos_score = pos
    else:
        neg_record, neg_score = neg

    return ContrastivePair(
        positive=pos_record.corpus_id,
        negative=neg_record.corpus_id,
        pos_score=float(pos_score),
        neg_score=float(neg_score),
        positive_binary_fallback=fallback,
    )


def assemble_augmented_prompt(sample: Sample, pair: ContrastivePair,
                              corpus: Mapping[str, CorpusEntry],
                              prompts: PromptSet = DEFAULT_PROMPTS,
                              literal_wording: bool = False,
                              k_tok: int = 10) -> GenerationRequest:
    """Build the retrieval-augmented request: [positive; negative; query].

    Each example contributes a user turn with its image and text and an
    assistant turn asserting its verdict with its explanation.  By default
    the verdict word is derived from each example's own label; with
    ``literal_wording`` the first example is always worded "real" and the
    second "fake" regardless of the labels actually retrieved.
    """
    try:
        positive = corpus[pair.positive]
        negative = corpus[pair.negative]
    except KeyError as exc:
        raise MissingCorpusEntry(f"corpus id {exc.args[0]!r} not found") from exc

    if literal_wording:
        pos_word, neg_word = BinaryLabel.REAL.value, BinaryLabel.FAKE.value
    else:
        pos_word = binary_of(positive.fine_label).value
        neg_word = binary_of(negative.fine_label).value

    turns = (
        Turn("user", prompts.first_example_user.format(content=positive.text),
             image=positive.image),
        Turn("assistant", prompts.example_assistant.format(
            verdict=pos_word, explanation=positive.explanation)),
        Turn("user", prompts.second_example_user.format(content=negative.text),
             image=negative.image),
        Turn("assistant", prompts.example_assistant.format(
            verdict=neg_word, explanation=negative.explanation)),
        Turn("user", prompts.query_user.format(content=sample.text),
             image=sample.image),
    )
    return GenerationRequest(
        system=prompts.augmented_system,
        turns=turns,
        want_top_candidates=k_tok,
        want_logprobs=True,
    )


def assemble_plain_prompt(sample: Sample, prompts: PromptSet = DEFAULT_PROMPTS,
                          k_tok: int = 10) -> GenerationRequest:
    """Build the no-retrieval detection request for one sample."""
    turns = (
        Turn("user", prompts.plain_user.format(content=sample.text), image=sample.image),
    )
    return GenerationRequest(
        system=prompts.plain_system,
        turns=turns,
        want_top_candidates=k_tok,
        want_logprobs=True,
    )
