"""Detection and retrieval-trigger metrics.

Beyond accuracy and F1, two retrieval-specific measures score the trigger:

* retrieval identification rate: of the samples that triggered retrieval,
  the fraction that were misclassified before it;
* retrieval efficiency: the share of the full-retrieval accuracy gain that
  dynamic retrieval captured, scaled by the inverse trigger ratio.

Retrieval efficiency carries an annotation for runs where retrieval hurt:
"+" marks dynamic retrieval beating full retrieval under degradation, "-"
the opposite.  A run with no triggers at all reports "*" instead of a rate,
and a zero gain denominator reports "n/a".
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

from .core import BinaryLabel
from .errors import EmptyInput, LengthMismatch, NoRetrievals

NO_TRIGGER_MARKER = "*"


class F1Mode(Enum):
    FAKE_POSITIVE = "fake_positive"
    MACRO = "macro"


class ReAnnotation(Enum):
    NONE = "none"
    PLUS = "+"
    MINUS = "-"
    UNDEFINED = "n/a"


@dataclass(frozen=True)
class RunCounts:
    """Correct-prediction counts of one dynamic run and its companions.

    ``n_full`` may be None when no companion full-retrieval pass ran; the
    efficiency metric is then unavailable.
    """

    n_total: int
    n_retrieved: int
    n_err_classified: int
    n_dyn: int
    n_full: Optional[int]
    n_no: int

    def __post_init__(self):
        if not 0 <= self.n_err_classified <= self.n_retrieved <= self.n_total:
            raise ValueError(
                "need 0 <= n_err_classified <= n_retrieved <= n_total, got "
                f"{self.n_err_classified}/{self.n_retrieved}/{self.n_total}"
            )
        for name in ("n_dyn", "n_full", "n_no"):
            value = getattr(self, name)
            if value is None:
                continue
            if not 0 <= value <= self.n_total:
                raise ValueError(f"{name}={value} outside [0, {self.n_total}]")


def retrieval_identification(counts: RunCounts) -> float:
    """Fraction of triggered samples that were wrong before retrieval."""
    if counts.n_retrieved == 0:
        raise NoRetrievals("no sample triggered retrieval")
    return counts.n_err_classified / counts.n_retrieved


def retrieval_efficiency(counts: RunCounts) -> Tuple[float, ReAnnotation]:
    """Gain share times inverse trigger ratio, with the degradation annotation.

    Returns (nan, UNDEFINED) when full and no retrieval tie, which zeroes
    the gain denominator.
    """
    if counts.n_retrieved == 0:
        raise NoRetrievals("no sample triggered retrieval")
    if counts.n_full is None:
        raise ValueError("retrieval efficiency needs a companion full-retrieval count")
    degraded = counts.n_dyn < counts.n_no or counts.n_full < counts.n_no
    if counts.n_full == counts.n_no:
        return float("nan"), ReAnnotation.UNDEFINED
    value = (
        (counts.n_dyn - counts.n_no)
        / (counts.n_full - counts.n_no)
        * (counts.n_total / counts.n_retrieved)
    )
    annotation = ReAnnotation.NONE
    if degraded and counts.n_dyn > counts.n_full:
        annotation = ReAnnotation.PLUS
    elif degraded and counts.n_dyn < counts.n_full:
        annotation = ReAnnotation.MINUS
    return value, annotation


def _check_lists(preds: Sequence, golds: Sequence) -> None:
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise EmptyInput("no predictions to score")


def accuracy(preds: Sequence[BinaryLabel], golds: Sequence[BinaryLabel]) -> float:
    _check_lists(preds, golds)
    return sum(p is g for p, g in zip(preds, golds)) / len(preds)


def _f1_for_positive(preds, golds, positive: BinaryLabel) -> float:
    tp = sum(1 for p, g in zip(preds, golds) if p is positive and g is positive)
    fp = sum(1 for p, g in zip(preds, golds) if p is positive and g is not positive)
    fn = sum(1 for p, g in zip(preds, golds) if p is not positive and g is positive)
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2 * tp / denom


def f1(preds: Sequence[BinaryLabel], golds: Sequence[BinaryLabel],
       mode: F1Mode = F1Mode.MACRO) -> float:
    _check_lists(preds, golds)
    if mode is F1Mode.FAKE_POSITIVE:
        return _f1_for_positive(preds, golds, BinaryLabel.FAKE)
    per_class = [
        _f1_for_positive(preds, golds, BinaryLabel.FAKE),
        _f1_for_positive(preds, golds, BinaryLabel.REAL),
    ]
    return sum(per_class) / len(per_class)


def build_report(preds: Sequence[BinaryLabel], golds: Sequence[BinaryLabel],
                 counts: Optional[RunCounts] = None) -> dict:
    """Assemble the summary-report dict for one run.

    ``counts`` is required for the retrieval metrics; without it (or with
    zero triggers) "ri" holds the no-trigger marker and "re" is null.
    Retrieval efficiency additionally needs companion full/no-retrieval
    counts, so it stays null when the caller could not supply them.
    """
    report = {
        "acc": accuracy(preds, golds),
        "f1_macro": f1(preds, golds, F1Mode.MACRO),
        "f1_fake": f1(preds, golds, F1Mode.FAKE_POSITIVE),
        "ri": NO_TRIGGER_MARKER,
        "re": None,
        "trigger_ratio": None,
    }
    if counts is None:
        return report
    report["trigger_ratio"] = (
        counts.n_retrieved / counts.n_total if counts.n_total else 0.0
    )
    if counts.n_retrieved == 0:
        return report
    report["ri"] = retrieval_identification(counts)
    if counts.n_full is not None:
        value, annotation = retrieval_efficiency(counts)
        report["re"] = {
            "value": None if annotation is ReAnnotation.UNDEFINED else value,
            "annotation": annotation.value,
        }
    return report
