"""End-to-end orchestration: predict, score confidence, trigger, retrieve,
re-predict, select, and report.

A run proceeds in shared passes so that no sample ever costs more than two
generation calls, regardless of how many modes are requested:

1. plain pass: one detection request per sample; parse, score confidence;
2. augmented pass: for every sample that any requested mode wants retrieval
   for, embed the query sides, infer the fine-grained label, pick the
   contrastive pair, and issue one augmented request;
3. per-mode assembly: the final prediction is the augmented one exactly for
   triggered samples, the plain one otherwise.

Per-sample backend faults are recorded and the sample is excluded from every
metric denominator (the count is reported); configuration faults fail fast.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .backends import Backend
from .confidence import (
    SENTINEL_TRIPLE,
    ConfidenceTriple,
    DEFAULT_LEXICONS,
    SupportLexicons,
    TokenSupportClassifier,
    confidence_of,
)
from .core import BinaryLabel, CorpusEntry, ModelResponse, Sample, binary_of
from .errors import (
    BackendUnavailable,
    ConfigError,
    MissingLogprobs,
    UnparseableResponse,
)
from .index import (
    ExplanationRecord,
    IndexRecord,
    entity_string,
    fuse_features,
)
from .metrics import RunCounts, build_report
from .prompts import DEFAULT_PROMPTS, PromptSet
from .retrieval import (
    ContrastivePair,
    InferredLabel,
    assemble_augmented_prompt,
    assemble_plain_prompt,
    infer_fine_label,
    retrieve_contrastive,
)
from .trigger import (
    SearchConfig,
    ThresholdTriple,
    ValidationCache,
    hybrid_search,
    should_trigger,
)


class Mode(Enum):
    NO = "no"
    FULL = "full"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class RunConfig:
    modes: tuple = (Mode.DYNAMIC,)
    thresholds: Optional[ThresholdTriple] = None
    k_vote: int = 10
    k_tok: int = 10
    prompt3_literal: bool = False
    prompts: PromptSet = DEFAULT_PROMPTS
    lexicons: SupportLexicons = DEFAULT_LEXICONS
    jobs: int = 1
    # Inference is deterministic; the seed covers seeded components such as
    # threshold search when they run within the same invocation.
    seed: int = 0

    def __post_init__(self):
        if Mode.DYNAMIC in self.modes and self.thresholds is None:
            raise ConfigError("dynamic mode needs thresholds")
        if not self.modes:
            raise ConfigError("at least one mode is required")


@dataclass(frozen=True)
class SampleOutcome:
    """One sample's journey through one mode."""

    sample_id: str
    mode: Mode
    plain_pred: Optional[BinaryLabel]
    triggered: bool
    augmented_pred: Optional[BinaryLabel]
    final_pred: Optional[BinaryLabel]
    confidence: ConfidenceTriple
    evidence: Optional[ContrastivePair] = None
    inferred: Optional[InferredLabel] = None
    fallbacks: tuple = ()
    error: Optional[str] = None

    def to_json(self) -> dict:
        def label(value):
            return value.value if value is not None else None

        obj = {
            "sample_id": self.sample_id,
            "mode": self.mode.value,
            "plain_pred": label(self.plain_pred),
            "triggered": self.triggered,
            "augmented_pred": label(self.augmented_pred),
            "final_pred": label(self.final_pred),
            "confidence": self.confidence.as_dict(),
            "evidence": None,
            "inferred_label": None,
            "vote_histogram": None,
            "fallbacks": list(self.fallbacks),
            "error": self.error,
        }
        if self.evidence is not None:
            obj["evidence"] = {
                "positive": self.evidence.positive,
                "negative": self.evidence.negative,
                "pos_score": self.evidence.pos_score,
                "neg_score": self.evidence.neg_score,
                "positive_binary_fallback": self.evidence.positive_binary_fallback,
            }
        if self.inferred is not None:
            obj["inferred_label"] = self.inferred.label.value
            obj["vote_histogram"] = {
                lab.value: count for lab, count in sorted(
                    self.inferred.votes.items(), key=lambda kv: kv[0].value
                )
            }
        return obj


@dataclass
class _PlainResult:
    response: Optional[ModelResponse] = None
    pred: Optional[BinaryLabel] = None
    confidence: ConfidenceTriple = SENTINEL_TRIPLE
    fallbacks: tuple = ()
    error: Optional[str] = None


@dataclass
class _AugResult:
    pair: Optional[ContrastivePair] = None
    inferred: Optional[InferredLabel] = None
    pred: Optional[BinaryLabel] = None
    fallbacks: tuple = ()
    error: Optional[str] = None


@dataclass
class RunResult:
    outcomes: dict  # mode -> list[SampleOutcome], sorted by sample id
    summary: dict


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise BackendUnavailable("backend returned an all-zero embedding")
    return vec / norm


def _map_samples(samples, fn, jobs: int) -> dict:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(fn, samples))
    else:
        results = [fn(s) for s in samples]
    return {sample.id: result for sample, result in zip(samples, results)}


def _plain_pass(samples: Sequence[Sample], backend: Backend, cfg: RunConfig,
                classifier: TokenSupportClassifier,
                logprobs_required: bool) -> dict:
    def one(sample: Sample) -> _PlainResult:
        request = assemble_plain_prompt(sample, cfg.prompts, cfg.k_tok)
        try:
            response = backend.generate(request)
        except UnparseableResponse:
            # Least-confident state: record it and force the trigger.
            return _PlainResult(fallbacks=("unparseable_plain",))
        except MissingLogprobs as exc:
            if logprobs_required:
                raise ConfigError(
                    f"backend cannot supply logprobs ({exc}); required for "
                    "dynamic mode and tuning"
                ) from exc
            # Retrieval-always modes only need the verdict; retry without
            # logprobs and pin confidence to the sentinel.
            retry = dataclasses.replace(request, want_logprobs=False)
            try:
                response = backend.generate(retry)
            except UnparseableResponse:
                return _PlainResult(fallbacks=("unparseable_plain",))
            except BackendUnavailable as retry_exc:
                return _PlainResult(error=str(retry_exc))
            return _PlainResult(
                response=response,
                pred=response.predicted,
                confidence=SENTINEL_TRIPLE,
                fallbacks=("missing_logprobs",),
            )
        except BackendUnavailable as exc:
            return _PlainResult(error=str(exc))
        return _PlainResult(
            response=response,
            pred=response.predicted,
            confidence=confidence_of(response, classifier, k_tok=cfg.k_tok),
        )

    return _map_samples(samples, one, cfg.jobs)


def _augment_pass(samples: Sequence[Sample], plain: Mapping[str, _PlainResult],
                  backend: Backend, cfg: RunConfig,
                  index: Sequence[IndexRecord],
                  explanations: Sequence[ExplanationRecord],
                  corpus_by_id: Mapping[str, CorpusEntry]) -> dict:
    def one(sample: Sample) -> _AugResult:
        base = plain[sample.id]
        fallbacks = []
        if base.response is not None and base.response.explanation:
            explanation = base.response.explanation
        else:
            # No usable explanation: fall back to the claim text for both the
            # entity side and the label-inference embedding.
            explanation = sample.text
            fallbacks.append("claim_text_explanation")
        try:
            image_vec = backend.embed_image(sample.image)
            text_vec = backend.embed_text(sample.text)
            entities = backend.extract_entities(explanation)
            joined = entity_string(entities)
            if not joined:
                joined = sample.text
                fallbacks.append("claim_text_entities")
            entity_vec = backend.embed_text(joined)
            fused = fuse_features(image_vec, text_vec, entity_vec)
            expl_vec = _unit(np.asarray(backend.embed_text(explanation), dtype=np.float64))
            inferred = infer_fine_label(expl_vec, explanations, k=cfg.k_vote)
            if base.pred is not None:
                predicted = base.pred
            else:
                predicted = binary_of(inferred.label)
                fallbacks.append("predicted_from_inferred")
            pair = retrieve_contrastive(fused, inferred.label, predicted, index)
            if pair.positive_binary_fallback:
                fallbacks.append("positive_binary_fallback")
            request = assemble_augmented_prompt(
                sample, pair, corpus_by_id, cfg.prompts,
                literal_wording=cfg.prompt3_literal, k_tok=cfg.k_tok,
            )
        except BackendUnavailable as exc:
            return _AugResult(error=str(exc), fallbacks=tuple(fallbacks))
        try:
            try:
                response = backend.generate(request)
            except MissingLogprobs:
                # Only the verdict matters here; ask again without logprobs.
                response = backend.generate(
                    dataclasses.replace(request, want_logprobs=False)
                )
                fallbacks.append("missing_logprobs")
        except UnparseableResponse:
            fallbacks.append("unparseable_augmented")
            return _AugResult(pair=pair, inferred=inferred, fallbacks=tuple(fallbacks))
        except BackendUnavailable as exc:
            return _AugResult(
                pair=pair, inferred=inferred, error=str(exc), fallbacks=tuple(fallbacks)
            )
        return _AugResult(
            pair=pair,
            inferred=inferred,
            pred=response.predicted,
            fallbacks=tuple(fallbacks),
        )

    return _map_samples(samples, one, cfg.jobs)


def _assemble_mode(mode: Mode, samples, plain, augmented, thresholds) -> list:
    outcomes = []
    for sample in samples:
        base = plain[sample.id]
        aug = augmented.get(sample.id)
        if mode is Mode.NO:
            triggered = False
        elif mode is Mode.FULL:
            triggered = True
        else:
            triggered = should_trigger(base.confidence, thresholds)
        error = base.error
        augmented_pred = None
        evidence = None
        inferred = None
        fallbacks = base.fallbacks
        if triggered and error is None:
            if aug is None:
                raise RuntimeError(f"missing augmented result for {sample.id}")
            augmented_pred = aug.pred
            evidence = aug.pair
            inferred = aug.inferred
            fallbacks = fallbacks + aug.fallbacks
            error = aug.error
        final = augmented_pred if triggered else base.pred
        if error is not None:
            final = None
        outcomes.append(
            SampleOutcome(
                sample_id=sample.id,
                mode=mode,
                plain_pred=base.pred,
                triggered=triggered,
                augmented_pred=augmented_pred,
                final_pred=final,
                confidence=base.confidence,
                evidence=evidence,
                inferred=inferred,
                fallbacks=fallbacks,
                error=error,
            )
        )
    outcomes.sort(key=lambda o: o.sample_id)
    return outcomes


def _scored_pred(pred: Optional[BinaryLabel], gold: BinaryLabel) -> BinaryLabel:
    # A missing prediction scores as a wrong one.
    return pred if pred is not None else gold.opposite()


def _mode_report(mode: Mode, outcomes, golds: Mapping[str, BinaryLabel],
                 excluded: set, n_full: Optional[int], n_no: int) -> dict:
    scored = [o for o in outcomes if o.sample_id in golds and o.sample_id not in excluded]
    if not scored:
        return {"acc": None, "note": "no gold-labeled samples"}
    preds = [_scored_pred(o.final_pred, golds[o.sample_id]) for o in scored]
    gold_list = [golds[o.sample_id] for o in scored]
    counts = None
    if mode is not Mode.NO:
        n_total = len(scored)
        triggered = [o for o in scored if o.triggered]
        n_retrieved = len(triggered)
        n_err = sum(
            1 for o in triggered
            if _scored_pred(o.plain_pred, golds[o.sample_id]) is not golds[o.sample_id]
        )
        n_dyn = sum(1 for p, g in zip(preds, gold_list) if p is g)
        counts = RunCounts(
            n_total=n_total,
            n_retrieved=n_retrieved,
            n_err_classified=n_err,
            n_dyn=n_dyn,
            n_full=n_full,
            n_no=n_no,
        )
    return build_report(preds, gold_list, counts)


def run(samples: Sequence[Sample], backend: Backend, cfg: RunConfig,
        corpus: Optional[Sequence[CorpusEntry]] = None,
        index: Optional[Sequence[IndexRecord]] = None,
        explanations: Optional[Sequence[ExplanationRecord]] = None,
        out_dir: Optional[Union[str, Path]] = None) -> RunResult:
    """Execute the requested modes over the dataset and assemble the report."""
    if not samples:
        raise ConfigError("dataset is empty")
    needs_retrieval = Mode.FULL in cfg.modes or Mode.DYNAMIC in cfg.modes
    if needs_retrieval and (corpus is None or index is None or explanations is None):
        raise ConfigError("full/dynamic modes need a corpus and a built index")

    classifier = TokenSupportClassifier(backend, cfg.lexicons)
    logprobs_required = Mode.DYNAMIC in cfg.modes
    plain = _plain_pass(samples, backend, cfg, classifier, logprobs_required)

    augmented: dict = {}
    if needs_retrieval:
        if Mode.FULL in cfg.modes:
            wanted = [s for s in samples if plain[s.id].error is None]
        else:
            wanted = [
                s for s in samples
                if plain[s.id].error is None
                and should_trigger(plain[s.id].confidence, cfg.thresholds)
            ]
        corpus_by_id = {entry.id: entry for entry in corpus}
        augmented = _augment_pass(
            wanted, plain, backend, cfg, index, explanations, corpus_by_id
        )

    outcomes = {
        mode: _assemble_mode(mode, samples, plain, augmented, cfg.thresholds)
        for mode in cfg.modes
    }

    golds = {s.id: s.gold_binary for s in samples if s.gold_binary is not None}
    excluded = set()
    for mode_outcomes in outcomes.values():
        excluded.update(o.sample_id for o in mode_outcomes if o.error is not None)

    n_no = sum(
        1 for sid, gold in golds.items()
        if sid not in excluded and plain[sid].pred is gold
    )
    n_full = None
    if Mode.FULL in cfg.modes:
        full_by_id = {o.sample_id: o for o in outcomes[Mode.FULL]}
        n_full = sum(
            1 for sid, gold in golds.items()
            if sid not in excluded and full_by_id[sid].final_pred is gold
        )

    reports = {
        mode.value: _mode_report(mode, outcomes[mode], golds, excluded, n_full, n_no)
        for mode in cfg.modes
    }
    summary = {
        "n_samples": len(samples),
        "n_gold": len(golds),
        "n_excluded": len(excluded),
    }
    if len(cfg.modes) == 1:
        summary.update(reports[cfg.modes[0].value])
    else:
        summary["modes"] = reports

    result = RunResult(outcomes=outcomes, summary=summary)
    if out_dir is not None:
        write_outputs(result, out_dir, cfg)
    return result


def write_outputs(result: RunResult, out_dir: Union[str, Path], cfg: RunConfig) -> None:
    """Write outcomes.jsonl and summary.json; byte-stable for fixed inputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "outcomes.jsonl", "w", encoding="utf-8") as handle:
        for mode in cfg.modes:
            for outcome in result.outcomes[mode]:
                handle.write(json.dumps(outcome.to_json(), sort_keys=True) + "\n")
    with open(out_dir / "summary.json", "w", encoding="utf-8") as handle:
        json.dump(result.summary, handle, sort_keys=True, indent=2)
        handle.write("\n")


# -- threshold tuning ---------------------------------------------------------

def build_validation_cache(samples: Sequence[Sample], backend: Backend,
                           cfg: RunConfig, corpus: Sequence[CorpusEntry],
                           index: Sequence[IndexRecord],
                           explanations: Sequence[ExplanationRecord]) -> ValidationCache:
    """Precompute plain/augmented correctness for every validation sample.

    Both predictions per sample are computed once (two generation calls), so
    scoring any number of threshold candidates afterwards is pure arithmetic.
    """
    missing_gold = [s.id for s in samples if s.gold_binary is None]
    if missing_gold:
        raise ConfigError(
            f"tuning needs gold labels; missing for {missing_gold[:5]} "
            f"({len(missing_gold)} total)"
        )
    classifier = TokenSupportClassifier(backend, cfg.lexicons)
    plain = _plain_pass(samples, backend, cfg, classifier, logprobs_required=True)
    failed = [sid for sid, res in plain.items() if res.error is not None]
    if failed:
        raise ConfigError(f"plain pass failed for {len(failed)} samples: {failed[:5]}")
    corpus_by_id = {entry.id: entry for entry in corpus}
    augmented = _augment_pass(
        samples, plain, backend, cfg, index, explanations, corpus_by_id
    )
    ids, triples, correct_plain, correct_aug = [], [], [], []
    for sample in sorted(samples, key=lambda s: s.id):
        base = plain[sample.id]
        aug = augmented[sample.id]
        if aug.error is not None:
            raise ConfigError(f"augmented pass failed for {sample.id}: {aug.error}")
        ids.append(sample.id)
        triples.append(base.confidence)
        correct_plain.append(base.pred is sample.gold_binary)
        correct_aug.append(aug.pred is sample.gold_binary)
    return ValidationCache(ids, triples, correct_plain, correct_aug)


def tune(samples: Sequence[Sample], backend: Backend, cfg: RunConfig,
         corpus: Sequence[CorpusEntry], index: Sequence[IndexRecord],
         explanations: Sequence[ExplanationRecord],
         search: Optional[SearchConfig] = None) -> dict:
    """Search trigger thresholds on a labeled validation set.

    Returns the thresholds.json payload: the three thresholds, the
    validation score they achieve, and the search settings that found them.
    """
    search = search or SearchConfig()
    cache = build_validation_cache(samples, backend, cfg, corpus, index, explanations)
    best, best_score = hybrid_search(cache, search)
    return {
        "theta_label": best.theta_label,
        "theta_tok": best.theta_tok,
        "theta_sent": best.theta_sent,
        "val_score": best_score,
        "n_iter": search.n_iter,
        "seed": search.rng_seed,
    }


def load_thresholds(path: Union[str, Path]) -> ThresholdTriple:
    with open(path, "r", encoding="utf-8") as handle:
        obj = json.load(handle)
    try:
        return ThresholdTriple(
            theta_label=float(obj["theta_label"]),
            theta_tok=float(obj["theta_tok"]),
            theta_sent=float(obj["theta_sent"]),
        )
    except KeyError as exc:
        raise ConfigError(f"thresholds file {path} is missing {exc.args[0]!r}") from exc


# -- report recomputation ------------------------------------------------------

def report_from_outcomes(outcomes_path: Union[str, Path],
                         samples: Sequence[Sample]) -> dict:
    """Recompute the summary report from a written outcomes.jsonl file."""
    golds = {s.id: s.gold_binary for s in samples if s.gold_binary is not None}
    by_mode: dict = {}
    with open(outcomes_path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            obj = json.loads(line)
            by_mode.setdefault(obj["mode"], []).append(obj)

    excluded = {
        obj["sample_id"]
        for records in by_mode.values()
        for obj in records
        if obj.get("error")
    }

    def parse_label(value):
        return BinaryLabel.parse(value) if value else None

    def correct_count(records, key):
        return sum(
            1 for obj in records
            if obj["sample_id"] in golds and obj["sample_id"] not in excluded
            and parse_label(obj.get(key)) is golds[obj["sample_id"]]
        )

    any_records = next(iter(by_mode.values()))
    n_no = correct_count(any_records, "plain_pred")
    n_full = correct_count(by_mode["full"], "final_pred") if "full" in by_mode else None

    reports = {}
    for mode_name, records in by_mode.items():
        mode = Mode(mode_name)
        scored = [
            obj for obj in records
            if obj["sample_id"] in golds and obj["sample_id"] not in excluded
        ]
        if not scored:
            reports[mode_name] = {"acc": None, "note": "no gold-labeled samples"}
            continue
        gold_list = [golds[obj["sample_id"]] for obj in scored]
        preds = [
            parse_label(obj.get("final_pred")) or golds[obj["sample_id"]].opposite()
            for obj in scored
        ]
        counts = None
        if mode is not Mode.NO:
            triggered = [obj for obj in scored if obj["triggered"]]
            n_err = sum(
                1 for obj in triggered
                if (parse_label(obj.get("plain_pred")) or
                    golds[obj["sample_id"]].opposite()) is not golds[obj["sample_id"]]
            )
            n_dyn = sum(1 for p, g in zip(preds, gold_list) if p is g)
            counts = RunCounts(
                n_total=len(scored),
                n_retrieved=len(triggered),
                n_err_classified=n_err,
                n_dyn=n_dyn,
                n_full=n_full,
                n_no=n_no,
            )
        reports[mode_name] = build_report(preds, gold_list, counts)
    if len(reports) == 1:
        summary = {"n_excluded": len(excluded)}
        summary.update(next(iter(reports.values())))
        return summary
    return {"n_excluded": len(excluded), "modes": reports}
