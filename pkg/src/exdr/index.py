"""Entity-enriched multimodal hybrid index and the parallel explanation index.

Each corpus entry contributes one fused vector: the average of its image
embedding, claim-text embedding, and the embedding of a comma-joined string
of entities extracted from its explanation, L2-normalized.  A second vector
per entry embeds the explanation itself and backs fine-grained label
inference.  Search is an exact dot-product scan; at corpus scales of a few
thousand entries this is cheaper and more testable than approximate
structures.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .backends import Backend, EntitySpan
from .core import BinaryLabel, CorpusEntry, FineGrainedLabel, binary_of
from .errors import BackendUnavailable, DimMismatch, EmptyPool, ZeroVector

INDEX_FORMAT_VERSION = 1
UNIT_NORM_TOL = 1e-6
_ZERO_NORM_TOL = 1e-12


@dataclass(frozen=True)
class IndexRecord:
    """One searchable corpus vector with its labels."""

    corpus_id: str
    fused: np.ndarray  # unit L2 norm
    fine_label: FineGrainedLabel

    @property
    def binary_label(self) -> BinaryLabel:
        return binary_of(self.fine_label)


@dataclass(frozen=True)
class ExplanationRecord:
    """One unit-normalized explanation vector with its fine label."""

    corpus_id: str
    expl_vec: np.ndarray
    fine_label: FineGrainedLabel


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm < _ZERO_NORM_TOL:
        raise ZeroVector("cannot normalize a (near-)zero vector")
    out = vec / norm
    out.setflags(write=False)
    return out


def fuse_features(v: np.ndarray, t: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Average the three modality vectors and L2-normalize the result.

    Raises DimMismatch when the dims differ and ZeroVector when the average
    has (near-)zero norm.  Symmetric in its three arguments.
    """
    v = np.asarray(v, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if not (v.shape == t.shape == e.shape) or v.ndim != 1:
        raise DimMismatch(
            f"fused inputs must share one dim, got {v.shape}, {t.shape}, {e.shape}"
        )
    return _unit((v + t + e) / 3.0)


def entity_string(entities: Sequence[EntitySpan]) -> str:
    """Comma-join entity surfaces in first-occurrence order."""
    return ", ".join(span.surface for span in entities)


def _vectors_for_entry(entry: CorpusEntry, backend: Backend) -> Tuple[np.ndarray, np.ndarray]:
    v = backend.embed_image(entry.image)
    t = backend.embed_text(entry.text)
    entities = backend.extract_entities(entry.explanation)
    joined = entity_string(entities)
    # No entities: fall back to the claim text so fusion stays a 3-term average.
    e = backend.embed_text(joined if joined else entry.text)
    fused = fuse_features(v, t, e)
    expl = _unit(np.asarray(backend.embed_text(entry.explanation), dtype=np.float64))
    return fused, expl


def build_index(corpus: Sequence[CorpusEntry], backend: Backend,
                jobs: int = 1) -> Tuple[list, list]:
    """Embed every corpus entry into (index records, explanation records).

    Entries embed independently, so the build may run on a worker pool; the
    output is sorted by corpus id either way.  Backend errors are re-raised
    with the offending corpus id attached.
    """
    if not corpus:
        raise ValueError("corpus is empty")

    def one(entry: CorpusEntry):
        try:
            fused, expl = _vectors_for_entry(entry, backend)
        except (BackendUnavailable, DimMismatch, ZeroVector) as exc:
            raise type(exc)(f"corpus entry {entry.id!r}: {exc}") from exc
        return (
            IndexRecord(corpus_id=entry.id, fused=fused, fine_label=entry.fine_label),
            ExplanationRecord(corpus_id=entry.id, expl_vec=expl, fine_label=entry.fine_label),
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(one, corpus))
    else:
        pairs = [one(entry) for entry in corpus]

    pairs.sort(key=lambda pair: pair[0].corpus_id)
    index = [p[0] for p in pairs]
    expl = [p[1] for p in pairs]
    return index, expl


def query_topk(index: Sequence[IndexRecord], q: np.ndarray, k: int,
               where: Optional[Callable[[IndexRecord], bool]] = None) -> list:
    """Top-k records by dot product, optionally filtered.

    Results are (corpus_id, score) sorted by score descending with ties
    broken by corpus id ascending; fewer than k come back when the filter
    thins the pool.  Raises EmptyPool when nothing passes the filter.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pool = [r for r in index if where is None or where(r)]
    if not pool:
        raise EmptyPool("no index record passes the filter")
    matrix = np.stack([r.fused for r in pool])
    scores = matrix @ np.asarray(q, dtype=np.float64)
    ranked = sorted(
        zip((r.corpus_id for r in pool), scores.tolist()),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:k]


# -- persistence ----------------------------------------------------------
#
# Textual format for diff-ability: a JSON header line {"version", "dim",
# "count"} followed by one JSON record per entry, sorted by corpus id.

def save_index(path: Union[str, Path], index: Sequence[IndexRecord],
               explanations: Sequence[ExplanationRecord]) -> None:
    by_id = {r.corpus_id: r for r in explanations}
    if set(by_id) != {r.corpus_id for r in index}:
        raise ValueError("index and explanation records must cover the same ids")
    records = sorted(index, key=lambda r: r.corpus_id)
    dim = int(records[0].fused.size) if records else 0
    with open(path, "w", encoding="utf-8") as handle:
        header = {"version": INDEX_FORMAT_VERSION, "dim": dim, "count": len(records)}
        handle.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            expl = by_id[rec.corpus_id]
            obj = {
                "corpus_id": rec.corpus_id,
                "fused": rec.fused.tolist(),
                "expl": expl.expl_vec.tolist(),
                "fine_label": rec.fine_label.value,
            }
            handle.write(json.dumps(obj, sort_keys=True) + "\n")


def load_index(path: Union[str, Path]) -> Tuple[list, list]:
    """Load a persisted index, re-validating dims and unit norms."""
    index = []
    explanations = []
    with open(path, "r", encoding="utf-8") as handle:
        header_line = handle.readline()
        if not header_line.strip():
            raise ValueError(f"{path}: missing index header")
        header = json.loads(header_line)
        if header.get("version") != INDEX_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported index version {header.get('version')}")
        dim = int(header["dim"])
        for line in handle:
            if not line.strip():
                continue
            obj = json.loads(line)
            fused = np.asarray(obj["fused"], dtype=np.float64)
            expl = np.asarray(obj["expl"], dtype=np.float64)
            for name, vec in (("fused", fused), ("expl", expl)):
                if vec.size != dim:
                    raise DimMismatch(
                        f"{obj['corpus_id']}: {name} dim {vec.size} != header dim {dim}"
                    )
                if abs(float(np.linalg.norm(vec)) - 1.0) > UNIT_NORM_TOL:
                    raise ValueError(
                        f"{obj['corpus_id']}: stored {name} vector is not unit-norm"
                    )
                vec.setflags(write=False)
            fine = FineGrainedLabel.parse(obj["fine_label"])
            index.append(IndexRecord(corpus_id=obj["corpus_id"], fused=fused, fine_label=fine))
            explanations.append(
                ExplanationRecord(corpus_id=obj["corpus_id"], expl_vec=expl, fine_label=fine)
            )
    if len(index) != int(header["count"]):
        raise ValueError(
            f"{path}: header count {header['count']} != {len(index)} records"
        )
    return index, explanations
