"""Model backends: generation, embeddings, and entity tagging.

All model specifics live behind one abstract contract with two
implementations:

* :class:`HttpBackend` speaks a small JSON-over-HTTP protocol (one POST per
  call) to any conforming server, e.g. the bundled sidecar service.
* :class:`FixtureBackend` replays recorded traces from a JSONL file keyed by
  a content hash of the request, so tests and offline runs never touch a
  model.

Wire protocol (request -> response bodies):

    POST /generate       {"system", "turns": [{"role","text","image_b64"?}],
                          "top_k", "logprobs"}        -> {"text", "tokens":
                          [{"t","logprob","top":[{"t","logprob"}]}]}
    POST /embed_text     {"text"}      -> {"vector": [...]}
    POST /embed_image    {"image_b64"} -> {"vector": [...]}
    POST /embed_sentence {"text"}      -> {"vector": [...]}
    POST /ner            {"text"}      -> {"entities": [{"surface","kind"}]}

Fixture trace format: JSONL, one object per line:

    {"endpoint": "embed_text", "key": "<sha256 of endpoint + canonical
     request JSON>", "request": {...}, "response": {...}}

The image half of the shared embedding space is keyed by raw bytes: an
ImageRef naming an existing file contributes that file's bytes, any other
ref contributes its own UTF-8 bytes (opaque-id mode for synthetic worlds).
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import requests

from .core import ImageRef, ModelResponse, TokenInfo, parse_response
from .errors import BackendUnavailable, DimMismatch, FixtureMiss, MissingLogprobs

DEFAULT_TOP_K = 10


@dataclass(frozen=True)
class EntitySpan:
    """A named entity surface form with the tagger's kind string."""

    surface: str
    kind: str = ""

    def __post_init__(self):
        if not self.surface:
            raise ValueError("entity surface must be non-empty")


@dataclass(frozen=True)
class Turn:
    role: str  # "user" or "assistant"
    text: str
    image: Optional[ImageRef] = None


@dataclass(frozen=True)
class GenerationRequest:
    """A chat-style generation request with optional images per user turn."""

    system: str
    turns: tuple  # tuple[Turn, ...]
    want_top_candidates: int = DEFAULT_TOP_K
    want_logprobs: bool = True

    def __post_init__(self):
        if not self.turns:
            raise ValueError("generation request needs at least one turn")


def image_bytes(ref: ImageRef) -> bytes:
    """Bytes backing an image reference (file contents, or the ref itself)."""
    path = Path(ref)
    try:
        if path.is_file():
            return path.read_bytes()
    except OSError:
        pass
    return ref.encode("utf-8")


def canonical_json(payload: dict) -> str:
    """Key-sorted, whitespace-free JSON; the hashing base for trace keys."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def request_key(endpoint: str, payload: dict) -> str:
    """Content hash identifying one request on one endpoint."""
    digest = hashlib.sha256()
    digest.update(endpoint.encode("ascii"))
    digest.update(b"\n")
    digest.update(canonical_json(payload).encode("utf-8"))
    return digest.hexdigest()


def generation_payload(req: GenerationRequest) -> dict:
    """The exact /generate request body for a :class:`GenerationRequest`."""
    turns = []
    for turn in req.turns:
        item = {"role": turn.role, "text": turn.text}
        if turn.image is not None:
            item["image_b64"] = base64.b64encode(image_bytes(turn.image)).decode("ascii")
        turns.append(item)
    return {
        "system": req.system,
        "turns": turns,
        "top_k": req.want_top_candidates,
        "logprobs": req.want_logprobs,
    }


def _dedup_entities(raw: Sequence[EntitySpan]) -> list:
    # First occurrence wins; duplicates compared case-insensitively.
    seen = set()
    out = []
    for span in raw:
        key = span.surface.lower()
        if key in seen:
            continue
        seen.add(key)
        out.append(span)
    return out


def _as_vector(values: Sequence[float], endpoint: str) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise BackendUnavailable(f"{endpoint}: response vector is not a 1-d array")
    if not np.all(np.isfinite(vec)):
        raise BackendUnavailable(f"{endpoint}: response vector contains NaN/Inf")
    vec.setflags(write=False)
    return vec


class Backend(ABC):
    """Contract shared by every backend implementation.

    Image, text, and entity embeddings live in one shared space whose dim is
    fixed for the session; sentence embeddings are a separate space.  All
    calls are deterministic for fixed inputs, and implementations must be
    safe to call from concurrent workers.
    """

    def __init__(self):
        self._dims = {}  # space name -> declared dim

    def _check_dim(self, space: str, vec: np.ndarray) -> np.ndarray:
        declared = self._dims.get(space)
        if declared is None:
            self._dims[space] = vec.size
        elif vec.size != declared:
            raise DimMismatch(
                f"{space} embedding dim changed mid-session: {declared} -> {vec.size}"
            )
        return vec

    @property
    def embed_dim(self) -> Optional[int]:
        """Dim of the shared image-text space, once observed."""
        return self._dims.get("shared")

    @abstractmethod
    def _call(self, endpoint: str, payload: dict) -> dict:
        """Execute one wire-level request and return the response object."""

    def generate(self, req: GenerationRequest) -> ModelResponse:
        payload = generation_payload(req)
        raw = self._call("generate", payload)
        text = raw.get("text", "")
        wire_tokens = raw.get("tokens")
        if req.want_logprobs and not wire_tokens:
            raise MissingLogprobs("backend returned no token logprobs")
        tokens = tuple(TokenInfo.from_wire(obj) for obj in (wire_tokens or ()))
        return parse_response(text, tokens, top_k=req.want_top_candidates)

    def embed_text(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("embed_text requires non-empty input")
        raw = self._call("embed_text", {"text": text})
        return self._check_dim("shared", _as_vector(raw["vector"], "embed_text"))

    def embed_image(self, image: ImageRef) -> np.ndarray:
        payload = {"image_b64": base64.b64encode(image_bytes(image)).decode("ascii")}
        raw = self._call("embed_image", payload)
        return self._check_dim("shared", _as_vector(raw["vector"], "embed_image"))

    def embed_sentence(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("embed_sentence requires non-empty input")
        raw = self._call("embed_sentence", {"text": text})
        return self._check_dim("sentence", _as_vector(raw["vector"], "embed_sentence"))

    def extract_entities(self, text: str) -> list:
        if not text:
            return []
        raw = self._call("ner", {"text": text})
        spans = [
            EntitySpan(surface=str(e["surface"]), kind=str(e.get("kind", "")))
            for e in raw.get("entities", [])
            if str(e.get("surface", ""))
        ]
        return _dedup_entities(spans)


class HttpBackend(Backend):
    """JSON-over-HTTP client with bounded retries and exponential backoff."""

    def __init__(self, base_url: Optional[str] = None, retries: int = 3, backoff: float = 0.5,
                 timeout: float = 120.0):
        super().__init__()
        base_url = base_url or os.environ.get("EXDR_BACKEND_URL")
        if not base_url:
            raise BackendUnavailable(
                "no backend URL configured (flag --backend-url or env EXDR_BACKEND_URL)"
            )
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self._session = requests.Session()

    def _call(self, endpoint: str, payload: dict) -> dict:
        url = f"{self.base_url}/{endpoint}"
        last_error = None
        for attempt in range(self.retries):
            try:
                resp = self._session.post(url, json=payload, timeout=self.timeout)
                if resp.status_code >= 500:
                    last_error = f"HTTP {resp.status_code}"
                elif resp.status_code >= 400:
                    raise BackendUnavailable(
                        f"{endpoint}: server rejected request (HTTP {resp.status_code}): "
                        f"{resp.text[:200]}"
                    )
                else:
                    return resp.json()
            except (requests.ConnectionError, requests.Timeout, ValueError) as exc:
                last_error = repr(exc)
            if attempt + 1 < self.retries:
                time.sleep(self.backoff * (2 ** attempt))
        raise BackendUnavailable(f"{endpoint}: backend unreachable ({last_error})")


class FixtureBackend(Backend):
    """Deterministic record/replay backend.

    Traces are stored in memory as {(endpoint, key): response} and can be
    loaded from / saved to the JSONL fixture format.  Every served call is
    appended to :attr:`calls` so tests can assert call budgets.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        super().__init__()
        self._traces = {}
        self._requests = {}  # kept only for save() debuggability
        self.calls = []  # list of (endpoint, key)
        if path is not None:
            self.load(path)

    # -- trace management ------------------------------------------------

    def put(self, endpoint: str, payload: dict, response: dict) -> str:
        key = request_key(endpoint, payload)
        self._traces[(endpoint, key)] = response
        self._requests[(endpoint, key)] = payload
        return key

    def load(self, path: Union[str, Path]) -> None:
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                obj = json.loads(line)
                endpoint = obj["endpoint"]
                request = obj.get("request")
                key = obj.get("key")
                if key is None:
                    if request is None:
                        raise ValueError("fixture record needs a key or a request")
                    key = request_key(endpoint, request)
                self._traces[(endpoint, key)] = obj["response"]
                if request is not None:
                    self._requests[(endpoint, key)] = request

    def save(self, path: Union[str, Path]) -> None:
        records = []
        for (endpoint, key), response in self._traces.items():
            record = {"endpoint": endpoint, "key": key, "response": response}
            request = self._requests.get((endpoint, key))
            if request is not None:
                record["request"] = request
            records.append(record)
        records.sort(key=lambda r: (r["endpoint"], r["key"]))
        with open(path, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record, sort_keys=True) + "\n")

    # -- convenience writers used by tests and world builders -------------

    def set_text_vector(self, text: str, vector: Sequence[float]) -> None:
        self.put("embed_text", {"text": text}, {"vector": list(vector)})

    def set_image_vector(self, image: ImageRef, vector: Sequence[float]) -> None:
        payload = {"image_b64": base64.b64encode(image_bytes(image)).decode("ascii")}
        self.put("embed_image", payload, {"vector": list(vector)})

    def set_sentence_vector(self, text: str, vector: Sequence[float]) -> None:
        self.put("embed_sentence", {"text": text}, {"vector": list(vector)})

    def set_entities(self, text: str, entities: Sequence) -> None:
        wire = []
        for ent in entities:
            if isinstance(ent, EntitySpan):
                wire.append({"surface": ent.surface, "kind": ent.kind})
            elif isinstance(ent, str):
                wire.append({"surface": ent, "kind": ""})
            else:
                wire.append(dict(ent))
        self.put("ner", {"text": text}, {"entities": wire})

    def set_generation(self, req: GenerationRequest, text: str, tokens: Sequence[dict]) -> None:
        self.put("generate", generation_payload(req), {"text": text, "tokens": list(tokens)})

    # -- replay ------------------------------------------------------------

    def _call(self, endpoint: str, payload: dict) -> dict:
        key = request_key(endpoint, payload)
        self.calls.append((endpoint, key))
        try:
            return self._traces[(endpoint, key)]
        except KeyError:
            hint = canonical_json(payload)
            if len(hint) > 160:
                hint = hint[:160] + "..."
            raise FixtureMiss(f"no trace for {endpoint} request {hint}") from None

    def generate_call_counts(self) -> dict:
        """Map of generation request key -> number of times it was served."""
        counts = {}
        for endpoint, key in self.calls:
            if endpoint == "generate":
                counts[key] = counts.get(key, 0) + 1
        return counts


def make_backend(kind: str, *, url: Optional[str] = None,
                 fixtures: Optional[Union[str, Path]] = None) -> Backend:
    """Build a backend from CLI-style selection flags."""
    if kind == "http":
        return HttpBackend(base_url=url)
    if kind == "fixture":
        if fixtures is None:
            raise ValueError("fixture backend needs --fixtures PATH")
        return FixtureBackend(fixtures)
    raise ValueError(f"unknown backend kind: {kind!r}")
