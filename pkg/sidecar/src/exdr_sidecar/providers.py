"""Model providers behind the sidecar endpoints.

Two families:

* :class:`RealModelProvider` wraps an image-text encoder pair sharing one
  space, a sentence encoder, and a pretrained NER tagger (all loaded from
  local caches or the model hub).
* :class:`HashedProvider` is fully deterministic and dependency-free:
  embeddings are derived from SHA-256 streams over the input bytes and NER
  is a capitalization heuristic.  It exists so the service, its wire
  protocol, and record/replay can be exercised on machines without model
  weights; the vectors carry no semantics.

Both expose the same surface: embed_text / embed_image / embed_sentence /
ner, plus the two dims advertised by /health.
"""

from __future__ import annotations

import hashlib
import math
import re
import struct
from typing import List, Optional, Sequence

import numpy as np

DEFAULT_SHARED_MODEL = "sentence-transformers/clip-ViT-B-32"
DEFAULT_SENTENCE_MODEL = "sentence-transformers/all-MiniLM-L6-v2"
DEFAULT_NER_MODEL = "dslim/bert-base-NER"


def _hash_floats(key: bytes, n: int) -> np.ndarray:
    """n floats in [-1, 1), derived from a counter-mode SHA-256 stream.

    Independent of any RNG library, so the output is stable across
    platforms and versions.
    """
    out = np.empty(n, dtype=np.float64)
    block = 0
    filled = 0
    while filled < n:
        digest = hashlib.sha256(key + block.to_bytes(8, "big")).digest()
        for offset in range(0, 32, 8):
            if filled >= n:
                break
            (value,) = struct.unpack_from(">Q", digest, offset)
            out[filled] = value / 2 ** 63 - 1.0
            filled += 1
        block += 1
    return out


# Words never treated as entity heads by the heuristic tagger.
_CAP_STOPWORDS = {
    "the", "a", "an", "this", "that", "these", "those", "it", "its",
    "he", "she", "they", "we", "i", "you", "his", "her", "their", "our",
    "in", "on", "at", "and", "or", "but", "if", "when", "while", "after",
}
_TOKEN_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9'-]*")


class HashedProvider:
    """Deterministic offline provider; no semantics, full reproducibility."""

    name = "hashed"

    def __init__(self, shared_dim: int = 64, sentence_dim: int = 48):
        self.shared_dim = shared_dim
        self.sentence_dim = sentence_dim

    def embed_text(self, text: str) -> List[float]:
        return _hash_floats(b"text:" + text.encode("utf-8"), self.shared_dim).tolist()

    def embed_image(self, image: bytes) -> List[float]:
        return _hash_floats(b"image:" + image, self.shared_dim).tolist()

    def embed_sentence(self, text: str) -> List[float]:
        return _hash_floats(b"sentence:" + text.encode("utf-8"),
                            self.sentence_dim).tolist()

    def ner(self, text: str) -> List[dict]:
        """Capitalized-run heuristic: consecutive capitalized tokens merge
        into one span; leading stopwords never start a span."""
        spans = []
        current: List[str] = []

        def flush():
            if current:
                spans.append({"surface": " ".join(current), "kind": "MISC"})
                current.clear()

        for match in _TOKEN_RE.finditer(text):
            word = match.group(0)
            capitalized = word[0].isupper()
            if capitalized and word.lower() not in _CAP_STOPWORDS:
                current.append(word)
            else:
                flush()
        flush()
        return spans


class StubGenerator:
    """Deterministic parseable generation for offline end-to-end runs.

    The verdict word is a parity bit of the request hash; the token stream
    concatenates exactly to the text and carries top candidates at the
    verdict position, so the client side can exercise its full logprob
    machinery without a model.
    """

    name = "stub"

    _REAL_FILLERS = ("genuine", "true", "accurate", "fact")
    _FAKE_FILLERS = ("false", "fabric", "fraud", "fictional")

    def generate(self, system: str, turns: Sequence[dict], top_k: int,
                 logprobs: bool) -> dict:
        hasher = hashlib.sha256()
        hasher.update(system.encode("utf-8"))
        for turn in turns:
            hasher.update(b"\x00" + turn.get("role", "").encode("utf-8"))
            hasher.update(b"\x01" + turn.get("text", "").encode("utf-8"))
            hasher.update(b"\x02" + turn.get("image_b64", "").encode("ascii"))
        digest = hasher.digest()
        verdict = "real" if digest[0] % 2 == 0 else "fake"
        other = "fake" if verdict == "real" else "real"
        fillers = self._REAL_FILLERS if verdict == "real" else self._FAKE_FILLERS

        p_verdict = 0.55 + 0.4 * (digest[1] / 255.0)      # in [0.55, 0.95]
        p_other = (1.0 - p_verdict) * 0.5
        explanation = (
            "the evidence aligns with the claim"
            if verdict == "real"
            else "the evidence contradicts the claim"
        )
        top = [{"t": verdict, "logprob": math.log(p_verdict)},
               {"t": other, "logprob": math.log(p_other)}]
        top += [{"t": w, "logprob": math.log(0.01) - 0.1 * i}
                for i, w in enumerate(fillers)]
        top = top[: max(1, top_k)]

        words = ["The", " pair", " is", f" {verdict}", " because"]
        words += [f" {w}" for w in explanation.split()]
        words.append(".")
        tokens = []
        for i, word in enumerate(words):
            lp = math.log(p_verdict) if i == 3 else -0.05 - 0.001 * (digest[2] / 255.0)
            obj = {"t": word, "logprob": lp}
            if i == 3:
                obj["top"] = top
            tokens.append(obj)
        text = "".join(words)
        result = {"text": text}
        if logprobs:
            result["tokens"] = tokens
        return result


class ProxyGenerator:
    """Forwards /generate bodies verbatim to an upstream server."""

    name = "proxy"

    def __init__(self, upstream_url: str, timeout: float = 300.0):
        self.upstream_url = upstream_url.rstrip("/")
        self.timeout = timeout

    def generate(self, system: str, turns: Sequence[dict], top_k: int,
                 logprobs: bool) -> dict:
        import requests

        resp = requests.post(
            f"{self.upstream_url}/generate",
            json={"system": system, "turns": list(turns),
                  "top_k": top_k, "logprobs": logprobs},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return resp.json()


class RealModelProvider:
    """Pretrained encoders and tagger; needs the optional [real] extras."""

    name = "real"

    def __init__(self, shared_model: str = DEFAULT_SHARED_MODEL,
                 sentence_model: str = DEFAULT_SENTENCE_MODEL,
                 ner_model: str = DEFAULT_NER_MODEL,
                 device: Optional[str] = None):
        try:
            from sentence_transformers import SentenceTransformer
            from transformers import pipeline
        except ImportError as exc:  # pragma: no cover - environment-dependent
            raise RuntimeError(
                "real models need the [real] extras (sentence-transformers, "
                "transformers, torch, Pillow)"
            ) from exc
        self.model_ids = {
            "shared": shared_model, "sentence": sentence_model, "ner": ner_model,
        }
        self._shared = SentenceTransformer(shared_model, device=device)
        self._sentence = SentenceTransformer(sentence_model, device=device)
        self._ner = pipeline("ner", model=ner_model, aggregation_strategy="simple",
                             device=-1 if device in (None, "cpu") else 0)
        self.shared_dim = int(self._shared.encode(["probe"]).shape[1])
        self.sentence_dim = int(self._sentence.encode(["probe"]).shape[1])

    def embed_text(self, text: str) -> List[float]:
        return self._shared.encode([text])[0].astype(float).tolist()

    def embed_image(self, image: bytes) -> List[float]:
        import io

        from PIL import Image

        pil = Image.open(io.BytesIO(image)).convert("RGB")
        return self._shared.encode([pil])[0].astype(float).tolist()

    def embed_sentence(self, text: str) -> List[float]:
        return self._sentence.encode([text])[0].astype(float).tolist()

    def ner(self, text: str) -> List[dict]:
        return [
            {"surface": str(e["word"]), "kind": str(e.get("entity_group", ""))}
            for e in self._ner(text)
        ]
