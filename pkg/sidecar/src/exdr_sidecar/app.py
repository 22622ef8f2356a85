"""FastAPI application implementing the backend wire protocol.

Endpoints mirror the client contract exactly:

    GET  /health          -> {"status", "embed_dim", "sentence_dim", ...}
    POST /embed_text      {"text"}       -> {"vector": [...]}
    POST /embed_image     {"image_b64"}  -> {"vector": [...]}
    POST /embed_sentence  {"text"}       -> {"vector": [...]}
    POST /ner             {"text"}       -> {"entities": [{"surface","kind"}]}
    POST /generate        {"system","turns","top_k","logprobs"} -> {"text","tokens"}

Schema violations answer 400 (not FastAPI's default 422), oversized bodies
413, and every endpoint answers 503 until the models finish loading.  With
a recorder attached, every served call is appended to a JSONL trace file in
the client's fixture format, keyed by the SHA-256 of the endpoint plus the
canonical (key-sorted, compact) JSON of the request body.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import threading
from contextlib import asynccontextmanager
from typing import List, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def request_key(endpoint: str, payload: dict) -> str:
    digest = hashlib.sha256()
    digest.update(endpoint.encode("ascii"))
    digest.update(b"\n")
    digest.update(canonical_json(payload).encode("utf-8"))
    return digest.hexdigest()


class TraceRecorder:
    """Appends request/response pairs in the fixture JSONL format."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._seen = set()

    def record(self, endpoint: str, payload: dict, response: dict) -> None:
        key = request_key(endpoint, payload)
        line = json.dumps(
            {"endpoint": endpoint, "key": key, "request": payload,
             "response": response},
            sort_keys=True,
        )
        with self._lock:
            if key in self._seen:
                return
            self._seen.add(key)
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line + "\n")


class TextIn(BaseModel):
    text: str = Field(min_length=1)


class ImageIn(BaseModel):
    image_b64: str = Field(min_length=1)


class TurnIn(BaseModel):
    role: str
    text: str
    image_b64: Optional[str] = None


class GenerateIn(BaseModel):
    system: str = ""
    turns: List[TurnIn] = Field(min_length=1)
    top_k: int = Field(default=10, ge=1)
    logprobs: bool = True


def create_app(provider, generator=None, recorder: Optional[TraceRecorder] = None,
               max_request_bytes: int = 32 * 1024 * 1024) -> FastAPI:
    state = {"ready": False}

    @asynccontextmanager
    async def lifespan(_app):
        # Providers are constructed (and models loaded) before the app is
        # served; flipping the flag here keeps the 503 path testable.
        state["ready"] = True
        yield
        state["ready"] = False

    app = FastAPI(title="exdr-sidecar", lifespan=lifespan)

    @app.exception_handler(RequestValidationError)
    async def _validation_as_400(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    @app.middleware("http")
    async def _guards(request: Request, call_next):
        if not state["ready"] and request.url.path != "/health":
            return JSONResponse(status_code=503, content={"error": "loading"})
        length = request.headers.get("content-length")
        if length and int(length) > max_request_bytes:
            return JSONResponse(status_code=413, content={"error": "request too large"})
        return await call_next(request)

    def _serve(endpoint: str, payload: dict, response: dict) -> dict:
        if recorder is not None:
            recorder.record(endpoint, payload, response)
        return response

    @app.get("/health")
    async def health():
        body = {
            "status": "ok" if state["ready"] else "loading",
            "embed_dim": provider.shared_dim,
            "sentence_dim": provider.sentence_dim,
            "provider": provider.name,
            "generator": getattr(generator, "name", None),
        }
        model_ids = getattr(provider, "model_ids", None)
        if model_ids:
            body["models"] = model_ids
        return body

    @app.post("/embed_text")
    async def embed_text(body: TextIn):
        payload = body.model_dump()
        return _serve("embed_text", payload,
                      {"vector": provider.embed_text(body.text)})

    @app.post("/embed_sentence")
    async def embed_sentence(body: TextIn):
        payload = body.model_dump()
        return _serve("embed_sentence", payload,
                      {"vector": provider.embed_sentence(body.text)})

    @app.post("/embed_image")
    async def embed_image(body: ImageIn):
        payload = body.model_dump()
        try:
            raw = base64.b64decode(body.image_b64, validate=True)
        except (binascii.Error, ValueError):
            return JSONResponse(status_code=400, content={"error": "invalid base64"})
        return _serve("embed_image", payload,
                      {"vector": provider.embed_image(raw)})

    @app.post("/ner")
    async def ner(body: TextIn):
        payload = body.model_dump()
        return _serve("ner", payload, {"entities": provider.ner(body.text)})

    @app.post("/generate")
    async def generate(body: GenerateIn):
        if generator is None:
            return JSONResponse(
                status_code=501,
                content={"error": "no generator configured (use --generator)"},
            )
        payload = {
            "system": body.system,
            "turns": [
                {k: v for k, v in t.model_dump().items()
                 if not (k == "image_b64" and v is None)}
                for t in body.turns
            ],
            "top_k": body.top_k,
            "logprobs": body.logprobs,
        }
        response = generator.generate(
            system=body.system,
            turns=payload["turns"],
            top_k=body.top_k,
            logprobs=body.logprobs,
        )
        return _serve("generate", payload, response)

    return app
