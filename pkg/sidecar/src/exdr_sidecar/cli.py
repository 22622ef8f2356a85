"""`exdr-sidecar` entry point."""

from __future__ import annotations

import argparse

import uvicorn

from .app import TraceRecorder, create_app
from .providers import (
    DEFAULT_NER_MODEL,
    DEFAULT_SENTENCE_MODEL,
    DEFAULT_SHARED_MODEL,
    HashedProvider,
    ProxyGenerator,
    RealModelProvider,
    StubGenerator,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exdr-sidecar",
        description="Serve the embedding/NER/generation wire protocol.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8722)
    parser.add_argument(
        "--models", choices=["real", "hashed"], default="real",
        help="real pretrained models, or the deterministic offline provider",
    )
    parser.add_argument("--shared-model", default=DEFAULT_SHARED_MODEL,
                        help="image-text encoder id (shared space)")
    parser.add_argument("--sentence-model", default=DEFAULT_SENTENCE_MODEL)
    parser.add_argument("--ner-model", default=DEFAULT_NER_MODEL)
    parser.add_argument("--device", default=None, help="device hint, e.g. cpu or cuda")
    parser.add_argument(
        "--generator", choices=["off", "stub", "proxy"], default="off",
        help="how to answer /generate: not at all, deterministic stub, or proxy",
    )
    parser.add_argument("--upstream", default=None,
                        help="upstream base URL for --generator proxy")
    parser.add_argument("--record", default=None, metavar="PATH",
                        help="append served request/response pairs to a fixture file")
    parser.add_argument("--max-request-mb", type=int, default=32)
    return parser


def app_from_args(args) -> "fastapi.FastAPI":  # noqa: F821 - hint only
    if args.models == "hashed":
        provider = HashedProvider()
    else:
        provider = RealModelProvider(
            shared_model=args.shared_model,
            sentence_model=args.sentence_model,
            ner_model=args.ner_model,
            device=args.device,
        )
    generator = None
    if args.generator == "stub":
        generator = StubGenerator()
    elif args.generator == "proxy":
        if not args.upstream:
            raise SystemExit("--generator proxy needs --upstream URL")
        generator = ProxyGenerator(args.upstream)
    recorder = TraceRecorder(args.record) if args.record else None
    return create_app(
        provider, generator=generator, recorder=recorder,
        max_request_bytes=args.max_request_mb * 1024 * 1024,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    app = app_from_args(args)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
