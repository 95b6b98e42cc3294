"""HTTP service exposing NLI scoring and sentence splitting.

Endpoints (all JSON, UTF-8, versioned under /v1):

    POST /v1/nli     score premise/hypothesis pairs in one batch
    POST /v1/split   simplify sentences into sub-sentences
    GET  /healthz    200 with model ids once both models are loaded

Configuration comes from the environment:

    MODEL_BACKEND   "stub" selects the deterministic test backends
    NLI_MODEL       checkpoint path or hub id for the cross-encoder
    SPLIT_MODEL     checkpoint path or hub id for the splitter
    MAX_BATCH       largest accepted batch (default 64; above it -> 413)
    MAX_SEQ_LEN     encoder token budget (premise truncated from its end)
    DEVICE          torch device for the real backends (default cpu)

Malformed requests return 400, oversized batches 413, and every endpoint
answers 503 until its model is loaded. Responses preserve request order
and, at fixed weights and greedy decoding, repeated requests yield
identical responses.
"""

from __future__ import annotations

import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .backends import (
    DEFAULT_MAX_TOKENS,
    StubNli,
    StubSplitter,
    TransformersNli,
    TransformersSplitter,
    clamp_splits,
)
from .schemas import (
    HealthResponse,
    NliRequest,
    NliResponse,
    SplitRequest,
    SplitResponse,
    Verdict,
)

DEFAULT_MAX_BATCH = 64


def backends_from_env():
    backend = os.environ.get("MODEL_BACKEND", "")
    max_tokens = int(os.environ.get("MAX_SEQ_LEN", DEFAULT_MAX_TOKENS))
    if backend == "stub":
        return StubNli(max_tokens=max_tokens), StubSplitter()
    nli_ckpt = os.environ.get("NLI_MODEL")
    split_ckpt = os.environ.get("SPLIT_MODEL")
    device = os.environ.get("DEVICE", "cpu")
    nli = (
        TransformersNli(nli_ckpt, max_tokens=max_tokens, device=device)
        if nli_ckpt
        else None
    )
    split = TransformersSplitter(split_ckpt, device=device) if split_ckpt else None
    return nli, split


def create_app(nli_backend=None, split_backend=None, max_batch=None) -> FastAPI:
    """Build the app. Backends given explicitly are used as-is; otherwise
    they are created from the environment at startup (and stay unloaded,
    answering 503, when unconfigured)."""
    explicit = nli_backend is not None or split_backend is not None

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if not explicit and (
            os.environ.get("MODEL_BACKEND") or os.environ.get("NLI_MODEL")
            or os.environ.get("SPLIT_MODEL")
        ):
            app.state.nli, app.state.split = backends_from_env()
        yield

    app = FastAPI(title="nli-server", version="1.0", lifespan=lifespan)
    app.state.nli = nli_backend
    app.state.split = split_backend
    app.state.max_batch = max_batch or int(
        os.environ.get("MAX_BATCH", DEFAULT_MAX_BATCH)
    )

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def error(status: int, message: str):
        return JSONResponse(status_code=status, content={"detail": message})

    @app.get("/healthz")
    async def healthz():
        nli, split = app.state.nli, app.state.split
        if nli is None or split is None:
            missing = [
                name
                for name, backend in (("nli", nli), ("split", split))
                if backend is None
            ]
            return error(503, f"models not loaded: {', '.join(missing)}")
        payload = HealthResponse(
            status="ok",
            model_ids={"nli": nli.model_id, "split": split.model_id},
        )
        return JSONResponse(payload.model_dump())

    @app.post("/v1/nli")
    async def score(request: NliRequest):
        backend = app.state.nli
        if backend is None:
            return error(503, "NLI model not loaded")
        if len(request.pairs) > app.state.max_batch:
            return error(
                413,
                f"batch of {len(request.pairs)} exceeds limit "
                f"{app.state.max_batch}",
            )
        for i, pair in enumerate(request.pairs):
            if not pair.premise.strip():
                return error(400, f"pair {i}: empty premise")
            if not pair.hypothesis.strip():
                return error(400, f"pair {i}: empty hypothesis")
        triples, truncated = backend.score_pairs(
            [(p.premise, p.hypothesis) for p in request.pairs]
        )
        payload = NliResponse(
            verdicts=[
                Verdict(entailment=e, neutral=u, contradiction=c)
                for e, u, c in triples
            ],
            model_id=backend.model_id,
            truncated=truncated,
        )
        return JSONResponse(payload.model_dump())

    @app.post("/v1/split")
    async def split(request: SplitRequest):
        backend = app.state.split
        if backend is None:
            return error(503, "split model not loaded")
        if len(request.sentences) > app.state.max_batch:
            return error(
                413,
                f"batch of {len(request.sentences)} exceeds limit "
                f"{app.state.max_batch}",
            )
        for i, sentence in enumerate(request.sentences):
            if not sentence.strip():
                return error(400, f"sentence {i} is blank")
        splits = clamp_splits(request.sentences, backend.split(request.sentences))
        payload = SplitResponse(splits=splits, model_id=backend.model_id)
        return JSONResponse(payload.model_dump())

    return app


app = create_app()
