"""HTTP surface: /score_evidence, /classify_verdict, /info.

Wire protocol:

  POST /score_evidence   {"pairs": [{"claim": str, "sentence": str}, ...]}
                      -> {"scores": [float in (0,1), ...]}   (same length/order)
  POST /classify_verdict {"items": [{"claim": str, "evidence": [str, ...]}, ...]}
                      -> {"verdicts": [{"label": str, "probs": [ps, pr, pn]}, ...]}
  GET  /info          -> {"models", "max_batch", "max_sequence_length", "version"}

Errors: 400 malformed body, 413 batch larger than max_batch, 503 while
models are still loading.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .config import ServiceConfig, VERDICT_LABELS
from .models import EvidenceScorer, VerdictClassifier


class ScorePair(BaseModel):
    claim: str
    sentence: str


class ScoreRequest(BaseModel):
    pairs: list[ScorePair]


class VerdictItem(BaseModel):
    claim: str
    evidence: list[str]


class VerdictRequest(BaseModel):
    items: list[VerdictItem]


def create_app(config: ServiceConfig, load_models: bool = True) -> FastAPI:
    """Build the service; models load eagerly so startup fails fast.

    load_models=False leaves the service in the not-ready state (both
    endpoints answer 503), which is also how requests racing a slow
    startup are treated.
    """
    app = FastAPI(title="scorer-service", version=__version__)
    app.state.config = config
    app.state.evidence_scorer = None
    app.state.verdict_classifier = None

    if load_models:
        app.state.evidence_scorer = EvidenceScorer(
            config.evidence_model, config.device, config.max_sequence_length
        )
        app.state.verdict_classifier = VerdictClassifier(
            config.verdict_model, config.device, config.max_sequence_length
        )

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    def not_ready() -> JSONResponse | None:
        if app.state.evidence_scorer is None or app.state.verdict_classifier is None:
            return JSONResponse(status_code=503, content={"error": "models are loading"})
        return None

    def oversize(n: int) -> JSONResponse | None:
        if n > config.max_batch:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {n} exceeds max_batch={config.max_batch}"},
            )
        return None

    @app.post("/score_evidence")
    def score_evidence(request: ScoreRequest):
        guard = not_ready() or oversize(len(request.pairs))
        if guard is not None:
            return guard
        scores = app.state.evidence_scorer.score(
            [(p.claim, p.sentence) for p in request.pairs]
        )
        return {"scores": scores}

    @app.post("/classify_verdict")
    def classify_verdict(request: VerdictRequest):
        guard = not_ready() or oversize(len(request.items))
        if guard is not None:
            return guard
        verdicts = app.state.verdict_classifier.classify(
            [(item.claim, item.evidence) for item in request.items]
        )
        return {"verdicts": verdicts}

    @app.get("/info")
    def info():
        return {
            "models": {
                "evidence": config.evidence_model,
                "verdict": config.verdict_model,
            },
            "max_batch": config.max_batch,
            "max_sequence_length": config.max_sequence_length,
            "version": __version__,
            "verdict_label_order": list(VERDICT_LABELS),
            "truncation": "evidence only; the claim is never truncated",
        }

    return app
