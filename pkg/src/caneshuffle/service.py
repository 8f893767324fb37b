"""HTTP diagnosis service: upload a leaf image, get top-5 classes, Grad-CAM,
and three-section treatment advice.

The loaded model is immutable and shared across requests; every forward pass
owns its own activation buffers, so concurrent /predict calls are safe.
"""

from __future__ import annotations

import base64
import logging
import time

import httpx
import numpy as np
from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import gradcam
from .classes import CLASS_NAMES
from .curation import preprocess
from .errors import FormatError
from .knowledge import Recommendation, recommend
from .tensorops import softmax
from .weights import container_checksum, load_weights

MAX_UPLOAD_BYTES = 10 * 1024 * 1024
RECO_TIMEOUT_S = 5.0
TOP_K = 5

log = logging.getLogger(__name__)


class RecommendRequest(BaseModel):
    disease: str


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _fetch_remote_recommendation(endpoint: str, key: str | None,
                                 disease: str) -> Recommendation | None:
    headers = {"Authorization": f"Bearer {key}"} if key else {}
    try:
        resp = httpx.post(endpoint, json={"disease": disease}, headers=headers,
                          timeout=RECO_TIMEOUT_S)
        resp.raise_for_status()
        body = resp.json()
        sections = body["sections"]
        reco = Recommendation(
            disease=disease,
            cause=str(sections["cause"]),
            immediate_steps=str(sections["immediate_steps"]),
            long_term_control=str(sections["long_term_control"]),
            source="remote",
        )
        if not (reco.cause and reco.immediate_steps and reco.long_term_control):
            raise ValueError("empty section in remote response")
        return reco
    except Exception as exc:
        log.warning("remote recommendation provider failed (%s); using local KB", exc)
        return None


def create_app(model=None, container_bytes: bytes | None = None,
               reco_endpoint: str | None = None, reco_key: str | None = None,
               ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="sugarcane leaf diagnosis service")
    app.state.model = model
    app.state.checksum = container_checksum(container_bytes) if container_bytes else None
    app.state.reco_endpoint = reco_endpoint
    app.state.reco_key = reco_key

    @app.get("/health")
    def health():
        ready = app.state.model is not None
        return {
            "status": "ok" if ready else "loading",
            "checksum": app.state.checksum,
            "version": 1,
        }

    @app.get("/classes")
    def classes():
        return list(CLASS_NAMES)

    @app.post("/predict")
    async def predict(file: UploadFile = File(...)):
        if app.state.model is None:
            raise _error(503, "model_not_loaded", "model is still loading")
        data = await file.read()
        if len(data) > MAX_UPLOAD_BYTES:
            raise _error(413, "payload_too_large",
                         f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        try:
            x = preprocess(data)
        except FormatError as exc:
            raise _error(400, "undecodable_image", str(exc))

        t0 = time.perf_counter()
        mdl = app.state.model
        logits = mdl.forward(x)[0]
        probs = softmax(logits)
        order = np.argsort(-probs, kind="stable")[:TOP_K]
        cam = gradcam.gradcam_map(mdl, x, int(order[0]))
        latency_ms = (time.perf_counter() - t0) * 1000.0

        top5 = [{"class": CLASS_NAMES[int(i)], "confidence": float(probs[i])} for i in order]
        return {
            "top1": top5[0],
            "top5": top5,
            "gradcam": base64.b64encode(cam.overlay_png).decode("ascii"),
            "latency_ms": latency_ms,
        }

    @app.post("/recommend")
    def recommend_endpoint(req: RecommendRequest):
        if req.disease not in CLASS_NAMES:
            raise _error(404, "unknown_disease", f"unknown disease {req.disease!r}")
        reco = None
        if app.state.reco_endpoint:
            reco = _fetch_remote_recommendation(app.state.reco_endpoint,
                                                app.state.reco_key, req.disease)
        if reco is None:
            reco = recommend(req.disease)
        return reco.to_dict()

    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def app_from_container(path: str, **kwargs) -> FastAPI:
    with open(path, "rb") as fh:
        data = fh.read()
    model = load_weights(data)
    return create_app(model=model, container_bytes=data, **kwargs)
