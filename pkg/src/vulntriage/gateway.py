"""Local REST gateway serving severity predictions over HTTP.

Two backend kinds hang off one route surface: the in-process baseline
(loads a model artifact and scores directly) and an external runtime (a
worker subprocess speaking line-delimited JSON on stdio, launched from a
spec file). Both reduce to "text in, four logits out"; the gateway owns
softmax, label choice and error mapping.
"""

from __future__ import annotations

import json
import os
import re
import select
import subprocess
import threading
import time
from dataclasses import dataclass
from datetime import datetime
from typing import Sequence

import numpy as np
from contextlib import asynccontextmanager
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .classifier.features import featurize
from .classifier.model import load_model
from .records import utc_now
from .severity import LABEL_ORDER

MAX_TEXT_CHARS = 65536
_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")

BACKEND_KINDS = ("native_baseline", "external_runtime")


class GatewayError(Exception):
    """Gateway cannot start with the given backends."""


class BackendError(Exception):
    """A backend failed to produce logits for a request."""


@dataclass(frozen=True)
class BackendSpec:
    """One model to expose: route name, backend kind, artifact location."""

    name: str
    kind: str
    artifact_path: str

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise GatewayError(
                f"model name {self.name!r} is not URL-safe (letters, digits, . _ - only)"
            )
        if self.kind not in BACKEND_KINDS:
            raise GatewayError(f"backend kind {self.kind!r} not one of {BACKEND_KINDS}")


class NativeBaselineBackend:
    """In-process scoring from a model artifact."""

    kind = "native_baseline"

    def __init__(self, spec: BackendSpec):
        self.spec = spec
        self.model = load_model(spec.artifact_path)
        self.loaded_at = utc_now()

    def predict_logits(self, text: str) -> list[float]:
        indices, values = featurize(text, self.model.feature_space, self.model.tokenizer)
        return [float(x) for x in self.model.logits_for(indices, values)]

    def close(self) -> None:
        pass


class ExternalRuntimeBackend:
    """Scoring via a worker subprocess speaking JSON lines on stdio.

    The artifact is a launch spec: a JSON file {"argv": [...]}. The
    worker receives {"text": ...} per line and must answer one line
    {"logits": [l0, l1, l2, l3]} in low-to-critical order. Requests are
    serialized through a lock; one in flight at a time.
    """

    kind = "external_runtime"

    def __init__(self, spec: BackendSpec, timeout: float = 30.0):
        self.spec = spec
        self.timeout = timeout
        self._lock = threading.Lock()
        try:
            with open(spec.artifact_path, "r", encoding="utf-8") as fh:
                launch = json.load(fh)
            argv = launch["argv"]
            if not isinstance(argv, list) or not argv or not all(isinstance(a, str) for a in argv):
                raise ValueError("argv must be a non-empty list of strings")
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
            raise GatewayError(f"{spec.name}: bad launch spec {spec.artifact_path}: {e}") from None
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                cwd=os.path.dirname(os.path.abspath(spec.artifact_path)),
                text=True,
            )
        except OSError as e:
            raise GatewayError(f"{spec.name}: cannot launch worker {argv[0]!r}: {e}") from None
        # Startup probe: a real predict, so a broken worker fails the
        # gateway at boot rather than on the first user request.
        try:
            self.predict_logits("startup probe")
        except BackendError as e:
            self.close()
            raise GatewayError(f"{spec.name}: worker failed startup probe: {e}") from None
        self.loaded_at = utc_now()

    def _read_line(self) -> str:
        deadline = time.monotonic() + self.timeout
        buf = ""
        stream = self._proc.stdout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendError(f"worker did not answer within {self.timeout}s")
            ready, _, _ = select.select([stream], [], [], min(remaining, 0.25))
            if not ready:
                if self._proc.poll() is not None:
                    raise BackendError(f"worker exited with code {self._proc.returncode}")
                continue
            ch = stream.readline()
            if ch == "":
                raise BackendError("worker closed its output stream")
            buf += ch
            if buf.endswith("\n"):
                return buf

    def predict_logits(self, text: str) -> list[float]:
        with self._lock:
            if self._proc.poll() is not None:
                raise BackendError(f"worker exited with code {self._proc.returncode}")
            try:
                self._proc.stdin.write(json.dumps({"text": text}, ensure_ascii=False) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as e:
                raise BackendError(f"cannot reach worker: {e}") from None
            line = self._read_line()
        try:
            answer = json.loads(line)
            logits = answer["logits"]
            if len(logits) != len(LABEL_ORDER):
                raise ValueError(f"expected {len(LABEL_ORDER)} logits, got {len(logits)}")
            return [float(x) for x in logits]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise BackendError(f"worker answered malformed line: {e}") from None

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class PredictRequest(BaseModel):
    text: str = Field(
        min_length=1,
        max_length=MAX_TEXT_CHARS,
        description="Advisory text to classify.",
        examples=["A buffer overflow allows remote attackers to execute arbitrary code."],
    )


class PredictResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: str
    label: str
    scores: dict[str, float] = Field(
        description="Class probabilities keyed by severity, low to critical."
    )
    inference_ms: float


class ModelInfo(BaseModel):
    name: str
    kind: str
    loaded_at: datetime


def _build_backend(spec: BackendSpec):
    if spec.kind == "native_baseline":
        return NativeBaselineBackend(spec)
    return ExternalRuntimeBackend(spec)


def create_app(specs: Sequence[BackendSpec]) -> FastAPI:
    """Assemble the FastAPI app, loading every backend eagerly."""
    if not specs:
        raise GatewayError("no models configured")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise GatewayError(f"duplicate model names in config: {sorted(names)}")
    backends = {}
    try:
        for spec in specs:
            backends[spec.name] = _build_backend(spec)
    except Exception:
        for b in backends.values():
            b.close()
        raise

    @asynccontextmanager
    async def _lifespan(app: FastAPI):
        yield
        for b in backends.values():
            b.close()

    app = FastAPI(title="vulntriage gateway", version="1.0", lifespan=_lifespan)
    app.state.backends = backends

    @app.exception_handler(Exception)
    async def _unhandled(request: Request, exc: Exception):
        # Keep the service alive; surface the failure as a 500 payload.
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "models": sorted(backends)}

    @app.get("/models", response_model=list[ModelInfo])
    def models() -> list[ModelInfo]:
        return [
            ModelInfo(name=name, kind=b.kind, loaded_at=b.loaded_at)
            for name, b in sorted(backends.items())
        ]

    @app.post("/models/{name}/predict", response_model=PredictResponse)
    def predict(name: str, request: PredictRequest):
        backend = backends.get(name)
        if backend is None:
            return JSONResponse(
                status_code=404,
                content={"detail": f"unknown model {name!r}; available: {sorted(backends)}"},
            )
        started = time.perf_counter()
        try:
            logits = backend.predict_logits(request.text)
        except BackendError as e:
            return JSONResponse(status_code=500, content={"detail": str(e)})
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        arr = np.array(logits, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            return JSONResponse(
                status_code=500, content={"detail": f"backend produced non-finite logits {logits}"}
            )
        ez = np.exp(arr - np.max(arr))
        probs = ez / np.sum(ez)
        winner = LABEL_ORDER[int(np.argmax(probs))]
        return PredictResponse(
            model=name,
            label=winner.value,
            scores={label.value: float(p) for label, p in zip(LABEL_ORDER, probs)},
            inference_ms=round(elapsed_ms, 3),
        )

    return app


def parse_bind(bind: str) -> tuple[str, int]:
    """Split "host:port" into its parts."""
    host, sep, port = bind.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise GatewayError(f"bind address {bind!r} is not host:port")
    return host, int(port)


def serve(app: FastAPI, bind: str) -> None:
    """Run the app under uvicorn until interrupted."""
    import uvicorn

    host, port = parse_bind(bind)
    uvicorn.run(app, host=host, port=port, log_level="info")
