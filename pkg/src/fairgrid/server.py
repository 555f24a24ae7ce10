"""REST facade with asynchronous experiment execution.

Jobs are executed by an in-process worker pool pulling from a FIFO queue;
each job lives in its own directory under the configured data dir (uploaded
manifest and dataset, job.json state, and the result artifacts), so
completed jobs survive a process restart. Jobs found in the running state
at startup were interrupted by a crash and are marked failed; queued jobs
are re-enqueued. Progress is written per (combination, fold) unit and is
monotone by construction.

All endpoints live under /api/v1. Responses are plain JSON documents; the
report CSV and the model artifact are byte-identical to what the CLI
writes for the same manifest, dataset, and seed.
"""

from __future__ import annotations

import json
import queue
import shutil
import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Request, Response, UploadFile
from fastapi.responses import JSONResponse

from . import bench, manifest
from .data import CsvError, SchemaError, bind_schema, parse_csv
from .extfm import (
    Configuration,
    FeatureStatus,
    UnknownFeatureError,
    builtin_model,
    builtin_model_document,
    model_to_dict,
    propagate,
    validate_configuration,
)
from .metrics import questionnaire_schema


@dataclass(frozen=True)
class ServerConfig:
    data_dir: Path
    workers: int = 2
    upload_limit: int = 10 * 1024 * 1024
    retention_seconds: Optional[float] = None
    cors: bool = False
    frontend_dir: Optional[Path] = None


class JobStore:
    """Directory-per-job persistence with atomic state writes."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _job_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def _state_path(self, job_id: str) -> Path:
        return self._job_dir(job_id) / "job.json"

    def create(self, manifest_bytes: bytes, dataset_bytes: bytes) -> str:
        job_id = uuid.uuid4().hex
        job_dir = self._job_dir(job_id)
        job_dir.mkdir(parents=True)
        (job_dir / "manifest.toml").write_bytes(manifest_bytes)
        (job_dir / "dataset.csv").write_bytes(dataset_bytes)
        self._write_state(job_id, {
            "id": job_id,
            "state": "queued",
            "percentage": 0,
            "message": None,
            "created": time.time(),
            "finished": None,
        })
        return job_id

    def _write_state(self, job_id: str, state: dict) -> None:
        path = self._state_path(job_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(state, sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    def read(self, job_id: str) -> Optional[dict]:
        path = self._state_path(job_id)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def update(self, job_id: str, **changes) -> None:
        with self._lock:
            state = self.read(job_id)
            if state is None:
                return
            if "percentage" in changes:
                # progress never moves backwards, terminal states never revert
                changes["percentage"] = max(changes["percentage"], state["percentage"])
                if state["state"] in ("done", "failed"):
                    return
            state.update(changes)
            self._write_state(job_id, state)

    def artifact(self, job_id: str, name: str) -> Path:
        return self._job_dir(job_id) / name

    def job_ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / "job.json").exists())

    def recover(self) -> list[str]:
        """Mark interrupted jobs failed; return queued ids for re-enqueueing."""
        requeue = []
        for job_id in self.job_ids():
            state = self.read(job_id)
            if state["state"] == "running":
                self.update(job_id, state="failed", message="interrupted", finished=time.time())
            elif state["state"] == "queued":
                requeue.append((state["created"], job_id))
        return [job_id for _, job_id in sorted(requeue)]

    def prune(self, max_age_seconds: float) -> None:
        now = time.time()
        for job_id in self.job_ids():
            state = self.read(job_id)
            if state["state"] in ("done", "failed") and state.get("finished"):
                if now - state["finished"] > max_age_seconds:
                    shutil.rmtree(self._job_dir(job_id), ignore_errors=True)


def execute_job(store: JobStore, job_id: str) -> None:
    """Run one job to completion; all failures land in the job state."""
    store.update(job_id, state="running", percentage=0)
    try:
        model = builtin_model()
        spec = manifest.parse_manifest(store.artifact(job_id, "manifest.toml").read_bytes(), model)
        table = parse_csv(store.artifact(job_id, "dataset.csv").read_bytes())
        bound = bind_schema(table, spec.schema)
        report = bench.run_experiment(
            spec, bound, progress=lambda pct: store.update(job_id, percentage=pct)
        )
        final = bench.finalize(spec, bound, report.best)
        store.artifact(job_id, "report.csv").write_bytes(bench.report_csv(report))
        store.artifact(job_id, "model.fbm").write_bytes(bench.serialize_model(final))
        store.artifact(job_id, "result.json").write_text(
            json.dumps(bench.report_to_dict(report), sort_keys=True), encoding="utf-8"
        )
        store.update(job_id, state="done", percentage=100, finished=time.time())
    except Exception as exc:  # any failure becomes a terminal job state
        store.update(job_id, state="failed", message=str(exc), finished=time.time())


def _worker_loop(store: JobStore, work: "queue.Queue[Optional[str]]") -> None:
    while True:
        job_id = work.get()
        if job_id is None:
            return
        execute_job(store, job_id)


def create_app(config: ServerConfig) -> FastAPI:
    store = JobStore(config.data_dir)
    work: "queue.Queue[Optional[str]]" = queue.Queue()
    threads: list[threading.Thread] = []

    @asynccontextmanager
    async def _lifespan(_: FastAPI):
        if config.retention_seconds is not None:
            store.prune(config.retention_seconds)
        for job_id in store.recover():
            work.put(job_id)
        for _i in range(max(config.workers, 1)):
            t = threading.Thread(target=_worker_loop, args=(store, work), daemon=True)
            t.start()
            threads.append(t)
        yield
        for _t in threads:
            work.put(None)
        for t in threads:
            t.join(timeout=5)

    app = FastAPI(title="fairgrid", version="1", lifespan=_lifespan)

    if config.cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )

    model = builtin_model()

    @app.get("/api/v1/featuremodel")
    def featuremodel():
        return {
            "document": builtin_model_document(),
            "model": model_to_dict(model),
            "questionnaire": questionnaire_schema(),
        }

    @app.post("/api/v1/validate")
    async def validate(request: Request):
        try:
            body = json.loads(await request.body())
            selected = body.get("selected", [])
            attributes = body.get("attributes", {})
            if not isinstance(selected, list) or not isinstance(attributes, dict):
                raise ValueError("selected must be a list, attributes an object")
            config = Configuration.of(selected, attributes)
        except (json.JSONDecodeError, ValueError, AttributeError, TypeError) as exc:
            return JSONResponse({"error": f"malformed request: {exc}"}, status_code=400)
        try:
            state = propagate(model, config)
            violations = validate_configuration(model, config)
        except UnknownFeatureError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        features = {}
        for fid, status in state.status.items():
            entry: dict = {"status": status.value}
            if status is FeatureStatus.DISABLED:
                entry["reason"] = state.reasons[fid]
            features[fid] = entry
        return {
            "features": features,
            "configuration": {
                "valid": not violations,
                "violations": [v.reason for v in violations],
            },
        }

    @app.post("/api/v1/manifest")
    async def build_manifest(request: Request):
        """Compile a configuration document into manifest bytes (the
        downloadable experiment); the web form is a thin client and never
        assembles manifests itself."""
        try:
            body = json.loads(await request.body())
            config = Configuration.of(body.get("selected", []), body.get("attributes", {}))
        except (json.JSONDecodeError, ValueError, AttributeError, TypeError) as exc:
            return JSONResponse({"error": f"malformed request: {exc}"}, status_code=400)
        try:
            blob = manifest.generate_manifest(model, config)
        except UnknownFeatureError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except manifest.ManifestError as exc:
            return JSONResponse(
                {"error": str(exc), "violations": list(exc.violations)}, status_code=422
            )
        return Response(blob, media_type="application/toml")

    @app.post("/api/v1/experiments", status_code=202)
    async def submit(
        manifest_file: UploadFile = File(alias="manifest"),
        dataset: UploadFile = File(alias="dataset"),
    ):
        manifest_bytes = await manifest_file.read()
        dataset_bytes = await dataset.read()
        if len(manifest_bytes) > config.upload_limit or len(dataset_bytes) > config.upload_limit:
            return JSONResponse(
                {"error": f"upload exceeds the {config.upload_limit} byte limit"}, status_code=413
            )
        try:
            spec = manifest.parse_manifest(manifest_bytes, model)
            table = parse_csv(dataset_bytes)
            bind_schema(table, spec.schema)
        except manifest.ManifestError as exc:
            if exc.violations:
                return JSONResponse(
                    {"error": str(exc), "violations": list(exc.violations)}, status_code=422
                )
            return JSONResponse({"error": str(exc)}, status_code=400)
        except (CsvError, SchemaError, ValueError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        job_id = store.create(manifest_bytes, dataset_bytes)
        work.put(job_id)
        return {"id": job_id}

    def _job_or_404(job_id: str):
        state = store.read(job_id)
        if state is None:
            return None, JSONResponse({"error": f"no job '{job_id}'"}, status_code=404)
        return state, None

    @app.get("/api/v1/experiments/{job_id}/status")
    def status(job_id: str):
        state, err = _job_or_404(job_id)
        if err:
            return err
        out = {"state": state["state"], "percentage": state["percentage"]}
        if state["state"] == "failed":
            out["message"] = state["message"]
        return out

    @app.get("/api/v1/experiments/{job_id}/result")
    def result(job_id: str):
        state, err = _job_or_404(job_id)
        if err:
            return err
        if state["state"] == "failed":
            return {"state": "failed", "message": state["message"]}
        if state["state"] != "done":
            return JSONResponse(
                {"error": f"job is {state['state']}, not finished"}, status_code=409
            )
        doc = json.loads(store.artifact(job_id, "result.json").read_text(encoding="utf-8"))
        return {"state": "done", "result": doc}

    def _artifact_response(job_id: str, name: str, media_type: str):
        state, err = _job_or_404(job_id)
        if err:
            return err
        if state["state"] != "done":
            detail = {"error": f"job is {state['state']}, artifact not available"}
            if state["state"] == "failed":
                detail["message"] = state["message"]
            return JSONResponse(detail, status_code=409)
        return Response(store.artifact(job_id, name).read_bytes(), media_type=media_type)

    @app.get("/api/v1/experiments/{job_id}/report.csv")
    def report(job_id: str):
        return _artifact_response(job_id, "report.csv", "text/csv")

    @app.get("/api/v1/experiments/{job_id}/model")
    def model_artifact(job_id: str):
        return _artifact_response(job_id, "model.fbm", "application/octet-stream")

    if config.frontend_dir is not None and Path(config.frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(config.frontend_dir), html=True), name="ui")

    return app
