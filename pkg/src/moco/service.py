"""HTTP/JSON API backing the explorer UI.

Datasets are discovered in a data directory as ``<id>.csv`` with sibling
``<id>.schema.json`` and ``<id>.model.json`` files. Jobs run on a single
worker thread and persist the same run directory layout as the command
line, so restarting the service keeps finished results. All error bodies
are ``{"code": ..., "message": ...}``.
"""

from __future__ import annotations

import json
import queue
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .evolution import ArchiveEntry
from .feature_space import MissingValue, ObservedDataset, ParseError, SchemaMismatch, load_dataset
from .model_adapter import ExternalProcessFailure, load_model, predict_batch
from .objectives import ObjectiveVector
from .runio import ExplainRequest, build_surface_payload, execute_explain, feature_summaries


class DatasetHandle:
    """Lazily loaded dataset + model pair; loading is locked, use is read-only."""

    def __init__(self, dataset_id: str, data_path: Path, schema_path: Path, model_path: Path):
        self.id = dataset_id
        self.data_path = data_path
        self.schema_path = schema_path
        self.model_path = model_path
        self._lock = threading.Lock()
        self._dataset: ObservedDataset | None = None
        self._model = None

    def dataset(self) -> ObservedDataset:
        with self._lock:
            if self._dataset is None:
                self._dataset = load_dataset(self.data_path, self.schema_path)
            return self._dataset

    def model(self):
        with self._lock:
            if self._model is None:
                self._model = load_model(self.model_path, self.dataset_unlocked().schema)
            return self._model

    def dataset_unlocked(self) -> ObservedDataset:
        if self._dataset is None:
            self._dataset = load_dataset(self.data_path, self.schema_path)
        return self._dataset


def discover_datasets(data_dir: Path) -> dict[str, DatasetHandle]:
    handles = {}
    for csv_path in sorted(data_dir.glob("*.csv")):
        stem = csv_path.stem
        schema = data_dir / f"{stem}.schema.json"
        model = data_dir / f"{stem}.model.json"
        if schema.exists() and model.exists():
            handles[stem] = DatasetHandle(stem, csv_path, schema, model)
    return handles


class JobRequest(BaseModel):
    dataset: str
    row: int | None = None
    point: dict | None = None
    target: str = "auto"
    freeze: list[str] = Field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = Field(default_factory=dict)
    config: dict = Field(default_factory=dict)
    limit: int = 10


class SurfaceRequest(BaseModel):
    job: str | None = None
    dataset: str | None = None
    row: int | None = None
    feature_a: str
    feature_b: str
    resolution: int = 50


@dataclass
class JobRecord:
    id: str
    state: str  # queued | running | done | failed
    request: dict = field(default_factory=dict)
    error: str | None = None
    run_dir: Path | None = None

    def to_obj(self) -> dict:
        obj = {"job": self.id, "state": self.state}
        if self.error is not None:
            obj["error"] = self.error
        return obj


class JobRegistry:
    def __init__(self, runs_dir: Path, queue_size: int = 32):
        self.runs_dir = runs_dir
        self._jobs: dict[str, JobRecord] = {}
        self._lock = threading.Lock()
        self._queue: queue.Queue = queue.Queue(maxsize=queue_size)
        self._counter = 0
        self._recover()

    def _recover(self):
        """Re-register finished run directories from a previous service life."""
        if not self.runs_dir.exists():
            return
        for d in sorted(self.runs_dir.iterdir()):
            if d.is_dir() and (d / "pareto.json").exists():
                job = JobRecord(id=d.name, state="done", run_dir=d)
                self._jobs[d.name] = job
                if d.name.startswith("job-"):
                    try:
                        self._counter = max(self._counter, int(d.name.split("-")[1]))
                    except ValueError:
                        pass

    def submit(self, request: JobRequest) -> JobRecord:
        with self._lock:
            self._counter += 1
            job = JobRecord(id=f"job-{self._counter:06d}", state="queued", request=request.model_dump())
            job.run_dir = self.runs_dir / job.id
            self._jobs[job.id] = job
        try:
            self._queue.put_nowait(job)
        except queue.Full:
            with self._lock:
                del self._jobs[job.id]
            raise HTTPException(503, "job queue is full") from None
        return job

    def get(self, job_id: str) -> JobRecord:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        return job

    def next_job(self, timeout: float = 0.2) -> JobRecord | None:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None


def create_app(data_dir, runs_dir=None, queue_size: int = 32) -> FastAPI:
    data_dir = Path(data_dir)
    runs_dir = Path(runs_dir) if runs_dir else data_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    handles = discover_datasets(data_dir)
    registry = JobRegistry(runs_dir, queue_size)
    stop = threading.Event()

    def worker():
        while not stop.is_set():
            job = registry.next_job()
            if job is None:
                continue
            job.state = "running"
            try:
                req = JobRequest(**job.request)
                handle = handles.get(req.dataset)
                if handle is None:
                    raise SchemaMismatch(f"unknown dataset {req.dataset!r}")
                explain = ExplainRequest(
                    data_path=str(handle.data_path),
                    schema_path=str(handle.schema_path),
                    model_path=str(handle.model_path),
                    row=req.row,
                    point=req.point,
                    target=req.target,
                    freeze=req.freeze,
                    bounds={k: tuple(v) for k, v in req.bounds.items()},
                    limit=req.limit,
                )
                cfg = dict(req.config)
                for key, attr in (
                    ("mu", "pop"),
                    ("generations", "generations"),
                    ("seed", "seed"),
                    ("epsilon", "epsilon"),
                    ("k", "k"),
                    ("use_ice_init", "use_ice_init"),
                    ("use_conditional_mutator", "use_conditional_mutator"),
                    ("early_stop_patience", "early_stop_patience"),
                ):
                    if key in cfg:
                        setattr(explain, attr, cfg.pop(key))
                if cfg:
                    raise SchemaMismatch(f"unknown config keys: {sorted(cfg)}")
                execute_explain(explain, job.run_dir)
                job.state = "done"
            except Exception as exc:  # failures land in the job record
                job.state = "failed"
                job.error = str(exc)

    worker_thread = threading.Thread(target=worker, daemon=True, name="moco-job-worker")

    @asynccontextmanager
    async def lifespan(_app):
        worker_thread.start()
        yield
        stop.set()

    app = FastAPI(title="moco service", lifespan=lifespan)
    # the explorer is served as static files from elsewhere; this is a
    # single-user desk tool, so any origin may call the API
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(HTTPException)
    async def _http_error(request: Request, exc: HTTPException):
        return JSONResponse({"code": exc.status_code, "message": str(exc.detail)}, status_code=exc.status_code)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse({"code": 400, "message": str(exc.errors())}, status_code=400)

    def handle_or_404(dataset_id: str) -> DatasetHandle:
        handle = handles.get(dataset_id)
        if handle is None:
            raise HTTPException(404, f"unknown dataset {dataset_id!r}")
        return handle

    @app.get("/health")
    def health():
        return {"status": "ok", "datasets": len(handles)}

    @app.get("/datasets")
    def datasets():
        out = []
        for handle in handles.values():
            ds = handle.dataset()
            out.append(
                {
                    "id": handle.id,
                    "rows": len(ds),
                    "features": feature_summaries(ds.schema, ds),
                }
            )
        return out

    @app.get("/datasets/{dataset_id}/rows/{row}")
    def dataset_row(dataset_id: str, row: int):
        handle = handle_or_404(dataset_id)
        ds = handle.dataset()
        if row < 0 or row >= len(ds):
            raise HTTPException(404, f"row {row} out of range")
        values = dict(zip(ds.schema.names, ds.rows[row]))
        try:
            pred = predict_batch(handle.model(), [ds.rows[row]])[0]
        except ExternalProcessFailure as exc:
            raise HTTPException(502, str(exc)) from exc
        return {"row": row, "values": values, "prediction": pred}

    @app.post("/jobs", status_code=202)
    def submit_job(request: JobRequest):
        handle = handles.get(request.dataset)
        if handle is None:
            raise HTTPException(404, f"unknown dataset {request.dataset!r}")
        ds = handle.dataset()
        if request.row is None and request.point is None:
            raise HTTPException(400, "need a row index or an inline point")
        if request.row is not None and (request.row < 0 or request.row >= len(ds)):
            raise HTTPException(400, f"row {request.row} out of range")
        known = {d.name for d in ds.schema.features}
        for name in list(request.freeze) + list(request.bounds):
            if name not in known:
                raise HTTPException(400, f"unknown feature {name!r}")
        job = registry.submit(request)
        return job.to_obj()

    @app.get("/jobs/{job_id}")
    def job_state(job_id: str):
        return registry.get(job_id).to_obj()

    def _done_job(job_id: str) -> JobRecord:
        job = registry.get(job_id)
        if job.state == "failed":
            raise HTTPException(409, f"job failed: {job.error}")
        if job.state != "done":
            raise HTTPException(409, f"job is {job.state}")
        return job

    @app.get("/jobs/{job_id}/pareto")
    def job_pareto(job_id: str, all: bool = False):
        job = _done_job(job_id)
        with open(job.run_dir / "pareto.json", "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if all:
            payload["counterfactuals"] = payload["nondominated"]
        return payload

    @app.get("/jobs/{job_id}/hv")
    def job_hv(job_id: str):
        job = _done_job(job_id)
        with open(job.run_dir / "pareto.json", "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return {"hv_trace": payload["hv_trace"], "ref_point": payload["ref_point"]}

    @app.post("/surface")
    def surface(request: SurfaceRequest):
        if not 2 <= request.resolution <= 200:
            raise HTTPException(400, "resolution must be in [2, 200]")
        if request.job is not None:
            job = _done_job(request.job)
            with open(job.run_dir / "run.json", "r", encoding="utf-8") as fh:
                meta = json.load(fh)
            with open(job.run_dir / "pareto.json", "r", encoding="utf-8") as fh:
                payload = json.load(fh)
            dataset_id = Path(meta["data"]).stem
            handle = handle_or_404(dataset_id)
            ds = handle.dataset()
            schema = ds.schema
            x_star = schema.validate_point([payload["x_star"]["values"][n] for n in schema.names])
            observed = ds.exclude_row(meta["row"]) if meta.get("row") is not None else ds
            shown = payload["counterfactuals"]
        elif request.dataset is not None and request.row is not None:
            handle = handle_or_404(request.dataset)
            ds = handle.dataset()
            if request.row < 0 or request.row >= len(ds):
                raise HTTPException(404, f"row {request.row} out of range")
            x_star = ds.rows[request.row]
            observed = ds.exclude_row(request.row)
            payload = None
            shown = []
        else:
            raise HTTPException(400, "need a job id or dataset and row")
        schema = observed.schema
        for name in (request.feature_a, request.feature_b):
            try:
                j = schema.index_of(name)
            except SchemaMismatch as exc:
                raise HTTPException(400, str(exc)) from exc
            if not schema.features[j].is_numeric:
                raise HTTPException(400, f"feature {name!r} is not numeric")
        if request.feature_a == request.feature_b:
            raise HTTPException(400, "need two distinct features")
        entries = [
            ArchiveEntry(
                point=schema.validate_point([cf["values"][n] for n in schema.names]),
                prediction=cf["prediction"],
                objectives=ObjectiveVector(**cf["objectives"]),
                generation=cf["generation"],
            )
            for cf in shown
        ]
        try:
            out = build_surface_payload(
                handle.model(), x_star, observed, request.feature_a, request.feature_b, request.resolution, entries
            )
            out["x_star"]["prediction"] = predict_batch(handle.model(), [x_star])[0]
        except ExternalProcessFailure as exc:
            raise HTTPException(502, str(exc)) from exc
        except (SchemaMismatch, MissingValue, ParseError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        return out

    app.state.registry = registry
    app.state.handles = handles
    return app
