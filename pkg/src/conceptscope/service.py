"""HTTP JSON service: datasets, asynchronous jobs, proposal galleries, sessions.

Sampling never runs inside a request handler; it is enqueued as a job and
polled. Artifacts are immutable content-addressed JSON documents, so any run
can be reproduced from its recorded request. All responses carry
schema_version. The OpenAPI description is served at /spec.
"""

from __future__ import annotations

import time
from typing import Any, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pathlib import Path
from pydantic import BaseModel, Field

from .datagen import HexagonConfig, VitalsConfig, gen_hexagon, gen_vitals
from .diversity import ProposalSet, split_to_singles
from .errors import ConceptScopeError
from .evaluate import match_single
from .hmc import (HmcConfig, PinnedConcept, ProposalPool, filter_predictive,
                  pool_from_dict, pool_to_dict, run_restarts)
from .jobs import JOB_KINDS, JobRegistry
from .model import SCHEMA_VERSION, Dataset, PriorSpec, dataset_from_dict, dataset_to_dict
from .pipeline import PipelineConfig, evaluate_selection, select_from_pool
from .store import ArtifactStore


class GenerateSpec(BaseModel):
    kind: str = Field(pattern="^(hexagon|vitals)$")
    seed: int = 0
    config: dict = Field(default_factory=dict)


class DatasetRequest(BaseModel):
    dataset: Optional[dict] = None
    generate: Optional[GenerateSpec] = None


class JobRequest(BaseModel):
    kind: str
    config: dict = Field(default_factory=dict)


class PinRequest(BaseModel):
    column_index: int = 0
    values: Optional[list[float]] = None
    concept_index: Optional[int] = None
    from_proposal: Optional[dict] = None
    label: str = ""


class CompleteRequest(BaseModel):
    config: dict = Field(default_factory=dict)


class SessionRequest(BaseModel):
    dataset_id: str


def _boundaries(theta_w, theta_b) -> list[list[float]]:
    return [[*(float(v) for v in row), float(b)]
            for row, b in zip(theta_w, theta_b)]


def build_gallery(data: Dataset, pool: ProposalPool, selection: ProposalSet,
                  singles: bool, dataset_id: str, pool_id: str,
                  f1_threshold: float) -> dict:
    """Per-member display payload: activations, accuracy, boundaries, best F1."""
    catalog = data.ground_truth
    members = []
    single_items = split_to_singles(pool) if singles else None
    for rank, idx in enumerate(selection.member_indices):
        if singles:
            item = single_items[idx]
            acts = item.activation
            src = pool.samples[item.origin[0]]
            theta_w = src.concept_params.weights[item.origin[1]:item.origin[1] + 1]
            theta_b = src.concept_params.biases[item.origin[1]:item.origin[1] + 1]
            accuracy = src.accuracy
            origin = list(item.origin)
            activations = [[float(v)] for v in acts]
            f1_cols = [match_single(acts, catalog, 0.0)] if catalog else []
        else:
            src = pool.samples[idx]
            acts = src.activations
            theta_w = src.concept_params.weights
            theta_b = src.concept_params.biases
            accuracy = src.accuracy
            origin = [idx, -1]
            activations = [[float(v) for v in row] for row in acts]
            f1_cols = ([match_single(acts[:, k], catalog, 0.0)
                        for k in range(acts.shape[1])] if catalog else [])
        concept_f1 = [
            None if hit is None else
            {"concept": hit[0], "f1": hit[1], "negated": hit[2],
             "matched": bool(hit[1] >= f1_threshold)}
            for hit in f1_cols
        ]
        members.append({
            "rank": rank,
            "member_index": int(idx),
            "origin": origin,
            "accuracy": float(accuracy),
            "boundaries": _boundaries(theta_w, theta_b) if data.n_features == 2 else None,
            "weight_profiles": [[float(v) for v in row] for row in theta_w],
            "bias_profile": [float(b) for b in theta_b],
            "concept_f1": concept_f1,
            "firing_rates": [float(np.mean(np.asarray(col) >= 0.5))
                             for col in np.atleast_2d(np.asarray(activations).T)],
            "activations": activations,
        })
    pinned = next((s.pinned for s in pool.samples if s.pinned is not None), None)
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset_id": dataset_id,
        "pool_id": pool_id,
        "selection": selection.to_dict(),
        "singles": singles,
        "pinned_column": None if pinned is None else pinned.column_index,
        "members": members,
    }


def create_app(data_dir, workers: int = 1, frontend_dir=None) -> FastAPI:
    store = ArtifactStore(data_dir)
    app = FastAPI(title="conceptscope", version="0.1.0")

    def load_data(dataset_id: str) -> Dataset:
        try:
            return dataset_from_dict(store.get("datasets", dataset_id))
        except KeyError:
            raise HTTPException(404, f"dataset {dataset_id} not found")

    # ------------------------------------------------------------------ jobs
    def run_sampling(job: dict, progress) -> str:
        cfg = job["request"]
        data = dataset_from_dict(store.get("datasets", cfg["dataset_id"]))
        pc = PipelineConfig.from_dict(cfg)
        pinned = None
        if cfg.get("pinned") is not None:
            pinned = PinnedConcept(column_index=int(cfg["pinned"]["column_index"]),
                                   values=np.array(cfg["pinned"]["values"]))
        elif pc.pin_concept is not None and data.ground_truth is not None:
            pinned = PinnedConcept(column_index=pc.pin_column,
                                   values=data.ground_truth.concept(pc.pin_concept)
                                   .astype(np.float64))
        if job["kind"] == "conditional_sample" and pinned is None:
            raise ConceptScopeError("conditional_sample requires a pinned concept")
        pool = run_restarts(data, pc.n_concepts, pc.prior, pc.hmc, pinned=pinned,
                            progress_cb=progress, init=pc.init,
                            search_branch=pc.search_branch,
                            search_final_branch=pc.search_final_branch,
                            search_tol=pc.search_tol)
        pool = filter_predictive(pool, pc.t_acc)
        pool_id = store.put("pools", pool_to_dict(pool))
        run_doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION,
                                   "dataset_id": cfg["dataset_id"],
                                   "pool_id": pool_id}
        if cfg.get("select", True) and len(pool) > 0:
            selection, proposals = select_from_pool(pool, pc)
            gallery = build_gallery(data, pool, selection, pc.singles,
                                    cfg["dataset_id"], pool_id, pc.f1_threshold)
            run_doc["proposals_id"] = store.put("proposals", gallery)
            report = evaluate_selection(proposals, data.ground_truth, pc, pinned)
            if report is not None:
                run_doc["report_id"] = store.put("reports", report.to_dict())
        return store.put("runs", run_doc)

    def run_select(job: dict, progress) -> str:
        cfg = job["request"]
        data = dataset_from_dict(store.get("datasets", cfg["dataset_id"]))
        pool = pool_from_dict(store.get("pools", cfg["pool_id"]), data)
        pc = PipelineConfig.from_dict({**cfg, "hmc": {"seed": cfg.get("seed", 0)}})
        selection, proposals = select_from_pool(pool, pc)
        gallery = build_gallery(data, pool, selection, pc.singles,
                                cfg["dataset_id"], cfg["pool_id"], pc.f1_threshold)
        run_doc = {"schema_version": SCHEMA_VERSION, "dataset_id": cfg["dataset_id"],
                   "pool_id": cfg["pool_id"],
                   "proposals_id": store.put("proposals", gallery)}
        pinned = next((s.pinned for s in pool.samples if s.pinned is not None), None)
        report = evaluate_selection(proposals, data.ground_truth, pc, pinned)
        if report is not None:
            run_doc["report_id"] = store.put("reports", report.to_dict())
        progress(1, 1)
        return store.put("runs", run_doc)

    def run_evaluate(job: dict, progress) -> str:
        cfg = job["request"]
        data = dataset_from_dict(store.get("datasets", cfg["dataset_id"]))
        if data.ground_truth is None:
            raise ConceptScopeError("dataset has no ground-truth catalog")
        pool = pool_from_dict(store.get("pools", cfg["pool_id"]), data)
        gallery = store.get("proposals", cfg["proposals_id"])
        selection = ProposalSet.from_dict(gallery["selection"])
        singles = bool(gallery.get("singles"))
        pc = PipelineConfig.from_dict(
            {**cfg, "singles": singles, "hmc": {"seed": selection.seed}})
        if singles:
            items = split_to_singles(pool)
            proposals = tuple(items[i].activation for i in selection.member_indices)
        else:
            proposals = tuple(pool.samples[i].activations
                              for i in selection.member_indices)
        pinned = next((s.pinned for s in pool.samples if s.pinned is not None), None)
        report = evaluate_selection(proposals, data.ground_truth, pc, pinned)
        run_doc = {"schema_version": SCHEMA_VERSION, "dataset_id": cfg["dataset_id"],
                   "pool_id": cfg["pool_id"], "proposals_id": cfg["proposals_id"],
                   "report_id": store.put("reports", report.to_dict())}
        progress(1, 1)
        return store.put("runs", run_doc)

    def handle(job: dict, progress) -> str:
        kind = job["kind"]
        if kind in ("sample", "conditional_sample"):
            return run_sampling(job, progress)
        if kind == "select":
            return run_select(job, progress)
        if kind == "evaluate":
            return run_evaluate(job, progress)
        raise ConceptScopeError(f"unhandled job kind {kind}")

    registry = JobRegistry(store, handle, workers=workers)
    app.state.store = store
    app.state.registry = registry

    # ------------------------------------------------------------ endpoints
    @app.get("/spec")
    def openapi_spec():
        return app.openapi()

    @app.post("/datasets")
    def post_dataset(req: DatasetRequest):
        if (req.dataset is None) == (req.generate is None):
            raise HTTPException(422, "provide exactly one of 'dataset' or 'generate'")
        if req.generate is not None:
            g = req.generate
            try:
                if g.kind == "hexagon":
                    data, _ = gen_hexagon(HexagonConfig(seed=g.seed, **g.config))
                else:
                    data, _ = gen_vitals(VitalsConfig(seed=g.seed, **g.config))
            except TypeError as exc:
                raise HTTPException(422, f"invalid generator config: {exc}")
            doc = dataset_to_dict(data)
        else:
            try:
                data = dataset_from_dict(req.dataset)
            except ConceptScopeError as exc:
                raise HTTPException(422, str(exc))
            doc = dataset_to_dict(data)
        dataset_id = store.put("datasets", doc)
        return {"schema_version": SCHEMA_VERSION, "id": dataset_id,
                "n_points": data.n_points, "n_features": data.n_features,
                "feature_names": list(data.feature_names),
                "has_ground_truth": data.ground_truth is not None}

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        try:
            doc = store.get("datasets", dataset_id)
        except KeyError:
            raise HTTPException(404, f"dataset {dataset_id} not found")
        return {"schema_version": SCHEMA_VERSION, "id": dataset_id, "dataset": doc}

    @app.post("/jobs")
    def post_job(req: JobRequest):
        if req.kind not in JOB_KINDS:
            raise HTTPException(422, f"kind must be one of {list(JOB_KINDS)}")
        cfg = dict(req.config)
        if "dataset_id" not in cfg:
            raise HTTPException(422, "config.dataset_id is required")
        if not store.exists("datasets", str(cfg["dataset_id"])):
            raise HTTPException(404, f"dataset {cfg['dataset_id']} not found")
        if req.kind in ("select", "evaluate") and not store.exists(
                "pools", str(cfg.get("pool_id", ""))):
            raise HTTPException(404, f"pool {cfg.get('pool_id')} not found")
        if req.kind == "evaluate" and not store.exists(
                "proposals", str(cfg.get("proposals_id", ""))):
            raise HTTPException(404, f"proposals {cfg.get('proposals_id')} not found")
        try:
            PipelineConfig.from_dict({**cfg, "hmc": cfg.get("hmc", {"seed": 0}),
                                      "n_concepts": cfg.get("n_concepts", 1)})
        except (ConceptScopeError, KeyError, ValueError, TypeError) as exc:
            raise HTTPException(422, f"malformed config: {exc}")
        job_id = registry.submit(req.kind, cfg)
        return {"schema_version": SCHEMA_VERSION, "id": job_id, "state": "queued"}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            job = registry.get(job_id)
        except KeyError:
            raise HTTPException(404, f"job {job_id} not found")
        return {"schema_version": SCHEMA_VERSION, **job}

    @app.get("/proposals/{proposals_id}")
    def get_proposals(proposals_id: str):
        try:
            return store.get("proposals", proposals_id)
        except KeyError:
            raise HTTPException(404, f"proposals {proposals_id} not found")

    @app.get("/pools/{pool_id}")
    def get_pool(pool_id: str):
        try:
            return store.get("pools", pool_id)
        except KeyError:
            raise HTTPException(404, f"pool {pool_id} not found")

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        try:
            return store.get("runs", run_id)
        except KeyError:
            raise HTTPException(404, f"run {run_id} not found")

    @app.get("/reports/{report_id}")
    def get_report(report_id: str):
        try:
            return store.get("reports", report_id)
        except KeyError:
            raise HTTPException(404, f"report {report_id} not found")

    @app.post("/sessions")
    def post_session(req: SessionRequest):
        if not store.exists("datasets", req.dataset_id):
            raise HTTPException(404, f"dataset {req.dataset_id} not found")
        doc = {"schema_version": SCHEMA_VERSION, "dataset_id": req.dataset_id,
               "pins": [], "jobs": [], "proposal_history": []}
        session_id = store.put_mutable("sessions", doc)
        return {"schema_version": SCHEMA_VERSION, "id": session_id, **doc}

    def load_session(session_id: str) -> dict:
        try:
            return store.get("sessions", session_id)
        except KeyError:
            raise HTTPException(404, f"session {session_id} not found")

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return {"schema_version": SCHEMA_VERSION, "id": session_id,
                **load_session(session_id)}

    @app.post("/sessions/{session_id}/pin")
    def post_pin(session_id: str, req: PinRequest):
        session = load_session(session_id)
        data = load_data(session["dataset_id"])
        if any(p["column_index"] == req.column_index for p in session["pins"]):
            raise HTTPException(409, f"column {req.column_index} is already pinned")
        if req.values is not None:
            values = np.asarray(req.values, dtype=np.float64)
        elif req.concept_index is not None:
            if data.ground_truth is None:
                raise HTTPException(422, "dataset has no catalog to pin from")
            values = data.ground_truth.concept(req.concept_index).astype(np.float64)
        elif req.from_proposal is not None:
            try:
                gallery = store.get("proposals", str(req.from_proposal["proposal_id"]))
                member = gallery["members"][int(req.from_proposal["member"])]
                col = int(req.from_proposal.get("column", 0))
                values = np.asarray(member["activations"], dtype=np.float64)[:, col]
            except (KeyError, IndexError) as exc:
                raise HTTPException(404, f"proposal reference not found: {exc}")
        else:
            raise HTTPException(422, "provide values, concept_index or from_proposal")
        try:
            pin = PinnedConcept(column_index=req.column_index, values=values)
        except ConceptScopeError as exc:
            raise HTTPException(422, str(exc))
        if pin.values.shape[0] != data.n_points:
            raise HTTPException(422, "pinned values length does not match the dataset")
        session["pins"].append({"column_index": req.column_index,
                                "values": [float(v) for v in pin.values],
                                "label": req.label, "created_at": time.time()})
        store.put_mutable("sessions", session, session_id)
        return {"schema_version": SCHEMA_VERSION, "id": session_id,
                "pins": [{k: v for k, v in p.items() if k != "values"}
                         for p in session["pins"]]}

    @app.post("/sessions/{session_id}/complete")
    def post_complete(session_id: str, req: CompleteRequest):
        session = load_session(session_id)
        if not session["pins"]:
            raise HTTPException(422, "pin a concept before requesting completions")
        pin = session["pins"][-1]
        cfg = {
            "dataset_id": session["dataset_id"],
            "n_concepts": req.config.get("n_concepts", 3),
            "hmc": req.config.get("hmc", {"step_size": 0.04, "leapfrog_steps": 10,
                                          "burn_in_steps": 300,
                                          "samples_per_restart": 50, "restarts": 20,
                                          "seed": req.config.get("seed", 0)}),
            "t_acc": req.config.get("t_acc", 0.9),
            "M": req.config.get("M", 20),
            "method": req.config.get("method", "greedy"),
            "metric": req.config.get("metric", "euclidean"),
            "search_tol": req.config.get("search_tol", 0.02),
            "pinned": {"column_index": pin["column_index"], "values": pin["values"]},
        }
        job_id = registry.submit("conditional_sample", cfg)
        session["jobs"].append(job_id)
        store.put_mutable("sessions", session, session_id)
        return {"schema_version": SCHEMA_VERSION, "id": session_id, "job_id": job_id}

    @app.get("/sessions/{session_id}/report")
    def session_report(session_id: str):
        session = load_session(session_id)
        for job_id in reversed(session["jobs"]):
            job = registry.get(job_id)
            if job["state"] == "done" and job.get("result_ref"):
                run = store.get("runs", job["result_ref"])
                out = {"schema_version": SCHEMA_VERSION, "job_id": job_id, "run": run}
                if run.get("report_id"):
                    out["report"] = store.get("reports", run["report_id"])
                return out
        raise HTTPException(404, "no completed jobs in this session")

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
