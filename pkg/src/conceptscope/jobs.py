"""Background job registry with durable records and FIFO workers.

Job records live in the artifact store, so the queue survives restarts: on
startup, queued jobs are re-enqueued and jobs caught mid-run are re-queued
(handlers are deterministic, so re-running is safe). HTTP handlers never
execute compute; they enqueue and poll.
"""

from __future__ import annotations

import queue
import threading
import time
import traceback

from .store import ArtifactStore

JOB_KINDS = ("sample", "select", "evaluate", "conditional_sample")
STATES = ("queued", "running", "done", "failed")


class JobRegistry:
    def __init__(self, store: ArtifactStore, handler, workers: int = 1):
        """``handler(job_doc, progress_cb) -> result_ref`` runs in a worker thread."""
        self.store = store
        self.handler = handler
        self._queue: queue.Queue[str] = queue.Queue()
        self._lock = threading.Lock()
        self._recover()
        self._threads = [threading.Thread(target=self._worker, daemon=True)
                         for _ in range(max(1, workers))]
        for t in self._threads:
            t.start()

    def _recover(self) -> None:
        for job_id in self.store.list_ids("jobs"):
            job = self.store.get("jobs", job_id)
            if job["state"] in ("queued", "running"):
                job["state"] = "queued"
                self.store.put_mutable("jobs", job, job_id)
                self._queue.put(job_id)

    def submit(self, kind: str, request: dict) -> str:
        if kind not in JOB_KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        job = {
            "schema_version": 1,
            "kind": kind,
            "state": "queued",
            "request": request,
            "result_ref": None,
            "error": None,
            "progress": 0.0,
            "created_at": time.time(),
            "started_at": None,
            "finished_at": None,
        }
        job_id = self.store.put_mutable("jobs", job)
        job["id"] = job_id
        self.store.put_mutable("jobs", job, job_id)
        self._queue.put(job_id)
        return job_id

    def get(self, job_id: str) -> dict:
        return self.store.get("jobs", job_id)

    def _update(self, job_id: str, **fields) -> dict:
        with self._lock:
            job = self.store.get("jobs", job_id)
            job.update(fields)
            self.store.put_mutable("jobs", job, job_id)
        return job

    def _worker(self) -> None:
        while True:
            job_id = self._queue.get()
            try:
                job = self._update(job_id, state="running", started_at=time.time())

                def progress(done, total, _id=job_id):
                    self._update(_id, progress=done / max(total, 1))

                result_ref = self.handler(job, progress)
                self._update(job_id, state="done", result_ref=result_ref,
                             progress=1.0, finished_at=time.time())
            except Exception as exc:  # job failures surface in job state
                self._update(job_id, state="failed",
                             error=f"{type(exc).__name__}: {exc}",
                             finished_at=time.time())
                traceback.print_exc()
            finally:
                self._queue.task_done()

    def wait_idle(self, timeout: float = 60.0) -> bool:
        """Block until the queue drains (test helper)."""
        deadline = time.time() + timeout
        while time.time() < deadline:
            if self._queue.unfinished_tasks == 0:
                return True
            time.sleep(0.02)
        return False
