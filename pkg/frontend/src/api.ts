import type {
  DatasetDoc,
  DatasetSummary,
  Gallery,
  Job,
  Report,
  RunDoc,
  Session,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

/** Thin typed client; every displayed number originates from these payloads. */
export class Client {
  constructor(readonly base: string = "") {}

  generateDataset(kind: string, seed = 0, config: object = {}): Promise<DatasetSummary> {
    return request(this.base, "/datasets", {
      method: "POST",
      body: JSON.stringify({ generate: { kind, seed, config } }),
    });
  }

  getDataset(id: string): Promise<{ id: string; dataset: DatasetDoc }> {
    return request(this.base, `/datasets/${id}`);
  }

  submitJob(kind: string, config: object): Promise<{ id: string }> {
    return request(this.base, "/jobs", {
      method: "POST",
      body: JSON.stringify({ kind, config }),
    });
  }

  getJob(id: string): Promise<Job> {
    return request(this.base, `/jobs/${id}`);
  }

  getRun(id: string): Promise<RunDoc> {
    return request(this.base, `/runs/${id}`);
  }

  getProposals(id: string): Promise<Gallery> {
    return request(this.base, `/proposals/${id}`);
  }

  getReport(id: string): Promise<Report> {
    return request(this.base, `/reports/${id}`);
  }

  createSession(datasetId: string): Promise<Session> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ dataset_id: datasetId }),
    });
  }

  pin(
    sessionId: string,
    body: {
      column_index: number;
      values?: number[];
      concept_index?: number;
      from_proposal?: { proposal_id: string; member: number; column: number };
      label?: string;
    },
  ): Promise<{ id: string; pins: { column_index: number; label: string }[] }> {
    return request(this.base, `/sessions/${sessionId}/pin`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  complete(sessionId: string, config: object = {}): Promise<{ job_id: string }> {
    return request(this.base, `/sessions/${sessionId}/complete`, {
      method: "POST",
      body: JSON.stringify({ config }),
    });
  }

  sessionReport(sessionId: string): Promise<{ run: RunDoc; report?: Report }> {
    return request(this.base, `/sessions/${sessionId}/report`);
  }
}

/** Poll a job once a second until it settles; concurrent polls of the same
 * job id share one loop. */
export class JobPoller {
  private inflight = new Map<string, Promise<Job>>();

  constructor(
    private client: Client,
    private intervalMs = 1000,
    private onTick?: (job: Job) => void,
  ) {}

  wait(jobId: string): Promise<Job> {
    const existing = this.inflight.get(jobId);
    if (existing) return existing;
    const loop = (async () => {
      try {
        for (;;) {
          const job = await this.client.getJob(jobId);
          this.onTick?.(job);
          if (job.state === "done" || job.state === "failed") return job;
          await new Promise((r) => setTimeout(r, this.intervalMs));
        }
      } finally {
        this.inflight.delete(jobId);
      }
    })();
    this.inflight.set(jobId, loop);
    return loop;
  }
}
