/** Expert-loop controller: browse proposals, pin a concept, request completions.
 *
 * Pure client of the HTTP API: nothing is recomputed locally, and the gallery
 * swaps wholesale when a job finishes. Kept DOM-free so tests can drive it
 * headlessly; rendering hooks receive immutable snapshots.
 */

import { ApiError, Client, JobPoller } from "./api.js";
import type { DatasetDoc, Gallery, Job, Report, RunDoc } from "./types.js";

export interface AppState {
  datasetId: string | null;
  dataset: DatasetDoc | null;
  gallery: Gallery | null;
  report: Report | null;
  sessionId: string | null;
  pins: { column_index: number; label: string }[];
  jobs: Job[];
  error: string | null;
  busy: boolean;
}

export type Listener = (state: AppState) => void;

const SAMPLER_DEFAULTS = {
  n_concepts: 3,
  t_acc: 0.9,
  M: 20,
  method: "greedy",
  metric: "euclidean",
  hmc: {
    step_size: 0.04,
    leapfrog_steps: 10,
    burn_in_steps: 300,
    samples_per_restart: 50,
    restarts: 10,
    seed: 0,
  },
};

export class App {
  readonly state: AppState = {
    datasetId: null,
    dataset: null,
    gallery: null,
    report: null,
    sessionId: null,
    pins: [],
    jobs: [],
    error: null,
    busy: false,
  };
  private listeners: Listener[] = [];
  readonly poller: JobPoller;

  constructor(
    readonly client: Client,
    pollMs = 1000,
  ) {
    this.poller = new JobPoller(client, pollMs, (job) => this.trackJob(job));
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  private trackJob(job: Job): void {
    const i = this.state.jobs.findIndex((j) => j.id === job.id);
    if (i >= 0) this.state.jobs[i] = job;
    else this.state.jobs.push(job);
    this.emit();
  }

  private fail(err: unknown): void {
    this.state.error = err instanceof Error ? err.message : String(err);
    this.state.busy = false;
    this.emit();
  }

  async openDataset(datasetId: string): Promise<void> {
    const { dataset } = await this.client.getDataset(datasetId);
    this.state.datasetId = datasetId;
    this.state.dataset = dataset;
    const session = await this.client.createSession(datasetId);
    this.state.sessionId = session.id;
    this.state.pins = [];
    this.state.gallery = null;
    this.state.report = null;
    this.state.error = null;
    this.emit();
  }

  async generateAndOpen(kind: string, seed = 0, config: object = {}): Promise<void> {
    const summary = await this.client.generateDataset(kind, seed, config);
    await this.openDataset(summary.id);
  }

  private async runToGallery(run: RunDoc): Promise<void> {
    if (run.proposals_id) {
      this.state.gallery = await this.client.getProposals(run.proposals_id);
    }
    this.state.report = run.report_id ? await this.client.getReport(run.report_id) : null;
    this.emit();
  }

  /** Launch an unconditioned sample+select job and wait for the gallery. */
  async sampleProposals(overrides: object = {}): Promise<void> {
    if (!this.state.datasetId) throw new Error("open a dataset first");
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    try {
      const config = {
        dataset_id: this.state.datasetId,
        ...SAMPLER_DEFAULTS,
        ...overrides,
      };
      const { id } = await this.client.submitJob("sample", config);
      const job = await this.poller.wait(id);
      if (job.state === "failed" || !job.result_ref) {
        throw new Error(job.error ?? "sampling job failed");
      }
      await this.runToGallery(await this.client.getRun(job.result_ref));
    } catch (err) {
      this.fail(err);
      return;
    }
    this.state.busy = false;
    this.emit();
  }

  /** Pin one concept column of a displayed proposal. 409 means the column is
   * already pinned; surface it inline rather than throwing. */
  async pinFromMember(memberRank: number, column: number, label = ""): Promise<boolean> {
    const { gallery, sessionId } = this.state;
    if (!gallery || !sessionId) throw new Error("nothing to pin from");
    const member = gallery.members.find((m) => m.rank === memberRank);
    if (!member) throw new Error(`no member with rank ${memberRank}`);
    try {
      const res = await this.client.pin(sessionId, {
        column_index: column,
        values: member.activations.map((row) => row[column]),
        label,
      });
      this.state.pins = res.pins;
      this.state.error = null;
      this.emit();
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state.error = `column ${column} is already pinned`;
        this.emit();
        return false;
      }
      this.fail(err);
      return false;
    }
  }

  async pinCatalogConcept(conceptIndex: number, column = 0, label = ""): Promise<boolean> {
    if (!this.state.sessionId) throw new Error("open a dataset first");
    try {
      const res = await this.client.pin(this.state.sessionId, {
        column_index: column,
        concept_index: conceptIndex,
        label,
      });
      this.state.pins = res.pins;
      this.state.error = null;
      this.emit();
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state.error = `column ${column} is already pinned`;
        this.emit();
        return false;
      }
      this.fail(err);
      return false;
    }
  }

  /** Launch the conditional completion job and replace the gallery. */
  async complete(overrides: object = {}): Promise<void> {
    if (!this.state.sessionId) throw new Error("open a dataset first");
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    try {
      const config = { ...SAMPLER_DEFAULTS, ...overrides };
      const { job_id } = await this.client.complete(this.state.sessionId, config);
      const job = await this.poller.wait(job_id);
      if (job.state === "failed" || !job.result_ref) {
        throw new Error(job.error ?? "completion job failed");
      }
      await this.runToGallery(await this.client.getRun(job.result_ref));
    } catch (err) {
      this.fail(err);
      return;
    }
    this.state.busy = false;
    this.emit();
  }
}
