import { ApiError, StudyApi } from "./api.js";
import { clear, el } from "./dom.js";
import type { StudyReport } from "./types.js";

// Admin view: per-matchup win percentages plus completion counts,
// refreshed on an interval while the study runs.

export function formatPct(value: number): string {
  const rounded = Math.round(value * 10) / 10;
  return Number.isInteger(rounded) ? `${rounded.toFixed(0)}%` : `${rounded.toFixed(1)}%`;
}

export class AdminDashboard {
  private timer: ReturnType<typeof setInterval> | null = null;
  private chain: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: StudyApi,
    private readonly studyId: string,
    private readonly refreshMs: number = 5000,
  ) {}

  start(): Promise<void> {
    this.timer = setInterval(() => void this.refresh(), this.refreshMs);
    return this.refresh();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  settled(): Promise<void> {
    return this.chain;
  }

  refresh(): Promise<void> {
    this.chain = this.chain.then(
      () => this.load(),
      () => this.load(),
    );
    return this.chain;
  }

  private async load(): Promise<void> {
    try {
      const report = await this.api.report(this.studyId);
      this.render(report);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.renderNotFound();
        this.stop(); // a missing study will not appear by polling
      } else {
        this.renderError(); // keep polling; the service may come back
      }
    }
  }

  private render(report: StudyReport): void {
    clear(this.root);
    const header = el("div", { class: "summary" }, [
      el("h2", {}, [report.name]),
      el("p", { class: "counts" }, [
        `${report.completed_pairs} of ${report.total_pairs} pairs complete` +
          (report.incomplete_pairs > 0
            ? ` (${report.incomplete_pairs} still collecting votes)`
            : ""),
      ]),
    ]);
    this.root.append(header);

    if (report.matchups.length === 0 || report.completed_pairs === 0) {
      this.root.append(el("p", { class: "empty" }, ["No completed pairs yet."]));
      return;
    }

    const rows = report.matchups.map((m) => {
      const pctX = m.win_pct[m.method_x] ?? 0;
      const pctY = m.win_pct[m.method_y] ?? 0;
      return el("tr", { class: "matchup" }, [
        el("td", { class: "methods" }, [`${m.method_x} vs ${m.method_y}`]),
        el("td", { class: "pct" }, [`${m.method_x}: ${formatPct(pctX)}`]),
        el("td", { class: "pct" }, [`${m.method_y}: ${formatPct(pctY)}`]),
        el("td", { class: "n" }, [`${m.completed_pairs} pairs`]),
      ]);
    });
    this.root.append(
      el("table", { class: "matchups" }, [el("tbody", {}, rows)]),
    );
  }

  private renderNotFound(): void {
    clear(this.root);
    this.root.append(
      el("div", { class: "not-found" }, [
        el("h2", {}, ["Study not found"]),
        el("p", {}, [`No study with id "${this.studyId}" on this service.`]),
      ]),
    );
  }

  private renderError(): void {
    clear(this.root);
    this.root.append(
      el("div", { class: "error", role: "alert" }, [
        el("p", {}, ["Cannot reach the study service; retrying…"]),
      ]),
    );
  }
}
