import { ApiError, StudyApi } from "./api.js";
import { clear, el } from "./dom.js";
import type { Choice, JudgePair } from "./types.js";

// Judge-facing view: two images side by side at equal rendered size, a
// click (or arrow key) submits the side as the more realistic one. The
// view renders image URLs only; no method label ever reaches this DOM,
// and alt text is positional on purpose.

export class JudgeFlow {
  private currentPair: JudgePair | null = null;
  private voteInFlight = false;
  private pendingChoice: Choice | null = null; // survives network failures
  private chain: Promise<void> = Promise.resolve();
  private keyHandler: ((ev: KeyboardEvent) => void) | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: StudyApi,
    private readonly studyId: string,
    private readonly judgeId: string,
  ) {}

  start(): Promise<void> {
    this.keyHandler = (ev: KeyboardEvent) => {
      if (ev.key === "ArrowLeft") this.choose("left");
      if (ev.key === "ArrowRight") this.choose("right");
    };
    document.addEventListener("keydown", this.keyHandler);
    return this.enqueue(() => this.loadNext());
  }

  stop(): void {
    if (this.keyHandler) {
      document.removeEventListener("keydown", this.keyHandler);
      this.keyHandler = null;
    }
  }

  /** Resolves once every queued fetch/vote has finished (test hook). */
  settled(): Promise<void> {
    return this.chain;
  }

  private enqueue(task: () => Promise<void>): Promise<void> {
    this.chain = this.chain.then(task, task);
    return this.chain;
  }

  choose(side: Choice): void {
    if (this.voteInFlight || this.currentPair === null) return; // idempotency guard
    this.voteInFlight = true;
    this.pendingChoice = side;
    void this.enqueue(() => this.submitPending());
  }

  private async submitPending(): Promise<void> {
    const pair = this.currentPair;
    const choice = this.pendingChoice;
    if (pair === null || choice === null) {
      this.voteInFlight = false;
      return;
    }
    try {
      await this.api.submitVote(this.studyId, pair.pair_id, this.judgeId, choice);
      this.currentPair = null;
      this.pendingChoice = null;
      this.voteInFlight = false;
      await this.loadNext();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone completed the pair first (or this vote already landed):
        // drop it and move on
        this.currentPair = null;
        this.pendingChoice = null;
        this.voteInFlight = false;
        await this.loadNext();
        return;
      }
      // network failure: keep the pending choice, offer a retry that
      // resubmits the same vote (the server rejects true duplicates)
      this.voteInFlight = false;
      this.renderRetryBanner();
    }
  }

  private async loadNext(): Promise<void> {
    try {
      const next = await this.api.nextTask(this.studyId, this.judgeId);
      if (next.pair === null) {
        this.renderCompletion(next.judged, next.total);
      } else {
        this.currentPair = next.pair;
        this.renderPair(next.pair, next.judged, next.total);
      }
    } catch {
      this.renderRetryBanner();
    }
  }

  private renderPair(pair: JudgePair, judged: number, total: number): void {
    clear(this.root);
    const prompt = el("p", { class: "prompt" }, [
      "Which image looks more realistic? Click it (or use ← / →).",
    ]);
    const left = el("img", {
      class: "option",
      "data-side": "left",
      src: this.api.resolve(pair.left_image),
      alt: "left option",
    });
    const right = el("img", {
      class: "option",
      "data-side": "right",
      src: this.api.resolve(pair.right_image),
      alt: "right option",
    });
    left.addEventListener("click", () => this.choose("left"));
    right.addEventListener("click", () => this.choose("right"));
    const pairRow = el("div", { class: "pair" }, [left, right]);
    const progress = el("p", { class: "progress" }, [`${judged} / ${total} judged`]);
    this.root.append(prompt, pairRow, progress);
  }

  private renderCompletion(judged: number, total: number): void {
    clear(this.root);
    this.root.append(
      el("div", { class: "completion" }, [
        el("h2", {}, ["All done"]),
        el("p", { class: "progress" }, [`${judged} / ${total} judged`]),
        el("p", {}, ["Thank you! You can close this tab."]),
      ]),
    );
  }

  private renderRetryBanner(): void {
    const existing = this.root.querySelector(".retry-banner");
    if (existing) return;
    const button = el("button", { class: "retry" }, ["Retry"]);
    button.addEventListener("click", () => {
      banner.remove();
      void this.enqueue(() =>
        this.pendingChoice !== null ? this.submitPendingWithFlag() : this.loadNext(),
      );
    });
    const banner = el("div", { class: "retry-banner", role: "alert" }, [
      el("span", {}, ["Connection problem; nothing was lost."]),
      button,
    ]);
    this.root.append(banner);
  }

  private submitPendingWithFlag(): Promise<void> {
    this.voteInFlight = true;
    return this.submitPending();
  }
}
