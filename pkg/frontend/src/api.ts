import type { Choice, NextTaskResponse, StudyReport, VoteResponse } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function expectJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

/** Thin client over the study service; the fetch implementation is
 * injectable so tests can run against a scripted mock. */
export class StudyApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  resolve(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async nextTask(studyId: string, judgeId: string): Promise<NextTaskResponse> {
    const url = this.resolve(
      `/studies/${encodeURIComponent(studyId)}/next?judge=${encodeURIComponent(judgeId)}`,
    );
    return expectJson<NextTaskResponse>(await this.fetchFn(url));
  }

  async submitVote(
    studyId: string,
    pairId: string,
    judgeId: string,
    choice: Choice,
  ): Promise<VoteResponse> {
    const url = this.resolve(`/studies/${encodeURIComponent(studyId)}/votes`);
    const resp = await this.fetchFn(url, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ pair_id: pairId, judge_id: judgeId, choice }),
    });
    return expectJson<VoteResponse>(resp);
  }

  async report(studyId: string): Promise<StudyReport> {
    const url = this.resolve(`/studies/${encodeURIComponent(studyId)}/report`);
    return expectJson<StudyReport>(await this.fetchFn(url));
  }
}
