import { beforeEach, describe, expect, it } from "vitest";

import { StudyApi } from "../src/api.js";
import { JudgeFlow } from "../src/judge.js";
import { fivePairStudy } from "./mock_service.js";

const METHOD_LABELS = ["copy-paste+WBL", "ground-truth", "pix2pix", "method_a", "method_b"];

function assertNoLabels() {
  const html = document.body.innerHTML;
  for (const label of METHOD_LABELS) {
    expect(html).not.toContain(label);
  }
}

function clickSide(side: "left" | "right") {
  const img = document.querySelector<HTMLImageElement>(`img[data-side="${side}"]`);
  expect(img).not.toBeNull();
  img!.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

describe("judge flow", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
  });

  it("completes a 5-pair study with exactly 5 votes and no label leakage", async () => {
    const mock = fivePairStudy();
    const api = new StudyApi("", mock.fetch);
    const flow = new JudgeFlow(root, api, "study-1", "judge-7");
    await flow.start();

    expect(root.querySelector(".progress")!.textContent).toBe("0 / 5 judged");
    assertNoLabels();

    const sides: ("left" | "right")[] = ["left", "right", "left", "left", "right"];
    for (let i = 0; i < sides.length; i++) {
      expect(root.querySelectorAll("img.option")).toHaveLength(2);
      assertNoLabels();
      clickSide(sides[i]!);
      await flow.settled();
      const progress = root.querySelector(".progress")!.textContent;
      expect(progress).toBe(`${i + 1} / 5 judged`);
    }

    // completion screen, no further pairs
    expect(root.querySelector(".completion")).not.toBeNull();
    expect(root.querySelectorAll("img.option")).toHaveLength(0);
    assertNoLabels();

    expect(mock.votes).toHaveLength(5);
    expect(new Set(mock.votes.map((v) => v.pair_id)).size).toBe(5);
    expect(mock.votes.map((v) => v.choice)).toEqual(sides);
    expect(mock.votes.every((v) => v.judge_id === "judge-7")).toBe(true);
    flow.stop();
  });

  it("posts at most one vote per pair under a double-click", async () => {
    const mock = fivePairStudy();
    const flow = new JudgeFlow(root, new StudyApi("", mock.fetch), "study-1", "j");
    await flow.start();

    clickSide("left");
    clickSide("left"); // second click races the first; guard must drop it
    await flow.settled();

    expect(mock.votes.filter((v) => v.pair_id === "p0")).toHaveLength(1);
    flow.stop();
  });

  it("refetches the next task after a 409", async () => {
    const mock = fivePairStudy();
    mock.conflictNextVote = true;
    const flow = new JudgeFlow(root, new StudyApi("", mock.fetch), "study-1", "j");
    await flow.start();

    clickSide("left");
    await flow.settled();

    // the conflicted vote was not recorded, but the flow moved on
    expect(mock.votes).toHaveLength(0);
    expect(root.querySelectorAll("img.option")).toHaveLength(2);
    flow.stop();
  });

  it("keeps the vote across a network failure and resubmits on retry", async () => {
    const mock = fivePairStudy();
    const flow = new JudgeFlow(root, new StudyApi("", mock.fetch), "study-1", "j");
    await flow.start();

    mock.failNextRequests = 1;
    clickSide("right");
    await flow.settled();

    expect(root.querySelector(".retry-banner")).not.toBeNull();
    expect(mock.votes).toHaveLength(0);

    root.querySelector<HTMLButtonElement>("button.retry")!.dispatchEvent(
      new MouseEvent("click", { bubbles: true }),
    );
    await flow.settled();

    expect(mock.votes).toHaveLength(1);
    expect(mock.votes[0]).toMatchObject({ pair_id: "p0", choice: "right" });
    expect(root.querySelector(".progress")!.textContent).toBe("1 / 5 judged");
    flow.stop();
  });

  it("supports arrow-key voting", async () => {
    const mock = fivePairStudy();
    const flow = new JudgeFlow(root, new StudyApi("", mock.fetch), "study-1", "j");
    await flow.start();

    document.dispatchEvent(new KeyboardEvent("keydown", { key: "ArrowRight" }));
    await flow.settled();

    expect(mock.votes).toHaveLength(1);
    expect(mock.votes[0]!.choice).toBe("right");
    flow.stop();
  });

  it("skips pairs that already hold all required votes", async () => {
    const mock = fivePairStudy();
    for (const judge of ["a", "b", "c"]) {
      mock.votes.push({ pair_id: "p0", judge_id: judge, choice: "left" });
    }
    const flow = new JudgeFlow(root, new StudyApi("", mock.fetch), "study-1", "j");
    await flow.start();

    clickSide("left");
    await flow.settled();
    expect(
      mock.votes.filter((v) => v.judge_id === "j").map((v) => v.pair_id),
    ).toEqual(["p1"]);
    flow.stop();
  });
});
