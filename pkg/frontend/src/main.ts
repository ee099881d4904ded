import { StudyApi } from "./api.js";
import { AdminDashboard } from "./dashboard.js";
import { el } from "./dom.js";
import { JudgeFlow } from "./judge.js";

// Entry point. Query parameters:
//   view=judge|admin   (default judge)
//   study=<study_id>   required
//   judge=<judge_id>   required for the judge view
//   api=<base url>     service base URL (default: same origin)

function mount(): void {
  const params = new URLSearchParams(window.location.search);
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  const studyId = params.get("study");
  const api = new StudyApi(params.get("api") ?? "");
  if (!studyId) {
    root.append(
      el("p", { class: "error" }, [
        "Missing ?study=<id> (and ?judge=<id> for the judging view).",
      ]),
    );
    return;
  }

  if ((params.get("view") ?? "judge") === "admin") {
    void new AdminDashboard(root, api, studyId).start();
    return;
  }

  const judgeId = params.get("judge");
  if (!judgeId) {
    root.append(el("p", { class: "error" }, ["Missing ?judge=<id>."]));
    return;
  }
  void new JudgeFlow(root, api, studyId, judgeId).start();
}

mount();
