// JSON shapes of the study service API. The judge-facing payloads carry
// image URLs only; method labels exist solely in the admin report.

export interface JudgePair {
  pair_id: string;
  left_image: string;
  right_image: string;
  votes_so_far: number;
  votes_required: number;
}

export interface NextTaskResponse {
  pair: JudgePair | null;
  judged: number;
  total: number;
}

export interface VoteResponse {
  accepted: boolean;
  votes: number;
  complete: boolean;
}

export interface MatchupReport {
  method_x: string;
  method_y: string;
  completed_pairs: number;
  wins: Record<string, number>;
  win_pct: Record<string, number>;
}

export interface StudyReport {
  study_id: string;
  name: string;
  total_pairs: number;
  completed_pairs: number;
  incomplete_pairs: number;
  pairs: { pair_id: string; winner_method: string | null }[];
  matchups: MatchupReport[];
}

export type Choice = "left" | "right";
