"""Study state, persistence, and majority-vote reporting.

A study is a list of comparison pairs; each pair shows two method outputs
in a seeded random left/right order and collects an odd number of votes
from distinct judges, so the majority is always decidable. Storage is a
per-study manifest plus an append-only vote log; replaying the log
reconstructs identical state after a crash.

Judges only ever see opaque image references: the left/right tokens are
hashes, so neither URLs nor their ordering leak which method is which.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConflictError, IntegrityError, InvalidInputError, NotFoundError


@dataclass(frozen=True)
class ComparisonPair:
    pair_id: str
    image_a: str
    image_b: str
    method_a: str
    method_b: str
    left_is_a: bool

    def __post_init__(self):
        if self.method_a == self.method_b:
            raise IntegrityError(
                f"pair {self.pair_id}: methods must differ, both are {self.method_a!r}")

    @property
    def left_image(self) -> str:
        return self.image_a if self.left_is_a else self.image_b

    @property
    def right_image(self) -> str:
        return self.image_b if self.left_is_a else self.image_a

    def method_of_choice(self, choice: str) -> str:
        if choice not in ("left", "right"):
            raise InvalidInputError(f"choice must be 'left' or 'right', got {choice!r}")
        picked_a = (choice == "left") == self.left_is_a
        return self.method_a if picked_a else self.method_b


@dataclass(frozen=True)
class Vote:
    pair_id: str
    judge_id: str
    choice: str  # "left" | "right"
    timestamp: float


@dataclass
class Study:
    study_id: str
    name: str
    pairs: list[ComparisonPair]
    votes_required_per_pair: int
    seed: int
    image_refs: dict[str, str] = field(default_factory=dict)  # ref -> path
    votes: list[Vote] = field(default_factory=list)

    def __post_init__(self):
        if self.votes_required_per_pair % 2 != 1:
            raise IntegrityError("votes_required_per_pair must be odd")
        ids = [p.pair_id for p in self.pairs]
        if len(ids) != len(set(ids)):
            raise IntegrityError("pair ids must be unique")

    def pair(self, pair_id: str) -> ComparisonPair:
        for p in self.pairs:
            if p.pair_id == pair_id:
                return p
        raise NotFoundError(f"unknown pair {pair_id!r}")

    def votes_for(self, pair_id: str) -> list[Vote]:
        return [v for v in self.votes if v.pair_id == pair_id]

    def is_complete(self, pair_id: str) -> bool:
        return len(self.votes_for(pair_id)) >= self.votes_required_per_pair


@dataclass(frozen=True)
class MatchupSummary:
    method_x: str
    method_y: str
    completed_pairs: int
    wins: dict[str, int]
    win_pct: dict[str, float]


@dataclass(frozen=True)
class StudyReport:
    study_id: str
    name: str
    total_pairs: int
    completed_pairs: int
    incomplete_pairs: int
    pair_winners: dict[str, str | None]  # pair_id -> winning method (None = incomplete)
    matchups: tuple[MatchupSummary, ...]

    def to_dict(self) -> dict:
        return {
            "study_id": self.study_id,
            "name": self.name,
            "total_pairs": self.total_pairs,
            "completed_pairs": self.completed_pairs,
            "incomplete_pairs": self.incomplete_pairs,
            "pairs": [{"pair_id": pid, "winner_method": w}
                      for pid, w in self.pair_winners.items()],
            "matchups": [{
                "method_x": m.method_x,
                "method_y": m.method_y,
                "completed_pairs": m.completed_pairs,
                "wins": m.wins,
                "win_pct": m.win_pct,
            } for m in self.matchups],
        }


def compute_report(study: Study) -> StudyReport:
    """Majority winners per completed pair, aggregated per method matchup.

    Incomplete pairs are excluded from percentages and reported as such. A
    pair's winner is the method holding strictly more than half of its cast
    votes, mapped back through the left/right assignment.
    """
    winners: dict[str, str | None] = {}
    for p in study.pairs:
        votes = study.votes_for(p.pair_id)
        if len(votes) < study.votes_required_per_pair:
            winners[p.pair_id] = None
            continue
        tally: dict[str, int] = {p.method_a: 0, p.method_b: 0}
        for v in votes:
            tally[p.method_of_choice(v.choice)] += 1
        total = sum(tally.values())
        winner = max(tally, key=lambda m: tally[m])
        winners[p.pair_id] = winner if tally[winner] * 2 > total else None

    groups: dict[tuple[str, str], list[ComparisonPair]] = {}
    for p in study.pairs:
        groups.setdefault(tuple(sorted((p.method_a, p.method_b))), []).append(p)

    matchups = []
    for (mx, my), pairs in sorted(groups.items()):
        completed = [p for p in pairs if winners[p.pair_id] is not None]
        wins = {mx: 0, my: 0}
        for p in completed:
            wins[winners[p.pair_id]] += 1
        n = len(completed)
        pct = {m: (100.0 * c / n if n else 0.0) for m, c in wins.items()}
        matchups.append(MatchupSummary(method_x=mx, method_y=my,
                                       completed_pairs=n, wins=wins, win_pct=pct))

    completed_total = sum(1 for w in winners.values() if w is not None)
    return StudyReport(
        study_id=study.study_id,
        name=study.name,
        total_pairs=len(study.pairs),
        completed_pairs=completed_total,
        incomplete_pairs=len(study.pairs) - completed_total,
        pair_winners=winners,
        matchups=tuple(matchups),
    )


def _slug(name: str) -> str:
    s = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return s or "study"


def _image_ref(study_id: str, pair_id: str, side: str) -> str:
    return hashlib.sha256(f"{study_id}|{pair_id}|{side}".encode()).hexdigest()[:16]


class StudyStore:
    """File-backed store: {root}/{study_id}/manifest.json + votes.jsonl.

    Vote writes are serialized per study; reads are lock-free snapshots of
    in-memory state reconstructed from disk at startup.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._studies: dict[str, Study] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._image_refs: dict[str, str] = {}  # global ref -> path
        for manifest in sorted(self.root.glob("*/manifest.json")):
            study = self._load_study(manifest)
            self._studies[study.study_id] = study
            self._locks[study.study_id] = threading.Lock()
            self._image_refs.update(study.image_refs)

    # -- creation -------------------------------------------------------------

    def create_study(self, name: str, pairs_spec: list[dict], seed: int,
                     votes_required_per_pair: int = 3,
                     study_id: str | None = None) -> Study:
        """Create and persist a study from pair specs
        [{image_a, image_b, method_a, method_b, pair_id?}, ...]; left/right
        order per pair comes deterministically from the seed."""
        if not pairs_spec:
            raise InvalidInputError("a study needs at least one pair")
        if study_id is None:
            digest = hashlib.sha256(f"{name}|{seed}".encode()).hexdigest()[:8]
            study_id = f"{_slug(name)}-{digest}"
        rng = random.Random(seed)
        pairs: list[ComparisonPair] = []
        refs: dict[str, str] = {}
        for i, spec in enumerate(pairs_spec):
            pair_id = str(spec.get("pair_id") or f"pair-{i:04d}")
            for side in ("image_a", "image_b"):
                path = Path(spec[side])
                if not path.is_file():
                    raise InvalidInputError(
                        f"pair {pair_id}: unreadable image {path}")
            pair = ComparisonPair(
                pair_id=pair_id,
                image_a=str(spec["image_a"]),
                image_b=str(spec["image_b"]),
                method_a=str(spec["method_a"]),
                method_b=str(spec["method_b"]),
                left_is_a=bool(rng.getrandbits(1)),
            )
            pairs.append(pair)
            refs[_image_ref(study_id, pair_id, "a")] = pair.image_a
            refs[_image_ref(study_id, pair_id, "b")] = pair.image_b
        study = Study(study_id=study_id, name=name, pairs=pairs,
                      votes_required_per_pair=votes_required_per_pair,
                      seed=seed, image_refs=refs)
        with self._registry_lock:
            if study_id in self._studies:
                raise ConflictError(f"study {study_id!r} already exists")
            self._persist_manifest(study)
            (self.root / study_id / "votes.jsonl").touch()
            self._studies[study_id] = study
            self._locks[study_id] = threading.Lock()
            self._image_refs.update(refs)
        return study

    # -- queries ---------------------------------------------------------------

    def get(self, study_id: str) -> Study:
        try:
            return self._studies[study_id]
        except KeyError:
            raise NotFoundError(f"unknown study {study_id!r}") from None

    def next_task(self, study_id: str, judge_id: str) -> ComparisonPair | None:
        """Lowest-pair_id pair that is incomplete and unseen by this judge;
        None when the judge is done."""
        study = self.get(study_id)
        voted = {v.pair_id for v in study.votes if v.judge_id == judge_id}
        candidates = [p for p in sorted(study.pairs, key=lambda p: p.pair_id)
                      if p.pair_id not in voted and not study.is_complete(p.pair_id)]
        return candidates[0] if candidates else None

    def judge_progress(self, study_id: str, judge_id: str) -> tuple[int, int]:
        study = self.get(study_id)
        voted = {v.pair_id for v in study.votes if v.judge_id == judge_id}
        return len(voted), len(study.pairs)

    def resolve_image(self, ref: str) -> Path:
        try:
            return Path(self._image_refs[ref])
        except KeyError:
            raise NotFoundError(f"unknown image ref {ref!r}") from None

    def image_ref(self, study: Study, pair: ComparisonPair, side: str) -> str:
        return _image_ref(study.study_id, pair.pair_id, side)

    # -- mutation ---------------------------------------------------------------

    def submit_vote(self, study_id: str, pair_id: str, judge_id: str,
                    choice: str) -> Vote:
        """Atomically append one vote; duplicate (pair, judge) or a vote on
        a complete pair is a conflict."""
        if choice not in ("left", "right"):
            raise InvalidInputError(f"choice must be 'left' or 'right', got {choice!r}")
        study = self.get(study_id)
        study.pair(pair_id)  # raises NotFoundError on unknown pair
        with self._locks[study_id]:
            existing = study.votes_for(pair_id)
            if any(v.judge_id == judge_id for v in existing):
                raise ConflictError(
                    f"judge {judge_id!r} already voted on pair {pair_id!r}")
            if len(existing) >= study.votes_required_per_pair:
                raise ConflictError(f"pair {pair_id!r} already has all its votes")
            vote = Vote(pair_id=pair_id, judge_id=judge_id, choice=choice,
                        timestamp=time.time())
            line = json.dumps({"pair_id": vote.pair_id, "judge_id": vote.judge_id,
                               "choice": vote.choice, "timestamp": vote.timestamp})
            with open(self.root / study_id / "votes.jsonl", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
            study.votes.append(vote)
        return vote

    def report(self, study_id: str) -> StudyReport:
        return compute_report(self.get(study_id))

    # -- persistence -------------------------------------------------------------

    def _persist_manifest(self, study: Study) -> None:
        d = self.root / study.study_id
        d.mkdir(parents=True, exist_ok=True)
        manifest = {
            "study_id": study.study_id,
            "name": study.name,
            "seed": study.seed,
            "votes_required_per_pair": study.votes_required_per_pair,
            "pairs": [{
                "pair_id": p.pair_id, "image_a": p.image_a, "image_b": p.image_b,
                "method_a": p.method_a, "method_b": p.method_b,
                "left_is_a": p.left_is_a,
            } for p in study.pairs],
            "image_refs": study.image_refs,
        }
        (d / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def _load_study(self, manifest_path: Path) -> Study:
        data = json.loads(manifest_path.read_text(encoding="utf-8"))
        pairs = [ComparisonPair(**p) for p in data["pairs"]]
        study = Study(study_id=data["study_id"], name=data["name"], pairs=pairs,
                      votes_required_per_pair=data["votes_required_per_pair"],
                      seed=data["seed"], image_refs=data.get("image_refs", {}))
        votes_path = manifest_path.parent / "votes.jsonl"
        if votes_path.exists():
            with open(votes_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        study.votes.append(Vote(**json.loads(line)))
        return study
