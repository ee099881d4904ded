"""HTTP front of the study store.

Endpoints (JSON bodies are stable; the judge-facing ones never carry
method labels):

- POST /studies                          -> 201 {study_id, n_pairs}
- GET  /studies/{id}/next?judge={jid}    -> 200 {pair|null, judged, total}
- POST /studies/{id}/votes               -> 200 {accepted, votes, complete}
- GET  /studies/{id}/report              -> 200 report JSON
- GET  /images/{ref}                     -> 200 image bytes

404 for unknown studies/pairs/refs, 409 for duplicate or late votes.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, Field

from ..errors import ConflictError, InvalidInputError, NotFoundError
from .store import StudyStore

MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg",
               ".gif": "image/gif"}


class PairSpec(BaseModel):
    image_a: str
    image_b: str
    method_a: str
    method_b: str
    pair_id: str | None = None


class CreateStudyRequest(BaseModel):
    name: str
    pairs: list[PairSpec] = Field(min_length=1)
    seed: int = 0
    votes_required_per_pair: int = 3


class VoteRequest(BaseModel):
    pair_id: str
    judge_id: str
    choice: str


def create_app(store: StudyStore) -> FastAPI:
    app = FastAPI(title="stagekit perceptual study service")

    @app.exception_handler(NotFoundError)
    async def _not_found(_req, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConflictError)
    async def _conflict(_req, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(InvalidInputError)
    async def _invalid(_req, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.post("/studies", status_code=201)
    def create_study(req: CreateStudyRequest):
        study = store.create_study(
            name=req.name,
            pairs_spec=[p.model_dump() for p in req.pairs],
            seed=req.seed,
            votes_required_per_pair=req.votes_required_per_pair,
        )
        return {"study_id": study.study_id, "n_pairs": len(study.pairs)}

    @app.get("/studies/{study_id}/next")
    def next_task(study_id: str, judge: str = Query(...)):
        study = store.get(study_id)
        pair = store.next_task(study_id, judge)
        judged, total = store.judge_progress(study_id, judge)
        if pair is None:
            return {"pair": None, "judged": judged, "total": total}
        base = "/images"
        left_side, right_side = ("a", "b") if pair.left_is_a else ("b", "a")
        return {
            "pair": {
                "pair_id": pair.pair_id,
                "left_image": f"{base}/{store.image_ref(study, pair, left_side)}",
                "right_image": f"{base}/{store.image_ref(study, pair, right_side)}",
                "votes_so_far": len(study.votes_for(pair.pair_id)),
                "votes_required": study.votes_required_per_pair,
            },
            "judged": judged,
            "total": total,
        }

    @app.post("/studies/{study_id}/votes")
    def submit_vote(study_id: str, req: VoteRequest):
        store.submit_vote(study_id, req.pair_id, req.judge_id, req.choice)
        study = store.get(study_id)
        votes = len(study.votes_for(req.pair_id))
        return {"accepted": True, "votes": votes,
                "complete": study.is_complete(req.pair_id)}

    @app.get("/studies/{study_id}/report")
    def report(study_id: str):
        return store.report(study_id).to_dict()

    @app.get("/images/{ref}")
    def image(ref: str):
        path = store.resolve_image(ref)
        if not path.is_file():
            raise NotFoundError(f"image file missing for ref {ref!r}")
        media = MEDIA_TYPES.get(Path(path).suffix.lower(), "application/octet-stream")
        return FileResponse(str(path), media_type=media)

    return app
