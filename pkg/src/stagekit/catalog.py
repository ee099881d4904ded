"""Product-catalog ingestion, filtering, and summary statistics.

Catalogs arrive as JSONL, one product per line:

    {"id": "p1", "image": "imgs/p1.png", "category": "Furniture > Chairs",
     "staged": true, "impressions": 12000}

``impressions`` is optional. The hierarchical category string uses a
" > " separator in serialized form; internally it is an ordered list of
category names.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IntegrityError, ParseError

CATEGORY_SEP = " > "


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    image_path: str
    category_path: tuple[str, ...]
    staged: bool
    impressions: int | None = None

    def __post_init__(self):
        if not self.id:
            raise IntegrityError("entry id must be non-empty")
        if not self.category_path:
            raise IntegrityError(f"entry {self.id!r}: category_path must be non-empty")
        if self.impressions is not None and self.impressions < 0:
            raise IntegrityError(f"entry {self.id!r}: impressions must be >= 0")

    @property
    def category(self) -> str:
        return CATEGORY_SEP.join(self.category_path)


@dataclass(frozen=True)
class Catalog:
    entries: tuple[CatalogEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen: set[str] = set()
        for e in self.entries:
            if e.id in seen:
                raise IntegrityError(f"duplicate entry id {e.id!r}")
            seen.add(e.id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, entry_id: str) -> CatalogEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)


def parse_entry(obj: dict) -> CatalogEntry:
    try:
        raw_cat = obj["category"]
        parts = tuple(p.strip() for p in str(raw_cat).split(">"))
        if any(not p for p in parts):
            raise ValueError(f"malformed category {raw_cat!r}")
        return CatalogEntry(
            id=str(obj["id"]),
            image_path=str(obj["image"]),
            category_path=parts,
            staged=bool(obj["staged"]),
            impressions=int(obj["impressions"]) if "impressions" in obj else None,
        )
    except KeyError as exc:
        raise ValueError(f"missing key {exc.args[0]!r}") from exc


def ingest_catalog(path: str | Path) -> Catalog:
    """Read a JSONL catalog, preserving file order.

    Raises ParseError (with line number) on malformed lines and
    IntegrityError on duplicate ids.
    """
    entries: list[CatalogEntry] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                entry = parse_entry(obj)
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                raise ParseError(str(exc), line=lineno) from exc
            if entry.id in seen:
                raise IntegrityError(f"duplicate entry id {entry.id!r}")
            seen.add(entry.id)
            entries.append(entry)
    return Catalog(tuple(entries))


def export_catalog(cat: Catalog, path: str | Path) -> None:
    """Write JSONL with stable key order (id, image, category, staged,
    impressions); ingest(export(cat)) round-trips field-exact."""
    with open(path, "w", encoding="utf-8") as fh:
        for e in cat.entries:
            obj: dict = {
                "id": e.id,
                "image": e.image_path,
                "category": e.category,
                "staged": e.staged,
            }
            if e.impressions is not None:
                obj["impressions"] = e.impressions
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def filter_catalog(cat: Catalog,
                   staged: bool | None = None,
                   top_category: str | None = None,
                   min_impressions: int | None = None,
                   min_subcategory_count: int | None = None) -> Catalog:
    """Keep entries satisfying every provided predicate; order preserved.

    ``min_subcategory_count`` is applied last: after the other predicates,
    only entries whose full category_path occurs at least that many times
    among the survivors are kept. Entries without an impressions value fail
    any ``min_impressions`` filter.
    """
    kept = list(cat.entries)
    if staged is not None:
        kept = [e for e in kept if e.staged == staged]
    if top_category is not None:
        kept = [e for e in kept if e.category_path[0] == top_category]
    if min_impressions is not None:
        kept = [e for e in kept
                if e.impressions is not None and e.impressions >= min_impressions]
    if min_subcategory_count is not None:
        counts = Counter(e.category_path for e in kept)
        kept = [e for e in kept if counts[e.category_path] >= min_subcategory_count]
    return Catalog(tuple(kept))


def category_stats(cat: Catalog, depth: int) -> list[tuple[str, int]]:
    """Entry counts grouped by category_path truncated to ``depth``,
    sorted by count descending, ties lexicographic."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    counts = Counter(CATEGORY_SEP.join(e.category_path[:depth]) for e in cat.entries)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
