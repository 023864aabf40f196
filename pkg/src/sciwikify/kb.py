"""Offline Wikipedia knowledge base built from a JSON Lines snapshot."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

DAB_SUFFIX = " (disambiguation)"

_WS_RE = re.compile(r"\s+")


class KBBuildError(ValueError):
    pass


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_surface(surface: str) -> str:
    """Case-fold, collapse internal whitespace and strip surrounding punctuation."""
    s = _WS_RE.sub(" ", unicodedata.normalize("NFC", surface).casefold()).strip()
    start, end = 0, len(s)
    while start < end and (_is_punct(s[start]) or s[start].isspace()):
        start += 1
    while end > start and (_is_punct(s[end - 1]) or s[end - 1].isspace()):
        end -= 1
    return s[start:end]


@dataclass(frozen=True)
class Entity:
    title: str
    summary: str = ""
    redirects: tuple[str, ...] = ()
    dab_entries: tuple[str, ...] = ()
    is_dab_page: bool = False

    @classmethod
    def from_record(cls, rec: Mapping) -> Entity:
        return cls(
            title=rec["title"],
            summary=rec.get("summary", "") or "",
            redirects=tuple(rec.get("redirects", ()) or ()),
            dab_entries=tuple(rec.get("dab_entries", ()) or ()),
            is_dab_page=bool(rec.get("is_dab_page", False)),
        )

    def to_record(self) -> dict:
        return {
            "title": self.title,
            "summary": self.summary,
            "redirects": list(self.redirects),
            "dab_entries": list(self.dab_entries),
            "is_dab_page": self.is_dab_page,
        }


def surfaces_of(entity: Entity) -> list[str]:
    """Normalised surface forms under which ``entity`` is indexed."""
    forms = [entity.title, *entity.redirects]
    if entity.is_dab_page and entity.title.endswith(DAB_SUFFIX):
        # "Java (disambiguation)" also answers for plain "Java"
        forms.append(entity.title[: -len(DAB_SUFFIX)])
    out = []
    for f in forms:
        key = normalize_surface(f)
        if key and key not in out:
            out.append(key)
    return out


@dataclass(frozen=True)
class KnowledgeBase:
    entities: Mapping[str, Entity] = field(default_factory=dict)
    surface_index: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entities)

    def __contains__(self, title: str) -> bool:
        return title in self.entities

    def __getitem__(self, title: str) -> Entity:
        return self.entities[title]

    def __iter__(self) -> Iterator[Entity]:
        return iter(self.entities.values())


def build_kb(records: Iterable[Mapping | Entity]) -> KnowledgeBase:
    """Index entity records in stream order.

    Raises KBBuildError on a duplicate title, an empty title, a non-dab page
    without summary, or a dab entry naming a title absent from the stream.
    """
    entities: dict[str, Entity] = {}
    index: dict[str, list[str]] = {}
    for rec in records:
        ent = rec if isinstance(rec, Entity) else Entity.from_record(rec)
        if not ent.title:
            raise KBBuildError("entity with empty title")
        if ent.title in entities:
            raise KBBuildError(f"duplicate title: {ent.title!r}")
        if not ent.is_dab_page and not ent.summary:
            raise KBBuildError(f"entity {ent.title!r} has an empty summary")
        entities[ent.title] = ent
        for key in surfaces_of(ent):
            index.setdefault(key, []).append(ent.title)
    for ent in entities.values():
        for entry in ent.dab_entries:
            if entry not in entities:
                raise KBBuildError(f"dab page {ent.title!r} lists missing title {entry!r}")
    return KnowledgeBase(entities, {k: tuple(v) for k, v in index.items()})


def iter_snapshot(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise KBBuildError(f"{path}:{n}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or not isinstance(rec.get("title"), str):
                raise KBBuildError(f"{path}:{n}: record needs a string 'title'")
            yield rec


def load_snapshot(path: str | Path) -> KnowledgeBase:
    return build_kb(iter_snapshot(path))


def lookup_candidates(kb: KnowledgeBase, surface: str) -> list[Entity]:
    """Entities a surface form may refer to.

    Direct title/redirect hits are returned as themselves; a dab page hit is
    replaced by the pages it lists.  When a plain page and a dab page share
    the surface, both contribute.
    """
    out: list[Entity] = []
    seen: set[str] = set()

    def add(title: str) -> None:
        if title not in seen:
            seen.add(title)
            out.append(kb.entities[title])

    for title in kb.surface_index.get(normalize_surface(surface), ()):
        ent = kb.entities[title]
        if ent.is_dab_page:
            for entry in ent.dab_entries:
                add(entry)
        else:
            add(title)
            for entry in ent.dab_entries:
                add(entry)
    return out


def has_concept(kb: KnowledgeBase, surface: str) -> bool:
    return bool(lookup_candidates(kb, surface))
