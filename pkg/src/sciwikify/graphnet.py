"""Merged citation / author-publication network and metapath neighbourhoods.

Node types are papers, authors and years.  A paper is written by authors
and published in a year; papers cite papers.  Metapaths relative to a
target paper P*:

* Author:    P* -written_by-> A <-written_by- P?
* Reference: P* -cites-> P?            (what the target references)
* Citation:  P? -cites-> P*            (who cites the target)
* CRA:       union of the three
* YearRestrictedCRA: CRA whose Author leg keeps only P? published within
  ``back_window_years`` before (or in the same year as) P*.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from statistics import fmean
from typing import Iterable, Mapping


class GraphLoadError(ValueError):
    pass


class PaperNotFound(KeyError):
    pass


class MetapathKind(str, Enum):
    AUTHOR = "Author"
    REFERENCE = "Reference"
    CITATION = "Citation"
    CRA = "CRA"
    YEAR_RESTRICTED_CRA = "YearRestrictedCRA"


@dataclass(frozen=True)
class MetapathSpec:
    kind: MetapathKind = MetapathKind.YEAR_RESTRICTED_CRA
    back_window_years: int = 5

    def __post_init__(self):
        object.__setattr__(self, "kind", MetapathKind(self.kind))
        if self.kind is MetapathKind.YEAR_RESTRICTED_CRA and self.back_window_years < 1:
            raise ValueError("back_window_years must be >= 1 for YearRestrictedCRA")


@dataclass(frozen=True)
class PaperRecord:
    id: str
    abstract: str = ""
    author_ids: tuple[str, ...] = ()
    year: int | None = None

    def to_record(self) -> dict:
        return {"id": self.id, "abstract": self.abstract, "authors": list(self.author_ids), "year": self.year}


@dataclass(frozen=True)
class ScholarlyGraph:
    papers: Mapping[str, PaperRecord] = field(default_factory=dict)
    authors: Mapping[str, frozenset[str]] = field(default_factory=dict)
    cites: Mapping[str, frozenset[str]] = field(default_factory=dict)
    cited_by: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self.papers

    def __len__(self) -> int:
        return len(self.papers)

    def year_of(self, paper_id: str) -> int | None:
        return self.papers[paper_id].year

    def citation_count(self, paper_id: str) -> int:
        return len(self.cited_by.get(paper_id, ()))

    def edges(self) -> list[tuple[str, str]]:
        """All citation edges as sorted (src, dst) pairs."""
        return sorted((s, d) for s, dsts in self.cites.items() for d in dsts)


def build_graph(papers: Iterable[PaperRecord], cite_edges: Iterable[tuple[str, str]]) -> ScholarlyGraph:
    recs: dict[str, PaperRecord] = {}
    for p in papers:
        if p.id in recs:
            raise GraphLoadError(f"duplicate paper id {p.id!r}")
        recs[p.id] = p
    cites: dict[str, set[str]] = {}
    cited_by: dict[str, set[str]] = {}
    for src, dst in cite_edges:
        for pid in (src, dst):
            if pid not in recs:
                recs[pid] = PaperRecord(pid)
        cites.setdefault(src, set()).add(dst)
        cited_by.setdefault(dst, set()).add(src)
    authors: dict[str, set[str]] = {}
    for p in recs.values():
        for a in p.author_ids:
            authors.setdefault(a, set()).add(p.id)
    return ScholarlyGraph(
        papers=recs,
        authors={a: frozenset(ps) for a, ps in sorted(authors.items())},
        cites={k: frozenset(v) for k, v in sorted(cites.items())},
        cited_by={k: frozenset(v) for k, v in sorted(cited_by.items())},
    )


def _parse_paper(line: str, where: str) -> PaperRecord:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise GraphLoadError(f"{where}: invalid JSON ({exc.msg})") from None
    if not isinstance(rec, dict) or not isinstance(rec.get("id"), str) or not rec["id"]:
        raise GraphLoadError(f"{where}: record needs a non-empty string 'id'")
    year = rec.get("year")
    if year is not None and (isinstance(year, bool) or not isinstance(year, int)):
        raise GraphLoadError(f"{where}: 'year' must be an integer or null")
    authors = rec.get("authors") or []
    if not isinstance(authors, list) or not all(isinstance(a, str) for a in authors):
        raise GraphLoadError(f"{where}: 'authors' must be a list of strings")
    return PaperRecord(rec["id"], rec.get("abstract") or "", tuple(authors), year)


def _parse_edge(line: str, where: str) -> tuple[str, str]:
    parts = line.rstrip("\r\n").split("\t")
    if len(parts) != 3 or not parts[0] or not parts[2]:
        raise GraphLoadError(f"{where}: expected 'src<TAB>rel<TAB>dst'")
    src, rel, dst = parts
    if rel != "cites":
        raise GraphLoadError(f"{where}: unknown relation {rel!r}")
    return src, dst


def load_graph(paper_lines: Iterable[str], edge_lines: Iterable[str],
               papers_name: str = "papers", edges_name: str = "edges") -> ScholarlyGraph:
    """Build a graph from papers JSON Lines and a cites TSV.

    Citation endpoints missing from the papers stream become abstract-less
    nodes.  Malformed lines raise GraphLoadError with the line number.
    """
    papers = [
        _parse_paper(line, f"{papers_name}:{n}")
        for n, line in enumerate(paper_lines, 1) if line.strip()
    ]
    edges = [
        _parse_edge(line, f"{edges_name}:{n}")
        for n, line in enumerate(edge_lines, 1) if line.strip() and not line.startswith("#")
    ]
    return build_graph(papers, edges)


def load_graph_files(papers_path: str | Path, edges_path: str | Path) -> ScholarlyGraph:
    with open(papers_path, encoding="utf-8") as pf, open(edges_path, encoding="utf-8") as ef:
        return load_graph(pf, ef, str(papers_path), str(edges_path))


def degree_summary(g: ScholarlyGraph) -> dict[str, float]:
    """Mean out-/in-citations over papers that cite / are cited at least once."""
    outs = [len(v) for v in g.cites.values() if v]
    ins = [len(v) for v in g.cited_by.values() if v]
    return {
        "papers": len(g.papers),
        "authors": len(g.authors),
        "edges": sum(outs),
        "mean_out_citations": fmean(outs) if outs else 0.0,
        "mean_in_citations": fmean(ins) if ins else 0.0,
    }


def _author_neighbours(g: ScholarlyGraph, target: str) -> set[str]:
    out: set[str] = set()
    for a in g.papers[target].author_ids:
        out |= g.authors.get(a, frozenset())
    return out


def related_papers(g: ScholarlyGraph, target: str, spec: MetapathSpec | None = None) -> set[str]:
    """Paper ids reachable from ``target`` along the given metapath."""
    if target not in g.papers:
        raise PaperNotFound(target)
    spec = spec or MetapathSpec()
    kind = spec.kind
    out: set[str] = set()
    if kind in (MetapathKind.AUTHOR, MetapathKind.CRA):
        out |= _author_neighbours(g, target)
    elif kind is MetapathKind.YEAR_RESTRICTED_CRA:
        y = g.papers[target].year
        if y is not None:
            lo = y - spec.back_window_years
            out |= {
                p for p in _author_neighbours(g, target)
                if g.papers[p].year is not None and lo <= g.papers[p].year <= y
            }
    if kind in (MetapathKind.REFERENCE, MetapathKind.CRA, MetapathKind.YEAR_RESTRICTED_CRA):
        out |= g.cites.get(target, frozenset())
    if kind in (MetapathKind.CITATION, MetapathKind.CRA, MetapathKind.YEAR_RESTRICTED_CRA):
        out |= g.cited_by.get(target, frozenset())
    out.discard(target)
    return out
