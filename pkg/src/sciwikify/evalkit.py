"""Scoring of mention extraction and entity linking against gold annotations.

System output is a mapping ``doc_id -> [(surface, entity_title | None), ...]``.
Surfaces match after case folding; each gold mention can be matched once.
Ratios with an empty denominator are 0.0 with ``undefined`` set.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Mapping, Sequence
from urllib.parse import unquote, urlparse

from .graphnet import ScholarlyGraph

ZONES = ("Low", "Med", "High")
VERDICTS = ("KL", "K", "X")

SystemLinks = Mapping[str, Sequence[tuple[str, "str | None"]]]


class EvalError(ValueError):
    pass


class Rate(float):
    """A float that remembers whether its denominator was empty."""

    undefined: bool

    def __new__(cls, num: float, den: float):
        obj = super().__new__(cls, num / den if den else 0.0)
        obj.undefined = not den
        return obj


@dataclass(frozen=True)
class GoldAnnotation:
    doc_id: str
    mentions: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for surface, title in self.mentions:
            if not surface or not title:
                raise EvalError(f"{self.doc_id}: gold mention needs surface and link")


def _key(surface: str) -> str:
    return " ".join(surface.casefold().split())


def normalize_title(title: str) -> str:
    """Compare-form of a page title or wiki URL: decoded, underscores as spaces, case-folded."""
    t = title.strip()
    if "://" in t:
        t = urlparse(t).path.rstrip("/").rsplit("/", 1)[-1]
    t = unquote(t).replace("_", " ")
    return " ".join(t.split()).casefold()


def _as_gold_map(gold: Iterable[GoldAnnotation] | Mapping[str, GoldAnnotation]) -> dict[str, GoldAnnotation]:
    if isinstance(gold, Mapping):
        return dict(gold)
    return {g.doc_id: g for g in gold}


def _check_ids(system: Mapping[str, object], gold: Mapping[str, GoldAnnotation]) -> None:
    unknown = sorted(set(system) - set(gold))
    if unknown:
        raise EvalError(f"documents missing from gold: {', '.join(unknown)}")


@dataclass
class _DocMatch:
    n_system: int = 0
    n_gold: int = 0
    # (system title, gold title) per matched mention
    pairs: list[tuple[str | None, str]] = field(default_factory=list)


def _match_doc(system: Sequence[tuple[str, str | None]], gold: GoldAnnotation) -> _DocMatch:
    pool: dict[str, list[str]] = defaultdict(list)
    for surface, title in gold.mentions:
        pool[_key(surface)].append(title)
    out = _DocMatch(len(system), len(gold.mentions))
    for surface, link in system:
        titles = pool.get(_key(surface))
        if not titles:
            continue
        pick = 0
        if link is not None:
            for i, t in enumerate(titles):
                if normalize_title(t) == normalize_title(link):
                    pick = i
                    break
        out.pairs.append((link, titles.pop(pick)))
    return out


def _normalize_system(system: Mapping[str, Sequence]) -> dict[str, list[tuple[str, str | None]]]:
    out = {}
    for doc, items in system.items():
        out[doc] = [(item, None) if isinstance(item, str) else (item[0], item[1]) for item in items]
    return out


def _matches(system, gold) -> dict[str, _DocMatch]:
    gold_map = _as_gold_map(gold)
    sys_map = _normalize_system(system)
    _check_ids(sys_map, gold_map)
    return {doc: _match_doc(sys_map.get(doc, []), g) for doc, g in gold_map.items()}


def _link_ok(pair: tuple[str | None, str]) -> bool:
    link, gold_title = pair
    return link is not None and normalize_title(link) == normalize_title(gold_title)


def f1(p: float, r: float) -> float:
    if not p + r:
        return 0.0
    # rounding can push 2pr/(p+r) one ulp above p when p == r
    return min(2 * p * r / (p + r), max(p, r))


def mention_prf(system: Mapping[str, Sequence], gold) -> tuple[Rate, Rate, float]:
    """Macro-averaged mention precision and recall; F1 is their harmonic mean.

    ``system`` maps doc id to surfaces (or (surface, title) pairs).  Gold
    documents without system output count as empty output.
    """
    per_doc = _matches(system, gold)
    if not per_doc:
        return Rate(0, 0), Rate(0, 0), 0.0
    ps = [Rate(len(m.pairs), m.n_system) for m in per_doc.values()]
    rs = [Rate(len(m.pairs), m.n_gold) for m in per_doc.values()]
    p = Rate(sum(ps), len(ps))
    r = Rate(sum(rs), len(rs))
    return p, r, f1(p, r)


def link_precision(decisions: SystemLinks, gold) -> Rate:
    """Share of correctly extracted mentions whose link is also correct."""
    pairs = [pr for m in _matches(decisions, gold).values() for pr in m.pairs]
    return Rate(sum(map(_link_ok, pairs)), len(pairs))


def full_system_recall(decisions: SystemLinks, gold) -> Rate:
    """Correct (mention, link) pairs over all gold mentions."""
    per_doc = _matches(decisions, gold)
    correct = sum(_link_ok(pr) for m in per_doc.values() for pr in m.pairs)
    return Rate(correct, sum(m.n_gold for m in per_doc.values()))


def zone_of(citations: int) -> str:
    """Low < 5 <= Med < 10 <= High.  Exactly 10 citations falls in High."""
    if citations < 5:
        return "Low"
    if citations < 10:
        return "Med"
    return "High"


def zone_partition(doc_ids: Iterable[str], g: ScholarlyGraph) -> dict[str, list[str]]:
    buckets: dict[str, list[str]] = {}
    for doc in doc_ids:
        n = g.citation_count(doc) if doc in g else 0
        buckets.setdefault(zone_of(n), []).append(doc)
    return {z: buckets[z] for z in ZONES if z in buckets}


def zone_breakdown(decisions: SystemLinks, gold, g: ScholarlyGraph) -> dict[str, Rate]:
    gold_map = _as_gold_map(gold)
    out = {}
    for zone, docs in zone_partition(gold_map, g).items():
        sub_gold = {d: gold_map[d] for d in docs}
        sub_sys = {d: decisions[d] for d in docs if d in decisions}
        out[zone] = link_precision(sub_sys, sub_gold)
    return out


# -- annotator judgements ----------------------------------------------------

@dataclass(frozen=True)
class Judgment:
    doc_id: str
    annotator: str
    mention: str
    verdict: str

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise EvalError(f"unknown verdict {self.verdict!r}")


@dataclass(frozen=True)
class Aggregate:
    majority: Rate
    macro: Rate
    micro: Rate

    def to_dict(self) -> dict:
        return {"majority": float(self.majority), "macro": float(self.macro), "micro": float(self.micro)}


def _aggregate(fractions: dict[str, list[tuple[float, bool]]]) -> Aggregate:
    # fractions: doc -> [(agreement fraction, majority approves)]
    pooled = [f for items in fractions.values() for f in items]
    doc_means = [fmean(f for f, _ in items) for items in fractions.values() if items]
    return Aggregate(
        majority=Rate(sum(ok for _, ok in pooled), len(pooled)),
        macro=Rate(sum(doc_means), len(doc_means)),
        micro=Rate(sum(f for f, _ in pooled), len(pooled)),
    )


def annotator_aggregate(judgments: Iterable[Judgment]) -> dict[str, Aggregate]:
    """Majority, macro and micro precision from per-annotator verdicts.

    ``keyword``: an annotator approves unless the verdict is X.
    ``link``: only annotators who accepted the keyword vote; KL approves.
    A mention passes the majority rule when more than half of its voters approve.
    """
    votes: dict[tuple[str, str], list[str]] = {}
    for j in judgments:
        votes.setdefault((j.doc_id, _key(j.mention)), []).append(j.verdict)
    if not votes:
        raise EvalError("no judgments")
    keyword: dict[str, list[tuple[float, bool]]] = defaultdict(list)
    link: dict[str, list[tuple[float, bool]]] = defaultdict(list)
    for (doc, _), verdicts in votes.items():
        ok = sum(v != "X" for v in verdicts)
        keyword[doc].append((ok / len(verdicts), 2 * ok > len(verdicts)))
        linked = [v for v in verdicts if v != "X"]
        if linked:
            good = sum(v == "KL" for v in linked)
            link[doc].append((good / len(linked), 2 * good > len(linked)))
    return {"keyword": _aggregate(keyword), "link": _aggregate(link)}


# -- report ------------------------------------------------------------------

@dataclass
class EvalReport:
    mention_precision: float
    mention_recall: float
    mention_f1: float
    link_precision: float
    full_system_recall: float
    zones: dict[str, float] = field(default_factory=dict)
    annotators: dict[str, Aggregate] | None = None
    undefined: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "mention_precision": self.mention_precision,
            "mention_recall": self.mention_recall,
            "mention_f1": self.mention_f1,
            "link_precision": self.link_precision,
            "full_system_recall": self.full_system_recall,
            "zones": dict(self.zones),
            "undefined": list(self.undefined),
        }
        if self.annotators is not None:
            out["annotators"] = {k: v.to_dict() for k, v in self.annotators.items()}
        return out

    def table(self) -> str:
        rows = [
            ("mention precision", self.mention_precision),
            ("mention recall", self.mention_recall),
            ("mention F1", self.mention_f1),
            ("link precision", self.link_precision),
            ("full system recall", self.full_system_recall),
        ]
        rows += [(f"link precision [{z}]", v) for z, v in self.zones.items()]
        if self.annotators:
            for kind, agg in self.annotators.items():
                for mode, v in agg.to_dict().items():
                    rows.append((f"{kind} precision ({mode})", v))
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {100 * v:7.2f}%" for name, v in rows]
        if self.undefined:
            lines.append(f"undefined (empty denominator): {', '.join(self.undefined)}")
        return "\n".join(lines)


def evaluate(decisions: SystemLinks, gold, g: ScholarlyGraph | None = None,
             judgments: Iterable[Judgment] | None = None) -> EvalReport:
    gold_map = _as_gold_map(gold)
    missing = sorted(set(gold_map) - set(decisions))
    if missing:
        raise EvalError(f"documents missing from decisions: {', '.join(missing)}")
    p, r, f = mention_prf(decisions, gold_map)
    lp = link_precision(decisions, gold_map)
    fr = full_system_recall(decisions, gold_map)
    zones = zone_breakdown(decisions, gold_map, g) if g is not None else {}
    undefined = [name for name, v in (("mention_precision", p), ("mention_recall", r),
                                      ("link_precision", lp), ("full_system_recall", fr)) if v.undefined]
    undefined += [f"zone:{z}" for z, v in zones.items() if v.undefined]
    annotators = annotator_aggregate(judgments) if judgments is not None else None
    return EvalReport(float(p), float(r), f, float(lp), float(fr),
                      {z: float(v) for z, v in zones.items()}, annotators, undefined)


# -- file formats ------------------------------------------------------------

def _jsonl(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if line.strip():
                try:
                    yield n, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise EvalError(f"{path}:{n}: invalid JSON ({exc.msg})") from None


def load_gold(path: str | Path) -> dict[str, GoldAnnotation]:
    out = {}
    for n, rec in _jsonl(path):
        try:
            mentions = tuple((m["surface"], m["link"]) for m in rec["mentions"])
            out[rec["doc_id"]] = GoldAnnotation(rec["doc_id"], mentions)
        except (KeyError, TypeError):
            raise EvalError(f"{path}:{n}: expected doc_id and mentions[surface, link]") from None
    return out


def load_judgments(path: str | Path) -> list[Judgment]:
    out = []
    for n, rec in _jsonl(path):
        try:
            out.append(Judgment(rec["doc_id"], rec["annotator"], rec["mention"], rec["verdict"]))
        except (KeyError, TypeError):
            raise EvalError(f"{path}:{n}: expected doc_id, annotator, mention, verdict") from None
        except EvalError as exc:
            raise EvalError(f"{path}:{n}: {exc}") from None
    return out
