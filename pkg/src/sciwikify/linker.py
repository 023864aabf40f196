"""Link each extracted mention to one knowledge-base entity.

Candidates are ranked by cosine similarity between the abstract and each
entity summary.  When the top two are closer than ``th_cs`` the abstract
is enlarged with relevant abstracts reached through citation/author
metapaths, and the tie is broken either by shared n-grams (ordinary
mentions) or by an interpolated cosine (acronyms).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

from .graphnet import MetapathKind, MetapathSpec, PaperNotFound, ScholarlyGraph, related_papers
from .kb import Entity, KnowledgeBase, lookup_candidates
from .mention import Mention, MentionQuota, extract_mentions
from .textproc import (
    IdfModel,
    Tagger,
    TermVector,
    cosine,
    default_stopwords,
    ngrams,
    normalize_scientific,
    term_vector,
)

NGRAM_MAX = 3


class Route(str, Enum):
    NO_CANDIDATE = "NoCandidate"
    SINGLE = "SingleCandidate"
    DIRECT = "DirectCosine"
    METAPATH = "MetapathNgram"
    ACRONYM = "AcronymInterpolated"


@dataclass(frozen=True)
class EngineConfig:
    th_cs: float = 0.06
    th_relevance: float = 0.4
    alpha: float = 0.6
    metapath: MetapathSpec = field(default_factory=MetapathSpec)
    quota: MentionQuota = field(default_factory=MentionQuota)

    def __post_init__(self):
        for name in ("th_cs", "th_relevance", "alpha"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    def to_dict(self) -> dict:
        return {
            "th_cs": self.th_cs,
            "th_relevance": self.th_relevance,
            "alpha": self.alpha,
            "metapath": self.metapath.kind.value,
            "window": self.metapath.back_window_years,
            "quota": {"steps": [list(s) for s in self.quota.steps], "above": self.quota.above},
        }


@dataclass(frozen=True)
class Document:
    id: str
    abstract: str


@dataclass(frozen=True)
class LinkDecision:
    mention: Mention
    entity_title: str | None
    route: Route
    confidence_top: float = 0.0
    confidence_gap: float = 0.0
    context_papers_used: tuple[str, ...] = ()
    n_candidates: int = 0
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "mention": self.mention.to_dict(),
            "entity_title": self.entity_title,
            "route": self.route.value,
            "confidence_top": self.confidence_top,
            "confidence_gap": self.confidence_gap,
            "n_candidates": self.n_candidates,
            "context_papers_used": list(self.context_papers_used),
            "warnings": list(self.warnings),
        }


@lru_cache(maxsize=65536)
def _text_vector(text: str) -> dict[str, int]:
    return dict(term_vector(text))


def summary_vector(entity: Entity) -> TermVector:
    return _text_vector(entity.summary)


def rank_by_confidence(abstract_vec: TermVector, candidates: Sequence[Entity]) -> list[tuple[Entity, float]]:
    """Candidates with their cosine confidence, best first; ties keep lookup order."""
    scored = [(e, cosine(abstract_vec, summary_vector(e))) for e in candidates]
    return sorted(scored, key=lambda pair: -pair[1])


def expand_context(
    g: ScholarlyGraph,
    target: str,
    d_vec: TermVector,
    spec: MetapathSpec,
    th_relevance: float,
    abstract: str | None = None,
) -> tuple[str, list[str]]:
    """Target abstract followed by every metapath abstract with cosine > ``th_relevance``.

    Included abstracts are ordered by decreasing relevance, then paper id.
    """
    related = related_papers(g, target, spec)
    if abstract is None:
        abstract = normalize_scientific(g.papers[target].abstract)
    kept = []
    for pid in related:
        text = g.papers[pid].abstract
        if not text.strip():
            continue
        text = normalize_scientific(text)
        rel = cosine(d_vec, _text_vector(text))
        if rel > th_relevance:
            kept.append((-rel, pid, text))
    kept.sort()
    enhanced = "\n".join([abstract, *(t for _, _, t in kept)])
    return enhanced, [pid for _, pid, _ in kept]


def _gram_set(text: str, stopwords: frozenset[str]) -> set[str]:
    return {g for g in ngrams(text, NGRAM_MAX) if g not in stopwords}


def ngram_overlap_score(enhanced_text: str, entity: Entity, stopwords: frozenset[str] | None = None) -> int:
    """Distinct 1..3-grams shared by the enhanced context and the entity summary.

    Unigrams that are stopwords do not count.
    """
    stop = default_stopwords() if stopwords is None else stopwords
    return len(_gram_set(enhanced_text, stop) & _gram_set(entity.summary, stop))


def score_acronym(d_vec: TermVector, enhanced_vec: TermVector, entity: Entity, alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    ws = summary_vector(entity)
    return alpha * cosine(d_vec, ws) + (1 - alpha) * cosine(enhanced_vec, ws)


class _DocContext:
    """Per-document state shared by all its mentions; metapath context is built lazily."""

    def __init__(self, doc: Document, g: ScholarlyGraph | None, cfg: EngineConfig):
        self.doc = doc
        self.g = g
        self.cfg = cfg
        self.text = normalize_scientific(doc.abstract)
        self.d_vec = _text_vector(self.text)
        self._expansion: tuple[str, tuple[str, ...], tuple[str, ...]] | None = None

    def expansion(self) -> tuple[str, tuple[str, ...], tuple[str, ...]]:
        if self._expansion is None:
            try:
                if self.g is None:
                    raise PaperNotFound(self.doc.id)
                text, used = expand_context(
                    self.g, self.doc.id, self.d_vec, self.cfg.metapath, self.cfg.th_relevance, self.text
                )
                self._expansion = (text, tuple(used), ())
            except PaperNotFound:
                warning = f"paper {self.doc.id!r} not in graph; metapath context disabled"
                self._expansion = (self.text, (), (warning,))
        return self._expansion


def _link(m: Mention, kb: KnowledgeBase, ctx: _DocContext) -> LinkDecision:
    cfg = ctx.cfg
    candidates = lookup_candidates(kb, m.surface)
    if not candidates:
        return LinkDecision(m, None, Route.NO_CANDIDATE)
    ranked = rank_by_confidence(ctx.d_vec, candidates)
    top = ranked[0][1]
    if len(ranked) == 1:
        return LinkDecision(m, ranked[0][0].title, Route.SINGLE, top, top, n_candidates=1)
    gap = top - ranked[1][1]
    if gap >= cfg.th_cs:
        return LinkDecision(m, ranked[0][0].title, Route.DIRECT, top, gap, n_candidates=len(ranked))

    enhanced, used, warnings = ctx.expansion()
    confidence = {e.title: s for e, s in ranked}
    if m.is_acronym:
        route = Route.ACRONYM
        enhanced_vec = _text_vector(enhanced)
        scores = [score_acronym(ctx.d_vec, enhanced_vec, e, cfg.alpha) for e in candidates]
    else:
        route = Route.METAPATH
        stop = default_stopwords()
        grams = _gram_set(enhanced, stop)
        scores = [len(grams & _gram_set(e.summary, stop)) for e in candidates]
    best = max(
        range(len(candidates)),
        key=lambda i: (scores[i], confidence[candidates[i].title], -i),
    )
    return LinkDecision(
        m, candidates[best].title, route, top, gap, used, len(candidates), warnings
    )


def link_mention(
    m: Mention, d: Document, kb: KnowledgeBase, g: ScholarlyGraph | None, cfg: EngineConfig | None = None
) -> LinkDecision:
    """Decide the entity for one mention of document ``d``.

    Never fails on ambiguity; a mention without candidates yields a
    decision with no entity.
    """
    return _link(m, kb, _DocContext(d, g, cfg or EngineConfig()))


def wikify_document(
    d: Document,
    kb: KnowledgeBase,
    g: ScholarlyGraph | None,
    idf_model: IdfModel,
    cfg: EngineConfig | None = None,
    tagger: Tagger | None = None,
) -> list[LinkDecision]:
    cfg = cfg or EngineConfig()
    mentions = extract_mentions(d.abstract, kb, idf_model, cfg.quota, tagger)
    ctx = _DocContext(d, g, cfg)
    return [_link(m, kb, ctx) for m in mentions]


def config_with(cfg: EngineConfig, **changes) -> EngineConfig:
    """Copy of ``cfg`` with some fields replaced; ``metapath``/``window`` accepted as shorthands."""
    kind = changes.pop("metapath", None)
    window = changes.pop("window", None)
    if kind is not None or window is not None:
        changes["metapath"] = MetapathSpec(
            MetapathKind(kind) if kind is not None else cfg.metapath.kind,
            window if window is not None else cfg.metapath.back_window_years,
        )
    fields = {**cfg.__dict__, **changes}
    return EngineConfig(**fields)
