"""Offline wikification of scientific abstracts.

Mentions are chosen by tf-idf among noun/adjective fragments that name a
page in a local Wikipedia snapshot; ambiguous links are resolved with
context borrowed from papers related through citation and authorship.
"""

__version__ = "0.1.0"

from .graphnet import MetapathKind, MetapathSpec, PaperRecord, ScholarlyGraph, load_graph, related_papers
from .kb import Entity, KnowledgeBase, build_kb, has_concept, lookup_candidates
from .linker import Document, EngineConfig, LinkDecision, Route, link_mention, wikify_document
from .mention import Mention, MentionQuota, extract_mentions
from .textproc import IdfModel

__all__ = [
    "Document",
    "EngineConfig",
    "Entity",
    "IdfModel",
    "KnowledgeBase",
    "LinkDecision",
    "Mention",
    "MentionQuota",
    "MetapathKind",
    "MetapathSpec",
    "PaperRecord",
    "Route",
    "ScholarlyGraph",
    "build_kb",
    "extract_mentions",
    "has_concept",
    "link_mention",
    "load_graph",
    "lookup_candidates",
    "related_papers",
    "wikify_document",
]
