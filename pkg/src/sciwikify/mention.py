"""Pick the important, linkable phrases of an abstract and rank them by tf-idf."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .kb import KnowledgeBase, has_concept, normalize_surface
from .textproc import (
    ADJ,
    NOUN,
    IdfModel,
    Tagger,
    Token,
    TokenSeq,
    count_sentences,
    idf,
    mask_citations,
    tag_tokens,
    tokenize,
)

MAX_FRAGMENT_TOKENS = 3

_ACRONYM_RE = re.compile(r"[A-Z][A-Z0-9]{1,5}")


@dataclass(frozen=True)
class Mention:
    surface: str
    start: int
    end: int
    tfidf_score: float
    is_acronym: bool
    token_len: int

    @property
    def char_span(self) -> tuple[int, int]:
        return self.start, self.end

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "start": self.start,
            "end": self.end,
            "tfidf_score": self.tfidf_score,
            "is_acronym": self.is_acronym,
            "token_len": self.token_len,
        }


@dataclass(frozen=True)
class MentionQuota:
    """Step function from sentence count to the number of mentions kept.

    ``steps`` holds (max_sentences, quota) pairs in increasing order;
    longer abstracts get ``above``.
    """

    steps: tuple[tuple[int, int], ...] = ((2, 4), (4, 8))
    above: int = 12

    def __post_init__(self):
        bounds = [b for b, _ in self.steps]
        quotas = [q for _, q in self.steps] + [self.above]
        if bounds != sorted(set(bounds)) or quotas != sorted(quotas) or min(quotas) < 0:
            raise ValueError("quota steps must be increasing and non-decreasing")

    def __call__(self, n_sentences: int) -> int:
        for bound, quota in self.steps:
            if n_sentences <= bound:
                return quota
        return self.above


@dataclass(frozen=True)
class Fragment:
    tokens: tuple[Token, ...]
    surface: str

    @property
    def start(self) -> int:
        return self.tokens[0].start

    @property
    def end(self) -> int:
        return self.tokens[-1].end

    def __len__(self) -> int:
        return len(self.tokens)


def is_acronym(surface: str) -> bool:
    return _ACRONYM_RE.fullmatch(surface) is not None


def _runs(seq: TokenSeq) -> list[list[Token]]:
    runs: list[list[Token]] = []
    current: list[Token] = []
    prev: Token | None = None
    for tok in seq:
        keep = tok.tag in (NOUN, ADJ)
        joined = prev is not None and seq.text[prev.end:tok.start].isspace()
        if keep and current and joined:
            current.append(tok)
        else:
            if current:
                runs.append(current)
            current = [tok] if keep else []
        prev = tok
    if current:
        runs.append(current)
    return runs


def candidate_fragments(seq: TokenSeq) -> list[Fragment]:
    """Noun/adjective runs cut into pieces of at most three tokens.

    Longer pieces win: each run is covered left to right by 3-token
    fragments and a shorter remainder, and no sub-fragment of an emitted
    fragment is produced.  A run never spans punctuation.
    """
    out = []
    for run in _runs(seq):
        for i in range(0, len(run), MAX_FRAGMENT_TOKENS):
            piece = tuple(run[i:i + MAX_FRAGMENT_TOKENS])
            out.append(Fragment(piece, seq.text[piece[0].start:piece[-1].end]))
    return out


def count_occurrences(haystack: Sequence[str], needle: Sequence[str]) -> int:
    """Non-overlapping occurrences of ``needle`` in ``haystack``."""
    n, count, i = len(needle), 0, 0
    if n == 0:
        return 0
    needle = list(needle)
    while i + n <= len(haystack):
        if list(haystack[i:i + n]) == needle:
            count += 1
            i += n
        else:
            i += 1
    return count


def extract_mentions(
    abstract: str,
    kb: KnowledgeBase,
    idf_model: IdfModel,
    quota: MentionQuota | None = None,
    tagger: Tagger | None = None,
) -> list[Mention]:
    """Ranked mentions of ``abstract``, truncated to the sentence-count quota.

    Spans index into ``abstract`` as given; citations are blanked rather
    than deleted so offsets survive normalisation.
    """
    if not abstract or not abstract.strip():
        raise ValueError("empty abstract")
    quota = quota or MentionQuota()
    text = mask_citations(abstract)
    doc_tokens = tokenize(text)
    seen: set[str] = set()
    mentions: list[Mention] = []
    for frag in candidate_fragments(tag_tokens(text, tagger)):
        key = normalize_surface(frag.surface)
        if key in seen or not has_concept(kb, frag.surface):
            continue
        seen.add(key)
        words = [t.norm for t in frag.tokens]
        tf = count_occurrences(doc_tokens, words)
        mentions.append(Mention(
            surface=abstract[frag.start:frag.end],
            start=frag.start,
            end=frag.end,
            tfidf_score=tf * idf(idf_model, " ".join(words)),
            is_acronym=len(frag) == 1 and is_acronym(frag.surface),
            token_len=len(frag),
        ))
    mentions.sort(key=lambda m: (-m.tfidf_score, -m.token_len, m.start))
    return mentions[:quota(count_sentences(text if text.strip() else abstract))]
