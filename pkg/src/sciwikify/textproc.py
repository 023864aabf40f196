"""Deterministic text machinery shared by mention extraction and linking.

Everything here is pure: tokenisation, POS tagging with a bundled
lexicon/suffix tagger, n-grams, raw term-frequency vectors, cosine
similarity and a corpus idf model.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Protocol, Sequence

NOUN = "NOUN"
ADJ = "ADJ"
OTHER = "OTHER"
TAGS = (NOUN, ADJ, OTHER)

TermVector = Mapping[str, float]

_TOKEN_RE = re.compile(r"[^\W_]+(?:[-'][^\W_]+)*")

_NAME = r"[A-Z][^\W\d_]+(?:[-'][^\W\d_]+)*"
_AUTHORS = rf"{_NAME}(?:\s+(?:and|&)\s+{_NAME})?(?:\s+et\s+al\.?)?"
_CITE = rf"{_AUTHORS},\s*\d{{4}}[a-z]?"
_CITE_SEQ = rf"{_CITE}(?:\s*[;,]\s*{_CITE})*"
_CITATION_RE = re.compile(rf"\(\s*{_CITE_SEQ}\s*\)|(?<![\w(]){_CITE_SEQ}")

_ABBREVIATIONS = frozenset({"al", "e.g", "i.e", "etc", "vs", "cf", "fig", "eq", "no"})
_NOUN_SUFFIXES = ("tion", "ment", "ness", "ing")
_ADJ_SUFFIXES = ("al", "ive", "ous", "able")


# -- normalisation -----------------------------------------------------------

def citation_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of inline author-year citations in ``text``."""
    return [m.span() for m in _CITATION_RE.finditer(text)]


def _strip_citations_once(text: str) -> str:
    out: list[str] = []
    pos = 0
    for start, end in citation_spans(text):
        chunk = text[pos:start]
        nxt = text[end:end + 1]
        if not nxt or nxt.isspace() or nxt in ".,;:!?)":
            chunk = chunk.rstrip(" \t")
        out.append(chunk)
        pos = end
        if not "".join(out).strip():
            # citation led the text; drop the gap it leaves behind
            while pos < len(text) and text[pos] in " \t":
                pos += 1
    out.append(text[pos:])
    return "".join(out)


def normalize_scientific(text: str) -> str:
    """Remove inline author-year citations such as ``(Blei et al., 2003; Griffiths, 2004)``.

    Text outside the removed citations is kept as is, except that the
    blank left by a removal is collapsed.
    """
    while citation_spans(text):
        text = _strip_citations_once(text)
    return text


def mask_citations(text: str) -> str:
    """Blank out citations with spaces, preserving every character offset."""
    chars = list(text)
    for start, end in citation_spans(text):
        chars[start:end] = " " * (end - start)
    return "".join(chars)


# -- sentences ---------------------------------------------------------------

_TERMINATOR_RE = re.compile(r"[.!?]+")


def _is_abbreviation(text: str, dot_at: int) -> bool:
    head = text[:dot_at]
    word = re.search(r"([^\W\d_]+(?:\.[^\W\d_]+)*)$", head)
    if word is None:
        return False
    w = word.group(1)
    return len(w) == 1 or w.casefold() in _ABBREVIATIONS


def count_sentences(text: str) -> int:
    """Number of sentences in ``text``.

    A sentence ends at ``.``, ``!`` or ``?`` followed by whitespace and an
    uppercase letter, or by the end of the text.  A period after a single
    letter or a known abbreviation ("et al.", "e.g.") does not end one.
    """
    if not text or not text.strip():
        raise ValueError("cannot count sentences of empty text")
    boundaries = 0
    for m in _TERMINATOR_RE.finditer(text):
        rest = text[m.end():]
        if not rest.strip():
            continue  # terminal punctuation closes the last sentence
        if not rest[:1].isspace() or not rest.lstrip()[:1].isupper():
            continue
        if m.group().startswith(".") and len(m.group()) == 1 and _is_abbreviation(text, m.start()):
            continue
        boundaries += 1
    return boundaries + 1


# -- tokens and tagging ------------------------------------------------------

@dataclass(frozen=True)
class Token:
    text: str
    tag: str
    start: int
    end: int

    @property
    def norm(self) -> str:
        return self.text.casefold()


@dataclass(frozen=True)
class TokenSeq:
    text: str
    tokens: tuple[Token, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def pairs(self) -> list[tuple[str, str]]:
        return [(t.text, t.tag) for t in self.tokens]


class Tagger(Protocol):
    def tag(self, text: str) -> TokenSeq: ...


def token_spans(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokenize(text: str) -> list[str]:
    """Case-folded word tokens."""
    return [m.group().casefold() for m in _TOKEN_RE.finditer(text)]


def _sentence_initial(text: str, start: int) -> bool:
    head = text[:start].rstrip()
    head = head.rstrip("\"'([{")
    return not head or head[-1] in ".!?"


@dataclass
class LexiconTagger:
    """Lexicon lookup with suffix and capitalisation fallbacks.

    Unknown words: stopwords are OTHER; plurals of lexicon nouns, all-caps
    tokens and words ending in -tion/-ment/-ness/-ing are NOUN; words ending
    in -al/-ive/-ous/-able are ADJ; a capitalised word inside a sentence is
    NOUN; anything else is OTHER.
    """

    lexicon: Mapping[str, str] = field(default_factory=dict)
    stopwords: frozenset[str] = frozenset()

    def tag_word(self, word: str, sentence_initial: bool = False) -> str:
        key = word.casefold()
        if key in self.lexicon:
            return self.lexicon[key]
        if key in self.stopwords or not any(c.isalpha() for c in word):
            return OTHER
        if self._plural_of_noun(key):
            return NOUN
        if len(word) >= 2 and word.isupper():
            return NOUN
        if key.endswith(_NOUN_SUFFIXES):
            return NOUN
        if key.endswith(_ADJ_SUFFIXES):
            return ADJ
        if word[0].isupper() and not sentence_initial:
            return NOUN
        return OTHER

    def _plural_of_noun(self, key: str) -> bool:
        if len(key) < 4 or not key.endswith("s"):
            return False
        stems = [key[:-1], key[:-2]]
        if key.endswith("ies"):
            stems.append(key[:-3] + "y")
        return any(self.lexicon.get(s) == NOUN for s in stems)

    def tag(self, text: str) -> TokenSeq:
        tokens = tuple(
            Token(w, self.tag_word(w, _sentence_initial(text, s)), s, e)
            for w, s, e in token_spans(text)
        )
        return TokenSeq(text, tokens)


def _data_lines(name: str) -> list[str]:
    raw = resources.files("sciwikify").joinpath("data", name).read_text(encoding="utf-8")
    return [line.strip() for line in raw.splitlines() if line.strip() and not line.startswith("#")]


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    return frozenset(w.casefold() for w in _data_lines("stopwords.txt"))


def load_lexicon(lines: Iterable[str]) -> dict[str, str]:
    lexicon = {}
    for n, line in enumerate(lines, 1):
        word, _, tag = line.partition("\t")
        if tag not in TAGS:
            raise ValueError(f"lexicon line {n}: bad tag {tag!r}")
        lexicon[word.casefold()] = tag
    return lexicon


@lru_cache(maxsize=None)
def default_tagger() -> LexiconTagger:
    return LexiconTagger(load_lexicon(_data_lines("lexicon.tsv")), default_stopwords())


def tag_tokens(text: str, tagger: Tagger | None = None) -> TokenSeq:
    return (tagger or default_tagger()).tag(text)


# -- n-grams and vectors -----------------------------------------------------

def ngrams(text: str | Sequence[str], max_n: int) -> Counter[str]:
    """Multiset of contiguous token n-grams, 1 <= n <= max_n."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    tokens = tokenize(text) if isinstance(text, str) else list(text)
    grams: Counter[str] = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            grams[" ".join(tokens[i:i + n])] += 1
    return grams


def term_vector(text: str, stopwords: frozenset[str] | None = None) -> Counter[str]:
    """Raw term counts over case-folded tokens, stopwords removed."""
    stop = default_stopwords() if stopwords is None else stopwords
    return Counter(t for t in tokenize(text) if t not in stop)


def cosine(u: TermVector, v: TermVector) -> float:
    if not u or not v:
        return 0.0
    if len(u) > len(v):
        u, v = v, u
    dot = sum(w * v[t] for t, w in u.items() if t in v)
    if dot == 0:
        return 0.0
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    return min(1.0, dot / (nu * nv))


# -- idf ---------------------------------------------------------------------

@dataclass(frozen=True)
class IdfModel:
    """Document frequencies of every 1..max_n gram over a corpus of abstracts."""

    doc_count: int
    doc_freq: Mapping[str, int]
    max_n: int = 3

    def __post_init__(self):
        if self.doc_count < 1:
            raise ValueError("doc_count must be positive")

    @classmethod
    def from_corpus(cls, abstracts: Iterable[str], max_n: int = 3) -> IdfModel:
        df: Counter[str] = Counter()
        n_docs = 0
        for text in abstracts:
            n_docs += 1
            df.update(set(ngrams(normalize_scientific(text), max_n)))
        return cls(max(n_docs, 1), dict(sorted(df.items())), max_n)


def idf(model: IdfModel, term: str) -> float:
    """ln(doc_count / df); unseen terms count as df = 1."""
    key = " ".join(tokenize(term))
    df = model.doc_freq.get(key, 1)
    return math.log(model.doc_count / df)
