import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from synth import random_graph_corpus as random_corpus
from sciwikify.graphnet import (
    GraphLoadError,
    MetapathKind,
    MetapathSpec,
    PaperNotFound,
    degree_summary,
    load_graph,
    related_papers,
)

KINDS = [k.value for k in MetapathKind]


def graph_from(papers, edges):
    return load_graph([json.dumps(p) for p in papers], [f"{s}\tcites\t{d}" for s, d in edges])


def test_transpose():
    g = graph_from([{"id": x, "abstract": "", "authors": [], "year": None} for x in "ABC"],
                   [("A", "B"), ("B", "C")])
    assert g.cited_by["C"] == {"B"}
    for s, dsts in g.cites.items():
        for d in dsts:
            assert s in g.cited_by[d]


def test_empty_streams():
    g = load_graph([], [])
    assert len(g) == 0


def test_dangling_endpoint_created():
    g = graph_from([{"id": "A", "abstract": "x", "authors": [], "year": 2000}], [("A", "Z")])
    assert "Z" in g and g.papers["Z"].abstract == ""


def test_degree_summary_matches_fixture():
    citers = [f"S{i}" for i in range(8)]
    cited = [f"T{j}" for j in range(6)]
    papers = [{"id": p, "abstract": "", "authors": [], "year": 2000} for p in citers + cited]
    g = graph_from(papers, [(s, t) for s in citers for t in cited])
    summary = degree_summary(g)
    assert summary["mean_out_citations"] == 6
    assert summary["mean_in_citations"] == 8


@pytest.mark.parametrize("papers_line,edge_line,where", [
    ("not json", None, "papers:2"),
    ('{"id": 3}', None, "papers:2"),
    ('{"id": "X", "year": "2001"}', None, "papers:2"),
    (None, "A\tcites", "edges:2"),
    (None, "A\tknows\tB", "edges:2"),
])
def test_malformed_lines_report_line_number(papers_line, edge_line, where):
    papers = ['{"id": "A"}', papers_line or '{"id": "B"}']
    edges = ["A\tcites\tB", edge_line or "B\tcites\tA"]
    with pytest.raises(GraphLoadError, match=where):
        load_graph(papers, edges)


def test_star_citation():
    papers = [{"id": f"P{i}", "abstract": "", "authors": [], "year": None} for i in range(4)]
    g = graph_from(papers, [("P1", "P0"), ("P2", "P0"), ("P3", "P0")])
    assert related_papers(g, "P0", MetapathSpec(MetapathKind.CITATION)) == {"P1", "P2", "P3"}
    assert related_papers(g, "P1", MetapathSpec(MetapathKind.REFERENCE)) == {"P0"}


def test_year_restricted_author_leg():
    papers = [
        {"id": "P0", "abstract": "x", "authors": ["a1"], "year": 2013},
        {"id": "P4", "abstract": "x", "authors": ["a1"], "year": 1990},
        {"id": "P5", "abstract": "x", "authors": ["a1"], "year": 2012},
    ]
    g = graph_from(papers, [])
    spec = MetapathSpec(MetapathKind.YEAR_RESTRICTED_CRA, 5)
    assert related_papers(g, "P0", spec) == {"P5"}
    assert oracles.related(papers, [], "P0", "YearRestrictedCRA", 5) == {"P5"}
    assert related_papers(g, "P0", MetapathSpec(MetapathKind.AUTHOR)) == {"P4", "P5"}


def test_window_bounds_inclusive():
    papers = [
        {"id": "T", "abstract": "x", "authors": ["a"], "year": 2010},
        {"id": "same", "abstract": "x", "authors": ["a"], "year": 2010},
        {"id": "edge", "abstract": "x", "authors": ["a"], "year": 2005},
        {"id": "old", "abstract": "x", "authors": ["a"], "year": 2004},
        {"id": "later", "abstract": "x", "authors": ["a"], "year": 2011},
        {"id": "undated", "abstract": "x", "authors": ["a"], "year": None},
    ]
    g = graph_from(papers, [])
    assert related_papers(g, "T", MetapathSpec(MetapathKind.YEAR_RESTRICTED_CRA, 5)) == {"same", "edge"}


def test_year_filter_does_not_touch_citation_legs():
    papers = [
        {"id": "T", "abstract": "x", "authors": ["a"], "year": 2010},
        {"id": "ancient", "abstract": "x", "authors": ["b"], "year": 1950},
    ]
    g = graph_from(papers, [("T", "ancient")])
    assert related_papers(g, "T", MetapathSpec(MetapathKind.YEAR_RESTRICTED_CRA, 1)) == {"ancient"}


def test_isolated_node():
    g = graph_from([{"id": "solo", "abstract": "x", "authors": [], "year": 2000}], [])
    for kind in KINDS:
        assert related_papers(g, "solo", MetapathSpec(kind)) == set()


def test_self_citation_excluded():
    g = graph_from([{"id": "A", "abstract": "x", "authors": ["a"], "year": 2000}], [("A", "A")])
    for kind in KINDS:
        assert "A" not in related_papers(g, "A", MetapathSpec(kind))


def test_unknown_target():
    with pytest.raises(PaperNotFound):
        related_papers(load_graph([], []), "nope")


def test_window_validation():
    with pytest.raises(ValueError):
        MetapathSpec(MetapathKind.YEAR_RESTRICTED_CRA, 0)


@pytest.mark.parametrize("seed", range(10))
def test_matches_label_sequence_enumeration(seed):
    rng = random.Random(seed)
    papers, edges = random_corpus(rng, rng.randint(5, 60))
    g = graph_from(papers, edges)
    for target in sorted(g.papers)[:15]:
        for kind in KINDS:
            for window in (1, 5):
                got = related_papers(g, target, MetapathSpec(kind, window))
                assert got == oracles.related(papers, edges, target, kind, window), (target, kind)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12), st.integers(1, 12))
def test_year_window_monotone_and_subset(seed, w1, w2):
    rng = random.Random(seed)
    papers, edges = random_corpus(rng, 30)
    g = graph_from(papers, edges)
    lo, hi = sorted((w1, w2))
    for target in sorted(g.papers)[:10]:
        narrow = related_papers(g, target, MetapathSpec(MetapathKind.YEAR_RESTRICTED_CRA, lo))
        wide = related_papers(g, target, MetapathSpec(MetapathKind.YEAR_RESTRICTED_CRA, hi))
        cra = related_papers(g, target, MetapathSpec(MetapathKind.CRA))
        parts = [related_papers(g, target, MetapathSpec(k)) for k in ("Author", "Reference", "Citation")]
        assert narrow <= wide <= cra
        assert cra == set().union(*parts)
