import json
from importlib import resources

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

import planted
from sciwikify.bundle import read_bundle
from sciwikify.cli import main


def schema_validator(name):
    root = resources.files("sciwikify") / "schemas"
    registry = Registry()
    for f in root.iterdir():
        if f.name.endswith(".json"):
            registry = registry.with_resource(f.name, Resource.from_contents(json.loads(f.read_text())))
    return Draft202012Validator(json.loads((root / name).read_text()), registry=registry)


def jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


@pytest.fixture
def inputs(tmp_path):
    return planted.write_inputs(tmp_path / "in")


@pytest.fixture
def index(tmp_path, inputs):
    out = tmp_path / "idx"
    assert main(["build", "--kb", str(inputs["kb"]), "--papers", str(inputs["papers"]),
                 "--edges", str(inputs["edges"]), "--out", str(out)]) == 0
    return out


def wikify(index, abstracts, *flags):
    out = abstracts.parent / "out.json"
    assert main(["wikify", str(index), str(abstracts), "-o", str(out), *flags]) == 0
    return out


class TestBuild:
    def test_three_artifacts_byte_identical(self, tmp_path, inputs, index):
        again = tmp_path / "idx2"
        main(["build", "--kb", str(inputs["kb"]), "--papers", str(inputs["papers"]),
              "--edges", str(inputs["edges"]), "--out", str(again)])
        names = sorted(p.name for p in index.iterdir())
        assert names == ["graph.bin", "idf.bin", "kb.bin"]
        for n in names:
            assert (index / n).read_bytes() == (again / n).read_bytes()

    def test_idf_doc_count(self, index):
        _, _, model = read_bundle(index)
        assert model.doc_count == len(planted.PAPERS)

    def test_missing_edges_names_path(self, tmp_path, inputs, capsys):
        missing = tmp_path / "nope.tsv"
        code = main(["build", "--kb", str(inputs["kb"]), "--papers", str(inputs["papers"]),
                     "--edges", str(missing), "--out", str(tmp_path / "x")])
        assert code == 2
        assert str(missing) in capsys.readouterr().err

    def test_malformed_snapshot_line(self, tmp_path, inputs, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"title": "A", "summary": "s"}\nnot json\n')
        code = main(["build", "--kb", str(bad), "--papers", str(inputs["papers"]),
                     "--edges", str(inputs["edges"]), "--out", str(tmp_path / "x")])
        assert code == 2
        assert f"{bad}:2" in capsys.readouterr().err


class TestWikify:
    def test_default_manifest_and_schema(self, index, inputs):
        payload = json.loads(wikify(index, inputs["abstracts"]).read_text())
        schema_validator("wikify_output.schema.json").validate(payload)
        cfg = payload["manifest"]["config"]
        assert (cfg["th_cs"], cfg["th_relevance"], cfg["alpha"], cfg["metapath"], cfg["window"]) == \
            (0.06, 0.4, 0.6, "YearRestrictedCRA", 5)
        assert [d["id"] for d in payload["documents"]] == ["A", "B"]
        mt = [d for d in payload["documents"][0]["decisions"] if d["mention"]["surface"] == "MT"][0]
        assert mt["entity_title"] == "Machine translation" and mt["route"] == "AcronymInterpolated"
        assert sorted(mt["context_papers_used"]) == ["A1", "A2"]

    def test_flags_reach_config(self, index, inputs):
        payload = json.loads(wikify(index, inputs["abstracts"], "--th-cs", "0", "--metapath", "author",
                                    "--window", "3").read_text())
        cfg = payload["manifest"]["config"]
        assert (cfg["th_cs"], cfg["metapath"], cfg["window"]) == (0.0, "Author", 3)

    def test_html_anchor(self, tmp_path):
        d = tmp_path / "web"
        d.mkdir()
        kb = jsonl(d / "kb.jsonl", [{"title": "Web server", "summary": "software that serves web pages"}])
        papers = jsonl(d / "papers.jsonl", [{"id": "p", "abstract": "A web server replies.", "authors": [], "year": 2001}])
        edges = d / "edges.tsv"
        edges.write_text("")
        assert main(["build", "--kb", str(kb), "--papers", str(papers), "--edges", str(edges), "--out", str(d / "idx")]) == 0
        abstracts = jsonl(d / "abs.jsonl", [{"id": "p", "abstract": "We deploy a web server for pages."}])
        html_text = wikify(d / "idx", abstracts, "--format", "html").read_text()
        assert '<a href="#Web_server"' in html_text and ">web server</a>" in html_text
        html_text = wikify(d / "idx", abstracts, "--format", "html",
                           "--link-base", "https://en.wikipedia.org/wiki/").read_text()
        assert 'href="https://en.wikipedia.org/wiki/Web_server"' in html_text

    def test_empty_input(self, index, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        payload = json.loads(wikify(index, empty).read_text())
        assert payload["documents"] == []

    def test_unknown_doc_warns_but_succeeds(self, index, tmp_path, caplog):
        abstracts = jsonl(tmp_path / "a.jsonl", [{"id": "ghost", "abstract": planted.ABSTRACT_A}])
        payload = json.loads(wikify(index, abstracts).read_text())
        doc = payload["documents"][0]
        assert any("ghost" in w for w in doc["warnings"])
        assert doc["decisions"]

    def test_workers_preserve_order(self, index, inputs, tmp_path):
        many = jsonl(tmp_path / "many.jsonl",
                     [{"id": f"{p['id']}", "abstract": p["abstract"]} for p in planted.PAPERS])
        one = wikify(index, many).read_text()
        out = tmp_path / "par.json"
        assert main(["wikify", str(index), str(many), "-o", str(out), "--workers", "3"]) == 0
        strip = lambda s: json.loads(s)["documents"]  # noqa: E731
        assert strip(one) == strip(out.read_text())


class TestEvaluate:
    def decisions_file(self, tmp_path, docs):
        payload = {"manifest": {}, "documents": [
            {"id": doc, "abstract": "", "warnings": [], "decisions": [
                {"mention": {"surface": s}, "entity_title": t} for s, t in pairs]}
            for doc, pairs in docs.items()]}
        path = tmp_path / "dec.json"
        path.write_text(json.dumps(payload))
        return path

    def test_hand_count_fixture(self, tmp_path, index, capsys):
        dec = self.decisions_file(tmp_path, {"A": [("a", "A"), ("b", "B"), ("c", None), ("d", None)]})
        gold = jsonl(tmp_path / "gold.jsonl", [{"doc_id": "A", "mentions": [
            {"surface": s, "link": s.upper()} for s in "abe"]}])
        assert main(["evaluate", str(index), str(dec), str(gold)]) == 0
        captured = capsys.readouterr()
        report = json.loads(captured.out)["report"]
        assert report["mention_precision"] == 0.5
        assert report["mention_recall"] == pytest.approx(2 / 3)
        assert "mention precision" in captured.err

    def test_perfect_with_judgments_and_schema(self, tmp_path, index, inputs, capsys):
        dec = wikify(index, inputs["abstracts"])
        js = [{"doc_id": "A", "annotator": a, "mention": "MT", "verdict": v}
              for a, v in zip("xyz", ["KL", "KL", "X"])]
        judg = jsonl(tmp_path / "j.jsonl", js)
        out = tmp_path / "report.json"
        assert main(["evaluate", str(index), str(dec), str(inputs["gold"]), "--judgments", str(judg),
                     "-o", str(out)]) == 0
        payload = json.loads(out.read_text())
        schema_validator("evaluation.schema.json").validate(payload)
        rep = payload["report"]
        assert rep["link_precision"] == 1.0 and rep["full_system_recall"] == 1.0
        assert rep["annotators"]["keyword"]["majority"] == 1.0
        assert rep["annotators"]["keyword"]["macro"] == pytest.approx(2 / 3)
        assert "link precision" in capsys.readouterr().out

    def test_missing_ids_listed(self, tmp_path, index, capsys):
        dec = self.decisions_file(tmp_path, {"A": []})
        gold = jsonl(tmp_path / "gold.jsonl", [{"doc_id": "A", "mentions": []},
                                                {"doc_id": "Q1", "mentions": []}])
        assert main(["evaluate", str(index), str(dec), str(gold)]) == 2
        assert "Q1" in capsys.readouterr().err


def read_csv_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "value,link_precision,full_system_recall"
    return [[float(x) for x in line.split(",")] for line in lines[1:]]


class TestSweep:
    def sweep(self, index, inputs, tmp_path, param, values):
        out = tmp_path / f"{param}.csv"
        assert main(["sweep", str(index), str(inputs["abstracts"]), str(inputs["gold"]),
                     "--param", param, "--values", values, "-o", str(out)]) == 0
        return read_csv_rows(out)

    def test_th_cs_grid(self, index, inputs, tmp_path):
        rows = self.sweep(index, inputs, tmp_path, "th_cs", "0.02,0.04,0.06,0.08")
        assert [r[0] for r in rows] == [0.02, 0.04, 0.06, 0.08]

    def test_alpha_grid(self, index, inputs, tmp_path):
        assert len(self.sweep(index, inputs, tmp_path, "alpha", "0.5,0.6,0.7")) == 3

    def test_single_value_matches_evaluate(self, index, inputs, tmp_path):
        (row,) = self.sweep(index, inputs, tmp_path, "th_relevance", "0.4")
        dec = wikify(index, inputs["abstracts"])
        out = tmp_path / "rep.json"
        main(["evaluate", str(index), str(dec), str(inputs["gold"]), "-o", str(out)])
        rep = json.loads(out.read_text())["report"]
        assert row[1:] == [rep["link_precision"], rep["full_system_recall"]]

    def test_unknown_param(self, index, inputs, capsys):
        code = main(["sweep", str(index), str(inputs["abstracts"]), str(inputs["gold"]),
                     "--param", "beta", "--values", "1"])
        assert code == 1
        assert "beta" in capsys.readouterr().err


class TestExitCodes:
    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["wikify"])
        assert exc.value.code == 1

    def test_bad_threshold_is_usage(self, index, inputs):
        assert main(["wikify", str(index), str(inputs["abstracts"]), "--th-cs", "2"]) == 1

    def test_missing_index_is_data_error(self, tmp_path, inputs):
        assert main(["wikify", str(tmp_path / "none"), str(inputs["abstracts"])]) == 2

    def test_bad_abstract_line(self, index, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "x", "abstract": "ok"}\n{"abstract": "no id"}\n')
        assert main(["wikify", str(index), str(bad)]) == 2
        assert ":2:" in capsys.readouterr().err
