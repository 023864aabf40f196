"""Command line interface.

    sciwikify build    --kb SNAPSHOT --papers PAPERS --edges EDGES --out INDEX_DIR
    sciwikify wikify   INDEX_DIR ABSTRACTS [--format json|html] [engine flags]
    sciwikify evaluate INDEX_DIR DECISIONS GOLD [--judgments FILE]
    sciwikify sweep    INDEX_DIR ABSTRACTS GOLD --param th_cs --values 0.02,0.04

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import html
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import quote

from . import __version__
from .bundle import ARTIFACTS, BundleError, file_digest, read_bundle, write_bundle
from .evalkit import EvalError, evaluate, load_gold, load_judgments
from .graphnet import GraphLoadError, MetapathKind, ScholarlyGraph, load_graph_files
from .kb import KBBuildError, KnowledgeBase, load_snapshot
from .linker import Document, EngineConfig, LinkDecision, config_with, wikify_document
from .textproc import IdfModel

log = logging.getLogger("sciwikify")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

METAPATH_CHOICES = {
    "author": MetapathKind.AUTHOR,
    "reference": MetapathKind.REFERENCE,
    "citation": MetapathKind.CITATION,
    "cra": MetapathKind.CRA,
    "year-cra": MetapathKind.YEAR_RESTRICTED_CRA,
}
SWEEP_PARAMS = ("th_cs", "th_relevance", "alpha")

DATA_ERRORS = (KBBuildError, GraphLoadError, EvalError, BundleError, FileNotFoundError, IsADirectoryError)


class DataError(Exception):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- helpers -----------------------------------------------------------------

def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.replace(microsecond=0).isoformat()


def make_manifest(cfg: EngineConfig | None, inputs: dict[str, Path]) -> dict:
    return {
        "tool": "sciwikify",
        "version": __version__,
        "timestamp": _timestamp(),
        "config": cfg.to_dict() if cfg is not None else None,
        "inputs": {name: file_digest(p) for name, p in sorted(inputs.items())},
    }


def _index_inputs(index_dir: Path) -> dict[str, Path]:
    return {f"index/{name}": index_dir / name for name in ARTIFACTS}


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _write_text(out: str | None, text: str) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def read_abstracts(path: str | Path) -> list[Document]:
    docs, seen = [], set()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc = Document(str(rec["id"]), rec.get("abstract") or "")
            except (json.JSONDecodeError, KeyError, TypeError):
                raise DataError(f"{path}:{n}: expected {{\"id\": str, \"abstract\": str}}") from None
            if doc.id in seen:
                raise DataError(f"{path}:{n}: duplicate id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return docs


def engine_config(args) -> EngineConfig:
    try:
        return config_with(
            EngineConfig(),
            th_cs=args.th_cs,
            th_relevance=args.th_relevance,
            alpha=args.alpha,
            metapath=METAPATH_CHOICES[args.metapath],
            window=args.window,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- wikify core (also used by sweep) ----------------------------------------

_WORKER: dict = {}


def _doc_result(doc: Document, kb: KnowledgeBase, g: ScholarlyGraph, idf_model: IdfModel,
                cfg: EngineConfig) -> dict:
    warnings = []
    if doc.id not in g:
        warnings.append(f"paper {doc.id!r} not in graph; metapath context disabled")
    if not doc.abstract.strip():
        warnings.append("empty abstract")
        decisions: list[LinkDecision] = []
    else:
        decisions = wikify_document(doc, kb, g, idf_model, cfg)
    return {
        "id": doc.id,
        "abstract": doc.abstract,
        "decisions": [d.to_dict() for d in decisions],
        "warnings": warnings,
    }


def _init_worker(index_dir: str, cfg: EngineConfig) -> None:
    _WORKER["index"] = read_bundle(index_dir)
    _WORKER["cfg"] = cfg


def _worker_doc(doc: Document) -> dict:
    kb, g, idf_model = _WORKER["index"]
    return _doc_result(doc, kb, g, idf_model, _WORKER["cfg"])


def run_wikify(docs: Sequence[Document], index, cfg: EngineConfig, workers: int = 1,
               index_dir: Path | None = None) -> list[dict]:
    """Per-document results in input order, whatever the worker count."""
    if workers > 1 and index_dir is not None and len(docs) > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(str(index_dir), cfg)) as pool:
            return list(pool.map(_worker_doc, docs, chunksize=max(1, len(docs) // (4 * workers))))
    kb, g, idf_model = index
    return [_doc_result(d, kb, g, idf_model, cfg) for d in docs]


def render_html(results: Iterable[dict], manifest: dict, link_base: str = "#") -> str:
    out = io.StringIO()
    out.write("<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>wikified abstracts</title></head>\n<body>\n")
    out.write('<script type="application/json" id="manifest">')
    out.write(json.dumps(manifest, sort_keys=True).replace("</", "<\\/"))
    out.write("</script>\n")
    for res in results:
        text = res["abstract"]
        spans = sorted((d for d in res["decisions"] if d["entity_title"]), key=lambda d: d["mention"]["start"])
        pieces, pos = [], 0
        for d in spans:
            m = d["mention"]
            page = d["entity_title"].replace(" ", "_")
            href = link_base + quote(page, safe="()_,-'.:")
            pieces.append(html.escape(text[pos:m["start"]]))
            pieces.append(
                f'<a href="{html.escape(href)}" title="{html.escape(d["entity_title"])}" '
                f'data-route="{d["route"]}">{html.escape(text[m["start"]:m["end"]])}</a>'
            )
            pos = m["end"]
        pieces.append(html.escape(text[pos:]))
        out.write(f'<article id="{html.escape(res["id"])}">\n<p>{"".join(pieces)}</p>\n</article>\n')
    out.write("</body>\n</html>\n")
    return out.getvalue()


def decisions_to_links(doc_results: Iterable[dict]) -> dict[str, list[tuple[str, str | None]]]:
    return {
        r["id"]: [(d["mention"]["surface"], d["entity_title"]) for d in r["decisions"]]
        for r in doc_results
    }


# -- commands ----------------------------------------------------------------

def cmd_build(args) -> int:
    for p in (args.kb, args.papers, args.edges):
        if not Path(p).is_file():
            raise DataError(f"{p}: no such file")
    kb = load_snapshot(args.kb)
    g = load_graph_files(args.papers, args.edges)
    with open(args.papers, encoding="utf-8") as fh:
        abstracts = [json.loads(line).get("abstract") or "" for line in fh if line.strip()]
    idf_model = IdfModel.from_corpus(abstracts)
    paths = write_bundle(args.out, kb, g, idf_model)
    log.info("wrote %s (%d entities, %d papers, %d idf docs)",
             ", ".join(str(p) for p in paths), len(kb), len(g), idf_model.doc_count)
    return EXIT_OK


def cmd_wikify(args) -> int:
    cfg = engine_config(args)
    index_dir = Path(args.index_dir)
    index = read_bundle(index_dir)
    docs = read_abstracts(args.input)
    results = run_wikify(docs, index, cfg, args.workers, index_dir)
    for r in results:
        for w in r["warnings"]:
            log.warning("%s: %s", r["id"], w)
    manifest = make_manifest(cfg, {"abstracts": Path(args.input), **_index_inputs(index_dir)})
    if args.format == "html":
        _write_text(args.output, render_html(results, manifest, args.link_base))
    else:
        _write_text(args.output, _dump_json({"manifest": manifest, "documents": results}))
    return EXIT_OK


def _load_decisions(path: str) -> list[dict]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return payload["documents"]
    except (json.JSONDecodeError, KeyError, TypeError):
        raise DataError(f"{path}: not a wikify JSON output") from None


def cmd_evaluate(args) -> int:
    index_dir = Path(args.index_dir)
    _, g, _ = read_bundle(index_dir)
    system = decisions_to_links(_load_decisions(args.decisions))
    gold = load_gold(args.gold)
    judgments = load_judgments(args.judgments) if args.judgments else None
    report = evaluate(system, gold, g, judgments)
    inputs = {"decisions": Path(args.decisions), "gold": Path(args.gold), **_index_inputs(index_dir)}
    if args.judgments:
        inputs["judgments"] = Path(args.judgments)
    payload = {"manifest": make_manifest(None, inputs), "report": report.to_dict()}
    if args.output in (None, "-"):
        sys.stdout.write(_dump_json(payload))
        print(report.table(), file=sys.stderr)
    else:
        _write_text(args.output, _dump_json(payload))
        print(report.table())
    return EXIT_OK


def parse_values(raw: str) -> list[float]:
    try:
        values = [float(v) for v in raw.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"--values must be a comma separated list of numbers, got {raw!r}") from None
    if not values:
        raise UsageError("--values is empty")
    return values


def cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise UsageError(f"unknown parameter {args.param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    values = parse_values(args.values)
    base = engine_config(args)
    index_dir = Path(args.index_dir)
    index = read_bundle(index_dir)
    docs = read_abstracts(args.input)
    gold = load_gold(args.gold)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["value", "link_precision", "full_system_recall"])
    for value in values:
        try:
            cfg = config_with(base, **{args.param: value})
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        results = run_wikify(docs, index, cfg, args.workers, index_dir)
        report = evaluate(decisions_to_links(results), gold, index[1])
        writer.writerow([repr(value), repr(report.link_precision), repr(report.full_system_recall)])
    _write_text(args.output, buf.getvalue())
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _engine_flags(p: argparse.ArgumentParser) -> None:
    d = EngineConfig()
    p.add_argument("--th-cs", type=float, default=d.th_cs, help="top-two confidence gap below which metapaths are used")
    p.add_argument("--th-relevance", type=float, default=d.th_relevance,
                   help="minimum cosine for a metapath abstract to join the context")
    p.add_argument("--alpha", type=float, default=d.alpha, help="weight of the bare abstract in acronym scoring")
    p.add_argument("--metapath", choices=sorted(METAPATH_CHOICES), default="year-cra")
    p.add_argument("--window", type=int, default=d.metapath.back_window_years,
                   help="backward year window for the year-restricted author leg")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sciwikify", description="Offline wikification of scientific abstracts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    # lets -v also follow the subcommand without clobbering the top-level value
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", parents=[common], help="build the index bundle")
    b.add_argument("--kb", required=True, help="Wikipedia snapshot (JSON Lines)")
    b.add_argument("--papers", required=True, help="papers file (JSON Lines)")
    b.add_argument("--edges", required=True, help="citation edges (TSV src, rel, dst)")
    b.add_argument("--out", required=True, help="output index directory")
    b.set_defaults(func=cmd_build)

    w = sub.add_parser("wikify", parents=[common], help="extract and link mentions")
    w.add_argument("index_dir")
    w.add_argument("input", help="abstracts (JSON Lines with id, abstract)")
    _engine_flags(w)
    w.add_argument("--format", choices=("json", "html"), default="json")
    w.add_argument("--link-base", default="#", help="prefix for HTML links, e.g. https://en.wikipedia.org/wiki/")
    w.add_argument("-o", "--output", help="output file (default stdout)")
    w.set_defaults(func=cmd_wikify)

    e = sub.add_parser("evaluate", parents=[common], help="score wikify output against gold annotations")
    e.add_argument("index_dir")
    e.add_argument("decisions", help="wikify JSON output")
    e.add_argument("gold", help="gold annotations (JSON Lines)")
    e.add_argument("--judgments", help="per-annotator verdicts (JSON Lines)")
    e.add_argument("-o", "--output", help="JSON report file (default stdout; table then goes to stderr)")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", parents=[common], help="link precision / full recall against one parameter")
    s.add_argument("index_dir")
    s.add_argument("input")
    s.add_argument("gold")
    s.add_argument("--param", required=True, help="th_cs, th_relevance or alpha")
    s.add_argument("--values", required=True, help="comma separated values")
    _engine_flags(s)
    s.add_argument("-o", "--output", help="CSV file (default stdout)")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("sciwikify: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sciwikify: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, *DATA_ERRORS) as exc:
        print(f"sciwikify: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
