"""Binary index bundle: knowledge base, scholarly graph and idf model.

Each artifact file is::

    b"SWKX" | version:u8 | kind_len:u8 kind | n_sections:u32
    then per section:  name_len:u16 name | size:u64 payload

All integers big-endian.  Payloads are UTF-8 JSON / JSON Lines written with
sorted keys, so a rebuild from the same inputs is byte-identical.  Readers
skip sections they do not know.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Mapping

from .graphnet import PaperRecord, ScholarlyGraph, build_graph
from .kb import Entity, KnowledgeBase, build_kb
from .textproc import IdfModel

MAGIC = b"SWKX"
FORMAT_VERSION = 1

KB_FILE = "kb.bin"
GRAPH_FILE = "graph.bin"
IDF_FILE = "idf.bin"
ARTIFACTS = (KB_FILE, GRAPH_FILE, IDF_FILE)


class BundleError(ValueError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _jsonl(records) -> bytes:
    return "".join(_dumps(r) + "\n" for r in records).encode("utf-8")


def pack(kind: str, sections: Mapping[str, bytes]) -> bytes:
    kind_b = kind.encode("ascii")
    parts = [MAGIC, struct.pack(">B", FORMAT_VERSION), struct.pack(">B", len(kind_b)), kind_b,
             struct.pack(">I", len(sections))]
    for name, payload in sections.items():
        name_b = name.encode("ascii")
        parts += [struct.pack(">H", len(name_b)), name_b, struct.pack(">Q", len(payload)), payload]
    return b"".join(parts)


def unpack(data: bytes, expect_kind: str | None = None) -> dict[str, bytes]:
    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise BundleError("truncated bundle")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    pos = 0
    if take(4) != MAGIC:
        raise BundleError("not an index bundle (bad magic)")
    (version,) = struct.unpack(">B", take(1))
    if version > FORMAT_VERSION:
        raise BundleError(f"bundle format {version} is newer than supported {FORMAT_VERSION}")
    (klen,) = struct.unpack(">B", take(1))
    kind = take(klen).decode("ascii")
    if expect_kind is not None and kind != expect_kind:
        raise BundleError(f"expected a {expect_kind} artifact, found {kind}")
    (count,) = struct.unpack(">I", take(4))
    sections = {}
    for _ in range(count):
        (nlen,) = struct.unpack(">H", take(2))
        name = take(nlen).decode("ascii")
        (size,) = struct.unpack(">Q", take(8))
        sections[name] = take(size)
    return sections


def _lines(payload: bytes) -> list[dict]:
    return [json.loads(line) for line in payload.decode("utf-8").splitlines() if line]


# -- per-artifact codecs -----------------------------------------------------

def encode_kb(kb: KnowledgeBase) -> bytes:
    return pack("kb", {"entities": _jsonl(e.to_record() for e in kb)})


def decode_kb(data: bytes) -> KnowledgeBase:
    sec = unpack(data, "kb")
    return build_kb(Entity.from_record(r) for r in _lines(sec["entities"]))


def encode_graph(g: ScholarlyGraph) -> bytes:
    return pack("graph", {
        "papers": _jsonl(p.to_record() for p in g.papers.values()),
        "cites": _jsonl([s, d] for s, d in g.edges()),
    })


def decode_graph(data: bytes) -> ScholarlyGraph:
    sec = unpack(data, "graph")
    papers = [PaperRecord(r["id"], r["abstract"], tuple(r["authors"]), r["year"]) for r in _lines(sec["papers"])]
    edges = [tuple(e) for e in _lines(sec["cites"])]
    return build_graph(papers, edges)


def encode_idf(model: IdfModel) -> bytes:
    return pack("idf", {
        "meta": _dumps({"doc_count": model.doc_count, "max_n": model.max_n}).encode("utf-8"),
        "doc_freq": _dumps(dict(model.doc_freq)).encode("utf-8"),
    })


def decode_idf(data: bytes) -> IdfModel:
    sec = unpack(data, "idf")
    meta = json.loads(sec["meta"])
    return IdfModel(meta["doc_count"], json.loads(sec["doc_freq"]), meta["max_n"])


# -- directory level ---------------------------------------------------------

def write_bundle(out_dir: str | Path, kb: KnowledgeBase, g: ScholarlyGraph, model: IdfModel) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, blob in ((KB_FILE, encode_kb(kb)), (GRAPH_FILE, encode_graph(g)), (IDF_FILE, encode_idf(model))):
        path = out / name
        path.write_bytes(blob)
        paths.append(path)
    return paths


def read_bundle(index_dir: str | Path) -> tuple[KnowledgeBase, ScholarlyGraph, IdfModel]:
    d = Path(index_dir)
    for name in ARTIFACTS:
        if not (d / name).is_file():
            raise BundleError(f"{d / name}: missing index artifact")
    return (
        decode_kb((d / KB_FILE).read_bytes()),
        decode_graph((d / GRAPH_FILE).read_bytes()),
        decode_idf((d / IDF_FILE).read_bytes()),
    )


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
