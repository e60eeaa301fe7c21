"""JSON-lines trace files.

Line 1 is a header record (format version, seed, config, hyperprior, actors).
Each retained sample is one line; a footer line with acceptance counts marks
a completed run. Samples store the MDT nested form whatever the sampler.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import InvalidTree, SchemaMismatch, TruncatedTrace
from .mcmc import TRACE_FORMAT_VERSION, ChainTrace, Sample
from .trees import Mdt


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def sample_to_dict(s: Sample) -> dict:
    return {
        "kind": "sample",
        "iteration": s.iteration,
        "tree": s.tree.to_nested(),
        "q": s.q,
        "p": s.p,
        "phi": s.phi,
        "log_prior": s.log_prior,
        "log_lik": s.log_lik,
        "per_list": list(s.per_list),
    }


def sample_from_dict(d: dict) -> Sample:
    try:
        return Sample(
            int(d["iteration"]),
            Mdt.from_nested(d["tree"]),
            float(d["q"]),
            float(d["p"]),
            float(d["phi"]),
            float(d["log_prior"]),
            float(d["log_lik"]),
            tuple(float(v) for v in d["per_list"]),
        )
    except (KeyError, TypeError, ValueError, InvalidTree) as exc:
        raise SchemaMismatch(f"malformed sample record: {exc}") from None


class TraceWriter:
    """Streams a trace to ``path``; each record is written and flushed as one line."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w")

    def _line(self, obj):
        self._fh.write(_dumps(obj) + "\n")
        self._fh.flush()

    def write_header(self, header: dict):
        self._line({"kind": "header", **header})

    def write_sample(self, s: Sample):
        self._line(sample_to_dict(s))

    def write_footer(self, acceptance: dict):
        self._line({"kind": "footer", "acceptance": {k: list(v) for k, v in acceptance.items()}})

    def close(self):
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trace(trace: ChainTrace, path) -> None:
    with TraceWriter(path) as w:
        w.write_header(trace.header)
        for s in trace.samples:
            w.write_sample(s)
        w.write_footer(trace.acceptance)


def read_trace(path) -> ChainTrace:
    """Load a trace file.

    Raises SchemaMismatch on an unknown version or malformed record, and
    TruncatedTrace (carrying the readable prefix as ``.partial``) when the
    file ends early.
    """
    text = Path(path).read_text()
    lines = text.split("\n")
    complete = text.endswith("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TruncatedTrace(f"{path}: empty trace file", None)
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError:
        raise TruncatedTrace(f"{path}: header line is incomplete", None) from None
    if not isinstance(head, dict) or head.get("kind") != "header":
        raise SchemaMismatch(f"{path}: first line is not a trace header")
    version = head.get("format_version")
    if version != TRACE_FORMAT_VERSION:
        raise SchemaMismatch(f"{path}: trace format_version {version!r}, expected {TRACE_FORMAT_VERSION}")
    header = {k: v for k, v in head.items() if k != "kind"}
    samples = []
    acceptance = None
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            partial = ChainTrace(header, samples, {})
            raise TruncatedTrace(f"{path}: line {lineno} is incomplete", partial) from None
        kind = rec.get("kind") if isinstance(rec, dict) else None
        if kind == "sample":
            if acceptance is not None:
                raise SchemaMismatch(f"{path}: line {lineno}: sample after footer")
            samples.append(sample_from_dict(rec))
        elif kind == "footer":
            acceptance = {k: list(v) for k, v in rec.get("acceptance", {}).items()}
        else:
            raise SchemaMismatch(f"{path}: line {lineno}: unknown record kind {kind!r}")
    if acceptance is None or not complete:
        raise TruncatedTrace(f"{path}: trace has no footer (run incomplete)", ChainTrace(header, samples, {}))
    return ChainTrace(header, samples, acceptance)


def finalize(partial_path, final_path) -> None:
    """Move a finished ``.partial`` artifact to its final name."""
    os.replace(partial_path, final_path)
