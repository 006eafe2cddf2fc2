"""Deterministic JSON interchange for documents, reports, and scores.

The same input always serializes to byte-identical output: keys are
sorted, indentation is fixed, addresses are lowercase ``0x`` hex,
lengths and counts are decimal, and nothing carries a timestamp. Every
load and dump passes schema validation, so malformed files fail loudly
at the boundary instead of deep inside scoring.
"""
from __future__ import annotations

import json
from fractions import Fraction

import jsonschema

from . import __version__
from .byteclass import ByteClassMap, ByteRun
from .model import Diagnostic, machine_label
from .normalize import (
    BinarySummary,
    GroundTruthDocument,
    GroundTruthFunction,
    RunConfig,
)
from .scoring import CorpusSummary, ScoreResult, ToolReport

SCHEMA_VERSION = 1

GENERATOR = f"bintruth {__version__}"


class SchemaError(ValueError):
    """Input does not satisfy the interchange schema."""


_HEX = {"type": "string", "pattern": "^0x[0-9a-f]+$"}
_SPAN = {
    "type": ["object", "null"],
    "properties": {"start": _HEX, "length": {"type": "integer", "minimum": 0}},
    "required": ["start", "length"],
    "additionalProperties": False,
}
_DIAGNOSTIC = {
    "type": "object",
    "properties": {
        "severity": {"enum": ["info", "warning", "error"]},
        "code": {"type": "string", "pattern": "^GT_[A-Z_]+$"},
        "message": {"type": "string"},
        "span": _SPAN,
    },
    "required": ["severity", "code", "message", "span"],
    "additionalProperties": False,
}
_BYTE_RUN = {
    "type": "object",
    "properties": {
        "start": _HEX,
        "length": {"type": "integer", "minimum": 1},
        "class": {"enum": ["code", "padding", "data", "gap_unknown"]},
        "confidence": {"enum": ["certain", "heuristic"]},
    },
    "required": ["start", "length", "class", "confidence"],
    "additionalProperties": False,
}
_FUNCTION = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "entries": {"type": "array", "items": _HEX, "minItems": 1},
        "start": _HEX,
        "end_raw": _HEX,
        "end_trimmed": _HEX,
        "aliases": {"type": "array", "items": {"type": "string"}},
        "group": {"type": ["string", "null"]},
        "flags": {"type": "array", "items": {"type": "string"}},
        "provenance": {"type": "array", "items": {"enum": ["symtab", "dwarf"]}},
        "source": {
            "type": ["object", "null"],
            "properties": {
                "file": {"type": "string"},
                "line": {"type": "integer", "minimum": 0},
            },
            "required": ["file", "line"],
            "additionalProperties": False,
        },
    },
    "required": [
        "name",
        "entries",
        "start",
        "end_raw",
        "end_trimmed",
        "aliases",
        "group",
        "flags",
        "provenance",
        "source",
    ],
    "additionalProperties": False,
}

GROUND_TRUTH_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "meta": {
            "type": "object",
            "properties": {
                "generator": {"type": "string"},
                "config": {
                    "type": "object",
                    "properties": {
                        "merge_multi_entry": {"type": "boolean"},
                        "start_mismatch_tolerance": {
                            "type": "integer",
                            "minimum": 0,
                        },
                        "noreturn_seeds": {
                            "type": "array",
                            "items": {"type": "string"},
                        },
                        "call_edges": {
                            "type": ["array", "null"],
                            "items": {
                                "type": "array",
                                "items": _HEX,
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        },
                    },
                    "required": [
                        "merge_multi_entry",
                        "start_mismatch_tolerance",
                        "noreturn_seeds",
                        "call_edges",
                    ],
                    "additionalProperties": False,
                },
            },
            "required": ["generator", "config"],
            "additionalProperties": False,
        },
        "binary": {
            "type": "object",
            "properties": {
                "path": {"type": "string"},
                "digest_hex": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                "word_size": {"enum": [32, 64]},
                "machine": {"type": "string"},
            },
            "required": ["path", "digest_hex", "word_size", "machine"],
            "additionalProperties": False,
        },
        "functions": {"type": "array", "items": _FUNCTION},
        "byte_classes": {"type": "array", "items": _BYTE_RUN},
        "diagnostics": {"type": "array", "items": _DIAGNOSTIC},
        "complete": {"type": "boolean"},
    },
    "required": [
        "schema_version",
        "meta",
        "binary",
        "functions",
        "byte_classes",
        "diagnostics",
        "complete",
    ],
    "additionalProperties": False,
}

TOOL_REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {
            "type": "object",
            "properties": {
                "name": {"type": "string"},
                "version": {"type": "string"},
            },
            "required": ["name", "version"],
            "additionalProperties": False,
        },
        "binary_digest_hex": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "functions": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "start": _HEX,
                    "size": {"type": ["integer", "null"], "minimum": 0},
                },
                "required": ["start", "size"],
                "additionalProperties": False,
            },
        },
        "byte_classes": {
            "type": ["array", "null"],
            "items": _BYTE_RUN,
        },
    },
    "required": ["schema_version", "tool", "binary_digest_hex", "functions"],
    "additionalProperties": False,
}

_METRIC = {
    "type": "object",
    "properties": {
        "exact": {"type": "string", "pattern": "^[0-9]+(/[0-9]+)?$"},
        "approx": {"type": "number"},
    },
    "required": ["exact", "approx"],
    "additionalProperties": False,
}

SCORE_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "policy": {
            "type": ["object", "null"],
            "properties": {
                "start_rule": {"type": "string"},
                "boundary_rule": {"type": "string"},
                "reject_incomplete_truth": {"type": "boolean"},
            },
            "required": ["start_rule", "boundary_rule", "reject_incomplete_truth"],
            "additionalProperties": False,
        },
        "counts": {
            "type": "object",
            "properties": {
                "true_positives": {"type": "integer", "minimum": 0},
                "false_positives": {"type": "integer", "minimum": 0},
                "false_negatives": {"type": "integer", "minimum": 0},
            },
            "required": ["true_positives", "false_positives", "false_negatives"],
            "additionalProperties": False,
        },
        "metrics": {
            "type": "object",
            "properties": {
                "precision": _METRIC,
                "recall": _METRIC,
                "f1": _METRIC,
            },
            "required": ["precision", "recall", "f1"],
            "additionalProperties": False,
        },
        "mismatches": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "kind": {
                        "enum": ["spurious_start", "missed_start", "wrong_boundary"]
                    },
                    "address": _HEX,
                    "detail": {"type": "string"},
                },
                "required": ["kind", "address", "detail"],
                "additionalProperties": False,
            },
        },
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
    "required": [
        "schema_version",
        "policy",
        "counts",
        "metrics",
        "mismatches",
        "warnings",
    ],
    "additionalProperties": False,
}

CORPUS_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "n": {"type": "integer", "minimum": 1},
        "micro": {
            "type": "object",
            "properties": {
                "precision": _METRIC,
                "recall": _METRIC,
                "f1": _METRIC,
            },
            "required": ["precision", "recall", "f1"],
            "additionalProperties": False,
        },
        "macro": {
            "type": "object",
            "properties": {
                "precision": _METRIC,
                "recall": _METRIC,
                "f1": _METRIC,
            },
            "required": ["precision", "recall", "f1"],
            "additionalProperties": False,
        },
        "fraction_perfect": _METRIC,
        "below": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "threshold": {"type": "string"},
                    "fraction": _METRIC,
                },
                "required": ["threshold", "fraction"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["schema_version", "n", "micro", "macro", "fraction_perfect", "below"],
    "additionalProperties": False,
}


def _hex(value: int) -> str:
    return f"0x{value:x}"


def _validate(payload: dict, schema: dict) -> None:
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(exc.message) from exc


def _dump(payload: dict, schema: dict) -> str:
    _validate(payload, schema)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _load(text: str, schema: dict) -> dict:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    _validate(payload, schema)
    return payload


def _config_payload(config: RunConfig) -> dict:
    edges = None
    if config.call_edges is not None:
        edges = [[_hex(a), _hex(b)] for a, b in config.call_edges]
    return {
        "merge_multi_entry": config.merge_multi_entry,
        "start_mismatch_tolerance": config.start_mismatch_tolerance,
        "noreturn_seeds": list(config.seeds()),
        "call_edges": edges,
    }


def _metric_payload(value: Fraction) -> dict:
    return {"exact": str(value), "approx": float(value)}


def document_to_json(doc: GroundTruthDocument, config: RunConfig | None = None) -> str:
    config = config or RunConfig()
    functions = []
    for fn in doc.functions:
        functions.append(
            {
                "name": fn.canonical_name,
                "entries": [_hex(e) for e in fn.entry_points],
                "start": _hex(fn.start),
                "end_raw": _hex(fn.end_exclusive_raw),
                "end_trimmed": _hex(fn.end_exclusive_trimmed),
                "aliases": list(fn.aliases),
                "group": fn.specialization_group,
                "flags": sorted(fn.flags),
                "provenance": sorted(fn.provenance),
                "source": None
                if fn.source is None
                else {"file": fn.source[0], "line": fn.source[1]},
            }
        )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "meta": {"generator": GENERATOR, "config": _config_payload(config)},
        "binary": {
            "path": doc.binary.source_path,
            "digest_hex": doc.binary.content_digest.hex(),
            "word_size": doc.binary.word_size,
            "machine": machine_label(doc.binary.machine, doc.binary.machine_code),
        },
        "functions": functions,
        "byte_classes": [
            {
                "start": _hex(run.start),
                "length": run.length,
                "class": run.klass,
                "confidence": run.confidence,
            }
            for run in doc.byte_classes.runs
        ],
        "diagnostics": [
            {
                "severity": d.severity,
                "code": d.code,
                "message": d.message,
                "span": None
                if d.span is None
                else {"start": _hex(d.span[0]), "length": d.span[1]},
            }
            for d in doc.diagnostics
        ],
        "complete": doc.complete,
    }
    return _dump(payload, GROUND_TRUTH_SCHEMA)


def _machine_from_label(label: str) -> tuple[str, int]:
    if label == "x86":
        return "x86", 3
    if label == "x86_64":
        return "x86_64", 62
    if label.startswith("other(") and label.endswith(")"):
        return "other", int(label[6:-1])
    raise SchemaError(f"unrecognized machine label {label!r}")


def document_from_json(text: str) -> GroundTruthDocument:
    payload = _load(text, GROUND_TRUTH_SCHEMA)
    machine, machine_code = _machine_from_label(payload["binary"]["machine"])
    functions = []
    for fn in payload["functions"]:
        entries = tuple(int(e, 16) for e in fn["entries"])
        if int(fn["start"], 16) != entries[0]:
            raise SchemaError(
                f"function {fn['name']!r}: start disagrees with entries[0]"
            )
        functions.append(
            GroundTruthFunction(
                canonical_name=fn["name"],
                entry_points=entries,
                end_exclusive_raw=int(fn["end_raw"], 16),
                end_exclusive_trimmed=int(fn["end_trimmed"], 16),
                aliases=tuple(fn["aliases"]),
                specialization_group=fn["group"],
                flags=frozenset(fn["flags"]),
                provenance=frozenset(fn["provenance"]),
                source=None
                if fn["source"] is None
                else (fn["source"]["file"], fn["source"]["line"]),
            )
        )
    runs = tuple(
        ByteRun(int(r["start"], 16), r["length"], r["class"], r["confidence"])
        for r in payload["byte_classes"]
    )
    diagnostics = tuple(
        Diagnostic(
            d["severity"],
            d["code"],
            d["message"],
            span=None
            if d["span"] is None
            else (int(d["span"]["start"], 16), d["span"]["length"]),
        )
        for d in payload["diagnostics"]
    )
    return GroundTruthDocument(
        binary=BinarySummary(
            source_path=payload["binary"]["path"],
            content_digest=bytes.fromhex(payload["binary"]["digest_hex"]),
            word_size=payload["binary"]["word_size"],
            machine=machine,
            machine_code=machine_code,
        ),
        functions=tuple(functions),
        byte_classes=ByteClassMap(runs=runs),
        diagnostics=diagnostics,
        complete=payload["complete"],
    )


def report_to_json(report: ToolReport) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": report.tool_name, "version": report.tool_version},
        "binary_digest_hex": report.binary_digest.hex(),
        "functions": [
            {"start": _hex(start), "size": size}
            for start, size in report.predicted_functions
        ],
    }
    if report.predicted_byte_classes is not None:
        payload["byte_classes"] = [
            {
                "start": _hex(run.start),
                "length": run.length,
                "class": run.klass,
                "confidence": run.confidence,
            }
            for run in report.predicted_byte_classes.runs
        ]
    return _dump(payload, TOOL_REPORT_SCHEMA)


def report_from_json(text: str) -> ToolReport:
    payload = _load(text, TOOL_REPORT_SCHEMA)
    byte_classes = None
    if payload.get("byte_classes") is not None:
        byte_classes = ByteClassMap(
            runs=tuple(
                ByteRun(int(r["start"], 16), r["length"], r["class"], r["confidence"])
                for r in payload["byte_classes"]
            )
        )
    return ToolReport(
        tool_name=payload["tool"]["name"],
        tool_version=payload["tool"]["version"],
        binary_digest=bytes.fromhex(payload["binary_digest_hex"]),
        predicted_functions=tuple(
            (int(f["start"], 16), f["size"]) for f in payload["functions"]
        ),
        predicted_byte_classes=byte_classes,
    )


def score_to_json(result: ScoreResult) -> str:
    policy = None
    if result.policy is not None:
        policy = {
            "start_rule": result.policy.start_rule,
            "boundary_rule": result.policy.boundary_rule,
            "reject_incomplete_truth": result.policy.reject_incomplete_truth,
        }
    payload = {
        "schema_version": SCHEMA_VERSION,
        "policy": policy,
        "counts": {
            "true_positives": result.true_positives,
            "false_positives": result.false_positives,
            "false_negatives": result.false_negatives,
        },
        "metrics": {
            "precision": _metric_payload(result.precision),
            "recall": _metric_payload(result.recall),
            "f1": _metric_payload(result.f1),
        },
        "mismatches": [
            {"kind": m.kind, "address": _hex(m.address), "detail": m.detail}
            for m in result.mismatches
        ],
        "warnings": list(result.warnings),
    }
    return _dump(payload, SCORE_SCHEMA)


def corpus_to_json(summary: CorpusSummary) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "n": summary.n,
        "micro": {
            "precision": _metric_payload(summary.micro_precision),
            "recall": _metric_payload(summary.micro_recall),
            "f1": _metric_payload(summary.micro_f1),
        },
        "macro": {
            "precision": _metric_payload(summary.macro_precision),
            "recall": _metric_payload(summary.macro_recall),
            "f1": _metric_payload(summary.macro_f1),
        },
        "fraction_perfect": _metric_payload(summary.fraction_perfect),
        "below": [
            {"threshold": label, "fraction": _metric_payload(share)}
            for label, _value, share in summary.below
        ],
    }
    return _dump(payload, CORPUS_SCHEMA)
