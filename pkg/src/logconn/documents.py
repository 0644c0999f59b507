"""JSON document envelopes and canonical serialization.

Every file the command line reads or writes is an envelope
``{"kind": ..., "version": "1", "payload": ...}`` with kind one of
representation, local-connection, weighted-bundle, fuchsian-system or
report.  Complex numbers are two-element arrays [re, im]; matrices are
row-major nested arrays; series are {"order": N, "coeffs": [...]}.

Serialization is canonical: keys sorted, floats printed with 17
significant digits, no whitespace variation, so canonical documents
round-trip byte-identically.
"""

import json

import numpy as np

from .bundles import Representation, WeightedFlag, WeightedFlatBundle
from .localforms import LocalLogConnection
from .series import MatrixSeries
from .synth import FuchsianSystem

__all__ = [
    "DocumentError",
    "canonical_dumps",
    "wrap",
    "parse_document",
    "encode_complex",
    "decode_complex",
    "encode_matrix",
    "decode_matrix",
    "encode_series",
    "decode_series",
    "encode_representation",
    "decode_representation",
    "encode_connection",
    "decode_connection",
    "encode_bundle",
    "decode_bundle",
    "encode_system",
    "decode_system",
]

KINDS = ("representation", "local-connection", "weighted-bundle", "fuchsian-system", "report")


class DocumentError(ValueError):
    """Input document fails to parse or validate against its schema."""


def _fmt_float(x):
    if x != x or x in (float("inf"), float("-inf")):
        raise DocumentError("non-finite number in document")
    s = "%.17g" % x
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"  # keep the value lexically a float through reparsing
    return s


def _canonical(obj, out):
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _canonical(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _canonical(item, out)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise DocumentError(f"unserializable value of type {type(obj).__name__}")


def canonical_dumps(obj):
    out = []
    _canonical(obj, out)
    return "".join(out) + "\n"


def wrap(kind, payload):
    if kind not in KINDS:
        raise DocumentError(f"unknown document kind {kind!r}")
    return {"kind": kind, "payload": payload, "version": "1"}


def parse_document(text, expected_kind=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "kind" not in doc or "payload" not in doc:
        raise DocumentError("document must be an envelope with kind and payload")
    if doc.get("version") != "1":
        raise DocumentError(f"unsupported document version {doc.get('version')!r}")
    if doc["kind"] not in KINDS:
        raise DocumentError(f"unknown document kind {doc['kind']!r}")
    if expected_kind is not None and doc["kind"] != expected_kind:
        raise DocumentError(f"expected a {expected_kind} document, got {doc['kind']}")
    return doc


def encode_complex(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def decode_complex(obj):
    if not (isinstance(obj, list) and len(obj) == 2):
        raise DocumentError(f"complex number must be [re, im], got {obj!r}")
    return complex(float(obj[0]), float(obj[1]))


def encode_matrix(m):
    m = np.asarray(m, dtype=np.complex128)
    return [[encode_complex(x) for x in row] for row in m]


def decode_matrix(obj):
    if not (isinstance(obj, list) and obj and all(isinstance(r, list) for r in obj)):
        raise DocumentError("matrix must be a nested array")
    rows = [[decode_complex(x) for x in row] for row in obj]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DocumentError("ragged matrix")
    return np.array(rows, dtype=np.complex128)


def encode_series(s):
    return {"coeffs": [encode_matrix(c) for c in s.coeffs], "order": int(s.order)}


def decode_series(obj):
    if not isinstance(obj, dict) or "coeffs" not in obj:
        raise DocumentError("series must have coeffs")
    coeffs = [decode_matrix(c) for c in obj["coeffs"]]
    if "order" in obj and int(obj["order"]) != len(coeffs) - 1:
        raise DocumentError("series order disagrees with the coefficient count")
    return MatrixSeries(np.array(coeffs))


def encode_representation(rep):
    return {
        "basepoint": encode_complex(rep.basepoint),
        "matrices": [encode_matrix(g) for g in rep.matrices],
        "punctures": [encode_complex(a) for a in rep.punctures],
    }


def decode_representation(obj, tol=1e-8):
    try:
        return Representation(
            [decode_complex(a) for a in obj["punctures"]],
            [decode_matrix(g) for g in obj["matrices"]],
            decode_complex(obj.get("basepoint", [0.0, 0.0])),
            tol=tol,
        )
    except KeyError as exc:
        raise DocumentError(f"representation payload missing {exc}") from exc


def encode_connection(conn):
    return {"series": encode_series(conn.a)}


def decode_connection(obj):
    try:
        return LocalLogConnection(decode_series(obj["series"]))
    except KeyError as exc:
        raise DocumentError(f"local-connection payload missing {exc}") from exc


def encode_bundle(wfb):
    return {
        "flags": [
            {
                "subspaces": [encode_matrix(s) for s in f.subspaces],
                "weights": [int(w) for w in f.weights],
            }
            for f in wfb.flags
        ],
        "representation": encode_representation(wfb.rep),
    }


def decode_bundle(obj, tol=1e-8):
    try:
        rep = decode_representation(obj["representation"], tol=tol)
        flags = tuple(
            WeightedFlag(
                tuple(decode_matrix(s) for s in f["subspaces"]),
                tuple(int(w) for w in f["weights"]),
            )
            for f in obj["flags"]
        )
    except KeyError as exc:
        raise DocumentError(f"weighted-bundle payload missing {exc}") from exc
    return WeightedFlatBundle(rep, flags)


def encode_system(system):
    return {
        "punctures": [encode_complex(a) for a in system.punctures],
        "residues": [encode_matrix(b) for b in system.residues],
    }


def decode_system(obj, tol=1e-8):
    try:
        return FuchsianSystem(
            [decode_complex(a) for a in obj["punctures"]],
            [decode_matrix(b) for b in obj["residues"]],
            tol=tol,
        )
    except KeyError as exc:
        raise DocumentError(f"fuchsian-system payload missing {exc}") from exc
