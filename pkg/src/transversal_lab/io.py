"""JSON documents for families and certificates.

Floats are written with 17 significant digits, which round-trips every
double exactly; keys are sorted and there is no timestamp, so equal inputs
give byte-identical files.  Non-finite floats become ``null``.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .exceptions import SchemaError
from .geometry import KFlat
from .nearball import Family

FORMAT_VERSION = "1.0.0"
CERT_KINDS = ("transversal", "independence", "report")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        s = format(x, ".17g")
        if not any(ch in s for ch in ".en"):
            s += ".0"
        return s
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating, bool)) or v is None for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    return _encode(obj, indent, 0) + "\n"


def _require(doc: dict, *keys):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise SchemaError(f"missing field(s): {', '.join(missing)}")


@dataclass
class FamilyDocument:
    ambient_dim: int
    open_flag: bool
    members: list
    metadata: dict = field(default_factory=dict)
    version: str = FORMAT_VERSION

    @classmethod
    def from_family(cls, family: Family, metadata: Optional[dict] = None) -> "FamilyDocument":
        members = []
        for i in range(len(family)):
            lo, hi = family.offsets[i], family.offsets[i + 1]
            parts = [{"center": family.centers[j].tolist(), "radius": float(family.radii[j])}
                     for j in range(lo, hi)]
            members.append({"parts": parts, "core_index": int(family.core[i])})
        return cls(family.dim, family.open_flag, members, dict(metadata or {}))

    def to_family(self) -> Family:
        if not self.members:
            raise SchemaError("a family document needs at least one member")
        centers, radii, sizes, core = [], [], [], []
        for m in self.members:
            if "parts" not in m or not m["parts"]:
                raise SchemaError("member without parts")
            for p in m["parts"]:
                if "center" not in p or "radius" not in p:
                    raise SchemaError("part needs center and radius")
                if len(p["center"]) != self.ambient_dim:
                    raise SchemaError("part centre does not match ambient_dim")
                centers.append([float(v) for v in p["center"]])
                if p["radius"] is None:
                    raise SchemaError("radius must be a finite number")
                radii.append(float(p["radius"]))
            sizes.append(len(m["parts"]))
            core.append(int(m.get("core_index", 0)))
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        return Family(np.array(centers, dtype=float), radii, offsets, core, bool(self.open_flag))

    def to_dict(self):
        return {"version": self.version, "ambient_dim": self.ambient_dim, "open_flag": self.open_flag,
                "members": self.members, "metadata": self.metadata}

    @classmethod
    def from_dict(cls, doc: dict) -> "FamilyDocument":
        if not isinstance(doc, dict):
            raise SchemaError("family document must be an object")
        _require(doc, "ambient_dim", "members")
        return cls(int(doc["ambient_dim"]), bool(doc.get("open_flag", False)), list(doc["members"]),
                   dict(doc.get("metadata") or {}), str(doc.get("version", FORMAT_VERSION)))

    def dumps(self) -> str:
        return dumps(self.to_dict())


@dataclass
class CertificateDocument:
    kind: str
    payload: dict
    solver_provenance: dict = field(default_factory=dict)
    version: str = FORMAT_VERSION

    def __post_init__(self):
        if self.kind not in CERT_KINDS:
            raise SchemaError(f"unknown certificate kind {self.kind!r}")

    @classmethod
    def from_transversal(cls, cert, opts, k: int) -> "CertificateDocument":
        payload = {
            "k": k,
            "flats": [f.to_dict() for f in cert.flats],
            "assignment": list(cert.assignment),
            "residuals": list(cert.residuals),
            "open_flag": cert.open_flag,
        }
        return cls("transversal", payload, provenance(opts, cert.certified))

    @classmethod
    def from_witness(cls, wit, opts) -> "CertificateDocument":
        return cls("independence", wit.to_dict(), provenance(opts, not wit.heuristic,
                                                              tol_indep=wit.tol_indep))

    @classmethod
    def report(cls, payload: dict, opts=None, certified: bool = False) -> "CertificateDocument":
        return cls("report", payload, provenance(opts, certified) if opts is not None else {})

    def to_dict(self):
        return {"version": self.version, "kind": self.kind, "payload": self.payload,
                "solver_provenance": self.solver_provenance}

    @classmethod
    def from_dict(cls, doc: dict) -> "CertificateDocument":
        if not isinstance(doc, dict):
            raise SchemaError("certificate document must be an object")
        _require(doc, "kind", "payload")
        return cls(doc["kind"], dict(doc["payload"]), dict(doc.get("solver_provenance") or {}),
                   str(doc.get("version", FORMAT_VERSION)))

    def dumps(self) -> str:
        return dumps(self.to_dict())


def provenance(opts, certified: bool, **extra) -> dict:
    out = {"seed": int(opts.seed), "restarts": int(opts.restarts),
           "tolerances": {"tol_feas": opts.tol_feas, "tol_open": opts.tol_open, **extra},
           "method": opts.method, "certified": bool(certified)}
    return out


def flats_from_payload(payload: dict) -> list:
    try:
        return [KFlat.from_dict(f) for f in payload["flats"]]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad flat entry: {exc}") from exc


def load_json(source) -> Any:
    """Parse JSON from a path, ``-`` (stdin) or an open file."""
    try:
        if source in (None, "-"):
            return json.load(sys.stdin)
        if hasattr(source, "read"):
            return json.load(source)
        with open(source, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc


def read_document(source):
    """Return a :class:`FamilyDocument` or :class:`CertificateDocument`."""
    doc = load_json(source)
    if isinstance(doc, dict) and "kind" in doc:
        return CertificateDocument.from_dict(doc)
    return FamilyDocument.from_dict(doc)


def read_family(source) -> Family:
    doc = read_document(source)
    if not isinstance(doc, FamilyDocument):
        raise SchemaError("expected a family document")
    return doc.to_family()


def write_text(text: str, dest=None):
    if dest in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write(text)
