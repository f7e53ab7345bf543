"""Offline certificate checks built from kernel primitives only.

Nothing here optimises.  Transversal certificates are re-measured member by
member.  Independence witnesses are checked for coverage and recorded
margins, then attacked with the flats through every (k+1) of the member
cores in each subset; k = 0 witnesses get an exact pairwise-disjointness
check.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SchemaError
from .geometry import TAU_GEO, canonicalize_flat
from .io import CertificateDocument, FamilyDocument, flats_from_payload
from .nearball import Family, member_pierced


@dataclass
class VerificationResult:
    valid: bool
    problems: list = field(default_factory=list)

    def __bool__(self):
        return self.valid

    def to_dict(self):
        return {"valid": self.valid, "problems": self.problems}


def _as_family(family) -> Family:
    if isinstance(family, FamilyDocument):
        return family.to_family()
    if isinstance(family, Family):
        return family
    if isinstance(family, dict):
        return FamilyDocument.from_dict(family).to_family()
    raise SchemaError("expected a family or family document")


def _as_cert(cert) -> CertificateDocument:
    if isinstance(cert, CertificateDocument):
        return cert
    if isinstance(cert, dict):
        return CertificateDocument.from_dict(cert)
    raise SchemaError("expected a certificate document")


def _check_transversal(fam: Family, cert: CertificateDocument, problems: list):
    p = cert.payload
    tol = cert.solver_provenance.get("tolerances", {})
    tol_feas = float(tol.get("tol_feas", 1e-7))
    tol_open = float(tol.get("tol_open", TAU_GEO))
    flats = flats_from_payload(p)
    if not flats:
        problems.append("no flats")
        return
    for f in flats:
        if f.dim_ambient != fam.dim:
            raise SchemaError("flat and family live in different dimensions")
    k = p.get("k")
    if k is not None and any(f.dim_flat != int(k) for f in flats):
        problems.append("flat dimension differs from k")
    assign = p.get("assignment", [])
    if len(assign) != len(fam):
        problems.append(f"assignment covers {len(assign)} of {len(fam)} members")
        return
    if any(a is None or not 0 <= int(a) < len(flats) for a in assign):
        problems.append("assignment refers to a missing flat")
        return
    assign = np.array([int(a) for a in assign])
    gaps = np.empty(len(fam))
    for j, f in enumerate(flats):
        mask = assign == j
        if mask.any():
            gaps[mask] = fam.member_gaps(f)[mask]
    ok = member_pierced(gaps, fam.open_flag, tol_open, tol_feas)
    for i in np.flatnonzero(~ok):
        problems.append(f"member {int(i)} is not pierced by flat {int(assign[i])} (gap {gaps[i]:.3g})")
    resid = p.get("residuals")
    if resid is not None:
        if len(resid) != len(fam):
            problems.append("residual list has the wrong length")
        else:
            for i, (r, g) in enumerate(zip(resid, gaps)):
                if r is None or r > tol_feas or abs(r - max(0.0, g)) > 1e-9 * max(1.0, abs(g)):
                    problems.append(f"residual of member {i} does not match")


def _core_flats(fam: Family, subset, k: int):
    """Flats through the cores of each k + 1 members of ``subset``."""
    cores = fam.x_b
    out = []
    for part in itertools.combinations(subset, k + 1):
        rest = [i for i in subset if i not in part]
        P = cores[list(part)]
        dirs = P[1:] - P[0]
        if len(dirs) and np.linalg.matrix_rank(dirs) < k:
            # a spare direction: aim it at a remaining core
            dirs = np.vstack([dirs, cores[rest[0]] - P[0]])
        out.append(canonicalize_flat(P[0], dirs))
    return out


def _check_independence(fam: Family, cert: CertificateDocument, problems: list):
    p = cert.payload
    k = int(p["k"])
    members = [int(i) for i in p.get("member_indices", [])]
    tol_indep = float(p.get("tol_indep", 1e-4))
    if len(set(members)) != len(members) or any(not 0 <= i < len(fam) for i in members):
        problems.append("member indices are invalid")
        return
    if not 0 <= k <= fam.dim - 1:
        problems.append("k out of range")
        return
    evidence = p.get("evidence", [])
    recorded = {tuple(sorted(int(i) for i in e["subset"])): e for e in evidence}
    if len(members) >= k + 2:
        needed = [tuple(sorted(s)) for s in itertools.combinations(members, k + 2)]
    else:
        needed = []
        if len(members) >= 2 and not p.get("affine_check"):
            problems.append("small family without an affine check")
    for s in needed:
        rec = recorded.get(s)
        if rec is None:
            problems.append(f"subset {list(s)} has no evidence")
            continue
        if rec.get("value") is None or not rec["value"] > tol_indep:
            problems.append(f"subset {list(s)} has recorded value within tol_indep")
    if fam.open_flag:
        pierced = lambda g: g < -TAU_GEO  # noqa: E731
    else:
        pierced = lambda g: g <= TAU_GEO  # noqa: E731
    for s in needed:
        sub = fam.subfamily(list(s))
        for f in _core_flats(fam, list(s), k):
            if np.all(pierced(sub.member_gaps(f))):
                problems.append(f"subset {list(s)} is met by a flat through member cores")
                break
    if k == 0 and fam.single_part:
        C, r = fam.centers[members], fam.radii[members]
        for a, b in itertools.combinations(range(len(members)), 2):
            if np.linalg.norm(C[a] - C[b]) <= r[a] + r[b]:
                problems.append(f"members {members[a]} and {members[b]} intersect")


def verify_certificate(family, cert) -> VerificationResult:
    """Re-check a certificate against its family without re-solving."""
    fam = _as_family(family)
    cert = _as_cert(cert)
    problems: list = []
    if cert.kind == "transversal":
        _check_transversal(fam, cert, problems)
    elif cert.kind == "independence":
        _check_independence(fam, cert, problems)
    else:
        passed = cert.payload.get("passed")
        if passed is False:
            problems.append("report records a failure")
    return VerificationResult(not problems, problems)
