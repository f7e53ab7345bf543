"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""
import itertools
import json
import math
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from transversal_lab.claims import verify_claim_cone, verify_claim_ktok, verify_claim_wide_cone
from transversal_lab.constructions import counterexample_discs, random_family, verify_33_property
from transversal_lab.exceptions import SequenceExhausted, Unpierceable
from transversal_lab.geometry import canonicalize_flat
from transversal_lab.independence import greedy_independent_subsequence, lift_flat, orthogonal_project_family
from transversal_lab.io import CertificateDocument, FamilyDocument
from transversal_lab.nearball import Family, pierces
from transversal_lab.oracle import sweep_lines_2d
from transversal_lab.solver import (PiercingFailure, SolveOptions, TransversalCertificate,
                                    exists_transversal, fit_flat, greedy_piercing_upper,
                                    min_max_flat, pierce_with_m_flats)
from transversal_lab.verify import verify_certificate


def record(n, checks, detail=""):
    """Print and store one line; fail the test if any named check is false."""
    failed = [name for name, ok in checks.items() if not ok]
    status = "PASS" if not failed else "FAIL"
    line = f"criterion {n:>2}: {status}  {detail}"
    if failed:
        line += f"  failed: {', '.join(failed)}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not failed, line


def test_criterion_01_three_three_property():
    t0 = time.perf_counter()
    rep = verify_33_property(12)
    seconds = time.perf_counter() - t0
    fam = counterexample_discs(12)
    worst = -math.inf
    for S in itertools.combinations(range(12), 3):
        signed, _, _ = sweep_lines_2d(fam.subfamily(list(S)))
        worst = max(worst, signed)
    record(1, {
        "220 triples": rep.n_triples == 220,
        "wedge and solver checks": rep.passed,
        "runtime <= 10 s": seconds <= 10.0,
        "sweep oracle pierces every triple": worst <= 1e-6 and worst < 0,
    }, f"triples={rep.n_triples} seconds={seconds:.2f} worst_sweep_signed={worst:.3e}")


def test_criterion_02_independence_cap():
    lengths = {}
    for n in (5, 10, 50):
        try:
            wit = greedy_independent_subsequence(counterexample_discs(n, closed=True), 1, 3)
            lengths[n] = len(wit)
        except SequenceExhausted as exc:
            lengths[n] = len(exc.accepted)
    record(2, {f"n={n} halts at 2": lengths[n] == 2 for n in lengths}, f"lengths={lengths}")


TOL_OPEN = 0.0155


def test_criterion_03_line_piercing_growth():
    opts = SolveOptions(tol_open=TOL_OPEN)
    # threshold from the sweep oracle alone
    n2 = None
    for n in range(1, 200):
        signed, _, _ = sweep_lines_2d(counterexample_discs(n))
        if not signed < -TOL_OPEN:
            n2 = n
            break
    below, at = counterexample_discs(n2 - 1), counterexample_discs(n2)
    ref_below = sweep_lines_2d(below)[0]
    ref_at = sweep_lines_2d(at)[0]
    fit_below = fit_flat(below, 1, opts).signed
    fit_at = fit_flat(at, 1, opts).signed
    agree = (abs(fit_below - ref_below) <= 1e-6 and abs(fit_at - ref_at) <= 1e-6
             and exists_transversal(below, 1, opts).found and not exists_transversal(at, 1, opts).found)
    small = {n: greedy_piercing_upper(counterexample_discs(n), 1, opts)[0] for n in (1, 2, 5, n2 - 1)}
    large = {}
    for n in (n2, n2 + 5):
        try:
            large[n] = greedy_piercing_upper(counterexample_discs(n), 1, opts)[0]
        except Unpierceable as exc:
            large[n] = f"Unpierceable(members={exc.members})"
    record(3, {
        "solver agrees with sweep on both sides": agree,
        "greedy m = 1 below threshold": all(m == 1 for m in small.values()),
        "greedy m > 1 at and above threshold": all(isinstance(m, int) and m > 1 for m in large.values()),
    }, f"tol_open={TOL_OPEN} N2={n2} sweep=({ref_below:.6g},{ref_at:.6g}) "
       f"solver=({fit_below:.6g},{fit_at:.6g}) small={small} large={large}")


def test_criterion_04_projection_ratio():
    checks, parts = {}, []
    for K in (1.5, 3, 10):
        t0 = time.perf_counter()
        rep = verify_claim_ktok(K, trials=10_000, seed=7)
        dt = time.perf_counter() - t0
        checks[f"K={K} bound"] = rep.violations == 0 and rep.max_observed <= math.sqrt(2) * K + 1e-6
        checks[f"K={K} runtime"] = dt <= 30
        parts.append(f"K={K}: max={rep.max_observed:.10f} bound={math.sqrt(2) * K:.10f} t={dt:.2f}s")
    record(4, checks, "; ".join(parts))


def test_criterion_05_cone_claim():
    checks, parts = {}, []
    for K, D, eps1 in ((2, 10, 0.1), (5, 3, 0.05)):
        rep = verify_claim_cone(K, D, eps1, trials=10_000, seed=3, raise_on_violation=False)
        checks[f"({K},{D},{eps1}) no escapes"] = rep.violations == 0
        neg = verify_claim_cone(K, D, eps1, trials=10_000, seed=3, inflate=10, raise_on_violation=False)
        checks[f"({K},{D},{eps1}) negative control"] = neg.violations >= 1
        parts.append(f"({K},{D},{eps1}): max={rep.max_observed:.4g} escapes={rep.violations} "
                     f"control_escapes={neg.violations}")
    record(5, checks, "; ".join(parts))


def test_criterion_06_wide_cone():
    checks, parts = {}, []
    for K in (1, 3):
        alpha = 0.9 * (math.pi / 4) / (1 + math.pi * K / 2)
        rep = verify_claim_wide_cone(K, alpha, trials=10_000, seed=11, raise_on_violation=False)
        bound = alpha * (1 + math.pi * K / 2)
        checks[f"K={K}"] = (rep.violations == 0 and rep.max_observed <= bound + 1e-9
                            and rep.max_observed < math.pi / 4)
        parts.append(f"K={K}: max_aperture={rep.max_observed:.6f} bound={bound:.6f}")
    record(6, checks, "; ".join(parts))


def _intersecting_family(rng, d):
    p = rng.uniform(-5, 5, size=d)
    n = int(rng.integers(2, 9))
    C = rng.uniform(-8, 8, size=(n, d))
    slack = np.where(rng.uniform(size=n) < 0.3, 0.0, rng.uniform(0, 1, size=n))
    return Family.from_balls(C, np.linalg.norm(C - p, axis=1) + slack)


def test_criterion_07_point_exactness():
    rng = np.random.default_rng(2024)
    worst_yes, bad_yes = 0.0, 0
    for d in (2, 3):
        for _ in range(500):
            res = exists_transversal(_intersecting_family(rng, d), 0)
            worst_yes = max(worst_yes, res.value)
            bad_yes += not (res.found and res.value <= 1e-7)
    worst_margin, bad_no = math.inf, 0
    for i in range(500):
        d = 2 + i % 2
        r1, r2 = rng.uniform(0.1, 3, size=2)
        gap = float(rng.uniform(1e-3, 2))
        u = rng.normal(size=d)
        u /= np.linalg.norm(u)
        c1 = rng.uniform(-5, 5, size=d)
        fam = Family.from_balls([c1, c1 + (r1 + r2 + gap) * u], [r1, r2])
        res = exists_transversal(fam, 0)
        margin = res.fit.lower_bound - (gap / 2 - 1e-7)
        worst_margin = min(worst_margin, margin)
        bad_no += not (not res.found and res.certified and margin >= 0)
    record(7, {"YES with residual <= 1e-7": bad_yes == 0, "certified NO with bound": bad_no == 0},
           f"yes_failures={bad_yes} max_yes_residual={worst_yes:.2e} no_failures={bad_no} "
           f"min_bound_margin={worst_margin:.2e}")


def _disjoint_balls(rng, m, d=2):
    while True:
        C = rng.uniform(-10, 10, size=(m, d))
        R = rng.uniform(0.2, 1.5, size=m)
        D = np.linalg.norm(C[:, None] - C[None], axis=2)
        if all(D[i, j] > R[i] + R[j] + 0.05 for i, j in itertools.combinations(range(m), 2)):
            return C, R


def test_criterion_08_m_point_lower_bound():
    rng = np.random.default_rng(8)
    results = []
    for m in (2, 3):
        for _ in range(5):
            C, R = _disjoint_balls(rng, m)
            fam = Family.from_balls(np.repeat(C, 10, axis=0), np.repeat(R, 10))
            short = pierce_with_m_flats(fam, 0, m - 1, mode="exhaustive")
            full = pierce_with_m_flats(fam, 0, m, mode="exhaustive")
            ok_full = isinstance(full, TransversalCertificate) and bool(verify_certificate(
                fam, CertificateDocument.from_transversal(full, SolveOptions(), 0)))
            results.append((m, isinstance(short, PiercingFailure) and short.certified, ok_full))
    record(8, {
        "budget m-1 fails (certified)": all(r[1] for r in results),
        "budget m verified": all(r[2] for r in results),
    }, f"families={len(results)} members_each=10m")


def test_criterion_09_oracle_equivalence():
    rng = np.random.default_rng(99)
    worst, n_certs, n_valid = 0.0, 0, 0
    for i in range(200):
        n = int(rng.integers(1, 6))
        parts = 1 if i % 4 else 2
        fam = random_family(n, 2, seed=1000 + i, box=4.0, r_range=(0.1, 1.0), parts=parts)
        _, value = min_max_flat(fam, 1)
        ref = max(0.0, sweep_lines_2d(fam)[0])
        worst = max(worst, abs(value - ref))
        m, cert = greedy_piercing_upper(fam, 1)
        doc = json.loads(CertificateDocument.from_transversal(cert, SolveOptions(), 1).dumps())
        fam_doc = json.loads(FamilyDocument.from_family(fam).dumps())
        n_certs += 1
        n_valid += bool(verify_certificate(fam_doc, doc))
    record(9, {"agreement within 2e-3": worst <= 2e-3, "all certificates verify": n_valid == n_certs},
           f"instances=200 max_abs_diff={worst:.2e} certificates={n_valid}/{n_certs}")


def test_criterion_10_projection_contracts():
    rng = np.random.default_rng(10)
    bad_k, bad_lift = 0, 0
    for i in range(1000):
        d = int(rng.integers(2, 5))
        fam = random_family(int(rng.integers(1, 6)), d, seed=i, parts=int(rng.integers(1, 4)))
        bad_k += orthogonal_project_family(fam).K > fam.K + 1e-12
    for i in range(1000):
        d = int(rng.integers(3, 5))
        fam = random_family(3, d, seed=5000 + i, parts=int(rng.integers(1, 4)))
        proj = orthogonal_project_family(fam)
        j = int(rng.integers(0, len(fam)))
        lo, hi = proj.offsets[j], proj.offsets[j + 1]
        q = int(rng.integers(lo, hi))
        u = rng.normal(size=d - 1)
        # a point of the projected part, then a random flat through it
        p = proj.centers[q] + proj.radii[q] * rng.uniform(0, 1) * u / np.linalg.norm(u)
        k = int(rng.integers(0, d - 1))
        f = canonicalize_flat(p, rng.normal(size=(k, d - 1)) if k else ())
        if not pierces(f, proj.member(j)):
            bad_lift += 1
            continue
        bad_lift += not pierces(lift_flat(f), fam.member(j))
    record(10, {"K never increases": bad_k == 0, "lifted flats pierce": bad_lift == 0},
           f"families=1000 K_increases={bad_k} incidences=1000 lift_failures={bad_lift}")
