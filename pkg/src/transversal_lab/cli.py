"""Command-line entry point ``transversal-lab``.

Documents are read from a file argument or standard input and written to
``--out`` or standard output.  Exit codes: 0 success, 1 invalid input or an
invalid certificate, 2 undecided, 3 an internal assertion or a claim
counterexample.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .claims import verify_claim_cone, verify_claim_ktok, verify_claim_wide_cone
from .constructions import (counterexample_discs, inner_tangent_wedge, random_family,
                            segments_family, sharpness_family2)
from .exceptions import (CounterexampleFound, SchemaError, SequenceExhausted,
                         TransversalLabError)
from .geometry import Cone
from .independence import (IndependenceWitness, central_project_family,
                           greedy_independent_subsequence, is_k_independent,
                           orthogonal_project_family)
from .io import (CertificateDocument, FamilyDocument, dumps, flats_from_payload,
                 read_document, read_family, write_text)
from .nearball import check_weak_condition_r
from .render import render_svg
from .solver import METHODS, SolveOptions, TransversalCertificate, pierce_with_m_flats
from .verify import verify_certificate

EXIT_OK, EXIT_INVALID, EXIT_UNDECIDED, EXIT_INTERNAL = 0, 1, 2, 3


def _opts(args) -> SolveOptions:
    return SolveOptions(restarts=args.restarts, seed=args.seed, tol_feas=args.tol,
                        tol_open=args.tol_open, method=args.method)


def _emit(args, text: str):
    write_text(text, args.out)


def _family_out(args, fam, meta):
    _emit(args, FamilyDocument.from_family(fam, meta).dumps())
    return EXIT_OK


# gen ------------------------------------------------------------------------

def cmd_gen(args):
    if args.kind == "discs":
        fam = counterexample_discs(args.n, closed=args.closed)
        meta = {"generator": "discs", "n": args.n, "closed": args.closed}
    elif args.kind == "segments":
        fam = segments_family(args.n, seed=args.seed, resolution=args.resolution)
        meta = {"generator": "segments", "n": args.n, "seed": args.seed, "resolution": args.resolution}
    elif args.kind == "family2":
        fam = sharpness_family2(args.n, seed=args.seed, resolution=args.resolution)
        meta = {"generator": "family2", "n": args.n, "seed": args.seed, "resolution": args.resolution}
    else:
        fam = random_family(args.n, d=args.d, seed=args.seed, parts=args.parts)
        meta = {"generator": "random", "n": args.n, "d": args.d, "seed": args.seed, "parts": args.parts}
    return _family_out(args, fam, meta)


def cmd_check_nearball(args):
    fam = read_family(args.input)
    K = fam.K
    grid = sorted(set(float(r) for r in fam.r_in))
    rows = check_weak_condition_r(fam, grid)
    payload = {
        "check": "nearball",
        "n_members": len(fam),
        "K": K,
        "member_constants": fam.member_constants.tolist(),
        "r_in": fam.r_in.tolist(),
        "r_esc": fam.r_esc.tolist(),
        "weak_condition": [{"r": r, "sup_r_esc": s} for r, s in rows],
        "passed": bool(args.K is None or K <= args.K),
    }
    if args.K is not None:
        payload["K_cap"] = args.K
    _emit(args, CertificateDocument.report(payload).dumps())
    return EXIT_OK if payload["passed"] else EXIT_INVALID


# solving --------------------------------------------------------------------

def _failure_report(fail, k, m, opts):
    payload = {"outcome": "FAIL" if fail.certified else "UNDECIDED", "k": k, "m": m,
               "best_residual": fail.best_residual, "mode": fail.mode}
    return CertificateDocument.report(payload, opts, certified=fail.certified)


def cmd_pierce(args):
    fam = read_family(args.input)
    opts = _opts(args)
    res = pierce_with_m_flats(fam, args.k, args.m, opts, mode=args.mode)
    if isinstance(res, TransversalCertificate):
        _emit(args, CertificateDocument.from_transversal(res, opts, args.k).dumps())
        return EXIT_OK
    _emit(args, _failure_report(res, args.k, args.m, opts).dumps())
    return EXIT_OK if res.certified else EXIT_UNDECIDED


def _independence(fam, k, target, opts):
    """Witness of the requested size, or a report of how far the scan got."""
    if target is None:
        res = is_k_independent(fam, k, opts)
        if isinstance(res, IndependenceWitness):
            return res, None
        return None, {"outcome": "DEPENDENT", "k": k, "violation": res.to_dict()}
    try:
        return greedy_independent_subsequence(fam, k, target, opts), None
    except SequenceExhausted as exc:
        return None, {"outcome": "SequenceExhausted", "k": k, "target": target,
                      "accepted": list(exc.accepted), "length": len(exc.accepted)}


def cmd_independent(args):
    fam = read_family(args.input)
    opts = _opts(args)
    wit, report = _independence(fam, args.k, args.target, opts)
    if wit is not None:
        _emit(args, CertificateDocument.from_witness(wit, opts).dumps())
    else:
        _emit(args, CertificateDocument.report(report, opts).dumps())
    return EXIT_OK


def cmd_dichotomy(args):
    """Finite analogue of the piercing / independence dichotomy.

    A transversal within the budget wins; otherwise an independence
    witness of the target size; otherwise an UNDECIDED report.
    """
    fam = read_family(args.input)
    opts = _opts(args)
    res = pierce_with_m_flats(fam, args.k, args.budget, opts)
    if isinstance(res, TransversalCertificate):
        _emit(args, CertificateDocument.from_transversal(res, opts, args.k).dumps())
        return EXIT_OK
    target = args.target if args.target is not None else args.budget + args.k + 1
    target = max(target, args.k + 2)
    wit, report = _independence(fam, args.k, target, opts)
    if wit is not None:
        _emit(args, CertificateDocument.from_witness(wit, opts).dumps())
        return EXIT_OK
    payload = {"outcome": "UNDECIDED", "k": args.k, "budget": args.budget, "target": target,
               "piercing": {"best_residual": res.best_residual, "certified": res.certified,
                            "mode": res.mode},
               "independence": report}
    _emit(args, CertificateDocument.report(payload, opts).dumps())
    return EXIT_UNDECIDED


# claims -----------------------------------------------------------------------

def cmd_verify_claims(args):
    if args.claim == "cone":
        # an inflated eps' breaks the premise: count escapes instead of stopping
        rep = verify_claim_cone(args.K, args.D, args.eps1, trials=args.trials, seed=args.seed,
                                d=args.d, inflate=args.inflate,
                                raise_on_violation=args.inflate <= 1.0)
    elif args.claim == "wide-cone":
        alpha = args.alpha
        if alpha is None:
            alpha = 0.9 * (math.pi / 4) / (1 + math.pi * args.K / 2)
        rep = verify_claim_wide_cone(args.K, alpha, trials=args.trials, seed=args.seed, d=args.d)
    else:
        rep = verify_claim_ktok(args.K, trials=args.trials, seed=args.seed, d=args.d)
    _emit(args, CertificateDocument.report(rep.to_dict(), certified=False).dumps())
    return EXIT_OK


# projections ------------------------------------------------------------------

def cmd_project(args):
    fam = read_family(args.input)
    if args.kind == "orthogonal":
        out = orthogonal_project_family(fam)
        meta = {"projection": "orthogonal"}
    else:
        axis = np.zeros(fam.dim)
        axis[-1] = -1.0
        if args.axis is not None:
            axis = np.array([float(v) for v in args.axis.split(",")])
            axis = axis / np.linalg.norm(axis)
        out = central_project_family(fam, Cone(axis, args.aperture))
        meta = {"projection": "central", "axis": axis.tolist(), "aperture": args.aperture}
    return _family_out(args, out, meta)


def cmd_verify(args):
    fam = read_family(args.family)
    cert = read_document(args.cert)
    if not isinstance(cert, CertificateDocument):
        raise SchemaError("expected a certificate document")
    res = verify_certificate(fam, cert)
    _emit(args, dumps(res.to_dict()))
    return EXIT_OK if res.valid else EXIT_INVALID


def cmd_render(args):
    fam = read_family(args.input)
    flats, assignment = [], None
    if args.cert:
        cert = read_document(args.cert)
        if isinstance(cert, CertificateDocument) and cert.kind == "transversal":
            flats = flats_from_payload(cert.payload)
            assignment = cert.payload.get("assignment")
    wedges = []
    for spec in args.wedge or []:
        i, j = (int(v) for v in spec.split(","))
        wedges.append(inner_tangent_wedge(fam.member(i).core, fam.member(j).core))
    _emit(args, render_svg(fam, flats, wedges, assignment, size=args.size))
    return EXIT_OK


# parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=8)
    common.add_argument("--trials", type=int, default=10_000)
    common.add_argument("--tol", type=float, default=1e-7, help="feasibility tolerance")
    common.add_argument("--tol-open", type=float, default=1e-9,
                        help="required penetration depth for open members")
    common.add_argument("--method", choices=METHODS, default="auto")

    p = argparse.ArgumentParser(prog="transversal-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a family document")
    gs = g.add_subparsers(dest="kind", required=True)
    q = gs.add_parser("discs", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--closed", action="store_true")
    for name in ("segments", "family2"):
        q = gs.add_parser(name, parents=[common])
        q.add_argument("--n", type=int, required=True)
        q.add_argument("--resolution", type=float, default=1e-4)
    q = gs.add_parser("random", parents=[common])
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--d", type=int, default=2)
    q.add_argument("--parts", type=int, default=1)
    g.set_defaults(func=cmd_gen)

    q = sub.add_parser("check-nearball", parents=[common], help="report near-ball constants")
    q.add_argument("input", nargs="?", default="-")
    q.add_argument("--K", type=float, default=None, help="fail if the constant exceeds this")
    q.set_defaults(func=cmd_check_nearball)

    q = sub.add_parser("pierce", parents=[common], help="pierce with m k-flats")
    q.add_argument("input", nargs="?", default="-")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--m", type=int, default=1)
    q.add_argument("--mode", choices=("auto", "exhaustive", "alternating"), default="auto")
    q.set_defaults(func=cmd_pierce)

    q = sub.add_parser("independent", parents=[common], help="k-independence witness")
    q.add_argument("input", nargs="?", default="-")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--target", type=int, default=None,
                   help="greedy scan for this many members (default: test the whole family)")
    q.set_defaults(func=cmd_independent)

    q = sub.add_parser("dichotomy", parents=[common], help="transversal, witness or UNDECIDED")
    q.add_argument("input", nargs="?", default="-")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--budget", type=int, required=True)
    q.add_argument("--target", type=int, default=None)
    q.set_defaults(func=cmd_dichotomy)

    q = sub.add_parser("verify-claims", parents=[common], help="Monte-Carlo claim checks")
    q.add_argument("claim", choices=("cone", "wide-cone", "ktok"))
    q.add_argument("--K", type=float, default=2.0)
    q.add_argument("--D", type=float, default=1.0)
    q.add_argument("--eps1", type=float, default=0.1)
    q.add_argument("--alpha", type=float, default=None)
    q.add_argument("--d", type=int, default=3)
    q.add_argument("--inflate", type=float, default=1.0)
    q.set_defaults(func=cmd_verify_claims)

    q = sub.add_parser("project", parents=[common], help="project a family one dimension down")
    q.add_argument("kind", choices=("orthogonal", "central"))
    q.add_argument("input", nargs="?", default="-")
    q.add_argument("--axis", default=None, help="comma-separated cone axis (default -e_d)")
    q.add_argument("--aperture", type=float, default=math.pi / 4)
    q.set_defaults(func=cmd_project)

    q = sub.add_parser("verify", parents=[common], help="re-check a certificate offline")
    q.add_argument("--family", required=True)
    q.add_argument("--cert", required=True)
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("render", parents=[common], help="SVG of a planar scene")
    q.add_argument("input", nargs="?", default="-")
    q.add_argument("--cert", default=None, help="transversal certificate to overlay")
    q.add_argument("--wedge", action="append", help="i,j: inner tangent wedge of member cores")
    q.add_argument("--size", type=int, default=600)
    q.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CounterexampleFound as exc:
        print(f"counterexample: {exc}", file=sys.stderr)
        if getattr(exc, "report", None) is not None:
            _emit(args, CertificateDocument.report(exc.report.to_dict()).dumps())
        return EXIT_INTERNAL
    except (TransversalLabError, SchemaError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AssertionError as exc:
        print(f"internal assertion: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
