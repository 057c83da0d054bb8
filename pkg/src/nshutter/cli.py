"""Command-line front end: ``nshutter {exact,abl,simulate,verify}``.

Exit codes: 0 success, 1 check failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Sequence

from .config import ConfigError, ScenarioConfig
from .linalg import LinalgError, StateVector
from .montecarlo import compare_to_exact, run_batch
from .prepost import (
    DegenerateABLError,
    Observable,
    abl_probabilities,
    abl_probability,
    box_observable,
    box_projector,
    cross_term,
)
from .shutter import (
    ZeroBranchError,
    certainty_orthogonality_report,
    exact_probabilities,
    interact,
    joint_initial,
    reflected_reduced_density,
    transmitted_in_postselection_basis,
    transmitted_state,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SIG_DIGITS = 12


def _num(x: float) -> float | None:
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}") + 0.0


def _cnum(z: complex) -> list:
    return [_num(z.real), _num(z.imag)]


def _fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def _fmt_c(z: complex) -> str:
    z = complex(z)
    re_, im = _num(z.real), _num(z.imag)
    if im == 0:
        return _fmt(re_)
    return f"{_fmt(re_)}{'+' if im >= 0 else '-'}{_fmt(abs(im))}j"


def _labeled(state: StateVector) -> list[dict]:
    return [
        {"label": "".join(labels), "amplitude": _cnum(a)}
        for labels, a in zip(state.shape.product_labels(), state.amplitudes)
    ]


def _maybe(fn):
    try:
        return fn()
    except ZeroBranchError:
        return None


def exact_report(cfg: ScenarioConfig) -> dict[str, Any]:
    s = cfg.to_scenario()
    joint = joint_initial(s)
    split = interact(joint)
    probs = exact_probabilities(s)
    tr = _maybe(lambda: transmitted_state(s))
    coeffs = _maybe(lambda: transmitted_in_postselection_basis(s))
    density = _maybe(lambda: reflected_reduced_density(s))
    try:
        cert = certainty_orthogonality_report(s)
        certainty = {
            "residual": _num(cert.residual),
            "abl_in_mode": {m: _num(p) for m, p in cert.abl_in_mode.items()},
            "certain": cert.certain,
            "orthogonal": cert.orthogonal,
            "equivalence_holds": cert.equivalence_holds,
        }
    except (ZeroBranchError, DegenerateABLError) as exc:
        certainty = {"error": str(exc)}
    # Post state first, then its orthonormal extension; photon mode varies fastest.
    blocks = ["psi2"] + [f"perp{k}" for k in range(1, s.shutter_count)]
    basis_labels = [f"{b}({m}')" for b in blocks for m in s.photon_modes]
    return {
        "scenario": ScenarioConfig.from_scenario(s).to_dict(),
        "joint_initial": _labeled(joint),
        "reflected_branch": _labeled(split.reflected),
        "transmitted_branch": _labeled(split.transmitted),
        "transmitted_state": None if tr is None else _labeled(tr),
        "postselection_basis": basis_labels,
        "transmitted_in_postselection_basis": None if coeffs is None else [_cnum(c) for c in coeffs],
        "reflected_reduced_density": None if density is None
        else [[_cnum(x) for x in row] for row in density.entries],
        "probabilities": {
            "reflect": _num(probs.p_reflect),
            "transmit": _num(probs.p_transmit),
            "postselect_given_reflect": _num(probs.p_post_given_reflect),
            "postselect_given_transmit": _num(probs.p_post_given_transmit),
            "reflect_and_postselect": _num(probs.p_reflect_and_post),
        },
        "certainty": certainty,
    }


def abl_table(cfg: ScenarioConfig) -> list[dict[str, Any]]:
    """One row per shutter ``x``: ABL probability of ``in x`` when only ``x``
    is opened (``{P_x, 1 - P_x}``), and when every shutter is opened at once."""
    ens = cfg.ensemble()
    shape = ens.pre.shape
    try:
        all_open = list(abl_probabilities(ens, Observable.location(shape)))
    except DegenerateABLError:
        all_open = [None] * shape.dim
    rows = []
    for x, p_all in zip(cfg.shutters, all_open):
        row: dict[str, Any] = {"shutter": x, "abl_all_open": None if p_all is None else _num(p_all)}
        try:
            p = abl_probability(ens, box_observable(shape, x), f"in {x}")
            row.update(abl=_num(p), certain=abs(p - 1) <= 1e-9, error=None)
        except DegenerateABLError as exc:
            row.update(abl=None, certain=False, error=str(exc))
        row["cross_term"] = _cnum(cross_term(ens, box_projector(shape, x)))
        rows.append(row)
    return rows


def simulate_report(cfg: ScenarioConfig, n: int, seed: int, workers: int = 1) -> dict[str, Any]:
    s = cfg.to_scenario()
    stats = run_batch(s, n, seed, workers=workers)
    comparison = compare_to_exact(stats, s).to_dict()
    comparison["chi2"] = _num(comparison["chi2"])
    comparison["chi2_pvalue"] = _num(comparison["chi2_pvalue"])
    for cell in comparison["cells"]:
        cell["expected_probability"] = _num(cell["expected_probability"])
        cell["z"] = _num(cell["z"])
    return {"stats": stats.to_dict(), "comparison": comparison}


def _load(args) -> ScenarioConfig:
    return ScenarioConfig.default() if args.config is None else ScenarioConfig.load(args.config)


def _emit_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _print_state(title: str, entries: list[dict] | None) -> None:
    print(f"{title}:")
    if entries is None:
        print("  (zero branch)")
        return
    for e in entries:
        re_, im = e["amplitude"]
        if re_ or im:
            print(f"  |{e['label']}>  {_fmt_c(complex(re_, im))}")


def cmd_exact(args) -> int:
    report = exact_report(_load(args))
    if args.json:
        _emit_json(report)
        return EXIT_OK
    p = report["probabilities"]
    _print_state("joint state before interaction", report["joint_initial"])
    _print_state("reflected branch", report["reflected_branch"])
    _print_state("transmitted branch", report["transmitted_branch"])
    _print_state("transmitted state (normalized)", report["transmitted_state"])
    print("transmitted state in post-selection basis:")
    coeffs = report["transmitted_in_postselection_basis"] or []
    for label, c in zip(report["postselection_basis"], coeffs):
        print(f"  {label:<10} {_fmt_c(complex(*c))}")
    print("reflected reduced density (shutter):")
    for row in report["reflected_reduced_density"] or []:
        print("  " + "  ".join(f"{_fmt_c(complex(*x)):>16}" for x in row))
    print("probabilities:")
    for key in ("reflect", "transmit", "postselect_given_reflect", "postselect_given_transmit",
                "reflect_and_postselect"):
        print(f"  {key:<26} {_fmt(p[key])}")
    cert = report["certainty"]
    if "error" in cert:
        print(f"certainty: {cert['error']}")
    else:
        print(f"residual ||P_post psi_tr||   {_fmt(cert['residual'])}")
        print("ABL-certain photon modes:    "
              + ", ".join(f"{m}={'yes' if c else 'no'}" for m, c in cert["certain"].items()))
        print(f"equivalence holds:           {cert['equivalence_holds']}")
    return EXIT_OK


def cmd_abl(args) -> int:
    rows = abl_table(_load(args))
    if args.json:
        _emit_json(rows)
        return EXIT_OK
    print(f"{'shutter':<8} {'ABL(in x)':>16}  certain  {'cross term':>20}  {'all opened':>16}")
    for r in rows:
        p_all = "degenerate" if r["abl_all_open"] is None else _fmt(r["abl_all_open"])
        cross = _fmt_c(complex(*r["cross_term"]))
        if r["error"]:
            print(f"{r['shutter']:<8} {'degenerate':>16}  -        {cross:>20}  {p_all:>16}")
        else:
            flag = "yes" if r["certain"] else "no"
            print(f"{r['shutter']:<8} {_fmt(r['abl']):>16}  {flag:<7}  {cross:>20}  {p_all:>16}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise ConfigError("--n must be at least 1")
    report = simulate_report(_load(args), args.n, args.seed, args.workers)
    passed = report["comparison"]["passed"]
    if args.json:
        _emit_json(report)
        return EXIT_OK if passed else EXIT_FAIL
    st = report["stats"]
    print(f"runs {st['n_runs']}  seed {st['seed']}")
    print(f"{'photon':<12} {'postselected':<13} {'count':>8} {'expected p':>16} {'z':>10}")
    for c in report["comparison"]["cells"]:
        z = "inf" if c["z"] is None else f"{c['z']:+.3f}"
        print(f"{c['photon_result']:<12} {str(c['postselected']):<13} {c['observed']:>8} "
              f"{_fmt(c['expected_probability']):>16} {z:>10}")
    cmp_ = report["comparison"]
    print(f"chi2 {_fmt(cmp_['chi2'])} (dof {cmp_['dof']}, p = {_fmt(cmp_['chi2_pvalue'])})")
    print(f"verdict: {'pass' if passed else 'FAIL'} (|z| <= {cmp_['z_limit']:g})")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(args.tolerance)
    failed = [r.key for r in results if not r.passed]
    if args.json:
        _emit_json({"passed": not failed, "failed": failed, "checks": [r.to_dict() for r in results]})
    else:
        for r in results:
            print(f"[{'PASS' if r.passed else 'FAIL'}] {r.key:<17} {r.title}: {r.detail}")
        print("all checks passed" if not failed else f"failed: {', '.join(failed)}")
    return EXIT_OK if not failed else EXIT_FAIL


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nshutter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", default=None, help="scenario JSON (default: three-shutter setup)")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("exact", help="exact branch, basis and density report")
    common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("abl", help="ABL probability of finding the particle in each shutter")
    common(p)
    p.set_defaults(func=cmd_abl)

    p = sub.add_parser("simulate", help="Monte Carlo batch compared with exact probabilities")
    common(p)
    p.add_argument("--n", type=int, default=100_000, help="number of runs")
    p.add_argument("--seed", type=_u64, default=0, help="unsigned 64-bit seed")
    p.add_argument("--workers", type=int, default=1, help="threads; output does not depend on it")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the acceptance checks")
    common(p, config=False)
    p.add_argument("--tolerance", type=float, default=None,
                   help="override every numeric tolerance (statistical checks unaffected)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"nshutter: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LinalgError as exc:
        print(f"nshutter: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
