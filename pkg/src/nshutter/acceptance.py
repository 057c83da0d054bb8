"""Exit checks for the toolkit, shared by ``nshutter verify`` and the test suite.

Each check takes an optional tolerance override. Without one, every check
uses its own pinned tolerance. The statistical Monte Carlo and determinism
checks ignore the override.
"""

from __future__ import annotations

import contextlib
import io
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import (
    DensityOperator,
    SpaceShape,
    StateVector,
    change_basis,
    orthonormalize,
    partial_trace,
    projector,
)
from .montecarlo import run_batch
from .prepost import Observable, PrePostEnsemble, abl_probabilities, abl_probability, box_observable
from .shutter import (
    ShutterScenario,
    build_scenario,
    certainty_orthogonality_report,
    default_scenario,
    interact,
    joint_initial,
    postselection_prob_given_reflection,
    postselection_subspace,
    reflected_reduced_density,
    transmitted_in_postselection_basis,
    transmitted_state,
)

SQ6_4 = np.sqrt(6) / 4
SQ2_4 = np.sqrt(2) / 4
EQ7_VECTOR = np.array([0, 0, SQ6_4, SQ6_4, -SQ2_4, SQ2_4])
THREE_BOX_POST = np.array([1, 1, -1]) / np.sqrt(3)

PROPERTY_TRIALS = 1000
CHECK_SEED = 20021


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "title": self.title,
            "passed": self.passed,
            "detail": self.detail,
            "seconds": round(self.seconds, 6),
        }


def _timed(fn: Callable, repeats: int = 1):
    """Return (value of the last call, best wall time over ``repeats`` calls)."""
    best = float("inf")
    value = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return value, best


def _random_state(rng: np.random.Generator, shape: SpaceShape) -> StateVector:
    v = rng.normal(size=shape.dim) + 1j * rng.normal(size=shape.dim)
    return StateVector(shape, v / np.linalg.norm(v), normalized=True)


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def check_eq7(tol: float | None = None) -> CheckResult:
    tol = 1e-10 if tol is None else tol
    s = default_scenario()
    coeffs, seconds = _timed(lambda: transmitted_in_postselection_basis(s), repeats=20)
    err = float(np.max(np.abs(coeffs - EQ7_VECTOR)))
    ok = err <= tol and seconds < 1e-3
    return CheckResult(
        "eq7", "transmitted state in post-selection basis", ok,
        f"max |err| = {err:.3e} (tol {tol:g}); {seconds * 1e3:.3f} ms (limit 1 ms)", seconds,
    )


def check_reduced_density(tol: float | None = None) -> CheckResult:
    tol = 1e-10 if tol is None else tol
    s = default_scenario()
    w = reflected_reduced_density(s)
    err_w = float(np.max(np.abs(w.entries - np.diag([0.5, 0.5, 0.0]))))
    p = postselection_prob_given_reflection(s)
    err_p = abs(p - 1 / 3)
    ok = err_w <= tol and err_p <= tol
    return CheckResult(
        "reduced_density", "reflected reduced density and post-selection probability", ok,
        f"density |err| = {err_w:.3e}, P(post|reflect) = {p:.15f} |err| = {err_p:.3e} (tol {tol:g})",
    )


def check_branches(tol: float | None = None) -> CheckResult:
    tol = 1e-10 if tol is None else tol
    joint = joint_initial(default_scenario())
    split = interact(joint)
    err_r = abs(split.p_reflect - 1 / 3)
    err_t = abs(split.p_transmit - 2 / 3)
    err_sum = float(np.max(np.abs(split.reflected.amplitudes + split.transmitted.amplitudes - joint.amplitudes)))
    ok = max(err_r, err_t, err_sum) <= tol
    return CheckResult(
        "branches", "reflection / transmission split", ok,
        f"p_reflect err {err_r:.3e}, p_transmit err {err_t:.3e}, reconstruction err {err_sum:.3e} (tol {tol:g})",
    )


def check_three_box(tol: float | None = None) -> CheckResult:
    tol_abl = 1e-9 if tol is None else tol
    tol_vec = 1e-10 if tol is None else tol
    s = default_scenario()
    ens = s.ensemble
    shape = s.shutter_shape
    p_a = abl_probability(ens, box_observable(shape, "a"), "in a")
    p_b = abl_probability(ens, box_observable(shape, "b"), "in b")
    # Distance up to a global phase.
    overlap = np.vdot(THREE_BOX_POST, s.post_state.amplitudes)
    phase = overlap / abs(overlap)
    err_vec = float(np.max(np.abs(s.post_state.amplitudes - phase * THREE_BOX_POST)))
    ok = abs(p_a - 1) <= tol_abl and abs(p_b - 1) <= tol_abl and err_vec <= tol_vec
    return CheckResult(
        "three_box", "three-box ABL certainty and derived post state", ok,
        f"ABL(in a) = {p_a!r}, ABL(in b) = {p_b!r} (tol {tol_abl:g}); post state err {err_vec:.3e} (tol {tol_vec:g})",
    )


def check_arbitrary_photon(tol: float | None = None, trials: int = 1000) -> CheckResult:
    tol = 1e-10 if tol is None else tol
    rng = np.random.default_rng(CHECK_SEED)
    alphas = [_random_unit(rng, 2) for _ in range(trials)]

    def run():
        worst = 0.0
        for alpha in alphas:
            s = default_scenario(photon_amplitudes=alpha)
            p = postselection_subspace(s).projector()
            worst = max(worst, p.apply(transmitted_state(s)).norm())
        return worst

    worst, seconds = _timed(run)
    ok = worst <= tol and seconds < 1.0
    return CheckResult(
        "arbitrary_photon", f"orthogonality for {trials} random photon amplitudes", ok,
        f"max residual {worst:.3e} (tol {tol:g}); {seconds:.3f} s (limit 1 s)", seconds,
    )


def random_equivalence_scenario(rng: np.random.Generator) -> tuple[ShutterScenario, str]:
    """Random scenario on 2..6 shutters with a post state that is ABL-certain
    for all, some, or (generically) none of the photon modes."""
    m = int(rng.integers(2, 7))
    shutters = [chr(ord("a") + i) for i in range(m)]
    n_modes = int(rng.integers(1, m))
    modes = sorted(rng.choice(shutters, size=n_modes, replace=False).tolist())
    psi1 = _random_unit(rng, m)
    alpha = _random_unit(rng, n_modes)
    kind = rng.choice(["all", "some", "none"], p=[0.4, 0.2, 0.4])
    if kind == "some" and n_modes < 2:
        kind = "none"
    if kind == "none":
        psi2 = _random_unit(rng, m)
    else:
        forced = modes if kind == "all" else modes[: int(rng.integers(1, n_modes))]
        # psi2 orthogonal to (1 - P_x) psi1 for each forced mode x.
        rows = []
        for x in forced:
            v = psi1.copy()
            v[shutters.index(x)] = 0
            rows.append(v)
        _, _, vh = np.linalg.svd(np.array(rows))
        # Rows of vh past the rank span {w : <w|v> = 0 for every row v}.
        null = vh[len(rows):]
        psi2 = _random_unit(rng, null.shape[0]) @ null
        psi2 /= np.linalg.norm(psi2)
    return build_scenario(shutters, modes, alpha, psi1, psi2), str(kind)


def check_equivalence(tol: float | None = None, trials: int = 500) -> CheckResult:
    tol = 1e-9 if tol is None else tol
    rng = np.random.default_rng(CHECK_SEED + 1)
    orth_not_certain = certain_not_orth = 0
    kinds = {"all": 0, "some": 0, "none": 0}
    for _ in range(trials):
        s, kind = random_equivalence_scenario(rng)
        kinds[kind] += 1
        report = certainty_orthogonality_report(s, tol=tol, certainty_tol=tol)
        if report.orthogonal and not report.all_certain:
            orth_not_certain += 1
        if report.all_certain and not report.orthogonal:
            certain_not_orth += 1
    ok = orth_not_certain == 0 and certain_not_orth == 0
    return CheckResult(
        "equivalence", f"orthogonality <=> ABL certainty on {trials} random scenarios", ok,
        f"counterexamples: orthogonal-not-certain {orth_not_certain}, certain-not-orthogonal "
        f"{certain_not_orth} (tol {tol:g}); cases all/some/none = "
        f"{kinds['all']}/{kinds['some']}/{kinds['none']}",
    )


def check_monte_carlo(tol: float | None = None, n: int = 100_000, seed: int = 7) -> CheckResult:
    s = default_scenario()
    stats, seconds = _timed(lambda: run_batch(s, n, seed))
    sig_r = np.sqrt((1 / 3) * (2 / 3) / n)
    sig_rp = np.sqrt((1 / 9) * (8 / 9) / n)
    z_r = (stats.fraction("reflected") - 1 / 3) / sig_r
    z_rp = (stats.fraction("reflected", True) - 1 / 9) / sig_rp
    n_tp = stats.count("transmitted", True)
    ok = abs(z_r) <= 4 and abs(z_rp) <= 4 and n_tp == 0 and seconds < 2.0
    return CheckResult(
        "monte_carlo", f"Monte Carlo frequencies, n = {n}", ok,
        f"z(reflected) = {z_r:+.2f}, z(reflected & post) = {z_rp:+.2f} (limit 4); "
        f"transmitted & post = {n_tp}; {seconds:.3f} s (limit 2 s)", seconds,
    )


def check_determinism(tol: float | None = None) -> CheckResult:
    from .cli import main

    def capture() -> bytes:
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            main(["simulate", "--n", "100000", "--seed", "12345", "--json"])
        return buf.getvalue().encode()

    first, second = capture(), capture()
    ok = first == second and len(first) > 0
    return CheckResult(
        "determinism", "simulate output byte-identical across executions", ok,
        f"{len(first)} bytes, identical = {first == second}",
    )


def _property_parseval(rng, tol):
    worst = 0.0
    for _ in range(PROPERTY_TRIALS):
        d = int(rng.integers(1, 9))
        shape = SpaceShape.single("s", [str(i) for i in range(d)])
        u = StateVector(shape, rng.normal(size=d) + 1j * rng.normal(size=d))
        basis = orthonormalize([_random_state(rng, shape) for _ in range(d)])
        c = change_basis(u, basis)
        worst = max(worst, abs(np.sum(np.abs(c) ** 2) - u.norm() ** 2))
    return worst


def _property_projector(rng, tol):
    worst = 0.0
    for _ in range(PROPERTY_TRIALS):
        d = int(rng.integers(1, 9))
        k = int(rng.integers(1, d + 1))
        shape = SpaceShape.single("s", [str(i) for i in range(d)])
        p = projector([_random_state(rng, shape) for _ in range(k)]).entries
        worst = max(
            worst,
            float(np.max(np.abs(p @ p - p))),
            float(np.max(np.abs(p - p.conj().T))),
            abs(np.trace(p).real - k),
        )
    return worst


def _property_partial_trace(rng, tol):
    worst = 0.0
    for _ in range(PROPERTY_TRIALS):
        da, db = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        shape = SpaceShape((("A", tuple("0123"[:da])), ("B", tuple("0123"[:db]))))
        rho = DensityOperator.pure(_random_state(rng, shape))
        for keep in ("A", "B"):
            r = partial_trace(rho, keep)
            worst = max(worst, abs(r.trace() - 1), max(0.0, -float(r.eigenvalues()[0])))
    return worst


def _property_abl(rng, tol):
    worst = 0.0
    for _ in range(PROPERTY_TRIALS):
        d = int(rng.integers(2, 7))
        shape = SpaceShape.single("s", [str(i) for i in range(d)])
        ens = PrePostEnsemble(_random_state(rng, shape), _random_state(rng, shape))
        # Random complete observable: group a random orthonormal basis into blocks.
        basis = orthonormalize([_random_state(rng, shape) for _ in range(d)])
        cuts = sorted(rng.choice(np.arange(1, d), size=int(rng.integers(0, d)), replace=False).tolist())
        blocks = np.split(np.arange(d), cuts)
        outcomes = tuple((str(i), projector([basis[j] for j in blk])) for i, blk in enumerate(blocks))
        probs = abl_probabilities(ens, Observable(outcomes))
        worst = max(worst, abs(probs.sum() - 1), max(0.0, -float(probs.min())))
    return worst


def check_properties(tol: float | None = None) -> CheckResult:
    tol = 1e-10 if tol is None else tol
    rng = np.random.default_rng(CHECK_SEED + 2)
    results = {
        "parseval": _property_parseval(rng, tol),
        "projector": _property_projector(rng, tol),
        "partial_trace": _property_partial_trace(rng, tol),
        "abl_normalization": _property_abl(rng, tol),
    }
    ok = all(v <= tol for v in results.values())
    detail = ", ".join(f"{k} max dev {v:.2e}" for k, v in results.items())
    return CheckResult(
        "properties", f"property suites ({PROPERTY_TRIALS} instances each)", ok, f"{detail} (tol {tol:g})"
    )


CHECKS: tuple[Callable[..., CheckResult], ...] = (
    check_eq7,
    check_reduced_density,
    check_branches,
    check_three_box,
    check_arbitrary_photon,
    check_equivalence,
    check_monte_carlo,
    check_determinism,
    check_properties,
)


def run_all(tol: float | None = None) -> list[CheckResult]:
    return [check(tol) for check in CHECKS]
