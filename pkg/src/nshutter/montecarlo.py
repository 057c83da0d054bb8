"""Monte Carlo runs of the shutter experiment.

Each run draws the photon outcome (reflected or transmitted) and then
attempts post-selection of the shutter particle on whichever branch
occurred. Run ``i`` uses draws 0 and 1 of the stream keyed by
``(seed, i)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import stats as sps

from .linalg import normalize
from .rng import RunStream, uniform_block
from .shutter import (
    ExactProbabilities,
    ShutterScenario,
    exact_probabilities,
    interact,
    joint_initial,
    postselection_subspace,
)

PhotonResult = Literal["reflected", "transmitted"]
CELLS: tuple[tuple[str, bool], ...] = (
    ("reflected", True),
    ("reflected", False),
    ("transmitted", True),
    ("transmitted", False),
)
Z_LIMIT = 4.0


@dataclass(frozen=True)
class RunRecord:
    photon_result: PhotonResult
    postselected: bool
    run_index: int


def _decide(probs: ExactProbabilities, u_photon: float, u_post: float) -> tuple[PhotonResult, bool]:
    if u_photon < probs.p_reflect:
        return "reflected", u_post < probs.p_post_given_reflect
    return "transmitted", u_post < probs.p_post_given_transmit


def sample_run(
    s: ShutterScenario, stream: RunStream, probs: ExactProbabilities | None = None
) -> RunRecord:
    probs = exact_probabilities(s) if probs is None else probs
    result, post = _decide(probs, stream.uniform(0), stream.uniform(1))
    return RunRecord(result, post, stream.run_index)


def sample_run_by_projection(s: ShutterScenario, stream: RunStream) -> RunRecord:
    """Same draws as ``sample_run``, probabilities from explicit per-run projections."""
    split = interact(joint_initial(s))
    reflected = stream.uniform(0) < split.reflected.norm() ** 2
    branch = normalize(split.reflected if reflected else split.transmitted)
    # The photon space is spanned by the photon modes, so this projector is
    # I_photon (x) |psi2><psi2|.
    p_post = postselection_subspace(s).projector().apply(branch).norm() ** 2
    result = "reflected" if reflected else "transmitted"
    return RunRecord(result, stream.uniform(1) < p_post, stream.run_index)


@dataclass(frozen=True)
class BatchStats:
    n_runs: int
    seed: int
    counts: dict[tuple[str, bool], int] = field(default_factory=lambda: {c: 0 for c in CELLS})

    def __post_init__(self):
        counts = {c: int(self.counts.get(c, 0)) for c in CELLS}
        if sum(counts.values()) != self.n_runs:
            raise ValueError("cell counts do not sum to n_runs")
        object.__setattr__(self, "counts", counts)

    def merge(self, other: "BatchStats") -> "BatchStats":
        if other.seed != self.seed:
            raise ValueError("cannot merge batches drawn with different seeds")
        return BatchStats(
            self.n_runs + other.n_runs,
            self.seed,
            {c: self.counts[c] + other.counts[c] for c in CELLS},
        )

    def count(self, photon_result: str, postselected: bool) -> int:
        return self.counts[(photon_result, postselected)]

    def fraction(self, photon_result: str, postselected: bool | None = None) -> float:
        if postselected is None:
            n = self.count(photon_result, True) + self.count(photon_result, False)
        else:
            n = self.count(photon_result, postselected)
        return n / self.n_runs

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "seed": self.seed,
            "counts": {
                f"{res}{'_postselected' if post else '_rejected'}": self.counts[(res, post)]
                for res, post in CELLS
            },
        }


def _count_range(probs: ExactProbabilities, seed: int, start: int, stop: int) -> BatchStats:
    idx = np.arange(start, stop, dtype=np.uint64)
    u_photon = uniform_block(seed, idx, 0)
    u_post = uniform_block(seed, idx, 1)
    reflected = u_photon < probs.p_reflect
    threshold = np.where(reflected, probs.p_post_given_reflect, probs.p_post_given_transmit)
    post = u_post < threshold
    n_rp = int(np.count_nonzero(reflected & post))
    n_r = int(np.count_nonzero(reflected))
    n_tp = int(np.count_nonzero(~reflected & post))
    counts = {
        ("reflected", True): n_rp,
        ("reflected", False): n_r - n_rp,
        ("transmitted", True): n_tp,
        ("transmitted", False): (stop - start) - n_r - n_tp,
    }
    return BatchStats(stop - start, seed, counts)


def run_batch(
    s: ShutterScenario, n: int, seed: int, workers: int = 1, chunk_size: int = 1 << 16
) -> BatchStats:
    """Run ``n`` independent trials on counter-keyed streams.

    The result depends only on ``(s, n, seed)``; ``workers`` and
    ``chunk_size`` only change how the index range is split.
    """
    if n < 1:
        raise ValueError(f"need at least one run, got {n}")
    probs = exact_probabilities(s)
    bounds = [(a, min(a + chunk_size, n)) for a in range(0, n, chunk_size)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _count_range(probs, seed, *b), bounds))
    else:
        parts = [_count_range(probs, seed, a, b) for a, b in bounds]
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


@dataclass(frozen=True)
class CellComparison:
    cell: tuple[str, bool]
    observed: int
    expected_probability: float
    z: float


@dataclass(frozen=True)
class Comparison:
    n_runs: int
    cells: tuple[CellComparison, ...]
    chi2: float
    dof: int
    chi2_pvalue: float
    z_limit: float = Z_LIMIT

    @property
    def passed(self) -> bool:
        return all(abs(c.z) <= self.z_limit for c in self.cells)

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "passed": self.passed,
            "z_limit": self.z_limit,
            "chi2": self.chi2,
            "dof": self.dof,
            "chi2_pvalue": self.chi2_pvalue,
            "cells": [
                {
                    "photon_result": c.cell[0],
                    "postselected": c.cell[1],
                    "observed": c.observed,
                    "expected_probability": c.expected_probability,
                    "z": c.z,
                }
                for c in self.cells
            ],
        }


def _z_score(observed: int, n: int, p: float) -> float:
    var = n * p * (1 - p)
    if var <= 0:
        # Deterministic cell: any deviation from n*p is impossible under the model.
        return 0.0 if observed == round(n * p) else float("inf")
    return (observed - n * p) / np.sqrt(var)


def compare_to_exact(stats: BatchStats, s: ShutterScenario) -> Comparison:
    """Per-cell z-scores and a chi-square statistic against exact probabilities.

    Cells with zero exact probability are excluded from the chi-square sum;
    a nonzero count in one gives an infinite z-score instead.
    """
    exact = exact_probabilities(s).cells()
    n = stats.n_runs
    cells = tuple(
        CellComparison(c, stats.counts[c], exact[c], _z_score(stats.counts[c], n, exact[c]))
        for c in CELLS
    )
    live = [c for c in cells if c.expected_probability > 0]
    chi2 = float(sum((c.observed - n * c.expected_probability) ** 2 / (n * c.expected_probability)
                     for c in live))
    dof = max(len(live) - 1, 0)
    pvalue = float(sps.chi2.sf(chi2, dof)) if dof > 0 else 1.0
    return Comparison(n, cells, chi2, dof, pvalue)
