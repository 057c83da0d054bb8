"""Pre- and post-selected ensembles: Born rule, ABL rule, post-selection.

No dynamics is modeled between the preparation, the intermediate
measurement and the post-selection; the evolution in between is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import (
    EPS_HERM,
    EPS_NORM,
    EPS_ZERO,
    LinalgError,
    Operator,
    ShapeMismatchError,
    StateVector,
    Subspace,
    normalize,
)

CERTAINTY_TOL = 1e-9


class PrePostError(LinalgError):
    pass


class NotNormalizedError(PrePostError):
    pass


class InvalidObservableError(PrePostError):
    pass


class DegenerateABLError(PrePostError):
    """No intermediate outcome is compatible with the pre/post pair."""


@dataclass(frozen=True, eq=False)
class Observable:
    """Projective measurement: labeled, mutually orthogonal projectors summing to one."""

    outcomes: tuple[tuple[str, Operator], ...]

    def __post_init__(self):
        outcomes = tuple((str(label), op) for label, op in self.outcomes)
        if not outcomes:
            raise InvalidObservableError("observable needs at least one outcome")
        labels = [label for label, _ in outcomes]
        if len(set(labels)) != len(labels):
            raise InvalidObservableError(f"duplicate outcome labels: {labels}")
        shape = outcomes[0][1].shape
        total = np.zeros((shape.dim, shape.dim), dtype=np.complex128)
        for i, (label, p) in enumerate(outcomes):
            if p.shape != shape:
                raise ShapeMismatchError(f"outcome {label!r} lives on a different space")
            if not p.is_projector():
                raise InvalidObservableError(f"outcome {label!r} is not an orthogonal projector")
            for _, q in outcomes[i + 1:]:
                if np.max(np.abs(p.entries @ q.entries)) > EPS_HERM:
                    raise InvalidObservableError(f"outcome {label!r} overlaps another outcome")
            total += p.entries
        if np.max(np.abs(total - np.eye(shape.dim))) > EPS_HERM:
            raise InvalidObservableError("outcome projectors do not sum to the identity")
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def shape(self):
        return self.outcomes[0][1].shape

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.outcomes)

    def index(self, key: int | str) -> int:
        if isinstance(key, str):
            try:
                return self.labels.index(key)
            except ValueError:
                raise InvalidObservableError(f"no outcome labeled {key!r}") from None
        if not 0 <= key < len(self.outcomes):
            raise InvalidObservableError(f"outcome index {key} out of range")
        return key

    @classmethod
    def binary(cls, p: Operator, label: str, complement_label: str | None = None) -> "Observable":
        """``{P, 1 - P}``, e.g. looking for the particle in one box only."""
        complement_label = complement_label or f"not {label}"
        return cls(((label, p), (complement_label, Operator.identity(p.shape) - p)))

    @classmethod
    def location(cls, shape, subsystem: str | None = None) -> "Observable":
        """One rank-1 outcome ``in x`` per basis label of a single-subsystem space."""
        name = subsystem or shape.names[0]
        if len(shape.subsystems) != 1:
            raise InvalidObservableError("location observable needs a single-subsystem space")
        outcomes = []
        for lab in shape.labels(name):
            outcomes.append((f"in {lab}", Operator.outer(StateVector.basis(shape, lab))))
        return cls(tuple(outcomes))


def box_projector(shape, label: str) -> Operator:
    """``|x><x|`` on a single-subsystem space."""
    return Operator.outer(StateVector.basis(shape, label))


def box_observable(shape, label: str) -> Observable:
    """``{P_x, 1 - P_x}`` with outcome labels ``in x`` / ``not in x``."""
    return Observable.binary(box_projector(shape, label), f"in {label}", f"not in {label}")


@dataclass(frozen=True, eq=False)
class PrePostEnsemble:
    pre: StateVector
    post: StateVector

    def __post_init__(self):
        if self.pre.shape != self.post.shape:
            raise ShapeMismatchError("pre- and post-selected states live on different spaces")
        for name, s in (("pre", self.pre), ("post", self.post)):
            if not s.is_unit():
                raise NotNormalizedError(f"{name}-selected state has norm {s.norm()!r}")


def _require_unit(state: StateVector) -> None:
    if not state.is_unit(EPS_NORM):
        raise NotNormalizedError(f"state has norm {state.norm()!r}")


def born_probability(state: StateVector, projector: Operator) -> float:
    """``<psi|P|psi>`` for a normalized state."""
    _require_unit(state)
    p = projector.expectation(state).real
    return float(min(max(p, 0.0), 1.0))


def transition_amplitudes(ens: PrePostEnsemble, obs: Observable) -> np.ndarray:
    """``<post|P_k|pre>`` for every outcome ``k``."""
    if obs.shape != ens.pre.shape:
        raise ShapeMismatchError("observable and ensemble live on different spaces")
    bra = ens.post.amplitudes.conj()
    return np.array([bra @ (p.entries @ ens.pre.amplitudes) for _, p in obs.outcomes])


def abl_probabilities(ens: PrePostEnsemble, obs: Observable) -> np.ndarray:
    """ABL probabilities of every outcome of ``obs`` between ``pre`` and ``post``.

    Raises:
        DegenerateABLError: every transition amplitude vanishes, so the
            post-selection cannot succeed whatever the intermediate result.
    """
    weights = np.abs(transition_amplitudes(ens, obs)) ** 2
    total = weights.sum()
    if total <= EPS_ZERO:
        raise DegenerateABLError(
            f"ABL denominator {total:.3e} vanishes: post-selection impossible for every outcome"
        )
    return weights / total


def abl_probability(ens: PrePostEnsemble, obs: Observable, k: int | str) -> float:
    return float(abl_probabilities(ens, obs)[obs.index(k)])


def certainty_outcomes(
    ens: PrePostEnsemble, obs: Observable, tol: float = CERTAINTY_TOL
) -> list[str]:
    """Labels of outcomes the ABL rule assigns probability one."""
    probs = abl_probabilities(ens, obs)
    return [label for label, p in zip(obs.labels, probs) if abs(p - 1.0) <= tol]


def cross_term(ens: PrePostEnsemble, p: Operator) -> complex:
    """``<post|(1 - P)|pre>``; its vanishing is what makes ``P`` ABL-certain."""
    complement = Operator.identity(p.shape) - p
    return complex(ens.post.amplitudes.conj() @ (complement.entries @ ens.pre.amplitudes))


@dataclass(frozen=True, eq=False)
class PostSelection:
    probability: float
    collapsed: StateVector | None

    @property
    def succeeded(self) -> bool:
        return self.collapsed is not None


def postselect(state: StateVector, subspace: Subspace | Sequence[StateVector]) -> PostSelection:
    """Project a normalized state onto ``subspace``.

    A zero-probability result is valid and reported with ``collapsed=None``.
    """
    _require_unit(state)
    if not isinstance(subspace, Subspace):
        subspace = Subspace.spanned_by(subspace)
    projected = subspace.projector().apply(state)
    prob = float(np.vdot(projected.amplitudes, projected.amplitudes).real)
    if prob <= EPS_ZERO:
        return PostSelection(prob, None)
    return PostSelection(min(prob, 1.0), normalize(projected))
