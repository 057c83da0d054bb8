"""The N-shutter experiment: a shutter particle spread over M shutters and a
photon aimed at N of them.

The joint space is photon-first: ``photon (x') x shutter (y)``. A component
``|x'>|y>`` is reflected when the photon meets the particle (``x == y``) and
transmitted otherwise. The interaction is a relabeling of amplitudes into
two orthogonal branches, not a Hamiltonian evolution.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .linalg import (
    EPS_NORM,
    EPS_ORTH,
    EPS_ZERO,
    DensityOperator,
    LinalgError,
    Operator,
    SpaceShape,
    StateVector,
    Subspace,
    change_basis,
    inner,
    normalize,
    orthogonal_complement,
    partial_trace,
    tensor,
)
from .prepost import (
    CERTAINTY_TOL,
    PrePostEnsemble,
    abl_probability,
    box_observable,
    box_projector,
    cross_term,
    postselect,
)

PHOTON = "photon"
SHUTTER = "shutter"


class ScenarioError(LinalgError):
    pass


class ZeroBranchError(LinalgError):
    """A branch needed by the request has zero probability."""


def photon_label(mode: str) -> str:
    return f"{mode}'"


def shutter_shape(shutters: Sequence[str]) -> SpaceShape:
    return _shutter_shape(tuple(shutters))


@lru_cache(maxsize=256)
def _shutter_shape(shutters: tuple[str, ...]) -> SpaceShape:
    return SpaceShape.single(SHUTTER, shutters)


def uniform_state(shape: SpaceShape) -> StateVector:
    return StateVector(shape, np.full(shape.dim, 1 / np.sqrt(shape.dim)), normalized=True)


@lru_cache(maxsize=64)
def three_box_complement(shape: SpaceShape) -> tuple[StateVector, StateVector]:
    """The two vectors completing the three-box post-selection basis.

    ``(|a> + |b> + 2|c>)/sqrt(6)`` and ``(|a> - |b>)/sqrt(2)`` over the three
    shutter labels in order.
    """
    if shape.dim != 3:
        raise ScenarioError("the three-box basis needs exactly three shutters")
    v1 = StateVector(shape, np.array([1, 1, 2]) / np.sqrt(6), normalized=True)
    v2 = StateVector(shape, np.array([1, -1, 0]) / np.sqrt(2), normalized=True)
    return v1, v2


@lru_cache(maxsize=64)
def three_box_post_state(shape: SpaceShape) -> StateVector:
    """``(|a> + |b> - |c>)/sqrt(3)``, obtained as the complement of ``three_box_complement``."""
    (psi2,) = orthogonal_complement(list(three_box_complement(shape)))
    return psi2


@dataclass(frozen=True, eq=False)
class ShutterScenario:
    """Shutter labels, photon-reachable modes and the photon / pre / post states.

    ``photon_amplitudes`` is indexed like ``photon_modes``; ``pre_state`` and
    ``post_state`` live on the shutter space.
    """

    shutters: tuple[str, ...]
    photon_modes: tuple[str, ...]
    photon_amplitudes: np.ndarray
    pre_state: StateVector
    post_state: StateVector
    post_complement: tuple[StateVector, ...] = field(default=(), repr=False)

    def __post_init__(self):
        shutters = tuple(self.shutters)
        modes = tuple(self.photon_modes)
        object.__setattr__(self, "shutters", shutters)
        object.__setattr__(self, "photon_modes", modes)
        if len(shutters) < 2:
            raise ScenarioError("a shutter scenario needs at least two shutters")
        if len(set(shutters)) != len(shutters):
            raise ScenarioError(f"duplicate shutter labels: {shutters}")
        if not 1 <= len(modes) < len(shutters):
            raise ScenarioError(
                f"photon must reach between 1 and {len(shutters) - 1} shutters, got {len(modes)}"
            )
        if len(set(modes)) != len(modes) or not set(modes) <= set(shutters):
            raise ScenarioError(f"photon modes {modes} must be distinct shutter labels")
        alpha = np.array(self.photon_amplitudes, dtype=np.complex128)
        if alpha.shape != (len(modes),) or not np.all(np.isfinite(alpha)):
            raise ScenarioError(f"need {len(modes)} finite photon amplitudes")
        if abs(np.linalg.norm(alpha) - 1) > EPS_NORM:
            raise ScenarioError(f"photon amplitudes have norm {np.linalg.norm(alpha)!r}")
        alpha.setflags(write=False)
        object.__setattr__(self, "photon_amplitudes", alpha)
        shape = self.shutter_shape
        for name in ("pre_state", "post_state"):
            state = getattr(self, name)
            if state.shape != shape:
                raise ScenarioError(f"{name} must live on the shutter space {shutters}")
            if not state.is_unit():
                raise ScenarioError(f"{name} has norm {state.norm()!r}")
        if not self.post_complement:
            object.__setattr__(self, "post_complement", _extend_post_state(self.post_state))

    @property
    def shutter_count(self) -> int:
        return len(self.shutters)

    @property
    def mode_count(self) -> int:
        return len(self.photon_modes)

    @property
    def shutter_shape(self) -> SpaceShape:
        return shutter_shape(self.shutters)

    @property
    def photon_shape(self) -> SpaceShape:
        return SpaceShape.single(PHOTON, [photon_label(m) for m in self.photon_modes])

    @property
    def joint_shape(self) -> SpaceShape:
        return self.photon_shape.concat(self.shutter_shape)

    @property
    def photon_state(self) -> StateVector:
        return StateVector(self.photon_shape, self.photon_amplitudes, normalized=True)

    @property
    def ensemble(self) -> PrePostEnsemble:
        return PrePostEnsemble(self.pre_state, self.post_state)

    def post_state_basis(self) -> list[StateVector]:
        """``post_state`` followed by its orthonormal extension."""
        return [self.post_state, *self.post_complement]


def _extend_post_state(psi2: StateVector) -> tuple[StateVector, ...]:
    # For three shutters with the three-box post state, reuse the primed
    # vectors so that reports line up with the familiar six-component layout.
    if psi2.dim == 3:
        primes = three_box_complement(psi2.shape)
        if all(abs(inner(v, psi2)) <= EPS_ORTH for v in primes):
            return primes
    return tuple(orthogonal_complement([psi2]))


def build_scenario(
    shutters: Sequence[str],
    photon_modes: Sequence[str],
    photon_amplitudes: Sequence[complex],
    pre_state: Sequence[complex] | StateVector | None = None,
    post_state: Sequence[complex] | StateVector | None = None,
) -> ShutterScenario:
    """Assemble a scenario from plain amplitude lists.

    An omitted ``pre_state`` is the uniform superposition. An omitted
    ``post_state`` is only available for three shutters, where the three-box
    post state is used.
    """
    shape = shutter_shape(shutters)

    def as_state(v, name):
        if isinstance(v, StateVector):
            return v
        v = np.asarray(v, dtype=np.complex128)
        if v.shape != (shape.dim,):
            raise ScenarioError(f"{name} needs {shape.dim} amplitudes, got {v.shape[0] if v.ndim else 'a scalar'}")
        return StateVector(shape, v)

    pre = uniform_state(shape) if pre_state is None else as_state(pre_state, "pre_state")
    if post_state is None:
        if shape.dim != 3:
            raise ScenarioError(
                f"no default post-selected state for {shape.dim} shutters; supply post_state"
            )
        post = three_box_post_state(shape)
    else:
        post = as_state(post_state, "post_state")
    return ShutterScenario(tuple(shutters), tuple(photon_modes), np.asarray(photon_amplitudes), pre, post)


def default_scenario(
    shutter_count: int = 3,
    photon_amplitudes: Sequence[complex] | None = None,
    post_state: Sequence[complex] | StateVector | None = None,
    pre_state: Sequence[complex] | StateVector | None = None,
) -> ShutterScenario:
    """Shutters ``a, b, c, ...``; the photon reaches all but the last one.

    With three shutters and no overrides this is the three-box pre/post pair
    with the photon split evenly between ``a'`` and ``b'``.
    """
    if shutter_count < 2 or shutter_count > len(string.ascii_lowercase):
        raise ScenarioError(f"unsupported shutter count {shutter_count}")
    if shutter_count != 3 and post_state is None:
        raise ScenarioError(
            f"no default post-selected state for {shutter_count} shutters; supply post_state"
        )
    shutters = tuple(string.ascii_lowercase[:shutter_count])
    modes = shutters[:-1]
    if photon_amplitudes is None:
        photon_amplitudes = np.full(len(modes), 1 / np.sqrt(len(modes)))
    return build_scenario(shutters, modes, photon_amplitudes, pre_state, post_state)


def joint_initial(s: ShutterScenario) -> StateVector:
    """Photon state times pre-selected shutter state, before they interact."""
    return tensor(s.photon_state, s.pre_state)


@dataclass(frozen=True, eq=False)
class InteractionSplit:
    reflected: StateVector
    transmitted: StateVector

    @property
    def p_reflect(self) -> float:
        return self.reflected.norm() ** 2

    @property
    def p_transmit(self) -> float:
        return self.transmitted.norm() ** 2


def _reflection_mask(shape: SpaceShape) -> np.ndarray:
    if shape.names != (PHOTON, SHUTTER):
        raise ScenarioError(f"expected subsystems ({PHOTON!r}, {SHUTTER!r}), got {shape.names}")
    return np.array([ph.removesuffix("'") == sh for ph, sh in shape.product_labels()])


def interact(joint: StateVector) -> InteractionSplit:
    """Split ``joint`` into reflected (labels match) and transmitted components."""
    mask = _reflection_mask(joint.shape)
    amps = joint.amplitudes
    return InteractionSplit(
        reflected=StateVector(joint.shape, np.where(mask, amps, 0)),
        transmitted=StateVector(joint.shape, np.where(mask, 0, amps)),
    )


def _branch(s: ShutterScenario, which: str) -> StateVector:
    split = interact(joint_initial(s))
    branch = getattr(split, which)
    if branch.norm() ** 2 <= EPS_ZERO:
        raise ZeroBranchError(f"the {which} branch has zero probability in this scenario")
    return normalize(branch)


def transmitted_state(s: ShutterScenario) -> StateVector:
    """Normalized joint state conditioned on the photon getting through."""
    return _branch(s, "transmitted")


def reflected_state(s: ShutterScenario) -> StateVector:
    return _branch(s, "reflected")


def postselection_subspace(s: ShutterScenario) -> Subspace:
    """``span{|x'> (x) post_state}`` over the photon modes."""
    basis = [tensor(StateVector.basis(s.photon_shape, photon_label(m)), s.post_state)
             for m in s.photon_modes]
    return Subspace(s.joint_shape, tuple(basis))


def postselection_basis(s: ShutterScenario) -> list[StateVector]:
    """Joint basis ordered post-state block first, photon mode fastest.

    For the three-box case this is ``(psi2 a', psi2 b', psi2' a', psi2' b',
    psi2'' a', psi2'' b')``.
    """
    photon_kets = [StateVector.basis(s.photon_shape, photon_label(m)) for m in s.photon_modes]
    return [tensor(ph, v) for v in s.post_state_basis() for ph in photon_kets]


def transmitted_in_postselection_basis(s: ShutterScenario) -> np.ndarray:
    """Coefficients of the transmitted state in ``postselection_basis``.

    The first ``mode_count`` entries are its overlaps with the
    post-selection subspace.
    """
    return change_basis(transmitted_state(s), postselection_basis(s))


def reflected_reduced_density(s: ShutterScenario) -> DensityOperator:
    """Shutter-particle density operator given that the photon was reflected."""
    return partial_trace(DensityOperator.pure(reflected_state(s)), SHUTTER)


def postselection_prob_given_reflection(s: ShutterScenario) -> float:
    """``Tr[|psi2><psi2| W]`` with ``W`` the reflected reduced density operator."""
    w = reflected_reduced_density(s)
    p2 = Operator.outer(s.post_state)
    return float((p2 @ w).trace().real)


def postselection_prob_given_transmission(s: ShutterScenario) -> float:
    return postselect(transmitted_state(s), postselection_subspace(s)).probability


@dataclass(frozen=True)
class ExactProbabilities:
    """Exact branch and post-selection probabilities for one scenario.

    Conditionals on a zero-probability branch are reported as 0, and values
    within ``EPS_ZERO`` of 0 or 1 are snapped to it.
    """

    p_reflect: float
    p_transmit: float
    p_post_given_reflect: float
    p_post_given_transmit: float

    @property
    def p_reflect_and_post(self) -> float:
        return self.p_reflect * self.p_post_given_reflect

    @property
    def p_transmit_and_post(self) -> float:
        return self.p_transmit * self.p_post_given_transmit

    def cells(self) -> dict[tuple[str, bool], float]:
        return {
            ("reflected", True): self.p_reflect * self.p_post_given_reflect,
            ("reflected", False): self.p_reflect * (1 - self.p_post_given_reflect),
            ("transmitted", True): self.p_transmit * self.p_post_given_transmit,
            ("transmitted", False): self.p_transmit * (1 - self.p_post_given_transmit),
        }


def exact_probabilities(s: ShutterScenario) -> ExactProbabilities:
    split = interact(joint_initial(s))
    p_r, p_t = split.p_reflect, split.p_transmit
    post_r = postselection_prob_given_reflection(s) if p_r > EPS_ZERO else 0.0
    post_t = postselection_prob_given_transmission(s) if p_t > EPS_ZERO else 0.0
    return ExactProbabilities(*(_snap(p) for p in (p_r, p_t, post_r, post_t)))


def _snap(p: float) -> float:
    # Rounding residue of an exactly-zero (or exactly-one) probability would
    # let a sampler fire an impossible outcome once in ~1e16 draws.
    if p <= EPS_ZERO:
        return 0.0
    if p >= 1 - EPS_ZERO:
        return 1.0
    return p


@dataclass(frozen=True)
class CertaintyReport:
    """Orthogonality of the transmitted state versus ABL certainty per mode."""

    residual: float
    abl_in_mode: dict[str, float]
    certain: dict[str, bool]
    cross_terms: dict[str, complex]
    tolerance: float

    @property
    def orthogonal(self) -> bool:
        return self.residual <= self.tolerance

    @property
    def all_certain(self) -> bool:
        return all(self.certain.values())

    @property
    def equivalence_holds(self) -> bool:
        return self.orthogonal == self.all_certain


def certainty_orthogonality_report(
    s: ShutterScenario, tol: float = EPS_ORTH, certainty_tol: float = CERTAINTY_TOL
) -> CertaintyReport:
    """Compare ``||P_post psi_tr||`` with ABL certainty of ``{P_x, 1 - P_x}``.

    Raises:
        DegenerateABLError: for a photon mode whose ABL denominator vanishes.
        ZeroBranchError: when the photon can never be transmitted.
    """
    psi_tr = transmitted_state(s)
    residual = postselection_subspace(s).projector().apply(psi_tr).norm()
    ens = s.ensemble
    probs, certain, crosses = {}, {}, {}
    for m in s.photon_modes:
        obs = box_observable(s.shutter_shape, m)
        p = abl_probability(ens, obs, f"in {m}")
        probs[m] = p
        certain[m] = abs(p - 1.0) <= certainty_tol
        crosses[m] = cross_term(ens, box_projector(s.shutter_shape, m))
    return CertaintyReport(float(residual), probs, certain, crosses, tol)
