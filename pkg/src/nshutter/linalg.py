"""Dense complex state vectors and operators over labeled tensor-product spaces.

Index layout is row-major over subsystem order, so for a photon-first space
``photon x shutter`` the amplitude of ``|a'>|b>`` sits at
``i_photon * dim_shutter + i_shutter``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

EPS_NORM = 1e-10
EPS_ORTH = 1e-10
EPS_HERM = 1e-10
EPS_PSD = 1e-9
EPS_ZERO = 1e-12

# Relative residual below which Gram-Schmidt treats a vector as dependent.
_DEPENDENCE_RTOL = 1e-10


class LinalgError(ValueError):
    """Base class for invalid linear-algebra requests."""


class ShapeMismatchError(LinalgError):
    pass


class SubsystemCollisionError(LinalgError):
    pass


class UnknownSubsystemError(LinalgError, KeyError):
    pass


class ZeroVectorError(LinalgError):
    pass


class LinearDependenceError(LinalgError):
    pass


class BasisError(LinalgError):
    pass


class InvalidDensityError(LinalgError):
    pass


@dataclass(frozen=True)
class SpaceShape:
    """Ordered subsystems, each with an ordered tuple of basis labels."""

    subsystems: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        subs = tuple((str(name), tuple(str(x) for x in labels)) for name, labels in self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        names = [name for name, _ in subs]
        if len(set(names)) != len(names):
            raise SubsystemCollisionError(f"duplicate subsystem names: {names}")
        for name, labels in subs:
            if not name:
                raise LinalgError("subsystem name must be nonempty")
            if not labels:
                raise LinalgError(f"subsystem {name!r} has an empty basis")
            if any(not lab for lab in labels):
                raise LinalgError(f"subsystem {name!r} has an empty basis label")
            if len(set(labels)) != len(labels):
                raise LinalgError(f"subsystem {name!r} has duplicate labels: {labels}")

    @classmethod
    def single(cls, name: str, labels: Iterable[str]) -> "SpaceShape":
        return cls(((name, tuple(labels)),))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.subsystems)

    @cached_property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(labels) for _, labels in self.subsystems)

    @cached_property
    def dim(self) -> int:
        return math.prod(self.dims)

    def labels(self, name: str) -> tuple[str, ...]:
        for sub, labels in self.subsystems:
            if sub == name:
                return labels
        raise UnknownSubsystemError(f"no subsystem named {name!r} in {self.names}")

    def position(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownSubsystemError(f"no subsystem named {name!r} in {self.names}") from None

    def index(self, *labels: str) -> int:
        """Flat index of the product basis vector with one label per subsystem."""
        if len(labels) != len(self.subsystems):
            raise ShapeMismatchError(
                f"expected {len(self.subsystems)} labels, got {len(labels)}"
            )
        idx = 0
        for (name, basis), lab in zip(self.subsystems, labels):
            try:
                i = basis.index(lab)
            except ValueError:
                raise LinalgError(f"label {lab!r} not in subsystem {name!r}") from None
            idx = idx * len(basis) + i
        return idx

    def product_labels(self) -> list[tuple[str, ...]]:
        """All label tuples in flat-index order."""
        out: list[tuple[str, ...]] = [()]
        for _, basis in self.subsystems:
            out = [prev + (lab,) for prev in out for lab in basis]
        return out

    def concat(self, other: "SpaceShape") -> "SpaceShape":
        clash = set(self.names) & set(other.names)
        if clash:
            raise SubsystemCollisionError(f"subsystem names collide: {sorted(clash)}")
        return SpaceShape(self.subsystems + other.subsystems)


def _as_complex_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != ndim:
        raise ShapeMismatchError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LinalgError("non-finite amplitude")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over a labeled space.

    ``normalized`` is an explicit claim checked at construction; nothing is
    ever renormalized behind the caller's back.
    """

    shape: SpaceShape
    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        amps = _as_complex_array(self.amplitudes, 1)
        if amps.shape[0] != self.shape.dim:
            raise ShapeMismatchError(
                f"{amps.shape[0]} amplitudes for a space of dimension {self.shape.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized and abs(self.norm() - 1.0) > EPS_NORM:
            raise LinalgError(f"state marked normalized has norm {self.norm()!r}")

    @classmethod
    def basis(cls, shape: SpaceShape, *labels: str) -> "StateVector":
        amps = np.zeros(shape.dim, dtype=np.complex128)
        amps[shape.index(*labels)] = 1.0
        return cls(shape, amps, normalized=True)

    @classmethod
    def from_labels(cls, shape: SpaceShape, coeffs: dict) -> "StateVector":
        """Build from ``{label or label-tuple: amplitude}``; unnamed entries are zero."""
        amps = np.zeros(shape.dim, dtype=np.complex128)
        for key, c in coeffs.items():
            labels = (key,) if isinstance(key, str) else tuple(key)
            amps[shape.index(*labels)] += c
        return cls(shape, amps)

    @property
    def dim(self) -> int:
        return self.shape.dim

    def norm(self) -> float:
        return math.sqrt(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_unit(self, tol: float = EPS_NORM) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def amplitude(self, *labels: str) -> complex:
        return complex(self.amplitudes[self.shape.index(*labels)])

    def scaled(self, c: complex) -> "StateVector":
        return StateVector(self.shape, c * self.amplitudes)

    def __add__(self, other: "StateVector") -> "StateVector":
        _require_same_shape(self.shape, other.shape)
        return StateVector(self.shape, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _require_same_shape(self.shape, other.shape)
        return StateVector(self.shape, self.amplitudes - other.amplitudes)

    def __rmul__(self, c) -> "StateVector":
        return self.scaled(c)

    def allclose(self, other: "StateVector", atol: float = EPS_ORTH) -> bool:
        return self.shape == other.shape and bool(
            np.max(np.abs(self.amplitudes - other.amplitudes), initial=0.0) <= atol
        )

    def __repr__(self):
        return f"StateVector(shape={self.shape.names}, amplitudes={self.amplitudes!r})"


def _require_same_shape(a: SpaceShape, b: SpaceShape) -> None:
    if a != b:
        raise ShapeMismatchError(f"shapes differ: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class Operator:
    shape: SpaceShape
    entries: np.ndarray

    def __post_init__(self):
        m = _as_complex_array(self.entries, 2)
        if m.shape != (self.shape.dim, self.shape.dim):
            raise ShapeMismatchError(
                f"operator of shape {m.shape} on a space of dimension {self.shape.dim}"
            )
        object.__setattr__(self, "entries", m)

    @classmethod
    def identity(cls, shape: SpaceShape) -> "Operator":
        return cls(shape, np.eye(shape.dim, dtype=np.complex128))

    @classmethod
    def outer(cls, u: StateVector, v: StateVector | None = None) -> "Operator":
        """``|u><v|`` (``|u><u|`` when ``v`` is omitted)."""
        v = u if v is None else v
        _require_same_shape(u.shape, v.shape)
        return cls(u.shape, np.outer(u.amplitudes, v.amplitudes.conj()))

    def apply(self, state: StateVector) -> StateVector:
        _require_same_shape(self.shape, state.shape)
        return StateVector(self.shape, self.entries @ state.amplitudes)

    def __matmul__(self, other: "Operator") -> "Operator":
        _require_same_shape(self.shape, other.shape)
        return Operator(self.shape, self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_shape(self.shape, other.shape)
        return Operator(self.shape, self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_shape(self.shape, other.shape)
        return Operator(self.shape, self.entries - other.entries)

    def dagger(self) -> "Operator":
        return Operator(self.shape, self.entries.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def expectation(self, state: StateVector) -> complex:
        _require_same_shape(self.shape, state.shape)
        return complex(np.vdot(state.amplitudes, self.entries @ state.amplitudes))

    def is_hermitian(self, tol: float = EPS_HERM) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def is_projector(self, tol: float = EPS_HERM) -> bool:
        sq = self.entries @ self.entries
        return self.is_hermitian(tol) and bool(
            np.max(np.abs(sq - self.entries), initial=0.0) <= tol
        )

    def allclose(self, other: "Operator", atol: float = EPS_HERM) -> bool:
        return self.shape == other.shape and bool(
            np.max(np.abs(self.entries - other.entries), initial=0.0) <= atol
        )


class DensityOperator(Operator):
    """Hermitian, unit-trace, positive semidefinite operator."""

    def __post_init__(self):
        super().__post_init__()
        m = self.entries
        if np.max(np.abs(m - m.conj().T), initial=0.0) > EPS_HERM:
            raise InvalidDensityError("density operator is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > EPS_NORM:
            raise InvalidDensityError(f"density operator has trace {tr!r}")
        lowest = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
        if lowest < -EPS_PSD:
            raise InvalidDensityError(f"density operator has eigenvalue {lowest!r}")

    @classmethod
    def pure(cls, state: StateVector) -> "DensityOperator":
        if not state.is_unit():
            raise InvalidDensityError(f"pure state has norm {state.norm()!r}")
        return cls(state.shape, np.outer(state.amplitudes, state.amplitudes.conj()))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal spanning set; ``projector()`` gives the orthogonal projector."""

    shape: SpaceShape
    basis: tuple[StateVector, ...] = field(default=())

    def __post_init__(self):
        basis = tuple(self.basis)
        for v in basis:
            _require_same_shape(self.shape, v.shape)
        if basis:
            g = _gram(basis)
            if np.max(np.abs(g - np.eye(len(basis))), initial=0.0) > EPS_ORTH:
                raise BasisError("subspace basis is not orthonormal")
        object.__setattr__(self, "basis", basis)

    @classmethod
    def spanned_by(cls, vectors: Sequence[StateVector]) -> "Subspace":
        vectors = list(vectors)
        if not vectors:
            raise LinalgError("cannot infer the shape of an empty span")
        return cls(vectors[0].shape, tuple(orthonormalize(vectors, drop_dependent=True)))

    @property
    def rank(self) -> int:
        return len(self.basis)

    def projector(self) -> Operator:
        m = np.zeros((self.shape.dim, self.shape.dim), dtype=np.complex128)
        for v in self.basis:
            m += np.outer(v.amplitudes, v.amplitudes.conj())
        return Operator(self.shape, m)


def _gram(vectors: Sequence[StateVector]) -> np.ndarray:
    mat = np.array([v.amplitudes for v in vectors])
    return mat.conj() @ mat.T


def _fix_phase(amps: np.ndarray) -> np.ndarray:
    """Rotate so the first non-negligible coordinate is real and positive."""
    nz = np.flatnonzero(np.abs(amps) > EPS_ORTH)
    if nz.size == 0:
        return amps
    lead = amps[nz[0]]
    out = amps * (abs(lead) / lead)
    out[nz[0]] = abs(lead)
    return out


def tensor(u: StateVector, v: StateVector) -> StateVector:
    """Kronecker product; ``u``'s subsystems come first in the result."""
    shape = u.shape.concat(v.shape)
    normalized = u.normalized and v.normalized
    return StateVector(shape, np.outer(u.amplitudes, v.amplitudes).ravel(), normalized=normalized)


def tensor_operator(a: Operator, b: Operator) -> Operator:
    return Operator(a.shape.concat(b.shape), np.kron(a.entries, b.entries))


def inner(u: StateVector, v: StateVector) -> complex:
    """``<u|v>``, antilinear in ``u``."""
    _require_same_shape(u.shape, v.shape)
    return complex(np.vdot(u.amplitudes, v.amplitudes))


def norm(u: StateVector) -> float:
    return u.norm()


def normalize(u: StateVector) -> StateVector:
    n = u.norm()
    if n <= EPS_ZERO:
        raise ZeroVectorError(f"cannot normalize a vector of norm {n!r}")
    return StateVector(u.shape, u.amplitudes / n, normalized=True)


def orthonormalize(
    vectors: Sequence[StateVector], drop_dependent: bool = False
) -> list[StateVector]:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Each output vector carries the phase convention of ``_fix_phase``.

    Raises:
        ZeroVectorError: an input vector is (numerically) zero.
        LinearDependenceError: inputs are dependent and ``drop_dependent`` is False.
    """
    out: list[np.ndarray] = []
    shape = None
    for k, v in enumerate(vectors):
        if shape is None:
            shape = v.shape
        _require_same_shape(shape, v.shape)
        start = v.norm()
        if start <= EPS_ZERO:
            raise ZeroVectorError(f"vector {k} is zero")
        w = v.amplitudes.copy()
        for _ in range(2):
            for q in out:
                w = w - np.vdot(q, w) * q
        if np.linalg.norm(w) <= _DEPENDENCE_RTOL * start:
            if drop_dependent:
                continue
            raise LinearDependenceError(f"vector {k} depends on the preceding vectors")
        out.append(_fix_phase(w / np.linalg.norm(w)))
    return [StateVector(shape, q, normalized=True) for q in out]


def orthogonal_complement(vectors: Sequence[StateVector], shape: SpaceShape | None = None) -> list[StateVector]:
    """Orthonormal basis of the complement of ``span(vectors)``.

    Candidates are the standard basis vectors in index order, each
    orthogonalized twice against everything kept so far, so the result is
    deterministic. ``shape`` is only needed when ``vectors`` is empty.
    """
    vectors = list(vectors)
    if vectors:
        shape = vectors[0].shape
    elif shape is None:
        raise LinalgError("shape required for the complement of an empty set")
    kept = [v.amplitudes for v in orthonormalize(vectors)]
    n_input = len(kept)
    dim = shape.dim
    for i in range(dim):
        if len(kept) == dim:
            break
        w = np.zeros(dim, dtype=np.complex128)
        w[i] = 1.0
        for _ in range(2):
            for q in kept:
                w = w - np.vdot(q, w) * q
        # A surviving candidate has norm at least 1/sqrt(dim); anything much
        # smaller is a rounding remnant of an already-spanned direction.
        if np.linalg.norm(w) > 0.5 / np.sqrt(dim):
            kept.append(_fix_phase(w / np.linalg.norm(w)))
    return [StateVector(shape, q, normalized=True) for q in kept[n_input:]]


def check_orthonormal_basis(basis: Sequence[StateVector], tol: float = EPS_ORTH) -> None:
    """Raise ``BasisError`` unless ``basis`` is a complete orthonormal basis."""
    basis = list(basis)
    if not basis:
        raise BasisError("empty basis")
    shape = basis[0].shape
    for v in basis:
        _require_same_shape(shape, v.shape)
    if len(basis) != shape.dim:
        raise BasisError(f"{len(basis)} vectors cannot span dimension {shape.dim}")
    dev = np.max(np.abs(_gram(basis) - np.eye(len(basis))))
    if dev > tol:
        raise BasisError(f"basis deviates from orthonormal by {dev:.3e}")


def change_basis(u: StateVector, basis: Sequence[StateVector]) -> np.ndarray:
    """Coefficients ``c_k = <b_k|u>`` of ``u`` in an orthonormal basis."""
    check_orthonormal_basis(basis)
    _require_same_shape(basis[0].shape, u.shape)
    mat = np.array([b.amplitudes for b in basis])
    return mat.conj() @ u.amplitudes


def reconstruct(coeffs: Sequence[complex], basis: Sequence[StateVector]) -> StateVector:
    mat = np.array([b.amplitudes for b in basis])
    return StateVector(basis[0].shape, np.asarray(coeffs, dtype=np.complex128) @ mat)


def projector(span: Sequence[StateVector]) -> Operator:
    """Orthogonal projector onto ``span(span)``; dependent vectors are absorbed."""
    return Subspace.spanned_by(span).projector()


def partial_trace(rho: Operator, keep: str | Sequence[str]) -> DensityOperator:
    """Trace out every subsystem not named in ``keep``.

    The kept subsystems retain their order from ``rho.shape``.
    """
    keep_names = [keep] if isinstance(keep, str) else list(keep)
    shape = rho.shape
    keep_pos = sorted(shape.position(name) for name in keep_names)
    dims = shape.dims
    n = len(dims)
    t = rho.entries.reshape(dims + dims)
    # einsum letters: rows use [0, n), columns use [n, 2n); traced pairs share a letter.
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    col = list(letters[n:])
    for p in range(n):
        if p not in keep_pos:
            col[p] = letters[p]
    out = "".join(letters[p] for p in keep_pos) + "".join(col[p] for p in keep_pos)
    reduced = np.einsum("".join(letters[:n]) + "".join(col) + "->" + out, t)
    kept_dim = int(np.prod([dims[p] for p in keep_pos], dtype=np.int64))
    kept_shape = SpaceShape(tuple(shape.subsystems[p] for p in keep_pos))
    return DensityOperator(kept_shape, reduced.reshape(kept_dim, kept_dim))
