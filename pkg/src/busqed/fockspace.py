"""Tensor-product state space for three bosonic modes and one qutrit.

The processor Hilbert space is the product of the two information
resonators r1 and r2, the bus resonator R, and a three-level transmon
(levels g, e, f), kept in the fixed canonical order (r1, R, r2, q).
Everything is dense complex: at the default truncation of three Fock
levels per mode the total dimension is 81, where dense algebra is both
simpler and faster than sparse bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    InvalidTruncationError,
    OutOfRangeError,
    PhysicalityError,
    WrongSubsystemError,
)

MODE_IDS = ("r1", "R", "r2")
QUTRIT_LEVELS = ("g", "e", "f")
QUTRIT_DIM = 3

#: Tolerances for density-matrix invariants.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpaceLayout:
    """Truncated Hilbert space with subsystem order (r1, R, r2, q).

    The flat basis index runs row-major over the occupation tuple
    (n1, nR, n2, level), so printed kets read in the same order the
    states are usually written.
    """

    resonator_dims: tuple[int, int, int]
    qutrit_dim: int = QUTRIT_DIM

    def __post_init__(self):
        dims = tuple(int(d) for d in self.resonator_dims)
        if len(dims) != 3:
            raise InvalidTruncationError(
                f"need exactly 3 resonator dimensions, got {len(dims)}")
        if any(d < 2 for d in dims):
            raise InvalidTruncationError(
                f"every resonator needs at least 2 Fock levels, got {dims}")
        if self.qutrit_dim != QUTRIT_DIM:
            raise InvalidTruncationError("the qutrit is fixed at 3 levels")
        object.__setattr__(self, "resonator_dims", dims)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """Per-subsystem dimensions in canonical order."""
        return (*self.resonator_dims, self.qutrit_dim)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def index_of(self, n1: int, n_r: int, n2: int, level) -> int:
        """Flat basis index of |n1, nR, n2, level>."""
        lev = _level_index(level)
        occ = (n1, n_r, n2, lev)
        for value, dim, name in zip(occ, self.dims, ("r1", "R", "r2", "q")):
            if not 0 <= value < dim:
                raise OutOfRangeError(
                    f"occupation {value} of subsystem {name} outside its "
                    f"truncation {dim}")
        d1, dr, d2, dq = self.dims
        return ((n1 * dr + n_r) * d2 + n2) * dq + lev

    def occupations_of(self, index: int) -> tuple[int, int, int, int]:
        """Inverse of :meth:`index_of`; the level comes back as 0/1/2."""
        if not 0 <= index < self.total_dim:
            raise OutOfRangeError(f"basis index {index} outside space of "
                                  f"dimension {self.total_dim}")
        d1, dr, d2, dq = self.dims
        index, lev = divmod(index, dq)
        index, n2 = divmod(index, d2)
        n1, n_r = divmod(index, dr)
        return n1, n_r, n2, lev


def build_space(resonator_dims=(3, 3, 3)) -> SpaceLayout:
    """Canonical layout for the given per-mode Fock truncations."""
    return SpaceLayout(tuple(resonator_dims))


def _level_index(level) -> int:
    if isinstance(level, str):
        if level not in QUTRIT_LEVELS:
            raise OutOfRangeError(f"unknown qutrit level {level!r}")
        return QUTRIT_LEVELS.index(level)
    lev = int(level)
    if not 0 <= lev < QUTRIT_DIM:
        raise OutOfRangeError(f"qutrit level index {lev} outside 0..2")
    return lev


def _check_same_layout(a, b):
    if a.layout != b.layout:
        raise DimensionMismatchError(
            f"operands live on different layouts: {a.layout.dims} vs "
            f"{b.layout.dims}")


@dataclass(frozen=True)
class Operator:
    """Dense operator on a :class:`SpaceLayout`."""

    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=complex)
        n = self.layout.total_dim
        if mat.shape != (n, n):
            raise DimensionMismatchError(
                f"matrix shape {mat.shape} does not match layout dimension {n}")
        object.__setattr__(self, "matrix", _freeze(mat))

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T)

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        scale = max(np.abs(self.matrix).max(), 1.0)
        return np.abs(self.matrix - self.matrix.conj().T).max() <= tol * scale

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _check_same_layout(self, other)
            return Operator(self.layout, self.matrix @ other.matrix)
        if isinstance(other, PureState):
            _check_same_layout(self, other)
            return PureState(self.layout, self.matrix @ other.amplitudes,
                             normalize=False, _validate=False)
        return NotImplemented

    def __add__(self, other):
        _check_same_layout(self, other)
        return Operator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other):
        _check_same_layout(self, other)
        return Operator(self.layout, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return Operator(self.layout, self.matrix * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PureState:
    """Normalized state vector on a :class:`SpaceLayout`."""

    layout: SpaceLayout
    amplitudes: np.ndarray
    normalize: bool = field(default=False, repr=False)
    _validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        vec = np.ascontiguousarray(self.amplitudes, dtype=complex).reshape(-1)
        if vec.shape[0] != self.layout.total_dim:
            raise DimensionMismatchError(
                f"vector length {vec.shape[0]} does not match layout "
                f"dimension {self.layout.total_dim}")
        if self.normalize:
            nrm = np.linalg.norm(vec)
            if nrm == 0.0:
                raise InvalidParameterError("cannot normalize the zero vector")
            vec = vec / nrm
        elif self._validate and abs(np.linalg.norm(vec) - 1.0) > 1e-12:
            raise InvalidParameterError(
                f"state vector norm {np.linalg.norm(vec)!r} is not 1")
        object.__setattr__(self, "amplitudes", _freeze(vec))
        object.__setattr__(self, "normalize", False)
        object.__setattr__(self, "_validate", True)

    def overlap(self, other: "PureState") -> complex:
        _check_same_layout(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(
            self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace density operator on a :class:`SpaceLayout`.

    Hermiticity and trace are checked at construction; positivity is a
    slightly more expensive eigenvalue check exposed by :meth:`validate`
    and applied by the integrator at sample points.
    """

    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=complex)
        n = self.layout.total_dim
        if mat.shape != (n, n):
            raise DimensionMismatchError(
                f"matrix shape {mat.shape} does not match layout dimension {n}")
        herm = np.abs(mat - mat.conj().T).max()
        if herm > HERMITICITY_TOL:
            raise PhysicalityError(
                f"density matrix not Hermitian: max |rho - rho^dag| = {herm:g}")
        tr = abs(np.trace(mat).real - 1.0) + abs(np.trace(mat).imag)
        if tr > TRACE_TOL:
            raise PhysicalityError(
                f"density matrix trace deviates from 1 by {tr:g}")
        object.__setattr__(self, "matrix", _freeze(mat))

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityMatrix":
        return psi.to_density_matrix()

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def expectation(self, psi: PureState) -> float:
        """<psi| rho |psi> as a real number."""
        _check_same_layout(self, psi)
        v = psi.amplitudes
        return float(np.real(np.vdot(v, self.matrix @ v)))

    def validate(self, positivity_tol: float = POSITIVITY_TOL) -> None:
        """Raise if the state is not positive semidefinite within tolerance."""
        w = self.min_eigenvalue()
        if w < -positivity_tol:
            raise PhysicalityError(
                f"density matrix has negative eigenvalue {w:g}")



def _embedded(layout: SpaceLayout, op: np.ndarray, position: int) -> np.ndarray:
    mats = [np.eye(d, dtype=complex) for d in layout.dims]
    mats[position] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _mode_position(mode: str) -> int:
    if mode == "q" or mode == "qutrit":
        raise WrongSubsystemError("the qutrit is not a bosonic mode; use "
                                  "qutrit_transition for its operators")
    if mode not in MODE_IDS:
        raise WrongSubsystemError(f"unknown mode id {mode!r}; expected one of "
                                  f"{MODE_IDS}")
    return MODE_IDS.index(mode)


def annihilation(layout: SpaceLayout, mode: str) -> Operator:
    """Embedded annihilation operator a with <n-1|a|n> = sqrt(n)."""
    pos = _mode_position(mode)
    d = layout.dims[pos]
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    return Operator(layout, _embedded(layout, a, pos))


def creation(layout: SpaceLayout, mode: str) -> Operator:
    return annihilation(layout, mode).dag()


def number(layout: SpaceLayout, mode: str) -> Operator:
    """Embedded photon-number operator a^dag a."""
    pos = _mode_position(mode)
    d = layout.dims[pos]
    n = np.diag(np.arange(d, dtype=float)).astype(complex)
    return Operator(layout, _embedded(layout, n, pos))


_QUTRIT_OPS = {
    # sigma^+_{g,e} = |e><g|
    "ge": np.array([[0, 0, 0], [1, 0, 0], [0, 0, 0]], dtype=complex),
    # sigma^+_{e,f} = |f><e|
    "ef": np.array([[0, 0, 0], [0, 0, 0], [0, 1, 0]], dtype=complex),
    "ee": np.diag([0.0, 1.0, 0.0]).astype(complex),
    "ff": np.diag([0.0, 0.0, 1.0]).astype(complex),
}


def qutrit_transition(layout: SpaceLayout, which: str) -> Operator:
    """Embedded qutrit operator.

    ``which`` selects the raising operator |e><g| ("ge") or |f><e| ("ef"),
    or one of the projectors |e><e| ("ee") / |f><f| ("ff") used by the
    pure-dephasing channels.  Lowering operators are the adjoints.
    """
    if which not in _QUTRIT_OPS:
        raise OutOfRangeError(
            f"unknown qutrit operator {which!r}; expected ge/ef/ee/ff")
    return Operator(layout, _embedded(layout, _QUTRIT_OPS[which], 3))


def identity(layout: SpaceLayout) -> Operator:
    return Operator(layout, np.eye(layout.total_dim, dtype=complex))


def basis_state(layout: SpaceLayout, n1: int, n_r: int, n2: int,
                level) -> PureState:
    """Product Fock state |n1>_1 |nR>_R |n2>_2 |level>_q."""
    vec = np.zeros(layout.total_dim, dtype=complex)
    vec[layout.index_of(n1, n_r, n2, level)] = 1.0
    return PureState(layout, vec)
