"""Truncated bosonic Fock spaces, mode operators, and canonical states.

A single mode lives on the levels |0>, ..., |dim-1>. Multi-mode systems use an
ordered tensor product of such spaces, with the pump mode first and the signal
mode second throughout the package. Operators and states carry their space so
that dimension mismatches are caught at the boundary instead of deep inside a
solver.

Storage is dense below dimension 64 and CSR sparse at or above it; the
Liouvillian of a two-mode problem scales as (d_a*d_b)^2, which makes the sparse
path mandatory at realistic truncations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, TruncationError

SPARSE_DIM_THRESHOLD = 64

__all__ = [
    "SPARSE_DIM_THRESHOLD",
    "FockSpace",
    "TensorSpace",
    "Space",
    "Operator",
    "StateVector",
    "DensityMatrix",
    "annihilation",
    "number_operator",
    "identity_operator",
    "embed",
    "tensor_state",
    "fock_state",
    "coherent_state",
    "density_from_state",
    "expectation",
    "top_level_population",
]


@dataclass(frozen=True)
class FockSpace:
    """Truncated single-mode Fock space keeping levels 0..dim-1."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"FockSpace dim must be >= 1, got {self.dim}")


@dataclass(frozen=True)
class TensorSpace:
    """Ordered tensor product of Fock spaces (pump first, signal second)."""

    factors: tuple[FockSpace, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("TensorSpace needs at least one factor")

    @property
    def dim(self) -> int:
        return math.prod(f.dim for f in self.factors)


Space = FockSpace | TensorSpace


def _is_sparse(m) -> bool:
    return sp.issparse(m)


def _as_sparse(m):
    return m if sp.issparse(m) else sp.csr_matrix(m)


def _prefer_sparse(dim: int) -> bool:
    return dim >= SPARSE_DIM_THRESHOLD


@dataclass
class Operator:
    """A linear operator tagged with the space it acts on.

    The matrix may be a dense ndarray or a scipy sparse matrix; mixed algebra
    promotes to sparse. Instances are treated as immutable.
    """

    matrix: object
    space: Space

    def __post_init__(self):
        n = self.space.dim
        if self.matrix.shape != (n, n):
            raise DimensionMismatchError(
                f"operator matrix {self.matrix.shape} does not match space dim {n}"
            )

    @property
    def dim(self) -> int:
        return self.space.dim

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space)

    def to_array(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if _is_sparse(m) else np.asarray(m)

    def _check(self, other: "Operator"):
        if self.space != other.space:
            raise DimensionMismatchError("operators act on different spaces")

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix @ other.matrix, self.space)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        a, b = self.matrix, other.matrix
        if _is_sparse(a) != _is_sparse(b):
            a, b = _as_sparse(a), _as_sparse(b)
        return Operator(a + b, self.space)

    def __sub__(self, other: "Operator") -> "Operator":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "Operator":
        return Operator(scalar * self.matrix, self.space)

    __mul__ = __rmul__

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        d = self.matrix - self.matrix.conj().T
        if _is_sparse(d):
            return abs(d).max() <= tol if d.nnz else True
        return np.abs(d).max() <= tol


@dataclass
class StateVector:
    """Normalized pure state on a (possibly tensor-product) space."""

    amplitudes: np.ndarray
    space: Space
    norm_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.space.dim,):
            raise DimensionMismatchError(
                f"state of length {self.amplitudes.shape} on space dim {self.space.dim}"
            )
        nrm = np.linalg.norm(self.amplitudes)
        if abs(nrm - 1.0) > self.norm_tol:
            raise ValueError(f"state norm {nrm} deviates from 1 beyond {self.norm_tol}")

    @property
    def dim(self) -> int:
        return self.space.dim


@dataclass
class DensityMatrix:
    """Mixed state: Hermitian, unit trace, positive within tolerance."""

    matrix: np.ndarray
    space: Space
    tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        n = self.space.dim
        if self.matrix.shape != (n, n):
            raise DimensionMismatchError(
                f"density matrix {self.matrix.shape} on space dim {n}"
            )
        herm_dev = np.abs(self.matrix - self.matrix.conj().T).max()
        if herm_dev > self.tol:
            raise ValueError(f"density matrix not Hermitian: deviation {herm_dev}")
        tr_dev = abs(np.trace(self.matrix) - 1.0)
        if tr_dev > self.tol:
            raise ValueError(f"density matrix trace deviates from 1 by {tr_dev}")

    @property
    def dim(self) -> int:
        return self.space.dim

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def validate_positivity(self, tol: float | None = None):
        """Raise if the smallest eigenvalue is below -tol."""
        t = self.tol if tol is None else tol
        lo = self.min_eigenvalue()
        if lo < -t:
            raise ValueError(f"density matrix has eigenvalue {lo} below -{t}")


def annihilation(space: FockSpace) -> Operator:
    """Mode annihilation operator with <n-1|a|n> = sqrt(n)."""
    d = space.dim
    off = np.sqrt(np.arange(1, d, dtype=float))
    if _prefer_sparse(d):
        m = sp.diags(off.astype(complex), 1, shape=(d, d), format="csr")
    else:
        m = np.diag(off.astype(complex), 1)
    return Operator(m, space)


def number_operator(space: FockSpace) -> Operator:
    d = space.dim
    diag = np.arange(d, dtype=complex)
    if _prefer_sparse(d):
        return Operator(sp.diags(diag, 0, format="csr"), space)
    return Operator(np.diag(diag), space)


def identity_operator(space: Space) -> Operator:
    d = space.dim
    if _prefer_sparse(d):
        return Operator(sp.identity(d, dtype=complex, format="csr"), space)
    return Operator(np.eye(d, dtype=complex), space)


def embed(op: Operator, slot: int, spaces: tuple[FockSpace, ...]) -> Operator:
    """Lift a single-mode operator into the ordered tensor product.

    Returns identity x ... x op x ... x identity with op in position ``slot``.
    """
    if not 0 <= slot < len(spaces):
        raise DimensionMismatchError(f"slot {slot} outside {len(spaces)} factors")
    if op.space != spaces[slot]:
        raise DimensionMismatchError(
            f"operator dim {op.dim} does not match factor {slot} dim {spaces[slot].dim}"
        )
    target = TensorSpace(tuple(spaces))
    use_sparse = _prefer_sparse(target.dim) or _is_sparse(op.matrix)
    result = None
    for i, f in enumerate(spaces):
        if i == slot:
            block = op.matrix
        elif use_sparse:
            block = sp.identity(f.dim, dtype=complex, format="csr")
        else:
            block = np.eye(f.dim, dtype=complex)
        if result is None:
            result = block
        elif use_sparse:
            result = sp.kron(_as_sparse(result), _as_sparse(block), format="csr")
        else:
            result = np.kron(result, block)
    return Operator(result, target)


def tensor_state(*states: StateVector) -> StateVector:
    """Tensor product of pure states, in the given mode order."""
    amps = states[0].amplitudes
    factors: list[FockSpace] = []
    for s in states:
        if not isinstance(s.space, FockSpace):
            raise DimensionMismatchError("tensor_state expects single-mode factors")
    factors.append(states[0].space)
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        factors.append(s.space)
    return StateVector(amps, TensorSpace(tuple(factors)))


def fock_state(n: int, space: FockSpace) -> StateVector:
    if not 0 <= n < space.dim:
        raise DimensionMismatchError(f"level {n} outside space of dim {space.dim}")
    amps = np.zeros(space.dim, dtype=complex)
    amps[n] = 1.0
    return StateVector(amps, space)


def coherent_state(alpha: complex, space: FockSpace, tail_tol: float = 1e-10) -> StateVector:
    """Coherent state with amplitudes ~ alpha^n/sqrt(n!), renormalized.

    Raises TruncationError when the retained weight falls below 1 - tail_tol,
    i.e. when the truncation visibly clips the Poisson tail.
    """
    d = space.dim
    n = np.arange(d)
    # log-domain magnitudes avoid overflow for large |alpha|
    if alpha == 0:
        amps = np.zeros(d, dtype=complex)
        amps[0] = 1.0
        return StateVector(amps, space)
    logmag = n * np.log(abs(alpha)) - 0.5 * np.array([math.lgamma(k + 1) for k in n])
    phase = np.exp(1j * n * np.angle(alpha))
    amps = np.exp(logmag - logmag.max()) * phase
    tail = 1.0 - _coherent_retained_weight(abs(alpha) ** 2, d)
    if tail > tail_tol:
        raise TruncationError(
            f"coherent state |alpha|^2={abs(alpha)**2:.3g} keeps only "
            f"{1 - tail:.12f} of its weight at dim {d}"
        )
    return StateVector(amps / np.linalg.norm(amps), space)


def _coherent_retained_weight(mean_n: float, dim: int) -> float:
    """Poisson CDF: probability that a coherent state occupies levels < dim."""
    term = math.exp(-mean_n)
    total = term
    for k in range(1, dim):
        term *= mean_n / k
        total += term
    return min(total, 1.0)


def density_from_state(psi: StateVector) -> DensityMatrix:
    m = np.outer(psi.amplitudes, psi.amplitudes.conj())
    return DensityMatrix(m, psi.space)


def expectation(op: Operator, state: StateVector | DensityMatrix) -> complex:
    """<psi|O|psi> for pure states, Tr(rho O) for density matrices."""
    if op.space != state.space:
        raise DimensionMismatchError("operator and state spaces differ")
    if isinstance(state, StateVector):
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    prod = op.matrix @ state.matrix
    if _is_sparse(prod):
        return complex(prod.diagonal().sum())
    return complex(np.trace(prod))


def top_level_population(rho: DensityMatrix, mode: int = 0, levels: int = 2) -> float:
    """Total population in the top ``levels`` Fock levels of one mode.

    Used by truncation auto-raise: a converged steady state should leave the
    top of the ladder essentially empty.
    """
    space = rho.space
    if isinstance(space, FockSpace):
        dims = (space.dim,)
    else:
        dims = tuple(f.dim for f in space.factors)
    if not 0 <= mode < len(dims):
        raise DimensionMismatchError(f"mode {mode} outside {len(dims)} factors")
    pops = np.real(np.diag(rho.matrix)).reshape(dims)
    d = dims[mode]
    idx = [slice(None)] * len(dims)
    idx[mode] = slice(max(d - levels, 0), d)
    return float(pops[tuple(idx)].sum())
