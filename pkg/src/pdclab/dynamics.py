"""Lindblad models and their dynamics for the down-conversion system.

Two generators are built here. The full two-mode model couples a driven pump
mode a to a signal mode b through g(a b^dag^2 + a^dag b^2) with single-photon
loss on both modes. Adiabatic elimination of the fast pump (gamma_a large)
yields the reduced single-mode model: a two-photon drive
(g lambda_a/gamma_a)(b^2 + b^dag^2) together with two-photon loss at rate
kappa + kappa_e, kappa = 2 g^2/gamma_a, plus the residual single-photon loss
gamma_b.

The dissipator convention is fixed throughout as

    rho_dot = -i[H, rho] + sum_c gamma_c (2 c rho c^dag - c^dag c rho - rho c^dag c)

so a decaying amplitude obeys d<c>/dt = -gamma_c <c> and a one-photon Fock
population decays as exp(-2 gamma t). Every solver in this module checks the
trace, Hermiticity, and (on small dimensions) positivity of what it returns;
violations raise instead of propagating silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (
    DimensionMismatchError,
    IntegratorError,
    SteadyStateDegenerateError,
    TruncationError,
)
from .hilbert import (
    DensityMatrix,
    FockSpace,
    Operator,
    StateVector,
    TensorSpace,
    annihilation,
    embed,
)

__all__ = [
    "SystemParams",
    "LindbladModel",
    "SteadyStateResult",
    "build_full_model",
    "build_reduced_model",
    "liouvillian_matrix",
    "evolve_closed",
    "evolve_open",
    "steady_state",
    "spectral_gap",
    "spectral_gap_converged",
    "auto_truncated_steady",
    "three_level_evolve",
    "three_level_steady",
    "three_level_occupation",
]

# Dense eigendecomposition of a Liouvillian is O(side^3); beyond this side
# length the cost is unreasonable for a gap query.
_DENSE_EIG_MAX_SIDE = 2048


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and amplitudes of the model.

    All quantities are dimensionless rates in the sense of the rotating-frame
    master equation; resonance omega1 = 2 omega2 is assumed by the frame choice
    and enforced where the frequencies enter.
    """

    g: float
    lambda_a: float
    gamma_a: float
    gamma_b: float
    kappa_e: float = 0.0
    omega1: float = 2.0
    omega2: float = 1.0
    nbar: float = 0.0

    def __post_init__(self):
        if self.gamma_a < 0 or self.gamma_b < 0:
            raise ValueError("single-photon rates must be non-negative")
        if self.kappa_e < 0:
            raise ValueError("kappa_e must be non-negative")
        if self.nbar < 0:
            raise ValueError("thermal occupation must be non-negative")

    @property
    def kappa(self) -> float:
        """Induced two-photon rate 2 g^2/gamma_a (needs gamma_a > 0)."""
        if self.gamma_a <= 0:
            raise ValueError("kappa undefined at gamma_a = 0")
        return 2.0 * self.g * self.g / self.gamma_a


@dataclass
class LindbladModel:
    """Hamiltonian plus (rate, collapse operator) channels."""

    hamiltonian: Operator
    channels: list[tuple[float, Operator]]

    def __post_init__(self):
        if not self.hamiltonian.is_hermitian(1e-10):
            raise ValueError("model Hamiltonian is not Hermitian")
        for rate, c in self.channels:
            if rate < 0:
                raise ValueError(f"channel rate {rate} is negative")
            if c.space != self.hamiltonian.space:
                raise DimensionMismatchError("channel operator on a different space")

    @property
    def space(self):
        return self.hamiltonian.space

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim


@dataclass
class SteadyStateResult:
    rho: DensityMatrix
    residual: float
    method: str  # "null-space" | "long-time"
    kernel_dim: int = 1


def _signal_channels(params: SystemParams, b: Operator) -> list[tuple[float, Operator]]:
    # thermal bath splits into downward and upward single-photon channels
    if params.nbar > 0:
        return [
            (params.gamma_b * (params.nbar + 1.0), b),
            (params.gamma_b * params.nbar, b.dag()),
        ]
    return [(params.gamma_b, b)]


def build_full_model(params: SystemParams, d_a: int, d_b: int) -> LindbladModel:
    """Two-mode model: H = g(a b^dag^2 + a^dag b^2) + i lambda_a (a^dag - a)."""
    if params.omega1 != 2 * params.omega2:
        raise ValueError("rotating frame assumes resonance omega1 = 2 omega2")
    spaces = (FockSpace(d_a), FockSpace(d_b))
    a = embed(annihilation(spaces[0]), 0, spaces)
    b = embed(annihilation(spaces[1]), 1, spaces)
    ad, bd = a.dag(), b.dag()
    h = params.g * (a @ bd @ bd + ad @ b @ b) + (1j * params.lambda_a) * (ad - a)
    channels = [(params.gamma_a, a)] + _signal_channels(params, b)
    return LindbladModel(h, channels)


def build_reduced_model(params: SystemParams, d_b: int) -> LindbladModel:
    """Adiabatically reduced signal-mode model.

    H_b = (g lambda_a/gamma_a)(b^2 + b^dag^2), channels (gamma_b, b) and
    (kappa + kappa_e, b^2).
    """
    if params.gamma_a <= 0:
        raise ValueError("adiabatic elimination undefined at gamma_a = 0")
    space = FockSpace(d_b)
    b = annihilation(space)
    b2 = b @ b
    eps = params.g * params.lambda_a / params.gamma_a
    h = eps * (b2 + b2.dag())
    channels = _signal_channels(params, b)
    channels.append((params.kappa + params.kappa_e, b2))
    return LindbladModel(h, channels)


def liouvillian_matrix(model: LindbladModel) -> sp.csr_matrix:
    """Vectorized generator acting on vec(rho) in column-major convention.

    vec(A rho B) = (B^T kron A) vec(rho), hence
    L = -i(I kron H - H^T kron I)
        + sum_r r (2 conj(c) kron c - I kron c^dag c - (c^dag c)^T kron I).
    """
    d = model.dim
    ident = sp.identity(d, dtype=complex, format="csr")
    h = sp.csr_matrix(model.hamiltonian.matrix)
    lio = -1j * (sp.kron(ident, h) - sp.kron(h.T, ident))
    for rate, cop in model.channels:
        if rate == 0.0:
            continue
        c = sp.csr_matrix(cop.matrix)
        n = (c.conj().T) @ c
        lio = lio + rate * (
            2.0 * sp.kron(c.conj(), c) - sp.kron(ident, n) - sp.kron(n.T, ident)
        )
    return lio.tocsr()


def _vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(-1, order="F")


def _unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape((d, d), order="F")


def evolve_closed(
    h: Operator,
    psi0: StateVector,
    t: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> StateVector:
    """Propagate |psi> under d|psi>/dt = -i H |psi| with adaptive stepping."""
    if not h.is_hermitian(1e-10):
        raise IntegratorError("closed evolution requires a Hermitian Hamiltonian")
    if h.space != psi0.space:
        raise DimensionMismatchError("Hamiltonian and state spaces differ")
    if t == 0:
        return psi0
    mat = h.matrix

    def rhs(_t, y):
        return -1j * (mat @ y)

    sol = solve_ivp(
        rhs, (0.0, t), psi0.amplitudes, method="DOP853", rtol=rtol, atol=atol
    )
    if sol.status != 0:
        raise IntegratorError(f"closed evolution failed: {sol.message}")
    y = sol.y[:, -1]
    drift = abs(np.linalg.norm(y) - 1.0)
    if drift > 1e-6:
        raise IntegratorError(f"norm drift {drift:.2e} exceeds tolerance")
    return StateVector(y / np.linalg.norm(y), psi0.space)


def evolve_open(
    model: LindbladModel,
    rho0: DensityMatrix,
    t: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> DensityMatrix:
    """Integrate the master equation from rho0 for time t.

    Trace and Hermiticity are verified on the result; positivity is verified
    when the dimension is small enough for an eigendecomposition to be cheap.
    """
    if model.space != rho0.space:
        raise DimensionMismatchError("model and state spaces differ")
    if t == 0:
        return rho0
    d = model.dim
    lio = liouvillian_matrix(model)

    def rhs(_t, y):
        return lio @ y

    sol = solve_ivp(
        rhs, (0.0, t), _vec(rho0.matrix), method="DOP853", rtol=rtol, atol=atol
    )
    if sol.status != 0:
        raise IntegratorError(f"open evolution failed: {sol.message}")
    rho = _unvec(sol.y[:, -1], d)

    tol_eff = max(rtol, atol)
    tr_dev = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
    if tr_dev > 10 * max(tol_eff, 1e-9):
        raise IntegratorError(f"trace drift {tr_dev:.2e} beyond 10x tolerance")
    herm_dev = np.abs(rho - rho.conj().T).max()
    if herm_dev > 10 * max(tol_eff, 1e-9):
        raise IntegratorError(f"Hermiticity drift {herm_dev:.2e} beyond 10x tolerance")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    if d <= 128:
        lo = float(np.linalg.eigvalsh(rho)[0])
        if lo < -1e3 * tol_eff:
            raise IntegratorError(f"positivity violated: min eigenvalue {lo:.2e}")
    return DensityMatrix(rho, rho0.space, tol=1e-7)


def _trace_row_system(lio: sp.csr_matrix, d: int):
    """Replace row 0 of L with the trace functional; rhs selects trace = 1."""
    coo = lio.tocoo()
    keep = coo.row != 0
    rows = np.concatenate([coo.row[keep], np.zeros(d, dtype=coo.row.dtype)])
    cols = np.concatenate([coo.col[keep], np.arange(d) * d + np.arange(d)])
    data = np.concatenate([coo.data[keep], np.ones(d, dtype=complex)])
    a = sp.csc_matrix((data, (rows, cols)), shape=lio.shape)
    b = np.zeros(lio.shape[0], dtype=complex)
    b[0] = 1.0
    return a, b


def _row_replaced_solve(lio: sp.csr_matrix, d: int, row: np.ndarray, rhs_val: complex):
    """Solve L x = 0 with row 0 replaced by an arbitrary normalization row."""
    coo = lio.tocoo()
    keep = coo.row != 0
    nz = np.nonzero(row)[0]
    rows = np.concatenate([coo.row[keep], np.zeros(len(nz), dtype=coo.row.dtype)])
    cols = np.concatenate([coo.col[keep], nz])
    data = np.concatenate([coo.data[keep], row[nz]])
    a = sp.csc_matrix((data, (rows, cols)), shape=lio.shape)
    b = np.zeros(lio.shape[0], dtype=complex)
    b[0] = rhs_val
    lu = spla.splu(a)
    x = lu.solve(b)
    x += lu.solve(b - a @ x)  # one step of iterative refinement
    return x


def _kernel_dimension(lio: sp.csr_matrix) -> int | None:
    side = lio.shape[0]
    if side > _DENSE_EIG_MAX_SIDE:
        return None
    ev = np.linalg.eigvals(lio.toarray())
    scale = spla.norm(lio, np.inf)
    return int(np.sum(np.abs(ev.real) < 1e-10 * scale))


def _clean_density(x: np.ndarray, d: int) -> np.ndarray:
    rho = _unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def _long_time_steady(model: LindbladModel, tol: float) -> SteadyStateResult:
    d = model.dim
    rho = DensityMatrix(np.eye(d, dtype=complex) / d, model.space)
    t = 1.0
    lio = liouvillian_matrix(model)
    for _ in range(24):
        nxt = evolve_open(model, rho, t, rtol=1e-10, atol=1e-12)
        diff = np.abs(nxt.matrix - rho.matrix).max()
        rho = nxt
        if diff < max(tol, 1e-12):
            break
        t = min(t * 2.0, 1e6)
    residual = float(np.abs(lio @ _vec(rho.matrix)).max())
    return SteadyStateResult(rho, residual, "long-time")


def steady_state(model: LindbladModel, tol: float = 1e-10) -> SteadyStateResult:
    """Steady state from the Liouvillian null space with trace normalization.

    A second solve against a random normalization functional probes for null
    spaces of dimension > 1; degeneracy raises SteadyStateDegenerateError with
    the kernel dimension when it is affordable to count. Falls back to
    long-time integration when the linear solve is ill-conditioned.
    """
    if not any(rate > 0 for rate, _ in model.channels):
        raise ValueError("steady_state needs at least one dissipative channel")
    d = model.dim
    lio = liouvillian_matrix(model)
    a, b = _trace_row_system(lio, d)

    def _degenerate() -> SteadyStateDegenerateError:
        kdim = _kernel_dimension(lio)
        return SteadyStateDegenerateError(
            f"Liouvillian null space has dimension {kdim if kdim else '>1'}; "
            "no unique steady state",
            kernel_dim=kdim,
        )

    try:
        lu = spla.splu(a)
        x = lu.solve(b)
        x += lu.solve(b - a @ x)
    except RuntimeError:
        kdim = _kernel_dimension(lio)
        if kdim is not None and kdim > 1:
            raise _degenerate() from None
        return _long_time_steady(model, tol)

    if not np.all(np.isfinite(x)):
        kdim = _kernel_dimension(lio)
        if kdim is not None and kdim > 1:
            raise _degenerate() from None
        return _long_time_steady(model, tol)

    rho = _clean_density(x, d)
    residual = float(np.abs(lio @ _vec(rho)).max())

    # Uniqueness probe: a different normalization row must select the same state.
    rng = np.random.default_rng(7)
    w = rng.normal(size=lio.shape[0]) + 1j * rng.normal(size=lio.shape[0])
    w /= np.linalg.norm(w)
    try:
        x2 = _row_replaced_solve(lio, d, w, 1.0)
        tr2 = _unvec(x2, d).trace()
        if abs(tr2) < 1e-12 * np.abs(x2).max() * d:
            raise _degenerate()
        rho2 = _clean_density(x2, d)
        mismatch = np.abs(rho2 - rho).max()
        if mismatch > max(1e-6, 1e3 * tol):
            raise _degenerate()
    except RuntimeError:
        # singular under a generic row: treat as degenerate evidence
        raise _degenerate() from None

    if residual > max(tol, 1e-12) * max(1.0, spla.norm(lio, np.inf)):
        fallback = _long_time_steady(model, tol)
        if fallback.residual < residual:
            return fallback
    return SteadyStateResult(
        DensityMatrix(rho, model.space, tol=1e-7), residual, "null-space"
    )


def spectral_gap(model: LindbladModel, zero_mode_threshold: float | None = None) -> float:
    """Smallest nonzero decay rate: -max{Re z : z in spec(L), Re z < -eps}."""
    lio = liouvillian_matrix(model)
    side = lio.shape[0]
    if side > _DENSE_EIG_MAX_SIDE:
        raise ValueError(
            f"Liouvillian side {side} too large for dense spectral analysis; "
            "reduce the truncation"
        )
    ev = np.linalg.eigvals(lio.toarray())
    eps = zero_mode_threshold
    if eps is None:
        eps = 1e-10 * spla.norm(lio, np.inf)
    decaying = ev.real[ev.real < -eps]
    if decaying.size == 0:
        raise ValueError("no decaying modes below the zero-mode threshold")
    return float(-decaying.max())


def spectral_gap_converged(
    builder: Callable[[int], LindbladModel],
    dim: int,
    dim_step: int = 4,
    rel_tol: float = 0.01,
) -> float:
    """Spectral gap with a truncation-convergence check.

    Recomputes the gap at an enlarged truncation and raises TruncationError
    when the two values differ by more than rel_tol.
    """
    g1 = spectral_gap(builder(dim))
    g2 = spectral_gap(builder(dim + dim_step))
    if abs(g1 - g2) > rel_tol * max(abs(g1), abs(g2)):
        raise TruncationError(
            f"spectral gap moved from {g1:.6e} to {g2:.6e} when the truncation "
            f"grew from {dim} to {dim + dim_step}"
        )
    return g2


def auto_truncated_steady(
    builder: Callable[[int], LindbladModel],
    start_dim: int,
    pop_tol: float = 1e-8,
    max_dim: int = 160,
    tol: float = 1e-10,
) -> tuple[SteadyStateResult, int]:
    """Raise the truncation until the top two Fock levels hold < pop_tol.

    Returns the converged steady state together with the dimension used.
    """
    d = start_dim
    while True:
        result = steady_state(builder(d), tol=tol)
        pops = np.real(np.diag(result.rho.matrix))
        if pops[-2:].sum() < pop_tol:
            return result, d
        if d >= max_dim:
            raise TruncationError(
                f"top-level population {pops[-2:].sum():.3e} still above "
                f"{pop_tol} at dim {d}"
            )
        d = min(max_dim, d + max(4, d // 2))


# --- three-level approximation -------------------------------------------------

def _three_level_rates(params: SystemParams) -> tuple[float, float, float]:
    if params.gamma_a <= 0:
        raise ValueError("three-level reduction undefined at gamma_a = 0")
    if params.nbar != 0:
        raise ValueError("three-level equations assume a zero-temperature signal bath")
    lam_eff = params.g * params.lambda_a / params.gamma_a
    kprime = params.kappa + params.kappa_e
    return lam_eff, kprime, params.gamma_b


def three_level_evolve(
    params: SystemParams,
    rho0: DensityMatrix,
    t: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> DensityMatrix:
    """Integrate the five coupled equations of the lowest-three-level model.

    State variables are rho00, rho22, rho10, rho21, rho20 with
    rho11 = 1 - rho00 - rho22. The equation set is the exact restriction of
    the reduced master equation to a three-dimensional Fock space.
    """
    if rho0.dim != 3:
        raise DimensionMismatchError("three-level evolution needs a dim-3 state")
    lam, kp, gb = _three_level_rates(params)
    sq2 = math.sqrt(2.0)

    def rhs(_t, y):
        r00, r22 = y[0], y[1]
        r10 = y[2] + 1j * y[3]
        r21 = y[4] + 1j * y[5]
        r20 = y[6] + 1j * y[7]
        r11 = 1.0 - r00 - r22
        d00 = -1j * sq2 * lam * (r20 - np.conj(r20)) + 2 * gb * r11 + 4 * kp * r22
        d22 = -1j * sq2 * lam * (np.conj(r20) - r20) - 4 * (gb + kp) * r22
        d10 = 1j * sq2 * lam * np.conj(r21) + gb * (2 * sq2 * r21 - r10)
        d21 = -1j * sq2 * lam * np.conj(r10) - (3 * gb + 2 * kp) * r21
        d20 = -1j * sq2 * lam * (r00 - r22) - 2 * (gb + kp) * r20
        return [
            d00.real,
            d22.real,
            d10.real,
            d10.imag,
            d21.real,
            d21.imag,
            d20.real,
            d20.imag,
        ]

    m = rho0.matrix
    y0 = [
        m[0, 0].real,
        m[2, 2].real,
        m[1, 0].real,
        m[1, 0].imag,
        m[2, 1].real,
        m[2, 1].imag,
        m[2, 0].real,
        m[2, 0].imag,
    ]
    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegratorError(f"three-level evolution failed: {sol.message}")
    y = sol.y[:, -1]
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = y[0]
    rho[2, 2] = y[1]
    rho[1, 1] = 1.0 - y[0] - y[1]
    rho[1, 0] = y[2] + 1j * y[3]
    rho[0, 1] = np.conj(rho[1, 0])
    rho[2, 1] = y[4] + 1j * y[5]
    rho[1, 2] = np.conj(rho[2, 1])
    rho[2, 0] = y[6] + 1j * y[7]
    rho[0, 2] = np.conj(rho[2, 0])
    return DensityMatrix(rho, FockSpace(3), tol=1e-7)


def three_level_steady(
    params: SystemParams, coherence_variant: str = "corrected"
) -> DensityMatrix:
    """Closed-form steady state of the three-level model.

    With A = 2g^2 + gamma_a(kappa_e + gamma_b) and
    D = 2A^2 + 4 g^2 lambda_a^2:
    rho00 = (2A^2 + g^2 lambda_a^2)/D, rho11 = 2 g^2 lambda_a^2/D,
    rho22 = g^2 lambda_a^2/D, rho10 = rho21 = 0.

    The 2-0 coherence satisfying the stationarity conditions is
    rho20 = -i sqrt(2) g A lambda_a / D ("corrected", the default, which the
    Liouvillian oracle confirms); coherence_variant="printed" selects the
    variant without the sqrt(2) for documentation purposes.
    """
    if params.gamma_a <= 0:
        raise ValueError("three-level reduction undefined at gamma_a = 0")
    g, lam = params.g, params.lambda_a
    a_const = 2 * g * g + params.gamma_a * (params.kappa_e + params.gamma_b)
    d_const = 2 * a_const * a_const + 4 * g * g * lam * lam
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = (2 * a_const * a_const + g * g * lam * lam) / d_const
    rho[1, 1] = 2 * g * g * lam * lam / d_const
    rho[2, 2] = g * g * lam * lam / d_const
    if coherence_variant == "corrected":
        w = math.sqrt(2.0) * g * a_const * lam / d_const
    elif coherence_variant == "printed":
        w = g * a_const * lam / d_const
    else:
        raise ValueError(f"unknown coherence_variant {coherence_variant!r}")
    rho[2, 0] = -1j * w
    rho[0, 2] = 1j * w
    return DensityMatrix(rho, FockSpace(3), tol=1e-12)


def three_level_occupation(params: SystemParams) -> float:
    """Signal occupation N_b = rho11 + 2 rho22 of the three-level steady state."""
    g, lam = params.g, params.lambda_a
    a_const = 2 * g * g + params.gamma_a * (params.kappa_e + params.gamma_b)
    return 2 * g * g * lam * lam / (a_const * a_const + 2 * g * g * lam * lam)
