"""Fisher-information estimators and measurement statistics.

Three QFI routes: pure-state finite differences, the Gaussian-state formula,
and the spectral decomposition of mixed states. Parameter derivatives are
always central differences with step 1e-4 * max(|g|, 1) unless overridden;
qfi_pure additionally applies one Richardson level. The measurement side is
the error-propagation uncertainty for photon counting and quadrature
detection on a state family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DivergenceError
from .hilbert import (
    DensityMatrix,
    FockSpace,
    Operator,
    StateVector,
    TensorSpace,
    annihilation,
    embed,
    expectation,
)

__all__ = [
    "MeasurementRecord",
    "GaussianMoments",
    "GaussianDerivatives",
    "QfiResult",
    "qfi_pure",
    "qfi_gaussian",
    "qfi_gaussian_family",
    "qfi_spectral",
    "error_propagation",
    "photon_stats",
    "homodyne_stats",
    "gaussian_moments",
]


def default_step(g: float) -> float:
    return 1e-4 * max(abs(g), 1.0)


def _phase_factor(phase: float) -> complex:
    return complex(math.cos(phase), math.sin(phase))


@dataclass(frozen=True)
class MeasurementRecord:
    mean: float
    variance: float
    dmean_dg: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"negative variance {self.variance}")


@dataclass(frozen=True)
class QfiResult:
    value: float
    method: str  # pure | gaussian | spectral
    fd_step: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"negative QFI {self.value}")


@dataclass
class GaussianMoments:
    """First and symmetrized second moments of X = (q, p).

    q = (b - b^dag)/(i sqrt(2)), p = (b + b^dag)/sqrt(2);
    C_ij = (1/2)<X_i X_j + X_j X_i> - <X_i><X_j>.
    """

    displacement: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.displacement = np.asarray(self.displacement, dtype=float).reshape(2)
        self.covariance = np.asarray(self.covariance, dtype=float).reshape(2, 2)
        if abs(self.covariance[0, 1] - self.covariance[1, 0]) > 1e-9:
            raise ValueError("covariance must be symmetric")
        if np.linalg.det(self.covariance) < 0.25 - 1e-9:
            raise ValueError("covariance below the uncertainty bound")

    @property
    def d(self) -> float:
        return math.sqrt(np.linalg.det(self.covariance))


@dataclass(frozen=True)
class GaussianDerivatives:
    """Parameter derivatives of a GaussianMoments family."""

    displacement: np.ndarray
    covariance: np.ndarray
    d: float


# --- QFI estimators ------------------------------------------------------------

def _check_normalized(psi: StateVector):
    nrm = np.linalg.norm(psi.amplitudes)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"family member not normalized: ||psi|| = {nrm}")


def qfi_pure(
    family: Callable[[float], StateVector], g: float, step: float | None = None
) -> QfiResult:
    """F = 4(<dpsi|dpsi> - |<psi|dpsi>|^2) by central differences.

    Two step sizes feed one Richardson extrapolation level, so the leading
    O(step^2) derivative bias cancels.
    """
    h = default_step(g) if step is None else step
    if h <= 0:
        raise ValueError("step must be positive")
    psi0 = family(g)
    _check_normalized(psi0)
    y0 = psi0.amplitudes

    def estimate(hh: float) -> float:
        plus, minus = family(g + hh), family(g - hh)
        _check_normalized(plus)
        _check_normalized(minus)
        dpsi = (plus.amplitudes - minus.amplitudes) / (2.0 * hh)
        return 4.0 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(y0, dpsi)) ** 2)

    f_h = estimate(h)
    f_h2 = estimate(h / 2.0)
    value = (4.0 * f_h2 - f_h) / 3.0
    if value < 0:
        if value < -1e-6 * max(1.0, abs(f_h)):
            raise ValueError(f"QFI estimate {value:.3e} is significantly negative")
        value = 0.0
    return QfiResult(value, "pure", h)


def qfi_gaussian(m: GaussianMoments, dm: GaussianDerivatives) -> QfiResult:
    """Gaussian-state QFI from moments and their parameter derivatives.

    F = 2d^2/(4d^2+1) Tr[(C^-1 dC)^2] + 8(dd)^2/(16d^4-1) + dX^T C^-1 dX.
    The middle term is taken as its limit 0 when 16d^4 - 1 vanishes together
    with the derivative of d (pure covariance that stays pure).
    """
    c = m.covariance
    det = np.linalg.det(c)
    if abs(det) < 1e-300:
        raise ValueError("singular covariance")
    cinv = np.linalg.inv(c)
    d = m.d
    dc = np.asarray(dm.covariance, dtype=float).reshape(2, 2)
    dx = np.asarray(dm.displacement, dtype=float).reshape(2)

    t1 = 2.0 * d * d / (4.0 * d * d + 1.0) * np.trace(cinv @ dc @ cinv @ dc)
    denom = 16.0 * d**4 - 1.0
    if abs(denom) < 1e-10:
        if abs(dm.d) < 1e-5:
            t2 = 0.0
        else:
            raise ValueError(
                "Gaussian QFI middle term singular: pure-state covariance with "
                "nonvanishing d-derivative"
            )
    else:
        t2 = 8.0 * dm.d * dm.d / denom
    t3 = float(dx @ cinv @ dx)
    value = float(t1) + t2 + t3
    return QfiResult(max(value, 0.0), "gaussian", 0.0)


def qfi_gaussian_family(
    family: Callable[[float], GaussianMoments], g: float, step: float | None = None
) -> QfiResult:
    """Gaussian QFI with the derivatives taken over a moment family."""
    h = default_step(g) if step is None else step
    m0 = family(g)
    mp, mm = family(g + h), family(g - h)
    dm = GaussianDerivatives(
        displacement=(mp.displacement - mm.displacement) / (2.0 * h),
        covariance=(mp.covariance - mm.covariance) / (2.0 * h),
        d=(mp.d - mm.d) / (2.0 * h),
    )
    res = qfi_gaussian(m0, dm)
    return QfiResult(res.value, "gaussian", h)


def _aligned_eig(
    ref_vals: np.ndarray,
    ref_vecs: np.ndarray,
    mat: np.ndarray,
    cluster_tol: float = 1e-9,
):
    """Eigendecomposition matched to a reference eigenframe.

    Columns are first permuted to the reference order by maximum overlap, then
    each (near-)degenerate reference cluster is rotated onto the reference
    basis by the closest unitary (orthogonal Procrustes). For a singleton
    cluster that is exactly the usual phase alignment; inside a degenerate
    subspace it removes the arbitrary intra-cluster basis choice that would
    otherwise corrupt finite-difference eigenvector derivatives. Eigenvalue
    derivatives remain finite-difference estimates and assume no level
    crossing inside the step.
    """
    vals, vecs = np.linalg.eigh(mat)
    overlap = np.abs(ref_vecs.conj().T @ vecs)
    row, col = linear_sum_assignment(-overlap)
    order = np.empty_like(col)
    order[row] = col
    vals = vals[order].copy()
    vecs = vecs[:, order].copy()

    start = 0
    n = len(ref_vals)
    while start < n:
        stop = start + 1
        while stop < n and ref_vals[stop] - ref_vals[stop - 1] <= cluster_tol:
            stop += 1
        block = slice(start, stop)
        m = vecs[:, block].conj().T @ ref_vecs[:, block]
        u, _, vh = np.linalg.svd(m)
        vecs[:, block] = vecs[:, block] @ (u @ vh)
        start = stop
    return vals, vecs


def qfi_spectral(
    rho_family: Callable[[float], DensityMatrix],
    g: float,
    step: float | None = None,
    eigen_floor: float = 1e-12,
) -> QfiResult:
    """Mixed-state QFI from the eigendecomposition of the density matrix.

    F = sum_{E_k > eps} (dE_k)^2 / E_k
        + sum_{k != k', E_k + E_k' > eps} 2 (E_k - E_k')^2/(E_k + E_k') |<k|dk'>|^2
    with eigenvalue/eigenvector derivatives by central differences in the
    gauge fixed by _aligned_eig.
    """
    h = default_step(g) if step is None else step
    if h <= 0:
        raise ValueError("step must be positive")
    rho0 = rho_family(g)
    e0, v0 = np.linalg.eigh(rho0.matrix)
    ep, vp = _aligned_eig(e0, v0, rho_family(g + h).matrix)
    em, vm = _aligned_eig(e0, v0, rho_family(g - h).matrix)
    de = (ep - em) / (2.0 * h)
    dv = (vp - vm) / (2.0 * h)

    value = 0.0
    for k in range(len(e0)):
        if e0[k] > eigen_floor:
            value += de[k] ** 2 / e0[k]
    cross = v0.conj().T @ dv  # cross[k, l] = <k|dl>
    for k in range(len(e0)):
        for l in range(len(e0)):
            if k == l:
                continue
            s = e0[k] + e0[l]
            if s > eigen_floor:
                value += 2.0 * (e0[k] - e0[l]) ** 2 / s * abs(cross[k, l]) ** 2
    return QfiResult(max(value, 0.0), "spectral", h)


# --- measurement statistics -----------------------------------------------------

def error_propagation(rec: MeasurementRecord) -> float:
    """delta^2 g = Var(M) / (d<M>/dg)^2."""
    if rec.dmean_dg == 0:
        raise DivergenceError("observable carries no signal: uncertainty divergent")
    return rec.variance / rec.dmean_dg**2


def _mode_annihilation(space, mode: int | None) -> Operator:
    if isinstance(space, TensorSpace):
        if mode is None:
            raise ValueError("composite state: specify the mode index")
        return embed(annihilation(space.factors[mode]), mode, space.factors)
    if isinstance(space, FockSpace):
        return annihilation(space)
    raise TypeError(f"unsupported space {space!r}")


def _observable_record(
    family, g: float, obs: Operator, step: float | None
) -> MeasurementRecord:
    h = default_step(g) if step is None else step
    state0 = family(g)
    mean = expectation(obs, state0).real
    second = expectation(obs @ obs, state0).real
    var = second - mean * mean
    if var < 0:
        if var < -1e-8:
            raise ValueError(f"variance {var:.3e} negative beyond tolerance")
        var = 0.0
    mp = expectation(obs, family(g + h)).real
    mm = expectation(obs, family(g - h)).real
    return MeasurementRecord(mean, var, (mp - mm) / (2.0 * h))


def photon_stats(
    family, g: float, mode: int | None = None, step: float | None = None
) -> MeasurementRecord:
    """Mean, variance, and g-derivative of the mode occupation b^dag b."""
    b = _mode_annihilation(family(g).space, mode)
    return _observable_record(family, g, b.dag() @ b, step)


def homodyne_stats(
    family,
    g: float,
    phase: float = 0.0,
    mode: int | None = None,
    step: float | None = None,
) -> MeasurementRecord:
    """Statistics of the quadrature b e^{-i phase} + b^dag e^{i phase}."""
    b = _mode_annihilation(family(g).space, mode)
    quad = _phase_factor(-phase) * b + _phase_factor(phase) * b.dag()
    return _observable_record(family, g, quad, step)


def gaussian_moments(state, mode: int | None = None) -> GaussianMoments:
    """Extract (q, p) displacement and covariance from a quantum state."""
    b = _mode_annihilation(state.space, mode)
    mb = expectation(b, state)
    mb2 = expectation(b @ b, state)
    mn = expectation(b.dag() @ b, state).real
    q = math.sqrt(2.0) * mb.imag
    p = math.sqrt(2.0) * mb.real
    cqq = (2.0 * mn + 1.0 - 2.0 * mb2.real) / 2.0 - q * q
    cpp = (2.0 * mn + 1.0 + 2.0 * mb2.real) / 2.0 - p * p
    cqp = mb2.imag - q * p
    return GaussianMoments(
        displacement=np.array([q, p]),
        covariance=np.array([[cqq, cqp], [cqp, cpp]]),
    )
