"""The measurement matrix B, its singular value decomposition, protocol
classification (completeness, adequacy, condition number) and pseudo-inverse
state reconstruction.

Row j of B is t_j * (X_j^* kron X_j), so that B acting on the column-stacked
density matrix (second column below the first) returns the expected counts
t_j * lambda_j.  Analyses are immutable; solving many count vectors against
one analysis concurrently is safe.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from . import gchi2
from .protocols import Protocol
from .states import DensityMatrix

RANK_TOL = 1e-10
_FULL_SVD_ROW_LIMIT = 4000

COMPLETE = "complete"
CONDITIONAL = "conditionally_complete_candidate"
INCOMPLETE = "incomplete"


class IncompleteProtocolError(ValueError):
    """The protocol cannot determine the requested state family."""


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking: the second column lies below the first."""
    return np.asarray(m).flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    s = int(round(np.sqrt(v.size)))
    return v.reshape((s, s), order="F")


@dataclasses.dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """m x s^2 matrix mapping a vectorized state to expected counts."""

    matrix: np.ndarray
    dim: int
    protocol: Optional[Protocol] = None

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


def measurement_matrix(p: Protocol) -> MeasurementMatrix:
    s = p.dim
    out = np.empty((p.m, s * s), dtype=complex)
    if p.all_pure:
        x = p.amplitude_matrix()
        t = p.exposures()
        chunk = max(1, 10**7 // (s * s))
        for lo in range(0, p.m, chunk):
            hi = min(lo + chunk, p.m)
            block = np.einsum("ja,jb->jab", x[lo:hi].conj(), x[lo:hi])
            out[lo:hi] = t[lo:hi, None] * block.reshape(hi - lo, s * s)
    else:
        for j, (row, op) in enumerate(zip(p.rows, p.operators())):
            # tr(Lambda rho) = vec(Lambda)^+ vec(rho) for Hermitian Lambda
            out[j] = row.exposure * vec(op).conj()
    out.setflags(write=False)
    return MeasurementMatrix(matrix=out, dim=s, protocol=p)


@dataclasses.dataclass(frozen=True, eq=False)
class ProtocolAnalysis:
    """SVD-based summary of a measurement matrix."""

    dim: int
    m: int
    singular_values: np.ndarray
    rank: int
    condition_number: float
    condition_number_full: float
    completeness: str
    rank_tol: float
    _u: np.ndarray
    _v: np.ndarray
    _b: np.ndarray

    def report(self) -> dict:
        return {
            "m": self.m,
            "dim": self.dim,
            "q": self.rank,
            "K": self.condition_number,
            "K_full": self.condition_number_full,
            "singular_values": self.singular_values.tolist(),
            "class": self.completeness,
        }


def _classify(q: int, s: int) -> str:
    if q == s * s:
        return COMPLETE
    # a pure-state family takes 2s-1 real parameters including the norm
    if q >= 2 * s - 1:
        return CONDITIONAL
    return INCOMPLETE


def analyze(b, rank_tol: float = RANK_TOL) -> ProtocolAnalysis:
    """Singular spectrum, rank, condition number and completeness class.

    Accepts a MeasurementMatrix, a Protocol, or a raw m x s^2 array.  The rank
    counts singular values above rank_tol times the largest; the condition
    number over the retained values is reported alongside the full-spectrum
    ratio.
    """
    if isinstance(b, Protocol):
        b = measurement_matrix(b)
    if isinstance(b, MeasurementMatrix):
        mat, s = b.matrix, b.dim
    else:
        mat = np.asarray(b, dtype=complex)
        s = int(round(np.sqrt(mat.shape[1])))
    u, sv, vh = np.linalg.svd(mat, full_matrices=False)
    q = int(np.sum(sv > rank_tol * sv[0]))
    cond = float(sv[0] / sv[q - 1])
    cond_full = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return ProtocolAnalysis(
        dim=s,
        m=mat.shape[0],
        singular_values=sv,
        rank=q,
        condition_number=cond,
        condition_number_full=cond_full,
        completeness=_classify(q, s),
        rank_tol=rank_tol,
        _u=u,
        _v=vh.conj().T,
        _b=mat,
    )


@dataclasses.dataclass(frozen=True)
class AdequacyResult:
    testable: bool
    adequate: Optional[bool]
    statistic: Optional[float]
    p_value: Optional[float]
    null_dim: int


def adequacy_test(a: ProtocolAnalysis, counts, significance: float = 0.01) -> AdequacyResult:
    """Consistency of redundant counts with the quantum model.

    The exact-data characteristic column Q = U^+ T vanishes beyond the rank q,
    so the statistic sums |Q_i|^2 / var(Q_i) over those null coordinates with
    var from linearized Poisson propagation (counts floored at one).  The
    p-value uses the weighted-chi-square law of that quadratic form under the
    same propagation, which keeps the test calibrated even though the null
    coordinates are correlated.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (a.m,):
        raise ValueError(f"expected {a.m} counts, got shape {counts.shape}")
    if a.m <= a.rank:
        return AdequacyResult(False, None, None, None, 0)
    if a.m > _FULL_SVD_ROW_LIMIT:
        raise ValueError("adequacy test limited to protocols with at most "
                         f"{_FULL_SVD_ROW_LIMIT} rows")
    u_full, _, _ = np.linalg.svd(a._b, full_matrices=True)
    u_null = u_full[:, a.rank:]  # m x (m - q)
    q_res = u_null.conj().T @ counts
    k_hat = np.maximum(counts, 1.0)
    var = (np.abs(u_null) ** 2 * k_hat[:, None]).sum(axis=0)
    stat = float((np.abs(q_res) ** 2 / var).sum())
    # realified residual covariance -> weights of the reference distribution
    m_real = np.vstack([u_null.conj().T.real, u_null.conj().T.imag])
    cov = (m_real * k_hat) @ m_real.T
    w_half = np.concatenate([1.0 / np.sqrt(var)] * 2)
    weights = np.linalg.eigvalsh(w_half[:, None] * cov * w_half[None, :])
    weights = np.clip(weights, 0.0, None)
    weights = weights[weights > 1e-12 * max(weights.max(), 1e-300)]
    p = float(gchi2.sf(stat, weights))
    return AdequacyResult(True, bool(p >= significance), stat, p, a.m - a.rank)


@dataclasses.dataclass(frozen=True, eq=False)
class PseudoInverseResult:
    rho_raw: np.ndarray
    rho_projected: DensityMatrix
    factors: np.ndarray
    rank: int
    purity_bound: float


def pseudo_inverse_reconstruct(a: ProtocolAnalysis, counts) -> PseudoInverseResult:
    """Regularized (minimum-purity) solution of B rho = counts.

    Undefined factors beyond the rank are set to zero.  The raw solution is
    Hermitian but may fail positivity; the projected state clamps negative
    eigenvalues to zero and renormalizes the trace, which also serves as the
    maximum-likelihood seed.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (a.m,):
        raise ValueError(f"expected {a.m} counts, got shape {counts.shape}")
    if not np.any(counts > 0):
        raise ValueError("all counts are zero; nothing to reconstruct")
    q_col = a._u.conj().T @ counts
    n_sv = a.singular_values.size
    factors_thin = np.zeros(n_sv, dtype=complex)
    factors_thin[: a.rank] = q_col[: a.rank] / a.singular_values[: a.rank]
    rho_raw = unvec(a._v @ factors_thin)
    factors = np.zeros(a.dim * a.dim, dtype=complex)
    factors[:n_sv] = factors_thin
    rho_raw = 0.5 * (rho_raw + rho_raw.conj().T)
    w, v = np.linalg.eigh(rho_raw)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        raise ValueError("projected solution has no positive weight")
    projected = DensityMatrix((v * (w / total)) @ v.conj().T)
    purity_bound = float((np.abs(factors[: a.rank]) ** 2).sum())
    return PseudoInverseResult(
        rho_raw=rho_raw,
        rho_projected=projected,
        factors=factors,
        rank=a.rank,
        purity_bound=purity_bound,
    )
