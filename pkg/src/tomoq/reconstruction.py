"""Maximum-likelihood state estimation from Poisson count data.

The state is parametrized by its purification rho = L L^+, which keeps every
iterate Hermitian, positive semidefinite and (after the final normalization)
unit trace.  The fixed-point iteration

    L  <-  (1 - a) L + a * Imat^{-1} J(L) L,
    J(L) = sum_j (k_j / lambda_j) Lambda_j,   Imat = sum_j t_j Lambda_j,

runs on the unnormalized purification, whose overall norm settles at the
observed total count; damping a starts at 0.5 and is halved whenever a step
would decrease the likelihood.  Each reconstruction is pure given (protocol,
counts, seed), so batches parallelize trivially.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .analysis import (
    IncompleteProtocolError,
    ProtocolAnalysis,
    analyze,
    measurement_matrix,
    pseudo_inverse_reconstruct,
)
from .precision import _h_matrix
from .protocols import Protocol, intensities
from .states import DensityMatrix, PurifiedState, _canonical_gauge, _as_matrix

_LAMBDA_LOG_FLOOR = 1e-300


def _rates(p: Protocol, L: np.ndarray) -> np.ndarray:
    if p.all_pure:
        a = p.amplitude_matrix() @ L
        return (np.abs(a) ** 2).sum(axis=1)
    return intensities(p, L @ L.conj().T)


def log_likelihood(p: Protocol, counts, state) -> float:
    """Poisson log-likelihood sum_j [k_j ln(lambda_j t_j) - lambda_j t_j],
    up to the count-factorial constant; -inf when an observed row has zero
    rate."""
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (p.m,):
        raise ValueError(f"expected {p.m} counts, got shape {counts.shape}")
    L = state.matrix if isinstance(state, PurifiedState) else np.asarray(state, dtype=complex)
    if L.ndim == 1:
        L = L[:, None]
    if L.shape[0] != p.dim:
        raise ValueError(f"state dimension {L.shape[0]} does not match protocol dim {p.dim}")
    mu = _rates(p, L) * p.exposures()
    if np.any((counts > 0) & (mu <= 0)):
        return -np.inf
    return float(counts @ np.log(np.maximum(mu, _LAMBDA_LOG_FLOOR)) - mu.sum())


@dataclasses.dataclass(frozen=True, eq=False)
class MLResult:
    estimate: DensityMatrix
    purified: PurifiedState
    log_likelihood: float
    iterations: int
    converged: bool
    rank: int
    seed_estimate: Optional[DensityMatrix] = None
    seed_log_likelihood: Optional[float] = None
    total_scale: float = 1.0

    def report(self) -> dict:
        return {
            "loglik": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "rank": self.rank,
        }


def _seed_purification(rho: np.ndarray, r: int) -> np.ndarray:
    """Rank-r purification of a seed state with eigenvalues floored away from
    zero so no column starts dead."""
    w, v = np.linalg.eigh(rho)
    w, v = w[::-1][:r], v[:, ::-1][:, :r]
    w = np.maximum(w, 1e-8 * max(w[0], 1e-30))
    L = v * np.sqrt(w)
    return L / np.linalg.norm(L)


def _check_identifiable(p: Protocol, L: np.ndarray):
    s, r = L.shape
    h, _, _ = _h_matrix(p, L)
    w = np.linalg.eigvalsh(h)
    n_pos = int(np.sum(w > 1e-10 * max(w[-1], 1e-300)))
    if n_pos < (2 * s - r) * r:
        raise IncompleteProtocolError(
            f"protocol is incomplete for rank {r}: {n_pos} of {(2 * s - r) * r} "
            "directions identifiable at the seed"
        )


def ml_reconstruct(p: Protocol, counts, rank: Optional[int] = None,
                   seed: Optional[DensityMatrix] = None,
                   analysis: Optional[ProtocolAnalysis] = None,
                   tol: float = 1e-10, max_iterations: int = 10000,
                   damping: float = 0.5) -> MLResult:
    """Maximum-likelihood estimate from counts, seeded by the projected
    pseudo-inverse solution.

    Convergence is declared on the log-likelihood change (gauge freedom makes
    parameter distance meaningless); non-convergence is reported through the
    flag, not an exception.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (p.m,):
        raise ValueError(f"expected {p.m} counts, got shape {counts.shape}")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    if isinstance(seed, PurifiedState):
        r = seed.rank if rank is None else int(rank)
        if r != seed.rank:
            raise ValueError("rank conflicts with the purified seed")
    else:
        r = p.dim if rank is None else int(rank)
    if not 1 <= r <= p.dim:
        raise ValueError("rank must satisfy 1 <= r <= dim")

    if seed is None:
        if analysis is None:
            analysis = analyze(measurement_matrix(p))
        seed = pseudo_inverse_reconstruct(analysis, counts).rho_projected
    seed_ll = None

    t = p.exposures()
    if p.all_pure:
        x = p.amplitude_matrix()
        imat = (x.conj().T * t) @ x
    else:
        imat = sum(tj * op for tj, op in zip(t, p.operators()))
    if isinstance(seed, PurifiedState):
        L = seed.matrix.copy()
    else:
        L = _seed_purification(_as_matrix(seed), r)
    # identifiability is a protocol property; probe it away from the seed's
    # possibly tiny eigenvalues by reweighting its support equally
    w_eq, v_eq = np.linalg.eigh(L @ L.conj().T)
    _check_identifiable(p, v_eq[:, ::-1][:, :r] / np.sqrt(r))

    def loglik(Lm, mu):
        if np.any((counts > 0) & (mu <= 0)):
            return -np.inf
        return float(counts @ np.log(np.maximum(mu, _LAMBDA_LOG_FLOOR)) - mu.sum())

    # let the norm carry the total intensity before iterating
    mu = _rates(p, L) * t
    scale = counts.sum() / mu.sum()
    L = L * np.sqrt(scale)
    mu = mu * scale
    ll = loglik(L, mu)
    seed_ll = ll

    solve = np.linalg.solve
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        lam = _rates(p, L)
        w = counts / np.maximum(lam, _LAMBDA_LOG_FLOOR)
        if p.all_pure:
            jl = (x.conj().T * w) @ (x @ L)
        else:
            jl = np.zeros_like(L)
            for wj, op in zip(w, p.operators()):
                jl += wj * (op @ L)
        direction = solve(imat, jl)
        a = damping
        while True:
            cand = (1.0 - a) * L + a * direction
            mu_cand = _rates(p, cand) * t
            ll_cand = loglik(cand, mu_cand)
            if ll_cand >= ll or a < 1e-8:
                break
            a *= 0.5
        if ll_cand < ll:
            # backtracking exhausted: the step is at roundoff scale
            converged = bool(ll - ll_cand < max(tol, 1e-9 * (1.0 + abs(ll))))
            break
        delta = ll_cand - ll
        L, ll = cand, ll_cand
        if delta < tol:
            converged = True
            break

    total = float(np.linalg.norm(L) ** 2)
    L_norm = _canonical_gauge(L / np.sqrt(total))
    purified = PurifiedState(L_norm / np.linalg.norm(L_norm))
    return MLResult(
        estimate=purified.density(),
        purified=purified,
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
        rank=r,
        seed_estimate=seed.density() if isinstance(seed, PurifiedState) else seed,
        seed_log_likelihood=seed_ll,
        total_scale=total,
    )


def ml_rank_scan(p: Protocol, counts, ranks=None, **options) -> list:
    """Fit every rank in ``ranks`` (default 1..s) and report the results;
    no penalty criterion is applied."""
    ranks = range(1, p.dim + 1) if ranks is None else ranks
    return [ml_reconstruct(p, counts, rank=r, **options) for r in ranks]
