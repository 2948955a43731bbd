"""Poisson sampling of protocol outcomes, Monte Carlo trial batteries, and
goodness-of-fit validation of the fidelity-loss distribution.

Randomness comes from counter-based Philox streams keyed by (master seed,
trial index), so trials are bit-reproducible and order-independent under
parallel execution; numpy's Poisson sampler uses inversion for small means
and transformed rejection for large ones.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import chi2 as _chi2

from . import gchi2
from .analysis import analyze, measurement_matrix
from .precision import LossModel, loss_quantile, nines
from .protocols import Protocol, intensities, normalize_exposures
from .reconstruction import ml_reconstruct
from .states import DensityMatrix, _as_matrix, fidelity


def trial_rng(master_seed: int, trial: Optional[int] = None) -> np.random.Generator:
    """Philox generator for a trial-specific stream."""
    entropy = master_seed if trial is None else [master_seed, trial]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def sample_counts(p: Protocol, rho, n: float, seed, _normalized: bool = False) -> np.ndarray:
    """Poisson counts k_j ~ Poisson(lambda_j t_j) after normalizing the
    expected total to n; deterministic per seed."""
    if n <= 0:
        raise ValueError("expected total count must be positive")
    if not _normalized:
        p = normalize_exposures(p, rho, n)
    mu = intensities(p, rho) * p.exposures()
    rng = trial_rng(seed) if np.isscalar(seed) else np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed)))
    return rng.poisson(mu)


@dataclasses.dataclass(frozen=True, eq=False)
class TrialBatch:
    """Per-trial fidelity losses of repeated simulated reconstructions."""

    losses: np.ndarray
    z: np.ndarray
    converged: np.ndarray
    n: float
    trials: int
    master_seed: int
    meta: dict = dataclasses.field(default_factory=dict)

    @property
    def n_converged(self) -> int:
        return int(self.converged.sum())

    def converged_losses(self) -> np.ndarray:
        return self.losses[self.converged]


def _single_trial(args):
    p, rho_mat, truth, rank, n, master_seed, trial, analysis = args
    rng = trial_rng(master_seed, trial)
    lam = intensities(p, rho_mat)
    counts = rng.poisson(lam * p.exposures())
    result = ml_reconstruct(p, counts, rank=rank, analysis=analysis)
    loss = max(1.0 - fidelity(truth, result.estimate), 0.0)
    return loss, result.converged


def run_trials(p: Protocol, rho, n: float, trials: int, seed: int,
               rank: Optional[int] = None, workers: int = 1) -> TrialBatch:
    """Sample counts and ML-reconstruct `trials` times; record the loss 1 - F
    against the truth per trial.

    The reconstruction rank defaults to the rank of the true state.  Workers
    beyond one fan the trials out to processes; per-trial seeding keeps the
    result identical either way.
    """
    truth = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    if rank is None:
        rank = truth.rank()
    if trials < 0:
        raise ValueError("trial count must be nonnegative")
    normalized = normalize_exposures(p, truth, n)
    analysis = analyze(measurement_matrix(normalized))
    losses = np.zeros(trials)
    converged = np.zeros(trials, dtype=bool)
    jobs = [(normalized, truth.matrix, truth, rank, n, seed, i, analysis)
            for i in range(trials)]
    if workers != 1 and trials > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=None if workers <= 0 else workers) as ex:
            for i, (loss, conv) in enumerate(ex.map(_single_trial, jobs, chunksize=4)):
                losses[i], converged[i] = loss, conv
    else:
        for i, job in enumerate(jobs):
            losses[i], converged[i] = _single_trial(job)
    return TrialBatch(
        losses=losses,
        z=nines(losses),
        converged=converged,
        n=float(n),
        trials=trials,
        master_seed=seed,
        meta={"protocol": p.meta.get("name"), "rank": rank},
    )


class GofResult(NamedTuple):
    statistic: float
    dof: int
    p_value: float
    bins: int
    n_used: int


def gof_test(batch, model: LossModel, bins: Optional[int] = None) -> GofResult:
    """Pearson chi-square of the batch losses against the model distribution,
    with bins equiprobable under the model CDF.

    Non-converged trials are excluded; the default bin count is
    min(50, trials // 20) and at least 5 trials per bin are required.
    """
    losses = batch.converged_losses() if isinstance(batch, TrialBatch) else np.asarray(batch, float)
    n_used = losses.size
    if bins is None:
        bins = max(2, min(50, n_used // 20))
    if n_used < 5 * bins:
        raise ValueError(f"need at least {5 * bins} trials for {bins} bins, have {n_used}")
    probs = np.arange(1, bins) / bins
    edges = np.concatenate([[0.0], loss_quantile(model, probs), [np.inf]])
    observed, _ = np.histogram(losses, bins=edges)
    expected = n_used / bins
    stat = float(((observed - expected) ** 2 / expected).sum())
    dof = bins - 1
    return GofResult(stat, dof, float(_chi2.sf(stat, dof)), bins, n_used)


class QuantileBand(NamedTuple):
    f_lo: float
    f_hi: float
    z_lo: float
    z_hi: float


def quantile_band(model: LossModel, p_lo: float = 0.01, p_hi: float = 0.99) -> QuantileBand:
    """Fidelity band [F_lo, F_hi] from the loss quantiles at p_hi and p_lo,
    with the matching z = -log10(1 - F) endpoints."""
    q_lo = loss_quantile(model, p_lo)
    q_hi = loss_quantile(model, p_hi)
    return QuantileBand(
        f_lo=1.0 - q_hi,
        f_hi=1.0 - q_lo,
        z_lo=float(nines(q_hi)),
        z_hi=float(nines(q_lo)),
    )
