"""Reconstruction-precision theory: the information matrix over realified
purifications, the fidelity-loss coefficient vector and its distribution,
optimal bounds, and parameter scans.

The fidelity loss 1 - F of a maximum-likelihood estimate is asymptotically a
weighted sum of squared standard normals, 1 - F = sum_j d_j xi_j^2 with
j_max = (2s - r) r - 1 coefficients.  The d vector comes from the information
matrix H = 2 sum_j t_j (Lambda_j c)(Lambda_j c)^T / lambda_j over the realified
purified state: the estimator covariance is the pseudo-inverse of 2H on the
identifiable directions, and the loss is its quadratic form after projecting
out the state-norm direction (the realified purification itself) along with
the r^2 gauge null directions.  For protocols forming a decomposition of
unity the norm direction is an exact eigenvector of H and this reduces to
d_j = 1/(2 h_j) over the remaining positive eigenvalues.

Scans and multi-start searches are embarrassingly parallel over grid points;
every evaluation is a pure function of (protocol, state).
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize

from . import gchi2
from .analysis import IncompleteProtocolError, analyze, measurement_matrix
from .geometry import fibonacci_sphere
from .protocols import (
    Protocol,
    b9,
    b144,
    direction_state,
    intensities,
)
from .states import DensityMatrix, PurifiedState, _as_matrix, fix_global_phase, purify

LAMBDA_FLOOR = 1e-12
ZERO_EIG_TOL = 1e-10


def nines(loss):
    """z = -log10(1 - F), the number of nines in the fidelity."""
    return -np.log10(np.maximum(loss, 1e-300))


def _realify_rows(v: np.ndarray) -> np.ndarray:
    return np.hstack([v.real, v.imag])


def _vec_cols(m: np.ndarray) -> np.ndarray:
    return m.flatten(order="F")


def _row_images(p: Protocol, L: np.ndarray):
    """(complex images vec(Lambda_j L), intensities lambda_j) for all rows."""
    s, r = L.shape
    if p.all_pure:
        x = p.amplitude_matrix()
        a = x @ L  # m x r amplitudes
        lam = (np.abs(a) ** 2).sum(axis=1)
        v = (a[:, :, None] * x.conj()[:, None, :]).reshape(p.m, r * s)
        return v, lam
    v = np.empty((p.m, r * s), dtype=complex)
    lam = np.empty(p.m)
    for j, op in enumerate(p.operators()):
        img = op @ L
        v[j] = _vec_cols(img)
        lam[j] = np.trace(L.conj().T @ img).real
    return v, lam


def _h_matrix(p: Protocol, L: np.ndarray, exposures: Optional[np.ndarray] = None):
    """(H, lambda, flagged row indices) at the purification L.

    Each row contributes 2 t outer(w)/lambda with w the realified image
    vec(Lambda L); the rows are normalized by sqrt(lambda) first, which is
    exact for every positive rate (a projector row's contribution stays
    bounded by 2t as its rate vanishes).  Rows with exactly zero rate carry
    a well-defined limiting contribution up to a phase; they are flagged and
    enter at the zero-phase representative, so the loss stays continuous at
    exact projection alignment.
    """
    s, r = L.shape
    v, lam = _row_images(p, L)
    t = p.exposures() if exposures is None else exposures
    flagged = np.nonzero((lam < LAMBDA_FLOOR) & (t > 0))[0]
    zero = lam <= 0.0
    vhat = v / np.sqrt(np.maximum(lam, 1e-300))[:, None]
    if zero.any() and p.all_pure:
        x = p.amplitude_matrix()
        for j in np.nonzero(zero)[0]:
            repl = np.zeros(r * s, dtype=complex)
            repl[:s] = x[j].conj()
            vhat[j] = repl
    rv = _realify_rows(vhat)
    h = 2.0 * (rv * t[:, None]).T @ rv
    return h, lam, flagged


@dataclasses.dataclass(frozen=True, eq=False)
class InformationMatrix:
    """Real symmetric 2rs x 2rs information matrix at a purified state."""

    matrix: np.ndarray
    dim: int
    rank: int
    flagged_rows: tuple
    state: PurifiedState
    protocol: Protocol

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues; (2s-r)r are positive and r^2 vanish when the
        protocol is complete for this rank."""
        return np.linalg.eigvalsh(self.matrix)


def information_matrix(p: Protocol, state) -> InformationMatrix:
    st = state if isinstance(state, PurifiedState) else purify(state)
    L = st.matrix
    if L.shape[0] != p.dim:
        raise ValueError(f"state dimension {L.shape[0]} does not match protocol dim {p.dim}")
    h, _, flagged = _h_matrix(p, L)
    return InformationMatrix(
        matrix=h,
        dim=st.dim,
        rank=st.rank,
        flagged_rows=tuple(int(j) for j in flagged),
        state=st,
        protocol=p,
    )


def _loss_weights(p: Protocol, L: np.ndarray, n: float) -> np.ndarray:
    """Descending coefficient vector d for sample size n at purification L."""
    s, r = L.shape
    lam0 = intensities(p, L @ L.conj().T)
    total = float(lam0 @ p.exposures())
    if total <= 0:
        raise ValueError("protocol sees no intensity at this state")
    h, _, _ = _h_matrix(p, L, exposures=p.exposures() * (n / total))
    w, vecs = np.linalg.eigh(h)
    n_pos_expected = (2 * s - r) * r
    pos = w > ZERO_EIG_TOL * max(w[-1], 1e-300)
    if int(pos.sum()) < n_pos_expected:
        raise IncompleteProtocolError(
            f"protocol determines only {int(pos.sum())} of {n_pos_expected} "
            f"directions for rank {r} in dimension {s}"
        )
    cov = (vecs[:, pos] / (2.0 * w[pos])) @ vecs[:, pos].T
    c = _realify_rows(_vec_cols(L)[None, :])[0]
    cov_c = cov @ c
    # project the norm direction out of the estimator covariance
    m = cov - np.outer(c, cov_c) - np.outer(cov_c, c) + np.outer(c, c) * (c @ cov_c)
    d = np.linalg.eigvalsh(m)[::-1][: n_pos_expected - 1]
    return np.clip(d, 0.0, None)


@dataclasses.dataclass(frozen=True, eq=False)
class LossModel:
    """Coefficients of the fidelity-loss distribution for one
    (protocol, state, sample size) triple."""

    d: np.ndarray
    n: float
    dim: int
    rank: int
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        d = np.sort(d)[::-1].copy()
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def j_max(self) -> int:
        return self.d.size

    def with_n(self, n: float) -> "LossModel":
        """Same protocol and state at a different sample size (d ~ 1/n)."""
        return LossModel(self.d * (self.n / n), n, self.dim, self.rank, dict(self.meta))


def loss_model(p: Protocol, state, n: float, rank: Optional[int] = None) -> LossModel:
    """Fidelity-loss coefficients for a protocol, state and sample size.

    ``state`` may be a DensityMatrix (purified internally at its numerical or
    forced rank) or a PurifiedState in any gauge.
    """
    if n <= 0:
        raise ValueError("sample size must be positive")
    if isinstance(state, PurifiedState):
        st = state
    else:
        st = purify(state, rank)
    if st.dim != p.dim:
        raise ValueError(f"state dimension {st.dim} does not match protocol dim {p.dim}")
    d = _loss_weights(p, st.matrix, n)
    return LossModel(d=d, n=float(n), dim=st.dim, rank=st.rank,
                     meta={"protocol": p.meta.get("name")})


class LossMoments(NamedTuple):
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float


def loss_moments(model: LossModel) -> LossMoments:
    return LossMoments(*gchi2.moments(model.d))


def loss_L(model: LossModel) -> float:
    """Sample-size-independent loss figure L = n <1 - F>."""
    return float(model.n * model.d.sum())


def loss_cdf(model: LossModel, x):
    return gchi2.cdf(x, model.d)


def loss_quantile(model: LossModel, p):
    return gchi2.quantile(p, model.d)


class BoundsResult(NamedTuple):
    nu: int
    l_min_opt: float


def min_loss_bounds(s: int, r: int) -> BoundsResult:
    """Optimal loss floor L = nu^2 / (4 (s-1)) with nu = (2s - r) r - 1."""
    if not 1 <= r <= s:
        raise ValueError("rank must satisfy 1 <= r <= s")
    if s < 2:
        raise ValueError("dimension must be at least 2")
    nu = (2 * s - r) * r - 1
    return BoundsResult(nu, nu**2 / (4.0 * (s - 1)))


def polyhedron_mixed_floor(l: int) -> float:
    """White-noise loss floor (10^l - 1)/4 shared by every polyhedron
    protocol on l qubits."""
    if l < 1:
        raise ValueError("qubit count must be >= 1")
    return (10.0**l - 1.0) / 4.0


def _angles_to_state(angles: np.ndarray, s: int) -> np.ndarray:
    """Pure state from 2s-2 real parameters (hyperspherical amplitudes plus
    phases); the first amplitude is real nonnegative."""
    thetas = angles[: s - 1]
    phis = angles[s - 1:]
    c = np.zeros(s, dtype=complex)
    sin_prod = 1.0
    for k in range(s - 1):
        c[k] = sin_prod * math.cos(thetas[k])
        sin_prod *= math.sin(thetas[k])
    c[s - 1] = sin_prod
    c[1:] *= np.exp(1j * phis)
    # amplitudes may be negative through the cosines; fold the sign into phases
    return c


def _state_to_angles(c: np.ndarray) -> np.ndarray:
    s = c.size
    c = fix_global_phase(np.asarray(c, dtype=complex))
    amps = np.abs(c)
    thetas = np.zeros(s - 1)
    sin_prod = 1.0
    for k in range(s - 1):
        if sin_prod > 1e-14:
            thetas[k] = math.acos(min(1.0, max(-1.0, amps[k] / sin_prod)))
        sin_prod *= math.sin(thetas[k])
    phis = np.angle(c[1:])
    return np.concatenate([thetas, phis])


def pure_loss(p: Protocol, c: Sequence[complex], n: float = 1.0) -> float:
    """Loss figure L at a pure state (rank-1 purification)."""
    c = np.asarray(c, dtype=complex)
    c = c / np.linalg.norm(c)
    d = _loss_weights(p, c[:, None], n)
    return float(n * d.sum())


@dataclasses.dataclass(frozen=True, eq=False)
class ScanField:
    """Grid of evaluation points with named scalar results.

    Summaries hold min/max and their locations per result column, computed
    over finite entries; flagged points mark singular evaluations.
    """

    kind: str
    points: np.ndarray
    point_names: tuple
    values: dict
    flags: np.ndarray
    summaries: dict
    meta: dict = dataclasses.field(default_factory=dict)

    def summary_json(self) -> dict:
        out = {"kind": self.kind, "singular_points": int(self.flags.sum())}
        for name, s in self.summaries.items():
            out[name] = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                         for k, v in s.items()}
        return out


def _summarize(points: np.ndarray, values: np.ndarray) -> dict:
    finite = np.isfinite(values)
    if not finite.any():
        return {"min": math.nan, "max": math.nan, "argmin": None, "argmax": None}
    idx = np.nonzero(finite)[0]
    imin = idx[np.argmin(values[idx])]
    imax = idx[np.argmax(values[idx])]
    return {
        "min": float(values[imin]),
        "max": float(values[imax]),
        "argmin": np.atleast_1d(points[imin]),
        "argmax": np.atleast_1d(points[imax]),
    }


def _refine_direction_extremum(p: Protocol, n0: np.ndarray, sign: float) -> tuple:
    """Locally polish a loss extremum over the Bloch sphere; sign=+1 maximizes."""

    def objective(ang):
        th, ph = ang
        nvec = np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
        try:
            return -sign * pure_loss(p, direction_state(nvec))
        except (IncompleteProtocolError, ValueError):
            return np.inf

    th0 = math.acos(min(1.0, max(-1.0, n0[2])))
    ph0 = math.atan2(n0[1], n0[0])
    res = optimize.minimize(objective, np.array([th0, ph0]), method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 600})
    th, ph = res.x
    nvec = np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
    return -res.fun * sign, nvec


def bloch_scan(p: Protocol, grid: int = 2000, refine: bool = True) -> ScanField:
    """Loss figure L over pure states on the Bloch sphere (single qubit).

    Evaluates a deterministic Fibonacci lattice; with ``refine`` the grid
    extrema are polished by local simplex descent, which the reported min/max
    reflect (the raw grid extrema stay available as grid_min/grid_max).
    """
    if p.dim != 2:
        raise ValueError("bloch_scan requires a single-qubit protocol")
    dirs = fibonacci_sphere(grid)
    values = np.empty(grid)
    flags = np.zeros(grid, dtype=bool)
    for i, nvec in enumerate(dirs):
        try:
            values[i] = pure_loss(p, direction_state(nvec))
        except (IncompleteProtocolError, ValueError):
            values[i] = np.inf
            flags[i] = True
    summary = _summarize(dirs, values)
    summaries = {"L": dict(summary)}
    summaries["L"]["grid_min"] = summary["min"]
    summaries["L"]["grid_max"] = summary["max"]
    if refine and np.isfinite(values).any():
        lo, nlo = _refine_direction_extremum(p, summary["argmin"], sign=-1.0)
        hi, nhi = _refine_direction_extremum(p, summary["argmax"], sign=+1.0)
        if np.isfinite(lo) and lo < summaries["L"]["min"]:
            summaries["L"]["min"] = float(lo)
            summaries["L"]["argmin"] = nlo
        if np.isfinite(hi) and hi > summaries["L"]["max"]:
            summaries["L"]["max"] = float(hi)
            summaries["L"]["argmax"] = nhi
    return ScanField(
        kind="bloch",
        points=dirs,
        point_names=("nx", "ny", "nz"),
        values={"L": values},
        flags=flags,
        summaries=summaries,
        meta={"protocol": p.meta.get("name"), "grid": grid, "refined": bool(refine)},
    )


@dataclasses.dataclass(frozen=True, eq=False)
class MaxLossResult:
    value: float
    state: np.ndarray
    restarts: int
    evaluations: int


def max_loss_search(p: Protocol, restarts: int = 100, seed: int = 0,
                    grid_seeds: bool = True, maxiter: int = 4000) -> MaxLossResult:
    """Multi-start simplex maximization of the loss figure over pure states.

    Restarts draw Haar-random states; for single-qubit protocols the Bloch
    grid maxima seed additional starts.  A local method cannot certify the
    global optimum, so the restart count is recorded with the result.
    """
    s = p.dim
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    n_params = 2 * s - 2
    evaluations = 0

    def objective(angles):
        nonlocal evaluations
        evaluations += 1
        c = _angles_to_state(angles, s)
        try:
            return -pure_loss(p, c)
        except (IncompleteProtocolError, ValueError):
            return np.inf

    starts = []
    if grid_seeds and s == 2:
        field = bloch_scan(p, grid=400, refine=False)
        order = np.argsort(field.values["L"])[::-1][:5]
        for i in order:
            if np.isfinite(field.values["L"][i]):
                starts.append(_state_to_angles(direction_state(field.points[i])))
    for _ in range(restarts):
        z = rng.standard_normal(s) + 1j * rng.standard_normal(s)
        starts.append(_state_to_angles(z / np.linalg.norm(z)))

    best_val, best_x = -np.inf, None
    for x0 in starts:
        res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": maxiter})
        if -res.fun > best_val:
            best_val, best_x = -res.fun, res.x
    state = fix_global_phase(_angles_to_state(best_x, s))
    return MaxLossResult(value=float(best_val), state=state, restarts=restarts,
                         evaluations=evaluations)


def thickness_scan(family: str, *, deltas=None, thickness1=None, thickness2=None,
                   birefringence: Optional[float] = None, wavelength: Optional[float] = None,
                   analyzer="V", bloch_grid: int = 400, refine: bool = True) -> ScanField:
    """Condition number (and, for B9, the Bloch maximum loss) against plate
    thickness.

    ``B9``: one plate scanned over optical thicknesses ``deltas`` (radians).
    ``B144``: two plates over physical thickness grids ``thickness1`` and
    ``thickness2`` in millimetres, converted through the supplied
    ``birefringence`` and ``wavelength`` (nanometres).  The condition number
    is the full-spectrum singular value ratio, so rank-deficient points show
    up as infinities and are flagged.
    """
    fam = family.upper()
    if fam == "B9":
        if deltas is None:
            raise ValueError("B9 scan needs an array of optical thicknesses")
        deltas = np.asarray(deltas, dtype=float)
        k_vals = np.empty(deltas.size)
        l_vals = np.empty(deltas.size)
        flags = np.zeros(deltas.size, dtype=bool)
        for i, d in enumerate(deltas):
            prot = b9(d, analyzer=analyzer)
            a = analyze(prot)
            k_vals[i] = a.condition_number_full
            if not np.isfinite(k_vals[i]) or a.rank < prot.dim**2:
                flags[i] = True
            field = bloch_scan(prot, grid=bloch_grid, refine=refine)
            l_vals[i] = field.summaries["L"]["max"]
            if not np.isfinite(l_vals[i]):
                flags[i] = True
        points = deltas[:, None]
        return ScanField(
            kind="delta_1d",
            points=points,
            point_names=("delta",),
            values={"K": k_vals, "L_max": l_vals},
            flags=flags,
            summaries={"K": _summarize(points, k_vals), "L_max": _summarize(points, l_vals)},
            meta={"family": "B9", "analyzer": str(analyzer)},
        )
    if fam == "B144":
        if thickness1 is None or thickness2 is None:
            raise ValueError("B144 scan needs thickness1 and thickness2 grids")
        if birefringence is None or wavelength is None:
            raise ValueError("B144 physical-thickness scan needs birefringence and wavelength")
        h1 = np.asarray(thickness1, dtype=float)
        h2 = np.asarray(thickness2, dtype=float)
        nm_per_mm = 1e6
        pts = []
        k_vals = []
        flags = []
        for a1 in h1:
            d1 = math.pi * a1 * nm_per_mm * birefringence / wavelength
            for a2 in h2:
                d2 = math.pi * a2 * nm_per_mm * birefringence / wavelength
                an = analyze(b144(d1, d2))
                pts.append((a1, a2))
                k_vals.append(an.condition_number_full)
                flags.append(not np.isfinite(an.condition_number_full))
        points = np.array(pts)
        k_vals = np.array(k_vals)
        flags = np.array(flags, dtype=bool)
        return ScanField(
            kind="thickness_2d",
            points=points,
            point_names=("h1_mm", "h2_mm"),
            values={"K": k_vals},
            flags=flags,
            summaries={"K": _summarize(points, k_vals)},
            meta={"family": "B144", "birefringence": birefringence, "wavelength": wavelength},
        )
    raise ValueError(f"unknown scan family {family!r}")
