"""Quantum states: density matrices, purifications, Bloch vectors, state
functionals, named state families and the spectral-decoherence model.

Everything here is an immutable value; all operations are pure functions, so
states can be shared freely between concurrent scans.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, Sequence

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
RANK_TOL = 1e-10


class PositivityViolation(ValueError):
    """A matrix that should describe a quantum state has a negative eigenvalue."""

    def __init__(self, most_negative: float, message: Optional[str] = None):
        self.most_negative = float(most_negative)
        super().__init__(
            message
            or f"matrix is not positive semidefinite (eigenvalue {most_negative:.6e})"
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _as_matrix(state) -> np.ndarray:
    """Accept a DensityMatrix or a raw square array."""
    return state.matrix if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)


@dataclasses.dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix.

    Eigenvalues in (-1e-10, 0) are clamped to zero and the trace renormalized;
    anything more negative is rejected.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        herm_err = np.abs(m - m.conj().T).max()
        if herm_err > HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian (asymmetry {herm_err:.3e})")
        m = 0.5 * (m + m.conj().T)
        trace_err = abs(m.trace() - 1.0)
        if trace_err > TRACE_TOL:
            raise ValueError(f"trace differs from 1 by {trace_err:.3e}")
        w = np.linalg.eigvalsh(m)
        if w[0] < EIGENVALUE_FLOOR:
            raise PositivityViolation(w[0])
        if w[0] < 0.0:
            w_full, v = np.linalg.eigh(m)
            w_full = np.clip(w_full, 0.0, None)
            m = (v * w_full) @ v.conj().T
            m = m / m.trace().real
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in decreasing order."""
        return np.linalg.eigvalsh(self.matrix)[::-1]

    def rank(self, tol: float = RANK_TOL) -> int:
        w = self.eigenvalues()
        return int(np.sum(w > tol * max(w[0], 1e-300)))


@dataclasses.dataclass(frozen=True, eq=False)
class PurifiedState:
    """s x r matrix L with rho = L L^dagger and tr(L L^dagger) = 1.

    The gauge L -> L V (V unitary, r x r) leaves the state unchanged;
    `purify` returns the Cholesky-style canonical gauge (zeros above the
    principal diagonal, nonnegative real diagonal).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2:
            raise ValueError("purified state must be a 2-D matrix")
        s, r = m.shape
        if not 1 <= r <= s:
            raise ValueError(f"purification rank must satisfy 1 <= r <= dim, got {m.shape}")
        norm = np.linalg.norm(m) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"tr(L L^+) differs from 1 by {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    def density(self) -> DensityMatrix:
        m = self.matrix
        return DensityMatrix(m @ m.conj().T)


@dataclasses.dataclass(frozen=True, eq=False)
class BlochVector:
    """Real coordinate vector of a state in the traceless Hermitian basis."""

    dim: int
    components: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.components, dtype=float)
        if v.shape != (self.dim**2 - 1,):
            raise ValueError(f"expected {self.dim ** 2 - 1} components, got {v.shape}")
        object.__setattr__(self, "components", _readonly(v))


def fix_global_phase(c: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate a global phase so the first nonzero amplitude is real positive."""
    c = np.asarray(c, dtype=complex)
    for x in c:
        if abs(x) > tol:
            return c * (x.conjugate() / abs(x))
    return c


def density_from_pure(c: Sequence[complex]) -> DensityMatrix:
    """Rank-1 projector |c><c| of a unit vector."""
    c = np.asarray(c, dtype=complex)
    norm = np.linalg.norm(c)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state vector norm is {norm:.6g}, expected 1")
    c = c / norm
    return DensityMatrix(np.outer(c, c.conj()))


def ghz_vector(qubits: int) -> np.ndarray:
    if qubits < 1:
        raise ValueError("qubit count must be >= 1")
    c = np.zeros(2**qubits, dtype=complex)
    c[0] = c[-1] = 1.0 / np.sqrt(2.0)
    return c


_BELL_VECTORS = {
    "bell_phi_plus": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "bell_phi_minus": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "bell_psi_plus": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "bell_psi_minus": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


def named_state(name: str, qubits: int = 1, **params) -> DensityMatrix:
    """Construct a state from the named families.

    Names: ``ghz``, ``bell_phi_plus``/``bell_phi_minus``/``bell_psi_plus``/
    ``bell_psi_minus``, ``white_noise``, ``ghz_noise`` (param ``f``, the weight
    of the uniform component) and ``ququart_family`` (params ``c1``, ``c2``,
    ``phi``, ``p``).
    """
    key = name.lower()
    if key == "ghz":
        return density_from_pure(ghz_vector(qubits))
    if key in _BELL_VECTORS:
        return density_from_pure(_BELL_VECTORS[key])
    if key == "white_noise":
        s = 2**qubits
        return DensityMatrix(np.eye(s) / s)
    if key == "ghz_noise":
        f = float(params["f"])
        if not 0.0 <= f <= 1.0:
            raise ValueError("noise weight f must lie in [0, 1]")
        s = 2**qubits
        c = ghz_vector(qubits)
        return DensityMatrix(f * np.eye(s) / s + (1.0 - f) * np.outer(c, c.conj()))
    if key == "ququart_family":
        c1, c2 = float(params["c1"]), float(params["c2"])
        phi, p = float(params.get("phi", 0.0)), float(params.get("p", 0.0))
        if abs(c1**2 + c2**2 - 1.0) > 1e-10:
            raise ValueError("amplitudes must satisfy c1^2 + c2^2 = 1")
        if not 0.0 <= p <= 1.0:
            raise ValueError("mixture weight p must lie in [0, 1]")
        psi = np.zeros(4, dtype=complex)
        psi[0] = c1
        psi[3] = c2 * np.exp(1j * phi)
        rho = (1.0 - p) * np.outer(psi, psi.conj())
        rho[0, 0] += p / 2.0
        rho[3, 3] += p / 2.0
        return DensityMatrix(rho)
    raise ValueError(f"unknown state family {name!r}")


def fidelity(rho0, rho) -> float:
    """Uhlmann fidelity between two states, in [0, 1].

    Computed as the squared nuclear norm of L0^+ L1 for any purifications,
    which avoids matrix square roots.
    """
    a = _as_matrix(rho0)
    b = _as_matrix(rho)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    la = _purified_matrix(a)
    lb = _purified_matrix(b)
    f = np.linalg.svd(la.conj().T @ lb, compute_uv=False).sum() ** 2
    return float(min(max(f, 0.0), 1.0))


def purity(rho) -> float:
    """tr(rho^2), in [1/s, 1]."""
    m = _as_matrix(rho)
    return float(np.vdot(m, m).real)


def entropy(rho) -> float:
    """Von Neumann entropy -sum(lam * log2(lam)), in [0, log2 s]."""
    w = np.linalg.eigvalsh(_as_matrix(rho))
    w = w[w > 1e-15]
    return float(-(w * np.log2(w)).sum())


def concurrence_pure(c: Sequence[complex]) -> float:
    """Concurrence 2|c1*c4 - c2*c3| of a pure two-qubit state."""
    c = np.asarray(c, dtype=complex)
    if c.shape != (4,):
        raise ValueError("concurrence_pure expects a length-4 amplitude vector")
    norm = np.linalg.norm(c)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state vector norm is {norm:.6g}, expected 1")
    return float(2.0 * abs(c[0] * c[3] - c[1] * c[2]))


def _purified_matrix(rho: np.ndarray, rank: Optional[int] = None) -> np.ndarray:
    """Raw purification L = U sqrt(D) over the significant eigenvalues."""
    w, v = np.linalg.eigh(rho)
    w, v = w[::-1], v[:, ::-1]
    numerical_rank = int(np.sum(w > RANK_TOL * max(w[0], 1e-300)))
    r = numerical_rank if rank is None else int(rank)
    if r < numerical_rank:
        raise ValueError(f"forced rank {r} is below the numerical rank {numerical_rank}")
    if r > rho.shape[0]:
        raise ValueError("rank cannot exceed the dimension")
    return v[:, :r] * np.sqrt(np.clip(w[:r], 0.0, None))


def _canonical_gauge(L: np.ndarray) -> np.ndarray:
    """Right-multiply by a unitary so L has zeros above the principal diagonal
    and a nonnegative real diagonal."""
    q, _ = np.linalg.qr(L.conj().T)
    out = L @ q
    s, r = out.shape
    for j in range(r):
        d = out[j, j] if j < s else 0.0
        if abs(d) > 1e-14:
            out[:, j] *= d.conjugate() / abs(d)
    # zero the roundoff above the diagonal; the gauge makes it exact
    for j in range(1, r):
        out[:j, j] = 0.0
    return out


def purify(rho, rank: Optional[int] = None) -> PurifiedState:
    """Purification of a state in the canonical gauge.

    By default the rank counts eigenvalues above 1e-10 of the largest; a forced
    rank below the numerical rank is an error, a larger one pads zero columns.
    """
    m = _as_matrix(rho)
    L = _purified_matrix(m, rank)
    L = _canonical_gauge(L)
    n2 = np.linalg.norm(L) ** 2
    return PurifiedState(L / np.sqrt(n2))


def bloch_basis(dim: int) -> np.ndarray:
    """Traceless Hermitian basis with tr(sigma_j sigma_k) = delta_jk.

    Ordering: for each index pair j < k the symmetric then antisymmetric
    matrix, followed by the diagonal ladder; for dim 2 this is the Pauli
    triple divided by sqrt(2).
    """
    mats = []
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = m[k, j] = 1.0 / np.sqrt(2.0)
            mats.append(m)
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = -1j / np.sqrt(2.0)
            m[k, j] = 1j / np.sqrt(2.0)
            mats.append(m)
    for l in range(1, dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -l
        mats.append(m / np.sqrt(l * (l + 1)))
    return np.array(mats)


def bloch_from_density(rho) -> BlochVector:
    """Coordinates nu_j = tr(rho sigma_j)."""
    m = _as_matrix(rho)
    basis = bloch_basis(m.shape[0])
    nu = np.einsum("jab,ba->j", basis, m).real
    return BlochVector(dim=m.shape[0], components=nu)


def density_from_bloch(v: BlochVector) -> DensityMatrix:
    """Inverse map rho = E/s + nu_j sigma_j; raises PositivityViolation when
    the coordinates do not describe a physical state."""
    basis = bloch_basis(v.dim)
    m = np.eye(v.dim) / v.dim + np.tensordot(v.components, basis, axes=1)
    w = np.linalg.eigvalsh(m)
    if w[0] < EIGENVALUE_FLOOR:
        raise PositivityViolation(w[0])
    return DensityMatrix(m)


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralModel:
    """Finite-bandwidth light traversing birefringent plates.

    ``plates`` holds (optical thickness at the center wavelength, orientation)
    pairs; per spectral sample the thickness scales as lambda0/lambda. Weights
    follow ``sinc2`` (zeros at +-bandwidth) or ``gaussian`` (sigma = bandwidth)
    over +-3 bandwidths, renormalized to sum to one.
    """

    center_wavelength: float
    bandwidth: float
    plates: tuple = ()
    weight: str = "sinc2"
    samples: int = 201

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("discretization needs at least 2 samples")
        if self.center_wavelength <= 0:
            raise ValueError("center wavelength must be positive")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be nonnegative")
        if self.weight not in ("sinc2", "gaussian"):
            raise ValueError(f"unknown weight function {self.weight!r}")
        object.__setattr__(self, "plates", tuple((float(d), float(a)) for d, a in self.plates))

    def grid(self):
        """(wavelengths, normalized weights) of the discretized spectrum."""
        x = np.linspace(-3.0, 3.0, self.samples)
        if self.weight == "sinc2":
            w = np.sinc(x) ** 2
        else:
            w = np.exp(-0.5 * x**2)
        total = w.sum()
        if total <= 0:
            raise ValueError("spectral weights sum to zero")
        lam = self.center_wavelength + x * self.bandwidth
        if np.any(lam <= 0):
            raise ValueError("bandwidth too large: nonpositive wavelengths in the grid")
        return lam, w / total


def decohered_qubit(model: SpectralModel, c: Sequence[complex]) -> DensityMatrix:
    """Reduced polarization state after plates with a finite spectral band.

    rho = sum_k w_k G(lambda_k) |c><c| G(lambda_k)^+ with the plate unitaries
    evaluated at each spectral sample.
    """
    from .protocols import waveplate_unitary

    c = np.asarray(c, dtype=complex)
    if c.shape != (2,):
        raise ValueError("decohered_qubit expects a pure qubit amplitude pair")
    norm = np.linalg.norm(c)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state vector norm is {norm:.6g}, expected 1")
    c = c / norm
    lam, w = model.grid()
    rho = np.zeros((2, 2), dtype=complex)
    lam0 = model.center_wavelength
    for lk, wk in zip(lam, w):
        g = np.eye(2, dtype=complex)
        for delta0, alpha in model.plates:
            g = waveplate_unitary(delta0 * lam0 / lk, alpha) @ g
        gc = g @ c
        rho += wk * np.outer(gc, gc.conj())
    return DensityMatrix(rho)
