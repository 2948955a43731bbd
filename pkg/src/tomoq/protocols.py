"""Measurement protocols: polyhedron projective sets and their tensor powers,
waveplate-and-polarizer series, named literature protocols, and protocol-level
utilities (intensities, unity decomposition, exposure normalization).

A protocol is a list of rows; row j holds a complex amplitude row X_j of
length s and an exposure t_j.  The event rate for a state rho is
lambda_j = tr(Lambda_j rho) with the intensity operator
Lambda_j = X_j^+ X_j; a row may instead be a positive mixture of such
projectors.  Protocols are immutable after construction and all builders are
pure functions.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import geometry
from .states import DensityMatrix, _as_matrix, fix_global_phase


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclasses.dataclass(frozen=True)
class WaveplateSpec:
    """A birefringent plate: optical thickness delta (radians) and orientation
    alpha (radians).  Physical thickness is supported only through an explicit
    birefringence constant."""

    delta: float
    alpha: float
    thickness: Optional[float] = None
    birefringence: Optional[float] = None

    @classmethod
    def from_physical(cls, thickness: float, birefringence: float, wavelength: float,
                      alpha: float) -> "WaveplateSpec":
        """delta = pi * h * dn / lambda; thickness and wavelength share units."""
        if wavelength <= 0:
            raise ValueError("wavelength must be positive")
        delta = math.pi * thickness * birefringence / wavelength
        return cls(delta=delta, alpha=alpha, thickness=thickness, birefringence=birefringence)

    @property
    def delta_mod_pi(self) -> float:
        """Reduced thickness used for reporting; the protocol family is
        pi-periodic in delta."""
        return self.delta % math.pi


@dataclasses.dataclass(frozen=True, eq=False)
class ProtocolRow:
    """One measured projection: amplitude row, exposure, optional mixture."""

    amplitude: Optional[np.ndarray]
    exposure: float = 1.0
    mixture: Optional[tuple] = None  # ((weight, amplitude row), ...)

    def __post_init__(self):
        if (self.amplitude is None) == (self.mixture is None):
            raise ValueError("a row needs exactly one of amplitude or mixture")
        if self.exposure <= 0:
            raise ValueError("exposure must be positive")
        if self.amplitude is not None:
            object.__setattr__(self, "amplitude", _readonly(np.asarray(self.amplitude, dtype=complex)))
        else:
            mix = []
            for f, x in self.mixture:
                if f <= 0:
                    raise ValueError("mixture weights must be positive")
                mix.append((float(f), _readonly(np.asarray(x, dtype=complex))))
            object.__setattr__(self, "mixture", tuple(mix))

    @property
    def dim(self) -> int:
        if self.amplitude is not None:
            return self.amplitude.shape[0]
        return self.mixture[0][1].shape[0]

    def operator(self) -> np.ndarray:
        """Intensity operator Lambda = X^+ X (or its mixture)."""
        if self.amplitude is not None:
            x = self.amplitude
            return np.outer(x.conj(), x)
        s = self.dim
        out = np.zeros((s, s), dtype=complex)
        for f, x in self.mixture:
            out += f * np.outer(x.conj(), x)
        return out


@dataclasses.dataclass(frozen=True, eq=False)
class Protocol:
    """An immutable sequence of measurement rows over a fixed dimension."""

    dim: int
    rows: tuple
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if len(self.rows) < 1:
            raise ValueError("a protocol needs at least one row")
        rows = tuple(self.rows)
        for row in rows:
            if row.dim != self.dim:
                raise ValueError(f"row dimension {row.dim} differs from protocol dim {self.dim}")
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def all_pure(self) -> bool:
        return all(r.amplitude is not None for r in self.rows)

    def exposures(self) -> np.ndarray:
        return np.array([r.exposure for r in self.rows])

    def amplitude_matrix(self) -> np.ndarray:
        """m x s instrumental matrix; requires all rows pure."""
        if not self.all_pure:
            raise ValueError("protocol contains mixture rows; no single amplitude matrix")
        return np.array([r.amplitude for r in self.rows])

    def operators(self) -> Iterable[np.ndarray]:
        for r in self.rows:
            yield r.operator()

    def with_exposures(self, t: Sequence[float]) -> "Protocol":
        t = np.asarray(t, dtype=float)
        if t.shape != (self.m,):
            raise ValueError("exposure vector length mismatch")
        rows = tuple(
            dataclasses.replace(r, exposure=float(tj)) for r, tj in zip(self.rows, t)
        )
        return Protocol(self.dim, rows, dict(self.meta))


def protocol_from_amplitudes(x: np.ndarray, exposures=None, meta=None) -> Protocol:
    """Protocol with pure rows given by the rows of an m x s matrix."""
    x = np.asarray(x, dtype=complex)
    m, s = x.shape
    t = np.ones(m) if exposures is None else np.asarray(exposures, dtype=float)
    rows = tuple(ProtocolRow(amplitude=x[j], exposure=float(t[j])) for j in range(m))
    return Protocol(s, rows, dict(meta or {}))


def direction_state(n: Sequence[float]) -> np.ndarray:
    """Qubit amplitudes (cos(theta/2), e^{i phi} sin(theta/2)) for a unit
    Bloch direction n."""
    nx, ny, nz = np.asarray(n, dtype=float)
    theta = math.acos(min(1.0, max(-1.0, nz)))
    phi = math.atan2(ny, nx)
    return np.array([math.cos(theta / 2.0), math.sin(theta / 2.0) * np.exp(1j * phi)])


def tensor_product(a: Protocol, b: Protocol) -> Protocol:
    """All pairwise Kronecker products of rows; exposures multiply."""
    xa, xb = a.amplitude_matrix(), b.amplitude_matrix()
    ta, tb = a.exposures(), b.exposures()
    x = (xa[:, None, :, None] * xb[None, :, None, :]).reshape(a.m * b.m, a.dim * b.dim)
    t = np.outer(ta, tb).reshape(-1)
    meta = {"tensor_of": (a.meta.get("name"), b.meta.get("name"))}
    return protocol_from_amplitudes(x, t, meta)


def tensor_power(p: Protocol, l: int) -> Protocol:
    if l < 1:
        raise ValueError("tensor power needs l >= 1")
    out = p
    for _ in range(l - 1):
        out = tensor_product(out, p)
    out.meta.update(p.meta)
    out.meta["qubits"] = l * p.meta.get("qubits", 1)
    return out


def polyhedron_protocol(solid, qubits: int = 1, rotation=None) -> Protocol:
    """Projectors onto the face-center directions of a solid, tensored over
    the qubits; equal unit exposures close the unity decomposition for every
    solid in the catalogue."""
    name = solid.solid if isinstance(solid, PolyhedronSpec) else solid
    if qubits < 1:
        raise ValueError("qubit count must be >= 1")
    dirs = geometry.face_directions(name, rotation=rotation)
    x = np.array([np.conj(fix_global_phase(direction_state(n))) for n in dirs])
    single = protocol_from_amplitudes(x, meta={"name": name, "solid": name, "qubits": 1})
    if qubits == 1:
        return single
    return tensor_power(single, qubits)


@dataclasses.dataclass(frozen=True)
class PolyhedronSpec:
    """A solid from the protocol catalogue."""

    solid: str

    def __post_init__(self):
        if self.solid.lower() not in geometry.FACE_COUNTS:
            raise ValueError(f"unknown solid {self.solid!r}")
        object.__setattr__(self, "solid", self.solid.lower())

    @property
    def face_count(self) -> int:
        return geometry.FACE_COUNTS[self.solid]

    def directions(self) -> np.ndarray:
        return geometry.face_directions(self.solid)


def waveplate_unitary(delta: float, alpha: float) -> np.ndarray:
    """Jones matrix of a plate: t = cos(delta) + i sin(delta) cos(2 alpha),
    r = i sin(delta) sin(2 alpha), arranged as [[t, r], [-r*, t*]]."""
    t = math.cos(delta) + 1j * math.sin(delta) * math.cos(2.0 * alpha)
    r = 1j * math.sin(delta) * math.sin(2.0 * alpha)
    return np.array([[t, r], [-np.conj(r), np.conj(t)]])


_ANALYZERS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
}


def _analyzer_vector(analyzer) -> np.ndarray:
    if isinstance(analyzer, str):
        try:
            return _ANALYZERS[analyzer.upper()]
        except KeyError:
            raise ValueError(f"unknown analyzer {analyzer!r}") from None
    a = np.asarray(analyzer, dtype=complex)
    if a.shape != (2,):
        raise ValueError("analyzer must be a 2-component vector")
    return a / np.linalg.norm(a)


def _series_row(plates: Sequence[WaveplateSpec], analyzer: np.ndarray,
                extra_angle: float = 0.0) -> np.ndarray:
    """Amplitude row <analyzer| G_n ... G_1 with plates in traversal order,
    all rotated together by extra_angle."""
    g = np.eye(2, dtype=complex)
    for p in plates:
        g = waveplate_unitary(p.delta, p.alpha + extra_angle) @ g
    return analyzer.conj() @ g


def plate_series_protocol(plate_rows: Sequence[Sequence[WaveplateSpec]],
                          analyzer="V", meta=None) -> Protocol:
    """One row per plate configuration: the analyzer projection after the
    listed plates."""
    if len(plate_rows) < 1:
        raise ValueError("at least one plate configuration is required")
    a = _analyzer_vector(analyzer)
    x = np.array([_series_row(plates, a) for plates in plate_rows])
    return protocol_from_amplitudes(x, meta=dict(meta or {}))


def single_plate_protocol(delta: float, orientations_deg: Sequence[float],
                          analyzer="V", name=None) -> Protocol:
    """Single plate of thickness delta at the given orientations, fixed
    analyzer."""
    rows = [[WaveplateSpec(delta, math.radians(a))] for a in orientations_deg]
    meta = {"name": name or f"B{len(rows)}", "delta": delta}
    return plate_series_protocol(rows, analyzer=analyzer, meta=meta)


def b9(delta: float, analyzer="V", offset_deg: float = 0.0) -> Protocol:
    """Nine orientations, 0..160 degrees in 20-degree steps."""
    return single_plate_protocol(delta, offset_deg + 20.0 * np.arange(9), analyzer, name="B9")


def b36(delta: float, analyzer="V", offset_deg: float = 0.0) -> Protocol:
    """Thirty-six orientations, 0..350 degrees in 10-degree steps."""
    return single_plate_protocol(delta, offset_deg + 10.0 * np.arange(36), analyzer, name="B36")


def two_arm_plate_protocol(arm1: Sequence[WaveplateSpec], arm2: Sequence[WaveplateSpec],
                           orientations1=None, orientations2=None,
                           analyzer1="V", analyzer2="V",
                           synchronized: bool = False, meta=None) -> Protocol:
    """Tensor product of two single-photon plate series.

    Each arm's plates rotate together through its orientation list (radians;
    default 12 steps of 30 degrees).  With ``synchronized`` both arms share
    orientation list 1 and rotate in lockstep, giving one row per angle
    instead of the full product grid.
    """
    if orientations1 is None:
        orientations1 = np.deg2rad(30.0 * np.arange(12))
    orientations1 = np.atleast_1d(np.asarray(orientations1, dtype=float))
    a1 = _analyzer_vector(analyzer1)
    a2 = _analyzer_vector(analyzer2)
    rows = []
    if synchronized:
        for th in orientations1:
            r1 = _series_row(arm1, a1, th)
            r2 = _series_row(arm2, a2, th)
            rows.append(np.kron(r1, r2))
    else:
        if orientations2 is None:
            orientations2 = np.deg2rad(30.0 * np.arange(12))
        orientations2 = np.atleast_1d(np.asarray(orientations2, dtype=float))
        for th1 in orientations1:
            r1 = _series_row(arm1, a1, th1)
            for th2 in orientations2:
                rows.append(np.kron(r1, _series_row(arm2, a2, th2)))
    return protocol_from_amplitudes(np.array(rows), meta=dict(meta or {}))


def b144(delta1: float, delta2: float, steps: int = 12, analyzer1="V", analyzer2="V",
         mode: str = "counter") -> Protocol:
    """Two-plate ququart protocol on a steps x steps orientation grid
    (30-degree steps over the full circle by default, matching the B36
    orientation-counting convention).

    Each arm holds a pair of plates with thicknesses delta1 and delta2.  In
    ``counter`` mode (default) the pair in an arm rotates synchronously in
    opposite senses and the two arms scan independently, giving a complete
    protocol.  ``co`` rotates each pair in the same sense.  ``common``
    instead puts the single pair in the common path before the beam splitter
    so both photons see the same unitary; that variant resolves only a
    9-dimensional operator subspace and suits pure states.
    """
    a1 = _analyzer_vector(analyzer1)
    a2 = _analyzer_vector(analyzer2)
    angles = np.deg2rad((360.0 / steps) * np.arange(steps))
    meta = {"name": "B144", "delta1": delta1, "delta2": delta2, "mode": mode}
    rows = []
    if mode == "common":
        for alpha in angles:
            g1 = waveplate_unitary(delta1, alpha)
            for beta in angles:
                g = waveplate_unitary(delta2, beta) @ g1
                rows.append(np.kron(a1.conj() @ g, a2.conj() @ g))
        return protocol_from_amplitudes(np.array(rows), meta=meta)
    if mode not in ("counter", "co"):
        raise ValueError(f"unknown b144 mode {mode!r}")
    sign = -1.0 if mode == "counter" else 1.0
    arm1 = np.array([a1.conj() @ (waveplate_unitary(delta2, sign * th) @ waveplate_unitary(delta1, th))
                     for th in angles])
    arm2 = np.array([a2.conj() @ (waveplate_unitary(delta2, sign * th) @ waveplate_unitary(delta1, th))
                     for th in angles])
    rows = (arm1[:, None, :, None] * arm2[None, :, None, :]).reshape(steps * steps, 4)
    return protocol_from_amplitudes(rows, meta=meta)


def _j4() -> Protocol:
    s2 = 1.0 / math.sqrt(2.0)
    x = np.array([
        [1.0, 0.0],
        [0.0, 1.0],
        [s2, s2],
        [s2, -1j * s2],  # projector onto (|H> + i|V>)/sqrt(2)
    ], dtype=complex)
    return protocol_from_amplitudes(x, meta={"name": "J4", "qubits": 1})


def _kosut8() -> Protocol:
    pairs_deg = [(0.0, 0.0), (20.0, 45.0), (25.0, 45.0), (45.0, 0.0)]
    rows = []
    for h_deg, q_deg in pairs_deg:
        h, q = math.radians(h_deg), math.radians(q_deg)
        s2 = 1.0 / math.sqrt(2.0)
        psi1 = s2 * np.array([
            math.sin(2 * h) + 1j * math.sin(2 * (h - q)),
            math.cos(2 * h) - 1j * math.cos(2 * (h - q)),
        ])
        psi2 = s2 * np.array([
            math.cos(2 * h) + 1j * math.cos(2 * (h - q)),
            -math.sin(2 * h) + 1j * math.sin(2 * (h - q)),
        ])
        rows.append(psi1.conj())
        rows.append(psi2.conj())
    return protocol_from_amplitudes(np.array(rows), meta={"name": "kosut8", "qubits": 1})


def named_protocol(name: str) -> Protocol:
    """Protocols from the literature: J4, R4, J16, R16, kosut8."""
    key = name.lower()
    if key == "j4":
        return _j4()
    if key == "r4":
        p = polyhedron_protocol("tetrahedron", 1)
        p.meta["name"] = "R4"
        return p
    if key == "j16":
        p = tensor_power(_j4(), 2)
        p.meta["name"] = "J16"
        return p
    if key == "r16":
        p = polyhedron_protocol("tetrahedron", 2)
        p.meta["name"] = "R16"
        return p
    if key == "kosut8":
        return _kosut8()
    raise ValueError(f"unknown protocol {name!r}")


def intensities(p: Protocol, rho) -> np.ndarray:
    """Event rates lambda_j = tr(Lambda_j rho)."""
    m = _as_matrix(rho)
    if m.shape != (p.dim, p.dim):
        raise ValueError(f"state dimension {m.shape[0]} does not match protocol dim {p.dim}")
    if p.all_pure:
        x = p.amplitude_matrix()
        lam = np.einsum("ja,ab,jb->j", x, m, x.conj()).real
    else:
        lam = np.array([np.trace(op @ m).real for op in p.operators()])
    return np.clip(lam, 0.0, None)


class UnityCheck(NamedTuple):
    holds: bool
    i0: Optional[float]


def unity_check(p: Protocol, tol: float = 1e-8) -> UnityCheck:
    """Whether sum_j t_j Lambda_j is proportional to the identity."""
    total = np.zeros((p.dim, p.dim), dtype=complex)
    for row, op in zip(p.rows, p.operators()):
        total += row.exposure * op
    i0 = total.trace().real / p.dim
    holds = bool(np.abs(total - i0 * np.eye(p.dim)).max() < tol)
    return UnityCheck(holds, i0 if holds else None)


def normalize_exposures(p: Protocol, rho, n: float) -> Protocol:
    """Rescale all exposures by one factor so the expected total count is n."""
    if n <= 0:
        raise ValueError("expected total count must be positive")
    lam = intensities(p, rho)
    total = float(lam @ p.exposures())
    if total <= 0:
        raise ValueError("all intensities vanish; cannot normalize exposures")
    return p.with_exposures(p.exposures() * (n / total))
