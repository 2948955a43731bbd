import numpy as np
import pytest

import tomoq
from tomoq import (
    WaveplateSpec,
    b9,
    b36,
    b144,
    density_from_pure,
    direction_state,
    intensities,
    named_protocol,
    normalize_exposures,
    plate_series_protocol,
    polyhedron_protocol,
    protocol_from_amplitudes,
    tensor_power,
    two_arm_plate_protocol,
    unity_check,
    waveplate_unitary,
)
from tomoq import geometry


class TestGeometry:
    @pytest.mark.parametrize("solid,m", sorted(geometry.FACE_COUNTS.items()))
    def test_face_counts_and_normalization(self, solid, m):
        dirs = geometry.face_directions(solid)
        assert dirs.shape == (m, 3)
        assert np.abs(np.linalg.norm(dirs, axis=1) - 1.0).max() < 1e-12

    @pytest.mark.parametrize("solid", geometry.SOLIDS)
    def test_directions_sum_to_zero(self, solid):
        dirs = geometry.face_directions(solid)
        assert np.abs(dirs.sum(axis=0)).max() < 1e-10

    def test_unknown_solid(self):
        with pytest.raises(ValueError):
            geometry.face_directions("hexagonal_prism")

    def test_fibonacci_sphere(self):
        pts = geometry.fibonacci_sphere(500)
        assert pts.shape == (500, 3)
        assert np.abs(np.linalg.norm(pts, axis=1) - 1.0).max() < 1e-12
        # quasi-uniform: the mean direction nearly cancels
        assert np.abs(pts.mean(axis=0)).max() < 0.01


class TestPolyhedronProtocols:
    def test_row_counts(self):
        assert polyhedron_protocol("tetrahedron", 1).m == 4
        assert polyhedron_protocol("fullerene", 1).m == 32
        p = polyhedron_protocol("octahedron", 2)
        assert p.m == 64 and p.dim == 4

    def test_unknown_solid(self):
        with pytest.raises(ValueError):
            polyhedron_protocol("prism", 1)

    @pytest.mark.parametrize("solid", geometry.SOLIDS)
    def test_unity_decomposition(self, solid):
        uc = unity_check(polyhedron_protocol(solid, 1), tol=1e-8)
        assert uc.holds
        assert uc.i0 == pytest.approx(geometry.FACE_COUNTS[solid] / 2, abs=1e-10)

    def test_tensor_intensities_factorize(self):
        rng = np.random.default_rng(0)
        p1 = polyhedron_protocol("tetrahedron", 1)
        p2 = tensor_power(p1, 2)
        c1 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        c2 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        c1, c2 = c1 / np.linalg.norm(c1), c2 / np.linalg.norm(c2)
        lam1 = intensities(p1, density_from_pure(c1))
        lam2 = intensities(p1, density_from_pure(c2))
        lam12 = intensities(p2, density_from_pure(np.kron(c1, c2)))
        assert np.abs(lam12 - np.outer(lam1, lam2).ravel()).max() < 1e-12

    def test_rotation_invariant_spectrum(self):
        from scipy.spatial.transform import Rotation

        rot = Rotation.from_rotvec([0.3, -0.5, 0.9]).as_matrix()
        a0 = tomoq.analyze(polyhedron_protocol("icosahedron", 1))
        a1 = tomoq.analyze(polyhedron_protocol("icosahedron", 1, rotation=rot))
        assert np.abs(a0.singular_values - a1.singular_values).max() < 1e-10

    def test_direction_state_projector(self):
        n = np.array([0.48, -0.6, 0.64])
        psi = direction_state(n)
        pauli = np.sqrt(2) * tomoq.bloch_basis(2)
        proj = 0.5 * (np.eye(2) + np.tensordot(n, pauli, axes=1))
        assert np.abs(np.outer(psi, psi.conj()) - proj).max() < 1e-12


class TestWaveplates:
    def test_identity_at_zero(self):
        assert np.abs(waveplate_unitary(0.0, 0.7) - np.eye(2)).max() < 1e-15

    def test_axis_aligned_is_phase(self):
        g = waveplate_unitary(0.4, 0.0)
        assert np.abs(g - np.diag([np.exp(0.4j), np.exp(-0.4j)])).max() < 1e-15

    def test_half_wave_at_45_swaps(self):
        g = waveplate_unitary(np.pi / 2, np.pi / 4)
        assert np.abs(g - np.array([[0, 1j], [1j, 0]])).max() < 1e-15

    def test_unitary_everywhere(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            d, a = rng.uniform(0, np.pi, 2)
            g = waveplate_unitary(d, a)
            assert np.abs(g @ g.conj().T - np.eye(2)).max() < 1e-12

    def test_opposite_thickness_inverts(self):
        g1 = waveplate_unitary(0.8, 0.3)
        g2 = waveplate_unitary(-0.8, 0.3)
        assert np.abs(g2 @ g1 - np.eye(2)).max() < 1e-12

    def test_from_physical(self):
        wp = WaveplateSpec.from_physical(313e3, 0.009, 1550.0, alpha=0.2)
        assert wp.delta == pytest.approx(np.pi * 313e3 * 0.009 / 1550.0)
        assert wp.delta_mod_pi == pytest.approx(wp.delta % np.pi)


class TestPlateSeries:
    def test_b9_rows(self):
        assert b9(0.356 * np.pi).m == 9

    def test_b36_rows(self):
        assert b36(0.356 * np.pi).m == 36

    def test_b9_half_wave_rank_deficient(self):
        a = tomoq.analyze(b9(np.pi / 2))
        assert a.rank < 4
        assert a.completeness != "complete"

    def test_row_amplitude_composition(self):
        delta, alpha = 0.9, 0.35
        p = plate_series_protocol([[WaveplateSpec(delta, alpha)]], analyzer="H")
        expected = np.array([1.0, 0.0]).conj() @ waveplate_unitary(delta, alpha)
        assert np.abs(p.rows[0].amplitude - expected).max() < 1e-14

    def test_empty_plate_rows_rejected(self):
        with pytest.raises(ValueError):
            plate_series_protocol([])

    def test_two_arm_default_grid(self):
        arm = [WaveplateSpec(1.0, 0.0), WaveplateSpec(0.4, 0.0)]
        p = two_arm_plate_protocol(arm, arm)
        assert p.m == 144 and p.dim == 4

    def test_two_arm_custom_grid(self):
        arm = [WaveplateSpec(1.0, 0.0)]
        ang = np.deg2rad(20.0 * np.arange(9))
        p = two_arm_plate_protocol(arm, arm, ang, ang)
        assert p.m == 81

    def test_two_arm_synchronized(self):
        arm = [WaveplateSpec(1.0, 0.0), WaveplateSpec(0.4, 0.0)]
        p = two_arm_plate_protocol(arm, arm, synchronized=True)
        assert p.m == 12

    def test_b144_modes(self):
        p = b144(1.2, 0.5)
        assert p.m == 144 and p.dim == 4
        assert tomoq.analyze(p).completeness == "complete"
        common = b144(1.2, 0.5, mode="common")
        assert common.m == 144
        assert tomoq.analyze(common).rank < 16


class TestNamedProtocols:
    def test_row_counts(self):
        assert named_protocol("J4").m == 4
        assert named_protocol("kosut8").m == 8
        assert named_protocol("R16").m == 16
        assert named_protocol("J16").m == 16

    def test_unknown(self):
        with pytest.raises(ValueError):
            named_protocol("X9")

    def test_j4_intensities_on_h(self):
        lam = intensities(named_protocol("J4"), density_from_pure([1, 0]))
        assert np.abs(lam - np.array([1.0, 0.0, 0.5, 0.5])).max() < 1e-12

    def test_kosut_pairs_orthogonal(self):
        x = named_protocol("kosut8").amplitude_matrix()
        for j in range(0, 8, 2):
            assert abs(np.vdot(x[j], x[j + 1])) < 1e-12

    def test_j4_not_unity(self):
        uc = unity_check(named_protocol("J4"))
        assert not uc.holds and uc.i0 is None

    def test_kosut_unity(self):
        assert unity_check(named_protocol("kosut8")).holds


class TestProtocolOps:
    def test_intensities_on_white_noise(self):
        p = named_protocol("J4")
        lam = intensities(p, tomoq.named_state("white_noise"))
        expected = np.array([np.trace(op).real / 2 for op in p.operators()])
        assert np.abs(lam - expected).max() < 1e-12

    def test_tetrahedron_intensities_sum(self):
        p = polyhedron_protocol("tetrahedron", 1)
        lam = intensities(p, density_from_pure([1, 0]))
        assert lam.sum() == pytest.approx(2.0, abs=1e-12)

    def test_projector_scaling_identity(self):
        # Lambda^2 = tr(Lambda) Lambda holds for every pure row
        p = b9(0.3 * np.pi)
        for op in p.operators():
            assert np.abs(op @ op - np.trace(op) * op).max() < 1e-12

    def test_intensity_dim_mismatch(self):
        with pytest.raises(ValueError):
            intensities(named_protocol("J4"), tomoq.named_state("white_noise", 2))

    def test_single_row_fails_unity(self):
        p = protocol_from_amplitudes(np.array([[1.0, 0.0]]))
        assert not unity_check(p).holds

    def test_normalize_exposures(self):
        p = polyhedron_protocol("tetrahedron", 1)
        rho = density_from_pure([1, 0])
        pn = normalize_exposures(p, rho, 1e6)
        total = intensities(pn, rho) @ pn.exposures()
        assert total == pytest.approx(1e6, rel=1e-12)
        assert unity_check(pn).holds

    def test_normalize_requires_positive_total(self):
        p = protocol_from_amplitudes(np.array([[1.0, 0.0]]))
        with pytest.raises(ValueError):
            normalize_exposures(p, density_from_pure([0, 1]), 100.0)

    def test_normalize_rejects_zero_target(self):
        p = polyhedron_protocol("tetrahedron", 1)
        with pytest.raises(ValueError):
            normalize_exposures(p, tomoq.named_state("white_noise"), 0.0)

    def test_mixture_rows(self):
        # a mixture row's intensity is the weighted sum of its components
        from tomoq.protocols import Protocol, ProtocolRow

        x1 = np.array([1.0, 0.0], dtype=complex)
        x2 = np.array([0.0, 1.0], dtype=complex)
        row = ProtocolRow(amplitude=None, exposure=1.0, mixture=((0.5, x1), (0.5, x2)))
        p = Protocol(2, (row, ProtocolRow(amplitude=x1)))
        rho = density_from_pure(np.array([0.6, 0.8]))
        lam = intensities(p, rho)
        assert lam[0] == pytest.approx(0.5 * 0.36 + 0.5 * 0.64, abs=1e-12)
        assert lam[1] == pytest.approx(0.36, abs=1e-12)

    def test_mixture_weights_positive(self):
        from tomoq.protocols import ProtocolRow

        with pytest.raises(ValueError):
            ProtocolRow(amplitude=None, mixture=((-0.5, np.array([1.0, 0.0])),))
