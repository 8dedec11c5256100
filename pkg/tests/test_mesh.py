import numpy as np
import pytest
from scipy import integrate, optimize, special

from kreinamo import mesh
from kreinamo.profiles import FourierPerturbed, FourierTerm


class TestBesselRoots:
    def test_l0_roots_are_n_pi(self):
        roots = mesh.bessel_roots(0, 5)
        assert np.allclose(roots, np.pi * np.arange(1, 6), rtol=0, atol=1e-12)

    def test_l1_first_root(self):
        # independent oracle: Brent on scipy's J_{3/2}; also the root of tan x = x
        oracle = optimize.brentq(lambda x: special.jv(1.5, x), 4.0, 5.0, xtol=1e-13)
        root = mesh.bessel_roots(1, 1)[0]
        assert root == pytest.approx(oracle, abs=1e-11)
        assert root == pytest.approx(4.493409457909064, abs=1e-9)

    @pytest.mark.parametrize("l", [0, 1, 2, 3, 5])
    def test_roots_annihilate_bessel(self, l):
        for root in mesh.bessel_roots(l, 4):
            assert abs(special.jv(l + 0.5, root)) < 1e-12


class TestRadialModes:
    @pytest.mark.parametrize("l", [0, 1, 3])
    def test_orthonormality(self, l):
        modes = mesh.radial_modes(l, 3)
        x, w = np.polynomial.legendre.leggauss(80)
        r = 0.5 * (x + 1.0)
        wr = 0.5 * w
        for i, mi in enumerate(modes):
            for j, mj in enumerate(modes):
                val = float(np.dot(wr, mi.values(r) * mj.values(r)))
                assert val == pytest.approx(1.0 if i == j else 0.0, abs=1e-8)

    def test_derivative_matches_fd(self):
        m = mesh.radial_modes(2, 2)[1]
        r = np.linspace(0.1, 0.9, 9)
        h = 1e-6
        fd = (m.values(r + h) - m.values(r - h)) / (2 * h)
        assert np.allclose(m.derivative(r), fd, rtol=1e-7, atol=1e-7)


class TestMeshEigenvalue:
    def test_critical_threshold(self):
        # branch (1, +) crosses zero exactly at alpha0 = pi for l=0
        assert mesh.mesh_eigenvalue(1, +1, 0, np.pi) == pytest.approx(0.0, abs=1e-12)

    def test_negative_branch(self):
        assert mesh.mesh_eigenvalue(1, -1, 0, np.pi) == pytest.approx(-2 * np.pi**2)

    def test_intercept(self):
        assert mesh.mesh_eigenvalue(1, +1, 0, 0.0) == pytest.approx(-np.pi**2)

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            mesh.mesh_eigenvalue(1, 0, 0, 1.0)


class TestDiabolicalPoints:
    def test_opposite_type_example(self):
        pts = mesh.diabolical_points(0, 2)
        dp = next(p for p in pts
                  if {(p.n, p.eps), (p.m, p.delta)} == {(2, +1), (1, -1)})
        assert dp.alpha0_c == pytest.approx(np.pi)
        assert dp.lambda0 == pytest.approx(-2 * np.pi**2)
        assert not dp.same_type
        assert dp.parabola_index == 3

    def test_same_type_example(self):
        pts = mesh.diabolical_points(0, 2)
        dp = next(p for p in pts
                  if {(p.n, p.eps), (p.m, p.delta)} == {(2, +1), (1, +1)})
        assert dp.alpha0_c == pytest.approx(3 * np.pi)
        assert dp.lambda0 == pytest.approx(2 * np.pi**2)
        assert dp.same_type
        assert dp.parabola_index == 1

    def test_same_type_iff_lambda0_positive(self):
        for dp in mesh.diabolical_points(0, 6):
            assert dp.same_type == (dp.lambda0 > 0)

    def test_parabola_identity_enumeration(self):
        # brute force over n, m <= 12: every DP satisfies the parabola identity
        pts = mesh.diabolical_points(0, 12)
        assert len(pts) > 100
        for dp in pts:
            j = dp.parabola_index
            assert dp.lambda0 == pytest.approx((dp.alpha0_c**2 - j**2 * np.pi**2) / 4.0,
                                               rel=1e-12, abs=1e-9)

    def test_window(self):
        pts = mesh.diabolical_points(0, 4, alpha0_window=(0.0, 2 * np.pi))
        assert all(0.0 <= p.alpha0_c <= 2 * np.pi for p in pts)

    def test_branch_equations_hold(self):
        for dp in mesh.diabolical_points(1, 4):
            lam_n = mesh.mesh_eigenvalue(dp.n, dp.eps, 1, dp.alpha0_c)
            lam_m = mesh.mesh_eigenvalue(dp.m, dp.delta, 1, dp.alpha0_c)
            assert lam_n == pytest.approx(dp.lambda0, rel=1e-12)
            assert lam_m == pytest.approx(dp.lambda0, rel=1e-12)


class TestKreinProducts:
    def test_diagonal_constant_phi(self):
        # [B u_n, u_n] with phi = 1 equals 2 rho_n for any l
        for l in (0, 2):
            modes = mesh.radial_modes(l, 3)
            for m in modes:
                v = mesh.krein_product_B(mesh.phi_constant(), (m, +1), (m, +1))
                assert v == pytest.approx(2 * m.rho, rel=1e-9)

    def test_offdiagonal_constant_phi_vanishes(self):
        modes = mesh.radial_modes(0, 3)
        v = mesh.krein_product_B(mesh.phi_constant(), (modes[0], -1), (modes[2], +1))
        assert abs(v) <= 1e-8

    def test_cos_coupling_closed_form(self):
        # phi = cos(4 pi r), modes (3,+),(1,-): exact value 3 pi^2
        modes = mesh.radial_modes(0, 3)
        v = mesh.krein_product_B(mesh.phi_cos(2), (modes[0], -1), (modes[2], +1))
        assert v == pytest.approx(3 * np.pi**2, rel=1e-10)

    def test_symmetry_in_modes(self):
        phi = mesh.phi_sin(2)
        modes = mesh.radial_modes(0, 4)
        a = mesh.krein_product_B(phi, (modes[1], -1), (modes[3], +1))
        b = mesh.krein_product_B(phi, (modes[3], +1), (modes[1], -1))
        assert a == pytest.approx(b, rel=1e-10, abs=1e-12)

    def test_against_adaptive_quadrature(self):
        # independent oracle: scipy adaptive quadrature of the same integrand
        l = 0
        modes = mesh.radial_modes(l, 3)
        um, un = modes[0], modes[2]
        eps, delta = +1, -1
        cross = eps * delta * un.sqrt_rho * um.sqrt_rho

        def integrand(r):
            return np.cos(4 * np.pi * r) * (
                cross * um.values(r) * un.values(r)
                + um.derivative(r) * un.derivative(r)
            )

        oracle, err = integrate.quad(integrand, 0.0, 1.0, limit=200)
        v = mesh.krein_product_B(mesh.phi_cos(2), (um, delta), (un, eps))
        assert v == pytest.approx(oracle, abs=max(1e-9, 10 * err))

    def test_l_mismatch_rejected(self):
        a = mesh.radial_modes(0, 1)[0]
        b = mesh.radial_modes(1, 1)[0]
        with pytest.raises(ValueError):
            mesh.krein_product_B(mesh.phi_constant(), (a, 1), (b, 1))


class TestUnfolding:
    def test_constant_phi_shifts_along_mesh(self):
        # phi = 1 at DP (2,+),(1,-): lambda1 roots are {+sqrt(rho_2), -sqrt(rho_1)}
        dp = next(p for p in mesh.diabolical_points(0, 2)
                  if {(p.n, p.eps), (p.m, p.delta)} == {(2, +1), (1, -1)})
        unf = mesh.dp_unfold(dp, mesh.phi_constant(), 0.05)
        roots = sorted(unf.lambda1, key=lambda z: z.real)
        assert roots[0] == pytest.approx(-np.pi, rel=1e-9)
        assert roots[1] == pytest.approx(2 * np.pi, rel=1e-9)
        assert not unf.complex_split

    def test_same_type_always_real(self):
        phis = [mesh.phi_constant(), mesh.phi_cos(1), mesh.phi_cos(2),
                mesh.phi_sin(1), mesh.phi_sin(2)]
        for dp in mesh.diabolical_points(0, 5):
            if not dp.same_type:
                continue
            for phi in phis:
                unf = mesh.dp_unfold(dp, phi, 0.05)
                assert abs(unf.lambda1[0].imag) < 1e-10
                assert abs(unf.lambda1[1].imag) < 1e-10

    def test_opposite_type_never_non_conjugate(self):
        phis = [mesh.phi_constant(), mesh.phi_sin(1), mesh.phi_sin(2)]
        for dp in mesh.diabolical_points(0, 5):
            if dp.same_type:
                continue
            for phi in phis:
                unf = mesh.dp_unfold(dp, phi, 0.05)
                r1, r2 = unf.lambda1
                both_real = abs(r1.imag) < 1e-10 and abs(r2.imag) < 1e-10
                conj = abs(r1 - np.conj(r2)) < 1e-10
                assert both_real or conj

    def test_sine_complex_bubble_matches_observation(self):
        # opposite-type DP (2,+),(1,-) under sin(2 pi r): conjugate pair whose
        # first-order splitting matches the discretized operator within 10%
        dp = next(p for p in mesh.diabolical_points(0, 2)
                  if {(p.n, p.eps), (p.m, p.delta)} == {(2, +1), (1, -1)})
        phi = mesh.phi_sin(1)
        unf = mesh.dp_unfold(dp, phi, 0.05)
        assert unf.complex_split
        pred = 0.05 * unf.split1
        obs = mesh.observed_splitting(dp, phi, 0.05, M=241)
        assert mesh.split_magnitudes_match(pred, obs, rel=0.10)


class TestResonanceSelectivity:
    def test_cosine_coupling_rule_enumeration(self):
        # off-diagonal products reduce to trig integrals: cos(2 pi k r) couples
        # opposite type iff n+m = 2k and same type iff |n-m| = 2k
        for k in (1, 2):
            phi = mesh.phi_cos(k)
            for n in range(1, 8):
                for m in range(1, 8):
                    modes = mesh.radial_modes(0, max(n, m))
                    for eps, delta in ((+1, -1), (+1, +1)):
                        if (n, eps) == (m, delta):
                            continue
                        v = mesh.krein_product_B(phi, (modes[m - 1], delta),
                                                 (modes[n - 1], eps))
                        if eps != delta:
                            expected_nonzero = (n + m == 2 * k)
                        else:
                            expected_nonzero = (abs(n - m) == 2 * k)
                        if expected_nonzero:
                            assert abs(v) > 1e-3
                        else:
                            assert abs(v) <= 1e-8

    def test_linearity_at_small_amplitude(self):
        # observed displacement / amplitude approaches |lambda1| splitting
        dp = next(p for p in mesh.diabolical_points(0, 2)
                  if {(p.n, p.eps), (p.m, p.delta)} == {(2, +1), (1, -1)})
        phi = mesh.phi_sin(1)
        unf = mesh.dp_unfold(dp, phi, 0.01)
        obs = mesh.observed_splitting(dp, phi, 0.01, M=241)
        assert abs(obs) / 0.01 == pytest.approx(abs(unf.split1), rel=0.05)

    def test_scan_rows_schema(self):
        rows = mesh.resonance_scan(3, mesh.phi_cos(1), 0.05, M=121,
                                   alpha0_window=(0.0, 7.0))
        assert rows
        for row in rows:
            assert list(row) == mesh.RESONANCE_COLUMNS
        js = [r["j"] for r in rows]
        assert js == sorted(js)

    def test_scan_requires_l0(self):
        with pytest.raises(ValueError):
            mesh.resonance_scan(3, mesh.phi_cos(1), 0.05, l=1)
