import numpy as np
import pytest

from kreinamo import soliton
from kreinamo.operator import lambda_from_epsilon

# Jordan points at X=60, M=1200 (located by this code; regression constants)
X_J = {0: 0.8811, 1: 2.2258, 2: 3.6058, 3: 5.0018}


class TestPencilSpectrum:
    def test_empty_box(self):
        modes = soliton.pencil_spectrum(+1, 0, 5.0, 10.0, 240, vectors=False, a=0.0)
        lam = np.array([m.lam for m in modes])
        assert abs(np.max(lam.real) + (np.pi / 10.0) ** 2) <= 1e-4

    def test_single_localized_overcritical_plus(self):
        # x0=6, X=40: exactly one localized eigenpair with real eps > 0, lam > 0
        modes = soliton.pencil_spectrum(+1, 0, 6.0, 40.0, 800)
        hits = [m for m in modes
                if m.localized and m.lam.real > 0 and m.eps.real > 1e-6
                and abs(m.eps.imag) < 1e-8]
        assert len(hits) == 1
        assert hits[0].eps.real == pytest.approx(0.50237, abs=5e-4)
        assert hits[0].lam.real == pytest.approx(0.24762, abs=5e-4)
        assert hits[0].tail_mass < 0.05

    @pytest.mark.xfail(
        strict=True,
        reason="x0=6 lies beyond the Jordan point x_J(l=0)=0.881, where the "
        "branch has migrated into the mirror channel: the minus pencil then "
        "does carry a localized overcritical eigenpair (the wall-split partner "
        "at lambda=0.2524, X-independent to 1e-6).  The claimed absence only "
        "holds for x0 < x_J, which is exactly the scope of the underlying "
        "analysis; see test_minus_pencil_empty_below_jordan.",
    )
    def test_minus_pencil_no_localized_overcritical_at_x0_6(self):
        modes = soliton.pencil_spectrum(-1, 0, 6.0, 40.0, 800)
        hits = [m for m in modes if m.localized and m.lam.real > 0
                and m.eps.real > 1e-6 and abs(m.eps.imag) < 1e-8]
        assert len(hits) == 0

    def test_minus_pencil_empty_below_jordan(self):
        # the correctly scoped claim: below x_J only the + pencil carries the mode
        l, x0 = 1, 1.5  # x_J(l=1) = 2.226
        plus = soliton.pencil_spectrum(+1, l, x0, 30.0, 600)
        minus = soliton.pencil_spectrum(-1, l, x0, 30.0, 600)

        def hits(modes):
            return [m for m in modes if m.localized and m.lam.real > 0
                    and m.eps.real > 1e-6 and abs(m.eps.imag) < 1e-8]

        assert len(hits(plus)) == 1
        assert len(hits(minus)) == 0

    def test_tail_room_guard(self):
        with pytest.raises(ValueError):
            soliton.pencil_spectrum(+1, 0, 6.0, 10.0, 200)
        # squeezed-box studies opt out explicitly
        modes = soliton.pencil_spectrum(+1, 0, 6.0, 10.0, 200,
                                        vectors=False, require_tail_room=False)
        assert len(modes) == 400

    def test_density_guard(self):
        with pytest.raises(ValueError):
            soliton.pencil_spectrum(+1, 0, 6.0, 40.0, 200)


class TestLocalizedMode:
    def test_matches_companion_route(self):
        m = soliton.localized_mode(0, 6.0, 40.0, 800)
        assert m.eps.real == pytest.approx(0.502374, abs=1e-5)
        assert abs(m.eps.imag) < 1e-10
        assert m.lam == pytest.approx(lambda_from_epsilon(m.eps), abs=1e-14)

    def test_eigenvector_residual(self):
        m = soliton.localized_mode(1, 3.0, 30.0, 600)
        grid = soliton._PencilGrid.build(1, 3.0, 30.0, 600)
        d = grid.diag - m.eps * grid.alpha - m.eps**2
        r = d * m.F
        r[:-1] += -1.0 / grid.h**2 * m.F[1:]
        r[1:] += -1.0 / grid.h**2 * m.F[:-1]
        assert np.linalg.norm(r) <= 1e-7 * np.linalg.norm(m.F) * np.max(np.abs(d))


@pytest.fixture(scope="module")
def branch_l1():
    return soliton.bound_state_branch(1, (0.9, 8.0), X=60.0, M=1200, samples=20)


@pytest.fixture(scope="module")
def xj0():
    return soliton.jordan_crossing(0, 0.3, 2.0, 60.0, 1200)


class TestBoundStateBranch:
    def test_lambda_eps_identity(self, branch_l1):
        for s in branch_l1.samples:
            assert abs(s.lam - (0.5 - s.eps**2)) <= 1e-12

    def test_jordan_point(self, branch_l1):
        assert branch_l1.x_J == pytest.approx(X_J[1], abs=2e-3)

    def test_monotone_increasing_below_jordan(self, branch_l1):
        xs = branch_l1.x0s()
        lams = branch_l1.lambdas().real
        below = xs < branch_l1.x_J
        assert below.sum() >= 3
        assert np.all(np.diff(lams[below]) > 0)

    def test_real_branch(self, branch_l1):
        assert np.max(np.abs(branch_l1.lambdas().imag)) <= 1e-10

    def test_localized_throughout(self, branch_l1):
        assert all(s.localized for s in branch_l1.samples)

    def test_minus_pencil_carries_nothing_below_jordan(self, branch_l1):
        below = {x0: flag for x0, flag in branch_l1.minus_carries_mode.items()
                 if x0 < branch_l1.x_J}
        assert below and not any(below.values())

    def test_csv_rows(self, branch_l1):
        rows = soliton.branch_csv_rows(branch_l1)
        assert len(rows) == len(branch_l1.samples)
        assert list(rows[0]) == soliton.BRANCH_CSV_COLUMNS

    def test_eps_crosses_zero(self, branch_l1):
        eps = np.array([s.eps.real for s in branch_l1.samples])
        assert eps[0] > 0 > eps[-1]
        assert np.all(np.diff(eps) < 0)  # monotone decreasing

    def test_l0_exceeds_l3_at_x0_10(self):
        # the F+ channel mode (principal eps > 0, the cold-start find):
        # the centrifugal term lowers the growth rate
        lam0 = soliton.localized_mode(0, 10.0, 60.0, 1200).lam.real
        lam3 = soliton.localized_mode(3, 10.0, 60.0, 1200).lam.real
        assert lam0 > lam3 > 0

    def test_through_jordan_branch_ordering_reverses(self):
        # the branch continued through eps = 0 migrates into the mirror
        # channel past x_J; there the higher-l branch (with its later x_J)
        # sits closer to its lambda = 1/2 peak and is the larger one
        br0 = soliton.bound_state_branch(0, (0.4, 10.0), X=60.0, M=1200,
                                         samples=14, check_minus_pencil=False)
        br3 = soliton.bound_state_branch(3, (2.7, 10.0), X=60.0, M=1200,
                                         samples=14, check_minus_pencil=False)
        assert br3.samples[-1].lam.real > br0.samples[-1].lam.real > 0

    def test_bad_range(self):
        with pytest.raises(ValueError):
            soliton.bound_state_branch(0, (2.0, 1.0), 30.0, 600)


class TestJordanSystem:
    def test_kernel_exists_at_xj(self, xj0):
        rep = soliton.jordan_system_solve(0, xj0, 60.0, 1200)
        assert rep.kernel_residual <= 1e-4
        assert rep.xi1_residual <= 1e-6

    def test_xi0_is_bs_limit(self, xj0):
        rep = soliton.jordan_system_solve(0, xj0, 60.0, 1200)
        m = soliton.localized_mode(0, xj0 - 0.01, 60.0, 1200)
        F = np.real(m.F)
        overlap = abs(F @ rep.xi0) / (np.linalg.norm(F) * np.linalg.norm(rep.xi0))
        assert overlap >= 0.999

    def test_precondition_failure_away_from_xj(self):
        with pytest.raises(ValueError):
            soliton.jordan_system_solve(0, 5.0, 60.0, 1200)


class TestSuperpotential:
    def test_zero_profile_closed_form(self):
        # T = -d^2 + 1/2: u = sinh(x/sqrt(2)), w = coth(x/sqrt(2))/sqrt(2)
        sp = soliton.superpotential(0, 5.0, 20.0, 400, a=0.0)
        x = sp.nodes[sp.nodes > 0.4]
        w_exact = np.cosh(x / np.sqrt(2)) / np.sinh(x / np.sqrt(2)) / np.sqrt(2)
        assert np.max(np.abs(sp.w_at(x) - w_exact)) <= 1e-9

    def test_asymptote(self):
        sp = soliton.superpotential(0, 5.0, 30.0, 600, a=0.0)
        assert sp.w[-1] == pytest.approx(1 / np.sqrt(2), abs=1e-9)

    def test_riccati_identity_soliton(self):
        sp = soliton.superpotential(0, 6.0, 40.0, 1200)
        assert soliton.riccati_defect(sp) <= 1e-6

    def test_singularity_marked_past_jordan(self):
        # x0=6 > x_J: u has exactly one interior zero (plus the origin marker)
        sp = soliton.superpotential(0, 6.0, 40.0, 1200)
        interior = sp.singular_points[sp.singular_points > 0]
        assert len(interior) == 1
        assert 6.0 < interior[0] < 8.0

    def test_nodeless_below_jordan(self):
        sp = soliton.superpotential(0, 0.5, 20.0, 400)
        assert np.all(sp.singular_points == 0.0)


class TestDiracResidual:
    def test_bs_eigenpair_second_order_floor(self):
        rs = {}
        for M in (600, 1200):
            m = soliton.localized_mode(0, 0.5, 12.0, M)
            sp = soliton.superpotential(0, 0.5, 12.0, M)
            r, unreliable = soliton.dirac_residual(m.eps, m.F, m.nodes, sp, 0.5)
            assert not unreliable
            rs[M] = r
        assert rs[1200] <= 1e-4
        assert 2.5 <= rs[600] / rs[1200] <= 6.0

    @pytest.mark.xfail(
        strict=True,
        reason="At x0=6 > x_J the superpotential has a pole at x=6.88 inside "
        "the mode support (u acquires an interior zero past the Jordan "
        "point), so the centered-difference Dirac residual floors near "
        "3e-3 instead of 1e-4; the factorization's own precondition (w "
        "nodeless on the support) only holds for x0 < x_J.",
    )
    def test_bs_eigenpair_at_x0_6_reaches_1e_minus_4(self):
        m = soliton.localized_mode(0, 6.0, 40.0, 1200)
        sp = soliton.superpotential(0, 6.0, 40.0, 1200)
        r, _ = soliton.dirac_residual(m.eps, m.F, m.nodes, sp, 6.0)
        assert r <= 1e-4

    def test_wrong_eps_detected(self):
        m = soliton.localized_mode(0, 0.5, 12.0, 600)
        sp = soliton.superpotential(0, 0.5, 12.0, 600)
        r, _ = soliton.dirac_residual(m.eps + 0.1, m.F, m.nodes, sp, 0.5)
        assert r >= 0.05

    def test_near_jordan_rejected(self):
        m = soliton.localized_mode(0, 0.5, 12.0, 600)
        sp = soliton.superpotential(0, 0.5, 12.0, 600)
        with pytest.raises(ValueError):
            soliton.dirac_residual(1e-8, m.F, m.nodes, sp, 0.5)


class TestRealityBelowJordan:
    def test_branch_real_below_xj_all_l(self):
        # short sweeps ending just below each x_J; Im lambda at roundoff
        for l, (lo, hi) in ((0, (0.35, 0.8)), (2, (1.7, 3.4))):
            br = soliton.bound_state_branch(l, (lo, hi), X=40.0, M=800,
                                            samples=8, check_minus_pencil=False)
            assert np.max(np.abs(br.lambdas().imag)) <= 1e-10
