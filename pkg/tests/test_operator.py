import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from kreinamo.eig import eig_general, match_indices, richardson
from kreinamo.operator import (BoundarySpec, assemble, assemble_pencil,
                               krein_symmetry_defect, lambda_from_epsilon,
                               pencil_tridiagonal, write_matrix_text)
from kreinamo.profiles import Constant, FourierPerturbed, FourierTerm, Soliton


def shooting_mixed_bc_eigenvalue(l: int, bracket: tuple[float, float]) -> float:
    """Independent oracle: lowest rho with -u'' + l(l+1) u / r^2 = rho u,
    u(0) = 0, u'(1) + l u(1) = 0, via ODE shooting."""

    def bc_residual(rho):
        def rhs(r, y):
            return [y[1], (l * (l + 1) / r**2 - rho) * y[0]]

        r0 = 1e-6
        sol = solve_ivp(rhs, (r0, 1.0), [r0 ** (l + 1), (l + 1) * r0**l],
                        rtol=1e-11, atol=1e-14)
        return sol.y[1, -1] + l * sol.y[0, -1]

    return brentq(bc_residual, *bracket, xtol=1e-10)


class TestDirichletAssembly:
    def test_free_decay_doublet(self):
        # alpha = 0 decouples the blocks: the two smallest eigenvalues are both -pi^2
        op = assemble(Constant(0.0), BoundarySpec.dirichlet(l=0), 200)
        sm = eig_general(op.matrix).smallest_by_magnitude(2)
        assert np.all(np.abs(sm.real + np.pi**2) <= 2e-4 * np.pi**2)
        assert np.all(np.abs(sm.imag) == 0)

    def test_krein_symmetry_exact(self):
        op = assemble(Constant(1.0), BoundarySpec.dirichlet(l=0), 100)
        assert krein_symmetry_defect(op) <= 1e-13

    def test_krein_symmetry_quartic_fourier(self):
        phi = FourierPerturbed(2.0, (FourierTerm("sin", 2, 0.3),))
        op = assemble(phi, BoundarySpec.dirichlet(l=2), 64)
        assert krein_symmetry_defect(op) <= 1e-13

    def test_convergence_order(self):
        # fixed eigenvalue error vs the exact mesh value decreases as O(h^2)
        exact = -np.pi**2 + np.pi  # branch (n=1, +) at alpha0 = 1
        errs = {}
        for M in (100, 200):
            op = assemble(Constant(1.0), BoundarySpec.dirichlet(l=0), M)
            w = eig_general(op.matrix).eigenvalues
            errs[M] = abs(w[np.argmin(np.abs(w - exact))] - exact)
        ratio = errs[100] / errs[200]
        assert 3.5 <= ratio <= 4.5

    def test_preconditions(self):
        with pytest.raises(ValueError):
            assemble(Constant(1.0), BoundarySpec.dirichlet(), 4)
        with pytest.raises(ValueError):
            # [0,1]-domain profile cannot cover a larger box
            assemble(Constant(1.0), BoundarySpec.box(X=10.0), 50)


class TestVacuumAssembly:
    def test_free_decay_dipole_matches_shooting_oracle(self):
        # oracle first: the mixed-BC radial problem for l=1
        rho_oracle = shooting_mixed_bc_eigenvalue(1, (5.0, 15.0))
        assert rho_oracle == pytest.approx(np.pi**2, abs=1e-6)
        op = assemble(Constant(0.0), BoundarySpec.vacuum(l=1), 400)
        w = np.linalg.eigvals(op.u1_block())
        leading = np.sort(w.real)[::-1][0]
        assert leading == pytest.approx(-rho_oracle, abs=2e-4 * rho_oracle)

    def test_block_layout(self):
        op = assemble(Constant(0.5), BoundarySpec.vacuum(l=1), 50)
        n1, n2 = op.block_sizes
        assert (n1, n2) == (51, 50)
        assert op.u1_nodes[-1] == pytest.approx(1.0)
        assert op.matrix.shape == (101, 101)

    def test_vacuum_threshold_is_bessel_root(self):
        # classic result: critical alpha0 for constant profiles at l=1 is the

        # first zero of J_{3/2}
        def max_re(a0):
            op = assemble(Constant(a0), BoundarySpec.vacuum(l=1), 200)
            return float(np.max(eig_general(op.matrix).eigenvalues.real))

        crit = brentq(max_re, 3.0, 6.0, xtol=1e-8)
        assert crit == pytest.approx(4.4934094579, abs=2e-4)

    def test_spectrum_conjugation_closed(self):
        from kreinamo.eig import check_conjugation_closure
        from kreinamo.profiles import field_reversal_profile

        op = assemble(field_reversal_profile(20.0), BoundarySpec.vacuum(l=1), 150)
        w = eig_general(op.matrix).eigenvalues
        assert check_conjugation_closure(w)
        assert np.any(np.abs(w.imag) > 1.0)  # genuinely non-normal regime


class TestPencil:
    def test_empty_box_spectrum(self):
        # zero-amplitude soliton: eps^2 = (n pi / X)^2 + 1/2, lambda = -(n pi / X)^2
        pen = assemble_pencil(+1, Soliton(0.0, 5.0), 0, 10.0, 400)
        eps = eig_general(pen.matrix).eigenvalues
        lam = lambda_from_epsilon(eps)
        lam_max = np.max(lam.real)
        assert abs(lam_max + (np.pi / 10.0) ** 2) <= 1e-4
        # eps comes in +/- pairs
        eps_sorted = np.sort(eps.real)
        assert np.allclose(eps_sorted, -eps_sorted[::-1], atol=1e-10)

    def test_sign_mirror(self):
        plus = eig_general(assemble_pencil(+1, Soliton(1.0, 4.0), 0, 20.0, 200).matrix).eigenvalues
        minus = eig_general(assemble_pencil(-1, Soliton(1.0, 4.0), 0, 20.0, 200).matrix).eigenvalues
        d = np.sort_complex(plus) - np.sort_complex(-minus)
        assert np.max(np.abs(d)) <= 1e-8 * max(1.0, np.max(np.abs(plus)))

    def test_companion_vector_consistency(self):
        pen = assemble_pencil(+1, Soliton(1.0, 4.0), 1, 20.0, 150)
        s = eig_general(pen.matrix, vectors=True)
        M = pen.M
        checked = 0
        for k in range(len(s.eigenvalues)):
            eps = s.eigenvalues[k]
            if abs(eps) < 1e-8:
                continue
            F = s.eigenvectors[:M, k]
            G = s.eigenvectors[M:, k]
            nf = np.linalg.norm(F)
            if nf == 0:
                continue
            assert np.linalg.norm(G - eps * F) <= 1e-8 * max(np.linalg.norm(G), nf)
            checked += 1
        assert checked > 0

    def test_pencil_vs_direct_union(self):
        sol = Soliton(1.0, 6.0)
        lam_union = []
        for sign in (+1, -1):
            pen = assemble_pencil(sign, sol, 0, 30.0, 600)
            eps = eig_general(pen.matrix).eigenvalues
            lam_union.append(lambda_from_epsilon(eps[np.abs(eps) > 1e-6]))
        lam_union = np.concatenate(lam_union)
        direct = eig_general(assemble(sol, BoundarySpec.box(30.0, l=0), 600).matrix).eigenvalues
        sm = direct[np.argsort(np.abs(direct), kind="stable")[:40]]
        worst = max(np.min(np.abs(lam_union - lam)) for lam in sm)
        assert worst <= 1e-3

    def test_preconditions(self):
        with pytest.raises(ValueError):
            assemble_pencil(+1, Soliton(1.0, 12.0), 0, 10.0, 300)  # X <= x0
        with pytest.raises(TypeError):
            assemble_pencil(+1, Constant(1.0), 0, 10.0, 300)
        with pytest.raises(ValueError):
            assemble_pencil(2, Soliton(1.0, 2.0), 0, 10.0, 300)

    def test_tridiagonal_matches_dense(self):
        diag, off, alpha, nodes, h = pencil_tridiagonal(Soliton(1.0, 4.0), 2, 15.0, 64)
        pen = assemble_pencil(+1, Soliton(1.0, 4.0), 2, 15.0, 64)
        t_block = pen.matrix[64:, :64]
        assert np.allclose(np.diag(t_block), diag)
        assert np.allclose(np.diag(t_block, 1), off)


class TestLambdaMap:
    def test_values(self):
        assert lambda_from_epsilon(0.0) == 0.5
        assert lambda_from_epsilon(1.0) == -0.5
        assert lambda_from_epsilon(0.5j) == pytest.approx(0.75)


class TestMatrixDump:
    def test_round_trip(self, tmp_path):
        op = assemble(Constant(1.0), BoundarySpec.dirichlet(l=0), 10)
        path = tmp_path / "m.txt"
        write_matrix_text(op.matrix, path)
        back = np.loadtxt(path)
        assert np.allclose(back, op.matrix, rtol=1e-15)
