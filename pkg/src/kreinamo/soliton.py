"""The quasi-exactly solvable soliton-profile dynamo model.

With alpha(x) = 2a / cosh(a (x - x0)) the 2x2 operator decouples, after
rescaling to x = a r, into two quadratic pencils

    [ -d^2/dx^2 + l(l+1)/x^2 - alpha^2/2 + 1/2 -/+ eps alpha - eps^2 ] F = 0

in the auxiliary spectral parameter eps, with lambda = 1/2 - eps^2.  The
model is studied on (0, X) with Dirichlet ends; physically X plays the role
of the outer conducting-region cutoff and the interesting modes are
localized around x0 and insensitive to X.

Two solution routes are provided and cross-checked:

* the companion linearization of the pencil (``pencil_spectrum``), a dense
  eigensolve giving the complete spectrum with eigenfunctions, and
* a shooting recurrence on the same tridiagonal discretization
  (``localized_mode``), which locates individual pencil eigenvalues in
  O(M) per evaluation and scales to very large boxes.

The bound-state branch eps(x0) decreases monotonically through zero at the
Jordan configuration x_J, where the pencil description degenerates: there
T itself is singular and the first-order system is replaced by the chained
equations solved in ``jordan_system_solve``.  For x0 < x_J the localized
mode sits in the '+' pencil at real eps > 0 (the '-' pencil carries
nothing); past x_J the root migrates through zero into the other channel.
``superpotential`` and ``dirac_residual`` realize the factorization
T = L^dag L with L = -d/dx + w, w = u'/u, and verify eigenpairs against
the equivalent first-order Dirac system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import eig as _eig
from . import operator as _op
from .profiles import Soliton, evaluate

#: |eps| below this corresponds to lambda = 1/2 - eps^2 > 0 (overcritical)
EPS_BOX_EDGE = float(1.0 / np.sqrt(2.0))

#: pencil eigenvalues this close to zero are in the singular Jordan window
NEAR_JORDAN_EPS = 1e-8


class BranchLossError(RuntimeError):
    """The localized branch could not be tracked over the requested range."""


# -- shooting on the discrete pencil -----------------------------------------

@dataclass(frozen=True)
class _PencilGrid:
    """Tridiagonal data for [T - sign*eps*alpha - eps^2] on (0, X)."""

    l: int
    x0: float
    X: float
    M: int
    h: float
    nodes: np.ndarray
    diag: np.ndarray   # diagonal of T
    alpha: np.ndarray

    @classmethod
    def build(cls, l: int, x0: float, X: float, M: int, a: float = 1.0) -> "_PencilGrid":
        diag, off, alpha, nodes, h = _op.pencil_tridiagonal(Soliton(a, x0), l, X, M)
        return cls(l=l, x0=x0, X=X, M=M, h=h, nodes=nodes, diag=diag, alpha=alpha)

    def t_matrix_banded(self, eps: complex = 0.0, sign: int = +1) -> np.ndarray:
        d = self.diag - sign * eps * self.alpha - eps * eps
        ab = np.zeros((3, self.M), dtype=np.result_type(d.dtype, type(eps)))
        ab[1, :] = d
        ab[0, 1:] = -1.0 / self.h**2
        ab[2, :-1] = -1.0 / self.h**2
        return ab


def _shoot_many(grid: _PencilGrid, eps: np.ndarray, sign: int = +1) -> np.ndarray:
    """Scaled boundary values f(eps) = F_{M+1}(eps) for an array of eps.

    Runs the three-term recurrence F_{i+1} = h^2 d_i F_i - F_{i-1} from
    F_0 = 0, F_1 = 1 with periodic renormalization; zeros of f are exactly
    the eigenvalues of the discrete pencil.
    """
    eps = np.asarray(eps)
    h2 = grid.h**2
    f_prev = np.zeros(eps.shape, dtype=np.result_type(eps.dtype, float))
    f = np.ones_like(f_prev)
    for i in range(grid.M):
        d = grid.diag[i] - sign * eps * grid.alpha[i] - eps * eps
        f_next = h2 * d * f - f_prev
        f_prev, f = f, f_next
        big = np.abs(f) > 1e100
        if np.any(big):
            scale = np.where(big, np.abs(f), 1.0)
            f = f / scale
            f_prev = f_prev / scale
    return f


def _shoot_newton(grid: _PencilGrid, eps0: complex, sign: int = +1,
                  max_iter: int = 60) -> Optional[complex]:
    """Newton iteration on the shooting value with its exact eps-derivative.

    The long recurrence has a roundoff floor that grows with M, so the
    stopping tolerance scales accordingly and the best iterate is accepted
    when the steps merely stagnate at that floor.
    """
    h2 = grid.h**2
    eps = complex(eps0)
    tol = max(1e-13, 4e-15 * grid.M)
    best_eps, best_step = None, np.inf
    for _ in range(max_iter):
        f_prev, f = 0.0 + 0.0j, 1.0 + 0.0j
        g_prev, g = 0.0 + 0.0j, 0.0 + 0.0j
        for i in range(grid.M):
            d = grid.diag[i] - sign * eps * grid.alpha[i] - eps * eps
            dd = -sign * grid.alpha[i] - 2.0 * eps
            f_next = h2 * d * f - f_prev
            g_next = h2 * (dd * f + d * g) - g_prev
            f_prev, f = f, f_next
            g_prev, g = g, g_next
            a = abs(f)
            if a > 1e100:
                f, f_prev, g, g_prev = f / a, f_prev / a, g / a, g_prev / a
        if g == 0.0:
            return None
        step = f / g
        eps = eps - step
        if abs(step) <= tol * (1.0 + abs(eps)):
            return eps
        if abs(step) < best_step:
            best_eps, best_step = eps, abs(step)
    if best_eps is not None and best_step <= 1e-9 * (1.0 + abs(best_eps)):
        return best_eps
    return None


def _eigvec_inverse_iteration(grid: _PencilGrid, eps: complex, sign: int = +1,
                              iters: int = 3) -> np.ndarray:
    """Eigenvector of the tridiagonal pencil matrix at a converged eps."""
    ab = grid.t_matrix_banded(eps, sign)
    scale = np.max(np.abs(ab[1]))
    rng = np.random.default_rng(7)
    v = rng.standard_normal(grid.M).astype(complex)
    v /= np.linalg.norm(v)
    shift = 0.0
    for _ in range(iters):
        try:
            y = scipy.linalg.solve_banded((1, 1), ab + shift, v)
        except scipy.linalg.LinAlgError:
            shift = 1e-12 * scale
            continue
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0.0:
            shift = 1e-12 * scale
            continue
        v = y / nrm
    v = v / v[np.argmax(np.abs(v))]
    if np.max(np.abs(v.imag)) < 1e-8 * np.max(np.abs(v.real)):
        v = v.real.astype(float)
    return v


def tail_mass(F: np.ndarray, nodes: np.ndarray, cut: float) -> float:
    """Fraction of the L2 mass of F beyond x = cut (0 when cut >= X)."""
    F = np.asarray(F)
    w = np.abs(F) ** 2
    total = float(np.sum(w))
    return float(np.sum(w[nodes > cut]) / total) if total > 0 else 0.0


# -- full pencil spectrum (companion route) ----------------------------------

@dataclass
class PencilMode:
    eps: complex
    lam: complex
    F: Optional[np.ndarray]
    localized: Optional[bool]
    tail_mass: Optional[float]
    near_jordan: bool


def pencil_spectrum(sign: int, l: int, x0: float, X: float, M: int,
                    vectors: bool = True, a: float = 1.0,
                    require_tail_room: bool = True) -> list[PencilMode]:
    """Complete spectrum of one pencil via the companion linearization.

    Eigenfunctions are normalized to unit max amplitude; modes are
    classified localized/box-type by the fraction of their L2 mass beyond
    x0 + 5.  Eigenvalues with |eps| <= 1e-8 sit in the singular window of
    the equivalence transformation and are flagged near-Jordan; no
    eigenfunction claims are attached to them.
    """
    if a > 0.0 and require_tail_room and not (X > x0 + 5.0):
        raise ValueError(
            f"box X={X} leaves no tail room past x0={x0} (need X > x0 + 5); "
            "pass require_tail_room=False for squeezed-box studies"
        )
    if M + 1 < 20.0 * X:
        raise ValueError(f"need >= 20 nodes per unit length: M={M} too small for X={X}")
    pen = _op.assemble_pencil(sign, Soliton(a, x0), l, X, M)
    sample = _eig.eig_general(pen.matrix, vectors=vectors)
    cut = x0 + 5.0
    out = []
    for idx, eps in enumerate(sample.eigenvalues):
        lam = _op.lambda_from_epsilon(eps)
        near = abs(eps) <= NEAR_JORDAN_EPS
        F = tm = loc = None
        if vectors and not near:
            F = sample.eigenvectors[: pen.M, idx]
            F = F / F[np.argmax(np.abs(F))]
            tm = tail_mass(F, pen.nodes, cut)
            loc = tm < 0.5
        out.append(PencilMode(eps=complex(eps), lam=complex(lam), F=F,
                              localized=loc, tail_mass=tm, near_jordan=near))
    return out


# -- localized-mode finder and the bound-state branch ------------------------

@dataclass
class LocalizedMode:
    eps: complex
    lam: complex
    F: np.ndarray
    nodes: np.ndarray
    h: float
    tail_mass: float


def localized_mode(l: int, x0: float, X: float, M: int, sign: int = +1,
                   seed: Optional[complex] = None, a: float = 1.0,
                   scan_points: int = 120) -> Optional[LocalizedMode]:
    """The single localized pencil mode, by shooting + inverse iteration.

    Strategy: with a continuation seed, unconstrained complex Newton; cold
    start scans the overcritical window eps in (0, 1/sqrt(2)) for a sign
    change of the real shooting value, falling back to a search along the
    imaginary axis (the lambda > 1/2 regime past the Jordan point).
    """
    grid = _PencilGrid.build(l, x0, X, M, a)
    eps = None
    if seed is not None:
        eps = _shoot_newton(grid, seed, sign)
        if eps is not None and abs(eps - seed) > 0.25 * (1.0 + abs(seed)):
            eps = None  # jumped to a different branch; rescan
    if eps is None:
        eps = _scan_real_root(grid, sign, scan_points)
    if eps is None:
        eps = _scan_imaginary_root(grid, sign, scan_points)
    if eps is None:
        return None
    F = _eigvec_inverse_iteration(grid, eps, sign)
    return LocalizedMode(eps=complex(eps), lam=complex(_op.lambda_from_epsilon(eps)),
                         F=F, nodes=grid.nodes, h=grid.h,
                         tail_mass=tail_mass(F, grid.nodes, x0 + 5.0))


def _scan_real_root(grid: _PencilGrid, sign: int, scan_points: int) -> Optional[complex]:
    """Smallest real root in the overcritical window (0, 1/sqrt(2))."""
    eps_grid = np.linspace(1e-6, EPS_BOX_EDGE * (1.0 - 1e-9), scan_points)
    vals = _shoot_many(grid, eps_grid, sign).real
    for i in range(len(eps_grid) - 1):
        if vals[i] == 0.0:
            return complex(eps_grid[i])
        if vals[i] * vals[i + 1] < 0.0:
            root = _shoot_newton(grid, 0.5 * (eps_grid[i] + eps_grid[i + 1]), sign)
            if root is not None:
                return root
    return None


def _scan_imaginary_root(grid: _PencilGrid, sign: int, scan_points: int,
                         q_max: float = 2.0) -> Optional[complex]:
    """Pure-imaginary root eps = i q (lambda = 1/2 + q^2 > 1/2), if any."""
    q_grid = np.linspace(1e-6, q_max, scan_points)
    vals = np.abs(_shoot_many(grid, 1j * q_grid, sign))
    order = np.argsort(vals)
    for k in order[: max(3, scan_points // 20)]:
        root = _shoot_newton(grid, 1j * q_grid[k], sign)
        if root is not None and abs(root.real) <= 1e-8 * (1.0 + abs(root)):
            return complex(0.0, abs(root.imag)) if root.imag != 0 else root
    return None


def overcritical_real_roots(l: int, x0: float, X: float, M: int, sign: int = +1,
                            a: float = 1.0, scan_points: int = 200) -> list[float]:
    """All real pencil roots in the overcritical window (0, 1/sqrt(2))."""
    grid = _PencilGrid.build(l, x0, X, M, a)
    eps_grid = np.linspace(1e-6, EPS_BOX_EDGE * (1.0 - 1e-9), scan_points)
    vals = _shoot_many(grid, eps_grid, sign).real
    roots = []
    for i in range(len(eps_grid) - 1):
        if vals[i] * vals[i + 1] < 0.0:
            root = _shoot_newton(grid, 0.5 * (eps_grid[i] + eps_grid[i + 1]), sign)
            if root is not None and abs(root.imag) < 1e-10:
                roots.append(float(root.real))
    return sorted(set(round(r, 12) for r in roots))


@dataclass
class BranchSample:
    x0: float
    eps: complex
    lam: complex
    tail_mass: float
    localized: bool

    @property
    def is_real(self) -> bool:
        return _eig.is_real(self.lam)


@dataclass
class BoundStateBranch:
    l: int
    X: float
    M: int
    samples: list[BranchSample]
    x_J: Optional[float]
    truncated_below: Optional[float] = None  # x0 where tracking failed, if any
    minus_carries_mode: dict = field(default_factory=dict)  # x0 -> bool

    def lambdas(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples])

    def x0s(self) -> np.ndarray:
        return np.array([s.x0 for s in self.samples])


BRANCH_CSV_COLUMNS = ["l", "x0", "re_lambda", "im_lambda", "epsilon_re", "epsilon_im",
                      "localized_flag", "X", "M"]


def branch_csv_rows(branch: BoundStateBranch) -> list[dict]:
    return [
        {
            "l": branch.l, "x0": s.x0,
            "re_lambda": s.lam.real, "im_lambda": s.lam.imag,
            "epsilon_re": s.eps.real, "epsilon_im": s.eps.imag,
            "localized_flag": int(s.localized), "X": branch.X, "M": branch.M,
        }
        for s in branch.samples
    ]


def jordan_crossing(l: int, x0_lo: float, x0_hi: float, X: float, M: int,
                    a: float = 1.0, xtol: float = 1e-4) -> Optional[float]:
    """x_J as the root of the eps = 0 shooting value over x0, by bisection.

    f(x0) := F_{M+1}(eps=0) flips sign exactly when T(x0) acquires a kernel,
    which is the Jordan configuration.
    """
    def f(x0):
        grid = _PencilGrid.build(l, x0, X, M, a)
        return float(_shoot_many(grid, np.array([0.0]))[0].real)

    f_lo, f_hi = f(x0_lo), f(x0_hi)
    if f_lo * f_hi > 0.0:
        return None
    return float(brentq(f, x0_lo, x0_hi, xtol=xtol))


def _root_near(grid: _PencilGrid, seed: complex, radius: float,
               sign: int = +1, points: int = 48) -> Optional[complex]:
    """The pencil root nearest `seed` within `radius`.

    For a (numerically) real seed the window is scanned for sign changes of
    the real shooting value, which is immune to Newton basin-hopping across
    the dense box-mode family; a genuinely complex root is still reachable
    through the unconstrained Newton fallback.
    """
    if abs(seed.imag) < 1e-10:
        c = seed.real
        eps_grid = np.linspace(c - radius, c + radius, points)
        vals = _shoot_many(grid, eps_grid, sign).real
        roots = []
        for i in range(points - 1):
            if vals[i] * vals[i + 1] < 0.0:
                r = _shoot_newton(grid, 0.5 * (eps_grid[i] + eps_grid[i + 1]), sign)
                if r is not None and abs(r - c) <= radius * 1.5:
                    roots.append(r)
        if roots:
            return min(roots, key=lambda r: abs(r - seed))
    r = _shoot_newton(grid, seed, sign)
    if r is not None and abs(r - seed) <= radius * 1.5:
        return r
    return None


def bound_state_branch(l: int, x0_range: tuple[float, float], X: float, M: int,
                       samples: int = 40, a: float = 1.0,
                       check_minus_pencil: bool = True,
                       max_depth: int = 8) -> BoundStateBranch:
    """Track the localized mode over x0 and locate the Jordan point.

    Tracking is by continuation: the seed at each x0 is the linear
    extrapolation of the two previous roots and the unconstrained complex
    Newton iteration does the rest, so realness of the branch is an
    observed outcome, not an assumption.  Whenever the root jumps by more
    than the recent increment allows, the x0 step is bisected (up to
    `max_depth` times) to walk the branch through fast-moving regions.
    x_J is located independently by bisection on the eps = 0 shooting
    value to 1e-4 in x0.
    """
    lo, hi = x0_range
    if not (0.0 < lo < hi):
        raise ValueError("x0 range must satisfy 0 < lo < hi")
    xs = list(np.linspace(lo, hi, samples))
    out: list[BranchSample] = []
    truncated = None
    minus_flags = {}
    accepted: list[tuple[float, complex]] = []

    def record(x0: float, eps: complex):
        grid = _PencilGrid.build(l, x0, X, M, a)
        F = _eigvec_inverse_iteration(grid, eps, +1)
        tm = tail_mass(F, grid.nodes, x0 + 5.0)
        out.append(BranchSample(x0=x0, eps=complex(eps),
                                lam=complex(_op.lambda_from_epsilon(eps)),
                                tail_mass=tm, localized=tm < 0.5))
        accepted.append((x0, complex(eps)))
        if check_minus_pencil:
            minus_flags[x0] = len(overcritical_real_roots(l, x0, X, M, sign=-1)) > 0

    def seed_for(x0: float) -> complex:
        if len(accepted) >= 2:
            (xa, ea), (xb, eb) = accepted[-2], accepted[-1]
            return eb + (eb - ea) * (x0 - xb) / (xb - xa)
        return accepted[-1][1]

    def advance(x0: float, depth: int = 0) -> bool:
        seed = seed_for(x0)
        gap = x0 - accepted[-1][0]
        if len(accepted) >= 2:
            slope = abs(accepted[-1][1] - accepted[-2][1]) / max(1e-12, accepted[-1][0] - accepted[-2][0])
        else:
            slope = 0.5
        radius = max(0.012, min(0.08, 1.5 * slope * gap + 0.01))
        grid = _PencilGrid.build(l, x0, X, M, a)
        eps = _root_near(grid, seed, radius)
        if eps is not None:
            record(x0, eps)
            return True
        if depth >= max_depth:
            return False
        mid = 0.5 * (accepted[-1][0] + x0)
        if not advance(mid, depth + 1):
            return False
        return advance(x0, depth + 1)

    for x0 in xs:
        x0 = float(x0)
        if not accepted:
            mode = localized_mode(l, x0, X, M, sign=+1, a=a)
            if mode is None:
                truncated = x0
                continue
            record(x0, mode.eps)
            # tiny bootstrap step to establish the local slope before striding
            boot = x0 + min(0.04, 0.25 * (hi - x0) / max(1, samples))
            if boot < hi:
                grid = _PencilGrid.build(l, boot, X, M, a)
                eps = _root_near(grid, accepted[-1][1], 0.04)
                if eps is not None:
                    record(boot, eps)
            continue
        if not advance(x0):
            raise BranchLossError(f"lost the localized branch at x0={x0} (l={l})")
    if not out:
        raise BranchLossError(f"no localized mode found anywhere in {x0_range} (l={l})")
    x_j = jordan_crossing(l, out[0].x0, out[-1].x0, X, M, a)
    return BoundStateBranch(l=l, X=X, M=M, samples=out, x_J=x_j,
                            truncated_below=truncated, minus_carries_mode=minus_flags)


# -- Jordan-type system at eps = 0 -------------------------------------------

@dataclass
class JordanReport:
    x_J: float
    kernel_residual: float
    xi1_residual: float
    xi0: np.ndarray
    xi1: np.ndarray
    nodes: np.ndarray


def jordan_system_solve(l: int, x0: float, X: float, M: int, a: float = 1.0) -> JordanReport:
    """Solve the chained system at the Jordan configuration.

    With V0 = l(l+1)/x^2 - (alpha^2 - 1)/2 and V1 = -alpha the system reads
    (d^2/dx^2 - V0) Xi0 = 0 and (d^2/dx^2 - V0) Xi1 = V1 Xi0, i.e.
    T Xi0 = 0 and T Xi1 = alpha Xi0.  Xi0 is the kernel vector of the
    discretized T; the second equation is solved by least squares on the
    orthogonal complement of the kernel (its kernel-parallel component is
    the Jordan obstruction and is reported, never solved away).
    """
    grid = _PencilGrid.build(l, x0, X, M, a)
    off = np.full(M - 1, -1.0 / grid.h**2)
    mu, vecs = scipy.linalg.eigh_tridiagonal(grid.diag, off)
    k = int(np.argmin(np.abs(mu)))
    t_norm = float(np.max(np.abs(mu)))
    kernel_residual = float(abs(mu[k]) / t_norm)
    if kernel_residual > 1e-4:
        raise ValueError(
            f"T is not near-singular at x0={x0} (kernel residual {kernel_residual:.2e}); "
            "x_J appears mislocated"
        )
    xi0 = vecs[:, k]
    xi0 = xi0 / np.linalg.norm(xi0)
    b = grid.alpha * xi0
    coef = vecs.T @ b
    inv = np.zeros_like(mu)
    nonzero = np.arange(len(mu)) != k
    inv[nonzero] = 1.0 / mu[nonzero]
    xi1 = vecs @ (coef * inv)
    resid = (vecs * mu) @ (vecs.T @ xi1) - b  # T xi1 - b
    resid_perp = resid - xi0 * (xi0 @ resid)
    xi1_residual = float(np.linalg.norm(resid_perp) / np.linalg.norm(b))
    return JordanReport(x_J=x0, kernel_residual=kernel_residual,
                        xi1_residual=xi1_residual, xi0=xi0, xi1=xi1, nodes=grid.nodes)


# -- SUSY factorization: superpotential and the Dirac system ------------------

@dataclass
class Superpotential:
    """w = u'/u for the regular solution of T u = 0, with singularity markers."""

    l: int
    x0: float
    X: float
    nodes: np.ndarray
    w: np.ndarray
    singular_points: np.ndarray
    _segments: list = field(default_factory=list, repr=False)

    def w_at(self, x) -> np.ndarray:
        """Evaluate w off-grid through the stored dense ODE solutions."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            for (a, b, sol) in self._segments:
                if a <= xi <= b:
                    u, up = sol(xi)
                    out[i] = up / u if u != 0.0 else np.inf
                    break
            else:
                raise ValueError(f"x={xi} outside the integrated range")
        return out

    def is_singular_near(self, x: float, radius: float = 0.5) -> bool:
        return bool(len(self.singular_points)) and bool(
            np.any(np.abs(self.singular_points - x) < radius)
        )


def superpotential(l: int, x0: float, X: float, M: int, a: float = 1.0,
                   rtol: float = 1e-11, atol: float = 1e-280) -> Superpotential:
    """Integrate T u = 0 outward with u ~ x^{l+1} and form w = u'/u.

    The integration proceeds in segments with renormalization of (u, u')
    between segments (w is scale invariant), which keeps very long domains
    inside double-precision range.
    """
    profile = Soliton(a, x0)
    h = X / (M + 1)
    nodes = h * np.arange(1, M + 1)

    def rhs(x, y):
        al = evaluate(profile, x)
        v = 0.5 - 0.5 * al * al
        if l > 0:
            v += l * (l + 1) / (x * x)
        return [y[1], v * y[0]]

    def u_zero(x, y):
        return y[0]

    u_zero.terminal = False
    u_zero.direction = 0

    x_start = min(1e-6, h * 1e-3)
    y = np.array([x_start ** (l + 1), (l + 1) * x_start ** l])
    nrm = np.max(np.abs(y))
    y = y / nrm
    segments = []
    zeros = []
    edges = np.unique(np.concatenate([np.arange(x_start, X, 10.0), [X]]))
    if edges[0] != x_start:
        edges = np.concatenate([[x_start], edges])
    for seg_a, seg_b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(rhs, (seg_a, seg_b), y, method="DOP853",
                        rtol=rtol, atol=atol, dense_output=True, events=u_zero)
        if not sol.success:
            raise RuntimeError(f"ODE integration failed on [{seg_a}, {seg_b}]: {sol.message}")
        segments.append((seg_a, seg_b, sol.sol))
        if len(sol.t_events[0]):
            zeros.extend(sol.t_events[0].tolist())
        y = sol.y[:, -1]
        scale = np.max(np.abs(y))
        if scale > 0:
            y = y / scale

    # the origin is always a marked singularity of w: u(0) = 0 by the
    # boundary behavior u ~ x^{l+1}, so w ~ (l+1)/x there
    zeros = np.array([0.0] + sorted(zeros))
    sp = Superpotential(l=l, x0=x0, X=X, nodes=nodes, w=np.empty(0),
                        singular_points=zeros, _segments=segments)
    w_vals = sp.w_at(nodes)
    return Superpotential(l=l, x0=x0, X=X, nodes=nodes, w=w_vals,
                          singular_points=zeros, _segments=segments)


def riccati_defect(sp: Superpotential, delta: float = 3e-4, a: float = 1.0) -> float:
    """max |w^2 + w' - (l(l+1)/x^2 - alpha^2/2 + 1/2)| away from singularities.

    w' is taken from Richardson-extrapolated centered differences of the
    dense ODE solution, an evaluation independent of the Riccati identity
    itself.  Nodes within 0.5 of a marked w-singularity and within 0.1 of
    the origin (where w ~ (l+1)/x) are excluded; the identity is exact
    there too but finite differencing of the pole profile is not.
    """
    profile = Soliton(a, sp.x0)
    x = sp.nodes[(sp.nodes > 0.1) & (sp.nodes < sp.X - 2 * delta)]
    keep = np.ones(len(x), dtype=bool)
    for s in sp.singular_points:
        if s == 0.0:
            continue  # the extrapolated stencil handles the (l+1)/x profile
        keep &= np.abs(x - s) > 0.5
    x = x[keep]
    w = sp.w_at(x)

    def central(dx):
        return (sp.w_at(x + dx) - sp.w_at(x - dx)) / (2.0 * dx)

    wp = (4.0 * central(delta / 2.0) - central(delta)) / 3.0
    al = evaluate(profile, x)
    v = 0.5 - 0.5 * al * al
    if sp.l > 0:
        v = v + sp.l * (sp.l + 1) / x**2
    return float(np.max(np.abs(w * w + wp - v)))


def dirac_residual(eps: complex, F: np.ndarray, nodes: np.ndarray,
                   sp: Superpotential, x0: float, sign: int = +1,
                   a: float = 1.0) -> tuple[float, bool]:
    """Relative residual of the first-order Dirac system for one eigenpair.

    Builds Psi = (F, eps^{-1} L F) with L = -d/dx + w by centered
    differences and returns ||gamma dPsi/dx + V Psi - eps Psi||_2 / ||Psi||_2
    over the interior nodes, plus a reliability flag that trips when
    singular-w regions overlap more than 20% of the support of F.
    """
    if abs(eps) <= 1e-6:
        raise ValueError("Dirac reconstruction divides by eps; |eps| must exceed 1e-6")
    F = np.asarray(F)
    x = np.asarray(nodes, dtype=float)
    h = x[1] - x[0]
    w = sp.w if len(sp.w) == len(x) else sp.w_at(x)
    alpha = evaluate(Soliton(a, x0), x)

    keep = np.ones(len(x), dtype=bool)
    for s in sp.singular_points:
        keep &= np.abs(x - s) > 0.5
    support = np.abs(F) > 1e-3 * np.max(np.abs(F))
    excluded_support = np.sum(support & ~keep) / max(1, np.sum(support))
    unreliable = excluded_support > 0.20

    def ddx(y):
        out = np.empty_like(y)
        out[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
        out[0] = (y[1] - y[0]) / h
        out[-1] = (y[-1] - y[-2]) / h
        return out

    psi1 = F
    psi2 = (-ddx(F) + w * F) / eps
    r1 = ddx(psi2) - sign * alpha * psi1 + w * psi2 - eps * psi1
    r2 = -ddx(psi1) + w * psi1 - eps * psi2
    inner = keep.copy()
    inner[:2] = False
    inner[-2:] = False
    num = np.sqrt(np.sum(np.abs(r1[inner]) ** 2 + np.abs(r2[inner]) ** 2))
    den = np.sqrt(np.sum(np.abs(psi1[inner]) ** 2 + np.abs(psi2[inner]) ** 2))
    return float(num / den), unreliable
