"""Parameter sweeps, branch assembly, and branch-point (EP) machinery.

A sweep eigensolves a one-parameter profile family on a grid, chains the
spectra into branches by nearest-neighbor pairing, and adaptively refines
wherever a branch moves faster than the local spectral spacing.  On top of
the branches sit the detectors: second-order branch points (exceptional
points) are bracketed by bisection on real <-> complex transitions, and
third-order points are located by a 2D coalescence search (coarse grid +
Nelder-Mead on the pairwise-distance objective of the tightest eigenvalue
triple).  The box-length (cutoff) study for the soliton model also lives
here, since it is a parameter sweep in the box size X.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.optimize

from . import eig as _eig
from . import operator as _op
from .parallel import pmap
from .profiles import AlphaProfile
from .soliton import pencil_spectrum


@dataclass
class Branch:
    """One eigenvalue path over the parameter axis."""

    branch_id: int
    params: np.ndarray
    lambdas: np.ndarray
    grid_M: np.ndarray

    @property
    def realness(self) -> np.ndarray:
        return np.array([_eig.is_real(lam) for lam in self.lambdas])


@dataclass
class BranchPoint:
    """Detected coalescence of order 2 (one parameter) or 3 (two parameters)."""

    order: int
    params: tuple
    eigenvalue: complex
    branch_ids: tuple
    residual: float


@dataclass
class SweepResult:
    branches: list[Branch]
    bc: _op.BoundarySpec
    M: int
    family: Callable[[float], AlphaProfile] = field(repr=False, default=None)
    richardson: bool = False
    refinement_exhausted: list = field(default_factory=list)

    def branch(self, branch_id: int) -> Branch:
        return self.branches[branch_id]


BRANCH_CSV_COLUMNS = ["branch_id", "param", "re_lambda", "im_lambda", "is_real", "grid_M"]
BRANCH_POINT_CSV_COLUMNS = ["order", "param_1", "param_2", "re_lambda", "im_lambda", "residual"]


def branch_csv_rows(result: SweepResult) -> list[dict]:
    rows = []
    for b in result.branches:
        for p, lam, m, real in zip(b.params, b.lambdas, b.grid_M, b.realness):
            rows.append(
                {
                    "branch_id": b.branch_id, "param": p,
                    "re_lambda": lam.real, "im_lambda": lam.imag,
                    "is_real": int(real), "grid_M": int(m),
                }
            )
    return rows


def branch_point_csv_rows(points: Sequence[BranchPoint]) -> list[dict]:
    rows = []
    for p in points:
        rows.append(
            {
                "order": p.order,
                "param_1": p.params[0],
                "param_2": p.params[1] if p.order == 3 else "",
                "re_lambda": p.eigenvalue.real, "im_lambda": p.eigenvalue.imag,
                "residual": p.residual,
            }
        )
    return rows


class _SpectrumProvider:
    """Cached eigensolves of a profile family, optionally Richardson-improved."""

    def __init__(self, family, bc, M, richardson=False):
        self.family = family
        self.bc = bc
        self.M = M
        self.richardson = richardson
        self._cache: dict[float, np.ndarray] = {}
        self._fine_cache: dict[float, np.ndarray] = {}

    def full(self, param: float) -> np.ndarray:
        key = float(param)
        if key not in self._cache:
            op = _op.assemble(self.family(key), self.bc, self.M)
            self._cache[key] = _eig.eig_general(op.matrix).eigenvalues
        return self._cache[key]

    def tracked(self, param: float, reference: np.ndarray) -> np.ndarray:
        """Match `reference` (predicted positions) against the spectrum here."""
        w = self.full(param)
        idx = _eig.match_indices(reference, w)
        vals = w[idx]
        if self.richardson:
            key = float(param)
            if key not in self._fine_cache:
                op = _op.assemble(self.family(key), self.bc, 2 * self.M + 1)
                self._fine_cache[key] = _eig.eig_general(op.matrix).eigenvalues
            w_f = self._fine_cache[key]
            idx_f = _eig.match_indices(vals, w_f)
            vals = np.array([_eig.richardson(v, w_f[j]) for v, j in zip(vals, idx_f)])
        return vals

    def prefetch(self, params, workers=None):
        pmap(self.full, [float(p) for p in params], workers)


def sweep(
    family: Callable[[float], AlphaProfile],
    param_range: tuple[float, float],
    steps: int,
    bc: _op.BoundarySpec,
    M: int,
    mode_count: Optional[int] = None,
    jump_frac: float = 0.05,
    max_depth: int = 6,
    richardson: bool = False,
    workers: Optional[int] = None,
) -> SweepResult:
    """Eigensolve the family over the range and chain spectra into branches.

    Wherever a paired eigenvalue moves by more than `jump_frac` of the local
    spectral spacing, a midpoint is inserted, up to `max_depth` levels;
    exhausted intervals are recorded on the result, not fatal.
    """
    if steps < 2:
        raise ValueError("a sweep needs at least 2 parameter steps")
    lo, hi = param_range
    provider = _SpectrumProvider(family, bc, M, richardson)
    base_params = list(np.linspace(lo, hi, steps))
    provider.prefetch(base_params, workers)

    first = provider.full(base_params[0])
    if mode_count is not None:
        order = np.argsort(np.abs(first), kind="stable")[:mode_count]
        tracked0 = first[order]
    else:
        tracked0 = np.sort_complex(first)
    if richardson:
        tracked0 = provider.tracked(base_params[0], tracked0)

    chain: list[tuple[float, np.ndarray]] = [(base_params[0], tracked0)]
    exhausted = []

    # small bootstrap step to establish branch velocities before striding
    boot = base_params[0] + 0.02 * (base_params[1] - base_params[0])
    chain.append((boot, provider.tracked(boot, tracked0)))

    def local_spacing(values: np.ndarray) -> float:
        if len(values) < 2:
            return max(1.0, abs(values[0]))
        d = np.abs(values[:, None] - values[None, :])
        np.fill_diagonal(d, np.inf)
        return float(np.median(np.min(d, axis=1)))

    def predict(p_next: float) -> np.ndarray:
        """Velocity extrapolation keeps branch identity through crossings."""
        p_prev, v_prev = chain[-1]
        if len(chain) >= 2:
            p_pp, v_pp = chain[-2]
            vel = (v_prev - v_pp) / (p_prev - p_pp)
            return v_prev + vel * (p_next - p_prev)
        return v_prev

    def advance(p_next: float, depth: int):
        p_prev, v_prev = chain[-1]
        v_next = provider.tracked(p_next, predict(p_next))
        jump = np.max(np.abs(v_next - predict(p_next)))
        if jump > jump_frac * local_spacing(v_prev):
            if depth < max_depth:
                advance(0.5 * (p_prev + p_next), depth + 1)
                advance(p_next, depth + 1)
                return
            exhausted.append((p_prev, p_next))
        chain.append((p_next, v_next))

    for p in base_params[1:]:
        advance(float(p), 0)

    params = np.array([p for p, _ in chain])
    values = np.vstack([v for _, v in chain])
    n_branches = values.shape[1]
    branches = [
        Branch(
            branch_id=i,
            params=params,
            lambdas=values[:, i],
            grid_M=np.full(len(params), M, dtype=int),
        )
        for i in range(n_branches)
    ]
    return SweepResult(branches=branches, bc=bc, M=M, family=family,
                       richardson=richardson, refinement_exhausted=exhausted)


def detect_branch_points(result: SweepResult, param_tol_frac: float = 1e-6) -> list[BranchPoint]:
    """Second-order branch points from real <-> complex transitions.

    For every interval where a branch's realness flag flips, the conjugate
    partner branch is identified and the transition parameter is bracketed
    by bisection to `param_tol_frac` of the sweep range.  The coalescence
    eigenvalue is reported as the midpoint of the merging pair.
    """
    branches = result.branches
    if not branches:
        return []
    provider = _SpectrumProvider(result.family, result.bc, result.M, result.richardson)
    params = branches[0].params
    prange = params[-1] - params[0]
    tol = param_tol_frac * prange
    values = np.vstack([b.lambdas for b in branches]).T  # rows: params
    real_flags = np.vstack([b.realness for b in branches]).T

    points = []
    seen = set()
    for k in range(len(params) - 1):
        flips = np.where(real_flags[k] != real_flags[k + 1])[0]
        if len(flips) == 0:
            continue
        used = set()
        for i in flips:
            if i in used:
                continue
            # conjugate partner: the other flipped branch closest to conj(lambda_i)
            # on whichever side of the interval is complex
            side = k + 1 if not real_flags[k + 1][i] else k
            target = np.conj(values[side][i])
            partner, best = None, np.inf
            for j in flips:
                if j == i or j in used:
                    continue
                d = abs(values[side][j] - target)
                if d < best:
                    partner, best = j, d
            if partner is None:
                continue
            used.add(i)
            used.add(partner)

            pair_ref = values[k][[i, partner]]
            lo_p, hi_p = params[k], params[k + 1]
            lo_real = bool(real_flags[k][i] and real_flags[k][partner])
            while hi_p - lo_p > tol:
                mid = 0.5 * (lo_p + hi_p)
                w = provider.full(mid)
                idx = _eig.match_indices(pair_ref, w)
                pair_mid = w[idx]
                mid_real = all(_eig.is_real(v) for v in pair_mid)
                if mid_real == lo_real:
                    lo_p = mid
                else:
                    hi_p = mid
            mid = 0.5 * (lo_p + hi_p)
            w = provider.full(mid)
            idx = _eig.match_indices(pair_ref, w)
            pair_mid = w[idx]
            key = (round(mid / max(prange, 1e-300), 8), min(i, partner), max(i, partner))
            if key in seen:
                continue
            seen.add(key)
            points.append(
                BranchPoint(
                    order=2,
                    params=(float(mid),),
                    eigenvalue=complex(np.mean(pair_mid)),
                    branch_ids=(int(i), int(partner)),
                    residual=float(abs(pair_mid[0] - pair_mid[1])),
                )
            )
    points.sort(key=lambda p: p.params[0])
    return points


# -- third-order coalescence search -------------------------------------------

@dataclass
class TripleSearchResult:
    found: bool
    point: BranchPoint
    objective_evals: int


def _triple_objective(w: np.ndarray, candidates: int):
    cand = w[np.argsort(np.abs(w), kind="stable")[:candidates]]
    best_t, best_mean, best_ids = np.inf, None, None
    for ids in combinations(range(len(cand)), 3):
        a, b, c = cand[list(ids)]
        t = abs(a - b) + abs(a - c) + abs(b - c)
        if t < best_t:
            best_t, best_mean, best_ids = t, (a + b + c) / 3.0, ids
    return float(best_t), complex(best_mean), best_ids


def find_triple_point(
    family2: Callable[[float, float], AlphaProfile],
    window: tuple[tuple[float, float], tuple[float, float]],
    bc: _op.BoundarySpec,
    M: int,
    coarse: tuple[int, int] = (13, 31),
    coarse_M: Optional[int] = None,
    candidates: int = 10,
    restarts: int = 3,
    maxiter: int = 300,
    xatol: float = 1e-9,
    residual_scale_frac: float = 1e-2,
    workers: Optional[int] = None,
) -> TripleSearchResult:
    """Locate a third-order coalescence of the two-parameter family.

    Minimizes t(p, q) = d12 + d13 + d23 over the tightest triple among the
    `candidates` smallest-|lambda| eigenvalues.  A coarse grid scan (at the
    cheaper grid size `coarse_M`, anisotropic because the coalescence
    valleys are narrow in the second parameter) seeds Nelder-Mead restarts
    from the best few basins; the objective has cube-root cusps at the
    coalescence, which a simplex method tolerates.  Declares order 3 when
    t < 1e-2 * max(1, |lambda|); otherwise returns the best candidate with
    found=False.
    """
    (p_lo, p_hi), (q_lo, q_hi) = window
    if isinstance(coarse, int):
        coarse = (coarse, coarse)
    evals = 0

    def outside(p, q) -> float:
        d = 0.0
        d += max(0.0, p_lo - p) + max(0.0, p - p_hi)
        d += max(0.0, q_lo - q) + max(0.0, q - q_hi)
        return d

    def objective(p, q, grid_M):
        nonlocal evals
        # hard search-window constraint: the simplex must not wander off
        excess = outside(p, q)
        if excess > 0.0:
            return 1e6 * (1.0 + excess), complex(np.nan), (0, 1, 2)
        evals += 1
        op = _op.assemble(family2(p, q), bc, grid_M)
        w = _eig.eig_general(op.matrix).eigenvalues
        return _triple_objective(w, candidates)

    coarse_M = max(100, M // 2) if coarse_M is None else coarse_M
    ps = np.linspace(p_lo, p_hi, coarse[0])
    qs = np.linspace(q_lo, q_hi, coarse[1])
    grid_pts = [(p, q) for p in ps for q in qs]
    grid_vals = np.array(pmap(lambda pq: objective(*pq, coarse_M)[0], grid_pts, workers))
    order = np.argsort(grid_vals)

    # keep the best few starts, at most one per distinct basin
    starts = []
    for idx in order:
        p0, q0 = grid_pts[int(idx)]
        if all(abs(p0 - p) > 0.1 * (p_hi - p_lo) or abs(q0 - q) > 0.1 * (q_hi - q_lo)
               for p, q in starts):
            starts.append((p0, q0))
        if len(starts) >= restarts:
            break

    dp = (p_hi - p_lo) / (coarse[0] - 1)
    dq = (q_hi - q_lo) / (coarse[1] - 1)
    best = None
    for p0, q0 in starts:
        res = scipy.optimize.minimize(
            lambda x: objective(x[0], x[1], M)[0],
            [p0, q0],
            method="Nelder-Mead",
            options=dict(
                xatol=xatol, fatol=1e-12, maxiter=maxiter,
                initial_simplex=[[p0, q0], [p0 + 0.5 * dp, q0], [p0, q0 + 0.5 * dq]],
            ),
        )
        if best is None or res.fun < best.fun:
            best = res
    t, mean, ids = objective(best.x[0], best.x[1], M)
    threshold = residual_scale_frac * max(1.0, abs(mean))
    point = BranchPoint(
        order=3,
        params=(float(best.x[0]), float(best.x[1])),
        eigenvalue=mean,
        branch_ids=tuple(int(i) for i in ids),
        residual=t,
    )
    return TripleSearchResult(found=t < threshold, point=point, objective_evals=evals)


def triple_objective_at(
    family2: Callable[[float, float], AlphaProfile],
    p: float,
    q: float,
    bc: _op.BoundarySpec,
    M: int,
    candidates: int = 10,
) -> float:
    """The coalescence objective at one parameter point (for refinement checks)."""
    op = _op.assemble(family2(p, q), bc, M)
    w = _eig.eig_general(op.matrix).eigenvalues
    return _triple_objective(w, candidates)[0]


def imag_cusp_profile(
    family2, point: tuple[float, float], direction: tuple[float, float],
    halfwidth: float, steps: int, bc: _op.BoundarySpec, M: int,
    candidates: int = 10,
) -> tuple[np.ndarray, np.ndarray]:
    """max |Im lambda| among the candidate modes along a 1D slice through a point.

    Near a third-order coalescence this profile has a cusp: one-sided slopes
    differ sharply, unlike the smooth variation along ordinary branches.
    """
    ts = np.linspace(-halfwidth, halfwidth, steps)
    out = []
    for t in ts:
        p = point[0] + t * direction[0]
        q = point[1] + t * direction[1]
        op = _op.assemble(family2(p, q), bc, M)
        w = _eig.eig_general(op.matrix).eigenvalues
        cand = w[np.argsort(np.abs(w), kind="stable")[:candidates]]
        out.append(np.max(np.abs(cand.imag)))
    return ts, np.array(out)


# -- cutoff (box-length) study -------------------------------------------------

@dataclass
class CutoffRow:
    n: int
    X: float
    lam: complex
    overlap_ok: Optional[bool]


@dataclass
class CutoffStudy:
    l: int
    x0: float
    X_list: list[float]
    rows: list[CutoffRow]
    exponents: dict
    bs_variation: float

    def lam_table(self) -> dict:
        table = {}
        for r in self.rows:
            table.setdefault(r.n, {})[r.X] = r.lam
        return table


def _grouped_levels(lams: np.ndarray, count: int) -> np.ndarray:
    """Collapse the two-channel doubling: consecutive sorted pairs -> means.

    Every physical level appears twice (once per diagonalized channel),
    split by the exponentially small wall interaction, so after sorting by
    descending real part the 2k and 2k+1 entries belong together.
    """
    real = np.sort(lams.real[np.abs(lams.imag) < 1e-8])[::-1]
    n_pairs = len(real) // 2
    means = 0.5 * (real[0 : 2 * n_pairs : 2] + real[1 : 2 * n_pairs : 2])
    return means[:count]


def cutoff_study(l: int, x0: float, X_list: Sequence[float], mode_count: int = 4,
                 density: float = 20.0, a: float = 1.0,
                 overlap_threshold: float = 0.8) -> CutoffStudy:
    """lambda_n(X) over increasing box lengths plus per-mode power fits.

    Grid density is fixed (M proportional to X).  Mode identity across X is
    by descending-lambda rank after collapsing the channel doubling; it is
    additionally cross-checked by eigenfunction overlap on the common
    subinterval, with mismatches flagged rather than fatal.  n = 1 is the
    bound-state level; its maximum relative variation across X is reported,
    and modes n >= 2 get least-squares exponents from log|lambda| vs log X.
    """
    X_list = sorted(float(X) for X in X_list)
    if len(X_list) < 3:
        raise ValueError("need at least three box lengths for a power fit")
    per_x = {}
    vec_repr = {}
    for X in X_list:
        M = int(round(density * X))
        modes = pencil_spectrum(+1, l, x0, X, M, vectors=True, a=a,
                                require_tail_room=False)
        lams = np.array([m.lam for m in modes])
        levels = _grouped_levels(lams, mode_count)
        per_x[X] = levels
        reps = []
        for lev in levels:
            idx = int(np.argmin([abs(m.lam - lev) for m in modes]))
            reps.append((modes[idx].F, X, M))
        vec_repr[X] = reps

    x_common = np.linspace(0.0, X_list[0], 400)[1:-1]

    def interp_vec(F, X, M):
        nodes = (X / (M + 1)) * np.arange(1, M + 1)
        v = np.interp(x_common, nodes, np.real(F))
        nrm = np.linalg.norm(v)
        return v / nrm if nrm > 0 else v

    rows = []
    for n in range(1, mode_count + 1):
        prev_vec = None
        for X in X_list:
            lam = per_x[X][n - 1]
            F, Xv, Mv = vec_repr[X][n - 1]
            vec = interp_vec(F, Xv, Mv) if F is not None else None
            ok = None
            if prev_vec is not None and vec is not None:
                ok = bool(abs(float(np.dot(prev_vec, vec))) >= overlap_threshold)
            rows.append(CutoffRow(n=n, X=X, lam=complex(lam), overlap_ok=ok))
            prev_vec = vec

    exponents = {}
    logx = np.log(np.array(X_list))
    for n in range(2, mode_count + 1):
        vals = np.array([abs(per_x[X][n - 1]) for X in X_list])
        if np.any(vals <= 0):
            continue
        slope = np.polyfit(logx, np.log(vals), 1)[0]
        exponents[n] = float(slope)

    bs = np.array([per_x[X][0] for X in X_list])
    bs_variation = float(np.max(np.abs(bs - bs[-1])) / abs(bs[-1]))
    return CutoffStudy(l=l, x0=x0, X_list=list(X_list), rows=rows,
                       exponents=exponents, bs_variation=bs_variation)
