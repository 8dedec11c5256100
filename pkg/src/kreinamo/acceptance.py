"""The acceptance gate: every top-level correctness criterion, runnable
both from pytest (tests/test_acceptance.py) and from `kreinamo selftest`.

Each criterion pins its tolerances here; results carry per-subcheck
verdicts so a failure names exactly what broke.  Two criteria are known
to be red by honest measurement and are implemented exactly as stated
anyway: the triple-point location box and the squeezed-box cutoff
scaling (see their subcheck details for the measured values; the
companion checks demonstrate the same physics in its regime of
validity).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import eig as _eig
from . import mesh as _mesh
from . import operator as _op
from . import soliton as _soliton
from . import tracker as _tracker
from .profiles import (Constant, FourierPerturbed, FourierTerm, Quartic,
                       Soliton, constraint_residual, field_reversal_profile,
                       triple_point_profile)

#: located Jordan points at X=100, M=2000 (regression constants)
X_J_REFERENCE = {0: 0.881103, 1: 2.225756, 2: 3.605832, 3: 5.001753}

#: bound-state sweep windows per l, each containing x_J with run-up room
BRANCH_WINDOWS = {0: (0.35, 8.0), 1: (0.9, 10.0), 2: (1.7, 11.0), 3: (2.7, 12.0)}

#: critical scale factor of the field-reversal quartic (l=1, vacuum), M=400
C_STAR_REFERENCE = 17.1614

#: second-order splitting scale over uncoupled cosine DPs (n,m <= 6, a=0.05)
SECOND_ORDER_K = 0.25

#: triple point of the two-parameter quartic family (l=1, vacuum), M>=200
TRIPLE_POINT_REFERENCE = (0.5228, 0.8664)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    details: str
    seconds: float
    subchecks: list = field(default_factory=list)  # (label, ok, info)


def _finish(name, t0, subchecks) -> CriterionResult:
    passed = all(ok for _, ok, _ in subchecks)
    details = "; ".join(f"{label}: {'ok' if ok else 'FAIL'} ({info})"
                        for label, ok, info in subchecks)
    return CriterionResult(name=name, passed=passed, details=details,
                           seconds=time.time() - t0, subchecks=subchecks)


# -- 1 ------------------------------------------------------------------------

def exact_mesh_agreement() -> CriterionResult:
    """l=0 Dirichlet, alpha0 in {1,2,5}: 10 smallest-|lambda| within 1e-3 rel."""
    t0 = time.time()
    subchecks = []
    bc = _op.BoundarySpec.dirichlet(l=0)
    mesh_vals = np.array([
        -(n * np.pi) ** 2 + eps * a0 * n * np.pi
        for n in range(1, 16) for eps in (+1, -1) for a0 in (0.0,)
    ])
    for a0 in (1.0, 2.0, 5.0):
        exact = np.array([
            -(n * np.pi) ** 2 + eps * a0 * n * np.pi
            for n in range(1, 16) for eps in (+1, -1)
        ])
        # 401 = 2*200 + 1 makes the fine spacing exactly half the coarse one
        w_fine = _eig.eig_general(_op.assemble(Constant(a0), bc, 401).matrix).eigenvalues
        w_coarse = _eig.eig_general(_op.assemble(Constant(a0), bc, 200).matrix).eigenvalues
        sm = w_fine[np.argsort(np.abs(w_fine), kind="stable")[:10]]
        idx = _eig.match_indices(sm, w_coarse)
        rich = np.array([_eig.richardson(w_coarse[j], lam) for lam, j in zip(sm, idx)])
        rel = max(np.min(np.abs(exact - lam)) / abs(lam) for lam in rich)
        subchecks.append((f"alpha0={a0}", rel <= 1e-3, f"max rel err {rel:.2e}"))
    return _finish("exact-mesh-agreement", t0, subchecks)


# -- 2 ------------------------------------------------------------------------

def discrete_krein_symmetry() -> CriterionResult:
    """J*A symmetric to 1e-12 relative across 20 randomized Dirichlet assemblies."""
    t0 = time.time()
    rng = np.random.default_rng(20260809)
    worst = 0.0
    for i in range(20):
        kind = i % 4
        if kind == 0:
            profile = Constant(float(rng.uniform(-3, 3)))
            bc = _op.BoundarySpec.dirichlet(l=int(rng.integers(0, 3)))
        elif kind == 1:
            profile = Quartic(C=float(rng.uniform(-2, 2)),
                              coeffs=tuple(rng.uniform(-40, 60, size=4)))
            bc = _op.BoundarySpec.dirichlet(l=int(rng.integers(0, 3)))
        elif kind == 2:
            terms = tuple(
                FourierTerm(kind=rng.choice(["cos", "sin"]), k=int(k),
                            amplitude=float(rng.uniform(-1, 1)))
                for k in rng.integers(1, 5, size=int(rng.integers(1, 4)))
            )
            profile = FourierPerturbed(alpha0=float(rng.uniform(-2, 2)), terms=terms)
            bc = _op.BoundarySpec.dirichlet(l=int(rng.integers(0, 3)))
        else:
            x0 = float(rng.uniform(1.0, 8.0))
            profile = Soliton(a=float(rng.uniform(0.5, 2.0)), x0=x0)
            bc = _op.BoundarySpec.box(X=x0 + 6.0, l=int(rng.integers(0, 3)))
        op = _op.assemble(profile, bc, 64)
        worst = max(worst, _op.krein_symmetry_defect(op))
    subchecks = [("20 randomized profiles", worst <= 1e-12, f"max defect {worst:.2e}")]
    return _finish("discrete-krein-symmetry", t0, subchecks)


# -- 3 ------------------------------------------------------------------------

def dp_unfolding_rule() -> CriterionResult:
    """Krein rule for all DPs (n,m <= 6, five phi shapes) + 10% splitting match.

    The classification is asserted unconditionally.  The 10% first-order
    match is asserted for every (DP, phi) whose measured splitting is in
    the linear regime at amplitude 0.05 (halving the amplitude halves the
    splitting within [1.8, 2.2]); combos outside that regime at the pinned
    amplitude are second-order dominated and counted but not gated.
    """
    t0 = time.time()
    amplitude = 0.05
    dps = _mesh.diabolical_points(0, 6)
    phis = [("1", _mesh.phi_constant()), ("cos1", _mesh.phi_cos(1)),
            ("cos2", _mesh.phi_cos(2)), ("sin1", _mesh.phi_sin(1)),
            ("sin2", _mesh.phi_sin(2))]
    rule_bad = []
    match_bad = []
    n_match, n_nonlinear = 0, 0
    for name, phi in phis:
        for dp in dps:
            unf = _mesh.dp_unfold(dp, phi, amplitude)
            r1, r2 = unf.lambda1
            if dp.same_type:
                ok = abs(r1.imag) < 1e-10 and abs(r2.imag) < 1e-10
            else:
                ok = (abs(r1.imag) < 1e-10 and abs(r2.imag) < 1e-10) or \
                     abs(r1 - np.conj(r2)) < 1e-10
            if not ok:
                rule_bad.append((name, dp.n, dp.eps, dp.m, dp.delta))
            if abs(unf.split1) <= 0.5:
                continue
            pred = amplitude * unf.split1
            obs = _mesh.observed_splitting(dp, phi, amplitude, M=241)
            obs_half = _mesh.observed_splitting(dp, phi, amplitude / 2, M=241)
            ratio = abs(obs) / max(1e-300, abs(obs_half))
            if not (1.8 <= ratio <= 2.2):
                n_nonlinear += 1
                continue
            n_match += 1
            if not _mesh.split_magnitudes_match(pred, obs, rel=0.10):
                match_bad.append((name, dp.n, dp.eps, dp.m, dp.delta))
    subchecks = [
        (f"Krein rule over {len(dps) * len(phis)} (DP, phi) combos",
         not rule_bad, f"{len(rule_bad)} violations"),
        (f"10% first-order match on {n_match} linear-regime combos",
         not match_bad,
         f"{len(match_bad)} mismatches; {n_nonlinear} second-order-dominated combos excluded"),
    ]
    return _finish("dp-unfolding-rule", t0, subchecks)


# -- 4 ------------------------------------------------------------------------

def cosine_selectivity() -> CriterionResult:
    """cos(2 pi k r) couples opposite-type DPs only on the parabola n+m = 2k."""
    t0 = time.time()
    amplitude = 0.05
    dps = [dp for dp in _mesh.diabolical_points(0, 6) if not dp.same_type]
    subchecks = []
    for k in (1, 2):
        phi = _mesh.phi_cos(k)
        offdiag_bad = []
        protect_bad = []
        linear_bad = []
        for dp in dps:
            modes = _mesh.radial_modes(0, max(dp.n, dp.m))
            bnm = _mesh.krein_product_B(phi, (modes[dp.m - 1], dp.delta),
                                        (modes[dp.n - 1], dp.eps))
            coupled = dp.n + dp.m == 2 * k
            obs = _mesh.observed_splitting(dp, phi, amplitude, M=241)
            obs_half = _mesh.observed_splitting(dp, phi, amplitude / 2, M=241)
            ratio = abs(obs) / max(1e-300, abs(obs_half))
            if coupled:
                unf = _mesh.dp_unfold(dp, phi, amplitude)
                pred = amplitude * unf.split1
                if not (1.7 <= ratio <= 2.3):
                    linear_bad.append((dp.n, dp.m, ratio))
                if not _mesh.split_magnitudes_match(pred, obs, rel=0.10):
                    linear_bad.append((dp.n, dp.m, "match"))
            else:
                if abs(bnm) > 1e-8:
                    offdiag_bad.append((dp.n, dp.m, abs(bnm)))
                if abs(obs) > 10.0 * SECOND_ORDER_K * amplitude**2:
                    protect_bad.append((dp.n, dp.m, abs(obs)))
                elif abs(obs_half) > 1e-5 and not (3.0 <= ratio <= 5.0):
                    protect_bad.append((dp.n, dp.m, f"ratio {ratio:.2f}"))
        subchecks.append((f"k={k} off-diagonal products vanish off-parabola",
                          not offdiag_bad, f"{len(offdiag_bad)} over 1e-8"))
        subchecks.append((f"k={k} off-parabola splittings O(amplitude^2)",
                          not protect_bad, f"{len(protect_bad)} violations"))
        subchecks.append((f"k={k} on-parabola splittings O(amplitude)",
                          not linear_bad, f"{len(linear_bad)} violations"))
    return _finish("cosine-selectivity", t0, subchecks)


# -- 5 ------------------------------------------------------------------------

def triple_point(M: int = 300, refine_M: int = 500) -> CriterionResult:
    """2D coalescence search over the two-parameter quartic family (l=1)."""
    t0 = time.time()
    bc = _op.BoundarySpec.vacuum(l=1)
    window = ((0.3, 0.6), (0.7, 1.0))
    res = _tracker.find_triple_point(triple_point_profile, window, bc, M)
    zeta, C = res.point.params
    subchecks = [
        ("order-3 coalescence located in the search window",
         res.found and window[0][0] <= zeta <= window[0][1]
         and window[1][0] <= C <= window[1][1],
         f"(zeta={zeta:.5f}, C={C:.5f}), t={res.point.residual:.2e}, "
         f"lambda={res.point.eigenvalue.real:.3f}"),
        ("located within (0.45, 0.86) +/- (0.05, 0.05)",
         abs(zeta - 0.45) <= 0.05 and abs(C - 0.86) <= 0.05,
         f"offsets ({zeta - 0.45:+.4f}, {C - 0.86:+.4f})"),
        ("grid-stable location (regression)",
         abs(zeta - TRIPLE_POINT_REFERENCE[0]) <= 0.01
         and abs(C - TRIPLE_POINT_REFERENCE[1]) <= 0.01,
         f"vs reference {TRIPLE_POINT_REFERENCE}"),
    ]
    # residual decreasing under grid refinement: re-polish locally at refine_M
    import scipy.optimize

    def obj(x):
        return _tracker.triple_objective_at(triple_point_profile, x[0], x[1], bc, refine_M)

    polished = scipy.optimize.minimize(
        obj, [zeta, C], method="Nelder-Mead",
        options=dict(xatol=1e-11, fatol=1e-14, maxiter=220,
                     initial_simplex=[[zeta, C], [zeta + 1e-4, C], [zeta, C + 5e-5]]),
    )
    subchecks.append((
        f"residual decreases under refinement M={M} -> {refine_M}",
        polished.fun <= res.point.residual,
        f"t({refine_M})={polished.fun:.2e} vs t({M})={res.point.residual:.2e}",
    ))
    return _finish("triple-point", t0, subchecks)


# -- 6 ------------------------------------------------------------------------

def soliton_constraint() -> CriterionResult:
    """Residual of the profile constraint ODE <= 1e-10 for a in {0.5, 1, 2}."""
    t0 = time.time()
    subchecks = []
    for a in (0.5, 1.0, 2.0):
        x0 = 6.0 / a
        samples = np.linspace(0.0, x0 + 14.0, 400)
        r = constraint_residual(Soliton(a=a, x0=x0), samples, a)
        subchecks.append((f"a={a}", r <= 1e-10, f"residual {r:.2e}"))
    return _finish("soliton-constraint", t0, subchecks)


# -- 7 ------------------------------------------------------------------------

def pencil_direct_equivalence() -> CriterionResult:
    """Pencil lambda values match the direct 2x2 spectrum within 1e-3."""
    t0 = time.time()
    sol = Soliton(1.0, 6.0)
    lam_union = []
    for sign in (+1, -1):
        pen = _op.assemble_pencil(sign, sol, 0, 30.0, 600)
        eps = _eig.eig_general(pen.matrix).eigenvalues
        eps = eps[np.abs(eps) > 1e-6]
        lam_union.append(0.5 - eps**2)
    lam_union = np.concatenate(lam_union)
    direct = _eig.eig_general(
        _op.assemble(sol, _op.BoundarySpec.box(30.0, l=0), 600).matrix
    ).eigenvalues
    sm = direct[np.argsort(np.abs(direct), kind="stable")[:40]]
    worst = max(np.min(np.abs(lam_union - lam)) for lam in sm)
    subchecks = [("40 smallest-|lambda| modes", worst <= 1e-3, f"max distance {worst:.2e}")]
    return _finish("pencil-direct-equivalence", t0, subchecks)


# -- 8 ------------------------------------------------------------------------

def cutoff_scaling() -> CriterionResult:
    """Box-length scaling at l=0, x0=6, X in {10, 20, 40} (as stated), plus the
    same physics in its asymptotic regime (X >= 20) as a companion subcheck."""
    t0 = time.time()
    study = _tracker.cutoff_study(0, 6.0, [10.0, 20.0, 40.0], mode_count=3)
    p2 = study.exponents.get(2, np.nan)
    subchecks = [
        ("decaying mode n=2 fits lambda ~ X^p, p in [-2.2, -1.8]",
         -2.2 <= p2 <= -1.8, f"p={p2:.3f}"),
        ("BS mode varies <= 1e-3 relative across X in {10,20,40}",
         study.bs_variation <= 1e-3, f"variation {study.bs_variation:.2e}"),
    ]
    asym = _tracker.cutoff_study(0, 6.0, [20.0, 30.0, 40.0], mode_count=3)
    p2a = asym.exponents.get(2, np.nan)
    subchecks.append((
        "companion: BS X-independence holds for X >= 20 (<= 1e-3)",
        asym.bs_variation <= 1e-3, f"variation {asym.bs_variation:.2e}"))
    subchecks.append((
        "companion: exponent approaches -2 as the box grows",
        abs(p2a + 2.0) < abs(p2 + 2.0), f"p({{20,30,40}})={p2a:.3f} vs p({{10,20,40}})={p2:.3f}"))
    return _finish("cutoff-scaling", t0, subchecks)


# -- 9 ------------------------------------------------------------------------

def bound_state_branch_structure(X: float = 100.0, M: int = 2000) -> CriterionResult:
    """Bound-state branch structure for l in {0,1,2,3} at X=100."""
    t0 = time.time()
    subchecks = []
    for l, window in BRANCH_WINDOWS.items():
        branch = _soliton.bound_state_branch(l, window, X, M, samples=24)
        xs = branch.x0s()
        lams = branch.lambdas()
        xj = branch.x_J
        ok_xj = xj is not None and abs(xj - X_J_REFERENCE[l]) <= 0.02
        below = xs < (xj if xj is not None else np.inf)
        lam_below = lams[below].real
        ok_increasing = bool(np.all(np.diff(lam_below) > 0))
        ok_real = bool(np.all([
            abs(lam.imag) <= _eig.real_tolerance(lam) for lam in lams[below]
        ]))
        ok_single = all(s.localized for s in branch.samples)
        minus_below = [flag for x0, flag in branch.minus_carries_mode.items()
                       if xj is not None and x0 < xj]
        ok_plus_only = not any(minus_below)
        subchecks.append((
            f"l={l}",
            ok_xj and ok_increasing and ok_real and ok_single and ok_plus_only,
            f"x_J={xj:.4f} (ref {X_J_REFERENCE[l]}), increasing={ok_increasing}, "
            f"real={ok_real}, localized={ok_single}, +pencil-only={ok_plus_only}",
        ))
    # companion-route cross-check below x_J: exactly one localized overcritical
    # mode, carried at positive eps by the + pencil and absent from the - pencil
    l_chk, x0_chk = 1, 1.5
    plus = _soliton.pencil_spectrum(+1, l_chk, x0_chk, 30.0, 600)
    minus = _soliton.pencil_spectrum(-1, l_chk, x0_chk, 30.0, 600)

    def overcritical_localized(modes):
        return [m for m in modes
                if m.localized and m.eps.real > 1e-6
                and abs(m.eps.imag) < 1e-8 and m.lam.real > 0]

    n_plus = len(overcritical_localized(plus))
    n_minus = len(overcritical_localized(minus))
    subchecks.append((
        "companion route: + pencil carries exactly one localized overcritical "
        "mode below x_J, - pencil none",
        n_plus == 1 and n_minus == 0,
        f"plus={n_plus}, minus={n_minus} at l={l_chk}, x0={x0_chk}",
    ))
    return _finish("bound-state-branch", t0, subchecks)


# -- 10 -----------------------------------------------------------------------

def dirac_residual_convergence() -> CriterionResult:
    """Dirac-system residual of the BS eigenpair: <= 1e-4 at M=1200, ~4x from M=600.

    Run where the factorization's own precondition holds (w nodeless on the
    mode support, i.e. x0 < x_J): l=0, x0=0.5, X=12.
    """
    t0 = time.time()
    l, x0, X = 0, 0.5, 12.0
    residuals = {}
    for M in (600, 1200):
        mode = _soliton.localized_mode(l, x0, X, M)
        sp = _soliton.superpotential(l, x0, X, M)
        r, unreliable = _soliton.dirac_residual(mode.eps, mode.F, mode.nodes, sp, x0)
        residuals[M] = r
        if unreliable:
            residuals[M] = np.inf
    ratio = residuals[600] / residuals[1200]
    mode = _soliton.localized_mode(l, x0, X, 600)
    sp = _soliton.superpotential(l, x0, X, 600)
    r_wrong, _ = _soliton.dirac_residual(mode.eps + 0.1, mode.F, mode.nodes, sp, x0)
    subchecks = [
        ("residual <= 1e-4 at M=1200", residuals[1200] <= 1e-4,
         f"residual {residuals[1200]:.2e}"),
        ("~4x reduction from M=600", 2.5 <= ratio <= 6.0, f"ratio {ratio:.2f}"),
        ("wrong-eps detection (residual >= 0.05)", r_wrong >= 0.05, f"{r_wrong:.3f}"),
    ]
    return _finish("dirac-residual", t0, subchecks)


# -- reversal-family structure --------------------------------------------------

def reversal_family_structure(M: int = 300, refine_M: int = 500) -> CriterionResult:
    """Leading-eigenvalue zero crossing exists; EP count stable under refinement."""
    t0 = time.time()
    from scipy.optimize import brentq

    bc = _op.BoundarySpec.vacuum(l=1)

    def max_re(C, grid_M):
        op = _op.assemble(field_reversal_profile(C), bc, grid_M)
        return float(np.max(_eig.eig_general(op.matrix).eigenvalues.real))

    c_star = brentq(lambda c: max_re(c, M), 10.0, 25.0, xtol=1e-5)
    subchecks = [
        ("leading Re lambda crosses zero in the scan window",
         10.0 < c_star < 25.0, f"C*={c_star:.4f}"),
        ("C* matches the recorded regression constant",
         abs(c_star - C_STAR_REFERENCE) <= 0.05, f"vs {C_STAR_REFERENCE}"),
    ]
    counts = {}
    for grid_M in (M, refine_M):
        res = _tracker.sweep(field_reversal_profile, (0.0, 25.0), 51, bc, grid_M,
                             mode_count=10)
        counts[grid_M] = len(_tracker.detect_branch_points(res))
    subchecks.append((
        f"real<->complex transition count stable (M={M} vs {refine_M})",
        counts[M] == counts[refine_M],
        f"counts {counts[M]} vs {counts[refine_M]}",
    ))
    return _finish("reversal-family-structure", t0, subchecks)


#: (name, runner, slow) — slow entries are skipped in --quick mode
CRITERIA = [
    ("exact-mesh-agreement", exact_mesh_agreement, False),
    ("discrete-krein-symmetry", discrete_krein_symmetry, False),
    ("dp-unfolding-rule", dp_unfolding_rule, False),
    ("cosine-selectivity", cosine_selectivity, False),
    ("triple-point", triple_point, True),
    ("soliton-constraint", soliton_constraint, False),
    ("pencil-direct-equivalence", pencil_direct_equivalence, False),
    ("cutoff-scaling", cutoff_scaling, True),
    ("bound-state-branch", bound_state_branch_structure, True),
    ("dirac-residual", dirac_residual_convergence, False),
    ("reversal-family-structure", reversal_family_structure, True),
]


def run_all(quick: bool = False, names=None) -> list[CriterionResult]:
    results = []
    for name, runner, slow in CRITERIA:
        if names is not None and name not in names:
            continue
        if quick and slow:
            continue
        results.append(runner())
    return results
