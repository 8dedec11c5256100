"""Finite-difference assembly of the 2x2 dynamo operator and pencil forms.

The l-mode decoupled operator acts on pairs (u1, u2) of radial functions as

    [ -Q[1]    alpha  ] [u1]          Q[a] u = -(a u')' + a l(l+1)/r^2 u
    [ Q[alpha] -Q[1]  ] [u2]

on a uniform grid r_i = i h with second-order flux-form differences; the
half-grid coefficients a((r_i + r_{i+1})/2) keep every Q[a] block exactly
symmetric.  Three boundary closures are supported at the outer radius:

* idealized Dirichlet (u = 0 at r = 1),
* box Dirichlet (u = 0 at r = X),
* physical vacuum: u1' + (l/r) u1 = 0 and u2 = 0 at r = 1, closed by a
  centered ghost node so the u1 boundary value stays an unknown.

Under either Dirichlet closure the block-swap matrix J = [[0, I], [I, 0]]
makes J A exactly symmetric (the discrete fundamental symmetry); the vacuum
closure deliberately breaks it, which is what produces the rich branch
structure of the realistic problem.

``assemble_pencil`` builds the companion linearization of the quadratic
pencil [T -/+ eps*alpha - eps^2] F = 0 with
T = -d^2/dx^2 + l(l+1)/x^2 - alpha^2/2 + 1/2, whose standard eigenvalues
are the auxiliary spectral parameter values eps; lambda = 1/2 - eps^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .profiles import AlphaProfile, Soliton, evaluate

VACUUM = "physical_vacuum"
DIRICHLET = "idealized_dirichlet"
BOX = "box_dirichlet"


@dataclass(frozen=True)
class BoundarySpec:
    """Outer boundary regime plus the angular mode number l."""

    kind: str
    l: int = 0
    X: float = 1.0

    def __post_init__(self):
        if self.kind not in (VACUUM, DIRICHLET, BOX):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.l < 0:
            raise ValueError("angular mode number l must be >= 0")
        if self.X <= 0.0:
            raise ValueError("box length X must be > 0")

    @classmethod
    def vacuum(cls, l: int = 0) -> "BoundarySpec":
        return cls(kind=VACUUM, l=l, X=1.0)

    @classmethod
    def dirichlet(cls, l: int = 0) -> "BoundarySpec":
        return cls(kind=DIRICHLET, l=l, X=1.0)

    @classmethod
    def box(cls, X: float, l: int = 0) -> "BoundarySpec":
        return cls(kind=BOX, l=l, X=X)

    @property
    def domain_length(self) -> float:
        return self.X if self.kind == BOX else 1.0


@dataclass(frozen=True)
class DiscreteOperator:
    """Dense discretization of the 2x2 dynamo operator.

    Layout: the u1 block comes first.  Under Dirichlet regimes both blocks
    live on the M interior nodes (matrix size 2M); under the vacuum closure
    u1 additionally carries the boundary node r = 1 (size 2M + 1).
    """

    matrix: np.ndarray
    h: float
    u1_nodes: np.ndarray
    u2_nodes: np.ndarray
    bc: BoundarySpec
    profile: AlphaProfile

    @property
    def block_sizes(self) -> tuple[int, int]:
        return len(self.u1_nodes), len(self.u2_nodes)

    def u1_block(self) -> np.ndarray:
        n1 = len(self.u1_nodes)
        return self.matrix[:n1, :n1]

    def u2_block(self) -> np.ndarray:
        n1 = len(self.u1_nodes)
        return self.matrix[n1:, n1:]


def _flux_q(alpha_mid: np.ndarray, alpha_nodes: np.ndarray, nodes: np.ndarray, h: float, l: int) -> np.ndarray:
    """Symmetric tridiagonal Q[alpha] on interior nodes, Dirichlet both ends.

    alpha_mid[j] = alpha((j + 1/2) h) for j = 0..M, alpha_nodes = alpha(r_i).
    """
    M = len(nodes)
    diag = (alpha_mid[:-1] + alpha_mid[1:]) / h**2
    if l > 0:
        diag = diag + alpha_nodes * (l * (l + 1)) / nodes**2
    off = -alpha_mid[1:-1] / h**2
    q = np.diag(diag)
    idx = np.arange(M - 1)
    q[idx, idx + 1] = off
    q[idx + 1, idx] = off
    return q


def assemble(profile: AlphaProfile, bc: BoundarySpec, M: int) -> DiscreteOperator:
    """Assemble the dense 2x2 dynamo operator for one boundary regime."""
    if M < 8:
        raise ValueError(f"need at least 8 interior nodes, got M={M}")
    R = bc.domain_length
    if R > profile.domain_end * (1.0 + 1e-12):
        raise ValueError(
            f"profile domain [0, {profile.domain_end}] does not cover the boundary domain [0, {R}]"
        )
    h = R / (M + 1)
    nodes = h * np.arange(1, M + 1)
    mid = h * (np.arange(0, M + 1) + 0.5)
    alpha_nodes = np.asarray(evaluate(profile, nodes))
    alpha_mid = np.asarray(evaluate(profile, mid))
    if not (np.all(np.isfinite(alpha_nodes)) and np.all(np.isfinite(alpha_mid))):
        raise ValueError("profile evaluates to non-finite values on the grid")
    l = bc.l

    q1 = _flux_q(np.ones(M + 1), np.ones(M), nodes, h, l)
    q_alpha = _flux_q(alpha_mid, alpha_nodes, nodes, h, l)

    if bc.kind in (DIRICHLET, BOX):
        a = np.zeros((2 * M, 2 * M))
        a[:M, :M] = -q1
        a[:M, M:] = np.diag(alpha_nodes)
        a[M:, :M] = q_alpha
        a[M:, M:] = -q1
        return DiscreteOperator(a, h, nodes, nodes.copy(), bc, profile)

    # physical vacuum: u1 on M interior nodes plus the boundary node r = 1,
    # u2 on interior nodes with a plain Dirichlet end.
    n1 = M + 1
    u1_nodes = h * np.arange(1, M + 2)  # last node is r = 1 exactly
    a = np.zeros((n1 + M, n1 + M))

    q1_ext = np.zeros((n1, n1))
    q1_ext[:M, :M] = q1
    q1_ext[M - 1, M] = -1.0 / h**2  # interior row M sees the boundary unknown
    # ghost-node closure of u1' + (l/r) u1 = 0 at r = 1:
    # (u_ghost - u_M) / (2h) + l u_{M+1} = 0 eliminates the ghost value from
    # the flux-form row and keeps the scheme second order.
    q1_ext[M, M - 1] = -2.0 / h**2
    q1_ext[M, M] = 2.0 / h**2 + 2.0 * l / h + l * (l + 1)

    a[:n1, :n1] = -q1_ext
    a[np.arange(M), n1 + np.arange(M)] = alpha_nodes  # coupling; u2(1) = 0 drops out

    q_alpha_ext = np.zeros((M, n1))
    q_alpha_ext[:, :M] = q_alpha
    q_alpha_ext[M - 1, M] = -alpha_mid[M] / h**2
    a[n1:, :n1] = q_alpha_ext
    a[n1:, n1:] = -q1

    return DiscreteOperator(a, h, u1_nodes, nodes, bc, profile)


def krein_symmetry_defect(op: DiscreteOperator) -> float:
    """max |J A - (J A)^T| / max |A| for the block-swap symmetry J."""
    if op.bc.kind == VACUUM:
        raise ValueError("the block-swap symmetry only applies to Dirichlet-type closures")
    n1, _ = op.block_sizes
    a = op.matrix
    ja = np.vstack([a[n1:, :], a[:n1, :]])
    return float(np.max(np.abs(ja - ja.T)) / np.max(np.abs(a)))


@dataclass(frozen=True)
class PencilLinearization:
    """First-companion form [[0, I], [T, -/+ diag(alpha)]] of the quadratic pencil."""

    matrix: np.ndarray
    sign: int  # +1 for the F_+ pencil (eps alpha enters with minus), -1 for F_-
    l: int
    X: float
    h: float
    nodes: np.ndarray
    profile: AlphaProfile

    @property
    def M(self) -> int:
        return len(self.nodes)


def pencil_tridiagonal(profile: Soliton, l: int, X: float, M: int):
    """Diagonal/off-diagonal of T plus alpha on the grid, for pencil solves.

    T = -d^2/dx^2 + l(l+1)/x^2 - alpha^2/2 + 1/2 with Dirichlet ends on (0, X).
    Returns (diag, off, alpha_nodes, nodes, h); off has length M-1.
    """
    if M < 8:
        raise ValueError(f"need at least 8 interior nodes, got M={M}")
    h = X / (M + 1)
    nodes = h * np.arange(1, M + 1)
    alpha_nodes = np.asarray(evaluate(profile, nodes))
    diag = 2.0 / h**2 + 0.5 - 0.5 * alpha_nodes**2
    if l > 0:
        diag = diag + (l * (l + 1)) / nodes**2
    off = np.full(M - 1, -1.0 / h**2)
    return diag, off, alpha_nodes, nodes, h


def assemble_pencil(sign: int, profile: Soliton, l: int, X: float, M: int) -> PencilLinearization:
    """Companion linearization whose standard eigenvalues are the pencil's eps."""
    if sign not in (+1, -1):
        raise ValueError("pencil sign must be +1 or -1")
    if not isinstance(profile, Soliton):
        raise TypeError("the pencil reformulation applies to soliton profiles only")
    if profile.a > 0.0 and X <= profile.x0:
        raise ValueError(f"box length X={X} must exceed the soliton peak x0={profile.x0}")
    diag, off, alpha_nodes, nodes, h = pencil_tridiagonal(profile, l, X, M)

    t = np.diag(diag)
    idx = np.arange(M - 1)
    t[idx, idx + 1] = off
    t[idx + 1, idx] = off

    c = np.zeros((2 * M, 2 * M))
    c[:M, M:] = np.eye(M)
    c[M:, :M] = t
    c[M + np.arange(M), M + np.arange(M)] = -sign * alpha_nodes
    return PencilLinearization(c, sign, l, X, h, nodes, profile)


def lambda_from_epsilon(eps: complex) -> complex:
    """Map the auxiliary spectral parameter back: lambda = 1/2 - eps^2."""
    return 0.5 - eps * eps


def write_matrix_text(matrix: np.ndarray, path) -> None:
    """Plain-text dense dump (one row per line, whitespace-separated)."""
    np.savetxt(path, np.asarray(matrix), fmt="%.17g")
