"""Dense nonsymmetric eigensolves, extrapolation, and spectrum pairing.

Every spectrum in the toolkit flows through ``eig_general``; operators are
real, so eigenvalues are either real or come in exact complex-conjugate
pairs, and branch tracking leans on that structure.  Problem sizes stay
below ~2000, where a dense QR-type solve is both tractable and far more
robust near defective points than any iterative scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg


class EigenSolveError(RuntimeError):
    """Eigenvalue iteration failed to converge."""


def real_tolerance(lam) -> float:
    """Classification tolerance for 'real eigenvalue': 1e-7 * (1 + |Re lam|).

    Discretization noise produces spurious tiny imaginary parts near
    exceptional points; anything below this is treated as real.
    """
    return 1e-7 * (1.0 + abs(np.real(lam)))


def is_real(lam) -> bool:
    return abs(np.imag(lam)) <= real_tolerance(lam)


@dataclass
class SpectrumSample:
    """All eigenvalues of one assembled matrix, plus provenance metadata."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None  # columns, aligned with eigenvalues
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def smallest_by_magnitude(self, count: int) -> np.ndarray:
        idx = np.argsort(np.abs(self.eigenvalues), kind="stable")[:count]
        return self.eigenvalues[idx]


def eig_general(matrix: np.ndarray, vectors: bool = False, meta: Optional[dict] = None) -> SpectrumSample:
    """All eigenvalues (optionally right eigenvectors) of a real dense matrix.

    Delegates to LAPACK's balanced QR iteration via scipy; eigenvalues are
    returned sorted by (Re, Im) so identical inputs give identical outputs.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"need a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise ValueError(f"non-finite matrix entry at {tuple(bad)}")
    try:
        if vectors:
            w, v = scipy.linalg.eig(a, right=True)
        else:
            w = scipy.linalg.eigvals(a)
            v = None
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenSolveError(f"QR iteration failed: {exc}") from exc
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    if v is not None:
        v = v[:, order]
    return SpectrumSample(eigenvalues=w, eigenvectors=v, meta=dict(meta or {}))


def richardson(value_M: complex, value_2M: complex) -> complex:
    """Second-order Richardson extrapolation: (4 v_2M - v_M) / 3."""
    return (4.0 * value_2M - value_M) / 3.0


def match_indices(previous: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Greedy globally-resolved nearest-neighbor matching, prev -> current.

    Pair candidates are processed in increasing distance (stable matching on
    distance); ties break on smaller real part, then smaller imaginary part.
    Conjugate consistency is enforced: when a strictly complex eigenvalue is
    matched, its conjugate partner (if free on both sides) is matched to the
    conjugate target in the same step.

    `current` may be longer than `previous`; surplus entries stay unmatched.
    Returns an integer array `idx` with idx[i] = matched index in `current`.
    """
    prev = np.asarray(previous, dtype=complex)
    curr = np.asarray(current, dtype=complex)
    n, m = len(prev), len(curr)
    if n > m:
        raise ValueError(f"previous sample larger than current ({n} > {m})")

    dist = np.abs(prev[:, None] - curr[None, :])
    flat = np.argsort(
        np.rec.fromarrays(
            [
                dist.ravel(),
                np.repeat(prev.real, m),
                np.repeat(prev.imag, m),
                np.tile(curr.real, n),
                np.tile(curr.imag, n),
            ]
        ),
        kind="stable",
    )

    def conj_partner(values, i, used):
        target = np.conj(values[i])
        cand = np.where(~used)[0]
        if len(cand) == 0:
            return None
        j = cand[np.argmin(np.abs(values[cand] - target))]
        if abs(values[j] - target) <= 1e-9 * (1.0 + abs(target)) and j != i:
            return int(j)
        return None

    idx = np.full(n, -1, dtype=int)
    used_prev = np.zeros(n, dtype=bool)
    used_curr = np.zeros(m, dtype=bool)
    for flat_k in flat:
        i, j = divmod(int(flat_k), m)
        if used_prev[i] or used_curr[j]:
            continue
        idx[i] = j
        used_prev[i] = True
        used_curr[j] = True
        # conjugate-respecting companion assignment
        if abs(prev[i].imag) > real_tolerance(prev[i]) and abs(curr[j].imag) > real_tolerance(curr[j]):
            i2 = conj_partner(prev, i, used_prev)
            j2 = conj_partner(curr, j, used_curr)
            if i2 is not None and j2 is not None:
                idx[i2] = j2
                used_prev[i2] = True
                used_curr[j2] = True
        if used_prev.all():
            break
    return idx


def pair_spectra(previous: SpectrumSample | np.ndarray, current: SpectrumSample | np.ndarray) -> np.ndarray:
    """Bijective pairing between two equal-length spectra (see match_indices)."""
    prev = previous.eigenvalues if isinstance(previous, SpectrumSample) else np.asarray(previous)
    curr = current.eigenvalues if isinstance(current, SpectrumSample) else np.asarray(current)
    if len(prev) != len(curr):
        raise ValueError(f"pair_spectra needs equal lengths, got {len(prev)} and {len(curr)}")
    return match_indices(prev, curr)


def check_conjugation_closure(eigenvalues: np.ndarray, rtol: float = 1e-9) -> bool:
    """True when the set is closed under complex conjugation within tolerance."""
    w = np.asarray(eigenvalues, dtype=complex)
    if len(w) == 0:
        return True
    scale = np.max(np.abs(w))
    tol = rtol * max(scale, 1.0)
    remaining = list(range(len(w)))
    while remaining:
        i = remaining.pop()
        if abs(w[i].imag) <= tol:
            continue
        target = np.conj(w[i])
        best, best_d = None, np.inf
        for j in remaining:
            d = abs(w[j] - target)
            if d < best_d:
                best, best_d = j, d
        if best is None or best_d > tol:
            return False
        remaining.remove(best)
    return True
