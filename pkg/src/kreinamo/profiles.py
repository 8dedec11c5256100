"""Radial alpha-effect profiles.

The scalar profile alpha(r) encodes the net electromotive effect of
small-scale helical turbulence.  It enters the dynamo operator both as a
multiplicative coupling and through the divergence-form term Q[alpha], so
every profile here supports exact evaluation together with analytic first
and second derivatives.

Four families are provided:

* ``Constant``          -- alpha(r) = alpha0
* ``Quartic``           -- alpha(r) = C * (c0 + c2 r^2 + c3 r^3 + c4 r^4)
* ``FourierPerturbed``  -- alpha(r) = alpha0 + sum of cos/sin(2 pi k r) terms
* ``Soliton``           -- alpha(x) = 2 a / cosh(a (x - x0))

The soliton family solves the autonomous constraint ODE
alpha'' + alpha^3 / 2 - a^2 alpha = 0 exactly; ``constraint_residual``
measures how far any other profile is from satisfying it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np


class ProfileDomainError(ValueError):
    """Evaluation point outside the profile's domain."""


@dataclass(frozen=True)
class Constant:
    alpha0: float

    domain_end = 1.0

    def _value(self, r):
        return np.full_like(r, self.alpha0, dtype=float)

    def _d1(self, r):
        return np.zeros_like(r, dtype=float)

    _d2 = _d1


@dataclass(frozen=True)
class Quartic:
    """C * (c0 + c2 r^2 + c3 r^3 + c4 r^4); note the missing linear term."""

    C: float
    coeffs: tuple[float, float, float, float]  # (c0, c2, c3, c4)

    domain_end = 1.0

    def _value(self, r):
        c0, c2, c3, c4 = self.coeffs
        return self.C * (c0 + r * r * (c2 + r * (c3 + r * c4)))

    def _d1(self, r):
        _, c2, c3, c4 = self.coeffs
        return self.C * (r * (2.0 * c2 + r * (3.0 * c3 + r * 4.0 * c4)))

    def _d2(self, r):
        _, c2, c3, c4 = self.coeffs
        return self.C * (2.0 * c2 + r * (6.0 * c3 + r * 12.0 * c4))


@dataclass(frozen=True)
class FourierTerm:
    kind: str  # "cos" | "sin"
    k: int
    amplitude: float

    def __post_init__(self):
        if self.kind not in ("cos", "sin"):
            raise ValueError(f"unknown Fourier term kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("Fourier wavenumber k must be a positive integer")


@dataclass(frozen=True)
class FourierPerturbed:
    """alpha0 plus a finite sum of cos(2 pi k r) / sin(2 pi k r) terms."""

    alpha0: float
    terms: tuple[FourierTerm, ...] = ()

    domain_end = 1.0

    def _value(self, r):
        out = np.full_like(r, self.alpha0, dtype=float)
        for t in self.terms:
            w = 2.0 * np.pi * t.k
            out += t.amplitude * (np.cos(w * r) if t.kind == "cos" else np.sin(w * r))
        return out

    def _d1(self, r):
        out = np.zeros_like(r, dtype=float)
        for t in self.terms:
            w = 2.0 * np.pi * t.k
            if t.kind == "cos":
                out += -t.amplitude * w * np.sin(w * r)
            else:
                out += t.amplitude * w * np.cos(w * r)
        return out

    def _d2(self, r):
        out = np.zeros_like(r, dtype=float)
        for t in self.terms:
            w = 2.0 * np.pi * t.k
            basis = np.cos(w * r) if t.kind == "cos" else np.sin(w * r)
            out += -t.amplitude * w * w * basis
        return out


@dataclass(frozen=True)
class Soliton:
    """2a / cosh(a (x - x0)); exact solution of the constraint ODE.

    a = 0 is allowed as the degenerate zero-amplitude case alpha == 0
    (used as the empty-box reference in pencil computations).
    """

    a: float
    x0: float

    domain_end = np.inf

    def __post_init__(self):
        if self.a < 0.0:
            raise ValueError("soliton amplitude parameter a must be >= 0")
        if self.x0 <= 0.0:
            raise ValueError("soliton peak position x0 must be > 0")

    def _value(self, r):
        if self.a == 0.0:
            return np.zeros_like(r, dtype=float)
        return 2.0 * self.a / np.cosh(self.a * (r - self.x0))

    def _d1(self, r):
        if self.a == 0.0:
            return np.zeros_like(r, dtype=float)
        z = self.a * (r - self.x0)
        return -2.0 * self.a**2 / np.cosh(z) * np.tanh(z)

    def _d2(self, r):
        if self.a == 0.0:
            return np.zeros_like(r, dtype=float)
        z = self.a * (r - self.x0)
        s = 1.0 / np.cosh(z)
        return -2.0 * self.a**3 * s * (2.0 * s * s - 1.0)


AlphaProfile = Union[Constant, Quartic, FourierPerturbed, Soliton]


def _check_domain(profile: AlphaProfile, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r > profile.domain_end):
        raise ProfileDomainError(
            f"evaluation point outside [0, {profile.domain_end}] for {type(profile).__name__}"
        )
    return r


def evaluate(profile: AlphaProfile, r):
    """alpha(r); accepts scalars or arrays, rejects out-of-domain points."""
    rr = _check_domain(profile, r)
    out = profile._value(rr)
    return float(out) if np.isscalar(r) or np.ndim(r) == 0 else out


def evaluate_derivative(profile: AlphaProfile, r, order: int = 1):
    """Analytic d^order alpha / dr^order for order in {1, 2}."""
    if order not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    rr = _check_domain(profile, r)
    out = profile._d1(rr) if order == 1 else profile._d2(rr)
    return float(out) if np.isscalar(r) or np.ndim(r) == 0 else out


def constraint_residual(profile: AlphaProfile, sample_points, a: float) -> float:
    """Max |alpha'' + alpha^3/2 - a^2 alpha| over the samples.

    Zero (to roundoff) exactly for the soliton family with matching a and
    for the constant alpha0 = a*sqrt(2).
    """
    r = np.asarray(sample_points, dtype=float)
    al = evaluate(profile, r)
    d2 = evaluate_derivative(profile, r, 2)
    return float(np.max(np.abs(d2 + 0.5 * al**3 - a * a * al)))


# -- named profile families ------------------------------------------------

#: Quartic coefficients originating in numerical simulations of magnetic
#: field reversal dynamics; the standard single-parameter branch-graph family.
FIELD_REVERSAL_COEFFS = (1.0, -26.09, 53.64, -28.22)


def field_reversal_profile(C: float) -> Quartic:
    """The reversal-dynamics quartic scaled by C."""
    return Quartic(C=C, coeffs=FIELD_REVERSAL_COEFFS)


def triple_point_profile(zeta: float, C: float) -> Quartic:
    """Two-parameter quartic family hosting a third-order spectral branch point.

    The zeta dependence is affine in every coefficient and is materialized
    into plain numbers here, since zeta only ever acts as a scan parameter.
    """
    return Quartic(
        C=C,
        coeffs=(
            -(21.465 + 2.467 * zeta),
            426.412 + 167.928 * zeta,
            -(806.729 + 436.289 * zeta),
            392.276 + 272.991 * zeta,
        ),
    )


def perturbed_constant(alpha0: float, phi: FourierPerturbed, amplitude: float) -> FourierPerturbed:
    """alpha0 + amplitude * phi(r) as a FourierPerturbed profile.

    phi is itself represented as a FourierPerturbed shape whose alpha0 field
    holds the constant part of the perturbation.
    """
    return FourierPerturbed(
        alpha0=alpha0 + amplitude * phi.alpha0,
        terms=tuple(
            FourierTerm(t.kind, t.k, amplitude * t.amplitude) for t in phi.terms
        ),
    )


# -- JSON construction -----------------------------------------------------

def profile_from_json(obj) -> AlphaProfile:
    """Build a profile from its JSON object form (or a JSON string).

    Recognized shapes::

        {"variant": "constant", "alpha0": 1.0}
        {"variant": "quartic", "C": 1.0, "coeffs": [c0, c2, c3, c4]}
        {"variant": "fourier", "alpha0": 3.14,
         "terms": [{"kind": "cos", "k": 2, "amplitude": 0.1}]}
        {"variant": "soliton", "a": 1.0, "x0": 6.0}
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "variant" not in obj:
        raise ValueError("profile JSON must be an object with a 'variant' field")
    variant = obj["variant"]
    try:
        if variant == "constant":
            return Constant(alpha0=float(obj["alpha0"]))
        if variant == "quartic":
            coeffs = obj["coeffs"]
            if len(coeffs) != 4:
                raise ValueError("quartic 'coeffs' must be [c0, c2, c3, c4]")
            return Quartic(C=float(obj["C"]), coeffs=tuple(float(c) for c in coeffs))
        if variant == "fourier":
            terms = tuple(
                FourierTerm(kind=t["kind"], k=int(t["k"]), amplitude=float(t["amplitude"]))
                for t in obj.get("terms", [])
            )
            return FourierPerturbed(alpha0=float(obj["alpha0"]), terms=terms)
        if variant == "soliton":
            return Soliton(a=float(obj["a"]), x0=float(obj["x0"]))
    except KeyError as exc:
        raise ValueError(f"profile JSON missing field {exc} for variant {variant!r}") from None
    raise ValueError(f"unknown profile variant {variant!r}")


def profile_to_json(profile: AlphaProfile) -> dict:
    """Inverse of profile_from_json."""
    if isinstance(profile, Constant):
        return {"variant": "constant", "alpha0": profile.alpha0}
    if isinstance(profile, Quartic):
        return {"variant": "quartic", "C": profile.C, "coeffs": list(profile.coeffs)}
    if isinstance(profile, FourierPerturbed):
        return {
            "variant": "fourier",
            "alpha0": profile.alpha0,
            "terms": [
                {"kind": t.kind, "k": t.k, "amplitude": t.amplitude} for t in profile.terms
            ],
        }
    if isinstance(profile, Soliton):
        return {"variant": "soliton", "a": profile.a, "x0": profile.x0}
    raise TypeError(f"not an AlphaProfile: {type(profile).__name__}")


def family_from_json(obj) -> Callable[[float], AlphaProfile]:
    """Build a parameter -> profile map from a family description.

    Recognized shapes::

        {"family": "constant-alpha0"}                      param = alpha0
        {"family": "quartic-scale", "coeffs": [..4..]}     param = C
        {"family": "field-reversal"}                       param = C
        {"family": "fourier-alpha0", "terms": [...]}       param = alpha0
        {"family": "soliton-x0", "a": 1.0}                 param = x0
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    name = obj.get("family")
    if name == "constant-alpha0":
        return lambda p: Constant(alpha0=p)
    if name == "quartic-scale":
        coeffs = tuple(float(c) for c in obj["coeffs"])
        return lambda p: Quartic(C=p, coeffs=coeffs)
    if name == "field-reversal":
        return field_reversal_profile
    if name == "fourier-alpha0":
        terms = tuple(
            FourierTerm(kind=t["kind"], k=int(t["k"]), amplitude=float(t["amplitude"]))
            for t in obj.get("terms", [])
        )
        return lambda p: FourierPerturbed(alpha0=p, terms=terms)
    if name == "soliton-x0":
        a = float(obj.get("a", 1.0))
        return lambda p: Soliton(a=a, x0=p)
    raise ValueError(f"unknown profile family {name!r}")
