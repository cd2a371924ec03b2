"""Stationary-phase layer: critical points, the extremal phase, and the
profiles that drive the chirp filters.

For frequencies (xi, eta) and scale j the oscillation

    phi(t) = -(xi/2^j) t + eta gamma(t/2^j)

has exactly one critical point t_c in the window [2^-k, 2^k] whenever
xi/eta lies in the attainable range of gamma'(./2^j) there; the extremal
phase is Psi = -phi(t_c).  Rescaling eta by gamma'(2^-j) collapses Psi onto
curve-independent profiles:

    2^j Psi_{eta/gamma'(2^-j)}(xi)
        = eta [ chirp_phase(s) + c_mod(j) + correction_j(s) ],   s = xi/eta,

where chirp_phase(s) = int_1^s r(u) du is the primitive of the limiting
inverse-derivative ratio, correction_j integrates the scale-j profile error
(vanishing for the pure power family), and c_mod(j) = 1 - Q_j(1) is an
eta-linear modulation constant: in the operator it only translates the
second input, so the reduction drops it.  scaling_residual measures the
identity with the modulation constant included; what remains is exactly the
profile-error term.

The space-side kernel phase is kernel_phase(y) = int_0^{r^{-1}(y)} t r'(t) dt,
with d/dy kernel_phase = r^{-1}(y); it is defined in the regime where
gamma' vanishes at 0 (for the blow-up regime the defining integral diverges
at its lower limit and the layer refuses).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .curves import Curve, inverse_deriv

__all__ = [
    "CurveProfiles",
    "profiles_for",
    "critical_point",
    "phase_value",
    "scaling_residual",
    "modulation_constant",
    "chirp_phase_eval",
    "kernel_phase_eval",
    "adaptive_simpson",
    "sample_admissible_queries",
]

_PROFILE_J = 30
_S_MIN, _S_MAX = 1.0 / 64.0, 48.0
_N_KNOTS = 3073


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 50) -> float:
    """Classic adaptive Simpson with absolute tolerance."""
    def simp(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def rec(x0, x2, f0, f1, f2, whole, tol_, depth):
        xm = 0.5 * (x0 + x2)
        xl, xr = 0.5 * (x0 + xm), 0.5 * (xm + x2)
        fl, fr = f(xl), f(xr)
        left = simp(x0, xm, f0, fl, f1)
        right = simp(xm, x2, f1, fr, f2)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * tol_:
            return left + right + (left + right - whole) / 15.0
        return (rec(x0, xm, f0, fl, f1, left, tol_ / 2.0, depth + 1)
                + rec(xm, x2, f1, fr, f2, right, tol_ / 2.0, depth + 1))

    fa, fb = f(a), f(b)
    fm = f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simp(a, b, fa, fm, fb), tol, 0)


# ---------------------------------------------------------------------------
# per-curve profile bundle
# ---------------------------------------------------------------------------

@dataclass
class CurveProfiles:
    """Limit profiles of one curve: r, r', r^{-1}, the chirp primitive
    chirp_phase (vanishing at 1), and the kernel phase on the r-range.

    Power-family curves use exact closed forms; otherwise dense splines of
    the scale-30 profiles over s in [1/64, 48].
    """

    curve: Curve
    r: Callable = field(repr=False)
    r_prime: Callable = field(repr=False)
    r_inverse: Callable = field(repr=False)
    chirp_phase: Callable = field(repr=False)
    kernel_phase: Optional[Callable] = field(repr=False, default=None)
    s_domain: tuple = (_S_MIN, _S_MAX)

    def theta(self, p0: float, y):
        """Kernel phase with its first-argument homogeneity: theta(p0,y) = p0*theta(1,y)."""
        if self.kernel_phase is None:
            raise ValueError(
                f"kernel phase undefined for {self.curve.label}: the defining integral "
                "diverges when gamma' blows up at 0")
        return p0 * self.kernel_phase(y)


def _power_profiles(c: Curve) -> CurveProfiles:
    a = c.power_exponent
    e = 1.0 / (a - 1.0)

    def r(s):
        s = np.asarray(s, dtype=float)
        return np.sign(s) * np.abs(s) ** e

    def r_prime(s):
        s = np.asarray(s, dtype=float)
        return e * np.abs(s) ** (e - 1.0)

    def r_inverse(y):
        y = np.asarray(y, dtype=float)
        return np.sign(y) * np.abs(y) ** (a - 1.0)

    def chirp(s):
        s = np.abs(np.asarray(s, dtype=float))
        return (1.0 / (e + 1.0)) * (s ** (e + 1.0) - 1.0)

    kernel = None
    if a > 1.0:
        def kernel(y):
            y = np.abs(np.asarray(y, dtype=float))
            return y ** a / a

    return CurveProfiles(curve=c, r=r, r_prime=r_prime, r_inverse=r_inverse,
                         chirp_phase=chirp, kernel_phase=kernel)


def _generic_profiles(c: Curve) -> CurveProfiles:
    from scipy.interpolate import CubicSpline

    knots = np.exp(np.linspace(math.log(_S_MIN), math.log(_S_MAX), _N_KNOTS))
    scale = 2.0 ** (-_PROFILE_J)
    gp = float(c.deriv(scale))
    den = float(inverse_deriv(c, gp))
    r_vals = np.asarray(inverse_deriv(c, knots * gp), dtype=float) / den

    r_sp = CubicSpline(knots, r_vals)
    rp_sp = r_sp.derivative()
    anti = r_sp.antiderivative()
    anti_at_1 = float(anti(1.0))

    increasing = r_vals[-1] > r_vals[0]
    rv = r_vals if increasing else r_vals[::-1]
    kn = knots if increasing else knots[::-1]

    def r(s):
        return r_sp(np.asarray(s, dtype=float))

    def r_prime(s):
        return rp_sp(np.asarray(s, dtype=float))

    def r_inverse(y):
        y = np.asarray(y, dtype=float)
        u = np.interp(y, rv, kn)
        for _ in range(3):
            u = u - (r_sp(u) - y) / rp_sp(u)
        return u

    def chirp(s):
        s = np.abs(np.asarray(s, dtype=float))
        return anti(s) - anti_at_1

    kernel = None
    if c.regime == "derivative_vanishes_at_zero":
        # kernel_phase(y) = u* y - int_0^{u*} r,  u* = r^{-1}(y); the piece of
        # the integral below the first knot comes from a local power fit.
        e_fit = math.log(r_vals[1] / r_vals[0]) / math.log(knots[1] / knots[0])
        tail = r_vals[0] * knots[0] / (e_fit + 1.0)
        anti_at_min = float(anti(knots[0]))

        def r_integral_from_zero(u):
            return (anti(u) - anti_at_min) + tail

        def kernel(y):
            y = np.asarray(y, dtype=float)
            u = r_inverse(y)
            return u * y - r_integral_from_zero(u)

    return CurveProfiles(curve=c, r=r, r_prime=r_prime, r_inverse=r_inverse,
                         chirp_phase=chirp, kernel_phase=kernel)


_PROFILE_CACHE: dict[str, CurveProfiles] = {}


def profiles_for(c: Curve) -> CurveProfiles:
    hit = _PROFILE_CACHE.get(c.label)
    if hit is not None:
        return hit
    prof = _power_profiles(c) if c.has_closed_profiles else _generic_profiles(c)
    _PROFILE_CACHE[c.label] = prof
    return prof


# ---------------------------------------------------------------------------
# critical points and the extremal phase
# ---------------------------------------------------------------------------

def _window_ok(c: Curve, t_c, j: int) -> np.ndarray:
    w = 2.0 ** float(c.k_gamma)
    tol = 1e-9
    t_c = np.asarray(t_c, dtype=float)
    return (t_c >= (1.0 / w) * (1 - tol)) & (t_c <= w * (1 + tol))


def critical_point(c: Curve, xi, eta, j: int):
    """The unique t_c in [2^-k, 2^k] with gamma'(t_c/2^j) = xi/eta.

    Solved by the monotone-branch bisection of inverse_deriv with Newton
    polish; raises ValueError when xi/eta is outside the attainable range or
    the solution leaves the window (the query is outside the multiplier's
    support).
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    scalar = xi.ndim == 0 and eta.ndim == 0
    ratio = xi / eta
    t_scaled = inverse_deriv(c, ratio)
    t_c = np.asarray(t_scaled, dtype=float) * 2.0 ** j
    ok = _window_ok(c, t_c, j)
    if not np.all(ok):
        bad = np.atleast_1d(t_c)[~np.atleast_1d(ok)][0]
        raise ValueError(
            f"no critical point in [2^-{c.k_gamma}, 2^{c.k_gamma}]: solution at t={bad!r}")
    return float(t_c) if scalar else t_c


def phase_residual(c: Curve, xi, eta, j: int, t_c):
    """|phi'(t_c)| = |-xi/2^j + (eta/2^j) gamma'(t_c/2^j)|."""
    t_c = np.asarray(t_c, dtype=float)
    return np.abs(-np.asarray(xi, dtype=float) / 2.0 ** j
                  + np.asarray(eta, dtype=float) / 2.0 ** j
                  * np.asarray(c.deriv(t_c / 2.0 ** j), dtype=float))


def phase_value(c: Curve, xi, eta, j: int):
    """Psi = -phi(t_c) = (xi/2^j) t_c - eta gamma(t_c/2^j)."""
    t_c = critical_point(c, xi, eta, j)
    t_c = np.asarray(t_c, dtype=float)
    val = (np.asarray(xi, dtype=float) / 2.0 ** j) * t_c \
        - np.asarray(eta, dtype=float) * np.asarray(c.eval_fn(t_c / 2.0 ** j), dtype=float)
    return float(val) if val.ndim == 0 else val


def modulation_constant(c: Curve, j: int) -> float:
    """c_mod(j) = 1 - gamma(2^-j)/(2^-j gamma'(2^-j)), the eta-linear phase
    constant absorbed as a translation of the second input."""
    s = 2.0 ** (-j)
    return 1.0 - float(c.eval_fn(s)) / (s * float(c.deriv(s)))


def scaling_residual(c: Curve, xi, eta, j: int):
    """|2^j Psi_{eta/gamma'(2^-j)}(xi) - eta (chirp_phase(xi/eta) + c_mod(j))|.

    Zero (to solver tolerance) for the pure power family; decays like the
    profile error a_j otherwise.
    """
    prof = profiles_for(c)
    gp = float(c.deriv(2.0 ** (-j)))
    eta_star = np.asarray(eta, dtype=float) / gp
    psi = phase_value(c, xi, eta_star, j)
    s = np.asarray(xi, dtype=float) / np.asarray(eta, dtype=float)
    model = np.asarray(eta, dtype=float) * (prof.chirp_phase(s) + modulation_constant(c, j))
    res = np.abs(2.0 ** j * np.asarray(psi) - model)
    return float(res) if res.ndim == 0 else res


# ---------------------------------------------------------------------------
# profile integrals, with the quadrature cross-check route
# ---------------------------------------------------------------------------

def chirp_phase_eval(c: Curve, s):
    """chirp_phase(s) = int_1^|s| r(u) du (fast route; even in s)."""
    return profiles_for(c).chirp_phase(s)


def chirp_phase_quadrature(c: Curve, s: float, tol: float = 1e-10) -> float:
    """Independent adaptive-Simpson evaluation of int_1^|s| r(u) du."""
    prof = profiles_for(c)
    return adaptive_simpson(lambda u: float(prof.r(u)), 1.0, abs(float(s)), tol=tol)


def kernel_phase_eval(c: Curve, p0: float, y):
    """theta(p0, y) = p0 * int_0^{r^{-1}(y)} t r'(t) dt."""
    return profiles_for(c).theta(p0, y)


def kernel_phase_quadrature(c: Curve, p0: float, y: float, tol: float = 1e-10) -> float:
    """Independent adaptive-Simpson evaluation of the kernel-phase integral."""
    prof = profiles_for(c)
    if prof.kernel_phase is None:
        raise ValueError(f"kernel phase undefined for {c.label}")
    u_star = float(prof.r_inverse(abs(float(y))))

    def integrand(t: float) -> float:
        # t r'(t) -> 0 as t -> 0 in the vanishing regime; avoid 0 * inf
        if t <= 0.0:
            return 0.0
        return t * float(prof.r_prime(t))

    return p0 * adaptive_simpson(integrand, 0.0, u_star, tol=tol)


# ---------------------------------------------------------------------------
# admissible query sampling (for solver stress tests)
# ---------------------------------------------------------------------------

def sample_scaling_queries(c: Curve, j: int, count: int, seed: int,
                           s_window: tuple = (0.5, 8.0)):
    """Deterministic (xi, eta) pairs for the scaling-identity residual.

    The rescaled phase sees the ratio s = xi/eta through the profile r, and
    its critical point sits at r(s) 2^-j relative to scale: s is drawn
    log-uniformly in a window inside the profile domain, eta log-uniformly
    in [1/10, 10].  Scales where the rescaled window leaves the monotone
    radius are refused.
    """
    rng = np.random.default_rng(seed)
    prof = profiles_for(c)
    r_hi = abs(float(prof.r(s_window[1])))
    if r_hi * 2.0 ** (-j) > 0.9 * c.monotone_radius:
        raise ValueError(
            f"scale j={j} too shallow for {c.label}: rescaled window leaves the "
            f"monotone radius (need 2^-j <= {0.9 * c.monotone_radius / r_hi:.3g})")
    s = np.exp(rng.uniform(math.log(s_window[0]), math.log(s_window[1]), size=count))
    eta = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=count))
    return s * eta, eta


def sample_admissible_queries(c: Curve, j: int, count: int, seed: int):
    """Deterministic (xi, eta) queries with a critical point in the window.

    t_c is drawn log-uniformly in the admissible part of [2^-k, 2^k] (kept
    inside the curve's monotone radius after rescaling), eta log-uniformly in
    [1, 10], and xi = eta gamma'(t_c/2^j), so phi' is O(1)-scaled and the
    absolute residual is meaningful.
    """
    rng = np.random.default_rng(seed)
    k = c.k_gamma
    hi = min(2.0 ** k, 0.9 * c.monotone_radius * 2.0 ** j)
    lo = 2.0 ** (-k)
    if hi <= lo:
        raise ValueError(
            f"scale j={j} leaves no admissible window inside the monotone radius "
            f"of {c.label}; need 2^j > {2.0 ** k / (0.9 * c.monotone_radius):.3g}")
    t_c = np.exp(rng.uniform(math.log(lo), math.log(hi), size=count))
    eta = np.exp(rng.uniform(0.0, math.log(10.0), size=count))
    xi = eta * np.asarray(c.deriv(t_c / 2.0 ** j), dtype=float)
    return xi, eta, t_c
