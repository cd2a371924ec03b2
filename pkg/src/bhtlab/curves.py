"""Curves with non-degenerate bending near the origin, and their diagnostics.

A curve enters the machinery through profiles measured at dyadic scales: the
rescaled curve profile

    Q_j(t) = gamma(2^-j t) / (2^-j gamma'(2^-j)),   t in I = {1/4<=|t|<=4},

its limit Q, the rescaled inverse-derivative ratio

    rho_j(s) = (gamma')^{-1}(s gamma'(2^-j)) / (gamma')^{-1}(gamma'(2^-j)),

its limit r on J = Q'(I), and a non-degeneracy floor c_gamma bounding |Q''|,
|r'| and the difference quotient of s*r'(s) away from zero.  Anything with a
linear part at the origin is excluded: its profiles flatten and the floors
collapse.

Builtin families (polynomials without constant/linear term, powers |t|^a and
sign(t)|t|^a, and |t|^a |log|t||^b) carry analytic derivative closures; the
pure power family additionally has exact closed-form limit profiles, used as
fast paths elsewhere.
"""
from __future__ import annotations

import math
import re as _re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Curve",
    "ProfileSlice",
    "builtin_curve",
    "BUILTIN_TEST_DESCRIPTORS",
    "GRAMMAR_HELP",
    "variation_count",
    "asymptotic_profile",
    "profile_error_sequence",
    "r_profile",
    "r_error_sequence",
    "nonflatness_report",
    "growth_dichotomy",
    "inverse_deriv",
    "i_grid",
    "j_grid",
]

PROFILE_LIMIT_J = 30          # scale index treated as the profile limit
_RATIO_WINDOW = (1e-2, 1e2)   # frequency-ratio window forced by the band supports


@dataclass(frozen=True)
class Curve:
    """A curve t -> gamma(t) (t != 0) with derivative closures and measured class data.

    regime: 'derivative_vanishes_at_zero' or 'derivative_blows_up_at_zero'.
    c_gamma: half the measured non-degeneracy floor (self-consistent threshold).
    k_gamma: the stationary-point window is [2^-k_gamma, 2^k_gamma].
    monotone_radius: probed radius of strict monotonicity of gamma' on (0, .).
    two_sided: gamma' changes sign across 0, so its inverse is two-branched.
    """

    label: str
    eval_fn: Callable = field(repr=False)
    deriv: Callable = field(repr=False)
    deriv2: Optional[Callable] = field(default=None, repr=False)
    delta: float = 1.0
    c_gamma: float = 0.0
    k_gamma: int = 0
    regime: str = "derivative_vanishes_at_zero"
    monotone_radius: float = math.inf
    two_sided: bool = True
    power_exponent: Optional[float] = None
    power_sign_variant: bool = False

    def __call__(self, t):
        return self.eval_fn(t)

    @property
    def has_closed_profiles(self) -> bool:
        return self.power_exponent is not None


@dataclass(frozen=True)
class ProfileSlice:
    """One rescaled profile sample: grid, values at scale j, limit, sup error."""

    grid: np.ndarray
    values: np.ndarray
    limit: np.ndarray
    sup_error: float
    j: int


def _second_derivative(c: Curve, t):
    """Analytic gamma'' when available, else centered differences with one
    Richardson step (h = 1e-5 relative)."""
    if c.deriv2 is not None:
        return np.asarray(c.deriv2(t), dtype=float)
    t = np.asarray(t, dtype=float)
    h = 1e-5 * np.maximum(np.abs(t), 1e-30)
    d = lambda hh: (np.asarray(c.deriv(t + hh), dtype=float)
                    - np.asarray(c.deriv(t - hh), dtype=float)) / (2.0 * hh)
    d1, d2 = d(h), d(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


# ---------------------------------------------------------------------------
# descriptor grammar
# ---------------------------------------------------------------------------

_TERM_RE = _re.compile(r"^\s*([+-]?\s*\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*t\s*(?:\^\s*(\d+))?\s*$")

GRAMMAR_HELP = (
    'curve descriptors: "poly: t^2", "poly: 1*t^2 + 0.5*t^3", '
    '"pow: 1.5", "pow: 1.5 sign", "powlog: a=2 b=1"'
)


def _parse_poly(body: str) -> dict[int, float]:
    body = body.replace("-", "+-")
    coeffs: dict[int, float] = {}
    for raw in body.split("+"):
        if not raw.strip():
            continue
        m = _TERM_RE.match(raw)
        if m is None:
            raise ValueError(f"cannot parse polynomial term {raw.strip()!r}; {GRAMMAR_HELP}")
        cs = m.group(1).replace(" ", "")
        coef = float(cs) if cs not in ("", "+", "-") else (-1.0 if cs == "-" else 1.0)
        power = int(m.group(2)) if m.group(2) else 1
        coeffs[power] = coeffs.get(power, 0.0) + coef
    coeffs = {p: c for p, c in coeffs.items() if c != 0.0}
    if not coeffs:
        raise ValueError("empty polynomial")
    if any(p < 2 for p in coeffs):
        raise ValueError("polynomial has a constant or linear term; outside the curve class")
    return coeffs


def _poly_curve(coeffs: dict[int, float], label: str) -> Curve:
    powers = sorted(coeffs)

    def ev(t):
        t = np.asarray(t, dtype=float)
        return sum(coeffs[p] * t ** p for p in powers)

    def d1(t):
        t = np.asarray(t, dtype=float)
        return sum(p * coeffs[p] * t ** (p - 1) for p in powers)

    def d2(t):
        t = np.asarray(t, dtype=float)
        return sum(p * (p - 1) * coeffs[p] * t ** (p - 2) for p in powers)

    lead = min(powers)
    kwargs = {}
    if len(powers) == 1:
        kwargs = dict(power_exponent=float(lead), power_sign_variant=(lead % 2 == 1))
    return _finish_curve(Curve(label=label, eval_fn=ev, deriv=d1, deriv2=d2,
                               two_sided=(lead % 2 == 0), **kwargs))


def _power_curve(alpha: float, sign_variant: bool, label: str) -> Curve:
    if alpha <= 0 or alpha == 1.0:
        raise ValueError("power curves need exponent a > 0, a != 1")

    if sign_variant:
        def ev(t):
            t = np.asarray(t, dtype=float)
            return np.sign(t) * np.abs(t) ** alpha

        def d1(t):
            t = np.asarray(t, dtype=float)
            return alpha * np.abs(t) ** (alpha - 1.0)

        def d2(t):
            t = np.asarray(t, dtype=float)
            return alpha * (alpha - 1.0) * np.abs(t) ** (alpha - 2.0) * np.sign(t)
    else:
        def ev(t):
            t = np.asarray(t, dtype=float)
            return np.abs(t) ** alpha

        def d1(t):
            t = np.asarray(t, dtype=float)
            return alpha * np.abs(t) ** (alpha - 1.0) * np.sign(t)

        def d2(t):
            t = np.asarray(t, dtype=float)
            return alpha * (alpha - 1.0) * np.abs(t) ** (alpha - 2.0)

    return _finish_curve(Curve(label=label, eval_fn=ev, deriv=d1, deriv2=d2,
                               two_sided=not sign_variant,
                               power_exponent=alpha, power_sign_variant=sign_variant))


def _powlog_curve(a: float, b: float, label: str) -> Curve:
    if a in (-1.0, 0.0, 1.0):
        raise ValueError("powlog curves need exponent a outside {-1, 0, 1}")

    def L(t):
        return np.abs(np.log(np.abs(t)))

    def ev(t):
        t = np.asarray(t, dtype=float)
        return np.abs(t) ** a * L(t) ** b

    def d1(t):
        t = np.asarray(t, dtype=float)
        sl = np.sign(np.log(np.abs(t)))
        return np.sign(t) * np.abs(t) ** (a - 1.0) * L(t) ** (b - 1.0) * (a * L(t) + b * sl)

    def d2(t):
        t = np.asarray(t, dtype=float)
        sl = np.sign(np.log(np.abs(t)))
        lt = L(t)
        out = a * (a - 1.0) * lt ** b
        if b != 0.0:
            out = out + (2.0 * a - 1.0) * b * sl * lt ** (b - 1.0)
        if b * (b - 1.0) != 0.0:
            out = out + b * (b - 1.0) * lt ** (b - 2.0)
        return np.abs(t) ** (a - 2.0) * out

    return _finish_curve(Curve(label=label, eval_fn=ev, deriv=d1, deriv2=d2,
                               two_sided=True))


def builtin_curve(descriptor: str) -> Curve:
    """Parse a curve from the text mini-grammar (see GRAMMAR_HELP)."""
    if ":" not in descriptor:
        raise ValueError(f"bad descriptor {descriptor!r}; {GRAMMAR_HELP}")
    head, body = descriptor.split(":", 1)
    head = head.strip().lower()
    body = body.strip()
    if head == "poly":
        return _poly_curve(_parse_poly(body), descriptor)
    if head == "pow":
        parts = body.split()
        alpha = float(parts[0])
        sign_variant = len(parts) > 1 and parts[1].lower() == "sign"
        return _power_curve(alpha, sign_variant, descriptor)
    if head == "powlog":
        params = dict(p.split("=") for p in body.split())
        return _powlog_curve(float(params["a"]), float(params.get("b", "1")), descriptor)
    raise ValueError(f"unknown curve family {head!r}; {GRAMMAR_HELP}")


BUILTIN_TEST_DESCRIPTORS = (
    "poly: t^2",
    "poly: t^3",
    "poly: t^2 + t^3",
    "pow: 1.5",
    "powlog: a=2 b=1",
)


# ---------------------------------------------------------------------------
# construction-time measurements
# ---------------------------------------------------------------------------

def _probe_monotone_radius(c: Curve) -> float:
    """First sign change of gamma'' on either side of 0 (log grid probe)."""
    t = np.logspace(-9, 2, 1200)
    radius = math.inf
    for side in (1.0, -1.0):
        d2 = _second_derivative(c, side * t)
        s0 = np.sign(d2[0])
        bad = np.nonzero(np.sign(d2) != s0)[0]
        if len(bad):
            radius = min(radius, 0.9 * float(t[bad[0]]))
    return radius


def _probe_regime(c: Curve) -> str:
    lo, hi = abs(float(c.deriv(1e-8))), abs(float(c.deriv(1e-4)))
    return "derivative_vanishes_at_zero" if lo < hi else "derivative_blows_up_at_zero"


def _finish_curve(c: Curve) -> Curve:
    radius = _probe_monotone_radius(c)
    delta = min(1.0, 0.5 * radius) if math.isfinite(radius) else 1.0
    regime = _probe_regime(c)
    base = Curve(label=c.label, eval_fn=c.eval_fn, deriv=c.deriv, deriv2=c.deriv2,
                 delta=delta, regime=regime, monotone_radius=radius,
                 two_sided=c.two_sided, power_exponent=c.power_exponent,
                 power_sign_variant=c.power_sign_variant)
    rep = nonflatness_report(base)
    floor = min(rep["infQ2"], rep["infr1"], rep["inf_dual"])
    k = _probe_k_gamma(base)
    return Curve(label=c.label, eval_fn=c.eval_fn, deriv=c.deriv, deriv2=c.deriv2,
                 delta=delta, c_gamma=0.5 * floor, k_gamma=k, regime=regime,
                 monotone_radius=radius, two_sided=c.two_sided,
                 power_exponent=c.power_exponent,
                 power_sign_variant=c.power_sign_variant)


def _probe_k_gamma(c: Curve) -> int:
    """Smallest k with the stationary-point window inside [2^-k, 2^k].

    The band supports force the frequency ratio into [1/100, 100] times
    gamma'(2^-j); the stationary point then sits at
    2^j (gamma')^{-1}(w gamma'(2^-j)), probed at deep scales.  For nearly
    flat curves the ratio window is clipped to the attainable range of
    gamma' (the window then degenerates and k stays small).
    """
    lo, hi = _RATIO_WINDOW
    t_hi = min(c.monotone_radius, 1e6)
    bounds = []
    for j in (20, PROFILE_LIMIT_J):
        scale = 2.0 ** (-j)
        gp = float(c.deriv(scale))
        attain = sorted([abs(float(c.deriv(1e-30))) / abs(gp),
                         abs(float(c.deriv(t_hi))) / abs(gp)])
        w_lo = min(max(lo, 1.02 * attain[0]), 0.98 * attain[1])
        w_hi = max(min(hi, 0.98 * attain[1]), 1.02 * attain[0])
        for w in (w_lo, w_hi):
            try:
                bounds.append(float(inverse_deriv(c, w * gp)) / scale)
            except ValueError:
                continue
    if not bounds:
        return 1
    span = max(max(bounds), 1.0 / min(bounds))
    return max(1, int(math.ceil(math.log2(span))))


# ---------------------------------------------------------------------------
# inverse of gamma'
# ---------------------------------------------------------------------------

def inverse_deriv(c: Curve, w):
    """(gamma')^{-1}(w) on the monotone branch near 0.

    Positive-branch values (sign matching gamma' on (0, .)) invert there;
    opposite-sign values use the mirrored branch when gamma' changes sign
    across the origin.  Vector geometric bisection polished by Newton.
    Raises ValueError naming any w outside the attainable range.
    """
    w_in = np.asarray(w, dtype=float)
    scalar = w_in.ndim == 0
    w_arr = np.atleast_1d(w_in).astype(float)
    if np.any(w_arr == 0.0):
        raise ValueError("gamma' does not attain 0 on the punctured neighborhood")

    t_hi = min(c.monotone_radius, 1e6)
    t_lo = 1e-300
    pos_sign = np.sign(float(c.deriv(min(1e-3, 0.5 * t_hi))))

    mirror = np.sign(w_arr) != pos_sign
    if np.any(mirror) and not c.two_sided:
        bad = w_arr[mirror][0]
        raise ValueError(f"value {bad!r} outside the range of gamma' on the positive branch")

    sgn = np.where(mirror, -1.0, 1.0)

    def f(mag):
        return np.asarray(c.deriv(sgn * mag), dtype=float) - w_arr

    lo = np.full_like(w_arr, t_lo)
    hi = np.full_like(w_arr, t_hi)
    flo, fhi = f(lo), f(hi)
    if np.any(flo * fhi > 0):
        bad = w_arr[flo * fhi > 0][0]
        raise ValueError(f"value {bad!r} outside the attainable range of gamma'")
    for _ in range(90):
        mid = np.sqrt(lo * hi)
        fm = f(mid)
        take_hi = (fm > 0) == (fhi > 0)
        hi = np.where(take_hi, mid, hi)
        fhi = np.where(take_hi, fm, fhi)
        lo = np.where(take_hi, lo, mid)
        if np.all(hi - lo <= 1e-15 * hi):
            break
    mag = 0.5 * (lo + hi)
    for _ in range(8):
        g1 = f(mag)
        g2 = _second_derivative(c, sgn * mag) * sgn
        step = np.where(g2 != 0.0, g1 / g2, 0.0)
        new = mag - step
        ok = np.isfinite(new) & (new > 0.5 * lo) & (new < 2.0 * hi)
        mag = np.where(ok, new, mag)
    out = sgn * mag
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# profile domains
# ---------------------------------------------------------------------------

def i_grid(n: int = 512) -> np.ndarray:
    """Both components of {1/4 <= |t| <= 4}."""
    half = np.linspace(0.25, 4.0, n // 2)
    return np.concatenate([-half[::-1], half])


def _limit_profile_deriv(c: Curve, t: np.ndarray) -> np.ndarray:
    """Q'(t) at the limit scale: gamma'(2^-j t)/gamma'(2^-j)."""
    s = 2.0 ** (-PROFILE_LIMIT_J)
    return np.asarray(c.deriv(s * t), dtype=float) / float(c.deriv(s))


def j_grid(c: Curve, n: int = 512) -> np.ndarray:
    """Grid over J = Q'(I), the numerical range of Q' per sign component."""
    qp = _limit_profile_deriv(c, i_grid(n))
    parts = []
    neg = qp[qp < 0]
    pos = qp[qp > 0]
    if len(neg):
        parts.append(np.linspace(neg.min(), neg.max(), max(n // 2, 8)))
    if len(pos):
        parts.append(np.linspace(pos.min(), pos.max(), max(n // 2, 8)))
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def variation_count(c: Curve, j_max: int) -> int:
    """Max number of scales 0<=j<=j_max with |2^-j gamma'(2^-j)| in one dyadic
    window [alpha, 2 alpha]; exact sliding window over the sorted values."""
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    j = np.arange(j_max + 1)
    v = np.sort(np.abs(2.0 ** (-j) * np.asarray(c.deriv(2.0 ** (-j)), dtype=float)))
    best, i0 = 1, 0
    for i1 in range(len(v)):
        while v[i1] > 2.0 * v[i0]:
            i0 += 1
        best = max(best, i1 - i0 + 1)
    return int(best)


def _profile_values(c: Curve, j: int, t: np.ndarray) -> np.ndarray:
    s = 2.0 ** (-j)
    denom = s * float(c.deriv(s))
    if denom == 0.0:
        raise ValueError(f"corrupt curve: gamma'(2^-{j}) = 0")
    return np.asarray(c.eval_fn(s * t), dtype=float) / denom


def _profile_limit(c: Curve, t: np.ndarray) -> np.ndarray:
    if c.has_closed_profiles:
        a = c.power_exponent
        base = np.abs(t) ** a / a
        return np.sign(t) * base if c.power_sign_variant else base
    return _profile_values(c, PROFILE_LIMIT_J, t)


def asymptotic_profile(c: Curve, j: int, grid: Optional[np.ndarray] = None) -> ProfileSlice:
    """Rescaled curve profile at scale j against its limit, with sup-norm error."""
    if j < 0:
        raise ValueError("scale index j must be >= 0")
    t = i_grid() if grid is None else np.asarray(grid, dtype=float)
    vals = _profile_values(c, j, t)
    lim = _profile_limit(c, t)
    return ProfileSlice(grid=t, values=vals, limit=lim,
                        sup_error=float(np.max(np.abs(vals - lim))), j=j)


def profile_error_sequence(c: Curve, j_list) -> np.ndarray:
    return np.array([asymptotic_profile(c, j).sup_error for j in j_list])


def _r_values(c: Curve, j: int, s: np.ndarray) -> np.ndarray:
    scale = 2.0 ** (-j)
    gp = float(c.deriv(scale))
    num = inverse_deriv(c, np.asarray(s, dtype=float) * gp)
    den = inverse_deriv(c, gp)
    return np.asarray(num, dtype=float) / den


def _r_limit(c: Curve, s: np.ndarray) -> np.ndarray:
    if c.has_closed_profiles:
        a = c.power_exponent
        return np.sign(s) * np.abs(s) ** (1.0 / (a - 1.0))
    return _r_values(c, PROFILE_LIMIT_J, s)


def r_profile(c: Curve, j: int, grid: Optional[np.ndarray] = None) -> ProfileSlice:
    """Rescaled inverse-derivative ratio at scale j against its limit."""
    s = j_grid(c) if grid is None else np.asarray(grid, dtype=float)
    vals = _r_values(c, j, s)
    lim = _r_limit(c, s)
    return ProfileSlice(grid=s, values=vals, limit=lim,
                        sup_error=float(np.max(np.abs(vals - lim))), j=j)


def r_error_sequence(c: Curve, j_list) -> np.ndarray:
    return np.array([r_profile(c, j).sup_error for j in j_list])


def _limit_r_prime(c: Curve, s: np.ndarray) -> np.ndarray:
    """r'(s) at the limit scale, via gamma'' along the inverse branch."""
    if c.has_closed_profiles:
        a = c.power_exponent
        e = 1.0 / (a - 1.0)
        return e * np.abs(s) ** (e - 1.0)
    scale = 2.0 ** (-PROFILE_LIMIT_J)
    gp = float(c.deriv(scale))
    tt = np.asarray(inverse_deriv(c, np.asarray(s, dtype=float) * gp), dtype=float)
    g2 = _second_derivative(c, tt)
    return gp / (g2 * scale)


def nonflatness_report(c: Curve, n_grid: int = 512) -> dict:
    """The three non-degeneracy infima over sampled I and J.

    infQ2 = inf |Q''| over I, infr1 = inf |r'| over J, inf_dual the infimum
    of |s1 r'(s1) - s2 r'(s2)| / |s1 - s2| over distinct sampled pairs.
    Passes when all three exceed the recorded floor c_gamma.
    """
    tg = i_grid(n_grid)
    scale = 2.0 ** (-PROFILE_LIMIT_J)
    q2 = scale * _second_derivative(c, scale * tg) / float(c.deriv(scale))
    inf_q2 = float(np.min(np.abs(q2)))

    sg = j_grid(c, n_grid)
    rp = _limit_r_prime(c, sg)
    inf_r1 = float(np.min(np.abs(rp)))

    srp = sg * rp
    diff = np.abs(srp[:, None] - srp[None, :])
    den = np.abs(sg[:, None] - sg[None, :])
    mask = den > 1e-12
    inf_dual = float(np.min(diff[mask] / den[mask]))

    return {
        "infQ2": inf_q2,
        "infr1": inf_r1,
        "inf_dual": inf_dual,
        "c_gamma": c.c_gamma,
        "pass": bool(min(inf_q2, inf_r1, inf_dual) > c.c_gamma),
    }


def growth_dichotomy(c: Curve, n_grid: int = 256, residual_tol: float = 0.5) -> dict:
    """Log-log fit of |gamma'| near 0: regime, sandwich constants, residual.

    Fits K2^-1 |t|^C2 < |gamma'(t)| < K1^-1 |t|^C1 with C1 = C2 the fitted
    slope and the K's from the extreme prefactors on the grid.  A residual
    above residual_tol flags the curve as having no clean power behavior.
    """
    hi = min(c.delta, 1.0) / 2.0
    t = np.logspace(math.log10(hi) - 6, math.log10(hi), n_grid)
    g = np.abs(np.asarray(c.deriv(t), dtype=float))
    slope, intercept = np.polyfit(np.log(t), np.log(g), 1)
    resid = np.log(g) - (slope * np.log(t) + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    pref = g / t ** slope
    regime = "derivative_vanishes_at_zero" if slope > 0 else "derivative_blows_up_at_zero"
    return {
        "regime": regime,
        "C1": float(slope),
        "C2": float(slope),
        "K1": float(1.0 / np.max(pref)),
        "K2": float(1.0 / np.min(pref)),
        "residual": rms,
        "is_member": bool(rms <= residual_tol),
    }
