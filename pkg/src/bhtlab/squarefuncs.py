"""Maximal functions, Calderon-Zygmund decomposition, shifted square
functions, and the oscillation/energy inequality checks.

The inequality operations here are numerical oracles for one-sided bounds
with unspecified absolute constants: each check evaluates both sides on the
grid and reports the worst ratio; test harnesses calibrate the constant at
the smallest parameter pair and assert stability (no growth beyond 2x)
across the parameter matrix, which turns a "less-than-a-constant" claim
into a falsifiable statement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bumps import bump_phi, log_bump, log_plateau_window
from .curves import Curve
from .decomposition import FilterBank, scale_factor
from .phase import profiles_for
from .signal import SampledFunction, Spectrum, forward_transform, inverse_transform, lp_norm

__all__ = [
    "hardy_littlewood_max",
    "dyadic_max",
    "CZDecomposition",
    "cz_decompose",
    "ShiftedSquareData",
    "shifted_square_function",
    "available_bands",
    "norm_growth_in_shift",
    "block_square_ratio",
    "randomized_operator",
    "rademacher_fourth_moment",
    "interaction_kernel",
    "interaction_decay_fit",
    "CheckReport",
    "energy_check_grid",
    "cancellation_bound_check",
    "windowed_energy_check",
    "dual_pointwise_check",
]


# ---------------------------------------------------------------------------
# maximal functions
# ---------------------------------------------------------------------------

def hardy_littlewood_max(f: SampledFunction, chunk: int = 256) -> SampledFunction:
    """Uncentered maximal function over all grid intervals, exactly.

    M f(x_i) = max over cell ranges [l, r] containing i of the average of |f|;
    computed from prefix sums in chunked O(N^2) passes (N <= 2^14 here).
    """
    a = np.abs(f.values)
    n = len(a)
    pref = np.concatenate([[0.0], np.cumsum(a)])
    idx = np.arange(n + 1)
    out = np.zeros(n)
    # T[i] = max over windows ending at r >= i of the best average over [l..r], l <= i
    # computed by scanning r and keeping the best prefix minimum structure is
    # still coupled; chunked exhaustive evaluation keeps it simple and exact.
    for l0 in range(0, n, chunk):
        l1 = min(l0 + chunk, n)
        ls = np.arange(l0, l1)
        # averages over [l, r] for all r >= l: (pref[r+1]-pref[l])/(r+1-l)
        rs = idx[None, l0 + 1:n + 1]  # r+1
        width = rs - ls[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            avg = (pref[None, l0 + 1:] - pref[ls, None]) / width
        avg = np.where(width > 0, avg, -np.inf)
        # window [l, r] covers cells l..r: running max over r gives, for each l,
        # the best window starting at l and reaching at least cell i
        run = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
        # cell i >= l is covered by windows [l, r>=i]: candidate run[l, i-l0-...]
        for k, l in enumerate(ls):
            out[l:] = np.maximum(out[l:], run[k, l - l0:])
    return SampledFunction(f.x0, f.dx, out)


def dyadic_max(f: SampledFunction) -> SampledFunction:
    """Dyadic maximal function: max of |f|-averages over the dyadic blocks
    [k 2^s, (k+1) 2^s) of grid cells containing the point."""
    a = np.abs(f.values)
    n = len(a)
    out = a.copy()
    level = a.copy()
    width = 1
    while width < n:
        level = 0.5 * (level[0::2] + level[1::2])
        width *= 2
        out = np.maximum(out, np.repeat(level, width))
    return SampledFunction(f.x0, f.dx, out)


# ---------------------------------------------------------------------------
# Calderon-Zygmund decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CZDecomposition:
    """f = good + sum of bad parts at level lam over maximal dyadic intervals.

    good equals f off the selected set and the interval mean on each selected
    interval; each bad part is mean-zero and supported on its interval.
    Invariants (checked by the test suite): exact reconstruction, mean-zero
    bad parts, |good| <= 2 lam, and total selected length <= ||f||_1 / lam.
    """

    lam: float
    good: SampledFunction
    bad_parts: list = field(repr=False)
    intervals: list = field(repr=False)   # (start_index, length_in_cells)

    @property
    def total_selected_length(self) -> float:
        return sum(ln for _, ln in self.intervals) * self.good.dx


def cz_decompose(f: SampledFunction, lam: float) -> CZDecomposition:
    """Maximal dyadic intervals where the |f|-average exceeds lam, by
    top-down recursion on the dyadic average pyramid."""
    if lam <= 0:
        raise ValueError("level must be positive")
    vals = f.values
    n = len(vals)
    absv = np.abs(vals)

    # pyramid[s][k] = average of |f| over block k of width 2^s cells
    pyramid = [absv]
    while len(pyramid[-1]) > 1:
        prev = pyramid[-1]
        pyramid.append(0.5 * (prev[0::2] + prev[1::2]))

    intervals: list[tuple[int, int]] = []

    def descend(s: int, k: int) -> None:
        if pyramid[s][k] > lam:
            intervals.append((k * (1 << s), 1 << s))
            return
        if s == 0:
            return
        descend(s - 1, 2 * k)
        descend(s - 1, 2 * k + 1)

    descend(len(pyramid) - 1, 0)
    intervals.sort()

    good = vals.copy()
    bad_parts = []
    for start, ln in intervals:
        seg = vals[start:start + ln]
        mean = seg.mean()
        b = np.zeros(n, dtype=complex)
        b[start:start + ln] = seg - mean
        good[start:start + ln] = mean
        bad_parts.append(((start, ln), SampledFunction(f.x0, f.dx, b)))

    return CZDecomposition(lam=lam, good=SampledFunction(f.x0, f.dx, good),
                           bad_parts=bad_parts, intervals=intervals)


# ---------------------------------------------------------------------------
# shifted square function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftedSquareData:
    shift: int
    j_list: tuple
    bands: np.ndarray = field(repr=False)      # (len(j_list), N) translated band outputs
    aggregate: SampledFunction = field(repr=False)


def available_bands(f: SampledFunction, margin: float = 0.9) -> list[int]:
    """Dyadic band indices k with the window of band_dyadic(k) inside the grid."""
    xi_max = math.pi / f.dx
    out = []
    k = 0
    while 10.0 * 2.0 ** k < margin * xi_max:
        out.append(k)
        k += 1
    return out


def shifted_square_function(f: SampledFunction, shift: int,
                            j_list: Optional[list] = None) -> ShiftedSquareData:
    """S_shift f = (sum_j |(f through band j)(x - shift/2^j)|^2)^{1/2}.

    Translation by shift/2^j is the exact unimodular spectral modulation
    e^{-i xi shift/2^j}, so every band output is an L^2 isometry of its
    unshifted version.
    """
    if j_list is None:
        j_list = available_bands(f)
    spec = forward_transform(f)
    xi = spec.xi
    bands = np.zeros((len(j_list), f.n), dtype=complex)
    for i, j in enumerate(j_list):
        mult = bump_phi(xi / 2.0 ** j) * np.exp(-1j * xi * shift / 2.0 ** j)
        out = inverse_transform(Spectrum(spec.xi0, spec.dxi, mult * spec.coeffs), x0=f.x0)
        bands[i] = out.values
    agg = np.sqrt(np.sum(np.abs(bands) ** 2, axis=0))
    return ShiftedSquareData(shift=shift, j_list=tuple(j_list), bands=bands,
                             aggregate=SampledFunction(f.x0, f.dx, agg))


def norm_growth_in_shift(fs: list, q: float, shifts) -> dict:
    """Ensemble sup of ||S_l f||_q / ||f||_q per shift, with the log-log fit
    of its growth against log log(|l|+10).

    Returns the fitted exponent beta (growth ~ (log(|l|+10))^beta) and the
    reference exponent 2/q* - 1, q* = min(q, q').
    """
    if not (1.0 < q < math.inf):
        raise ValueError("q must be in (1, inf)")
    shifts = list(shifts)
    sups = []
    for l in shifts:
        best = 0.0
        for f in fs:
            s = shifted_square_function(f, l)
            best = max(best, lp_norm(s.aggregate, q) / lp_norm(f, q))
        sups.append(best)
    sups = np.array(sups)
    x = np.log(np.log(np.abs(np.array(shifts, dtype=float)) + 10.0))
    beta, intercept = np.polyfit(x, np.log(sups), 1)
    qstar = min(q, q / (q - 1.0))
    return {
        "shifts": shifts,
        "sup_ratios": sups,
        "fitted_exponent": float(beta),
        "reference_exponent": 2.0 / qstar - 1.0,
        "residual": float(np.sqrt(np.mean((np.log(sups) - (beta * x + intercept)) ** 2))),
    }


def block_square_ratio(h: SampledFunction, c: Curve, m: int, j_list,
                       p_prime: float) -> float:
    """|| (sum_{j,p0} |h through block (j,p0)|^2)^{1/2} ||_{p'} / ||h||_{p'}.

    The empirical ratio of the square-function bound that the finite
    intersection of the block supports licenses (p' >= 2).  Measured, never
    certified.
    """
    if p_prime < 2.0:
        raise ValueError("the block square-function bound needs p' >= 2")
    bank = FilterBank(curve=c, m=m)
    spec = forward_transform(h)
    xi = spec.xi
    acc = np.zeros(h.n)
    for j in j_list:
        gm = bank.block_filters(j, xi)
        phased = gm * spec.coeffs[None, :] * np.exp(1j * xi * h.x0)[None, :]
        H = np.fft.ifft(np.fft.ifftshift(phased, axes=1), axis=1) * h.n * spec.dxi
        acc += np.sum(np.abs(H) ** 2, axis=0)
    sq = SampledFunction(h.x0, h.dx, np.sqrt(acc))
    return lp_norm(sq, p_prime) / lp_norm(h, p_prime)


def randomized_operator(f: SampledFunction, shift: int, signs,
                        j_list: Optional[list] = None) -> SampledFunction:
    """Sign-randomized band sum: sum_j signs[j] (f through band j)(x - shift/2^j)."""
    if j_list is None:
        j_list = available_bands(f)
    signs = np.asarray(signs, dtype=float)
    if len(signs) != len(j_list):
        raise ValueError("need one sign per band")
    data = shifted_square_function(f, shift, j_list)
    return SampledFunction(f.x0, f.dx, np.sum(signs[:, None] * data.bands, axis=0))


def rademacher_fourth_moment(bands: np.ndarray) -> np.ndarray:
    """Exact E|sum_j w_j a_j(x)|^4 over independent sign choices w_j.

    Pairing the four sign factors gives
        E|X|^4 = 2 (sum|a|^2)^2 + |sum a^2|^2 - 2 sum|a|^4.
    Used to validate the Monte Carlo route at exponent 4.
    """
    a2 = np.abs(bands) ** 2
    s2 = np.sum(a2, axis=0)
    s4 = np.sum(a2 ** 2, axis=0)
    c2 = np.sum(bands ** 2, axis=0)
    return 2.0 * s2 ** 2 + np.abs(c2) ** 2 - 2.0 * s4


# ---------------------------------------------------------------------------
# oscillatory interaction kernel
# ---------------------------------------------------------------------------

def _interaction_windows(c: Curve, m: int):
    """Per-curve amplitude windows for the interaction integral.

    The band window (supp (0.4, 2.5), sharp mollifier) plays the kernel
    envelope; the space cutoff is a log-plateau window equal to 1 on the
    y-range the envelope can reach, supported on its doubling.
    """
    prof = profiles_for(c)
    lo, hi = 0.4, 2.5
    y1 = float(prof.r(lo / 4.0))
    y2 = float(prof.r(hi * 1.0))
    y_lo, y_hi = min(y1, y2), max(y1, y2)
    cg = max(1.0 / max(y_lo, 1e-6), y_hi) * 1.05

    def window(u):
        return log_bump(u, lo, hi, sharpness=3)

    def cutoff(y):
        return log_plateau_window(y, 1.0 / cg, cg, 1.0 / (2.0 * cg), 2.0 * cg)

    return window, cutoff


def interaction_kernel(c: Curve, m: int, p0: float, q0: float,
                       n_quad: int = 2 ** 20) -> complex:
    """E(p0, q0) = int e^{i (p0-q0) theta(y)} w(p0 u/2^m) conj(w)(q0 u/2^m) mu(y)^2 dy,

    u = r^{-1}(y), theta the kernel phase.  Dense trapezoid on a uniform
    y-grid: the integrand is smooth and compactly supported, so the rule is
    superalgebraically accurate once the oscillation is resolved.
    """
    if not (2.0 ** (m - 10) < p0 < 2.0 ** (m + 10)) or not (2.0 ** (m - 10) < q0 < 2.0 ** (m + 10)):
        raise ValueError("p0, q0 must lie within 2^(m-10)..2^(m+10)")
    prof = profiles_for(c)
    if prof.kernel_phase is None:
        raise ValueError(f"interaction kernel needs the vanishing-derivative regime ({c.label})")
    window, cutoff = _interaction_windows(c, m)
    scale = min(p0, q0) / 2.0 ** m
    y_hi = float(prof.r(2.5 / scale))
    y_lo = float(prof.r(0.4 / (max(p0, q0) / 2.0 ** m)))
    y_lo, y_hi = min(y_lo, y_hi), max(y_lo, y_hi)
    yg = np.linspace(0.25 * y_lo, 1.1 * y_hi, n_quad)
    hy = yg[1] - yg[0]
    u = np.asarray(prof.r_inverse(yg), dtype=float)
    amp = window(p0 / 2.0 ** m * u) * window(q0 / 2.0 ** m * u) * cutoff(yg) ** 2
    phase = (p0 - q0) * np.asarray(prof.kernel_phase(yg), dtype=float)
    return complex(np.sum(amp * np.exp(1j * phase)) * hy)


def interaction_decay_fit(c: Curve, m: int, offsets=None,
                          base_p0: Optional[float] = None,
                          n_quad: int = 2 ** 18) -> dict:
    """Log-log decay fit of |E(p0, p0+k)| against log(1+k) over k in [4, 2^(m-1)].

    The baseline p0 = 2^(m-1) keeps the kernel-phase derivative of order one
    on the amplitude support, so the integration-by-parts decay regime covers
    the fitted range.
    """
    if offsets is None:
        offsets = np.arange(4, 2 ** (m - 1) + 1)
    offsets = np.asarray(offsets, dtype=int)
    p0 = float(2 ** (m - 1) if base_p0 is None else base_p0)
    vals = np.array([abs(interaction_kernel(c, m, p0, p0 + int(k), n_quad=n_quad))
                     for k in offsets])
    x = np.log10(1.0 + offsets.astype(float))
    y = np.log10(np.maximum(vals, 1e-300))
    slope, intercept = np.polyfit(x, y, 1)
    return {
        "offsets": offsets,
        "values": vals,
        "slope": float(slope),
        "residual": float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2))),
        "base_p0": p0,
    }


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    """Both sides of a one-sided grid inequality with the worst ratio."""

    lhs_sup: float
    rhs_sup: float
    ratio_sup: float
    constant: float
    passed: bool
    extras: Optional[dict] = None


def _periodic_convolve(values: np.ndarray, kernel: np.ndarray, dx: float) -> np.ndarray:
    """(values * kernel)(x) dx on the periodic grid; kernel given on the same
    symmetric grid and treated as centered at 0."""
    n = len(values)
    kv = np.fft.fft(np.fft.ifftshift(kernel))
    return np.fft.ifft(np.fft.fft(values) * kv) * dx


def _nu_kernel(c: Curve, j: int, x: np.ndarray) -> np.ndarray:
    """2^j nu(2^j x) with nu the even plateau window covering the reach of the
    chirp kernels: 1 on 1/C<=|y|<=C, supported in 1/(2C) < |y| < 2C."""
    prof = profiles_for(c)
    y1, y2 = abs(float(prof.r(1.0 / 20.0))), abs(float(prof.r(10.0)))
    cg = max(1.0 / min(y1, y2), max(y1, y2)) * 1.05
    y = 2.0 ** j * np.abs(x)
    return 2.0 ** j * log_plateau_window(y, 1.0 / cg, cg, 1.0 / (2.0 * cg), 2.0 * cg)


def energy_check_grid(c: Curve, m: int, j: int, span_margin: float = 1.5,
                      n_cap: int = 2 ** 17) -> tuple[float, float, int]:
    """(x0, dx, n) for the kernel-energy checks at indices (m, j).

    dx resolves the first-slot band at 2^{m+j}; n is then forced by the
    kernel envelope's fixed physical reach ~ C_nu/2^j: the domain must cover
    it, or periodic wrap lets the chirped kernels interfere and the measured
    ratios drift with m.
    """
    prof = profiles_for(c)
    y1, y2 = abs(float(prof.r(1.0 / 20.0))), abs(float(prof.r(10.0)))
    cg = max(1.0 / min(y1, y2), max(y1, y2)) * 1.05
    xi_max = 1.25 * 10.0 * 2.0 ** (m + j)
    dx = math.pi / xi_max
    span_needed = span_margin * 2.0 * (2.0 * cg) / 2.0 ** j
    n = 2 ** int(math.ceil(math.log2(max(span_needed / dx, 2 ** 10))))
    if n > n_cap:
        raise ValueError(f"energy-check grid needs n={n} > cap {n_cap} at (m={m}, j={j})")
    return -(n // 2) * dx, dx, n


def cancellation_bound_check(c: Curve, m: int, j: int, f: SampledFunction,
                             constant: float = math.inf, chunk: int = 32) -> CheckReport:
    """sum_p0 |f through band*chirp|^2 (x)  vs  (|f through band|^2 * 2^j nu(2^j .))(x).

    The left side stacks the chirped block outputs; the right side is the
    band energy smeared by the kernel envelope.  Reports the sup ratio where
    the right side carries mass.  The caller supplies f on a grid whose span
    covers the kernel reach (see energy_check_grid).
    """
    bank = FilterBank(curve=c, m=m)
    spec = forward_transform(f)
    xi = spec.xi
    env = bank.band_dyadic(m + j, xi)
    phase = np.exp(1j * xi * f.x0)
    lhs = np.zeros(f.n)
    p0s = bank.p0_values
    for c0 in range(0, len(p0s), chunk):
        fm = bank.chirp_filters(j, xi, p0_subset=p0s[c0:c0 + chunk]) * env[None, :]
        phased = fm * spec.coeffs[None, :] * phase[None, :]
        F = np.fft.ifft(np.fft.ifftshift(phased, axes=1), axis=1) * f.n * spec.dxi
        lhs += np.sum(np.abs(F) ** 2, axis=0)

    band = inverse_transform(Spectrum(spec.xi0, spec.dxi, env * spec.coeffs), x0=f.x0)
    kern = _nu_kernel(c, j, f.x)
    rhs = np.real(_periodic_convolve(np.abs(band.values) ** 2, kern, f.dx))

    floor = 1e-12 * max(float(rhs.max()), 1e-300)
    mask = rhs > floor
    ratio = float(np.max(lhs[mask] / rhs[mask])) if np.any(mask) else 0.0
    return CheckReport(lhs_sup=float(lhs.max()), rhs_sup=float(rhs.max()),
                       ratio_sup=ratio, constant=constant, passed=bool(ratio <= constant))


def windowed_energy_check(u: SampledFunction, c: Curve, m: int, j: int,
                          constant: float = math.inf) -> CheckReport:
    """(|u through band(m+j)|^2 * 2^j nu(2^j .))(x)  vs
    2^-m sum_{l=2^{m-1}}^{2^{m+1}} M(u)(x - l/2^{m+j})^2.

    Translations of the maximal function are rounded to grid cells.
    """
    spec = forward_transform(u)
    band = inverse_transform(
        Spectrum(spec.xi0, spec.dxi, bump_phi(spec.xi / 2.0 ** (m + j)) * spec.coeffs), x0=u.x0)
    kern = _nu_kernel(c, j, u.x)
    lhs = np.real(_periodic_convolve(np.abs(band.values) ** 2, kern, u.dx))

    mx = hardy_littlewood_max(u).values.real
    acc = np.zeros(u.n)
    for l in range(2 ** (m - 1), 2 ** (m + 1) + 1):
        cells = int(round(l / 2.0 ** (m + j) / u.dx))
        acc += np.roll(mx, cells) ** 2
    rhs = acc / 2.0 ** m

    floor = 1e-12 * max(float(rhs.max()), 1e-300)
    mask = rhs > floor
    ratio = float(np.max(lhs[mask] / rhs[mask])) if np.any(mask) else 0.0
    return CheckReport(lhs_sup=float(lhs.max()), rhs_sup=float(rhs.max()),
                       ratio_sup=ratio, constant=constant, passed=bool(ratio <= constant))


def dual_pointwise_check(g: SampledFunction, h: SampledFunction, c: Curve,
                         m: int, j: int, constant: float = math.inf) -> CheckReport:
    """sum_p0 |(g through block p0)(x) (h through block p0)(x)|^2  vs
    ||g||_inf^2 M(h through the m-block envelope)^2 (x); also reports the
    bounded-block-energy sup  sum_p0 |g through block p0|^2 / ||g||_inf^2.
    """
    bank = FilterBank(curve=c, m=m)
    gspec = forward_transform(g)
    hspec = forward_transform(h)
    xi = gspec.xi
    gm = bank.block_filters(j, xi)

    def through(spec, mults, x0):
        phased = mults * spec.coeffs[None, :] * np.exp(1j * xi * x0)[None, :]
        return np.fft.ifft(np.fft.ifftshift(phased, axes=1), axis=1) * len(xi) * spec.dxi

    G = through(gspec, gm, g.x0)
    H = through(hspec, gm, h.x0)
    lhs = np.sum(np.abs(G * H) ** 2, axis=0)

    env = bump_phi(scale_factor(c, j) / 2.0 ** m * xi)
    h_env = inverse_transform(Spectrum(hspec.xi0, hspec.dxi, env * hspec.coeffs), x0=h.x0)
    mh = hardy_littlewood_max(SampledFunction(h.x0, h.dx, h_env.values)).values.real
    ginf = lp_norm(g, math.inf)
    rhs = ginf ** 2 * mh ** 2

    floor = 1e-12 * max(float(rhs.max()), 1e-300)
    mask = rhs > floor
    ratio = float(np.max(lhs[mask] / rhs[mask])) if np.any(mask) else 0.0
    block_energy_sup = float(np.max(np.sum(np.abs(G) ** 2, axis=0))) / max(ginf ** 2, 1e-300)
    return CheckReport(lhs_sup=float(lhs.max()), rhs_sup=float(rhs.max()),
                       ratio_sup=ratio, constant=constant, passed=bool(ratio <= constant),
                       extras={"block_energy_sup": block_energy_sup})
