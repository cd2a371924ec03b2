import math

import numpy as np
import pytest

from bhtlab.bumps import bump_phi
from bhtlab.signal import (EnsembleShape, SampledFunction, forward_transform, from_binary,
                           from_csv, inverse_transform, lp_norm, make_ensemble,
                           multiply_spectrum, symmetric_grid, to_binary, to_csv)


def grid_fn(values, half=20.0):
    n = len(values)
    x0, dx = symmetric_grid(half, n)
    return SampledFunction(x0, dx, values)


def make_gaussian(half=20.0, n=2 ** 12):
    x0, dx = symmetric_grid(half, n)
    x = x0 + dx * np.arange(n)
    return SampledFunction(x0, dx, np.exp(-x ** 2 / 2.0))


def test_gaussian_pair():
    f = make_gaussian()
    spec = forward_transform(f)
    ref = np.exp(-spec.xi ** 2 / 2.0) / math.sqrt(2.0 * math.pi)
    assert np.max(np.abs(spec.coeffs - ref)) < 1e-8


def test_roundtrip_identity():
    rng = np.random.default_rng(0)
    f = grid_fn(rng.normal(size=2 ** 10) + 1j * rng.normal(size=2 ** 10))
    back = inverse_transform(forward_transform(f), x0=f.x0)
    assert np.max(np.abs(back.values - f.values)) < 1e-12 * np.max(np.abs(f.values))


def test_parseval():
    for seed in range(3):
        rng = np.random.default_rng(seed)
        f = grid_fn(rng.normal(size=2 ** 10) + 1j * rng.normal(size=2 ** 10))
        spec = forward_transform(f)
        lhs = lp_norm(f, 2.0) ** 2
        rhs = 2.0 * math.pi * np.sum(np.abs(spec.coeffs) ** 2) * spec.dxi
        assert abs(lhs - rhs) < 1e-10 * lhs


def test_zero_function_zero_spectrum():
    f = grid_fn(np.zeros(2 ** 10))
    assert np.all(forward_transform(f).coeffs == 0)


def test_modulation_law():
    f = make_gaussian()
    spec = forward_transform(f)
    shift = 16
    w0 = shift * spec.dxi  # modulation on the frequency grid: exact index shift
    mod = SampledFunction(f.x0, f.dx, f.values * np.exp(1j * w0 * f.x))
    a = forward_transform(mod).coeffs
    b = spec.coeffs
    assert np.max(np.abs(a[shift:] - b[:-shift])) < 1e-10


def test_multiplier_identity_and_composition():
    rng = np.random.default_rng(1)
    f = grid_fn(rng.normal(size=2 ** 10))
    one = multiply_spectrum(f, lambda xi: np.ones_like(xi))
    assert np.max(np.abs(one.values - f.values)) < 1e-12

    m1 = lambda xi: np.exp(-xi ** 2 / 50.0)
    m2 = lambda xi: 1.0 / (1.0 + xi ** 2)
    seq = multiply_spectrum(multiply_spectrum(f, m1), m2)
    both = multiply_spectrum(f, lambda xi: m1(xi) * m2(xi))
    assert np.max(np.abs(seq.values - both.values)) < 1e-10 * np.max(np.abs(f.values))


def test_multiplier_nonfinite_rejected():
    f = make_gaussian()
    with pytest.raises(ValueError), np.errstate(divide="ignore"):
        multiply_spectrum(f, lambda xi: 1.0 / xi)   # infinite at the zero node
    with pytest.raises(ValueError):
        multiply_spectrum(f, np.ones(4))            # wrong grid


def test_multiplier_linearity():
    rng = np.random.default_rng(2)
    f = grid_fn(rng.normal(size=2 ** 10))
    g = grid_fn(rng.normal(size=2 ** 10))
    m = lambda xi: np.cos(xi / 10.0)
    lhs = multiply_spectrum(SampledFunction(f.x0, f.dx, f.values + 2.0 * g.values), m)
    rhs = multiply_spectrum(f, m).values + 2.0 * multiply_spectrum(g, m).values
    assert np.max(np.abs(lhs.values - rhs)) < 1e-12 * np.max(np.abs(rhs))


def test_disjoint_band_multiplier_kills():
    f = make_gaussian()  # spectrum concentrated near 0
    out = multiply_spectrum(f, lambda xi: bump_phi(xi / 2.0 ** 7))
    # band lives on |xi| in (12.8, 1280); the Gaussian spectrum there is ~e^{-80}
    assert lp_norm(out, 2.0) < 1e-12 * lp_norm(f, 2.0)


def test_indicator_multiplier_keeps_function():
    f = make_gaussian()
    out = multiply_spectrum(f, lambda xi: (np.abs(xi) < 30.0).astype(float))
    assert lp_norm(SampledFunction(f.x0, f.dx, out.values - f.values), 2.0) \
        < 1e-10 * lp_norm(f, 2.0)


def test_lp_norms():
    n = 2 ** 12
    x0, dx = symmetric_grid(8.0, n)
    x = x0 + dx * np.arange(n)
    ind = SampledFunction(x0, dx, ((x >= 0) & (x < 1)).astype(complex))
    assert abs(lp_norm(ind, 2.0) - 1.0) < 2.0 * dx

    g = SampledFunction(x0, dx, np.exp(-x ** 2))
    assert abs(lp_norm(g, 1.0) - math.sqrt(math.pi)) < 1e-6

    f = SampledFunction(x0, dx, np.exp(-x ** 2) * np.exp(1j * x))
    for p in (1.0, 2.0, 3.0, math.inf):
        assert abs(lp_norm(SampledFunction(x0, dx, -2.5 * f.values), p)
                   - 2.5 * lp_norm(f, p)) < 1e-12 * lp_norm(f, p)

    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_bump_phi_pins():
    assert bump_phi(1.0) == 1.0
    assert bump_phi(0.25) == 1.0
    assert bump_phi(1.0 / 20.0) == 0.0
    assert bump_phi(12.0) == 0.0
    x = np.linspace(-12, 12, 1001)
    assert np.max(np.abs(bump_phi(x) - bump_phi(-x))) == 0.0
    assert np.all((bump_phi(x) >= 0) & (bump_phi(x) <= 1))


def test_ensemble_determinism_and_decay():
    shape = EnsembleShape()
    a = make_ensemble(7, 2, shape)
    b = make_ensemble(7, 2, shape)
    for fa, fb in zip(a, b):
        assert np.array_equal(fa.values, fb.values)
    for f in a:
        edge = max(abs(f.values[0]), abs(f.values[-1]))
        assert edge < 1e-12
        for p in (1.0, 2.0, 4.0, math.inf):
            assert np.isfinite(lp_norm(f, p))


def test_ensemble_mean_norm_stable_across_seeds():
    shape = EnsembleShape()
    means = []
    for seed in (1, 2, 3, 4):
        fs = make_ensemble(seed, 8, shape, n=2 ** 12, dx=128.0 / 2 ** 12)
        means.append(np.mean([lp_norm(f, 2.0) for f in fs]))
    assert max(means) / min(means) < 1.2


def test_lacunary_and_step_kinds():
    for kind in ("lacunary", "step"):
        fs = make_ensemble(3, 2, EnsembleShape(kind=kind), n=2 ** 12, dx=64.0 / 2 ** 12)
        for f in fs:
            assert np.all(np.isfinite(f.values.view(float)))


def test_serialization_roundtrips(tmp_path):
    f = make_ensemble(5, 1, EnsembleShape(), n=2 ** 10, dx=64.0 / 2 ** 10)[0]
    csv_path = tmp_path / "f.csv"
    to_csv(f, csv_path)
    f2 = from_csv(csv_path)
    assert np.max(np.abs(f2.values - f.values)) < 1e-15
    assert f2.x0 == f.x0 and abs(f2.dx - f.dx) < 1e-15

    bin_path = tmp_path / "f.bin"
    to_binary(f, bin_path)
    f3 = from_binary(bin_path)
    # complex64 payload: single-precision fidelity
    assert np.max(np.abs(f3.values - f.values)) < 1e-6 * max(1.0, np.max(np.abs(f.values)))
    assert f3.x0 == f.x0 and f3.dx == f.dx


def test_sampled_function_validation():
    with pytest.raises(ValueError):
        SampledFunction(0.0, 0.1, np.ones(24))          # not a power of two
    with pytest.raises(ValueError):
        SampledFunction(0.0, 0.1, np.ones(8))           # too short
    with pytest.raises(ValueError):
        SampledFunction(0.0, -1.0, np.ones(16))
    bad = np.ones(16)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        SampledFunction(0.0, 0.1, bad)
