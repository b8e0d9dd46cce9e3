import math

import numpy as np
import pytest

from gpdeco.errors import DomainError
from gpdeco.kernels import (
    BathSpec,
    KickedParams,
    SpinBosonKernel,
    SpinEnvironment,
    decoherence_exponent_A,
    diffusion_D,
    factor_kicked_fast,
    factor_kicked_small_angle,
    factor_spin_boson,
    factor_spin_spin,
    spectral_density,
)

from oracles import brute_force_spin_spin

PI = math.pi


def test_spectral_density_shape():
    bath = BathSpec(0.01, 10.0, exponent=3)
    w = np.array([0.5, 10.0, 30.0])
    assert np.allclose(spectral_density(bath, w), 0.01 * w * (w / 10.0) ** 2 * np.exp(-w / 10.0))


@pytest.mark.parametrize(
    "kwargs",
    [dict(gamma0=-1, cutoff=1), dict(gamma0=1, cutoff=0), dict(gamma0=1, cutoff=1, exponent=0.5),
     dict(gamma0=1, cutoff=1, temperature=-1)],
)
def test_bath_validation(kwargs):
    with pytest.raises(DomainError):
        BathSpec(**kwargs)


@pytest.mark.parametrize("s", [0.0, 1e-3, 0.01, 0.3, 1.0, 7.0, 60.0])
def test_zero_temperature_closed_forms(s):
    bath = BathSpec(1e-3, 100.0)
    lam2 = 1e4
    assert diffusion_D(bath, s) == pytest.approx(1e-3 * lam2 * s / (1 + lam2 * s * s), rel=1e-10, abs=1e-300)
    assert decoherence_exponent_A(bath, s) == pytest.approx(0.5e-3 * math.log1p(lam2 * s * s), rel=1e-10, abs=1e-300)
    assert factor_spin_boson(bath, s) == pytest.approx((1 + lam2 * s * s) ** -0.5e-3, rel=1e-12)


def test_high_temperature_plateau():
    bath = BathSpec(1e-3, 100.0, temperature=10.0)
    # the plateau is approached as 1/(cutoff * s)
    assert diffusion_D(bath, 30.0) == pytest.approx(PI * 1e-3 * 10.0, rel=1e-3)
    t = 5.0
    assert decoherence_exponent_A(bath, t) == pytest.approx(PI * 1e-3 * 10.0 * t, rel=2e-2)


def test_high_temperature_decoherence_time():
    bath = BathSpec(1e-3, 100.0, temperature=10.0)
    t_d = 1.0 / (1e-3 * PI * 10.0)
    assert abs(factor_spin_boson(bath, t_d)) == pytest.approx(math.exp(-1), rel=2e-2)


def test_exponent_is_monotone():
    bath = BathSpec(1e-2, 50.0, temperature=2.0)
    a = [decoherence_exponent_A(bath, t) for t in np.linspace(0, 6, 25)]
    assert np.all(np.diff(a) >= 0)


def test_closed_system_factor_is_one():
    bath = BathSpec(0.0, 100.0, temperature=3.0)
    assert factor_spin_boson(bath, 2.0) == 1.0
    assert np.allclose(SpinBosonKernel(bath)(np.linspace(0, 2 * PI, 9)), 1.0)


@pytest.mark.parametrize("temperature", [0.0, 10.0])
def test_chebyshev_table_matches_quadrature(temperature):
    bath = BathSpec(1e-3, 100.0, temperature=temperature)
    kernel = SpinBosonKernel(bath)
    assert kernel.table_error < 1e-12
    ts = np.array([0.0, 1e-4, 0.0137, 0.5, 2.2, 5.9, 2 * PI, 9.0])
    direct = np.array([decoherence_exponent_A(bath, t) for t in ts])
    assert np.allclose(kernel.exponent(ts), direct, rtol=1e-10, atol=1e-14)


def test_single_spin_unpolarized_is_cosine():
    env = SpinEnvironment.single(0.3)
    t = np.linspace(0, 10, 50)
    assert np.allclose(factor_spin_spin(env, t), np.cos(PI * 0.3 * t), atol=1e-15)


def test_single_spin_eigenstate_is_pure_phase():
    env = SpinEnvironment((0.3,), ((1.0, 0.0),))
    t = np.linspace(0, 10, 50)
    z = factor_spin_spin(env, t)
    assert np.allclose(z, np.exp(1j * PI * 0.3 * t))


def test_single_spin_factor_is_periodic():
    env = SpinEnvironment.single(0.25, polarization=0.4)
    t = np.linspace(0, 3, 40)
    assert np.allclose(factor_spin_spin(env, t + 2 / 0.25), factor_spin_spin(env, t))
    assert abs(factor_spin_spin(env, 2 / 0.25)) == pytest.approx(1.0)


def test_many_spins_match_brute_force_enumeration():
    rng = np.random.default_rng(7)
    n = 20
    couplings = rng.uniform(0, 0.05, n)
    s = 1 / math.sqrt(2)
    amps = [(s, s)] * n
    t = np.array([0.0, 0.7, 2.5, 2 * PI, 15.0])
    z = factor_spin_spin(SpinEnvironment(couplings, amps), t)
    assert np.allclose(z, brute_force_spin_spin(couplings, amps, t), atol=1e-12)
    assert np.all(np.abs(z) <= 1 + 1e-15)


def test_polarized_brute_force_enumeration():
    rng = np.random.default_rng(11)
    couplings = rng.uniform(0, 0.2, 8)
    a = rng.uniform(0, 1, 8)
    amps = list(zip(np.sqrt(a), np.sqrt(1 - a)))
    t = np.linspace(0, 8, 7)
    assert np.allclose(factor_spin_spin(SpinEnvironment(couplings, amps), t),
                       brute_force_spin_spin(couplings, amps, t), atol=1e-12)


def test_kicked_fast_factor():
    t = np.linspace(0, 20, 30)
    assert np.allclose(factor_kicked_fast(KickedParams(0.0, 2.0), t), 1.0, atol=1e-12)
    p = KickedParams(0.1, 2.0, polarization=0.5)
    f = factor_kicked_fast(p, t)
    decay = np.exp(-(PI * 0.1) ** 2 * t / 4.0)
    assert np.allclose(f.real, decay)
    assert np.allclose(f.imag, -0.5 * math.sin(PI * 0.1 / 2.0) * decay)


def test_small_angle_factor():
    p = KickedParams(0.01, 1.0, polarization=0.0, alpha=PI / 20)
    assert p.epsilon == pytest.approx(0.016449, abs=1e-6)
    t_d = 1 / (p.kick_rate * p.epsilon)
    f = factor_kicked_small_angle(p, t_d)
    assert abs(f) / (1 + p.epsilon / 2) == pytest.approx(math.exp(-1) * abs(math.cos(PI * 0.01 * t_d)))
    # no kicks: reduces to the bare single-spin factor
    p0 = KickedParams(0.2, 1.0, polarization=0.3, alpha=0.0)
    t = np.linspace(0, 5, 11)
    assert np.allclose(factor_kicked_small_angle(p0, t), np.cos(PI * 0.2 * t) - 0.3j * np.sin(PI * 0.2 * t))
