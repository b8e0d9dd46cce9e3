import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpdeco.errors import DomainError, GaugeError
from gpdeco.kernels import BathSpec, KickedFastKernel, KickedParams, SpinBosonKernel, UnitKernel, make_spin_spin_single
from gpdeco.qstate import (
    DensityMatrix,
    SystemParams,
    build_eigenpath,
    density_from_angle,
    eigendecompose,
    evolve_dephasing,
)

from oracles import eig_numpy

PI = math.pi


def test_default_period_is_two_pi_over_omega():
    assert SystemParams(1.0).tau == pytest.approx(2 * PI)
    assert SystemParams(1.0, omega=2.0).tau == pytest.approx(PI)


@pytest.mark.parametrize("theta0", [-0.1, PI + 0.1, float("nan")])
def test_theta_out_of_range_rejected(theta0):
    with pytest.raises(DomainError):
        SystemParams(theta0)


def test_density_from_angle_is_pure():
    rho = density_from_angle(PI / 3)
    assert rho.p_e == pytest.approx(math.cos(PI / 6) ** 2)
    assert rho.coherence == pytest.approx(0.5 * math.sin(PI / 3))
    assert rho.bloch_length() == pytest.approx(1.0)
    assert rho.is_positive()


def test_dephasing_keeps_populations():
    params = SystemParams(PI / 3)
    kernel = make_spin_spin_single(0.2)
    rho = evolve_dephasing(params, kernel, 1.3)
    assert rho.p_e == pytest.approx(math.cos(PI / 6) ** 2)
    expected = 0.5 * math.sin(PI / 3) * np.exp(-1.3j) * math.cos(PI * 0.2 * 1.3)
    assert rho.coherence == pytest.approx(expected, abs=1e-15)
    assert np.allclose(rho.matrix(), rho.matrix().conj().T)


@settings(max_examples=200, deadline=None)
@given(
    p_e=st.floats(0.0, 1.0),
    mag=st.floats(0.0, 0.5),
    phase=st.floats(-PI, PI),
)
def test_eigendecompose_matches_dense_solver(p_e, mag, phase):
    limit = math.sqrt(p_e * (1 - p_e))
    coh = min(mag, limit) * np.exp(1j * phase)
    rho = DensityMatrix(p_e, coh)
    dec = eigendecompose(rho)
    ref_vals, _ = eig_numpy(p_e, coh)
    assert dec.eps_plus == pytest.approx(ref_vals[1], abs=1e-12)
    assert dec.eps_minus == pytest.approx(ref_vals[0], abs=1e-12)
    m = rho.matrix()
    if not dec.degenerate:
        for eps, v in ((dec.eps_plus, dec.v_plus), (dec.eps_minus, dec.v_minus)):
            assert np.linalg.norm(v) == pytest.approx(1.0)
            assert np.allclose(m @ v, eps * v, atol=1e-12)
        assert abs(np.vdot(dec.v_plus, dec.v_minus)) < 1e-12


def test_maximally_mixed_state_is_degenerate():
    assert eigendecompose(DensityMatrix(0.5, 0.0)).degenerate


def test_eigenpath_requires_even_steps():
    with pytest.raises(DomainError):
        build_eigenpath(SystemParams(1.0), UnitKernel(), 101)


def test_degenerate_endpoint_raises():
    # cos(pi J tau) = 0 at the end of the loop leaves the equator state maximally mixed
    kernel = make_spin_spin_single(1.0 / (4 * PI))
    with pytest.raises(GaugeError) as info:
        build_eigenpath(SystemParams(PI / 2), kernel, 256)
    assert info.value.time == pytest.approx(2 * PI)


def test_branches_tracked_through_interior_crossings():
    kernel = make_spin_spin_single(1.0 / PI)
    path = build_eigenpath(SystemParams(PI / 2), kernel, 4096)
    assert path.degenerate_times == pytest.approx([PI / 2, 3 * PI / 2])
    ov = path.overlaps(1)
    assert np.min(ov.real) > 0.99


def test_eigenpath_gauge_is_continuous():
    path = build_eigenpath(SystemParams(PI / 3), make_spin_spin_single(0.05), 512)
    ov = path.overlaps(1)
    assert np.all(ov.real > 0.99)
    assert path.n_steps == 512
    assert len(path.decomps) == 513


def test_coherence_examples():
    params = SystemParams(PI / 3)
    assert evolve_dephasing(params, UnitKernel(), params.tau).coherence == pytest.approx(0.5 * math.sin(PI / 3))
    J = 0.2
    assert abs(evolve_dephasing(params, make_spin_spin_single(J), 1 / (2 * J)).coherence) < 1e-16
    bath = BathSpec(1e-3, 100.0)
    eq = SystemParams(PI / 2)
    rho = evolve_dephasing(eq, SpinBosonKernel(bath), eq.tau)
    assert abs(rho.coherence) == pytest.approx(0.5 * (1 + 1e4 * eq.tau**2) ** -0.5e-3, rel=1e-12)


def test_random_matrices_against_dense_solver():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        p_e = rng.uniform()
        coh = rng.uniform() * math.sqrt(p_e * (1 - p_e)) * np.exp(1j * rng.uniform(-PI, PI))
        rho = DensityMatrix(p_e, coh)
        dec = eigendecompose(rho)
        vals, _ = eig_numpy(p_e, coh)
        assert [dec.eps_minus, dec.eps_plus] == pytest.approx(vals, abs=1e-12)
        m = rho.matrix()
        assert np.linalg.norm(m @ dec.v_plus - dec.eps_plus * dec.v_plus) < 1e-12
        assert np.linalg.norm(m @ dec.v_minus - dec.eps_minus * dec.v_minus) < 1e-12


def test_gauge_convention_at_start():
    dec = eigendecompose(density_from_angle(2.0))
    for v in (dec.v_plus, dec.v_minus):
        k = int(np.argmax(np.abs(v)))
        assert v[k].imag == 0.0 and v[k].real > 0


def test_spectrum_under_dephasing():
    theta0, f = 1.1, 0.6
    rho = DensityMatrix(math.cos(theta0 / 2) ** 2, 0.5 * math.sin(theta0) * f * np.exp(0.4j))
    dec = eigendecompose(rho)
    r = math.sqrt(math.cos(theta0) ** 2 + math.sin(theta0) ** 2 * f * f)
    assert dec.eps_plus == pytest.approx(0.5 * (1 + r))
    assert dec.eps_minus == pytest.approx(0.5 * (1 - r))
    assert dec.eps_plus + dec.eps_minus == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "kernel",
    [UnitKernel(), make_spin_spin_single(0.3, 0.2), KickedFastKernel(KickedParams(0.5, 1.0, 0.4)),
     SpinBosonKernel(BathSpec(0.05, 50.0, temperature=1.0))],
    ids=["unit", "spin-spin", "kicked", "spin-boson"],
)
def test_path_invariants(kernel):
    params = SystemParams(1.2)
    path = build_eigenpath(params, kernel, 256)
    finer = build_eigenpath(params, kernel, 512)
    assert np.all(path.overlaps(1).real > 0)
    assert np.allclose(path.eigvals.sum(axis=1), 1.0, atol=1e-15)
    assert np.allclose(finer.eigvals[::2], path.eigvals, atol=1e-15)
    if isinstance(kernel, UnitKernel):
        assert np.vdot(path.eigvecs[0, 0], path.eigvecs[-1, 0]) == pytest.approx(1.0)
