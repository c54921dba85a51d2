import math
from dataclasses import replace

import numpy as np
import pytest

from fracstoch import (
    ConfigError,
    HeatExampleConfig,
    MlParams,
    TimeGrid,
    UnsupportedKernel,
    build_spec,
    check_existence,
    ml_eval_array,
    picard_solve,
    sample_noise,
    scale_amplitudes,
    suggested_constants,
)
from fracstoch.phase_space import PrehistoryView, constant_prehistory
from fracstoch.spectral import SpectralField

N2_STAR_A1 = 1.6575198539828996  # 1 + sqrt((1 - e^-2)/2), frozen closed form


def zero_kernel_cfg(**kw):
    # pure fractional heat: no coefficients and no impulse windows
    base = dict(
        n_modes=4,
        impulse_r=(),
        impulse_s=(),
        b_amp=0.0,
        f_amp=0.0,
        h_amp=0.0,
        l_amp=(),
        l_decay=(),
        m_amp=(),
        m_decay=(),
        k1_amp=0.0,
        k2_amp=0.0,
        k_fn_amp=0.0,
    )
    base.update(kw)
    return HeatExampleConfig(**base)


def test_zero_kernels_give_empty_coefficients():
    spec = build_spec(zero_kernel_cfg())
    assert spec.b is None and spec.f is None and spec.h is None
    assert spec.k1 is None and spec.k2 is None and spec.k_fn is None


def test_zero_kernels_reproduce_deterministic_collapse():
    cfg = zero_kernel_cfg()
    spec = build_spec(cfg)
    grid = TimeGrid.uniform(cfg.horizon, 1.0 / 128, spec.schedule)
    noise = sample_noise(grid, spec.noise)
    res = picard_solve(spec, grid, noise)
    vals = res.path.values_at(grid.nodes)
    x0 = spec.psi_view().at_zero().coeffs
    xi1 = spec.xi1.coeffs
    for n, mu in enumerate(spec.operator.eigenvalues):
        z = -mu * grid.nodes**cfg.q
        want = ml_eval_array(MlParams(cfg.q, 1.0), z) * x0[n] + grid.nodes * ml_eval_array(
            MlParams(cfg.q, 2.0), z
        ) * xi1[n]
        assert np.max(np.abs(vals[:, n] - want)) <= 1e-6


def test_sigma1_zero_kills_delay():
    cfg = zero_kernel_cfg(sigma1_c0=0.0, sigma1_c1=0.0)
    spec = build_spec(cfg)
    from fracstoch import eval_delay

    path_view = PrehistoryView(spec.prehistory, cfg.n_modes)
    assert eval_delay(spec.delay, 0.8, path_view) == 0.8


def test_linear_impulse_start_closed_form():
    # a_i(w) = e^{w} against a constant history equals the constant
    from fracstoch.heat_example import _LinearImpulseStart
    from fracstoch.phase_space import constant_prehistory, PrehistoryView

    c = SpectralField(np.array([2.0, -1.0, 0.5]))
    view = PrehistoryView(constant_prehistory(c), 3)
    l_map = _LinearImpulseStart(1.0, 1.0, 20.0, 16001)
    got = l_map(view)
    # truncation ~ e^-20; trapezoid error ~ h^2/12 at h = 20/16000
    assert np.max(np.abs(got.coeffs - c.coeffs)) <= 1e-6


def test_build_spec_rejects_divergent_kernels():
    with pytest.raises(ConfigError):
        build_spec(HeatExampleConfig(b_decay=0.0))
    with pytest.raises(ConfigError):
        build_spec(HeatExampleConfig(l_decay=(2.0, -1.0)))


def test_suggested_constants_zero_kernels():
    c = suggested_constants(zero_kernel_cfg())
    assert c.M_b == 0.0
    assert all(m == 0.0 for m in c.M_i)
    assert all(l == 0.0 for l in c.lambda_i)
    assert c.L_k1 == 0.0 and c.L_k2 == 0.0


def test_suggested_constants_n2_star():
    c = suggested_constants(HeatExampleConfig())
    assert c.N2_star == pytest.approx(N2_STAR_A1, abs=1e-12)
    assert c.N1 == 1.0
    assert c.N3_star == 1.0


def test_growth_constants_quadratic_in_amplitude():
    c1 = suggested_constants(HeatExampleConfig())
    c2 = suggested_constants(
        replace(HeatExampleConfig(), b_amp=2 * HeatExampleConfig().b_amp)
    )
    assert c2.M_b == pytest.approx(4.0 * c1.M_b)


def test_unsupported_slow_decay():
    cfg = HeatExampleConfig(l_decay=(0.5, 0.5), tail_rate=2.0)
    with pytest.raises(UnsupportedKernel):
        suggested_constants(cfg)


def test_default_config_satisfies_condition():
    rep = check_existence(suggested_constants(HeatExampleConfig()))
    assert rep.satisfied
    assert rep.delta1 < 1.0 and rep.delta2 < 1.0


def test_times_100_amplitudes_flip_condition():
    rep = check_existence(suggested_constants(scale_amplitudes(HeatExampleConfig(), 100.0)))
    assert not rep.satisfied


def test_default_picard_converges_and_contracts():
    cfg = HeatExampleConfig()
    spec = build_spec(cfg)
    grid = TimeGrid.uniform(cfg.horizon, 1.0 / 128, spec.schedule)
    noise = sample_noise(grid, spec.noise)
    res = picard_solve(spec, grid, noise, tol=1e-10, max_iter=20)
    d = res.distances
    assert res.sweeps <= 20
    # contraction observed over at least five sweeps, strictly monotone
    assert res.sweeps >= 5
    assert all(d[i + 1] < d[i] for i in range(len(d) - 1))


def test_prehistory_decays_exponentially():
    cfg = HeatExampleConfig()
    spec = build_spec(cfg)
    far = spec.prehistory(np.array([-5.0]))[0]
    near = spec.prehistory(np.array([0.0]))[0]
    assert np.linalg.norm(far) == pytest.approx(math.exp(-5.0) * np.linalg.norm(near), rel=1e-12)
