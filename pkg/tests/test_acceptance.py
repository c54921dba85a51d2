"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from fracstoch import (
    DelaySpec,
    HeatExampleConfig,
    ImpulseSchedule,
    MaxIterations,
    MlParams,
    NoiseConfig,
    OperatorSpec,
    PhaseNormConfig,
    ProblemSpec,
    SpectralField,
    TimeGrid,
    branch_continuity_check,
    build_spec,
    caputo_residual,
    check_existence,
    compensated_poisson_integral,
    compute_delta1,
    compute_delta2,
    constant_prehistory,
    ito_integral,
    history_norm_bound_check,
    ml_eval_array,
    picard_solve,
    sample_noise,
    sample_poisson,
    sample_wiener,
    scale_amplitudes,
    suggested_constants,
)
from fracstoch.phase_space import HistoryPath

from oracles import talbot_S, talbot_T
from test_existence import independent_delta1, independent_delta2, toy_constants


def _report(name: str, ok: bool, elapsed: float, limit: float) -> None:
    status = "PASS" if ok and elapsed < limit else "FAIL"
    print(f"[{status}] {name}: {elapsed:.2f}s (limit {limit:.0f}s)")
    assert ok, name
    assert elapsed < limit, f"{name} exceeded its runtime limit"


def test_criterion_1_mittag_leffler_collapse():
    t0 = time.time()
    z = np.linspace(-5.0, 5.0, 201)
    err_exp = np.max(np.abs(ml_eval_array(MlParams(1, 1), z) - np.exp(z)))
    err_cos = np.max(np.abs(ml_eval_array(MlParams(2, 1), -(z**2)) - np.cos(z)))
    ok = err_exp <= 1e-10 and err_cos <= 1e-10
    _report("criterion 1 (Mittag-Leffler collapse)", ok, time.time() - t0, 1.0)


def test_criterion_2_resolvent_laplace_pair():
    from fracstoch import relaxation_S, relaxation_T

    t0 = time.time()
    worst = 0.0
    for q in (1.25, 1.5, 1.9):
        for mu in (1.0, 4.0, 25.0):
            for t in (0.5, 1.0, 2.0):
                worst = max(worst, abs(relaxation_T(q, mu, t) - talbot_T(q, mu, t)))
                worst = max(worst, abs(relaxation_S(q, mu, t) - talbot_S(q, mu, t)))
    _report("criterion 2 (Laplace pair vs Talbot, 27 combos)", worst <= 1e-6,
            time.time() - t0, 10.0)


def _collapse_spec(q):
    n_modes = 3
    op = OperatorSpec.dirichlet_laplacian(n_modes)
    x0 = SpectralField(np.array([1.0, 0.6, -0.4]))
    return ProblemSpec(
        q=q,
        operator=op,
        schedule=ImpulseSchedule(horizon=1.0),
        delay=DelaySpec(sigma1=lambda t: 0.0, sigma2=lambda x: 1.0),
        prehistory=constant_prehistory(x0),
        xi1=SpectralField(np.array([0.5, -0.2, 0.1])),
        noise=NoiseConfig(
            q_eigenvalues=np.zeros(n_modes),
            marks=np.array([1.0]),
            mark_weights=np.array([0.0]),
        ),
        phase=PhaseNormConfig(tail_weight=lambda s: np.exp(2.0 * s), tail_nodes=101),
    )


def test_criterion_3_deterministic_collapse():
    t0 = time.time()
    ok = True
    for q in (1.25, 1.5, 1.9):
        spec = _collapse_spec(q)
        grid = TimeGrid.uniform(1.0, 1.0 / 128)
        noise = sample_noise(grid, spec.noise)
        vals = picard_solve(spec, grid, noise).path.values_at(grid.nodes)
        x0 = spec.psi_view().at_zero().coeffs
        for n, mu in enumerate(spec.operator.eigenvalues):
            z = -mu * grid.nodes**q
            want = ml_eval_array(MlParams(q, 1.0), z) * x0[n]
            want += grid.nodes * ml_eval_array(MlParams(q, 2.0), z) * spec.xi1.coeffs[n]
            ok &= bool(np.max(np.abs(vals[:, n] - want)) <= 1e-6)
        # residual refinement study on the worst mode
        residuals = []
        for n_steps in (128, 256):
            g = TimeGrid.uniform(1.0, 1.0 / n_steps)
            nz = sample_noise(g, spec.noise)
            v = picard_solve(spec, g, nz).path.values_at(g.nodes)
            worst = max(
                caputo_residual(v[:, n], q, -mu * v[:, n], g.nodes,
                                dx0=spec.xi1.coeffs[n])
                for n, mu in enumerate(spec.operator.eigenvalues)
            )
            residuals.append(worst)
        ok &= residuals[1] < residuals[0]
        ok &= math.log2(residuals[0] / residuals[1]) >= 0.5
    _report("criterion 3 (deterministic collapse + residual order)", ok,
            time.time() - t0, 30.0)


def test_criterion_4_ito_isometry():
    t0 = time.time()
    n = 10_000
    ok = True

    # integrand 1: unit on one mode
    cfg = NoiseConfig(q_eigenvalues=np.array([0.7]), marks=np.array([1.0]),
                      mark_weights=np.array([0.0]), rng_seed=11)
    grid = TimeGrid.uniform(1.0, 1.0 / 32)
    h = np.ones((1, 32))
    vals = np.array([
        ito_integral(h, sample_wiener(grid, cfg.with_stream(p))).coeffs[0]
        for p in range(n)
    ])
    target = 0.7 * 1.0
    ok &= abs(np.mean(vals**2) - target) <= 3.0 * math.sqrt(2.0 / n) * target

    # integrand 2: deterministic ramp h(t) = t
    cfg = replace(cfg, q_eigenvalues=np.array([1.0]), rng_seed=12)
    grid = TimeGrid.uniform(1.0, 1.0 / 64)
    h = grid.nodes[:-1][None, :]
    target = float(np.sum(h[0] ** 2 * np.diff(grid.nodes)))
    vals = np.array([
        ito_integral(h, sample_wiener(grid, cfg.with_stream(p))).coeffs[0]
        for p in range(n)
    ])
    ok &= abs(np.mean(vals**2) - target) <= 3.0 * math.sqrt(2.0 / n) * target

    # integrand 3: two modes, distinct constants
    cfg = replace(cfg, q_eigenvalues=np.array([0.5, 0.2]), rng_seed=13)
    grid = TimeGrid.uniform(1.0, 1.0 / 32)
    h = np.vstack([2.0 * np.ones(32), -1.0 * np.ones(32)])
    target = 0.5 * 4.0 + 0.2 * 1.0
    vals = np.array([
        float(np.sum(ito_integral(h, sample_wiener(grid, cfg.with_stream(p))).coeffs ** 2))
        for p in range(n)
    ])
    se = np.std(vals, ddof=1) / math.sqrt(n)
    ok &= abs(np.mean(vals) - target) <= 3.0 * se
    _report("criterion 4 (Ito isometry, 3 integrands x 1e4 paths)", ok,
            time.time() - t0, 60.0)


def test_criterion_5_compensated_poisson():
    t0 = time.time()
    n = 10_000
    cfg = NoiseConfig(
        q_eigenvalues=np.array([1.0]),
        marks=np.array([1.0, 2.0]),
        mark_weights=np.array([1.0, 1.0]),
        jump_rate_scale=1.0,
        rng_seed=21,
    )
    grid = TimeGrid.uniform(1.0, 1.0 / 16)

    def f(t, mark):
        return SpectralField(np.array([mark]))

    vals = np.empty(n)
    for p in range(n):
        c = cfg.with_stream(p)
        events = sample_poisson(grid, c)
        vals[p] = compensated_poisson_integral(f, events, c, grid).coeffs[0]
    se = np.std(vals, ddof=1) / math.sqrt(n)
    ok = abs(np.mean(vals)) <= 3.0 * se
    _report("criterion 5 (compensated Poisson zero mean, 1e4 paths)", ok,
            time.time() - t0, 30.0)


def _continuity_toy(n_modes=2):
    """Two impulses, constant start maps, full coefficient set, bounded-lag delay."""
    op = OperatorSpec.dirichlet_laplacian(n_modes)
    amp = 0.05
    schedule = ImpulseSchedule(
        horizon=1.0,
        r=(0.25, 0.625),
        s=(0.375, 0.75),
        l_maps=(
            lambda view: SpectralField(np.array([0.25, -0.05])),
            lambda view: SpectralField(np.array([0.15, 0.1])),
        ),
        m_maps=(
            lambda tau, view: amp * view.at_zero(),
            lambda tau, view: SpectralField(np.array([amp * math.sin(3 * tau), 0.0])),
        ),
    )
    noise = NoiseConfig(
        q_eigenvalues=np.array([0.02, 0.005]),
        marks=np.array([1.0, -0.5]),
        mark_weights=np.array([1.0, 1.0]),
        jump_rate_scale=1.0,
        rng_seed=0,
    )
    return ProblemSpec(
        q=1.5,
        operator=op,
        schedule=schedule,
        delay=DelaySpec(sigma1=lambda t: 0.2, sigma2=lambda x: 0.5),
        prehistory=constant_prehistory(SpectralField(np.array([1.0, 0.3]))),
        xi1=SpectralField(np.array([0.5, -0.1])),
        noise=noise,
        phase=PhaseNormConfig(tail_weight=lambda s: np.exp(2.0 * s), tail_nodes=101),
        b=lambda tau, view: amp * view.at_zero(),
        f=lambda tau, mark, view: (amp * mark) * view.at_zero(),
        h=lambda tau, view: amp * view.at_zero(),
    )


def test_criterion_6_branch_continuity():
    t0 = time.time()
    ok = True
    # deterministic variant: quiet noise
    det = _continuity_toy()
    det = replace(det, noise=replace(det.noise, q_eigenvalues=np.zeros(2),
                                     mark_weights=np.array([0.0, 0.0])))
    grid = TimeGrid.uniform(1.0, 1.0 / 64, det.schedule)
    noise = sample_noise(grid, det.noise)
    res = picard_solve(det, grid, noise)
    for _, gap in branch_continuity_check(res.path, det, grid, noise):
        ok &= gap <= 1e-8
    # stochastic: 100 independent paths
    base = _continuity_toy()
    for p in range(100):
        cfg = base.noise.with_stream(p)
        spec = replace(base, noise=cfg)
        nz = sample_noise(grid, cfg)
        r = picard_solve(spec, grid, nz)
        for _, gap in branch_continuity_check(r.path, spec, grid, nz):
            ok &= gap <= 1e-8
    _report("criterion 6 (branch continuity, N=2, 100 stochastic paths)", ok,
            time.time() - t0, 30.0)


def test_criterion_7_existence_checker():
    t0 = time.time()
    c = toy_constants()
    d1, d2 = compute_delta1(c), compute_delta2(c)
    ok = abs(d1 - 0.397) <= 1e-12 and abs(d2 - 0.16) <= 1e-12
    ok &= abs(d1 - independent_delta1(c)) <= 1e-12
    ok &= abs(d2 - independent_delta2(c)) <= 1e-12
    # monotonicity under 50 random positive perturbations
    rng = np.random.default_rng(99)
    bump_fields = ["M", "N1", "N2_star", "L_k1", "L_k2", "M_b", "l_b_star",
                   "lambda_f", "lambda_h", "sup_n", "sup_m", "trace_Q", "a",
                   "l1_star", "l2_star", "mho", "chi_L2"]
    for _ in range(50):
        cc = toy_constants()
        name = bump_fields[int(rng.integers(len(bump_fields)))]
        setattr(cc, name, getattr(cc, name) + float(rng.uniform(0, 0.5)))
        ok &= compute_delta1(cc) >= d1 - 1e-15
        ok &= compute_delta2(cc) >= d2 - 1e-15
    ok &= check_existence(toy_constants(scale=10.0)).satisfied is False
    _report("criterion 7 (existence checker toy values + monotonicity)", ok,
            time.time() - t0, 1.0)


def test_criterion_8_picard_behavior():
    t0 = time.time()
    cfg = HeatExampleConfig()
    report = check_existence(suggested_constants(cfg))
    ok = report.satisfied
    spec = build_spec(cfg)
    grid = TimeGrid.uniform(cfg.horizon, 1.0 / 256, spec.schedule)
    noise = sample_noise(grid, spec.noise)
    res = picard_solve(spec, grid, noise, tol=1e-10, max_iter=20)
    d = res.distances
    ok &= res.sweeps <= 20
    ok &= res.sweeps >= 5
    ok &= all(d[i + 1] < d[i] for i in range(len(d) - 1))
    # the x100-amplitude configuration must fail loudly, not silently
    big = scale_amplitudes(cfg, 100.0)
    ok &= check_existence(suggested_constants(big)).satisfied is False
    big_spec = build_spec(big)
    big_noise = sample_noise(grid, big_spec.noise)
    raised = False
    try:
        picard_solve(big_spec, grid, big_noise, tol=1e-10, max_iter=8)
    except MaxIterations as exc:
        raised = len(exc.iter_history) == 8
    ok &= raised
    _report("criterion 8 (Picard contraction on shipped example)", ok,
            time.time() - t0, 120.0)


def test_criterion_9_phase_space_bounds():
    t0 = time.time()
    # constants of the shipped weighted space: N1 = 1, N2* from the
    # exponential weight, N3* = 1, J* = 1
    cfg = PhaseNormConfig(
        tail_weight=lambda s: np.exp(2.0 * s),
        tail_cutoff=20.0,
        tail_nodes=801,
        N1=1.0,
        N2_star=1.0 + math.sqrt((1.0 - math.exp(-2.0)) / 2.0),
        N3_star=1.0,
        J_star=1.0,
    )
    rng = np.random.default_rng(314)
    ok = True
    for _ in range(100):
        n = 3
        times = np.linspace(0.0, 1.0, 17)
        vals = rng.normal(scale=2.0, size=(17, n))
        amp = abs(rng.normal()) + 0.1

        def pre(ts, amp=amp):
            ts = np.atleast_1d(np.asarray(ts, float))
            return amp * np.exp(ts)[:, None] * np.ones((1, n))

        vals[0] = pre(0.0)[0]
        path = HistoryPath(pre, times, vals)
        rep = history_norm_bound_check(path, cfg, float(rng.uniform(0.1, 1.0)))
        ok &= rep.ok
    _report("criterion 9 (history-norm bound on 100 random paths)", ok,
            time.time() - t0, 10.0)
