"""Three-branch mild-solution evaluation and Picard resolution of implicit terms.

The solution formula on [0, a] has three regimes: the initial arc driven by
the resolvent families, the impulse arcs (r_i, s_i] where the state is given
directly by the impulse maps, and the post-impulse arcs (s_i, r_{i+1}] where
the flow restarts from s_i. Time convolutions use the left-rectangle product
rule on grid nodes with kernels applied spectrally; impulse points are forced
onto the grid so no window straddles a branch boundary.

The formula is implicit through the state-dependent delay and the nonlocal
functionals, so a path is produced by full-sweep Picard iteration: every
history lookup during sweep k+1 reads the complete iterate from sweep k.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import (
    DomainError,
    EnsemblePathError,
    FracstochError,
    MaxIterations,
    OutOfRange,
    UnresolvedDelay,
)
from .noise import NoiseConfig, NoiseRealization, sample_noise
from .phase_space import (
    DelaySpec,
    HistoryPath,
    PrehistoryView,
    PhaseNormConfig,
    eval_delay,
    segment,
)
from .spectral import OperatorSpec, SpectralField, kernel_tables
from .mlf import relaxation_S

_TIME_TOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing nodes t_0 = 0 < ... < t_K = a containing every impulse point."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DomainError("grid needs at least two nodes")
        if abs(nodes[0]) > _TIME_TOL:
            raise DomainError("grid must start at 0")
        if np.any(np.diff(nodes) <= 0.0):
            raise DomainError("grid nodes must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def dt(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    def is_uniform(self) -> bool:
        d = np.diff(self.nodes)
        return bool(np.max(np.abs(d - d[0])) <= 1e-9 * d[0])

    @classmethod
    def uniform(cls, horizon: float, dt: float, schedule: "ImpulseSchedule | None" = None) -> "TimeGrid":
        """Uniform grid of nominal step dt with impulse points snapped onto nodes.

        Every r_i and s_i must sit within 1e-9 of a node of the uniform
        lattice, otherwise the restart structure of the formula would be
        broken by a straddling window.
        """
        if dt <= 0.0 or horizon <= 0.0:
            raise DomainError("horizon and dt must be positive")
        n = int(round(horizon / dt))
        if n < 1 or abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
            raise DomainError(f"horizon {horizon} is not an integer multiple of dt {dt}")
        nodes = np.linspace(0.0, horizon, n + 1)
        if schedule is not None:
            for p in list(schedule.r) + list(schedule.s):
                k = int(round(p / (horizon / n)))
                if k < 0 or k > n or abs(nodes[k] - p) > 1e-9 * max(1.0, horizon):
                    raise DomainError(f"impulse point {p} is not representable on the dt={dt} grid")
                nodes[k] = p
        return cls(nodes)

    def index_of(self, t: float) -> int:
        j = int(np.searchsorted(self.nodes, t - _TIME_TOL))
        if j >= self.nodes.size or abs(self.nodes[j] - t) > _TIME_TOL:
            raise OutOfRange(f"{t} is not a grid node")
        return j


@dataclass(frozen=True)
class ImpulseSchedule:
    """Interleaved impulse points plus the per-impulse maps l_i and m_i.

    Impulse i starts abruptly at r_i and its effect persists on (r_i, s_i];
    the flow restarts at s_i. An empty schedule (no impulses) is allowed.
    """

    horizon: float
    r: tuple = ()
    s: tuple = ()
    l_maps: tuple = ()
    m_maps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(float(x) for x in self.r))
        object.__setattr__(self, "s", tuple(float(x) for x in self.s))
        if not self.horizon > 0.0:
            raise DomainError("horizon must be positive")
        if len(self.r) != len(self.s):
            raise DomainError("need matching r_i / s_i lists")
        if len(self.l_maps) != len(self.r) or len(self.m_maps) != len(self.r):
            raise DomainError("need one l_i and one m_i per impulse")
        pts = []
        for ri, si in zip(self.r, self.s):
            pts.extend([ri, si])
        pts.append(self.horizon)
        prev = 0.0
        for p in pts:
            if p <= prev:
                raise DomainError(
                    "impulse points must interleave strictly: 0 < r_1 < s_1 < ... < a"
                )
            prev = p

    @property
    def n_impulses(self) -> int:
        return len(self.r)


@dataclass(frozen=True)
class Branch:
    """Classification of a time into the three regimes of the solution formula."""

    kind: str  # "initial" | "impulse" | "post_impulse"
    index: int = 0

    @property
    def label(self) -> str:
        if self.kind == "initial":
            return "initial"
        return f"{self.kind}_{self.index}"


def classify_time(schedule: ImpulseSchedule, tau: float) -> Branch:
    """Unique branch of ``tau``: [0, r_1], (r_i, s_i], or (s_i, r_{i+1}].

    Interval ends are half-open exactly as written: tau == r_i belongs to
    the branch ending there, tau == s_i to the impulse branch.
    """
    if tau < -_TIME_TOL or tau > schedule.horizon + _TIME_TOL:
        raise OutOfRange(f"tau={tau} outside [0, {schedule.horizon}]")
    for i in range(schedule.n_impulses):
        if tau <= schedule.r[i] + _TIME_TOL:
            return Branch("initial") if i == 0 else Branch("post_impulse", i - 1)
        if tau <= schedule.s[i] + _TIME_TOL:
            return Branch("impulse", i)
    if schedule.n_impulses == 0:
        return Branch("initial")
    return Branch("post_impulse", schedule.n_impulses - 1)


@dataclass
class ProblemSpec:
    """Coefficient bundle, operator/noise configuration, and initial data.

    Coefficient handles set to None are treated as identically zero. ``h``
    returns the diagonal multiplier field of the noise operator; ``k1`` and
    ``k2`` are functionals of the whole path; ``k_fn`` injects the
    prehistory part of the noise history integral.
    """

    q: float
    operator: OperatorSpec
    schedule: ImpulseSchedule
    delay: DelaySpec
    prehistory: Callable
    xi1: SpectralField
    noise: NoiseConfig
    phase: PhaseNormConfig
    b: Optional[Callable] = None
    f: Optional[Callable] = None
    h: Optional[Callable] = None
    k1: Optional[Callable] = None
    k2: Optional[Callable] = None
    k_fn: Optional[Callable] = None

    def __post_init__(self):
        if not 1.0 < self.q < 2.0:
            raise DomainError(f"q must lie in (1, 2), got {self.q}")
        if self.xi1.n_modes != self.operator.n_modes:
            raise DomainError("xi1 must match the operator mode count")

    def psi_view(self) -> PrehistoryView:
        return PrehistoryView(self.prehistory, self.operator.n_modes)


class _Workspace:
    """Per-sweep cache: kernel tables, delayed segments, integrand arrays.

    Built against one fixed path (the previous Picard iterate); every
    history lookup inside goes through that path, which is what makes the
    outer iteration a clean fixed-point map. Delayed segments are resolved
    lazily so a spec with zero coefficients never touches the path.
    """

    def __init__(self, spec: ProblemSpec, grid: TimeGrid, noise_real: NoiseRealization,
                 path: HistoryPath, j_max: int, tables=None):
        self.spec = spec
        self.grid = grid
        self.noise = noise_real
        self.path = path
        nodes = grid.nodes
        n = spec.operator.n_modes
        self.uniform = grid.is_uniform()
        if tables is not None:
            self.T_tab, self.S_tab = tables
        elif self.uniform:
            self.T_tab, self.S_tab = kernel_tables(spec.q, spec.operator, nodes - nodes[0])
        else:
            self.T_tab = self.S_tab = None

        self._segs: dict[int, object] = {}

        self.H = np.zeros((n, max(j_max - 1, 0)))
        if spec.h is not None:
            for k in range(self.H.shape[1]):
                self.H[:, k] = spec.h(nodes[k], self.seg_delayed(k)).coeffs
        incr = noise_real.increments[:, : self.H.shape[1]]
        self.G = np.zeros((n, j_max))
        if spec.h is not None and self.H.shape[1]:
            csum = np.cumsum(self.H * incr, axis=1)
            self.G[:, 1:] = csum[:, : j_max - 1]
        if spec.k_fn is not None:
            for k in range(j_max):
                self.G[:, k] += spec.k_fn(float(nodes[k])).coeffs

        self.C = np.zeros((n, j_max))
        if spec.f is not None and spec.noise.total_intensity > 0.0:
            wgts = spec.noise.mark_weights * spec.noise.jump_rate_scale
            for k in range(j_max):
                acc = np.zeros(n)
                for mark, wgt in zip(spec.noise.marks, wgts):
                    if wgt:
                        acc += wgt * spec.f(float(nodes[k]), float(mark), self.seg_delayed(k)).coeffs
                self.C[:, k] = acc

        self.event_vals = []
        if spec.f is not None:
            for ev in noise_real.events:
                self.event_vals.append(
                    spec.f(ev.time, ev.mark, self._delayed_at(ev.time)).coeffs
                )

        self.k1_val = spec.k1(path).coeffs if spec.k1 is not None else np.zeros(n)
        self.k2_val = spec.k2(path).coeffs if spec.k2 is not None else np.zeros(n)

    def _delayed_at(self, tau: float):
        try:
            seg_tau = segment(self.path, tau)
            rho = eval_delay(self.spec.delay, tau, seg_tau)
            return segment(self.path, rho)
        except OutOfRange as exc:
            raise UnresolvedDelay(float(tau), self.path.horizon) from exc

    def seg_delayed(self, k: int):
        """Delayed segment at grid node k, resolved against the workspace path."""
        seg = self._segs.get(k)
        if seg is None:
            seg = self._delayed_at(float(self.grid.nodes[k]))
            self._segs[k] = seg
        return seg

    def kernel_rows(self, lags: np.ndarray):
        """(T, S) kernel values for an array of nonnegative lags, shape (m, n_modes)."""
        return kernel_tables(self.spec.q, self.spec.operator, lags)

    def T_at(self, lag_index: int) -> np.ndarray:
        return self.T_tab[lag_index]

    def S_at(self, lag_index: int) -> np.ndarray:
        return self.S_tab[lag_index]


def _assemble(ws: _Workspace, tau: float, branch: Branch) -> np.ndarray:
    spec, grid, nodes = ws.spec, ws.grid, ws.grid.nodes
    n = spec.operator.n_modes
    sched = spec.schedule
    on_grid_j = None
    j_right = int(np.searchsorted(nodes, tau + _TIME_TOL))  # nodes strictly below tau+tol
    if j_right - 1 >= 0 and abs(nodes[j_right - 1] - tau) <= _TIME_TOL:
        on_grid_j = j_right - 1

    if branch.kind == "impulse":
        i = branch.index
        seg_r = segment(ws.path, sched.r[i])
        seg_d = ws.seg_delayed(on_grid_j) if on_grid_j is not None else ws._delayed_at(tau)
        return (sched.l_maps[i](seg_r) + sched.m_maps[i](tau, seg_d)).coeffs.copy()

    if branch.kind == "initial":
        w0 = 0.0
        psi_view = spec.psi_view()
        psi0 = psi_view.at_zero().coeffs
        b0 = spec.b(0.0, psi_view).coeffs if spec.b is not None else np.zeros(n)
        core_T = psi0 - ws.k1_val - b0
        core_S = spec.xi1.coeffs - ws.k2_val
        if ws.uniform and on_grid_j is not None:
            head = ws.T_at(on_grid_j) * core_T + ws.S_at(on_grid_j) * core_S
        else:
            tk, sk = ws.kernel_rows(np.array([tau]))
            head = tk[0] * core_T + sk[0] * core_S
    else:
        i = branch.index
        w0 = sched.s[i]
        j_s = grid.index_of(w0)
        seg_s = segment(ws.path, w0)
        seg_sd = ws.seg_delayed(j_s)
        core = sched.l_maps[i](seg_s).coeffs + sched.m_maps[i](w0, seg_sd).coeffs
        if spec.b is not None:
            core = core - spec.b(w0, seg_sd).coeffs
        if ws.uniform and on_grid_j is not None:
            head = ws.T_at(on_grid_j - j_s) * core
        else:
            tk, _ = ws.kernel_rows(np.array([tau - w0]))
            head = tk[0] * core

    val = head.astype(float).copy()

    if spec.b is not None:
        seg_d = ws.seg_delayed(on_grid_j) if on_grid_j is not None else ws._delayed_at(tau)
        val += spec.b(tau, seg_d).coeffs

    k0 = grid.index_of(w0)
    ks = np.arange(k0, j_right - 1 if on_grid_j is not None else j_right)
    ks = ks[nodes[ks] < tau - _TIME_TOL] if ks.size else ks

    # jump integral: events in (w0, tau], kernel-weighted, minus the compensator
    if spec.f is not None and ws.event_vals:
        for ev, fv in zip(ws.noise.events, ws.event_vals):
            if w0 + _TIME_TOL < ev.time <= tau + _TIME_TOL:
                lag = max(tau - ev.time, 0.0)
                val += relaxation_S(spec.q, spec.operator.eigenvalues, lag) * fv
    if spec.f is not None and ks.size and np.any(ws.C[:, ks]):
        widths = np.minimum(nodes[ks + 1], tau) - nodes[ks]
        if ws.uniform and on_grid_j is not None:
            s_rows = ws.S_tab[on_grid_j - ks]
        else:
            _, s_rows = ws.kernel_rows(tau - nodes[ks])
        val -= np.sum(widths[:, None] * s_rows * ws.C[:, ks].T, axis=0)

    # history-noise convolution: T_q(tau - t_k) applied to the inner integral
    if (spec.h is not None or spec.k_fn is not None) and ks.size:
        widths = np.minimum(nodes[ks + 1], tau) - nodes[ks]
        if ws.uniform and on_grid_j is not None:
            t_rows = ws.T_tab[on_grid_j - ks]
        else:
            t_rows, _ = ws.kernel_rows(tau - nodes[ks])
        val += np.sum(widths[:, None] * t_rows * ws.G[:, ks].T, axis=0)

    return val


def mild_eval(
    spec: ProblemSpec,
    grid: TimeGrid,
    noise_real: NoiseRealization,
    path: HistoryPath,
    tau: float,
    branch: Branch | None = None,
) -> SpectralField:
    """One evaluation of the mild-solution formula at ``tau`` against ``path``.

    All history lookups (delays, integrand segments, nonlocal functionals)
    read ``path``; if a lookup needs times beyond the recorded horizon an
    UnresolvedDelay propagates, which the Picard loop resolves by passing
    the previous full-horizon iterate.
    """
    if branch is None:
        branch = classify_time(spec.schedule, tau)
    j_max = int(np.searchsorted(grid.nodes, tau + _TIME_TOL))
    j_max = min(max(j_max, 1), grid.nodes.size)
    ws = _Workspace(spec, grid, noise_real, path, j_max)
    return SpectralField(_assemble(ws, float(tau), branch))


@dataclass
class PicardResult:
    path: HistoryPath
    distances: list
    tables: tuple = field(repr=False, default=None)

    @property
    def sweeps(self) -> int:
        return len(self.distances)


def _initial_iterate(spec: ProblemSpec, grid: TimeGrid, tables) -> HistoryPath:
    """psi_bar: prehistory continued by T_q(t) psi(0) on [0, a] (the zero iterate)."""
    psi0 = spec.psi_view().at_zero().coeffs
    T_tab, _ = tables
    vals = T_tab * psi0[None, :]
    return HistoryPath(spec.prehistory, grid.nodes, vals)


def picard_solve(
    spec: ProblemSpec,
    grid: TimeGrid,
    noise_real: NoiseRealization,
    tol: float = 1e-10,
    max_iter: int = 20,
) -> PicardResult:
    """Resolve the implicit mild-solution formula by full-sweep Picard iteration.

    Sweep k+1 evaluates the formula at every grid node with all delayed and
    nonlocal lookups reading iterate k (iterate 0 is the prehistory extended
    by the first resolvent family). Stops when the max over nodes of the
    squared iterate difference falls below ``tol``; raises MaxIterations
    with the per-sweep distance history otherwise.
    """
    if tol <= 0.0 or max_iter < 1:
        raise DomainError("tol must be positive and max_iter >= 1")
    nodes = grid.nodes
    if abs(grid.horizon - spec.schedule.horizon) > _TIME_TOL:
        raise DomainError("grid horizon must match the schedule horizon")
    for p in list(spec.schedule.r) + list(spec.schedule.s):
        grid.index_of(p)  # impulse points must be nodes

    tables = kernel_tables(spec.q, spec.operator, nodes - nodes[0]) if grid.is_uniform() else None
    prev = _initial_iterate(spec, grid, tables) if tables is not None else None
    if prev is None:
        raise DomainError("picard_solve requires a uniform grid")

    jump_nodes = [grid.index_of(r) for r in spec.schedule.r]
    distances: list[float] = []
    for _ in range(max_iter):
        ws = _Workspace(spec, grid, noise_real, prev, nodes.size, tables=tables)
        times: list[float] = []
        vals: list[np.ndarray] = []
        for j, t in enumerate(nodes):
            branch = classify_time(spec.schedule, t)
            vals.append(_assemble(ws, float(t), branch))
            times.append(float(t))
            if j in jump_nodes:
                i = jump_nodes.index(j)
                right = _assemble(ws, float(t), Branch("impulse", i))
                times.append(float(t))
                vals.append(right)
        new = HistoryPath(spec.prehistory, np.array(times), np.array(vals),
                          jump_times=spec.schedule.r)
        diff = new.values_at(nodes) - prev.values_at(nodes)
        d = float(np.max(np.sum(diff * diff, axis=1)))
        distances.append(d)
        prev = new
        if d < tol:
            return PicardResult(path=prev, distances=distances, tables=tables)
    raise MaxIterations(distances, tol)


def branch_continuity_check(
    path: HistoryPath,
    spec: ProblemSpec,
    grid: TimeGrid,
    noise_real: NoiseRealization,
) -> list[tuple[float, float]]:
    """Gaps between the post-impulse formula at s_i+ and the impulse formula at s_i.

    Both sides are re-evaluated on the same path, so a converged path shows
    gaps at the rounding level (the restart head collapses through the
    identity value of the first resolvent family at lag zero).
    """
    gaps = []
    for i, s_i in enumerate(spec.schedule.s):
        v3 = mild_eval(spec, grid, noise_real, path, s_i, branch=Branch("post_impulse", i))
        v2 = mild_eval(spec, grid, noise_real, path, s_i, branch=Branch("impulse", i))
        gaps.append((float(s_i), float((v3 - v2).norm())))
    return gaps


@dataclass
class EnsembleStats:
    """Deterministic reduction of per-path simulations, in path-index order."""

    nodes: np.ndarray
    mean_coeffs: np.ndarray
    mean_sq_norm: np.ndarray
    var_sq_norm: np.ndarray
    jump_counts: list
    sweep_counts: list
    n_paths: int


def simulate_ensemble(
    spec: ProblemSpec,
    grid: TimeGrid,
    n_paths: int,
    base_seed: int | None = None,
    tol: float = 1e-10,
    max_iter: int = 20,
) -> EnsembleStats:
    """Run one Picard solve per path with stream_id = path index and aggregate.

    Deterministic for a fixed base seed; per-path failures are re-raised
    annotated with the path index.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    seed = spec.noise.rng_seed if base_seed is None else int(base_seed)
    nodes = grid.nodes
    sum_coeffs = np.zeros((nodes.size, spec.operator.n_modes))
    mean_sq = np.zeros(nodes.size)
    m2_sq = np.zeros(nodes.size)  # Welford: exact zero spread for identical paths
    jump_counts: list[int] = []
    sweep_counts: list[int] = []
    for p in range(n_paths):
        cfg = replace(spec.noise, rng_seed=seed, stream_id=p)
        path_spec = replace_noise(spec, cfg)
        noise_real = sample_noise(grid, cfg)
        try:
            res = picard_solve(path_spec, grid, noise_real, tol=tol, max_iter=max_iter)
        except FracstochError as exc:
            raise EnsemblePathError(p, exc) from exc
        vals = res.path.values_at(nodes)
        sq = np.sum(vals * vals, axis=1)
        sum_coeffs += vals
        delta = sq - mean_sq
        mean_sq += delta / (p + 1)
        m2_sq += delta * (sq - mean_sq)
        jump_counts.append(len(noise_real.events))
        sweep_counts.append(res.sweeps)
    return EnsembleStats(
        nodes=nodes,
        mean_coeffs=sum_coeffs / n_paths,
        mean_sq_norm=mean_sq,
        var_sq_norm=m2_sq / n_paths,
        jump_counts=jump_counts,
        sweep_counts=sweep_counts,
        n_paths=n_paths,
    )


def replace_noise(spec: ProblemSpec, cfg: NoiseConfig) -> ProblemSpec:
    return replace(spec, noise=cfg)
