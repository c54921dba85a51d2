"""History paths, segment views, the weighted phase-space norm, and delays.

A path lives on (-infinity, horizon]: an explicit prehistory handle covers
t <= 0 and recorded samples with piecewise-linear interpolation cover
[0, horizon]. Jump times are recorded with both one-sided values; a lookup
landing exactly on a jump time returns the left limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

_trapezoid = getattr(np, "trapezoid", np.trapz)

from .errors import ConfigError, DelayViolation, OutOfRange, UnresolvedDelay
from .spectral import SpectralField

_TIME_TOL = 1e-12


class HistoryPath:
    """Piecewise-linear sample path with prehistory and recorded jumps.

    ``prehistory`` maps an array of times (<= 0) to a (len, n_modes) value
    matrix. ``times`` may contain duplicated entries at jump times; the
    first of a duplicated pair is the left limit, the second the right
    limit, and interpolation to the right of the jump uses the right limit.
    """

    def __init__(self, prehistory, times, values, jump_times: Sequence[float] = ()):
        self.prehistory = prehistory
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.jump_times = tuple(float(t) for t in jump_times)
        if self.times.ndim != 1 or self.values.ndim != 2:
            raise OutOfRange("times must be 1-D and values 2-D")
        if self.values.shape[0] != self.times.size:
            raise OutOfRange("one value row per sample time required")
        if np.any(np.diff(self.times) < 0.0):
            raise OutOfRange("sample times must be nondecreasing")
        if self.times.size and self.times[0] < -_TIME_TOL:
            raise OutOfRange("samples must start at t >= 0; earlier times belong to the prehistory")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_modes(self) -> int:
        return int(self.values.shape[1])

    def values_at(self, t) -> np.ndarray:
        """Value matrix at (possibly unsorted) query times, shape (len(t), n_modes).

        Times below 0 are served by the prehistory; a time equal to a
        recorded jump time returns the left limit.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, self.n_modes))
        past = t < 0.0
        if np.any(past):
            out[past] = np.asarray(self.prehistory(t[past]), dtype=float)
        here = ~past
        if np.any(here):
            tq = t[here]
            if np.any(tq > self.horizon + _TIME_TOL):
                raise UnresolvedDelay(float(tq.max()), self.horizon)
            tq = np.minimum(tq, self.horizon)
            idx = np.searchsorted(self.times, tq, side="left")
            idx = np.minimum(idx, self.times.size - 1)
            res = np.empty((tq.size, self.n_modes))
            exact = np.abs(self.times[idx] - tq) <= _TIME_TOL
            res[exact] = self.values[idx[exact]]
            interp = ~exact
            if np.any(interp):
                i1 = idx[interp]
                i0 = i1 - 1
                t0, t1 = self.times[i0], self.times[i1]
                w = (tq[interp] - t0) / (t1 - t0)
                res[interp] = (1.0 - w)[:, None] * self.values[i0] + w[:, None] * self.values[i1]
            out[here] = res
        return out

    def value(self, t: float) -> SpectralField:
        return SpectralField(self.values_at(float(t))[0])


def constant_prehistory(fld: SpectralField):
    """Prehistory handle that is identically ``fld``."""

    def psi(times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return np.tile(fld.coeffs, (times.size, 1))

    return psi


def zero_prehistory(n_modes: int):
    return constant_prehistory(SpectralField.zeros(n_modes))


class HistoryView:
    """Segment of a path anchored at time ``anchor``: theta <= 0 -> path(anchor+theta)."""

    def __init__(self, path: HistoryPath, anchor: float):
        self.path = path
        self.anchor = float(anchor)

    def values_at(self, thetas) -> np.ndarray:
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        if np.any(thetas > _TIME_TOL):
            raise OutOfRange("segment views are defined for theta <= 0")
        return self.path.values_at(self.anchor + thetas)

    def at_zero(self) -> SpectralField:
        return SpectralField(self.values_at(0.0)[0])


class PrehistoryView:
    """A raw prehistory handle presented with the view interface (anchor 0)."""

    def __init__(self, prehistory, n_modes: int):
        self.prehistory = prehistory
        self.n_modes = n_modes
        self.anchor = 0.0

    def values_at(self, thetas) -> np.ndarray:
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        if np.any(thetas > _TIME_TOL):
            raise OutOfRange("prehistory views are defined for theta <= 0")
        return np.asarray(self.prehistory(np.minimum(thetas, 0.0)), dtype=float)

    def at_zero(self) -> SpectralField:
        return SpectralField(self.values_at(0.0)[0])


def segment(path: HistoryPath, tau: float) -> HistoryView:
    """History segment xi_tau, i.e. theta -> xi(tau + theta) for theta <= 0.

    ``tau`` may be negative (a delay that reaches into the prehistory); it
    must not exceed the recorded horizon.
    """
    if tau > path.horizon + _TIME_TOL:
        raise OutOfRange(f"anchor {tau} beyond recorded horizon {path.horizon}")
    return HistoryView(path, tau)


@dataclass
class PhaseNormConfig:
    """Weighted phase-space data: tail weight, truncation, and axiom constants."""

    tail_weight: Callable[[np.ndarray], np.ndarray]
    tail_cutoff: float = 20.0
    tail_nodes: int = 400
    p: float = 2.0
    N1: float = 1.0
    N2_star: float = 1.0
    N3_star: float = 1.0
    J_star: float = 1.0

    def tail_grid(self) -> np.ndarray:
        if self.tail_nodes is None or self.tail_nodes < 2 or not self.tail_cutoff > 0.0:
            raise ConfigError("phase-space tail grid unset (need tail_nodes >= 2, tail_cutoff > 0)")
        return np.linspace(-self.tail_cutoff, 0.0, self.tail_nodes)


def phase_norm(view, cfg: PhaseNormConfig) -> float:
    """Norm ||Psi(0)|| + (integral of tail_weight * ||Psi||^p over the tail)^(1/p).

    The tail integral over (-infinity, 0] is truncated at -tail_cutoff and
    evaluated by the composite trapezoid rule on the configured tail grid.
    """
    s = cfg.tail_grid()
    vals = view.values_at(s)
    norms = np.linalg.norm(vals, axis=1)
    weights = np.asarray(cfg.tail_weight(s), dtype=float)
    if np.any(weights < 0.0):
        raise ConfigError("tail weight must be nonnegative")
    integral = float(_trapezoid(weights * norms**cfg.p, s))
    point = float(np.linalg.norm(view.values_at(0.0)[0]))
    return point + integral ** (1.0 / cfg.p)


@dataclass(frozen=True)
class DelaySpec:
    """State-dependent delay rho(tau, psi) = tau - sigma1(tau) * sigma2(||psi(0)||)."""

    sigma1: Callable[[float], float]
    sigma2: Callable[[float], float]


def eval_delay(spec: DelaySpec, tau: float, view) -> float:
    """Delayed lookup time rho <= tau for the segment anchored at ``tau``.

    sigma1(tau) == 0 short-circuits sigma2, so a zero-delay problem never
    needs the (possibly unknown) current state.
    """
    s1 = float(spec.sigma1(tau))
    if s1 == 0.0:
        return float(tau)
    s2 = float(spec.sigma2(view.at_zero().norm()))
    lag = s1 * s2
    if lag < 0.0:
        raise DelayViolation(f"sigma1*sigma2 = {lag} < 0 would look forward at tau={tau}")
    return float(tau) - lag


@dataclass(frozen=True)
class HistoryBoundReport:
    lhs: float
    rhs: float
    ok: bool


def history_norm_bound_check(path: HistoryPath, cfg: PhaseNormConfig, tau: float) -> HistoryBoundReport:
    """Check ||xi_tau|| <= N2* sup_{[0,tau]} ||xi|| + (N3* + J*) ||psi|| on a path.

    The left side is the phase norm of the segment at ``tau``; the supremum
    on the right runs over the recorded samples up to ``tau`` (the linear
    interpolant attains its maximum norm at sample points).
    """
    lhs = phase_norm(segment(path, tau), cfg)
    mask = path.times <= tau + _TIME_TOL
    sup_norm = float(np.max(np.linalg.norm(path.values[mask], axis=1))) if np.any(mask) else 0.0
    sup_norm = max(sup_norm, float(np.linalg.norm(path.values_at(min(tau, path.horizon))[0])))
    psi_norm = phase_norm(PrehistoryView(path.prehistory, path.n_modes), cfg)
    rhs = cfg.N2_star * sup_norm + (cfg.N3_star + cfg.J_star) * psi_norm
    return HistoryBoundReport(lhs=lhs, rhs=rhs, ok=lhs <= rhs + 1e-9)
