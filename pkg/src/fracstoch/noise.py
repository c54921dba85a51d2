"""Q-Wiener increments, marked Poisson events, and the stochastic integrals.

All sampling is driven by counter-based Philox streams keyed by
(seed, stream_id, substream), so distinct paths are independent and every
draw is reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

_trapezoid = getattr(np, "trapezoid", np.trapz)

from .errors import AdaptednessError, DomainError
from .spectral import SpectralField

_WIENER_SUBSTREAM = 0
_POISSON_SUBSTREAM = 1


def _nodes(grid) -> np.ndarray:
    nodes = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0.0):
        raise DomainError("grid must supply strictly increasing nodes")
    return nodes


@dataclass(frozen=True)
class NoiseConfig:
    """Trace-class covariance spectrum, finite mark space, and stream identity."""

    q_eigenvalues: np.ndarray
    marks: np.ndarray
    mark_weights: np.ndarray
    jump_rate_scale: float = 1.0
    rng_seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        ev = np.asarray(self.q_eigenvalues, dtype=float)
        marks = np.asarray(self.marks, dtype=float)
        w = np.asarray(self.mark_weights, dtype=float)
        object.__setattr__(self, "q_eigenvalues", ev)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "mark_weights", w)
        if np.any(ev < 0.0):
            raise DomainError("covariance eigenvalues must be nonnegative")
        if marks.shape != w.shape:
            raise DomainError("marks and mark_weights must align")
        if np.any(w < 0.0):
            raise DomainError("mark weights must be nonnegative")
        if self.jump_rate_scale < 0.0:
            raise DomainError("jump_rate_scale must be nonnegative")

    @property
    def trace_q(self) -> float:
        return float(np.sum(self.q_eigenvalues))

    @property
    def total_intensity(self) -> float:
        """Total jump intensity per unit time (weights times rate scale)."""
        return float(np.sum(self.mark_weights) * self.jump_rate_scale)

    def with_stream(self, stream_id: int) -> "NoiseConfig":
        return replace(self, stream_id=int(stream_id))


@dataclass(frozen=True)
class PoissonEvent:
    time: float
    mark: float


def _rng(cfg: NoiseConfig, substream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=cfg.rng_seed, spawn_key=(cfg.stream_id, substream))
    return np.random.Generator(np.random.Philox(seq))


def sample_wiener(grid, cfg: NoiseConfig) -> np.ndarray:
    """Independent increments dW[j, k] ~ Normal(0, nu_j * dt_k), shape (modes, K-1)."""
    nodes = _nodes(grid)
    dts = np.diff(nodes)
    rng = _rng(cfg, _WIENER_SUBSTREAM)
    draws = rng.standard_normal((cfg.q_eigenvalues.size, dts.size))
    return draws * np.sqrt(np.outer(cfg.q_eigenvalues, dts))


def sample_poisson(grid, cfg: NoiseConfig) -> list[PoissonEvent]:
    """Marked Poisson events on [0, horizon]; count ~ Poisson(horizon * intensity)."""
    nodes = _nodes(grid)
    horizon = float(nodes[-1] - nodes[0])
    rng = _rng(cfg, _POISSON_SUBSTREAM)
    lam = horizon * cfg.total_intensity
    if lam == 0.0:
        return []
    count = int(rng.poisson(lam))
    times = np.sort(rng.uniform(nodes[0], nodes[-1], size=count))
    probs = cfg.mark_weights / np.sum(cfg.mark_weights)
    mark_idx = rng.choice(cfg.marks.size, size=count, p=probs)
    return [PoissonEvent(float(t), float(cfg.marks[i])) for t, i in zip(times, mark_idx)]


@dataclass(frozen=True)
class NoiseRealization:
    """One frozen draw of driving noise: Wiener increments plus jump events."""

    increments: np.ndarray
    events: tuple


def sample_noise(grid, cfg: NoiseConfig) -> NoiseRealization:
    return NoiseRealization(
        increments=sample_wiener(grid, cfg),
        events=tuple(sample_poisson(grid, cfg)),
    )


def ito_integral(h_samples, increments) -> SpectralField:
    """Left-point Ito sum over the whole grid: sum_k h[:, k] * dW[:, k].

    ``h_samples`` must be sampled at the increment left endpoints, one
    column per increment; a column count matching the node count instead
    indicates an anticipating (right-endpoint) evaluation and is rejected.
    """
    h = np.asarray(h_samples, dtype=float)
    w = np.asarray(increments, dtype=float)
    if h.ndim != 2 or w.ndim != 2:
        raise DomainError("h_samples and increments must be 2-D (modes x steps)")
    if h.shape == (w.shape[0], w.shape[1] + 1):
        raise AdaptednessError(
            "integrand sampled on nodes (right endpoints included); "
            "left endpoints only are allowed"
        )
    if h.shape != w.shape:
        raise DomainError(f"shape mismatch: integrand {h.shape} vs increments {w.shape}")
    return SpectralField(np.sum(h * w, axis=1))


def compensated_poisson_integral(
    f: Callable[[float, float], SpectralField],
    events: Sequence[PoissonEvent],
    cfg: NoiseConfig,
    grid,
) -> SpectralField:
    """Jump sum minus its compensator over the whole horizon.

    sum_e f(t_e, mark_e)  -  int_0^a sum_marks f(t, mark) weight(mark) scale dt,
    the time integral by the trapezoid rule on the grid nodes.
    """
    nodes = _nodes(grid)
    n_modes = cfg.q_eigenvalues.size
    acc = np.zeros(n_modes)
    for ev in events:
        acc = acc + f(ev.time, ev.mark).coeffs
    comp = np.zeros((nodes.size, n_modes))
    for im, mark in enumerate(cfg.marks):
        wgt = float(cfg.mark_weights[im]) * cfg.jump_rate_scale
        if wgt == 0.0:
            continue
        for k, t in enumerate(nodes):
            comp[k] += wgt * f(float(t), float(mark)).coeffs
    acc = acc - _trapezoid(comp, nodes, axis=0)
    return SpectralField(acc)


def history_wiener_integral(h_samples, k_fn, increments, s: float, grid) -> SpectralField:
    """Noise history integral over (-infinity, s].

    The prehistory part is the user-supplied function ``k_fn(s)`` (the
    limit of the integrals from -e to 0, injected rather than simulated);
    the [0, s] part is the left-point Ito sum over increments ending at or
    before ``s``.
    """
    nodes = _nodes(grid)
    h = np.asarray(h_samples, dtype=float)
    w = np.asarray(increments, dtype=float)
    # increment k covers [t_k, t_{k+1}]; include those with t_{k+1} <= s
    k_steps = int(np.searchsorted(nodes[1:], s + 1e-12, side="right"))
    k_steps = min(k_steps, w.shape[1])
    base = k_fn(float(s)).coeffs if k_fn is not None else np.zeros(w.shape[0])
    if k_steps == 0:
        return SpectralField(base.copy())
    part = ito_integral(h[:, :k_steps], w[:, :k_steps])
    return SpectralField(base + part.coeffs)
