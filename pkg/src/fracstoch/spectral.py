"""Diagonal representation of the sectorial operator and the resolvent families.

The operator is given by its eigen-decomposition on the Dirichlet sine basis
e_n(y) = sqrt(2/pi) sin(n y) on [0, pi]; states are coefficient vectors in
that basis and the operator families act mode-wise through the scalar
relaxation kernels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ResolutionError
from .mlf import relaxation_S, relaxation_T


class BasisId(enum.Enum):
    DIRICHLET_SINE = "dirichlet_sine"


@dataclass(frozen=True)
class OperatorSpec:
    """Eigenvalues mu_n > 0 (the operator acts as -mu_n on mode n) plus basis id."""

    eigenvalues: np.ndarray
    basis: BasisId = BasisId.DIRICHLET_SINE

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        object.__setattr__(self, "eigenvalues", ev)
        if ev.ndim != 1 or ev.size < 1:
            raise DomainError("eigenvalues must be a non-empty 1-D sequence")
        if np.any(ev <= 0.0):
            raise DomainError("eigenvalues must be strictly positive")
        if np.any(np.diff(ev) < 0.0):
            raise DomainError("eigenvalues must be nondecreasing")

    @property
    def n_modes(self) -> int:
        return int(self.eigenvalues.size)

    @classmethod
    def dirichlet_laplacian(cls, n_modes: int) -> "OperatorSpec":
        """Second-derivative operator on [0, pi] with zero boundary: mu_n = n^2."""
        if n_modes < 1:
            raise DomainError("n_modes must be >= 1")
        n = np.arange(1, n_modes + 1, dtype=float)
        return cls(eigenvalues=n * n)


@dataclass(frozen=True)
class SpectralField:
    """State vector as coefficients in the operator eigenbasis."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1:
            raise DomainError("coeffs must be 1-D")
        if not np.all(np.isfinite(c)):
            raise DomainError("coeffs must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, n_modes: int) -> "SpectralField":
        return cls(np.zeros(n_modes))

    @property
    def n_modes(self) -> int:
        return int(self.coeffs.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(-self.coeffs)


def field_norm(fld: SpectralField) -> float:
    """L2 norm of the represented function; by Parseval, the coefficient norm."""
    return fld.norm()


def basis_values(op: OperatorSpec, points: np.ndarray) -> np.ndarray:
    """Matrix e_n(points), shape (n_modes, len(points))."""
    if op.basis is not BasisId.DIRICHLET_SINE:
        raise DomainError(f"unsupported basis {op.basis}")
    pts = np.asarray(points, dtype=float)
    n = np.arange(1, op.n_modes + 1, dtype=float)
    return math.sqrt(2.0 / math.pi) * np.sin(np.outer(n, pts))


def project(f, op: OperatorSpec, n_panels: int | None = None) -> SpectralField:
    """Expand ``f`` on [0, pi] in the sine basis by composite Simpson quadrature.

    ``f`` maps an array of points to an array of values. The panel count
    must be at least 8 * n_modes so the highest retained mode is resolved;
    fewer panels raise ResolutionError.
    """
    min_panels = 8 * op.n_modes
    if n_panels is None:
        # the minimum resolves the top mode; the default aims at ~1e-10 accuracy
        n_panels = max(min_panels, 2048)
    if n_panels < min_panels:
        raise ResolutionError(
            f"{n_panels} Simpson panels below the required {min_panels} (8 per mode)"
        )
    if n_panels % 2 == 1:
        n_panels += 1
    pts = np.linspace(0.0, math.pi, n_panels + 1)
    w = np.ones(n_panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (math.pi / n_panels) / 3.0
    values = np.asarray(f(pts), dtype=float)
    if values.shape != pts.shape:
        raise DomainError("f must return one value per quadrature point")
    coeffs = basis_values(op, pts) @ (w * values)
    return SpectralField(coeffs)


def evaluate_field(fld: SpectralField, op: OperatorSpec, points: np.ndarray) -> np.ndarray:
    """Pointwise values of the represented function at ``points``."""
    return fld.coeffs @ basis_values(op, points)


def apply_Tq(t: float, q: float, fld: SpectralField, op: OperatorSpec) -> SpectralField:
    """Apply the first resolvent family at time t: c_n -> E_{q,1}(-mu_n t^q) c_n."""
    if t < 0.0:
        raise DomainError("t must be nonnegative")
    kernels = relaxation_T(q, op.eigenvalues, float(t))
    return SpectralField(np.asarray(kernels) * fld.coeffs)


def apply_Sq(t: float, q: float, fld: SpectralField, op: OperatorSpec) -> SpectralField:
    """Apply the second resolvent family at time t: c_n -> t E_{q,2}(-mu_n t^q) c_n."""
    if t < 0.0:
        raise DomainError("t must be nonnegative")
    kernels = relaxation_S(q, op.eigenvalues, float(t))
    return SpectralField(np.asarray(kernels) * fld.coeffs)


def kernel_tables(q: float, op: OperatorSpec, lags: np.ndarray):
    """T- and S-kernel values on a set of time lags, shape (len(lags), n_modes).

    Precomputing the tables turns the mild-solution convolutions into plain
    weighted sums; the lag set is typically the uniform-grid differences.
    """
    lags = np.asarray(lags, dtype=float)
    mu = op.eigenvalues[None, :]
    tt = lags[:, None]
    return relaxation_T(q, mu, tt), relaxation_S(q, mu, tt)
