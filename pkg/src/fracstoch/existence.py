"""Hypothesis constants, the growth bounds r*/r**, and the solvability check.

The check is pure arithmetic on user-declared constants: the two composite
quantities Delta_1 (growth side) and Delta_2 (noncompactness side) are
evaluated verbatim from their defining displays and the condition is
max(Delta_1, Delta_2) < 1, strictly. Deriving the constants from coefficient
definitions is the caller's job (see heat_example.suggested_constants for
the separable family).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass
class HypothesisConstants:
    """Scalar constants of the standing hypotheses.

    Per-impulse arrays (``M_i``, ``l_mi_star``, ``lambda_i``, ``L_i``) must
    share length n_impulses; the remaining entries are global. All values
    are nonnegative; ``psi_norm`` is the phase-space norm of the prehistory
    and ``xi1_sq`` the squared second moment of the initial velocity.
    """

    M: float = 1.0
    N1: float = 1.0
    N2_star: float = 1.0
    N3_star: float = 1.0
    J_star: float = 1.0
    L_k1: float = 0.0
    L_k2: float = 0.0
    l1_star: float = 0.0
    l2_star: float = 0.0
    M_b: float = 0.0
    l_b_star: float = 0.0
    M_i: tuple = (0.0,)
    l_mi_star: tuple = (0.0,)
    lambda_i: tuple = (0.0,)
    L_i: tuple = (0.0,)
    lambda_h: float = 0.0
    M_h: float = 0.0
    sup_m: float = 0.0
    lambda_f: float = 0.0
    sup_n: float = 0.0
    mho: float = 0.0
    chi_L2: float = 0.0
    trace_Q: float = 0.0
    a: float = 1.0
    psi_norm: float = 0.0
    xi1_sq: float = 0.0

    def __post_init__(self):
        for name in ("M_i", "l_mi_star", "lambda_i", "L_i"):
            setattr(self, name, tuple(float(x) for x in getattr(self, name)))
        lengths = {len(self.M_i), len(self.l_mi_star), len(self.lambda_i), len(self.L_i)}
        if len(lengths) != 1:
            raise DomainError("per-impulse constant arrays must share one length")
        scalars = [
            self.M, self.N1, self.N2_star, self.N3_star, self.J_star,
            self.L_k1, self.L_k2, self.l1_star, self.l2_star, self.M_b,
            self.l_b_star, self.lambda_h, self.M_h, self.sup_m, self.lambda_f,
            self.sup_n, self.mho, self.chi_L2, self.trace_Q, self.a,
            self.psi_norm, self.xi1_sq,
        ]
        values = list(scalars) + list(self.M_i) + list(self.l_mi_star) \
            + list(self.lambda_i) + list(self.L_i)
        if any((not math.isfinite(v)) or v < 0.0 for v in values):
            raise DomainError("all hypothesis constants must be finite and nonnegative")

    @property
    def n_impulses(self) -> int:
        return len(self.M_i)


def compute_C0_C1(c: HypothesisConstants) -> tuple[float, float]:
    """Prehistory-dependent offsets of the invariant-ball radii.

    C0 = ([N2*]^2 M^2 N1^2 + (N3* + J*)^2) ||psi||^2,
    C1 = ([N2*]^2 M^2 N1^2 + [N3*]^2) ||psi||^2.
    """
    base = (c.N2_star**2) * (c.M**2) * (c.N1**2)
    sq = c.psi_norm**2
    c0 = (base + (c.N3_star + c.J_star) ** 2) * sq
    c1 = (base + c.N3_star**2) * sq
    return c0, c1


def compute_r_star(c: HypothesisConstants, alpha: float) -> tuple[float, float]:
    """Radii r* = 4 [N2*]^2 alpha + C0 and r** = 4 [N2*]^2 alpha + C1."""
    if alpha < 0.0:
        raise DomainError("alpha must be nonnegative")
    c0, c1 = compute_C0_C1(c)
    slope = 4.0 * c.N2_star**2 * alpha
    return slope + c0, slope + c1


def compute_delta1(c: HypothesisConstants) -> float:
    """Growth-side composite constant, maximized over the impulse index.

    Delta_1 = max_i [ 5 M^2 { 8 N1 [N2*]^2 (L_k1 + L_k2) + 3 lambda_i
              + 4 [N2*]^2 (3 M_i + 3 M_b) + a lambda_f sup_n
              + 2 a^2 lambda_h Tr(Q) sup_m } + 4 [N2*]^2 (3 M_i + 5 M_b) ].

    The display mixes 3 M_b and 5 M_b between its two parts; it is
    implemented verbatim.
    """
    n2sq = c.N2_star**2
    best = -math.inf
    for i in range(c.n_impulses):
        brace = (
            8.0 * c.N1 * n2sq * (c.L_k1 + c.L_k2)
            + 3.0 * c.lambda_i[i]
            + 4.0 * n2sq * (3.0 * c.M_i[i] + 3.0 * c.M_b)
            + c.a * c.lambda_f * c.sup_n
            + 2.0 * c.a**2 * c.lambda_h * c.trace_Q * c.sup_m
        )
        best = max(best, 5.0 * c.M**2 * brace + 4.0 * n2sq * (3.0 * c.M_i[i] + 5.0 * c.M_b))
    return best


def compute_delta2(c: HypothesisConstants) -> float:
    """Noncompactness-side composite constant, maximized over the impulse index.

    Delta_2 = max_i { l1* + l2* + L_i + l_mi* + M (L_i + l_mi* + l_b*)
              + l_b* + 4 M mho + 4 M sqrt(a) sqrt(Tr Q) ||chi||_L2 }.
    """
    best = -math.inf
    tail = 4.0 * c.M * c.mho + 4.0 * c.M * math.sqrt(c.a) * math.sqrt(c.trace_Q) * c.chi_L2
    for i in range(c.n_impulses):
        val = (
            c.l1_star + c.l2_star + c.L_i[i] + c.l_mi_star[i]
            + c.M * (c.L_i[i] + c.l_mi_star[i] + c.l_b_star)
            + c.l_b_star
            + tail
        )
        best = max(best, val)
    return best


def compute_m_hat(c: HypothesisConstants) -> float:
    """Diagnostic constant of the contradiction argument (not part of the check).

    M_hat = 5 M^2 { 2 M_b (1 + ||psi||^2) + L_k1 (1 + N1^2 C1) + E||xi_1||^2
            + L_k2 (1 + N1^2 C1) + ||psi||^2 + (3 M_b + 3 M_i)(C0 + 1) }
            + 3 M_i (C0 + 1),  maximized over i.
    """
    c0, c1 = compute_C0_C1(c)
    sq = c.psi_norm**2
    best = -math.inf
    for i in range(c.n_impulses):
        brace = (
            2.0 * c.M_b * (1.0 + sq)
            + c.L_k1 * (1.0 + c.N1**2 * c1)
            + c.xi1_sq
            + c.L_k2 * (1.0 + c.N1**2 * c1)
            + sq
            + (3.0 * c.M_b + 3.0 * c.M_i[i]) * (c0 + 1.0)
        )
        best = max(best, 5.0 * c.M**2 * brace + 3.0 * c.M_i[i] * (c0 + 1.0))
    return best


@dataclass(frozen=True)
class ExistenceReport:
    delta1: float
    delta2: float
    max_delta: float
    satisfied: bool
    C0: float
    C1: float
    m_hat: float

    def as_dict(self) -> dict:
        return {
            "delta1": self.delta1,
            "delta2": self.delta2,
            "max": self.max_delta,
            "satisfied": self.satisfied,
            "C0": self.C0,
            "C1": self.C1,
            "m_hat": self.m_hat,
        }


def check_existence(c: HypothesisConstants) -> ExistenceReport:
    """Evaluate the solvability condition max(Delta_1, Delta_2) < 1 (strict)."""
    d1 = compute_delta1(c)
    d2 = compute_delta2(c)
    c0, c1 = compute_C0_C1(c)
    return ExistenceReport(
        delta1=d1,
        delta2=d2,
        max_delta=max(d1, d2),
        satisfied=bool(max(d1, d2) < 1.0),
        C0=c0,
        C1=c1,
        m_hat=compute_m_hat(c),
    )
