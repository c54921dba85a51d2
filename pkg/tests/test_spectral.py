import math

import numpy as np
import pytest

from fracstoch import (
    DomainError,
    OperatorSpec,
    ResolutionError,
    SpectralField,
    apply_Sq,
    apply_Tq,
    field_norm,
    project,
    relaxation_S,
)
from fracstoch.spectral import evaluate_field

from oracles import quad_reference

# frozen: series oracle value of E_{1.5,1}(-1)
E_15_1_M1 = 0.39662936531808808449


def test_operator_validation():
    with pytest.raises(DomainError):
        OperatorSpec(eigenvalues=np.array([1.0, 0.5]))
    with pytest.raises(DomainError):
        OperatorSpec(eigenvalues=np.array([-1.0]))
    op = OperatorSpec.dirichlet_laplacian(4)
    assert op.n_modes == 4
    assert np.allclose(op.eigenvalues, [1.0, 4.0, 9.0, 16.0])


def test_field_norm_examples():
    assert field_norm(SpectralField.zeros(5)) == 0.0
    assert field_norm(SpectralField(np.array([3.0, 4.0]))) == pytest.approx(5.0)


def test_field_norm_matches_grid_quadrature():
    op = OperatorSpec.dirichlet_laplacian(6)
    rng = np.random.default_rng(11)
    fld = SpectralField(rng.normal(size=6))
    pts = np.linspace(0.0, math.pi, 20001)
    vals = evaluate_field(fld, op, pts)
    grid_norm = math.sqrt(np.trapezoid(vals**2, pts))
    assert grid_norm == pytest.approx(fld.norm(), abs=1e-8)


def test_project_zero_and_orthonormality():
    op = OperatorSpec.dirichlet_laplacian(3)
    z = project(lambda u: np.zeros_like(u), op)
    assert np.all(z.coeffs == 0.0)
    e1 = project(lambda u: math.sqrt(2.0 / math.pi) * np.sin(u), op, n_panels=8192)
    assert abs(e1.coeffs[0] - 1.0) <= 1e-10
    assert np.max(np.abs(e1.coeffs[1:])) <= 1e-10


def test_project_parabola_closed_form():
    # oracle: adaptive quadrature of u(pi-u) against each basis function
    op = OperatorSpec.dirichlet_laplacian(4)
    got = project(lambda u: u * (math.pi - u), op, n_panels=8192)
    for n in range(1, 5):
        ref = quad_reference(
            lambda u, n=n: u * (math.pi - u) * math.sqrt(2.0 / math.pi) * math.sin(n * u),
            0.0,
            math.pi,
        )
        # closed form: 4 sqrt(2/pi) / n^3 for odd n, 0 for even
        closed = 4.0 * math.sqrt(2.0 / math.pi) / n**3 if n % 2 else 0.0
        assert ref == pytest.approx(closed, abs=1e-12)
        assert got.coeffs[n - 1] == pytest.approx(closed, abs=1e-9)


def test_project_resolution_guard():
    op = OperatorSpec.dirichlet_laplacian(4)
    with pytest.raises(ResolutionError):
        project(lambda u: np.sin(u), op, n_panels=16)


def test_apply_Tq_identity_at_zero():
    op = OperatorSpec.dirichlet_laplacian(3)
    fld = SpectralField(np.array([1.0, -2.0, 0.5]))
    out = apply_Tq(0.0, 1.5, fld, op)
    assert np.allclose(out.coeffs, fld.coeffs)


def test_apply_Tq_zero_field():
    op = OperatorSpec.dirichlet_laplacian(3)
    out = apply_Tq(0.7, 1.5, SpectralField.zeros(3), op)
    assert np.all(out.coeffs == 0.0)


def test_apply_Tq_first_mode_kernel():
    op = OperatorSpec.dirichlet_laplacian(2)
    fld = SpectralField(np.array([1.0, 0.0]))
    out = apply_Tq(1.0, 1.5, fld, op)
    assert out.coeffs[0] == pytest.approx(E_15_1_M1, abs=1e-10)
    assert out.coeffs[1] == 0.0


def test_apply_Sq_zero_at_zero():
    op = OperatorSpec.dirichlet_laplacian(3)
    fld = SpectralField(np.array([1.0, 2.0, 3.0]))
    assert np.all(apply_Sq(0.0, 1.5, fld, op).coeffs == 0.0)


def test_apply_Sq_matches_scalar_kernel():
    op = OperatorSpec(eigenvalues=np.array([4.0]))
    fld = SpectralField(np.array([2.0]))
    out = apply_Sq(0.5, 1.25, fld, op)
    assert out.coeffs[0] == pytest.approx(2.0 * relaxation_S(1.25, 4.0, 0.5), rel=1e-14)


def test_apply_linear():
    op = OperatorSpec.dirichlet_laplacian(5)
    rng = np.random.default_rng(3)
    x = SpectralField(rng.normal(size=5))
    y = SpectralField(rng.normal(size=5))
    a, b = 2.5, -1.25
    for t in (0.3, 1.2):
        left = apply_Tq(t, 1.5, a * x + b * y, op)
        right = a * apply_Tq(t, 1.5, x, op) + b * apply_Tq(t, 1.5, y, op)
        assert np.max(np.abs(left.coeffs - right.coeffs)) <= 1e-12
        left = apply_Sq(t, 1.5, a * x + b * y, op)
        right = a * apply_Sq(t, 1.5, x, op) + b * apply_Sq(t, 1.5, y, op)
        assert np.max(np.abs(left.coeffs - right.coeffs)) <= 1e-12


def test_apply_Tq_norm_bound():
    # operationalized resolvent bound: the empirical sup of |T kernel| over
    # the run's (t, mu) set controls the field norm growth
    op = OperatorSpec.dirichlet_laplacian(8)
    rng = np.random.default_rng(7)
    fld = SpectralField(rng.normal(size=8))
    from fracstoch import relaxation_T

    for q in (1.25, 1.9):
        ts = np.linspace(0.0, 2.0, 21)
        m_hat = max(
            float(np.max(np.abs(relaxation_T(q, float(mu), ts)))) for mu in op.eigenvalues
        )
        for t in ts:
            assert apply_Tq(float(t), q, fld, op).norm() <= m_hat * fld.norm() + 1e-12
