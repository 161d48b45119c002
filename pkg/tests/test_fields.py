import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from essrk import kernels
from essrk.fields import (
    FieldError,
    FiniteDifferenceField,
    ParametricField,
    ParticleProps,
    TokamakField,
    UniformField,
    ZeroField,
    effective_potential,
    effective_potential_gradient,
    field_consistency_check,
)

from conftest import BUILTIN_FIELDS, SignFlippedTokamak

UNIT = ParticleProps(1.0, 1.0)


def _sympy_tokamak(B0=1, E0=sp.Rational(1, 100), R=2, Q=5):
    """Vector and scalar potential transcribed from the closed forms."""
    x, y, z = sp.symbols("x y z", real=True)
    rho = sp.sqrt(x**2 + y**2)
    g = ((rho - R) ** 2 + z**2) / (2 * Q * (x**2 + y**2))
    A = sp.Matrix([-B0 * g * y, B0 * g * x, -B0 * R * sp.log(rho / R)])
    phi = -E0 * sp.cos(z)
    return (x, y, z), A, phi


SYM = _sympy_tokamak()
_A_num = sp.lambdify(SYM[0], SYM[1], "numpy")
_J_num = sp.lambdify(SYM[0], SYM[1].jacobian(sp.Matrix(SYM[0])), "numpy")
_f = SYM[1].dot(SYM[1]) / 2 + SYM[2]
_f_num = sp.lambdify(SYM[0], _f, "numpy")
_gf_num = sp.lambdify(SYM[0], [sp.diff(_f, v) for v in SYM[0]], "numpy")

near_orbit = st.tuples(
    st.floats(-1.5, 1.5), st.floats(1.0, 3.0), st.floats(-1.0, 1.0)
).map(np.array)


def test_zero_field_effective_potential():
    for q in ([0, 0, 0], [1, -2, 3]):
        assert effective_potential(ZeroField(), UNIT, np.array(q, float), 3.0) == 0.0
        assert np.all(effective_potential_gradient(ZeroField(), UNIT, np.array(q, float), 3.0) == 0.0)


def test_parametric_effective_potential_paper_point():
    # [PAPER] A(q,t) = B(t)[q2,-q1,0]/2 at q=[0,2.1,0], t=0 gives A=[1.05,0,0]
    f = ParametricField(1e-4, 1.0)
    q = np.array([0.0, 2.1, 0.0])
    np.testing.assert_allclose(f.vector_potential(q, 0.0), [1.05, 0, 0], rtol=0, atol=1e-15)
    assert effective_potential(f, UNIT, q, 0.0) == pytest.approx(0.55125, rel=1e-15)
    np.testing.assert_allclose(f.jacobian(q, 0.0)[:2, :2], [[0, 0.5], [-0.5, 0]], atol=1e-15)
    np.testing.assert_allclose(effective_potential_gradient(f, UNIT, q, 0.0), [0, 0.525, 0], atol=1e-15)


def test_parametric_magnitude():
    f = ParametricField(0.2, 3.0)
    t = np.linspace(0, 5, 7)
    np.testing.assert_allclose(f.magnitude(t), 1 + 0.2 * np.sin(3 * t))
    J = f.jacobian(np.zeros((7, 3)), t)
    np.testing.assert_allclose(J + np.swapaxes(J, -1, -2), 0)


def test_tokamak_effective_potential_symbolic_oracle():
    # [DERIVED] sympy evaluation of the closed-form A and phi at q=[0,2.1,0]
    q = np.array([0.0, 2.1, 0.0])
    field = TokamakField()
    val = effective_potential(field, UNIT, q, 0.0)
    assert val == pytest.approx(-0.0052389263819549398, rel=1e-13)
    assert val == pytest.approx(float(_f_num(*q)), rel=1e-13)
    np.testing.assert_allclose(
        effective_potential_gradient(field, UNIT, q, 0.0), [0, 0.092938073204705813, 0], atol=1e-15
    )
    np.testing.assert_allclose(field.vector_potential(q, 0.0), [-0.00047619047619047619, 0, -0.097580328338864006], rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(near_orbit)
def test_tokamak_matches_sympy(q):
    field = TokamakField()
    np.testing.assert_allclose(field.vector_potential(q, 0.0), np.ravel(_A_num(*q)), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(field.jacobian(q, 0.0), np.array(_J_num(*q), float), rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(
        effective_potential_gradient(field, UNIT, q, 0.0), np.array(_gf_num(*q), float), rtol=1e-11, atol=1e-13
    )


@pytest.mark.parametrize("name", sorted(BUILTIN_FIELDS))
def test_effective_gradient_matches_fd(name):
    field = BUILTIN_FIELDS[name]
    props = ParticleProps(-1.5, 2.0)
    rng = np.random.default_rng(1)
    for _ in range(20):
        q = np.array([0, 2.1, 0]) + rng.uniform(-0.5, 0.5, 3)
        t = rng.uniform(0, 10)
        fd = np.empty(3)
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = 1e-5
            fd[j] = (effective_potential(field, props, q + dq, t) - effective_potential(field, props, q - dq, t)) / 2e-5
        np.testing.assert_allclose(effective_potential_gradient(field, props, q, t), fd, atol=1e-6)


def test_parametric_consistency_check():
    rng = np.random.default_rng(2)
    samples = [(rng.uniform(-3, 3, 3), rng.uniform(0, 10)) for _ in range(10)]
    rep = field_consistency_check(ParametricField(1e-4, 1.0), samples)
    assert rep.jacobian_defect <= 1e-6
    assert rep.grad_phi_defect <= 1e-6
    assert rep.divergence <= 1e-6
    assert rep.curl_defect is None
    assert rep.passed()


def test_tokamak_curl_matches_closed_form_B():
    rng = np.random.default_rng(3)
    samples = [(np.array([0, 2.1, 0]) + rng.uniform(-0.2, 0.2, 3), 0.0) for _ in range(10)]
    rep = field_consistency_check(TokamakField(), samples)
    assert rep.curl_defect <= 1e-5
    assert rep.divergence <= 1e-5
    assert rep.passed()


def test_injected_jacobian_fault_detected():
    samples = [(np.array([0.3, 2.1, 0.2]), 0.0), (np.array([0.0, 2.5, -0.1]), 0.0)]
    rep = field_consistency_check(SignFlippedTokamak(), samples)
    assert rep.jacobian_defect >= 1e-1
    assert not rep.passed()


def test_tokamak_axis_guard():
    field = TokamakField()
    with pytest.raises(FieldError):
        field.vector_potential(np.zeros(3), 0.0)
    with pytest.raises(FieldError):
        effective_potential(field, UNIT, np.array([0.0, 0.0, 1.0]), 0.0)
    A, dA, g = np.empty(3), np.empty((3, 3)), np.empty(3)
    assert np.isnan(TokamakField.kernel(np.zeros(3), 0.0, field.kernel_params(), A, dA, g))


def test_constructor_validation():
    with pytest.raises(ValueError):
        ParticleProps(1.0, 0.0)
    with pytest.raises(ValueError):
        TokamakField(R=0.0)
    with pytest.raises(ValueError):
        TokamakField(Qsafety=0.0)


@pytest.mark.parametrize("name", ["uniform", "parametric-strong", "tokamak"])
def test_kernels_agree_with_numpy(name):
    field = BUILTIN_FIELDS[name]
    rng = np.random.default_rng(4)
    A, dA, g = np.empty(3), np.empty((3, 3)), np.empty(3)
    for _ in range(10):
        q = np.array([0, 2.1, 0]) + rng.uniform(-0.5, 0.5, 3)
        t = rng.uniform(0, 10)
        phi = type(field).kernel(q, t, field.kernel_params(), A, dA, g)
        np.testing.assert_allclose(A, field.vector_potential(q, t), rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(dA, field.jacobian(q, t), rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(g, field.grad_scalar_potential(q, t), rtol=1e-14, atol=1e-15)
        assert phi == pytest.approx(float(field.scalar_potential(q, t)), abs=1e-15)


def test_uniform_field_constant():
    f = UniformField([1, 2, 3], -0.5)
    q = np.random.default_rng(5).normal(size=(4, 3))
    np.testing.assert_array_equal(f.vector_potential(q, 1.0), np.tile([1.0, 2, 3], (4, 1)))
    np.testing.assert_array_equal(f.jacobian(q, 1.0), 0)
    np.testing.assert_array_equal(f.scalar_potential(q, 1.0), -0.5)


def test_finite_difference_field_approximates_analytic():
    ref = TokamakField()
    fd = FiniteDifferenceField(
        lambda q, t: ref.vector_potential(q, t), lambda q, t: float(ref.scalar_potential(q, t)), step=1e-6
    )
    q = np.array([[0.2, 2.0, 0.1], [-0.1, 2.3, -0.2]])
    np.testing.assert_allclose(fd.vector_potential(q, 0.0), ref.vector_potential(q, 0.0), rtol=1e-15)
    np.testing.assert_allclose(fd.jacobian(q, 0.0), ref.jacobian(q, 0.0), atol=1e-8)
    np.testing.assert_allclose(fd.grad_scalar_potential(q, 0.0), ref.grad_scalar_potential(q, 0.0), atol=1e-8)


@pytest.mark.parametrize("field", [ParametricField(1e-4, 1.0), ParametricField(0.5, 3.0), TokamakField()], ids=repr)
def test_builtin_jacobian_invariant_50_samples(field):
    rng = np.random.default_rng(6)
    if isinstance(field, TokamakField):
        samples = [(np.array([0, 2.1, 0]) + rng.uniform(-1, 1, 3), rng.uniform(-50, 50)) for _ in range(50)]
    else:
        samples = [(rng.uniform(-5, 5, 3), rng.uniform(-50, 50)) for _ in range(50)]
    assert field_consistency_check(field, samples).jacobian_defect <= 1e-5
