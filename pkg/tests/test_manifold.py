import io

import numpy as np
import pytest

from itodiff.differential import ItoDifferential, dW, zero
from itodiff.errors import InvalidArgumentError, ManifoldIntegrityError, ShapeMismatchError
from itodiff.manifold import (
    CurveFamily,
    EmbeddedManifold,
    Jet2,
    circle_rotation,
    compose_jets,
    integrate_coordinate_scheme,
    integrate_jet_scheme,
    linear_family,
    pushforward,
    residual_report,
    sphere_exponential,
    write_residual_csv,
)
from itodiff.paths import PathBundle, TimeGrid, simulate_brownian

T = 0.0


def _random_jet(rng, n, p, q, base=None):
    base = rng.normal(size=(n, p)) if base is None else base
    H = rng.normal(size=(n, q, p, p))
    return Jet2(base, rng.normal(size=(n, q)), rng.normal(size=(n, q, p)), H + np.swapaxes(H, -1, -2))


def test_jet_validation():
    with pytest.raises(InvalidArgumentError):
        Jet2([0.0, 0.0], [0.0], [[1.0, 0.0]], [[[0.0, 1.0], [0.0, 0.0]]])
    with pytest.raises(ShapeMismatchError):
        Jet2([0.0], [0.0, 1.0], [[1.0]], [[[0.0]]])
    with pytest.raises(InvalidArgumentError):
        Jet2([0.0], [np.inf], [[1.0]], [[[0.0]]])


def test_pushforward_identity():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 3))
    a = ItoDifferential(T, rng.normal(size=(4, 3)), rng.normal(size=(4, 3, 2)), x)
    assert pushforward(Jet2.identity(x), a).equals(a)


def test_pushforward_square():
    w = np.array([-0.5, 0.0, 1.5])
    a = ItoDifferential(T, np.zeros((3, 1)), np.ones((3, 1, 1)), w[:, None])
    jet = Jet2(w[:, None], (w**2)[:, None], (2 * w)[:, None, None], np.full((3, 1, 1, 1), 2.0))
    out = pushforward(jet, a)
    np.testing.assert_array_equal(out.drift[:, 0], 1.0)
    np.testing.assert_array_equal(out.diffusion[:, 0, 0], 2 * w)


def test_pushforward_circle_embedding():
    z = np.linspace(-3, 3, 7)
    c, s = np.cos(z), np.sin(z)
    jet = Jet2(z[:, None], np.stack([c, s], 1), np.stack([-s, c], 1)[:, :, None],
               np.stack([-c, -s], 1)[:, :, None, None])
    a = ItoDifferential(T, np.zeros((7, 1)), np.ones((7, 1, 1)), z[:, None])
    out = pushforward(jet, a)
    np.testing.assert_allclose(out.drift, np.stack([-c / 2, -s / 2], 1), atol=1e-15)
    np.testing.assert_allclose(out.diffusion[:, :, 0], np.stack([-s, c], 1), atol=1e-15)


def test_pushforward_of_zero_is_zero():
    rng = np.random.default_rng(1)
    jet = _random_jet(rng, 5, 2, 3)
    a = zero(T, m=2, d=4, n_scenarios=5)
    assert pushforward(jet, a).is_zero()


def test_pushforward_dimension_mismatch():
    with pytest.raises(ShapeMismatchError):
        pushforward(Jet2.identity(np.zeros((1, 2))), dW(T, 0))


def test_compose_examples():
    rng = np.random.default_rng(2)
    f = _random_jet(rng, 3, 2, 2)
    assert np.allclose(compose_jets(Jet2.identity(f.value), f).hessians, f.hessians)
    g = compose_jets(f, Jet2.identity(f.base_point))
    np.testing.assert_allclose(g.jacobian, f.jacobian)
    A, B = rng.normal(size=(2, 3, 3))
    x = rng.normal(size=(1, 3))
    inner = Jet2.linear(A, x)
    lin = compose_jets(Jet2.linear(B, inner.value), inner)
    np.testing.assert_allclose(lin.jacobian[0], B @ A, atol=1e-14)
    assert np.all(lin.hessians == 0)


def test_compose_power_jets():
    x = 2.0
    f = Jet2([x], [x**2], [[2 * x]], [[[2.0]]])
    y = x**2
    g = Jet2([y], [y**3], [[3 * y**2]], [[[6 * y]]])
    h = compose_jets(g, f)
    assert h.value[0, 0] == 64
    assert h.jacobian[0, 0, 0] == 192
    assert h.hessians[0, 0, 0, 0] == 480


def test_compose_requires_matching_base():
    f = Jet2([1.0], [2.0], [[1.0]], [[[0.0]]])
    g = Jet2([3.0], [0.0], [[1.0]], [[[0.0]]])
    with pytest.raises(ShapeMismatchError):
        compose_jets(g, f)


def test_functoriality():
    rng = np.random.default_rng(3)
    n, p, q, r, d = 1000, 3, 2, 4, 2
    f = _random_jet(rng, n, p, q)
    g = _random_jet(rng, n, q, r, base=np.array(f.value))
    a = ItoDifferential(T, rng.normal(size=(n, p)), rng.normal(size=(n, p, d)), np.array(f.base_point))
    lhs = pushforward(compose_jets(g, f), a)
    rhs = pushforward(g, pushforward(f, a))
    scale = 1 + max(np.abs(lhs.drift).max(), np.abs(lhs.diffusion).max())
    assert lhs.equals(rhs, atol=1e-10 * scale)


# -- curve families and integrators -------------------------------------------------


@pytest.mark.parametrize("family", [circle_rotation, sphere_exponential])
def test_anchor_property(family):
    curves = family()
    rng = np.random.default_rng(4)
    x = rng.normal(size=(50, curves.manifold.ambient_dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    np.testing.assert_array_equal(curves.gamma(x, np.zeros((50, curves.driver_dim))), x)
    np.testing.assert_array_equal(curves.anchor_jet(x).value, x)


def test_sphere_jet_matches_finite_differences():
    curves = sphere_exponential()
    x = np.array([[0.6, 0.0, 0.8]])
    jet = curves.anchor_jet(x)
    eps = 1e-5
    for i in range(3):
        e = np.zeros((1, 3))
        e[0, i] = eps
        d1 = (curves.gamma(x, e) - curves.gamma(x, -e)) / (2 * eps)
        d2 = (curves.gamma(x, e) - 2 * x + curves.gamma(x, -e)) / eps**2
        np.testing.assert_allclose(d1[0], jet.jacobian[0, :, i], atol=1e-8)
        np.testing.assert_allclose(d2[0], jet.hessians[0, :, i, i], atol=1e-4)


def test_integrators_with_zero_driver_are_constant():
    grid = TimeGrid(0, 1, 16)
    drv = PathBundle(grid, np.zeros((3, 17, 1)))
    x0 = np.array([0.0, 1.0])
    for f in (integrate_jet_scheme, integrate_coordinate_scheme):
        out = f(circle_rotation(), drv, x0)
        np.testing.assert_array_equal(out.values, np.broadcast_to(x0, out.values.shape))


def test_circle_jet_scheme_stays_on_circle():
    drv = simulate_brownian(TimeGrid(0, 1, 1024), 1, 100, seed=5)
    out = integrate_jet_scheme(circle_rotation(), drv, np.array([1.0, 0.0]))
    assert np.max(np.abs(np.linalg.norm(out.values, axis=2) - 1)) < 1e-12


def test_sphere_jet_scheme_stays_on_sphere():
    drv = simulate_brownian(TimeGrid(0, 1, 1024), 3, 100, seed=6)
    out = integrate_jet_scheme(sphere_exponential(), drv, np.array([0.0, 0.0, 1.0]))
    rep = residual_report(out, EmbeddedManifold.sphere())
    assert rep.shape == (1025, 2)
    assert rep[:, 1].max() < 1e-10


def test_jet_scheme_integrity_error():
    bad = CurveFamily(lambda x, dz: x * (1 + dz[:, :1]), circle_rotation().jet_at, 1,
                      EmbeddedManifold.circle())
    drv = simulate_brownian(TimeGrid(0, 1, 8), 1, 4, seed=7)
    with pytest.raises(ManifoldIntegrityError):
        integrate_jet_scheme(bad, drv, np.array([1.0, 0.0]))


def test_integrator_input_checks():
    drv = simulate_brownian(TimeGrid(0, 1, 8), 2, 4)
    with pytest.raises(ShapeMismatchError):
        integrate_jet_scheme(circle_rotation(), drv, np.array([1.0, 0.0]))
    drv1 = simulate_brownian(TimeGrid(0, 1, 8), 1, 4)
    with pytest.raises(InvalidArgumentError):
        integrate_jet_scheme(circle_rotation(), drv1, np.array([2.0, 0.0]))
    with pytest.raises(InvalidArgumentError):
        integrate_coordinate_scheme(circle_rotation(), drv1, np.array([1.0, 0.0]), bracket="nope")


def test_linear_family_reduces_to_euler():
    A = np.array([[1.0, 0.5], [0.0, 2.0]])
    drv = simulate_brownian(TimeGrid(0, 1, 64), 2, 10, seed=8)
    out = integrate_coordinate_scheme(linear_family(A), drv, np.zeros(2))
    np.testing.assert_allclose(out.values, drv.values @ A.T, atol=1e-12)


def _coarsen(b: PathBundle) -> PathBundle:
    g = b.grid
    return PathBundle(TimeGrid(g.t_start, g.t_end, g.n_steps // 2), b.values[:, ::2])


def _radial_error(drv):
    out = integrate_coordinate_scheme(circle_rotation(), drv, np.array([1.0, 0.0]))
    return float(np.mean(np.abs(np.linalg.norm(out.values[:, -1], axis=1) - 1)))


def test_coordinate_scheme_first_order_radial_error():
    fine = simulate_brownian(TimeGrid(0, 1, 1024), 1, 2000, seed=9)
    e_fine, e_coarse = _radial_error(fine), _radial_error(_coarsen(fine))
    assert 1.5 <= e_coarse / e_fine <= 3


def test_coordinate_and_jet_angles_agree():
    errs = []
    for n in (256, 1024):
        drv = simulate_brownian(TimeGrid(0, 1, n), 1, 500, seed=10)
        x0 = np.array([1.0, 0.0])
        a = integrate_jet_scheme(circle_rotation(), drv, x0).values[:, -1]
        b = integrate_coordinate_scheme(circle_rotation(), drv, x0).values[:, -1]
        d = np.angle(np.exp(1j * (np.arctan2(a[:, 1], a[:, 0]) - np.arctan2(b[:, 1], b[:, 0]))))
        errs.append(float(np.sqrt(np.mean(d**2))))
    assert errs[1] < errs[0]
    assert errs[1] < 3 * np.sqrt(1 / 1024)


def test_residual_csv():
    buf = io.StringIO()
    write_residual_csv(np.array([[0, 0.0], [1, 1e-17]]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "step,max_residual"
    assert lines[1] == "0,0"
