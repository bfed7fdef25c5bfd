import numpy as np
import pytest

from graphclaim import autodiff as ad
from graphclaim.autodiff import Tensor, backward
from graphclaim.manifolds import (
    BALL_EPS, Euclidean, Lorentz, PoincareBall, get_manifold,
)
from graphclaim.selfcheck import roundtrip_error

KINDS = ("euclidean", "poincare", "lorentz")


def test_factory_resolves_all_kinds():
    assert isinstance(get_manifold("euclidean"), Euclidean)
    assert isinstance(get_manifold("poincare"), PoincareBall)
    assert isinstance(get_manifold("lorentz"), Lorentz)
    with pytest.raises(ValueError, match="unknown manifold"):
        get_manifold("spherical")


def test_ambient_dims():
    assert get_manifold("euclidean").ambient_dim(7) == 7
    assert get_manifold("poincare").ambient_dim(7) == 7
    assert get_manifold("lorentz").ambient_dim(7) == 8


@pytest.mark.parametrize("kind", KINDS)
def test_exp_log_roundtrip(kind):
    assert roundtrip_error(kind, n=200, max_norm=3.0) < 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_exp0_lands_on_manifold(kind):
    man = get_manifold(kind)
    rng = np.random.default_rng(3)
    v = rng.normal(0.0, 1.0, size=(20, man.ambient_dim(5)))
    if kind == "lorentz":
        v[:, 0] = 0.0
    pts = man.expmap0(Tensor(v)).data
    assert man.check_point(man.project(pts), tol=1e-9)


class TestPoincare:
    man = PoincareBall()

    def test_exp0_closed_form(self):
        out = self.man.expmap0(Tensor([[0.5, 0.0]]))
        np.testing.assert_allclose(out.data, [[np.tanh(0.5), 0.0]], atol=1e-12)

    def test_distance_from_origin_is_twice_tangent_norm(self):
        v = Tensor([[0.3, 0.4]])  # norm 0.5
        x = self.man.expmap0(v)
        d = self.man.dist(Tensor([[0.0, 0.0]]), x)
        np.testing.assert_allclose(d.data, [[1.0]], atol=1e-12)

    def test_dist_closed_form(self):
        x, y = Tensor([[0.5, 0.0]]), Tensor([[-0.5, 0.0]])
        expected = np.arccosh(1.0 + 2.0 * 1.0 / (0.75 * 0.75))
        np.testing.assert_allclose(self.man.dist(x, y).data, [[expected]], atol=1e-12)

    def test_pairwise_matches_dist(self):
        rng = np.random.default_rng(5)
        x = self.man.project(rng.normal(0.0, 0.4, size=(6, 4)))
        c = self.man.project(rng.normal(0.0, 0.4, size=(3, 4)))
        pair = self.man.pairwise_dist(Tensor(x), Tensor(c)).data
        for i in range(6):
            for j in range(3):
                d = self.man.dist(Tensor(x[i:i + 1]), Tensor(c[j:j + 1])).data
                np.testing.assert_allclose(pair[i, j], d[0, 0], atol=1e-10)

    def test_project_enforces_margin(self):
        pt = np.array([[3.0, 4.0]])
        proj = self.man.project(pt)
        np.testing.assert_allclose(np.linalg.norm(proj), 1.0 - BALL_EPS, atol=1e-12)
        inside = np.array([[0.1, 0.2]])
        np.testing.assert_array_equal(self.man.project(inside), inside)

    def test_rgrad_conformal_factor(self):
        x = np.array([[0.6, 0.0]])
        g = np.array([[1.0, 2.0]])
        factor = (1.0 - 0.36) ** 2 / 4.0
        np.testing.assert_allclose(self.man.egrad2rgrad(x, g), g * factor, atol=1e-15)

    def test_logmap0_near_boundary_keeps_gradients(self):
        x = Tensor([[1.0 - 1e-6, 0.0]], requires_grad=True)
        out = self.man.logmap0(x)
        assert np.all(np.isfinite(out.data))
        backward(ad.total_sum(out))
        assert np.all(np.isfinite(x.grad))
        assert np.any(x.grad != 0.0)

    def test_dist_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            self.man._acosh_arg(Tensor([[-1.0]]), Tensor([[0.0]]), Tensor([[0.0]]))


class TestLorentz:
    man = Lorentz()

    def test_exp0_closed_form(self):
        out = self.man.expmap0(Tensor([[0.0, 1.0, 0.0]]))
        np.testing.assert_allclose(out.data, [[np.cosh(1.0), np.sinh(1.0), 0.0]],
                                   atol=1e-12)

    def test_distance_from_origin_is_tangent_norm(self):
        v = Tensor([[0.0, 0.6, 0.8]])  # spatial norm 1
        x = self.man.expmap0(v)
        o = Tensor(self.man.origin(2)[None, :])
        np.testing.assert_allclose(self.man.dist(o, x).data, [[1.0]], atol=1e-12)

    def test_minkowski_inner(self):
        x = np.array([2.0, 1.0, 1.0])
        y = np.array([1.0, 0.5, 0.0])
        assert self.man.minkowski_inner(x, y) == pytest.approx(-2.0 + 0.5)

    def test_project_restores_hyperboloid(self):
        rng = np.random.default_rng(2)
        pts = rng.normal(0.0, 2.0, size=(10, 4))
        proj = self.man.project(pts)
        assert self.man.check_point(proj, tol=1e-10)
        np.testing.assert_array_equal(proj[:, 1:], pts[:, 1:])

    def test_rgrad_is_tangent(self):
        rng = np.random.default_rng(4)
        x = self.man.project(rng.normal(size=(5, 4)))
        g = rng.normal(size=(5, 4))
        r = self.man.egrad2rgrad(x, g)
        np.testing.assert_allclose(self.man.minkowski_inner(x, r), 0.0, atol=1e-10)

    def test_pairwise_matches_dist(self):
        rng = np.random.default_rng(6)
        x = self.man.project(rng.normal(0.0, 0.7, size=(5, 4)))
        c = self.man.project(rng.normal(0.0, 0.7, size=(4, 4)))
        pair = self.man.pairwise_dist(Tensor(x), Tensor(c)).data
        for i in range(5):
            for j in range(4):
                d = self.man.dist(Tensor(x[i:i + 1]), Tensor(c[j:j + 1])).data
                np.testing.assert_allclose(pair[i, j], d[0, 0], atol=1e-10)

    def test_logmap0_has_zero_time_component(self):
        rng = np.random.default_rng(7)
        pts = self.man.project(rng.normal(size=(6, 5)))
        tangent = self.man.logmap0(Tensor(pts)).data
        np.testing.assert_allclose(tangent[:, 0], 0.0, atol=1e-15)


@pytest.mark.parametrize("kind", ("poincare", "lorentz"))
def test_triangle_inequality(kind):
    man = get_manifold(kind)
    rng = np.random.default_rng(11)
    for _ in range(50):
        pts = man.project(rng.normal(0.0, 0.5, size=(3, man.ambient_dim(3))))
        d = lambda i, j: float(man.dist(Tensor(pts[i:i + 1]), Tensor(pts[j:j + 1])).data[0, 0])
        assert d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9


@pytest.mark.parametrize("kind", ("poincare", "lorentz"))
def test_dist_symmetry_and_identity(kind):
    man = get_manifold(kind)
    rng = np.random.default_rng(13)
    pts = man.project(rng.normal(0.0, 0.5, size=(2, man.ambient_dim(4))))
    a, b = Tensor(pts[:1]), Tensor(pts[1:])
    np.testing.assert_allclose(man.dist(a, b).data, man.dist(b, a).data, atol=1e-12)
    np.testing.assert_allclose(man.dist(a, a).data, 0.0, atol=1e-6)


def test_poincare_and_lorentz_distances_agree():
    # the two models are isometric; map the same tangent vectors through both
    rng = np.random.default_rng(17)
    ball, hyp = PoincareBall(), Lorentz()
    v = rng.normal(0.0, 0.5, size=(2, 3))
    # ball convention halves the tangent norm relative to the hyperboloid
    bx = ball.expmap0(Tensor(v / 2.0))
    lv = np.concatenate([np.zeros((2, 1)), v], axis=1)
    lx = hyp.expmap0(Tensor(lv))
    d_ball = ball.dist(Tensor(bx.data[:1]), Tensor(bx.data[1:])).data
    d_hyp = hyp.dist(Tensor(lx.data[:1]), Tensor(lx.data[1:])).data
    np.testing.assert_allclose(d_ball, d_hyp, atol=1e-9)
