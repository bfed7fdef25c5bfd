"""Geometry backends: Euclidean space, the Poincaré ball, and the Lorentz
hyperboloid (both at curvature -1).

Two surfaces per backend:

* tape-aware maps (``expmap0``, ``logmap0``, ``dist``, ``pairwise_dist``)
  operating on :class:`~graphclaim.autodiff.Tensor` rows, used inside the
  model's forward pass;
* plain-array helpers (``project``, ``egrad2rgrad``, ``check_point``) used
  by the optimizer to keep parameters on the manifold.

Convention: ``expmap0`` on the ball uses ``tanh(|v|)``, so the induced
distance from the origin is ``2 * |v|``; the Lorentz map gives ``|v|``.
Tests relying on closed-form constants assume exactly these conventions.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

BALL_EPS = 1e-5        # Poincaré boundary margin enforced by project()
ARTANH_EPS = 1e-9      # artanh inputs clamped to 1 - ARTANH_EPS
ACOSH_SLACK = 1e-9     # arcosh arguments this far below 1 are clamped, not errors
_TINY = 1e-15


def _safe_norm_scale(x: Tensor, coeff: Tensor) -> Tensor:
    """Rows of ``x`` rescaled by ``coeff / |row|`` with a 0 -> 0 convention."""
    n = ad.row_norm(x)
    return x * (coeff / ad.clamp(n, lo=_TINY))


class Euclidean:
    name = "euclidean"

    def ambient_dim(self, dim: int) -> int:
        return dim

    def expmap0(self, v: Tensor) -> Tensor:
        return v

    def logmap0(self, x: Tensor) -> Tensor:
        return x

    def dist(self, x: Tensor, y: Tensor) -> Tensor:
        return ad.sqrt(ad.clamp(ad.sum_cols(ad.square(x - y)), lo=0.0))

    def pairwise_dist(self, x: Tensor, c: Tensor) -> Tensor:
        d2 = _pairwise_sq_dists(x, c)
        return ad.sqrt(ad.clamp(d2, lo=0.0))

    def project(self, x: np.ndarray) -> np.ndarray:
        return x

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        return g

    def check_point(self, x: np.ndarray, tol: float = 1e-6) -> bool:
        return bool(np.all(np.isfinite(x)))


def _pairwise_sq_dists(x: Tensor, c: Tensor) -> Tensor:
    x2 = ad.sum_cols(ad.square(x))                 # (n, 1)
    c2 = ad.transpose(ad.sum_cols(ad.square(c)))   # (1, K)
    cross = ad.matmul(x, ad.transpose(c))          # (n, K)
    return ad.clamp(x2 + c2 - 2.0 * cross, lo=0.0)


class PoincareBall:
    name = "poincare"

    def ambient_dim(self, dim: int) -> int:
        return dim

    def expmap0(self, v: Tensor) -> Tensor:
        n = ad.row_norm(v)
        return _safe_norm_scale(v, ad.tanh(n))

    def logmap0(self, x: Tensor) -> Tensor:
        # rows at or beyond the artanh domain are pulled back by a radial
        # rescale (not a hard clamp), which keeps gradients alive for points
        # that drift toward the boundary during training
        n = ad.row_norm(x)
        factor = ad.clamp((1.0 - ARTANH_EPS) / ad.clamp(n, lo=_TINY), hi=1.0)
        inside = x * factor
        return _safe_norm_scale(inside, ad.artanh(ad.clamp(n * factor, hi=1.0 - ARTANH_EPS)))

    def _acosh_arg(self, d2: Tensor, x2: Tensor, y2: Tensor) -> Tensor:
        denom = ad.clamp((1.0 - x2) * (1.0 - y2), lo=_TINY)
        arg = 1.0 + 2.0 * d2 / denom
        if np.any(arg.data < 1.0 - ACOSH_SLACK):
            raise ValueError("Poincaré distance argument below 1 beyond tolerance")
        return ad.clamp(arg, lo=1.0)

    def dist(self, x: Tensor, y: Tensor) -> Tensor:
        d2 = ad.sum_cols(ad.square(x - y))
        return ad.arcosh(self._acosh_arg(d2, ad.sum_cols(ad.square(x)),
                                         ad.sum_cols(ad.square(y))))

    def pairwise_dist(self, x: Tensor, c: Tensor) -> Tensor:
        d2 = _pairwise_sq_dists(x, c)
        x2 = ad.sum_cols(ad.square(x))
        c2 = ad.transpose(ad.sum_cols(ad.square(c)))
        return ad.arcosh(self._acosh_arg(d2, x2, c2))

    def project(self, x: np.ndarray) -> np.ndarray:
        limit = 1.0 - BALL_EPS
        norms = np.linalg.norm(x, axis=-1, keepdims=True)
        factor = np.where(norms > limit, limit / np.maximum(norms, _TINY), 1.0)
        return x * factor

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        sq = np.sum(x * x, axis=-1, keepdims=True)
        return g * ((1.0 - sq) ** 2 / 4.0)

    def check_point(self, x: np.ndarray, tol: float = 0.0) -> bool:
        norms = np.linalg.norm(x, axis=-1)
        return bool(np.all(norms <= 1.0 - BALL_EPS + tol))


class Lorentz:
    """Upper hyperboloid sheet <x,x>_L = -1 in Minkowski space.

    Points live in ambient (d+1) coordinates; tangent vectors at the origin
    carry an explicit zero time component (column 0).
    """

    name = "lorentz"

    def ambient_dim(self, dim: int) -> int:
        return dim + 1

    @staticmethod
    def minkowski_inner(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)

    def origin(self, dim: int) -> np.ndarray:
        o = np.zeros(dim + 1)
        o[0] = 1.0
        return o

    def expmap0(self, v: Tensor) -> Tensor:
        spatial = ad.narrow_cols(v, 1, v.shape[1])
        n = ad.row_norm(spatial)
        time = ad.cosh(n)
        space = _safe_norm_scale(spatial, ad.sinh(n))
        return ad.concat_cols([time, space])

    def logmap0(self, x: Tensor) -> Tensor:
        time = ad.clamp(ad.narrow_cols(x, 0, 1), lo=1.0)
        spatial = ad.narrow_cols(x, 1, x.shape[1])
        space = _safe_norm_scale(spatial, ad.arcosh(time))
        zeros = Tensor(np.zeros((x.shape[0], 1)))
        return ad.concat_cols([zeros, space])

    def _acosh_arg(self, neg_inner: Tensor) -> Tensor:
        if np.any(neg_inner.data < 1.0 - ACOSH_SLACK):
            raise ValueError("Lorentz distance argument below 1 beyond tolerance")
        return ad.clamp(neg_inner, lo=1.0)

    def dist(self, x: Tensor, y: Tensor) -> Tensor:
        x0, xs = ad.narrow_cols(x, 0, 1), ad.narrow_cols(x, 1, x.shape[1])
        y0, ys = ad.narrow_cols(y, 0, 1), ad.narrow_cols(y, 1, y.shape[1])
        neg_inner = x0 * y0 - ad.sum_cols(xs * ys)
        return ad.arcosh(self._acosh_arg(neg_inner))

    def pairwise_dist(self, x: Tensor, c: Tensor) -> Tensor:
        x0, xs = ad.narrow_cols(x, 0, 1), ad.narrow_cols(x, 1, x.shape[1])
        c0, cs = ad.narrow_cols(c, 0, 1), ad.narrow_cols(c, 1, c.shape[1])
        neg_inner = ad.matmul(x0, ad.transpose(c0)) - ad.matmul(xs, ad.transpose(cs))
        return ad.arcosh(self._acosh_arg(neg_inner))

    def project(self, x: np.ndarray) -> np.ndarray:
        spatial = x[..., 1:]
        time = np.sqrt(1.0 + np.sum(spatial * spatial, axis=-1, keepdims=True))
        return np.concatenate([time, spatial], axis=-1)

    def egrad2rgrad(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        h = g.copy()
        h[..., 0] = -h[..., 0]
        inner = self.minkowski_inner(x, h)[..., None]
        return h + inner * x

    def check_point(self, x: np.ndarray, tol: float = 1e-6) -> bool:
        inner = self.minkowski_inner(x, x)
        return bool(np.all(np.abs(inner + 1.0) <= tol) and np.all(x[..., 0] > 0))


_BACKENDS = {
    "euclidean": Euclidean,
    "poincare": PoincareBall,
    "lorentz": Lorentz,
}


def get_manifold(kind: str):
    """Resolve a manifold backend by name (euclidean | poincare | lorentz)."""
    try:
        return _BACKENDS[kind]()
    except KeyError:
        raise ValueError(f"unknown manifold kind {kind!r}; expected one of {sorted(_BACKENDS)}") from None
