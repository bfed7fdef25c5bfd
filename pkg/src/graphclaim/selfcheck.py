"""Built-in correctness suite: finite-difference gradient checks for the
full model on every geometry, exp/log round trips, and manifold invariants
under optimizer pressure. Used by the ``selfcheck`` CLI subcommand and the
acceptance tests."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from . import model as M
from .autodiff import Tensor, finite_diff_check
from .data import batch as make_batch
from .manifolds import BALL_EPS, Lorentz, PoincareBall, get_manifold
from .model import ModelConfig
from .optim import AMSGrad
from .synthetic import random_graph

MANIFOLD_KINDS = ("euclidean", "poincare", "lorentz")


def gradient_check(kind: str, n_graphs: int = 10, seed: int = 0,
                   eps: float = 1e-5, max_coords: int = 8,
                   readout: str = "centroid") -> tuple[float, list]:
    """Finite-difference check of the full model loss on small random
    graphs. Returns (max relative error, unstable coordinates)."""
    rng = np.random.default_rng(seed)
    cfg = ModelConfig(manifold=kind, layers=2, hidden=5, word_dim=4, pos_dim=3,
                      num_relations=3, num_pos=4, dropout=0.0,
                      class_weights=(0.7, 1.9), readout=readout, centroids=4)
    table = rng.normal(0.0, 0.5, size=(12, cfg.word_dim))
    graphs = [random_graph(rng, 12, cfg.num_pos, cfg.num_relations,
                           n_nodes=int(rng.integers(2, 9)), graph_id=f"fd{i}")
              for i in range(n_graphs)]
    b = make_batch(graphs)
    params = M.init_params(cfg, rng)
    tensors = params.tensors()

    def f(_):
        return M.batch_loss(params, cfg, b, table, train=False)

    return finite_diff_check(f, tensors, eps=eps, max_coords=max_coords,
                             rng=np.random.default_rng(seed + 1))


def roundtrip_error(kind: str, n: int = 200, max_norm: float = 3.0,
                    seed: int = 0) -> float:
    """max |log0(exp0(v)) - v| over random tangents with |v| <= max_norm."""
    manifold = get_manifold(kind)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 6))
    v *= (rng.uniform(0.0, max_norm, size=(n, 1))
          / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-12))
    if isinstance(manifold, Lorentz):
        v = np.concatenate([np.zeros((n, 1)), v], axis=1)
    back = manifold.logmap0(manifold.expmap0(Tensor(v)))
    return float(np.max(np.abs(back.data - v)))


def invariant_sweep(kind: str, steps: int = 1000, seed: int = 0,
                    dim: int = 6, n_points: int = 8) -> bool:
    """Run the Riemannian optimizer on random gradients and verify the
    points never leave the manifold."""
    manifold = get_manifold(kind)
    rng = np.random.default_rng(seed)
    ambient = manifold.ambient_dim(dim)
    pts = manifold.project(rng.normal(0.0, 0.5, size=(n_points, ambient)))
    param = Tensor(pts, requires_grad=True)
    opt = AMSGrad([("x", param)], lr=0.05, manifold_kind=kind,
                  manifold_param_names={"x"})
    for _ in range(steps):
        param.grad = rng.normal(0.0, 1.0, size=param.data.shape)
        opt.step(clip=None)
        if isinstance(manifold, PoincareBall):
            if np.linalg.norm(param.data, axis=1).max() > 1.0 - BALL_EPS + 1e-12:
                return False
        elif not manifold.check_point(param.data, tol=1e-6):
            return False
    return True


def run(quick: bool = False) -> list[tuple[str, bool, str]]:
    """Execute the whole suite; returns (name, passed, detail) rows."""
    results = []
    n_graphs = 3 if quick else 10
    steps = 100 if quick else 1000
    for kind in MANIFOLD_KINDS:
        err, unstable = gradient_check(kind, n_graphs=n_graphs)
        results.append((f"gradcheck[{kind}]", err < 1e-4 and not unstable,
                        f"max rel err {err:.2e}, unstable={len(unstable)}"))
        rt = roundtrip_error(kind)
        results.append((f"roundtrip[{kind}]", rt < 1e-9, f"max abs err {rt:.2e}"))
        ok = invariant_sweep(kind, steps=steps)
        results.append((f"invariants[{kind}]", ok, f"{steps} optimizer steps"))
    return results
