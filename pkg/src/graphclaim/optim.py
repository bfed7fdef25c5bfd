"""AMSGrad for Euclidean parameters and a Riemannian variant for
manifold-valued ones, plus Xavier init and global-norm gradient clipping.

The Riemannian step rescales the Euclidean gradient into the manifold's
metric, keeps the moment buffers in plain coordinates (no parallel
transport), applies the usual AMSGrad update in ambient space, and projects
the result back onto the manifold.
"""

from __future__ import annotations

import numpy as np

from .manifolds import Euclidean, get_manifold


def xavier_init(shape, rng: np.random.Generator) -> np.ndarray:
    """Xavier/Glorot uniform: bound sqrt(6 / (fan_in + fan_out))."""
    if len(shape) != 2:
        raise ValueError(f"xavier_init expects a 2-D shape, got {shape}")
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, size=shape)


def clip_global_norm(grads: list[np.ndarray], max_norm: float = 1.0) -> list[np.ndarray]:
    """Scale all gradients so their joint L2 norm is at most ``max_norm``."""
    total_sq = 0.0
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient before clipping")
        total_sq += float(np.sum(g * g))
    total = np.sqrt(total_sq)
    if total <= max_norm:
        return grads
    factor = max_norm / total
    return [g * factor for g in grads]


class AMSGrad:
    """AMSGrad over named parameters; parameters listed in
    ``manifold_param_names`` take Riemannian steps on ``manifold``.

    State per parameter: first moment m, second moment v, running max
    second moment vhat (non-decreasing), shared step counter.
    """

    def __init__(self, named_params, lr: float = 0.001, betas=(0.9, 0.999),
                 eps: float = 1e-8, manifold_kind: str = "euclidean",
                 manifold_param_names=()):
        self.params = list(named_params)  # [(name, Tensor)]
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.manifold = get_manifold(manifold_kind)
        self.manifold_names = set(manifold_param_names)
        self.step_count = 0
        self.state = {
            name: {
                "m": np.zeros_like(t.data),
                "v": np.zeros_like(t.data),
                "vhat": np.zeros_like(t.data),
            }
            for name, t in self.params
        }

    def step(self, clip: float | None = 1.0) -> None:
        """One update from the gradients stored on the parameters."""
        grads = {}
        for name, t in self.params:
            grads[name] = np.zeros_like(t.data) if t.grad is None else t.grad
        if clip is not None:
            clipped = clip_global_norm([grads[n] for n, _ in self.params], clip)
            grads = {name: g for (name, _), g in zip(self.params, clipped)}

        self.step_count += 1
        bias_corr1 = 1.0 - self.beta1 ** self.step_count
        bias_corr2 = 1.0 - self.beta2 ** self.step_count
        for name, t in self.params:
            g = grads[name]
            riemannian = name in self.manifold_names and not isinstance(self.manifold, Euclidean)
            if riemannian:
                g = self.manifold.egrad2rgrad(t.data, g)
            s = self.state[name]
            s["m"] = self.beta1 * s["m"] + (1.0 - self.beta1) * g
            s["v"] = self.beta2 * s["v"] + (1.0 - self.beta2) * g * g
            np.maximum(s["vhat"], s["v"], out=s["vhat"])
            # both moments bias-corrected; without the second correction the
            # first step is ~1/sqrt(1-beta2) times the learning rate, which
            # pins ball-constrained points at the boundary for good
            update = -self.lr * (s["m"] / bias_corr1) / (np.sqrt(s["vhat"] / bias_corr2) + self.eps)
            if riemannian:
                t.data = self.manifold.project(t.data + update)
                if not self.manifold.check_point(t.data, tol=1e-6):
                    raise FloatingPointError(f"parameter {name} left the manifold")
            else:
                t.data = t.data + update

    # checkpoint support -------------------------------------------------
    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"__step__": np.asarray([self.step_count], dtype=np.float64)}
        for name, s in self.state.items():
            for key in ("m", "v", "vhat"):
                out[f"{name}.{key}"] = s[key]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.step_count = int(arrays["__step__"][0])
        for name, s in self.state.items():
            for key in ("m", "v", "vhat"):
                s[key] = arrays[f"{name}.{key}"].copy()
