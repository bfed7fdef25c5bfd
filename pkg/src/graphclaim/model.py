"""Relational message-passing classifier over dependency graphs.

Node features are the concatenation of a frozen word vector and a learned
POS embedding. Each layer selects a weight matrix per dependency relation
(equivalent to multiplying a block matrix by the relation's one-hot vector),
mean-aggregates incoming messages, and applies bias + LeakyReLU + dropout.
Hyperbolic variants run the linear algebra in the tangent space at the
origin and map through exp/log between layers.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import GraphBatch
from .manifolds import Euclidean, Lorentz, get_manifold
from .optim import xavier_init

LEAKY_SLOPE = 0.5
PROB_FLOOR = 1e-12

POS_DIM_GRID = (0, 16, 32, 64, 128)


@dataclass
class ModelConfig:
    manifold: str = "euclidean"
    layers: int = 4
    hidden: int = 256
    word_dim: int = 300
    pos_dim: int = 0
    num_relations: int = 45
    num_pos: int = 18
    dropout: float = 0.0
    class_weights: tuple[float, float] | None = None
    readout: str = "meanpool"          # meanpool | centroid
    centroids: int = 30
    reverse_edges: bool = True

    def __post_init__(self):
        if self.hidden <= 0:
            raise ValueError("hidden must be positive")
        if self.layers < 1:
            raise ValueError("need at least one layer")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.readout not in ("meanpool", "centroid"):
            raise ValueError(f"unknown readout mode {self.readout!r}")
        if self.class_weights is not None:
            self.class_weights = (float(self.class_weights[0]), float(self.class_weights[1]))
            if min(self.class_weights) <= 0:
                raise ValueError("class weights must be positive")

    @property
    def input_dim(self) -> int:
        return self.word_dim + self.pos_dim

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_weights"] = list(self.class_weights) if self.class_weights else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if d.get("class_weights") is not None:
            d["class_weights"] = tuple(d["class_weights"])
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class ParamSet:
    """All trainable parameters, in a fixed declaration order.

    ``W[l][r]`` is the relation-r weight matrix of layer l; ``b[l]`` the
    layer bias shared across relations. ``P`` is the POS embedding table,
    ``Wc``/``bc`` the classifier, ``C`` the manifold centroids (centroid
    readout only).
    """

    W: list[list[Tensor]]
    b: list[Tensor]
    P: Tensor | None
    Wc: Tensor
    bc: Tensor
    C: Tensor | None = None

    def named(self) -> list[tuple[str, Tensor]]:
        out = []
        if self.P is not None:
            out.append(("P", self.P))
        for l, row in enumerate(self.W):
            for r, w in enumerate(row):
                out.append((f"W{l}_{r}", w))
            out.append((f"b{l}", self.b[l]))
        out.append(("Wc", self.Wc))
        out.append(("bc", self.bc))
        if self.C is not None:
            out.append(("C", self.C))
        return out

    def tensors(self) -> list[Tensor]:
        return [t for _, t in self.named()]

    def copy_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, t in self.named():
            t.data = arrays[name].copy()

    def num_params(self) -> int:
        return sum(t.data.size for t in self.tensors())


def init_params(config: ModelConfig, rng: np.random.Generator) -> ParamSet:
    """Xavier-initialized parameters; draw order is fixed for reproducibility:
    POS table, then per layer all relation matrices, then classifier, then
    centroids."""
    manifold = get_manifold(config.manifold)
    P = None
    if config.pos_dim > 0:
        P = Tensor(xavier_init((config.num_pos, config.pos_dim), rng), requires_grad=True)
    W: list[list[Tensor]] = []
    b: list[Tensor] = []
    for layer in range(config.layers):
        d_in = config.input_dim if layer == 0 else config.hidden
        W.append([
            Tensor(xavier_init((d_in, config.hidden), rng), requires_grad=True)
            for _ in range(config.num_relations)
        ])
        b.append(Tensor(np.zeros(config.hidden), requires_grad=True))
    repr_dim = config.hidden if config.readout == "meanpool" else config.centroids
    Wc = Tensor(xavier_init((repr_dim, 2), rng), requires_grad=True)
    bc = Tensor(np.zeros(2), requires_grad=True)
    C = None
    if config.readout == "centroid":
        tangent = xavier_init((config.centroids, config.hidden), rng)
        if isinstance(manifold, Lorentz):
            tangent = np.concatenate([np.zeros((config.centroids, 1)), tangent], axis=1)
        points = _expmap0_array(manifold, tangent)
        C = Tensor(manifold.project(points), requires_grad=True)
    return ParamSet(W=W, b=b, P=P, Wc=Wc, bc=bc, C=C)


def _expmap0_array(manifold, tangent: np.ndarray) -> np.ndarray:
    return manifold.expmap0(Tensor(tangent)).data


def manifold_params(params: ParamSet) -> set[str]:
    """Names of parameters that live on the manifold (Riemannian updates)."""
    return {"C"} if params.C is not None else set()


def assemble_features(batch: GraphBatch, table: np.ndarray, params: ParamSet,
                      config: ModelConfig) -> Tensor:
    """Per-node input rows: [word vector | POS embedding]."""
    ids = batch.node_token_ids
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"token id out of range for table with {table.shape[0]} rows")
    word = Tensor(table[ids])
    if config.pos_dim == 0:
        return word
    if batch.node_pos_ids.max(initial=0) >= config.num_pos:
        raise IndexError(f"POS id out of range for {config.num_pos} tags")
    pos = ad.gather_rows(params.P, batch.node_pos_ids)
    return ad.concat_cols([word, pos])


def _relational_mean(tangent: Tensor, batch: GraphBatch, weights: list[Tensor]) -> Tensor:
    """Mean over incoming edges of W_rel . h_src; nodes with no incoming
    edges get a zero message row."""
    msgs, dsts = [], []
    for rel in np.unique(batch.edge_rel):
        mask = batch.edge_rel == rel
        src = batch.edge_src[mask]
        msgs.append(ad.matmul(ad.gather_rows(tangent, src), weights[int(rel)]))
        dsts.append(batch.edge_dst[mask])
    if not msgs:
        return Tensor(np.zeros((batch.num_nodes, weights[0].shape[1])))
    stacked = ad.concat_rows(msgs)
    return ad.scatter_mean(stacked, np.concatenate(dsts), batch.num_nodes)


def layer_forward(manifold, H: Tensor, batch: GraphBatch, weights: list[Tensor],
                  bias: Tensor, is_first: bool, dropout_p: float,
                  train: bool, rng=None) -> Tensor:
    """One relational layer. Hyperbolic inputs (manifold points) are pulled
    to the tangent space first, except on the first layer where the inputs
    are already Euclidean feature rows."""
    euclidean = isinstance(manifold, Euclidean)
    if euclidean or is_first:
        tangent = H
    else:
        tangent = _strip_time(manifold, manifold.logmap0(H))
    m = _relational_mean(tangent, batch, weights)
    a = ad.leaky_relu(m + bias, LEAKY_SLOPE)
    a = ad.dropout(a, dropout_p, train, rng)
    if euclidean:
        return a
    return manifold.expmap0(_pad_time(manifold, a))


def _pad_time(manifold, tangent: Tensor) -> Tensor:
    if isinstance(manifold, Lorentz):
        zeros = Tensor(np.zeros((tangent.shape[0], 1)))
        return ad.concat_cols([zeros, tangent])
    return tangent


def _strip_time(manifold, tangent: Tensor) -> Tensor:
    if isinstance(manifold, Lorentz):
        return ad.narrow_cols(tangent, 1, tangent.shape[1])
    return tangent


def readout(manifold, H: Tensor, batch: GraphBatch, mode: str,
            centroids: Tensor | None = None) -> Tensor:
    """Per-graph representation: tangent mean pool, or mean over nodes of
    distances to the learned centroids."""
    if mode == "meanpool":
        if isinstance(manifold, Euclidean):
            tangent = H
        else:
            tangent = _strip_time(manifold, manifold.logmap0(H))
        return ad.scatter_mean(tangent, batch.graph_of_node, batch.graph_count)
    if mode == "centroid":
        dists = manifold.pairwise_dist(H, centroids)
        return ad.scatter_mean(dists, batch.graph_of_node, batch.graph_count)
    raise ValueError(f"unknown readout mode {mode!r}")


def classify(graph_repr: Tensor, Wc: Tensor, bc: Tensor) -> tuple[Tensor, Tensor]:
    """Linear head: returns (logits, softmax probabilities)."""
    logits = ad.matmul(graph_repr, Wc) + bc
    return logits, ad.softmax(logits)


def forward(params: ParamSet, config: ModelConfig, batch: GraphBatch,
            table: np.ndarray, train: bool = False, rng=None) -> tuple[Tensor, Tensor]:
    """Full forward pass over a batch; returns (logits, probabilities)."""
    manifold = get_manifold(config.manifold)
    h = assemble_features(batch, table, params, config)
    h = ad.dropout(h, config.dropout, train, rng)
    for layer in range(config.layers):
        h = layer_forward(manifold, h, batch, params.W[layer], params.b[layer],
                          is_first=(layer == 0), dropout_p=config.dropout,
                          train=train, rng=rng)
    repr_ = readout(manifold, h, batch, config.readout, params.C)
    return classify(repr_, params.Wc, params.bc)


def weighted_ce(probs: Tensor, labels: np.ndarray,
                weights: tuple[float, float] | None = None) -> Tensor:
    """Class-weighted cross-entropy, mean over graphs.

    Per graph: -w_label * log(p_label), probabilities floored at 1e-12.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty label array")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    w = (1.0, 1.0) if weights is None else weights
    picker = np.zeros((labels.size, 2))
    picker[np.arange(labels.size), labels] = [w[l] for l in labels]
    logp = ad.log(ad.clamp(probs, lo=PROB_FLOOR, hi=1.0))
    return ad.total_sum(logp * Tensor(picker)) * (-1.0 / labels.size)


def weighted_ce_from_logits(logits: Tensor, labels: np.ndarray,
                            weights: tuple[float, float] | None = None) -> Tensor:
    """Same loss as :func:`weighted_ce` computed through log-softmax, which
    keeps gradients alive where the probabilities would underflow the floor."""
    labels = np.asarray(labels)
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    w = (1.0, 1.0) if weights is None else weights
    picker = np.zeros((labels.size, 2))
    picker[np.arange(labels.size), labels] = [w[l] for l in labels]
    logp = ad.log_softmax(logits)
    return ad.total_sum(logp * Tensor(picker)) * (-1.0 / labels.size)


def batch_loss(params: ParamSet, config: ModelConfig, batch: GraphBatch,
               table: np.ndarray, train: bool = False, rng=None) -> Tensor:
    logits, _ = forward(params, config, batch, table, train=train, rng=rng)
    return weighted_ce_from_logits(logits, batch.labels, config.class_weights)


# ---------------------------------------------------------------------------
# parameter accounting
# ---------------------------------------------------------------------------

def param_breakdown(config: ModelConfig) -> dict[str, int]:
    """Closed-form parameter counts by component. ``centroids`` is reported
    separately so the meanpool totals stay directly comparable."""
    r, h = config.num_relations, config.hidden
    counts = {
        "pos_embeddings": config.num_pos * config.pos_dim if config.pos_dim else 0,
        "layer1": r * config.input_dim * h + h,
        "hidden_layers": (config.layers - 1) * (r * h * h + h),
        "classifier": (h if config.readout == "meanpool" else config.centroids) * 2 + 2,
        "centroids": 0,
    }
    if config.readout == "centroid":
        man = get_manifold(config.manifold)
        counts["centroids"] = config.centroids * man.ambient_dim(h)
    return counts


def count_params(config: ModelConfig) -> int:
    return sum(param_breakdown(config).values())


# ---------------------------------------------------------------------------
# checkpoint format: magic + version + config JSON + named float64 tensors
# ---------------------------------------------------------------------------

_MAGIC = b"GCKP"
_VERSION = 1


def save_checkpoint(path, config: ModelConfig, params: ParamSet,
                    extra: dict | None = None) -> None:
    header = json.dumps({"config": config.to_dict(), "extra": extra or {}}).encode("utf-8")
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<II", _VERSION, len(header)))
    buf.write(header)
    for name, tensor in params.named():
        nb = name.encode("utf-8")
        arr = np.ascontiguousarray(tensor.data, dtype="<f8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}q", *arr.shape))
        buf.write(arr.tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> tuple[ModelConfig, ParamSet, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ValueError(f"{path}: not a graphclaim checkpoint")
    version, hlen = struct.unpack_from("<II", blob, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    meta = json.loads(blob[12:12 + hlen].decode("utf-8"))
    config = ModelConfig.from_dict(meta["config"])
    params = init_params(config, np.random.default_rng(0))
    offset = 12 + hlen
    arrays = {}
    while offset < len(blob):
        (nlen,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset:offset + nlen].decode("utf-8")
        offset += nlen
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}q", blob, offset)
        offset += 8 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=size, offset=offset).reshape(shape).copy()
        offset += 8 * size
    params.load_arrays(arrays)
    return config, params, meta.get("extra", {})
