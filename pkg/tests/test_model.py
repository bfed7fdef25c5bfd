import numpy as np
import pytest

from graphclaim import autodiff as ad
from graphclaim import model as M
from graphclaim.autodiff import Tensor
from graphclaim.data import SentenceGraph, batch
from graphclaim.manifolds import get_manifold
from graphclaim.model import (
    ModelConfig, batch_loss, classify, count_params, forward, init_params,
    load_checkpoint, param_breakdown, save_checkpoint, weighted_ce,
    weighted_ce_from_logits,
)
from graphclaim.synthetic import random_graph

BASE = ModelConfig()
POS16 = ModelConfig(pos_dim=16)

TINY = dict(layers=2, hidden=5, word_dim=4, pos_dim=3, num_relations=3, num_pos=4)


def _tiny_batch(seed=0, n_graphs=4, reverse=False):
    rng = np.random.default_rng(seed)
    table = rng.normal(0.0, 0.5, size=(12, 4))
    graphs = [random_graph(rng, 12, 4, 3, graph_id=f"g{i}", reverse_edges=reverse)
              for i in range(n_graphs)]
    return graphs, batch(graphs), table


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ModelConfig(hidden=0)
        with pytest.raises(ValueError):
            ModelConfig(layers=0)
        with pytest.raises(ValueError):
            ModelConfig(dropout=1.0)
        with pytest.raises(ValueError):
            ModelConfig(readout="attention")
        with pytest.raises(ValueError):
            ModelConfig(class_weights=(0.0, 1.0))

    def test_dict_roundtrip(self):
        cfg = ModelConfig(manifold="poincare", class_weights=(0.7, 1.9), pos_dim=16)
        back = ModelConfig.from_dict(cfg.to_dict())
        assert back == cfg


class TestParamCounts:
    def test_base_total(self):
        assert count_params(BASE) == 12_304_898

    def test_pos16_total(self):
        assert count_params(POS16) == 12_489_506

    def test_base_breakdown(self):
        b = param_breakdown(BASE)
        assert b["layer1"] == 3_456_256
        assert b["hidden_layers"] == 8_848_128
        assert b["classifier"] == 514
        assert b["pos_embeddings"] == 0

    def test_pos16_breakdown(self):
        b = param_breakdown(POS16)
        assert b["pos_embeddings"] == 288
        assert b["layer1"] == 3_640_576

    @pytest.mark.parametrize("manifold", ("euclidean", "poincare", "lorentz"))
    @pytest.mark.parametrize("readout", ("meanpool", "centroid"))
    def test_closed_form_matches_initialized_tensors(self, manifold, readout):
        cfg = ModelConfig(manifold=manifold, readout=readout, centroids=4, **TINY)
        params = init_params(cfg, np.random.default_rng(0))
        assert params.num_params() == count_params(cfg)

    def test_lorentz_centroids_carry_time_coordinate(self):
        eu = ModelConfig(manifold="euclidean", readout="centroid", centroids=4, **TINY)
        lo = ModelConfig(manifold="lorentz", readout="centroid", centroids=4, **TINY)
        assert count_params(lo) - count_params(eu) == 4


class TestInit:
    def test_draw_order_is_reproducible(self):
        cfg = ModelConfig(readout="centroid", centroids=4, **TINY)
        a = init_params(cfg, np.random.default_rng(9))
        b = init_params(cfg, np.random.default_rng(9))
        for (na, ta), (nb, tb) in zip(a.named(), b.named()):
            assert na == nb
            np.testing.assert_array_equal(ta.data, tb.data)

    def test_biases_start_at_zero(self):
        params = init_params(ModelConfig(**TINY), np.random.default_rng(0))
        for bias in params.b + [params.bc]:
            np.testing.assert_array_equal(bias.data, 0.0)

    @pytest.mark.parametrize("manifold", ("poincare", "lorentz"))
    def test_centroids_start_on_manifold(self, manifold):
        cfg = ModelConfig(manifold=manifold, readout="centroid", centroids=6, **TINY)
        params = init_params(cfg, np.random.default_rng(3))
        assert get_manifold(manifold).check_point(params.C.data, tol=1e-9)

    def test_manifold_params(self):
        cfg = ModelConfig(readout="centroid", centroids=4, **TINY)
        assert M.manifold_params(init_params(cfg, np.random.default_rng(0))) == {"C"}
        cfg2 = ModelConfig(**TINY)
        assert M.manifold_params(init_params(cfg2, np.random.default_rng(0))) == set()


class TestFeatures:
    def test_word_only(self):
        _, b, table = _tiny_batch()
        cfg = ModelConfig(**{**TINY, "pos_dim": 0})
        feats = M.assemble_features(b, table, init_params(cfg, np.random.default_rng(0)), cfg)
        np.testing.assert_array_equal(feats.data, table[b.node_token_ids])

    def test_pos_concat(self):
        _, b, table = _tiny_batch()
        cfg = ModelConfig(**TINY)
        params = init_params(cfg, np.random.default_rng(0))
        feats = M.assemble_features(b, table, params, cfg)
        assert feats.shape == (b.num_nodes, 4 + 3)
        np.testing.assert_array_equal(feats.data[:, 4:], params.P.data[b.node_pos_ids])

    def test_out_of_range_token_id(self):
        _, b, table = _tiny_batch()
        cfg = ModelConfig(**{**TINY, "pos_dim": 0})
        params = init_params(cfg, np.random.default_rng(0))
        with pytest.raises(IndexError):
            M.assemble_features(b, table[:2], params, cfg)


class TestLayerForward:
    def test_identity_weights_mean_aggregation(self):
        # chain 0 -> 1 -> 2 plus root loop; with W = I and zero bias the
        # incoming mean is just the (positive) source features
        g = SentenceGraph("g", 0, [1, 2, 3], [0, 0, 0],
                          [(0, 0, 0), (0, 1, 0), (1, 2, 0)])
        b = batch([g])
        H = Tensor(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
        weights = [Tensor(np.eye(2))]
        bias = Tensor(np.zeros(2))
        out = M.layer_forward(get_manifold("euclidean"), H, b, weights, bias,
                              is_first=True, dropout_p=0.0, train=False)
        np.testing.assert_allclose(out.data, [[1.0, 2.0], [1.0, 2.0], [3.0, 4.0]])

    def test_two_relations_average(self):
        # node 1 receives one edge per relation; W0 = I, W1 = 2I
        g = SentenceGraph("g", 0, [1, 2, 3], [0, 0, 0],
                          [(0, 0, 0), (0, 1, 0), (2, 1, 1), (0, 2, 0)])
        b = batch([g])
        H = Tensor(np.array([[2.0, 0.0], [0.0, 0.0], [4.0, 2.0]]))
        weights = [Tensor(np.eye(2)), Tensor(2.0 * np.eye(2))]
        out = M.layer_forward(get_manifold("euclidean"), H, b, weights,
                              Tensor(np.zeros(2)), is_first=True,
                              dropout_p=0.0, train=False)
        np.testing.assert_allclose(out.data[1], [(2.0 + 8.0) / 2, (0.0 + 4.0) / 2])

    def test_isolated_node_gets_bias_only(self):
        g1 = SentenceGraph("a", 0, [1], [0], [(0, 0, 0)])
        g2 = SentenceGraph("b", 0, [2, 3], [0, 0], [(0, 0, 0), (0, 1, 0)])
        b = batch([g1, g2])
        H = Tensor(np.ones((3, 2)))
        weights = [Tensor(np.zeros((2, 2)))]
        bias = Tensor(np.array([-1.0, 2.0]))
        out = M.layer_forward(get_manifold("euclidean"), H, b, weights, bias,
                              is_first=True, dropout_p=0.0, train=False)
        # every message is zero, so each node shows leaky_relu(bias)
        np.testing.assert_allclose(out.data, np.tile([-0.5, 2.0], (3, 1)))

    def test_leaky_slope_is_half(self):
        assert M.LEAKY_SLOPE == 0.5

    @pytest.mark.parametrize("manifold", ("poincare", "lorentz"))
    def test_hyperbolic_layer_outputs_manifold_points(self, manifold):
        man = get_manifold(manifold)
        _, b, table = _tiny_batch()
        cfg = ModelConfig(manifold=manifold, **{**TINY, "pos_dim": 0})
        params = init_params(cfg, np.random.default_rng(1))
        H = M.assemble_features(b, table, params, cfg)
        out = M.layer_forward(man, H, b, params.W[0], params.b[0],
                              is_first=True, dropout_p=0.0, train=False)
        assert man.check_point(man.project(out.data), tol=1e-9)
        if manifold == "poincare":
            assert np.linalg.norm(out.data, axis=1).max() < 1.0


class TestForward:
    @pytest.mark.parametrize("manifold", ("euclidean", "poincare", "lorentz"))
    @pytest.mark.parametrize("readout", ("meanpool", "centroid"))
    def test_probabilities_are_valid(self, manifold, readout):
        _, b, table = _tiny_batch()
        cfg = ModelConfig(manifold=manifold, readout=readout, centroids=4, **TINY)
        params = init_params(cfg, np.random.default_rng(0))
        logits, probs = forward(params, cfg, b, table)
        assert logits.shape == (b.graph_count, 2)
        np.testing.assert_allclose(probs.data.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(probs.data >= 0.0)

    def test_batched_equals_per_graph(self):
        graphs, b, table = _tiny_batch(n_graphs=5)
        cfg = ModelConfig(**{**TINY, "pos_dim": 0})
        params = init_params(cfg, np.random.default_rng(2))
        batched, _ = forward(params, cfg, b, table)
        for i, g in enumerate(graphs):
            single, _ = forward(params, cfg, batch([g]), table)
            np.testing.assert_allclose(single.data[0], batched.data[i], atol=1e-9)

    def test_node_order_permutation_invariance(self):
        rng = np.random.default_rng(8)
        g = random_graph(rng, 12, 4, 3, n_nodes=6, graph_id="g", reverse_edges=True)
        perm = rng.permutation(6)
        inv = np.argsort(perm)
        g2 = SentenceGraph("p", g.label,
                           [g.token_ids[perm[i]] for i in range(6)],
                           [g.pos_ids[perm[i]] for i in range(6)],
                           [(int(inv[s]), int(inv[d]), r) for s, d, r in g.edges])
        table = rng.normal(size=(12, 4))
        cfg = ModelConfig(**{**TINY, "pos_dim": 0})
        params = init_params(cfg, np.random.default_rng(0))
        a, _ = forward(params, cfg, batch([g]), table)
        b_, _ = forward(params, cfg, batch([g2]), table)
        np.testing.assert_allclose(a.data, b_.data, atol=1e-9)

    def test_training_dropout_is_seeded(self):
        _, b, table = _tiny_batch()
        cfg = ModelConfig(dropout=0.3, **TINY)
        params = init_params(cfg, np.random.default_rng(0))
        l1, _ = forward(params, cfg, b, table, train=True, rng=np.random.default_rng(5))
        l2, _ = forward(params, cfg, b, table, train=True, rng=np.random.default_rng(5))
        l3, _ = forward(params, cfg, b, table, train=True, rng=np.random.default_rng(6))
        np.testing.assert_array_equal(l1.data, l2.data)
        assert not np.array_equal(l1.data, l3.data)


class TestClassify:
    def test_zero_head_gives_uniform(self):
        repr_ = Tensor(np.random.default_rng(0).normal(size=(3, 4)))
        _, probs = classify(repr_, Tensor(np.zeros((4, 2))), Tensor(np.zeros(2)))
        np.testing.assert_allclose(probs.data, 0.5)

    def test_large_bias_saturates(self):
        repr_ = Tensor(np.zeros((1, 4)))
        _, probs = classify(repr_, Tensor(np.zeros((4, 2))),
                            Tensor(np.array([0.0, 50.0])))
        assert probs.data[0, 1] > 1.0 - 1e-12


class TestLoss:
    def test_uniform_prediction_gives_ln2(self):
        probs = Tensor([[0.5, 0.5]])
        loss = weighted_ce(probs, np.array([0]))
        assert loss.item() == pytest.approx(np.log(2.0), abs=1e-12)

    def test_class_weight_scales_term(self):
        probs = Tensor([[0.5, 0.5]])
        loss = weighted_ce(probs, np.array([1]), weights=(0.7, 1.9))
        assert loss.item() == pytest.approx(1.9 * np.log(2.0), abs=1e-12)

    def test_perfect_prediction_is_zero(self):
        probs = Tensor([[0.0, 1.0]])
        assert weighted_ce(probs, np.array([1])).item() == pytest.approx(0.0, abs=1e-9)

    def test_mean_over_batch(self):
        probs = Tensor([[0.5, 0.5], [0.25, 0.75]])
        loss = weighted_ce(probs, np.array([0, 1]))
        expected = (np.log(2.0) - np.log(0.75)) / 2.0
        assert loss.item() == pytest.approx(expected, abs=1e-12)

    def test_logits_path_matches_probs_path(self):
        rng = np.random.default_rng(0)
        logits = Tensor(rng.normal(size=(6, 2)))
        labels = rng.integers(0, 2, size=6)
        via_probs = weighted_ce(ad.softmax(logits), labels, weights=(0.7, 1.9))
        via_logits = weighted_ce_from_logits(logits, labels, weights=(0.7, 1.9))
        assert via_probs.item() == pytest.approx(via_logits.item(), abs=1e-12)

    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError):
            weighted_ce(Tensor([[0.5, 0.5]]), np.array([2]))
        with pytest.raises(ValueError):
            weighted_ce(Tensor(np.zeros((0, 2))), np.array([]))

    def test_batch_gradient_is_mean_of_per_graph_gradients(self):
        graphs, b, table = _tiny_batch(n_graphs=2)
        cfg = ModelConfig(**{**TINY, "pos_dim": 0})
        params = init_params(cfg, np.random.default_rng(4))
        ad.zero_grads(params.tensors())
        ad.backward(batch_loss(params, cfg, b, table))
        joint = {n: t.grad.copy() for n, t in params.named()}
        singles = []
        for g in graphs:
            ad.zero_grads(params.tensors())
            ad.backward(batch_loss(params, cfg, batch([g]), table))
            singles.append({n: (np.zeros_like(t.data) if t.grad is None else t.grad.copy())
                            for n, t in params.named()})
        for name in joint:
            mean = (singles[0][name] + singles[1][name]) / 2.0
            np.testing.assert_allclose(joint[name], mean, atol=1e-10)


class TestCheckpoint:
    def test_roundtrip_is_bitwise(self, tmp_path):
        cfg = ModelConfig(manifold="poincare", readout="centroid", centroids=4,
                          class_weights=(0.7, 1.9), **TINY)
        params = init_params(cfg, np.random.default_rng(21))
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, cfg, params, extra={"best_epoch": 7})
        cfg2, params2, extra = load_checkpoint(path)
        assert cfg2 == cfg
        assert extra == {"best_epoch": 7}
        for (n1, t1), (n2, t2) in zip(params.named(), params2.named()):
            assert n1 == n2
            np.testing.assert_array_equal(t1.data, t2.data)

    def test_rejects_foreign_files(self, tmp_path):
        path = tmp_path / "bogus.ckpt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(ValueError, match="not a graphclaim checkpoint"):
            load_checkpoint(path)
