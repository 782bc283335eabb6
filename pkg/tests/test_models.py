import numpy as np
import pytest

from chebcnn.conv import chebyshev_basis
from chebcnn.data import make_batch
from chebcnn.errors import ConfigError
from chebcnn.graphs import build_graph, normalized_laplacian, permute_graph, scale_laplacian
from chebcnn.models import (INCEPTION_TRIBUTARY_FIELDS, VALID_DEPTHS,
                            ConvBN, InceptionBlock, Model, ModelSpec,
                            ResidualBlock, build_densenet, build_inception,
                            build_model, build_plain, build_resnet,
                            load_checkpoint, save_checkpoint)
from chebcnn.synthetic import random_connected_graph
from chebcnn.tensor import Tensor
from chebcnn.train import cross_entropy
from conftest import path_graph


def small_spec(arch, **kw):
    depth = {"plain": 6, "resnet": 3, "inception": 3, "densenet": 4}[arch]
    plan_len = depth if arch in ("plain", "densenet") else depth // 3
    defaults = dict(architecture=arch, num_classes=2, feature_dim=3,
                    depth=depth, channel_plan=tuple([4] * plan_len), seed=0)
    defaults.update(kw)
    return ModelSpec(**defaults)


def mutag_like_graph(rng=None):
    rng = rng or np.random.default_rng(0)
    g = random_connected_graph(17, rng, d=7)
    x = np.zeros((17, 7))
    x[np.arange(17), rng.integers(0, 7, size=17)] = 1.0
    return build_graph(17, list(g.edges), x, 0)


class TestSpecValidation:
    def test_invalid_depths_rejected(self):
        for arch, bad in [("plain", 5), ("resnet", 4), ("inception", 5),
                          ("densenet", 3)]:
            with pytest.raises(ConfigError):
                ModelSpec(architecture=arch, num_classes=2, feature_dim=3,
                          depth=bad)

    def test_unknown_architecture(self):
        with pytest.raises(ConfigError):
            ModelSpec(architecture="transformer", num_classes=2, feature_dim=3)

    def test_builder_architecture_guards(self):
        spec = small_spec("plain")
        build_plain(spec)
        with pytest.raises(ConfigError):
            build_resnet(spec)
        with pytest.raises(ConfigError):
            build_inception(spec)
        with pytest.raises(ConfigError):
            build_densenet(spec)

    def test_default_widths(self):
        spec = ModelSpec(architecture="plain", num_classes=2, feature_dim=7)
        assert spec.widths() == (32, 32, 32, 64, 64, 64)
        spec = ModelSpec(architecture="resnet", num_classes=2, feature_dim=7,
                         depth=12)
        assert spec.widths() == (32, 64, 64, 64)


class TestPlain:
    def test_parameter_count_closed_form(self):
        spec = ModelSpec(architecture="plain", num_classes=2, feature_dim=7)
        model = build_plain(spec)
        k = spec.receptive_field
        widths = spec.widths()
        expected = 0
        d = 7
        for w in widths:
            expected += (k + 1) * d * w  # conv thetas (no conv bias: BN follows)
            expected += 2 * w            # BN gamma/beta
            d = w
        expected += d * 2 + 2            # FC weight + bias
        assert model.num_parameters() == expected

    def test_forward_shape_and_normalization(self):
        model = build_plain(ModelSpec(architecture="plain", num_classes=2,
                                      feature_dim=7)).eval()
        batch = make_batch([mutag_like_graph()])
        probs = model.forward(batch)
        assert probs.shape == (1, 2)
        np.testing.assert_allclose(probs.data.sum(axis=1), 1.0, atol=1e-12)

    def test_eval_forward_bit_identical(self):
        model = build_model(small_spec("plain")).eval()
        batch = make_batch([random_connected_graph(8, np.random.default_rng(1), d=3)])
        a = model.forward(batch).data
        b = model.forward(batch).data
        np.testing.assert_array_equal(a, b)


class TestResNet:
    def test_depth_six_has_two_blocks(self):
        spec = ModelSpec(architecture="resnet", num_classes=2, feature_dim=7,
                         depth=6)
        model = build_resnet(spec)
        blocks = [b for b in model.blocks if isinstance(b, ResidualBlock)]
        assert len(blocks) == 2

    def test_shortcut_projection_shape(self):
        spec = ModelSpec(architecture="resnet", num_classes=2, feature_dim=32,
                         depth=6, channel_plan=(32, 64))
        model = build_resnet(spec)
        assert model.blocks[1].theta_s.shape == (32, 64)

    def test_zero_main_path_leaves_shortcut(self):
        rng = np.random.default_rng(0)
        block = ResidualBlock(3, 4, 2, rng, np.float64, "basis")
        for conv in block.convs:
            for th in conv.params.thetas:
                th.data[:] = 0.0
            conv.bn.beta.data[:] = 0.0
        g = random_connected_graph(6, rng, d=3)
        lt = scale_laplacian(normalized_laplacian(g))
        x = Tensor(g.node_features)
        out = block(lt, x, "eval").data
        basis = chebyshev_basis(lt, x, 2)
        expected = np.maximum(basis[2].data @ block.theta_s.data, 0.0)
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_input_shortcut_mode(self):
        rng = np.random.default_rng(1)
        block = ResidualBlock(3, 4, 2, rng, np.float64, "input")
        for conv in block.convs:
            for th in conv.params.thetas:
                th.data[:] = 0.0
            conv.bn.beta.data[:] = 0.0
        g = random_connected_graph(6, rng, d=3)
        lt = scale_laplacian(normalized_laplacian(g))
        out = block(lt, Tensor(g.node_features), "eval").data
        expected = np.maximum(g.node_features @ block.theta_s.data, 0.0)
        np.testing.assert_allclose(out, expected, atol=1e-12)


class TestInception:
    def test_tributary_receptive_fields(self):
        assert INCEPTION_TRIBUTARY_FIELDS == (3, 6, 9, 6)
        block = InceptionBlock(3, 4, np.random.default_rng(0), np.float64)
        fields = [path[0].params.receptive_field for path in block.tributaries]
        assert fields == [3, 6, 9, 6]
        assert [len(p) for p in block.tributaries] == [2, 2, 2, 1]

    def test_block_output_width_is_four_tributaries(self):
        block = InceptionBlock(7, 32, np.random.default_rng(0), np.float64)
        assert block.out_width == 128
        g = random_connected_graph(20, np.random.default_rng(1), d=7)
        lt = scale_laplacian(normalized_laplacian(g))
        out = block(lt, Tensor(g.node_features), "eval")
        assert out.shape == (20, 128)

    def test_trailing_conv_after_each_block(self):
        spec = ModelSpec(architecture="inception", num_classes=2, feature_dim=7,
                         depth=6)
        model = build_inception(spec)
        kinds = [type(b).__name__ for b in model.blocks]
        assert kinds == ["InceptionBlock", "ConvBN", "InceptionBlock", "ConvBN"]

    def test_block_locality_bound(self):
        # two stacked convs with K=9 reach at most 18 hops
        n = 25
        g = path_graph(n, d=1)
        lt = scale_laplacian(normalized_laplacian(g))
        block = InceptionBlock(1, 2, np.random.default_rng(0), np.float64)
        base = block(lt, Tensor(g.node_features), "eval").data
        x2 = g.node_features.copy()
        x2[n - 1, 0] += 5.0  # distance 24 > 18 from vertex 0
        out = block(lt, Tensor(x2), "eval").data
        np.testing.assert_allclose(out[0], base[0], atol=1e-12)


class TestDenseNet:
    def test_layer_input_widths_grow(self):
        spec = ModelSpec(architecture="densenet", num_classes=2, feature_dim=7,
                         depth=6)
        model = build_densenet(spec)
        d_ins = [b.params.d_in for b in model.blocks]
        assert d_ins == [7, 7 + 32, 7 + 32 + 32, 7 + 32 + 32 + 32,
                         7 + 32 * 3 + 64, 7 + 32 * 3 + 64 * 2]

    def test_layer0_consumes_raw_input_only(self):
        spec = small_spec("densenet")
        model = build_densenet(spec)
        assert model.blocks[0].params.d_in == spec.feature_dim


class TestForwardInvariants:
    @pytest.mark.parametrize("arch", ["plain", "resnet", "inception", "densenet"])
    def test_single_node_graph_no_nan(self, arch):
        model = build_model(small_spec(arch)).eval()
        g = build_graph(1, [], np.ones((1, 3)), 0)
        probs = model.forward(make_batch([g]))
        assert np.isfinite(probs.data).all()
        np.testing.assert_allclose(probs.data.sum(), 1.0, atol=1e-12)

    @pytest.mark.parametrize("arch", ["plain", "resnet", "inception", "densenet"])
    def test_eval_batching_invariance(self, arch):
        rng = np.random.default_rng(4)
        model = build_model(small_spec(arch)).eval()
        g1 = random_connected_graph(6, rng, d=3)
        g2 = random_connected_graph(9, rng, d=3)
        both = model.forward(make_batch([g1, g2])).data
        solo = np.vstack([model.forward(make_batch([g1])).data,
                          model.forward(make_batch([g2])).data])
        np.testing.assert_allclose(both, solo, atol=1e-6)

    @pytest.mark.parametrize("arch", ["plain", "resnet", "inception", "densenet"])
    def test_permutation_invariance(self, arch):
        rng = np.random.default_rng(5)
        model = build_model(small_spec(arch)).eval()
        g = random_connected_graph(10, rng, d=3)
        perm = rng.permutation(10)
        a = model.forward(make_batch([g])).data
        b = model.forward(make_batch([permute_graph(g, perm)])).data
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_no_dead_parameters(self):
        rng = np.random.default_rng(6)
        for arch in ("plain", "resnet", "inception", "densenet"):
            model = build_model(small_spec(arch, dropout_rate=0.0)).train()
            graphs = [random_connected_graph(7, rng, d=3,
                                             label=int(rng.integers(0, 2)))
                      for _ in range(4)]
            batch = make_batch(graphs)
            loss = cross_entropy(model.forward(batch), batch.labels)
            loss.backward()
            params = model.parameters()
            nonzero = sum(np.any(p.grad != 0) for p in params)
            assert nonzero / len(params) >= 0.99, arch


class TestCheckpoints:
    @pytest.mark.parametrize("arch", ["plain", "resnet", "inception", "densenet"])
    def test_round_trip_bit_exact(self, arch, tmp_path):
        rng = np.random.default_rng(7)
        model = build_model(small_spec(arch))
        # dirty the BN running stats so they are exercised by the round trip
        model.train()
        g = random_connected_graph(8, rng, d=3)
        model.forward(make_batch([g]))
        model.eval()
        path = tmp_path / "model.npz"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert loaded.spec == model.spec
        for name, p in model.named_parameters().items():
            np.testing.assert_array_equal(loaded.named_parameters()[name].data, p.data)
        out_a = model.forward(make_batch([g])).data
        out_b = loaded.forward(make_batch([g])).data
        np.testing.assert_array_equal(out_a, out_b)
