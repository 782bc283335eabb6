"""The four graph CNN architectures: plain 6-layer, residual, inception
and dense, each ending in mean readout, dropout and a softmax classifier.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .conv import ChebConvParams, chebyshev_basis, cheb_conv, conv_from_basis, init_cheb_params
from .data import GraphBatch
from .errors import ConfigError, ShapeError
from .tensor import BatchNorm, Tensor

PLAIN = "plain"
RESNET = "resnet"
INCEPTION = "inception"
DENSENET = "densenet"

ARCHITECTURES = (PLAIN, RESNET, INCEPTION, DENSENET)

VALID_DEPTHS = {
    PLAIN: (6,),
    RESNET: (3, 6, 9, 12),
    INCEPTION: (3, 6, 9, 12),
    DENSENET: (4, 6, 8, 10),
}

INCEPTION_TRIBUTARY_FIELDS = (3, 6, 9, 6)  # two convs on the first three, one on the last


@dataclass(frozen=True)
class ModelSpec:
    """Declarative architecture description.

    ``channel_plan`` overrides the default widths: per layer for
    plain/densenet, per block for resnet/inception.  ``shortcut_mode``
    selects what the residual projection multiplies: the order-K basis
    element ("basis", the equation-literal reading) or the raw block input
    ("input").
    """

    architecture: str
    num_classes: int
    feature_dim: int
    depth: int = 6
    receptive_field: int = 6
    channel_plan: tuple | None = None
    dropout_rate: float = 0.5
    seed: int = 0
    readout: str = "mean"
    shortcut_mode: str = "basis"
    inception_full_width: bool = True
    precision: str = "f64"

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}")
        if self.depth not in VALID_DEPTHS[self.architecture]:
            raise ConfigError(
                f"{self.architecture} supports depths {VALID_DEPTHS[self.architecture]}, "
                f"got {self.depth}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0,1), got {self.dropout_rate}")
        if self.num_classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.feature_dim < 1:
            raise ConfigError("feature_dim must be >= 1")
        if self.receptive_field < 0:
            raise ConfigError("receptive_field must be >= 0")
        if self.readout not in ("mean", "sum"):
            raise ConfigError(f"readout must be mean or sum, got {self.readout!r}")
        if self.shortcut_mode not in ("basis", "input"):
            raise ConfigError(f"shortcut_mode must be basis or input")
        if self.precision not in ("f32", "f64"):
            raise ConfigError("precision must be f32 or f64")
        if self.channel_plan is not None:
            plan = tuple(int(c) for c in self.channel_plan)
            if any(c < 1 for c in plan):
                raise ConfigError("channel widths must be positive")
            expected = self._plan_length()
            if len(plan) != expected:
                raise ConfigError(
                    f"channel_plan needs {expected} entries for "
                    f"{self.architecture} depth {self.depth}, got {len(plan)}")
            object.__setattr__(self, "channel_plan", plan)

    def _plan_length(self):
        if self.architecture in (PLAIN, DENSENET):
            return self.depth
        return self.depth // 3  # one width per block

    @property
    def dtype(self):
        return np.float64 if self.precision == "f64" else np.float32

    def widths(self):
        """Resolved per-layer (plain/densenet) or per-block widths."""
        if self.channel_plan is not None:
            return self.channel_plan
        if self.architecture in (PLAIN, DENSENET):
            half = self.depth // 2
            return tuple([32] * half + [64] * (self.depth - half))
        nblocks = self.depth // 3
        return tuple([32] + [64] * (nblocks - 1))


class ConvBN:
    """cheb_conv -> batch norm -> optional ReLU."""

    def __init__(self, d_in, d_out, k, rng, dtype, relu=True):
        # no conv bias: the following batch norm's shift subsumes it, and a
        # bias before train-mode BN would be a dead parameter
        self.params = init_cheb_params(d_in, d_out, k, rng, dtype=dtype, bias=False)
        self.bn = BatchNorm(d_out, dtype=dtype)
        self.relu = relu

    def __call__(self, lt, x, mode):
        y = self.bn(cheb_conv(lt, x, self.params), mode)
        return T.relu(y) if self.relu else y

    def apply_basis(self, basis, mode):
        y = self.bn(conv_from_basis(basis, self.params), mode)
        return T.relu(y) if self.relu else y

    def tensors(self):
        for i, th in enumerate(self.params.thetas):
            yield f"theta{i}", th
        if self.params.bias is not None:
            yield "bias", self.params.bias
        yield "bn_gamma", self.bn.gamma
        yield "bn_beta", self.bn.beta


class ResidualBlock:
    """Three ConvBN layers on the main path plus a projected shortcut;
    ReLU after the addition."""

    def __init__(self, d_in, d_out, k, rng, dtype, shortcut_mode):
        self.k = k
        self.shortcut_mode = shortcut_mode
        self.convs = [
            ConvBN(d_in, d_out, k, rng, dtype, relu=True),
            ConvBN(d_out, d_out, k, rng, dtype, relu=True),
            ConvBN(d_out, d_out, k, rng, dtype, relu=False),
        ]
        bound = np.sqrt(6.0 / (d_in + d_out))
        self.theta_s = Tensor(rng.uniform(-bound, bound, (d_in, d_out)).astype(dtype),
                              requires_grad=True, name="theta_s")

    def __call__(self, lt, x, mode):
        basis = chebyshev_basis(lt, x, self.k)
        y = self.convs[0].apply_basis(basis, mode)
        y = self.convs[1](lt, y, mode)
        y = self.convs[2](lt, y, mode)
        source = basis[self.k] if self.shortcut_mode == "basis" else x
        shortcut = T.matmul(source, self.theta_s)
        return T.relu(T.add(y, shortcut))

    def tensors(self):
        for i, conv in enumerate(self.convs):
            for name, t in conv.tensors():
                yield f"conv{i}.{name}", t
        yield "theta_s", self.theta_s


class InceptionBlock:
    """Four parallel tributaries (receptive fields 3/6/9 with two convs,
    6 with one), outputs column-concatenated."""

    def __init__(self, d_in, width, rng, dtype, full_width=True):
        w = width if full_width else max(1, width // 4)
        k1, k2, k3, k4 = INCEPTION_TRIBUTARY_FIELDS
        self.tributaries = [
            [ConvBN(d_in, w, k1, rng, dtype), ConvBN(w, w, k1, rng, dtype)],
            [ConvBN(d_in, w, k2, rng, dtype), ConvBN(w, w, k2, rng, dtype)],
            [ConvBN(d_in, w, k3, rng, dtype), ConvBN(w, w, k3, rng, dtype)],
            [ConvBN(d_in, w, k4, rng, dtype)],
        ]
        self.out_width = 4 * w

    def __call__(self, lt, x, mode):
        outs = []
        for path in self.tributaries:
            y = x
            for conv in path:
                y = conv(lt, y, mode)
            outs.append(y)
        return T.concat_columns(outs)

    def tensors(self):
        for ti, path in enumerate(self.tributaries):
            for ci, conv in enumerate(path):
                for name, t in conv.tensors():
                    yield f"trib{ti}.conv{ci}.{name}", t


class Model:
    """Instantiated differentiable network for one ModelSpec."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.mode = T.EVAL
        rng = np.random.default_rng(spec.seed)
        dtype = spec.dtype
        k = spec.receptive_field
        widths = spec.widths()
        self.blocks = []
        d = spec.feature_dim

        if spec.architecture == PLAIN:
            for w in widths:
                self.blocks.append(ConvBN(d, w, k, rng, dtype))
                d = w
        elif spec.architecture == RESNET:
            for w in widths:
                self.blocks.append(ResidualBlock(d, w, k, rng, dtype, spec.shortcut_mode))
                d = w
        elif spec.architecture == INCEPTION:
            # every inception block is followed by one plain convolution
            for w in widths:
                blk = InceptionBlock(d, w, rng, dtype, spec.inception_full_width)
                self.blocks.append(blk)
                self.blocks.append(ConvBN(blk.out_width, w, k, rng, dtype))
                d = w
        else:  # densenet: each layer consumes input || all previous outputs
            self.dense_widths = widths
            for w in widths:
                self.blocks.append(ConvBN(d, w, k, rng, dtype))
                d += w
            d = widths[-1]

        self.embedding_dim = d
        bound = np.sqrt(6.0 / (d + spec.num_classes))
        self.fc_w = Tensor(rng.uniform(-bound, bound, (d, spec.num_classes)).astype(dtype),
                           requires_grad=True, name="fc.w")
        self.fc_b = Tensor(np.zeros(spec.num_classes, dtype=dtype),
                           requires_grad=True, name="fc.b")
        self._dropout_rng = np.random.default_rng(spec.seed + 1)

    def train(self):
        self.mode = T.TRAIN
        return self

    def eval(self):
        self.mode = T.EVAL
        return self

    def named_parameters(self):
        out = {}
        for bi, block in enumerate(self.blocks):
            for name, t in block.tensors():
                out[f"block{bi}.{name}"] = t
        out["fc.w"] = self.fc_w
        out["fc.b"] = self.fc_b
        return out

    def parameters(self):
        return list(self.named_parameters().values())

    def num_parameters(self):
        return sum(p.data.size for p in self.parameters())

    def _batch_norms(self):
        for bi, block in enumerate(self.blocks):
            if isinstance(block, ConvBN):
                yield f"block{bi}", block.bn
            elif isinstance(block, ResidualBlock):
                for ci, conv in enumerate(block.convs):
                    yield f"block{bi}.conv{ci}", conv.bn
            elif isinstance(block, InceptionBlock):
                for ti, path in enumerate(block.tributaries):
                    for ci, conv in enumerate(path):
                        yield f"block{bi}.trib{ti}.conv{ci}", conv.bn

    def node_embeddings(self, batch: GraphBatch) -> Tensor:
        x = Tensor(batch.features.astype(self.spec.dtype))
        if x.shape[1] != self.spec.feature_dim:
            raise ShapeError(
                f"batch feature dim {x.shape[1]} != model feature dim "
                f"{self.spec.feature_dim}")
        lt = _LtView(batch.laplacian)
        if self.spec.architecture == DENSENET:
            outs = []
            for block in self.blocks:
                inp = x if not outs else T.concat_columns([x] + outs)
                outs.append(block(lt, inp, self.mode))
            return outs[-1]
        y = x
        for block in self.blocks:
            y = block(lt, y, self.mode)
        return y

    def forward(self, batch: GraphBatch, rng=None) -> Tensor:
        """Class probability rows, one per graph in the batch."""
        h = self.node_embeddings(batch)
        pooled = readout(h, batch.segment_ids, batch.num_graphs,
                         kind=self.spec.readout)
        pooled = T.dropout(pooled, self.spec.dropout_rate, self.mode,
                           rng or self._dropout_rng)
        logits = T.add(T.matmul(pooled, self.fc_w), self.fc_b)
        return T.softmax_rows(logits)


class _LtView:
    """Adapter so blocks can treat a raw CSR operator like a ScaledLaplacian."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        self.matrix = matrix


def readout(node_embeddings: Tensor, segment_ids, num_graphs, kind="mean") -> Tensor:
    pooled = T.segment_mean(node_embeddings, segment_ids, num_graphs)
    if kind == "sum":
        counts = np.bincount(np.asarray(segment_ids), minlength=num_graphs)
        pooled = T.matmul(Tensor(np.diag(counts.astype(pooled.dtype))), pooled)
    return pooled


def build_model(spec: ModelSpec) -> Model:
    return Model(spec)


def build_plain(spec):
    if spec.architecture != PLAIN:
        raise ConfigError("build_plain requires architecture=plain")
    return Model(spec)


def build_resnet(spec):
    if spec.architecture != RESNET:
        raise ConfigError("build_resnet requires architecture=resnet")
    return Model(spec)


def build_inception(spec):
    if spec.architecture != INCEPTION:
        raise ConfigError("build_inception requires architecture=inception")
    return Model(spec)


def build_densenet(spec):
    if spec.architecture != DENSENET:
        raise ConfigError("build_densenet requires architecture=densenet")
    return Model(spec)


def model_forward(model: Model, batch: GraphBatch, rng=None) -> Tensor:
    return model.forward(batch, rng=rng)


def save_checkpoint(model: Model, path):
    """Self-describing npz: spec JSON + every parameter + BN running stats.
    Round-trips bit-exact in the stored precision."""
    arrays = {f"param/{k}": v.data for k, v in model.named_parameters().items()}
    for prefix, bn in model._batch_norms():
        arrays[f"bnstat/{prefix}.mean"] = bn.running_mean
        arrays[f"bnstat/{prefix}.var"] = bn.running_var
    spec_json = json.dumps(dataclasses.asdict(model.spec))
    np.savez(path, __spec__=np.frombuffer(spec_json.encode(), dtype=np.uint8),
             **arrays)


def load_checkpoint(path) -> Model:
    with np.load(path) as z:
        raw = json.loads(bytes(z["__spec__"]).decode())
        if raw.get("channel_plan") is not None:
            raw["channel_plan"] = tuple(raw["channel_plan"])
        spec = ModelSpec(**raw)
        model = Model(spec)
        params = model.named_parameters()
        for key in z.files:
            if key.startswith("param/"):
                name = key[len("param/"):]
                params[name].data = z[key].copy()
        stats = {prefix: bn for prefix, bn in model._batch_norms()}
        for key in z.files:
            if key.startswith("bnstat/"):
                name = key[len("bnstat/"):]
                prefix, stat = name.rsplit(".", 1)
                if stat == "mean":
                    stats[prefix].running_mean = z[key].copy()
                else:
                    stats[prefix].running_var = z[key].copy()
    return model
