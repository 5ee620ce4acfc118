"""1-D convolutional backbone and sleep-stage classifier.

Backbone: stem conv, residual blocks (conv-BN-ReLU-dropout-conv-BN, skip,
ReLU after the sum), a 1x1 projection conv, global average pooling. The
`paper18` preset counts exactly 18 convolutions (1 stem + 8 blocks x 2 + 1
projection); `tiny` is the desk-scale default. The classifier is three
ReLU dense layers (384/192/96) plus a linear output layer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, affine_channels, batch_norm_train, conv1d
from .errors import ConfigError, ShapeMismatch

_BN_EPS = 1e-5
_BN_MOMENTUM = 0.9


@dataclass(frozen=True)
class BlockSpec:
    channels: int
    stride: int = 1


@dataclass(frozen=True)
class ModelConfig:
    preset: str = "tiny"
    conv_kernel: int = 32
    stem_channels: int = 8
    blocks: tuple[BlockSpec, ...] = (BlockSpec(8, 1), BlockSpec(16, 2))
    embedding_dim: int = 32
    dropout_rate: float = 0.2
    classifier_hidden: tuple[int, ...] = (384, 192, 96)
    num_classes: int = 5

    @property
    def num_convolutions(self) -> int:
        return 1 + 2 * len(self.blocks) + 1

    def to_text(self) -> str:
        blocks = ",".join(f"{b.channels}:{b.stride}" for b in self.blocks)
        hidden = ",".join(str(h) for h in self.classifier_hidden)
        lines = [
            f"preset={self.preset}",
            f"conv_kernel={self.conv_kernel}",
            f"stem_channels={self.stem_channels}",
            f"blocks={blocks}",
            f"embedding_dim={self.embedding_dim}",
            f"dropout_rate={self.dropout_rate!r}",
            f"classifier_hidden={hidden}",
            f"num_classes={self.num_classes}",
        ]
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "ModelConfig":
        kv = dict(line.split("=", 1) for line in text.strip().splitlines())
        blocks = tuple(
            BlockSpec(int(c), int(s))
            for c, s in (item.split(":") for item in kv["blocks"].split(","))
        )
        return cls(
            preset=kv["preset"],
            conv_kernel=int(kv["conv_kernel"]),
            stem_channels=int(kv["stem_channels"]),
            blocks=blocks,
            embedding_dim=int(kv["embedding_dim"]),
            dropout_rate=float(kv["dropout_rate"]),
            classifier_hidden=tuple(int(h) for h in kv["classifier_hidden"].split(",")),
            num_classes=int(kv["num_classes"]),
        )


def preset_config(name: str, **overrides) -> ModelConfig:
    if name == "tiny":
        base = ModelConfig()
    elif name == "paper18":
        # Channels double every second block, capped at 256; stride 2 every
        # other block. 18 convolutions in total.
        channels = [32, 32, 64, 64, 128, 128, 256, 256]
        blocks = tuple(
            BlockSpec(c, 2 if i % 2 == 1 else 1) for i, c in enumerate(channels)
        )
        base = ModelConfig(
            preset="paper18",
            stem_channels=32,
            blocks=blocks,
            embedding_dim=256,
        )
    else:
        raise ConfigError(f"unknown model preset {name!r}")
    if overrides:
        base = dataclass_replace(base, **overrides)
    return base


def dataclass_replace(cfg: ModelConfig, **overrides) -> ModelConfig:
    import dataclasses

    return dataclasses.replace(cfg, **overrides)


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    limit = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Model:
    """Holds trainable parameters plus batch-norm running statistics."""

    def __init__(self, config: ModelConfig, seed: int = 0, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.params: dict[str, Tensor] = {}
        self.state: dict[str, np.ndarray] = {}
        self._init(np.random.default_rng(seed))

    # --- construction ---

    def _add_conv(self, name: str, c_in: int, c_out: int, k: int, rng) -> None:
        self.params[f"{name}.w"] = Tensor(
            _uniform(rng, (c_out, c_in, k), c_in * k, self.dtype), requires_grad=True
        )
        self.params[f"{name}.b"] = Tensor(np.zeros(c_out, self.dtype), requires_grad=True)

    def _add_bn(self, name: str, channels: int) -> None:
        self.params[f"{name}.gamma"] = Tensor(np.ones(channels, self.dtype), requires_grad=True)
        self.params[f"{name}.beta"] = Tensor(np.zeros(channels, self.dtype), requires_grad=True)
        self.state[f"{name}.running_mean"] = np.zeros(channels, self.dtype)
        self.state[f"{name}.running_var"] = np.ones(channels, self.dtype)

    def _add_dense(self, name: str, n_in: int, n_out: int, rng) -> None:
        self.params[f"{name}.w"] = Tensor(
            _uniform(rng, (n_in, n_out), n_in, self.dtype), requires_grad=True
        )
        self.params[f"{name}.b"] = Tensor(np.zeros(n_out, self.dtype), requires_grad=True)

    def _init(self, rng: np.random.Generator) -> None:
        cfg = self.config
        k = cfg.conv_kernel
        self._add_conv("stem", 1, cfg.stem_channels, k, rng)
        c_in = cfg.stem_channels
        for i, block in enumerate(cfg.blocks):
            self._add_conv(f"block{i}.conv1", c_in, block.channels, k, rng)
            self._add_bn(f"block{i}.bn1", block.channels)
            self._add_conv(f"block{i}.conv2", block.channels, block.channels, k, rng)
            self._add_bn(f"block{i}.bn2", block.channels)
            c_in = block.channels
        self._add_conv("proj", c_in, cfg.embedding_dim, 1, rng)
        n_in = cfg.embedding_dim
        for i, hidden in enumerate(cfg.classifier_hidden):
            self._add_dense(f"clf.fc{i}", n_in, hidden, rng)
            n_in = hidden
        self._add_dense("clf.out", n_in, cfg.num_classes, rng)

    # --- layer helpers ---

    def _batch_norm(self, x: Tensor, name: str, mode: str) -> Tensor:
        gamma = self.params[f"{name}.gamma"]
        beta = self.params[f"{name}.beta"]
        if mode == "train":
            out, mean, var = batch_norm_train(x, gamma, beta, _BN_EPS)
            rm, rv = self.state[f"{name}.running_mean"], self.state[f"{name}.running_var"]
            self.state[f"{name}.running_mean"] = (
                _BN_MOMENTUM * rm + (1 - _BN_MOMENTUM) * mean
            ).astype(self.dtype)
            self.state[f"{name}.running_var"] = (
                _BN_MOMENTUM * rv + (1 - _BN_MOMENTUM) * var
            ).astype(self.dtype)
            return out
        rm = self.state[f"{name}.running_mean"]
        rv = self.state[f"{name}.running_var"]
        scale = gamma.data / np.sqrt(rv + _BN_EPS)
        return affine_channels(x, scale, beta.data - rm * scale)

    def _dropout(self, x: Tensor, mode: str, rng: np.random.Generator | None) -> Tensor:
        rate = self.config.dropout_rate
        if mode != "train" or rate == 0.0:
            return x
        if rng is None:
            raise ConfigError("train-mode dropout needs a random generator")
        mask = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
        return x * mask

    def _shortcut(self, x: Tensor, c_out: int, stride: int) -> Tensor:
        c_in = x.shape[1]
        if c_in == c_out and stride == 1:
            return x
        data = x.data[:, :, ::stride]
        out = np.zeros((data.shape[0], c_out, data.shape[2]), dtype=x.dtype)
        out[:, :c_in, :] = data

        def grad_fn(g):
            gx = np.zeros_like(x.data)
            gx[:, :, ::stride] = g[:, :c_in, :]
            return gx

        return Tensor._result(out, [(x, grad_fn)])

    # --- forward passes ---

    def forward_backbone(self, batch, mode: str = "eval",
                         rng: np.random.Generator | None = None) -> Tensor:
        """Map (batch, length) signals to (batch, embedding_dim) features."""
        if mode not in ("train", "eval"):
            raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
        if not isinstance(batch, Tensor):
            batch = Tensor(np.asarray(batch, dtype=self.dtype))
        if batch.data.ndim == 2:
            batch = batch.reshape(batch.shape[0], 1, batch.shape[1])
        if batch.data.ndim != 3 or batch.shape[1] != 1:
            raise ShapeMismatch(f"backbone expects (batch, length), got {batch.shape}")
        x = conv1d(batch, self.params["stem.w"], self.params["stem.b"])
        for i, block in enumerate(self.config.blocks):
            skip = self._shortcut(x, block.channels, block.stride)
            h = conv1d(x, self.params[f"block{i}.conv1.w"],
                       self.params[f"block{i}.conv1.b"], stride=block.stride)
            h = self._batch_norm(h, f"block{i}.bn1", mode).relu()
            h = self._dropout(h, mode, rng)
            h = conv1d(h, self.params[f"block{i}.conv2.w"], self.params[f"block{i}.conv2.b"])
            h = self._batch_norm(h, f"block{i}.bn2", mode)
            x = (h + skip).relu()
        x = conv1d(x, self.params["proj.w"], self.params["proj.b"])
        return x.mean(axis=2)

    def forward_classifier(self, embeddings, mode: str = "eval",
                           rng: np.random.Generator | None = None) -> Tensor:
        if not isinstance(embeddings, Tensor):
            embeddings = Tensor(np.asarray(embeddings, dtype=self.dtype))
        x = embeddings
        for i in range(len(self.config.classifier_hidden)):
            x = (x @ self.params[f"clf.fc{i}.w"] + self.params[f"clf.fc{i}.b"]).relu()
        return x @ self.params["clf.out.w"] + self.params["clf.out.b"]

    # --- parameter access ---

    def backbone_param_names(self) -> list[str]:
        return [n for n in self.params if not n.startswith("clf.")]

    def trainable(self, frozen_backbone: bool = False) -> dict[str, Tensor]:
        if frozen_backbone:
            return {n: p for n, p in self.params.items() if n.startswith("clf.")}
        return dict(self.params)

    def zero_grads(self) -> None:
        for p in self.params.values():
            p.grad = None


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> tuple[Tensor, np.ndarray]:
    """Mean cross-entropy over the batch, with log-sum-exp stabilization.

    Returns (loss tensor, softmax probabilities as ndarray).
    """
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeMismatch(f"labels shape {labels.shape} does not match batch {n}")
    shifted = logits - logits.data.max(axis=1, keepdims=True)
    exp = shifted.exp()
    total = exp.sum(axis=1, keepdims=True)
    log_z = total.log()
    onehot = np.zeros((n, c), dtype=logits.dtype)
    onehot[np.arange(n), labels] = 1.0
    nll = log_z.reshape(n) - (shifted * onehot).sum(axis=1)
    return nll.mean(), exp.data / total.data
