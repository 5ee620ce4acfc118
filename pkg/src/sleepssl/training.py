"""Training and evaluation protocols: contrastive pretraining, frozen-backbone
linear evaluation, fine-tuning, and the limited-labeled-sample study."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .contrastive import batch_loss
from .epochs import EpochDataset
from .errors import EmptyDataset, InsufficientClassSamples
from .hypnogram import StageLabel
from .metrics import MetricsReport, compute_metrics
from .model import Model, ModelConfig, softmax_cross_entropy
from .optim import lr_schedule, sgd_momentum_step
from .transforms import RngStream, TransformSpec, apply_transform


@dataclass(frozen=True)
class TrainConfig:
    temperature: float = 0.5
    ssl_batch: int = 512
    cls_batch: int = 256
    ssl_epochs: int = 70
    cls_epochs: int = 70
    ssl_lr: float = 0.1
    cls_lr: float = 0.01
    warmup_epochs: int = 5
    momentum: float = 0.9
    l2: float = 1e-4
    seed: int = 0
    t1: TransformSpec = field(default_factory=lambda: TransformSpec("crop_resize"))
    t2: TransformSpec = field(default_factory=lambda: TransformSpec("permutation"))
    loss_mode: str = "paper"


@dataclass(frozen=True)
class SplitSpec:
    by: str = "record"  # "record" or "subject"
    test_fraction: float = 0.2
    k_per_class: int | None = None
    repetitions: int = 100


def split_dataset(dataset: EpochDataset, split: SplitSpec, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint (train_indices, test_indices) for a dataset."""
    n = len(dataset)
    if n < 2:
        raise EmptyDataset("need at least 2 epochs to split")
    rng = np.random.default_rng([seed, 0x5B11])
    if split.by == "subject":
        subjects = sorted({ep.source_id.split(":", 1)[0] for ep in dataset.epochs})
        n_test = max(1, int(round(len(subjects) * split.test_fraction)))
        test_subjects = set(subjects[len(subjects) - n_test :])
        mask = np.array(
            [ep.source_id.split(":", 1)[0] in test_subjects for ep in dataset.epochs]
        )
        return np.flatnonzero(~mask), np.flatnonzero(mask)
    order = rng.permutation(n)
    n_test = max(1, int(round(n * split.test_fraction)))
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def _batches(indices: np.ndarray, batch_size: int, min_size: int = 2):
    for start in range(0, indices.size, batch_size):
        chunk = indices[start : start + batch_size]
        if chunk.size >= min_size:
            yield chunk


def pretrain(cfg: TrainConfig, unlabeled: EpochDataset, model_config: ModelConfig,
             log=None) -> tuple[Model, list[float]]:
    """Contrastive pretraining; labels are ignored. Returns (model, per-epoch losses)."""
    if len(unlabeled) == 0:
        raise EmptyDataset("pretraining needs a nonempty dataset")
    model = Model(model_config, seed=cfg.seed)
    signals = unlabeled.signal_matrix().astype(np.float64)
    stream = RngStream(cfg.seed)
    velocity: dict[str, np.ndarray] = {}
    epoch_losses: list[float] = []
    for epoch in range(1, cfg.ssl_epochs + 1):
        lr = lr_schedule(epoch, cfg.ssl_epochs, cfg.ssl_lr, cfg.warmup_epochs)
        order = stream.generator(epoch, 0xF00D).permutation(len(unlabeled))
        losses = []
        for b, batch in enumerate(_batches(order, cfg.ssl_batch)):
            views = np.empty((2 * batch.size, signals.shape[1]), dtype=np.float32)
            for pos, idx in enumerate(batch):
                views[pos] = apply_transform(
                    signals[idx], cfg.t1, stream.generator(epoch, int(idx), 0)
                )
                views[pos + batch.size] = apply_transform(
                    signals[idx], cfg.t2, stream.generator(epoch, int(idx), 1)
                )
            emb = model.forward_backbone(views, "train", rng=stream.generator(epoch, b, 2))
            loss, _ = batch_loss(emb, cfg.temperature, cfg.loss_mode)
            model.zero_grads()
            loss.backward()
            sgd_momentum_step(model.params, velocity, lr, cfg.momentum, cfg.l2)
            losses.append(loss.item())
        mean_loss = float(np.mean(losses))
        epoch_losses.append(mean_loss)
        if log is not None:
            log(f"epoch={epoch} phase=ssl loss={mean_loss:.6f} lr={lr:.6f}")
    return model, epoch_losses


def embed_dataset(model: Model, dataset: EpochDataset, batch_size: int = 256) -> np.ndarray:
    """Eval-mode embeddings for every epoch, shape (n, embedding_dim)."""
    signals = dataset.signal_matrix()
    chunks = [
        model.forward_backbone(signals[s : s + batch_size], "eval").data
        for s in range(0, signals.shape[0], batch_size)
    ]
    return np.concatenate(chunks, axis=0)


def _train_classifier(model: Model, embeddings: np.ndarray, labels: np.ndarray,
                      cfg: TrainConfig, log=None) -> None:
    """Fit only the classifier head on fixed embeddings."""
    stream = RngStream(cfg.seed ^ 0xC15)
    velocity: dict[str, np.ndarray] = {}
    trainable = model.trainable(frozen_backbone=True)
    for epoch in range(1, cfg.cls_epochs + 1):
        lr = lr_schedule(epoch, cfg.cls_epochs, cfg.cls_lr, cfg.warmup_epochs)
        order = stream.generator(epoch).permutation(labels.size)
        losses = []
        for batch in _batches(order, cfg.cls_batch, min_size=1):
            logits = model.forward_classifier(
                Tensor(embeddings[batch].astype(np.float32)), "train"
            )
            loss, _ = softmax_cross_entropy(logits, labels[batch])
            model.zero_grads()
            loss.backward()
            sgd_momentum_step(trainable, velocity, lr, cfg.momentum, cfg.l2)
            losses.append(loss.item())
        if log is not None:
            log(f"epoch={epoch} phase=cls loss={np.mean(losses):.6f} lr={lr:.6f}")


def _train_supervised(model: Model, dataset: EpochDataset, indices: np.ndarray,
                      cfg: TrainConfig, log=None) -> None:
    """Fit backbone and classifier jointly on the labeled epochs at `indices`."""
    signals = dataset.signal_matrix()
    labels = dataset.labels().astype(np.int64)
    stream = RngStream(cfg.seed ^ 0xF17E)
    velocity: dict[str, np.ndarray] = {}
    for epoch in range(1, cfg.cls_epochs + 1):
        lr = lr_schedule(epoch, cfg.cls_epochs, cfg.cls_lr, cfg.warmup_epochs)
        order = indices[stream.generator(epoch).permutation(indices.size)]
        losses = []
        for b, batch in enumerate(_batches(order, cfg.cls_batch, min_size=1)):
            emb = model.forward_backbone(
                signals[batch], "train", rng=stream.generator(epoch, b)
            )
            logits = model.forward_classifier(emb, "train")
            loss, _ = softmax_cross_entropy(logits, labels[batch])
            model.zero_grads()
            loss.backward()
            sgd_momentum_step(model.params, velocity, lr, cfg.momentum, cfg.l2)
            losses.append(loss.item())
        if log is not None:
            log(f"epoch={epoch} phase=cls loss={np.mean(losses):.6f} lr={lr:.6f}")


def _evaluate(model: Model, dataset: EpochDataset, indices: np.ndarray) -> MetricsReport:
    embeddings = embed_dataset(model, dataset.__class__(
        [dataset.epochs[i] for i in indices]
    ))
    logits = model.forward_classifier(embeddings.astype(np.float32), "eval").data
    predictions = logits.argmax(axis=1)
    labels = dataset.labels()[indices].astype(np.int64)
    return compute_metrics(predictions, labels)


def linear_eval(model: Model, labeled: EpochDataset, split: SplitSpec,
                cfg: TrainConfig, log=None) -> MetricsReport:
    """Frozen-backbone evaluation: the backbone is never updated."""
    train_idx, test_idx = split_dataset(labeled, split, cfg.seed)
    embeddings = embed_dataset(model, labeled)
    labels = labeled.labels().astype(np.int64)
    _train_classifier(model, embeddings[train_idx], labels[train_idx], cfg, log)
    logits = model.forward_classifier(embeddings[test_idx].astype(np.float32), "eval").data
    return compute_metrics(logits.argmax(axis=1), labels[test_idx])


def finetune(model: Model, labeled: EpochDataset, split: SplitSpec,
             cfg: TrainConfig, log=None) -> MetricsReport:
    """Supervised training of all parameters starting from `model`'s weights."""
    train_idx, test_idx = split_dataset(labeled, split, cfg.seed)
    _train_supervised(model, labeled, train_idx, cfg, log)
    return _evaluate(model, labeled, test_idx)


def clone_model(model: Model) -> Model:
    out = Model(model.config, seed=0, dtype=model.dtype)
    out.params = {n: Tensor(p.data.copy(), requires_grad=True) for n, p in model.params.items()}
    out.state = {n: s.copy() for n, s in model.state.items()}
    return out


@dataclass(frozen=True)
class ArmStats:
    accuracies: tuple[float, ...]
    macro_f1s: tuple[float, ...]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies, ddof=1)) if len(self.accuracies) > 1 else 0.0

    @property
    def mean_macro_f1(self) -> float:
        return float(np.mean(self.macro_f1s))

    @property
    def std_macro_f1(self) -> float:
        return float(np.std(self.macro_f1s, ddof=1)) if len(self.macro_f1s) > 1 else 0.0


def _draw_limited(labels: np.ndarray, pool: np.ndarray, k: int,
                  rng: np.random.Generator) -> np.ndarray:
    chosen = []
    for c in sorted(set(labels[pool].tolist())):
        members = pool[labels[pool] == c]
        if members.size < k:
            raise InsufficientClassSamples(
                f"class {c} has {members.size} training samples, need {k}"
            )
        chosen.append(rng.choice(members, size=k, replace=False))
    return np.concatenate(chosen)


def limited_sample_experiment(
    pretrained: Model,
    labeled: EpochDataset,
    k_per_class: int,
    repetitions: int,
    cfg: TrainConfig,
    split: SplitSpec = SplitSpec(),
    log=None,
) -> dict[str, ArmStats]:
    """Compare random-init vs SSL-pretrained fine-tuning on k labels per class.

    Each repetition draws its own k samples per class (without replacement)
    from the training pool; the test split is fixed across repetitions.
    """
    train_idx, test_idx = split_dataset(labeled, split, cfg.seed)
    labels = labeled.labels().astype(np.int64)
    arms: dict[str, list[MetricsReport]] = {"random_init": [], "ssl_finetune": []}
    for rep in range(repetitions):
        draw_rng = np.random.default_rng([cfg.seed, 0xD3A1, k_per_class, rep])
        subset = _draw_limited(labels, train_idx, k_per_class, draw_rng)
        rep_cfg = replace(cfg, seed=cfg.seed + 1000 * rep)
        for arm, start in (
            ("random_init", Model(pretrained.config, seed=rep_cfg.seed)),
            ("ssl_finetune", clone_model(pretrained)),
        ):
            _train_supervised(start, labeled, subset, rep_cfg)
            report = _evaluate(start, labeled, test_idx)
            arms[arm].append(report)
            if log is not None:
                log(
                    f"k={k_per_class} rep={rep} arm={arm} "
                    f"acc={report.accuracy:.4f} f1={report.macro_f1:.4f}"
                )
    return {
        arm: ArmStats(
            tuple(r.accuracy for r in reports),
            tuple(r.macro_f1 for r in reports),
        )
        for arm, reports in arms.items()
    }


def export_embeddings(model: Model, dataset: EpochDataset, out_path: str | Path) -> None:
    """Write eval-mode embeddings as TSV: source_id, label, e0..e{D-1}."""
    out_path = Path(out_path)
    embeddings = embed_dataset(model, dataset)
    dim = embeddings.shape[1]
    lines = ["source_id\tlabel\t" + "\t".join(f"e{i}" for i in range(dim))]
    for ep, vec in zip(dataset.epochs, embeddings):
        label = -1 if ep.label is None else int(ep.label)
        values = "\t".join(f"{v:.9g}" for v in vec)
        lines.append(f"{ep.source_id}\t{label}\t{values}")
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tmp.replace(out_path)
