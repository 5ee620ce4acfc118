"""Run configuration: line-oriented `key = value` files with dotted keys."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .model import ModelConfig, preset_config
from .training import SplitSpec, TrainConfig
from .transforms import KINDS, TransformSpec

# Every known key with its default. `None` means "no value unless set".
DEFAULTS = {
    "data.cache": None,
    "data.channel": "EEG Fpz-Cz",
    "data.epoch_seconds": 30.0,
    "model.preset": "tiny",
    "model.conv_kernel": None,
    "model.stem_channels": None,
    "model.embedding_dim": None,
    "model.dropout_rate": None,
    "train.temperature": 0.5,
    "train.ssl_batch": 512,
    "train.cls_batch": 256,
    "train.ssl_epochs": 70,
    "train.cls_epochs": 70,
    "train.ssl_lr": 0.1,
    "train.cls_lr": 0.01,
    "train.warmup_epochs": 5,
    "train.momentum": 0.9,
    "train.l2": 1e-4,
    "train.seed": 0,
    "train.loss_mode": "paper",
    "transform.t1": "crop_resize",
    "transform.t2": "permutation",
    "split.by": "record",
    "split.test_fraction": 0.2,
    "split.k_per_class": None,
    "split.repetitions": 100,
}

# Transform parameter overrides, e.g. `transform.t1.num_segments = 3`.
_TRANSFORM_PARAMS = ("num_segments", "sigma_ratio", "mu", "scale_range", "k_range")


def _parse_value(raw: str):
    raw = raw.strip()
    if not raw:
        raise ConfigError("empty value")
    if raw[0] in "\"'" and raw[-1] == raw[0] and len(raw) >= 2:
        return raw[1:-1]
    if raw[0] == "[" and raw[-1] == "]":
        return tuple(float(part) for part in raw[1:-1].split(","))
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def _is_known(key: str) -> bool:
    if key in DEFAULTS:
        return True
    parts = key.split(".")
    return (
        len(parts) == 3
        and parts[0] == "transform"
        and parts[1] in ("t1", "t2")
        and parts[2] in _TRANSFORM_PARAMS
    )


def parse_config_text(text: str) -> dict:
    values: dict = {}
    bad: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if not _is_known(key):
            bad.append(key)
            continue
        values[key] = _parse_value(raw)
    if bad:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(set(bad)))}")
    return values


@dataclass(frozen=True)
class RunConfig:
    values: dict

    @classmethod
    def load(cls, path: str | Path | None, overrides: dict | None = None) -> "RunConfig":
        values = dict(DEFAULTS)
        if path is not None:
            values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
        if overrides:
            values.update(overrides)
        return cls(values)

    def __getitem__(self, key: str):
        return self.values[key]

    def _transform_spec(self, slot: str) -> TransformSpec:
        kind = self.values[f"transform.{slot}"]
        if kind not in KINDS:
            raise ConfigError(f"transform.{slot} = {kind!r} is not one of {KINDS}")
        params = {
            name: self.values[f"transform.{slot}.{name}"]
            for name in _TRANSFORM_PARAMS
            if f"transform.{slot}.{name}" in self.values
        }
        return TransformSpec(kind, params)

    def model_config(self) -> ModelConfig:
        overrides = {}
        for short in ("conv_kernel", "stem_channels", "embedding_dim", "dropout_rate"):
            value = self.values.get(f"model.{short}")
            if value is not None:
                overrides[short] = value
        return preset_config(self.values["model.preset"], **overrides)

    def train_config(self) -> TrainConfig:
        v = self.values
        return TrainConfig(
            temperature=float(v["train.temperature"]),
            ssl_batch=int(v["train.ssl_batch"]),
            cls_batch=int(v["train.cls_batch"]),
            ssl_epochs=int(v["train.ssl_epochs"]),
            cls_epochs=int(v["train.cls_epochs"]),
            ssl_lr=float(v["train.ssl_lr"]),
            cls_lr=float(v["train.cls_lr"]),
            warmup_epochs=int(v["train.warmup_epochs"]),
            momentum=float(v["train.momentum"]),
            l2=float(v["train.l2"]),
            seed=int(v["train.seed"]),
            t1=self._transform_spec("t1"),
            t2=self._transform_spec("t2"),
            loss_mode=str(v["train.loss_mode"]),
        )

    def split_spec(self) -> SplitSpec:
        v = self.values
        return SplitSpec(
            by=str(v["split.by"]),
            test_fraction=float(v["split.test_fraction"]),
            k_per_class=v["split.k_per_class"],
            repetitions=int(v["split.repetitions"]),
        )

    def to_text(self) -> str:
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if value is None:
                continue
            if isinstance(value, str):
                lines.append(f'{key} = "{value}"')
            elif isinstance(value, tuple):
                lines.append(f"{key} = [{', '.join(str(x) for x in value)}]")
            else:
                lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def write_resolved(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "config_resolved.txt"
        path.write_text(self.to_text(), encoding="utf-8")
        return path
