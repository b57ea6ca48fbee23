"""Run configuration shared by the protocol and the CLI."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .dataset import TASKS
from .model import DEFAULT_ARCH, TrainConfig

DESK_DOWNSAMPLE = 2


@dataclass(frozen=True)
class Hyper:
    arch: str = DEFAULT_ARCH
    epochs: int = 30
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    decay_at: float = 2 / 3
    lr_decay: float = 0.1
    channels: int = 3
    # max-pool factor applied to the 224px image before it reaches the CNN;
    # None means 1, or 2 when desk_scale is set
    downsample: int | None = None
    desk_scale: bool = False
    weight_bits: int = 8

    @property
    def input_downsample(self) -> int:
        if self.downsample is not None:
            return self.downsample
        return DESK_DOWNSAMPLE if self.desk_scale else 1

    @property
    def input_px(self) -> int:
        return 224 // self.input_downsample

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            lr=self.lr,
            momentum=self.momentum,
            batch_size=self.batch_size,
            decay_at=self.decay_at,
            lr_decay=self.lr_decay,
        )


@dataclass
class RunConfig:
    subcommand: str
    input: str | None = None
    out: str = "out"
    design: str = "one"
    seed: int = 0
    k: int = 10
    tasks: tuple[str, ...] = TASKS
    folds: tuple[int, ...] | None = None
    jobs: int | None = None
    hyper: Hyper = field(default_factory=Hyper)

    def echo(self) -> str:
        flat = asdict(self)
        hyper = flat.pop("hyper")
        lines = [f"{k}: {v}" for k, v in flat.items()]
        lines += [f"hyper.{k}: {v}" for k, v in hyper.items()]
        return "\n".join(lines)


# A small network on 56px single-channel inputs; trains a synthetic corpus in seconds.
TOY_ARCH = "conv3x8,relu,pool,conv3x16,relu,pool,gap,dense2"
TOY_HYPER = Hyper(arch=TOY_ARCH, epochs=40, lr=0.05, batch_size=16, channels=1, downsample=4)
