"""Cross-validation protocol: one model per (task, fold), predictions per held-out fold."""
from __future__ import annotations

import json
import logging
import os
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import Hyper
from .dataset import TASKS, FoldPlan, Record
from .errors import DataError
from .export import ManifestRow, read_manifest, write_manifest
from .layout import Design, augmentation_prefixes, render, spec_for
from .metrics import Prediction, write_predictions
from .model import CnnArch, CnnModel, init_model, predict_proba, save_checkpoint, train
from .quantize import FixedPointModel, forward_fixed

log = logging.getLogger(__name__)


def ink_map(pixels: np.ndarray, downsample: int = 1) -> np.ndarray:
    """uint8 image(s) with ink 0 / background 255 -> uint8 ink mask, max-pooled."""
    ink = (pixels < 128).astype(np.uint8)
    if downsample == 1:
        return ink
    d = downsample
    # strided maxima are much faster than a reshape-and-reduce here
    out = ink[..., ::d, ::d].copy()
    for i in range(d):
        for j in range(d):
            if i or j:
                np.maximum(out, ink[..., i::d, j::d], out=out)
    return out


def to_input(ink: np.ndarray, channels: int) -> np.ndarray:
    """(N, S, S) ink masks -> (N, C, S, S) float32 in [0, 1]."""
    x = ink.astype(np.float32)[:, None]
    return np.repeat(x, channels, axis=1) if channels > 1 else x


class InkCache:
    """Bounded LRU of downsampled ink masks keyed by (record, prefix, design, downsample)."""

    def __init__(self, limit: int = 20_000):
        self.limit = limit
        self._data: OrderedDict[tuple, np.ndarray] = OrderedDict()

    def get(self, key: tuple) -> np.ndarray | None:
        value = self._data.get(key)
        if value is not None:
            self._data.move_to_end(key)
        return value

    def put(self, key: tuple, value: np.ndarray) -> None:
        self._data[key] = value
        if len(self._data) > self.limit:
            self._data.popitem(last=False)

    def __len__(self) -> int:
        return len(self._data)


class RenderedSamples:
    """Lazily rendered (record, prefix) images, indexable by an index array."""

    def __init__(
        self,
        records: Sequence[Record],
        pairs: Sequence[tuple[int, int]],
        design: Design | str,
        downsample: int = 1,
        channels: int = 3,
        cache: InkCache | None = None,
    ):
        self.records = records
        self.pairs = list(pairs)
        self.design = Design(design)
        self.spec = spec_for(self.design)
        self.downsample = downsample
        self.channels = channels
        self.cache = cache if cache is not None else InkCache()

    def __len__(self) -> int:
        return len(self.pairs)

    def pixels(self, i: int) -> np.ndarray:
        record_index, prefix = self.pairs[i]
        return render(self.records[record_index], self.spec, prefix, design=self.design).pixels

    def _ink(self, i: int) -> np.ndarray:
        key = (*self.pairs[i], self.design, self.downsample)
        cached = self.cache.get(key)
        if cached is None:
            cached = ink_map(self.pixels(i), self.downsample)
            self.cache.put(key, cached)
        return cached

    def __getitem__(self, idx) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx))
        return to_input(np.stack([self._ink(int(i)) for i in idx]), self.channels)

    def manifest(self, task: str = "", labels: Sequence[int] | None = None) -> list[ManifestRow]:
        return [
            ManifestRow(
                n,
                self.records[r].id,
                self.design.value,
                p,
                task,
                None if labels is None else int(labels[n]),
            )
            for n, (r, p) in enumerate(self.pairs)
        ]


def training_pairs(records: Sequence[Record], indices: Sequence[int], design: Design, include_original: bool = True) -> list[tuple[int, int]]:
    """(record index, prefix) pairs; only Option Four expands a record into several."""
    if design != Design.FOUR:
        return [(i, 0) for i in indices]
    cut = spec_for(design).cutlength
    return [(i, p) for i in indices for p in augmentation_prefixes(len(records[i].tokens), cut, include_original)]


def arch_for(hyper: Hyper) -> CnnArch:
    return CnnArch(hyper.arch, (hyper.channels, hyper.input_px, hyper.input_px))


def pair_seeds(seed: int, task: str, fold: int) -> tuple[int, int]:
    task_index = TASKS.index(task) if task in TASKS else sum(map(ord, task))
    init_seed, shuffle_seed = np.random.SeedSequence([seed, task_index, fold]).generate_state(2)
    return int(init_seed), int(shuffle_seed)


@dataclass
class PairResult:
    task: str
    fold: int
    model: CnnModel
    predictions: list[Prediction]
    train_manifest: list[ManifestRow]
    loss_trace: list[float]
    validation_images: int


def train_pair(
    records: Sequence[Record],
    folds: FoldPlan,
    task: str,
    fold: int,
    design: Design | str,
    hyper: Hyper,
    seed: int = 0,
    include_original: bool = True,
    cache: InkCache | None = None,
) -> PairResult:
    design = Design(design)
    train_idx = folds.train_indices(fold)
    val_idx = folds.indices(fold)
    pairs = training_pairs(records, train_idx, design, include_original)
    labels = np.array([records[r].task_labels[task] for r, _ in pairs], dtype=np.int64)
    samples = RenderedSamples(records, pairs, design, hyper.input_downsample, hyper.channels, cache)

    init_seed, shuffle_seed = pair_seeds(seed, task, fold)
    model = init_model(arch_for(hyper), init_seed)
    model.meta = {
        "task": task,
        "fold": fold,
        "design": design.value,
        "downsample": hyper.input_downsample,
        "channels": hyper.channels,
    }
    model, trace = train(model, samples, labels, hyper.train_config(), seed=shuffle_seed)

    # validation images are never augmented
    val = RenderedSamples(records, [(i, 0) for i in val_idx], design, hyper.input_downsample, hyper.channels, cache)
    probs = predict_proba(model, val)
    predictions = [
        Prediction(records[i].id, task, fold, float(p), int(p >= 0.5)) for i, p in zip(val_idx, probs)
    ]
    return PairResult(task, fold, model, predictions, samples.manifest(task, labels), trace, len(val))


def _train_pair_job(args) -> PairResult:
    return train_pair(*args)


@dataclass
class MatrixResult:
    design: str
    results: dict[tuple[str, int], PairResult] = field(default_factory=dict)

    @property
    def models(self) -> dict[tuple[str, int], CnnModel]:
        return {key: r.model for key, r in self.results.items()}

    @property
    def predictions(self) -> dict[tuple[str, int], list[Prediction]]:
        return {key: r.predictions for key, r in self.results.items()}


def pair_name(task: str, fold: int) -> str:
    return f"{task}_fold{fold}"


def run_matrix(
    records: Sequence[Record],
    folds: FoldPlan,
    tasks: Sequence[str] = TASKS,
    design: Design | str = Design.ONE,
    hyper: Hyper = Hyper(),
    seed: int = 0,
    out_dir: str | Path | None = None,
    jobs: int | None = 1,
    which_folds: Sequence[int] | None = None,
    include_original: bool = True,
) -> MatrixResult:
    """Train and validate every (task, fold) pair.

    With ``out_dir`` the run is written as ``run.json``, ``models/*.scnn``,
    ``predictions/*.csv`` and ``manifests/*.train.manifest``.
    """
    design = Design(design)
    if not records:
        raise DataError("empty corpus")
    if len(folds.assignment) != len(records):
        raise DataError(f"fold plan covers {len(folds.assignment)} records, corpus has {len(records)}")
    for task in tasks:
        if task not in TASKS:
            raise DataError(f"unknown task {task!r}")
        missing = [r.id for r in records if r.task_labels is None or task not in r.task_labels]
        if missing:
            raise DataError(f"task column {task!r} missing for {len(missing)} records (first: {missing[0]})")
    fold_ids = list(range(folds.k)) if which_folds is None else list(which_folds)
    jobs_list = [(records, folds, t, f, design, hyper, seed, include_original) for t in tasks for f in fold_ids]

    n_workers = jobs if jobs is not None else os.cpu_count() or 1
    if n_workers > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outputs = list(pool.map(_train_pair_job, jobs_list))
    else:
        # one process: every pair shares a cache, since images do not depend on the task
        cache = InkCache()
        outputs = [train_pair(*args, cache=cache) for args in jobs_list]

    result = MatrixResult(design.value)
    for out in outputs:
        result.results[(out.task, out.fold)] = out
        log.info("trained %s fold %d, final loss %.4f", out.task, out.fold, out.loss_trace[-1] if out.loss_trace else float("nan"))
    if out_dir is not None:
        write_run(result, Path(out_dir), folds, tasks, hyper, seed)
    return result


def write_run(result: MatrixResult, out_dir: Path, folds: FoldPlan, tasks: Sequence[str], hyper: Hyper, seed: int) -> None:
    for sub in ("models", "predictions", "manifests"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    for (task, fold), r in sorted(result.results.items()):
        name = pair_name(task, fold)
        save_checkpoint(r.model, out_dir / "models" / f"{name}.scnn")
        write_predictions(r.predictions, out_dir / "predictions" / f"{name}.csv")
        write_manifest(r.train_manifest, out_dir / "manifests" / f"{name}.train.manifest")
    meta = {"design": result.design, "k": folds.k, "tasks": list(tasks), "seed": seed, "hyper": asdict(hyper)}
    (out_dir / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    folds.save(out_dir / "folds.txt")


def leaked_ids(out_dir: str | Path, records: Sequence[Record], folds: FoldPlan) -> dict[str, set[str]]:
    """Validation record ids found in each training manifest of a written run."""
    out_dir = Path(out_dir)
    leaks = {}
    for path in sorted((out_dir / "manifests").glob("*.train.manifest")):
        fold = int(path.name.split("_fold")[-1].split(".")[0])
        held_out = {records[i].id for i in folds.indices(fold)}
        found = {row.record_id for row in read_manifest(path)} & held_out
        if found:
            leaks[path.name] = found
    return leaks


def predict_records(model: CnnModel | FixedPointModel, records: Sequence[Record], design: Design | str | None = None, batch_size: int = 64) -> np.ndarray:
    """Positive-class probabilities for unshifted renderings of ``records``."""
    meta = model.meta
    design = Design(design or meta.get("design", "one"))
    samples = RenderedSamples(
        records,
        [(i, 0) for i in range(len(records))],
        design,
        meta.get("downsample", 1),
        meta.get("channels", model.arch.input_shape[0]),
    )
    fwd = (lambda m, x: forward_fixed(m, x)) if isinstance(model, FixedPointModel) else None
    return predict_proba(model, samples, batch_size, fwd=fwd)
