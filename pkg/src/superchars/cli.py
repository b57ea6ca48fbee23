"""Command-line entry point: ``superchars <subcommand> ...``.

Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import Hyper, RunConfig
from .dataset import TASKS, FoldPlan, corpus_stats, histogram_bars, make_folds, parse_corpus
from .errors import DataError, NumericError, ShapeError
from .export import export_png, export_tensor
from .glyph import render_word
from .layout import Design, augment, augmentation_prefixes, render, spec_for
from .metrics import Prediction, read_predictions, report, write_predictions
from .model import DEFAULT_ARCH, load_checkpoint
from .protocol import pair_name, predict_records, run_matrix
from .quantize import load_fixed, quantize, save_fixed

log = logging.getLogger("superchars")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tasks(value: str) -> tuple[str, ...]:
    if value == "all":
        return TASKS
    tasks = tuple(t.strip() for t in value.split(",") if t.strip())
    unknown = [t for t in tasks if t not in TASKS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown task(s): {', '.join(unknown)}")
    return tasks


def _int_list(value: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--k", type=int, default=10, help="number of folds")
    common.add_argument("--tasks", type=_tasks, default=TASKS, help="comma-separated task names or 'all'")
    common.add_argument("--design", choices=[d.value for d in Design], default="one")
    common.add_argument("--desk-scale", action="store_true", help="downsample images to 112x112 before the CNN")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    common.add_argument("-v", "--verbose", action="store_true")

    hyper = argparse.ArgumentParser(add_help=False)
    hyper.add_argument("--arch", default=DEFAULT_ARCH)
    hyper.add_argument("--epochs", type=int, default=30)
    hyper.add_argument("--lr", type=float, default=0.01)
    hyper.add_argument("--momentum", type=float, default=0.9)
    hyper.add_argument("--batch-size", type=int, default=32)
    hyper.add_argument("--channels", type=int, choices=(1, 3), default=3)
    hyper.add_argument("--downsample", type=int, default=None, help="explicit max-pool factor; overrides --desk-scale")

    parser = _Parser(prog="superchars", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics and sentence-length histogram")
    p.add_argument("csv")
    p.add_argument("--plot", action="store_true", help="also write histogram.png")

    p = sub.add_parser("render", parents=[common], help="render one image per record")
    p.add_argument("csv")
    p.add_argument("--task", choices=TASKS, help="task whose label goes into the tensor file")
    p.add_argument("--no-png", action="store_true")

    p = sub.add_parser("augment", parents=[common], help="space-prefix augmentation (Option Four)")
    p.add_argument("csv")
    p.add_argument("--task", choices=TASKS)
    p.add_argument("--png", action="store_true", help="also write every augmented image as PNG")
    p.add_argument("--exclude-original", action="store_true", help="drop the unshifted image when shifts exist")

    p = sub.add_parser("folds", parents=[common], help="write a k-fold assignment")
    p.add_argument("csv")
    p.add_argument("--stratify", choices=TASKS, default=None)

    p = sub.add_parser("train", parents=[common, hyper], help="train one model per task and fold")
    p.add_argument("csv")
    p.add_argument("--folds", help="fold file from 'superchars folds' (default: make one from --seed/--k)")
    p.add_argument("--fold-ids", type=_int_list, default=None, help="train only these folds")
    p.add_argument("--exclude-original", action="store_true")

    p = sub.add_parser("predict", parents=[common], help="predict an unlabeled corpus with trained models")
    p.add_argument("csv")
    p.add_argument("models", nargs="+", help="checkpoint files (.scnn/.scfx) or directories holding them")

    p = sub.add_parser("eval", parents=[common], help="per-fold accuracy/precision/recall/F1 tables")
    p.add_argument("csv", help="labeled corpus")
    p.add_argument("runs", nargs="+", help="run directories written by 'superchars train'")

    p = sub.add_parser("quantize", parents=[common], help="convert checkpoints to fixed point")
    p.add_argument("models", nargs="+")
    p.add_argument("--bits", type=int, default=8)

    p = sub.add_parser("glyph", parents=[common], help="debug: render one word cell as PNG")
    p.add_argument("word")
    p.add_argument("--side", type=int, default=32)
    return parser


def _hyper(args) -> Hyper:
    fields = {"desk_scale": args.desk_scale}
    for name in ("arch", "epochs", "lr", "momentum", "batch_size", "channels", "downsample"):
        if hasattr(args, name):
            fields[name] = getattr(args, name)
    return Hyper(**fields)


def _config(args) -> RunConfig:
    return RunConfig(
        subcommand=args.subcommand,
        input=getattr(args, "csv", None) or getattr(args, "word", None),
        out=args.out,
        design=args.design,
        seed=args.seed,
        k=args.k,
        tasks=args.tasks,
        folds=getattr(args, "fold_ids", None),
        jobs=args.jobs,
        hyper=_hyper(args),
    )


def _jobs(args) -> int:
    return args.jobs if args.jobs is not None else os.cpu_count() or 1


def cmd_stats(args, out: Path) -> None:
    records = parse_corpus(args.csv)
    stats = corpus_stats(records)
    (out / "stats.txt").write_text(stats.to_text())
    (out / "stats.kv").write_text(stats.to_kv())
    bars = histogram_bars(stats.length_histogram)
    (out / "histogram.txt").write_text(bars)
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        lengths = sorted(stats.length_histogram)
        fig, ax = plt.subplots(figsize=(8, 4))
        ax.bar(lengths, [stats.length_histogram[n] for n in lengths], width=1.0)
        ax.set_xlabel("sentence length (words)")
        ax.set_ylabel("records")
        fig.tight_layout()
        fig.savefig(out / "histogram.png", metadata={"Software": None})
        plt.close(fig)
    print(stats.to_text(), end="")


def _render_one(item):
    record, design, prefix = item
    return render(record, spec_for(design), prefix, design=Design(design))


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 64:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(fn, items, chunksize=32)
    else:
        yield from map(fn, items)


def _labels_for(records, task):
    if task is None:
        return None
    if any(r.task_labels is None for r in records):
        raise DataError(f"--task {task} needs a labeled corpus")
    return [r.task_labels[task] for r in records]


def cmd_render(args, out: Path) -> None:
    records = parse_corpus(args.csv)
    design = Design(args.design)
    png_dir = out / "png"
    if not args.no_png:
        png_dir.mkdir(exist_ok=True)

    def images():
        for image in _map(_render_one, [(r, design, 0) for r in records], _jobs(args)):
            if not args.no_png:
                export_png(image, png_dir / f"{image.record_id}_{design.value}.png")
            yield image

    n = export_tensor(images(), out / "images.schr", _labels_for(records, args.task), args.task or "")
    print(f"rendered {n} images with design {design.value} into {out}")


def _augment_one(item):
    record, include_original = item
    return augment(record, include_original=include_original)


def cmd_augment(args, out: Path) -> None:
    records = parse_corpus(args.csv)
    labels = _labels_for(records, args.task)
    include_original = not args.exclude_original
    if labels is not None:
        cut = spec_for(Design.FOUR).cutlength
        labels = [
            label
            for r, label in zip(records, labels)
            for _ in augmentation_prefixes(len(r.tokens), cut, include_original)
        ]
    png_dir = out / "png"
    if args.png:
        png_dir.mkdir(exist_ok=True)

    def images():
        for batch in _map(_augment_one, [(r, include_original) for r in records], _jobs(args)):
            for image in batch:
                if args.png:
                    export_png(image, png_dir / f"{image.record_id}_p{image.prefix_spaces:02d}.png")
                yield image

    n = export_tensor(images(), out / "augmented.schr", labels, args.task or "")
    print(f"augmented {len(records)} records into {n} images in {out}")


def cmd_folds(args, out: Path) -> None:
    records = parse_corpus(args.csv)
    plan = make_folds(records, args.k, args.seed, stratify_task=args.stratify)
    plan.save(out / "folds.txt")
    print(f"fold sizes: {plan.sizes()}")


def cmd_train(args, out: Path) -> None:
    records = parse_corpus(args.csv, has_labels=True)
    if args.folds:
        plan = FoldPlan.load(args.folds, args.k)
        if len(plan.assignment) != len(records):
            raise DataError(f"fold file covers {len(plan.assignment)} records, corpus has {len(records)}")
    else:
        plan = make_folds(records, args.k, args.seed)
    if args.design not in ("one", "four"):
        log.warning("design %s was not part of the cross-validation runs; training anyway", args.design)
    run_matrix(
        records,
        plan,
        args.tasks,
        args.design,
        _hyper(args),
        seed=args.seed,
        out_dir=out,
        jobs=_jobs(args),
        which_folds=args.fold_ids,
        include_original=not args.exclude_original,
    )
    print(f"wrote models and predictions to {out}")


def _checkpoints(paths) -> list[Path]:
    found = []
    for p in map(Path, paths):
        if p.is_dir():
            found += sorted(p.glob("*.scfx")) + sorted(p.glob("*.scnn"))
        elif p.exists():
            found.append(p)
        else:
            raise DataError(f"no such checkpoint: {p}")
    if not found:
        raise DataError("no checkpoints found")
    return found


def _load_any(path: Path):
    return load_fixed(path) if path.suffix == ".scfx" else load_checkpoint(path)


def cmd_predict(args, out: Path) -> None:
    records = parse_corpus(args.csv)
    pred_dir = out / "predictions"
    pred_dir.mkdir(exist_ok=True)
    for path in _checkpoints(args.models):
        model = _load_any(path)
        task, fold = model.meta.get("task", path.stem), int(model.meta.get("fold", 0))
        probs = predict_records(model, records)
        rows = [Prediction(r.id, task, fold, float(p), int(p >= 0.5)) for r, p in zip(records, probs)]
        target = pred_dir / f"{path.stem}{'.fixed' if path.suffix == '.scfx' else ''}.csv"
        write_predictions(rows, target)
        print(f"{path.name}: {len(rows)} predictions -> {target}")


def cmd_eval(args, out: Path) -> None:
    records = parse_corpus(args.csv, has_labels=True)
    truth = {r.id: r.task_labels for r in records}
    runs = {}
    for run_dir in map(Path, args.runs):
        meta_path = run_dir / "run.json"
        if not meta_path.exists():
            raise DataError(f"{run_dir} is not a run directory (no run.json)")
        meta = json.loads(meta_path.read_text())
        preds = {}
        for task in args.tasks:
            for fold in range(args.k):
                path = run_dir / "predictions" / f"{pair_name(task, fold)}.csv"
                if path.exists():
                    preds[(task, fold)] = read_predictions(path)
        runs[meta["design"]] = preds
    rep = report(runs, truth, args.tasks, args.k)
    (out / "report.txt").write_text(rep.to_text())
    (out / "report.csv").write_text(rep.to_csv())
    print(rep.to_text(), end="")


def cmd_quantize(args, out: Path) -> None:
    for path in _checkpoints(args.models):
        if path.suffix == ".scfx":
            continue
        fpm = quantize(load_checkpoint(path), args.bits)
        target = out / f"{path.stem}.scfx"
        save_fixed(fpm, target)
        print(f"{path.name} -> {target} ({args.bits}-bit, exponents {fpm.exponents})")


def cmd_glyph(args, out: Path) -> None:
    cell = render_word(args.word, args.side)
    target = out / f"glyph_{args.side}.png"
    export_png(cell.pixels, target)
    print(f"wrote {target}")


COMMANDS = {
    "stats": cmd_stats,
    "render": cmd_render,
    "augment": cmd_augment,
    "folds": cmd_folds,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "quantize": cmd_quantize,
    "glyph": cmd_glyph,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse has already printed usage; --help exits 0
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    print(_config(args).echo(), file=sys.stderr)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.subcommand](args, out)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ShapeError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
