"""End-to-end run on a synthetic corpus through the command line entry point.

    python scripts/run_synthetic.py OUT_DIR [--records 200] [--k 5] [--design one]

Writes a labeled and an unlabeled CSV, then runs stats, train, eval,
quantize and predict. The planted signal lives in the first task, so its
table should sit near 100% while the other five hover around chance.
"""
import argparse
from pathlib import Path

from superchars.cli import main as cli
from superchars.config import TOY_HYPER
from superchars.dataset import write_corpus
from superchars.synthetic import make_corpus


def run(*argv) -> None:
    code = cli([str(a) for a in argv])
    if code != 0:
        raise SystemExit(f"superchars {argv[0]} exited with {code}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out")
    parser.add_argument("--records", type=int, default=200)
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--design", default="one", choices=("one", "four"))
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_csv, test_csv = out / "train.csv", out / "test.csv"
    write_corpus(make_corpus(args.records, seed=args.seed), train_csv, True)
    write_corpus(make_corpus(args.records // 4, seed=args.seed + 1, labeled=False), test_csv, False)

    h = TOY_HYPER
    hyper = [
        "--arch", h.arch, "--epochs", h.epochs, "--lr", h.lr, "--batch-size", h.batch_size,
        "--channels", h.channels, "--downsample", h.downsample,
    ]
    common = ["--seed", args.seed, "--k", args.k]
    run("stats", train_csv, "--out", out / "stats")
    run("train", train_csv, "--design", args.design, *common, *hyper, "--out", out / "run")
    run("eval", train_csv, out / "run", *common, "--out", out / "eval")
    run("quantize", out / "run" / "models", "--bits", 8, "--out", out / "fixed")
    run("predict", test_csv, out / "run" / "models", out / "fixed", "--out", out / "test")


if __name__ == "__main__":
    main()
