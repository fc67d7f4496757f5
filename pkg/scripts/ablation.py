"""Generate a synthetic dataset and run the mask, k and component ablation grids through the CLI.

    python scripts/ablation.py --work results/ablation --grids mask,component
"""

import argparse
from pathlib import Path

from snpformer.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", default="ablation_runs")
    ap.add_argument("--grids", default="mask,component,k")
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--len", type=int, default=600)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--lr", type=float, default=1e-3)
    args = ap.parse_args()
    work = Path(args.work)
    prefix = work / "data" / "synth"
    cli(["synth", "--n", str(args.n), "--len", str(args.len), "--causal", "10", "--target-pcc", "0.95",
         "--out-prefix", str(prefix)])
    data = ["--sequences", f"{prefix}.seq.tsv", "--phenotypes", f"{prefix}.pheno.csv", "--trait", "synthetic",
            "--task", "regression"]
    train = ["--epochs", str(args.epochs), "--patience", "3", "--lr", str(args.lr)]
    for grid in args.grids.split(","):
        code = cli(["-v", "ablate", *data, *train, "--grid", grid, "--out-dir", str(work / grid)])
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
