"""Command-line entry point: ``snpformer <command> ...``.

Exit codes: 0 success, 2 user/config/data error, 3 numeric failure.
Set ``SNPFORMER_THREADS`` to cap the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import os
import shlex
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .codec import read_sequence_file, preprocess, write_sequence_file
from .errors import NumericError, SnpformerError, ShapeError
from .model import ModelConfig
from .pipeline.checkpoint import load_checkpoint, save_checkpoint
from .pipeline.cv import FoldReport, cross_validate
from .pipeline.data import Dataset, load_dataset, load_sequences
from .pipeline.ridge import FEATURES, ridge_baseline
from .pipeline.synth import SignalSpec, synth_generate
from .pipeline.train import TrainConfig, model_config_for
from .tokenizer import TokenizerConfig, encode_letters, tokenize_codes

log = logging.getLogger("snpformer")

MASK_GRID = (0.0, 0.15, 0.30, 0.45, 0.60)
K_GRID = tuple(range(1, 9))


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(path: Path, args: argparse.Namespace, inputs: dict[str, str], started: float,
                   extra: dict | None = None) -> None:
    lines = [
        f"command={args.command}",
        f"argv={shlex.join(sys.argv[1:]) if args.argv is None else shlex.join(args.argv)}",
        f"version={__version__}",
        f"threads={os.environ.get('SNPFORMER_THREADS', '')}",
    ]
    for key, value in sorted(vars(args).items()):
        if key in ("func", "argv", "command"):
            continue
        lines.append(f"config.{key}={value}")
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value}")
    for name, file in inputs.items():
        lines.append(f"input.{name}={file}")
        lines.append(f"input.{name}.sha256={_digest(file)}")
    lines.append(f"wall_time={time.perf_counter() - started:.3f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _tok_cfg(args, k=None, p=None) -> TokenizerConfig:
    return TokenizerConfig(k if k is not None else args.k, args.mask_prob if p is None else p, args.seed)


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, patience=args.patience, batch_size=args.batch_size, lr=args.lr,
                       weight_decay=args.weight_decay, seed=args.seed, checked=args.checked)


def _model_cfg(args, dataset: Dataset, k: int) -> ModelConfig:
    return model_config_for(dataset, k, d_model=args.d_model, n_layers=args.layers, n_heads=args.heads,
                            mlp_ratio=args.mlp_ratio, d_proj=args.d_proj, head_hidden=args.head_hidden,
                            activation=args.activation)


def _write_report(path: Path, report: FoldReport) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "metric", "value"])
        for fold, metric, value in report.rows():
            w.writerow([fold, metric, repr(float(value))])


def _write_history(path: Path, report: FoldReport) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "epoch", "train_loss", "val_metric"])
        for fold, history in enumerate(report.histories):
            for rec in history:
                w.writerow([fold, rec.epoch, repr(rec.train_loss), repr(rec.val_metric)])


def cmd_tokenize(args) -> int:
    started = time.perf_counter()
    cfg = TokenizerConfig(args.k, 0.0)
    sequences = read_sequence_file(args.sequences)
    out = Path(args.out)
    with out.open("w", encoding="utf-8", newline="\n") as fh:
        for seq in sequences:
            ids = tokenize_codes(encode_letters(preprocess(seq).letters), cfg.k)
            fh.write(f"{seq.id}\t{' '.join(map(str, ids.tolist()))}\n")
    write_manifest(out.with_name(out.name + ".manifest"), args, {"sequences": args.sequences}, started)
    return 0


def cmd_cv(args) -> int:
    started = time.perf_counter()
    dataset = load_dataset(args.sequences, args.phenotypes, args.trait, args.task)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tok = _tok_cfg(args)
    model_cfg = _model_cfg(args, dataset, tok.k)

    def progress(i, report):
        log.info("fold %d: %s = %.4f (%.1fs)", i, report.metric, report.values[-1], report.wall_times[-1])

    report = cross_validate(dataset, model_cfg, _train_cfg(args), tok, seed=args.seed, on_fold=progress)
    _write_report(out_dir / "metrics.csv", report)
    _write_history(out_dir / "history.csv", report)
    for i, ckpt in enumerate(report.checkpoints):
        save_checkpoint(ckpt, out_dir / f"fold{i}.gsck")
    write_manifest(out_dir / "manifest.txt", args, {"sequences": args.sequences, "phenotypes": args.phenotypes},
                   started, {"fold_seeds": ",".join(map(str, report.seeds)),
                             "label_names": ",".join(dataset.label_names)})
    print(f"{report.metric} {report.mean:.4f} +/- {report.std:.4f}")
    return 0


def ablation_cells(args) -> list[dict]:
    if args.grid == "mask":
        return [{"cell": f"mask={p:g}", "k": args.k, "mask_prob": p} for p in args.mask_values]
    if args.grid == "k":
        return [{"cell": f"k={k}", "k": k, "mask_prob": args.mask_prob} for k in args.k_values]
    p = args.mask_prob
    return [
        {"cell": "-kmer -mask", "k": 1, "mask_prob": 0.0},
        {"cell": "-kmer +mask", "k": 1, "mask_prob": p},
        {"cell": "+kmer -mask", "k": args.k, "mask_prob": 0.0},
        {"cell": "+kmer +mask", "k": args.k, "mask_prob": p},
    ]


def cmd_ablate(args) -> int:
    started = time.perf_counter()
    dataset = load_dataset(args.sequences, args.phenotypes, args.trait, args.task)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for cell in ablation_cells(args):
        tok = _tok_cfg(args, cell["k"], cell["mask_prob"])
        report = cross_validate(dataset, _model_cfg(args, dataset, cell["k"]), _train_cfg(args), tok, seed=args.seed)
        log.info("%s: %.4f +/- %.4f", cell["cell"], report.mean, report.std)
        rows.append((cell, report))
    with (out_dir / "ablation.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["grid", "cell", "k", "mask_prob", "metric", "mean", "std"] + [f"fold{i}" for i in range(5)])
        for cell, report in rows:
            w.writerow([args.grid, cell["cell"], cell["k"], repr(cell["mask_prob"]), report.metric,
                        repr(report.mean), repr(report.std)] + [repr(v) for v in report.values])
    write_manifest(out_dir / "manifest.txt", args, {"sequences": args.sequences, "phenotypes": args.phenotypes},
                   started)
    for cell, report in rows:
        print(f"{cell['cell']}\t{report.metric} {report.mean:.4f} +/- {report.std:.4f}")
    return 0


def cmd_ridge(args) -> int:
    started = time.perf_counter()
    dataset = load_dataset(args.sequences, args.phenotypes, args.trait, args.task)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = ridge_baseline(dataset, l2=args.l2, seed=args.seed, features=args.features, k=args.k)
    _write_report(out_dir / "ridge_metrics.csv", report)
    write_manifest(out_dir / "ridge_manifest.txt", args, {"sequences": args.sequences, "phenotypes": args.phenotypes},
                   started)
    print(f"{report.metric} {report.mean:.4f} +/- {report.std:.4f}")
    return 0


def cmd_predict(args) -> int:
    started = time.perf_counter()
    ckpt = load_checkpoint(args.checkpoint)
    ids, codes = load_sequences(args.sequences)
    k = ckpt.model_config.k
    expected = ckpt.model_config.seq_tokens
    n_tok = codes.shape[1] // k
    if n_tok != expected:
        raise ShapeError(f"sequences have length {codes.shape[1]} ({n_tok} tokens at k={k}); "
                         f"checkpoint expects {expected} tokens (length {expected * k}..{expected * k + k - 1})")
    pred = ckpt.predict_tokens(tokenize_codes(codes, k))
    out = Path(args.out)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if ckpt.task == "classification":
            names = ckpt.label_names
            w.writerow(["sample_id", "prediction"] + [f"prob_{name}" for name in names])
            for sid, label, probs in zip(ids, pred.values, pred.probabilities):
                w.writerow([sid, names[label]] + [repr(float(p)) for p in probs])
        else:
            w.writerow(["sample_id", "prediction"])
            for sid, value in zip(ids, pred.values):
                w.writerow([sid, repr(float(value))])
    write_manifest(out.with_name(out.name + ".manifest"), args,
                   {"checkpoint": args.checkpoint, "sequences": args.sequences}, started)
    return 0


def cmd_synth(args) -> int:
    started = time.perf_counter()
    signal = SignalSpec(n_causal=args.causal, noise_sd=args.noise, epistatic=args.epistatic,
                        motif_len=args.motif_len, target_pcc=args.target_pcc)
    result = synth_generate(args.n, args.len, args.task, signal, seed=args.seed, n_classes=args.classes,
                            trait=args.trait)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    seq_path = prefix.with_name(prefix.name + ".seq.tsv")
    pheno_path = prefix.with_name(prefix.name + ".pheno.csv")
    oracle_path = prefix.with_name(prefix.name + ".oracle.csv")
    write_sequence_file(seq_path, result.sequences)
    ds = result.dataset
    with pheno_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "trait", "value"])
        for i, sid in enumerate(ds.ids):
            value = ds.label_names[ds.values[i]] if ds.task == "classification" else repr(float(ds.values[i]))
            w.writerow([sid, args.trait, value])
    with oracle_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "latent"])
        for sid, latent in zip(ds.ids, result.latent):
            w.writerow([sid, repr(float(latent))])
    write_manifest(prefix.with_name(prefix.name + ".manifest"), args, {}, started,
                   {"noise_sd": repr(result.noise_sd), "causal_loci": ",".join(map(str, result.loci)),
                    "motifs": ",".join(result.motifs)})
    return 0


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sequences", required=True, help="sample_id<TAB>sequence file")
    p.add_argument("--phenotypes", required=True, help="CSV with header sample_id,trait,value")
    p.add_argument("--trait", required=True)
    p.add_argument("--task", required=True, choices=("classification", "regression"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--mask-prob", type=float, default=0.15)
    p.add_argument("--epochs", type=int, default=80)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=0.01)
    p.add_argument("--d-model", type=int, default=32)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--mlp-ratio", type=int, default=4)
    p.add_argument("--d-proj", type=int, default=4)
    p.add_argument("--head-hidden", type=int, default=256)
    p.add_argument("--activation", choices=("gelu", "relu"), default="gelu")
    p.add_argument("--checked", action="store_true", help="fail fast on NaN/Inf")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snpformer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="write k-mer token ids for a sequence file")
    p.add_argument("--sequences", required=True)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("cv", help="five-fold cross-validation of the transformer")
    _add_data_args(p)
    _add_train_args(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("ablate", help="run an ablation grid (mask proportion, k, or components)")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--grid", required=True, choices=("mask", "k", "component"))
    p.add_argument("--mask-values", type=_floats, default=list(MASK_GRID))
    p.add_argument("--k-values", type=_ints, default=list(K_GRID))
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("ridge", help="five-fold ridge baseline on the same folds")
    _add_data_args(p)
    p.add_argument("--l2", type=float, default=1.0)
    p.add_argument("--features", choices=FEATURES, default="kmer")
    p.add_argument("--k", type=int, default=6)
    p.set_defaults(func=cmd_ridge)

    p = sub.add_parser("predict", help="predict phenotypes with a saved checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sequences", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic dataset with planted causal k-mers")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--task", choices=("classification", "regression"), default="regression")
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--causal", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--target-pcc", type=float, default=None,
                   help="set the noise so the latent/target correlation has this value (overrides --noise)")
    p.add_argument("--epistatic", action="store_true")
    p.add_argument("--motif-len", type=int, default=6)
    p.add_argument("--trait", default="synthetic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = os.environ.get("SNPFORMER_THREADS")
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(int(threads)):
                return args.func(args)
        return args.func(args)
    except NumericError as exc:
        print(f"snpformer: numeric error: {exc}", file=sys.stderr)
        return 3
    except (SnpformerError, OSError) as exc:
        print(f"snpformer: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
