"""Command-line entry point: ``molbench {prep,train,bench,cka,fingerprints}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from ..cka import SIGMA_CONVENTIONS, cka, format_float
from ..chem import to_smiles
from ..fp import ecfp4, fingerprint_matrix, write_fingerprints
from ..graphrep import featurize
from ..models import (
    MODEL_NAMES,
    ModelConfig,
    linreg_fit,
    linreg_predict,
    rf_fit,
    rf_predict,
    save_model,
    train,
)
from .config import load_config
from .data import load_csv, write_rejections
from .metrics import rmse
from .runner import run_benchmark


def cmd_prep(args) -> int:
    ds = load_csv(args.input, args.smiles_col, args.target_col)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["smiles", "target", "input_smiles"])
        for (smi, target), mol in zip(ds.records, ds.molecules):
            w.writerow([to_smiles(mol), format_float(target), smi])
    rejects = Path(args.out).with_suffix(".rejects.csv")
    write_rejections(rejects, ds.rejected)
    print(f"kept {len(ds)} rows, rejected {len(ds.rejected)} (see {rejects})")
    return 0


def cmd_train(args) -> int:
    ds = load_csv(args.data, args.smiles_col, args.target_col)
    y = ds.targets
    fps = fingerprint_matrix(ds.molecules)
    if args.model == "linreg":
        model = linreg_fit(fps, y, ridge=args.ridge)
        pred = linreg_predict(model, fps)
    elif args.model == "rf":
        model = rf_fit(fps, y, n_trees=args.n_trees, seed=args.seed)
        pred = rf_predict(model, fps)
    else:
        kw = {"seed": args.seed, "epochs": args.epochs}
        if args.hidden is not None:
            kw["hidden_dim"] = args.hidden
        if args.lr is not None:
            kw["lr"] = args.lr
        config = ModelConfig.from_name(args.model, **kw)
        graphs = [featurize(m) for m in ds.molecules]
        f = fps if config.use_fingerprint else None
        model = train(config, graphs, y, f)
        pred = model.predict(graphs, f)
    save_model(args.out, model)
    print(f"{args.model}: n={len(y)} train RMSE {rmse(y, pred):.6g} -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    result = run_benchmark(cfg, args.out)
    failed = [
        (c.dataset, c.seed, m)
        for c in result.cells
        for m, r in c.models.items()
        if r.status.startswith("failed")
    ]
    print(f"wrote {args.out} ({len(result.cells)} dataset/seed cells, {len(failed)} failed models)")
    return 0


def _read_embeddings(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], [r for r in rows[1:] if r]

    def numeric(col):
        try:
            [float(r[col]) for r in body]
        except ValueError:
            return False
        return True

    cols = [j for j in range(len(header)) if numeric(j)]
    if not cols:
        raise ValueError(f"{path}: no numeric columns")
    return np.array([[float(r[j]) for j in cols] for r in body])


def cmd_cka(args) -> int:
    a = _read_embeddings(args.embeddings_a)
    b = _read_embeddings(args.embeddings_b)
    print(format_float(cka(a, b, args.sigma_convention).value))
    return 0


def cmd_fingerprints(args) -> int:
    ds = load_csv(args.input, args.smiles_col, args.target_col)
    write_fingerprints(args.out, [ecfp4(m) for m in ds.molecules])
    print(f"wrote {len(ds)} fingerprints to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="molbench", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prep", help="standardize SMILES and log rejected rows")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--smiles-col", required=True)
    s.add_argument("--target-col", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_prep)

    s = sub.add_parser("train", help="train one model on a whole CSV")
    s.add_argument("--data", required=True)
    s.add_argument("--model", required=True, choices=MODEL_NAMES)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--hidden", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--ridge", type=float, default=1e-6)
    s.add_argument("--n-trees", type=int, default=100)
    s.add_argument("--smiles-col", default="smiles")
    s.add_argument("--target-col", default="target")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("bench", help="run the full benchmark from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("cka", help="RBF CKA between two embedding CSVs")
    s.add_argument("--embeddings-a", required=True)
    s.add_argument("--embeddings-b", required=True)
    s.add_argument("--sigma-convention", choices=SIGMA_CONVENTIONS, default="median_sq")
    s.set_defaults(func=cmd_cka)

    s = sub.add_parser("fingerprints", help="export ECFP4 bits as one hex line per molecule")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--smiles-col", default="smiles")
    s.add_argument("--target-col", default="target")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fingerprints)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
