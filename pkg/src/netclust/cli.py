"""Command-line interface: composable subcommands for each pipeline stage
plus `pipeline` (end to end) and `score` (apply a saved bundle).

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import boost as boost_mod
from . import cluster as cluster_mod
from .bundle import (
    PipelineConfig,
    boosted_model_from_dict,
    boosted_model_to_dict,
    canonical_json,
    cluster_model_from_dict,
    cluster_model_to_dict,
    load_bundle,
    run_pipeline,
    score as score_bundle,
)
from .errors import DataError, NetclustError
from .ingest import Column, IngestConfig, RawTable, drop_identifiers, load_csv, write_csv
from .labeling import PseudoLabeledDataset, class_distribution
from .metrics import class_report, confusion, multiclass_roc
from .preprocess import MissingPolicy, apply_scaler, clean, digitize, fit_scaler
from .synthgen import default_profiles, generate, load_profiles

MISSING_CHOICES = {"drop-col": "drop-column", "drop-row": "drop-row", "impute": "impute-median"}
SCALE_CHOICES = {"minmax": "min-max", "zscore": "z-score", "none": "none"}


def _matrix_to_table(m, extra: dict[str, np.ndarray] | None = None) -> RawTable:
    names = list(m.feature_names)
    cols = [Column(n, "numeric", m.values[:, j].copy()) for j, n in enumerate(names)]
    for name, values in (extra or {}).items():
        names.append(name)
        cols.append(Column(name, "numeric", np.asarray(values, dtype=np.float64)))
    return RawTable(column_names=names, columns=cols, n_rows=m.n_rows)


def _load_feature_csv(path, label_column: str | None = None):
    """Load an all-numeric intermediate CSV; optionally peel off a label
    column. Returns (FeatureMatrix, labels or None)."""
    table = load_csv(path, IngestConfig(identifier_columns=()))
    labels = None
    if label_column is not None:
        if label_column not in table.column_names:
            raise DataError(f"column {label_column!r} not found in {path}")
        j = table.column_names.index(label_column)
        col = table.columns[j]
        if col.kind != "numeric":
            raise DataError(f"label column {label_column!r} is not numeric")
        labels = col.values.astype(int)
        table = RawTable(
            column_names=[n for i, n in enumerate(table.column_names) if i != j],
            columns=[c for i, c in enumerate(table.columns) if i != j],
            n_rows=table.n_rows,
        )
    return digitize(table), labels


@click.group()
def cli():
    """Discover attack categories in flow CSVs by clustering, then train a
    boosted-tree classifier on the pseudo-labels."""


@cli.command("ingest")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--drop-cols", default=None, help="comma list of identifier columns")
@click.option("--na-tokens", default=None, help="comma list of missing-value tokens")
@click.option("--delimiter", default=",")
@click.option("--no-header", is_flag=True)
def ingest_cmd(input_path, out_path, drop_cols, na_tokens, delimiter, no_header):
    """Load a flow CSV, drop identifier columns, normalize missing tokens."""
    cfg = IngestConfig(
        identifier_columns=tuple(drop_cols.split(","))
        if drop_cols is not None
        else IngestConfig.identifier_columns,
        sentinel_as_missing=tuple(na_tokens.split(","))
        if na_tokens is not None
        else IngestConfig.sentinel_as_missing,
        delimiter=delimiter,
        has_header=not no_header,
    )
    table = drop_identifiers(load_csv(input_path, cfg), cfg)
    write_csv(table, out_path)
    click.echo(f"wrote {table.n_rows} rows x {table.n_cols} columns to {out_path}")


@cli.command("preprocess")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--missing", type=click.Choice(sorted(MISSING_CHOICES)), default="drop-col")
@click.option("--scale", type=click.Choice(sorted(SCALE_CHOICES)), default="minmax")
@click.option("--meta-out", default=None, type=click.Path(),
              help="write scaler/encoding parameters as JSON")
def preprocess_cmd(input_path, out_path, missing, scale, meta_out):
    """Clean, digitize, and scale an ingested CSV into numeric features."""
    table = load_csv(input_path, IngestConfig(identifier_columns=()))
    cleaned = clean(table, MissingPolicy(mode=MISSING_CHOICES[missing]))
    matrix = digitize(cleaned)
    scaler = None
    if SCALE_CHOICES[scale] != "none":
        scaler = fit_scaler(matrix, SCALE_CHOICES[scale])
        matrix = apply_scaler(scaler, matrix)
    write_csv(_matrix_to_table(matrix), out_path)
    if meta_out:
        from .bundle import scaler_to_dict

        meta = {"encodings": matrix.encodings, "scaler": scaler_to_dict(scaler)}
        with open(meta_out, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(meta) + "\n")
    click.echo(f"wrote {matrix.n_rows} rows x {matrix.n_features} features to {out_path}")


def _parse_k_range(text: str):
    lo, _, hi = text.partition("..")
    try:
        return range(int(lo), int(hi) + 1)
    except ValueError:
        raise click.UsageError(f"bad --scan-k range: {text!r} (expected a..b)")


@cli.command("cluster")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--k", type=int, default=None)
@click.option("--init", type=click.Choice(cluster_mod.INIT_METHODS), default="kmeans++")
@click.option("--max-iter", type=int, default=300)
@click.option("--tol", type=float, default=1e-6)
@click.option("--restarts", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--model-out", default=None, type=click.Path())
@click.option("--scan-k", default=None, help="a..b: emit (k, inertia, silhouette) CSV")
@click.option("--scan-out", default=None, type=click.Path())
def cluster_cmd(input_path, k, init, max_iter, tol, restarts, seed, model_out,
                scan_k, scan_out):
    """Fit K-means on a numeric feature CSV, or scan a range of k."""
    matrix, _ = _load_feature_csv(input_path)
    if scan_k:
        ks = _parse_k_range(scan_k)
        lines = ["k,inertia,silhouette"]
        for kk in ks:
            cfg = cluster_mod.ClusterConfig(
                k=kk, init=init, max_iter=max_iter, tol=tol,
                n_restarts=restarts, seed=seed,
            )
            model = cluster_mod.fit(matrix, cfg)
            sil = (
                cluster_mod.silhouette(matrix, cluster_mod.predict(model, matrix))
                if kk >= 2
                else 0.0
            )
            lines.append(f"{kk},{model.inertia!r},{sil!r}")
        text = "\n".join(lines) + "\n"
        if scan_out:
            with open(scan_out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)
        return
    if k is None:
        raise click.UsageError("--k is required unless --scan-k is given")
    cfg = cluster_mod.ClusterConfig(
        k=k, init=init, max_iter=max_iter, tol=tol, n_restarts=restarts, seed=seed
    )
    model = cluster_mod.fit(matrix, cfg)
    doc = cluster_model_to_dict(model)
    doc["feature_names"] = matrix.feature_names
    if model_out:
        with open(model_out, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(doc) + "\n")
    click.echo(
        f"k={k} inertia={model.inertia:.6g} iterations={model.n_iterations} "
        f"converged={model.converged}"
    )


@cli.command("label")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--dist", is_flag=True, help="print the class distribution as JSON")
def label_cmd(input_path, model_path, out_path, dist):
    """Append a Cluster_Labels column from a fitted cluster model."""
    matrix, _ = _load_feature_csv(input_path)
    with open(model_path, "r", encoding="utf-8") as fh:
        model = cluster_model_from_dict(json.load(fh))
    labels = cluster_mod.predict(model, matrix).labels
    if out_path:
        table = _matrix_to_table(matrix, {"Cluster_Labels": labels})
        write_csv(table, out_path)
    if dist:
        d = class_distribution(labels)
        click.echo(json.dumps({str(k): v for k, v in d.items()}))


@cli.command("train")
@click.option("--input", "input_path", required=True, type=click.Path(),
              help="feature CSV with a Cluster_Labels column")
@click.option("--model-out", required=True, type=click.Path())
@click.option("--rounds", type=int, default=100)
@click.option("--eta", type=float, default=0.3)
@click.option("--max-depth", type=int, default=6)
@click.option("--lambda", "lam", type=float, default=1.0)
@click.option("--gamma", type=float, default=0.0)
@click.option("--min-child-weight", type=float, default=1.0)
@click.option("--seed", type=int, default=0)
def train_cmd(input_path, model_out, rounds, eta, max_depth, lam, gamma,
              min_child_weight, seed):
    """Train the boosted-tree classifier on pseudo-labeled features."""
    matrix, labels = _load_feature_csv(input_path, label_column="Cluster_Labels")
    params = boost_mod.BoostParams(
        n_rounds=rounds, learning_rate=eta, max_depth=max_depth, lam=lam,
        gamma=gamma, min_child_weight=min_child_weight, seed=seed,
    )
    ds = PseudoLabeledDataset(features=matrix, labels=labels, k=int(labels.max()) + 1)
    model = boost_mod.fit(ds, params)
    with open(model_out, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(boosted_model_to_dict(model)) + "\n")
    click.echo(f"trained {rounds} rounds, final logloss {model.train_logloss[-1]:.6g}")


@cli.command("evaluate")
@click.option("--input", "input_path", required=True, type=click.Path(),
              help="feature CSV with a Cluster_Labels column")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
def evaluate_cmd(input_path, model_path, out_dir):
    """Evaluate a boosted model: JSON report, confusion CSV, ROC CSVs."""
    import os

    matrix, labels = _load_feature_csv(input_path, label_column="Cluster_Labels")
    with open(model_path, "r", encoding="utf-8") as fh:
        model = boosted_model_from_dict(json.load(fh))
    proba = boost_mod.predict_proba(model, matrix)
    preds = np.argmax(proba, axis=1)
    cm = confusion(labels, preds, model.n_classes)
    report = class_report(cm)
    curves, macro_auc = multiclass_roc(proba, labels)
    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "classification": report.to_dict(),
        "confusion": cm.counts.tolist(),
        "roc_auc": {str(c): curve.auc for c, curve in curves.items()},
        "macro_auc": macro_auc,
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(canonical_json(doc) + "\n")
    with open(os.path.join(out_dir, "confusion.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join(f"pred_{c}" for c in range(model.n_classes)) + "\n")
        for row in cm.counts:
            fh.write(",".join(str(int(v)) for v in row) + "\n")
    for c, curve in curves.items():
        with open(os.path.join(out_dir, f"roc_class_{c}.csv"), "w", encoding="utf-8") as fh:
            fh.write("fpr,tpr\n")
            for fpr, tpr in curve.points:
                fh.write(f"{fpr!r},{tpr!r}\n")
    click.echo(f"accuracy={report.accuracy:.4f} kappa={report.kappa:.4f}")


def _apply_override(doc: dict, spec: str):
    key, _, raw = spec.partition("=")
    if not _ or not key:
        raise click.UsageError(f"bad --set override: {spec!r} (expected section.key=value)")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = doc
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


@cli.command("pipeline")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--k", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--test-frac", type=float, default=None)
@click.option("--rounds", type=int, default=None)
@click.option("--scale", type=click.Choice(sorted(SCALE_CHOICES)), default=None)
@click.option("--missing", type=click.Choice(sorted(MISSING_CHOICES)), default=None)
@click.option("--set", "overrides", multiple=True,
              help="override any config field, e.g. --set cluster.n_restarts=10")
def pipeline_cmd(input_path, out_dir, config_path, k, seed, test_frac, rounds,
                 scale, missing, overrides):
    """Run the full workflow and persist the model bundle plus reports."""
    doc = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if k is not None:
        doc.setdefault("cluster", {})["k"] = k
    if seed is not None:
        doc["seed"] = seed
    if test_frac is not None:
        doc["test_fraction"] = test_frac
    if rounds is not None:
        doc.setdefault("boost", {})["n_rounds"] = rounds
    if scale is not None:
        doc["scale"] = SCALE_CHOICES[scale]
    if missing is not None:
        doc.setdefault("missing", {})["mode"] = MISSING_CHOICES[missing]
    for spec in overrides:
        _apply_override(doc, spec)
    cfg = PipelineConfig.from_dict(doc)
    run_pipeline(cfg, input_path, out_dir, log=click.echo)
    click.echo(f"wrote bundle and reports to {out_dir}")


@cli.command("score")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def score_cmd(model_path, input_path, out_path):
    """Classify new rows with a saved bundle (no re-fitting)."""
    bundle = load_bundle(model_path)
    labels, _ = score_bundle(bundle, input_path, out_path)
    click.echo(f"scored {len(labels)} rows to {out_path}")


@cli.command("synth")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--profiles", "profiles_path", default=None, type=click.Path())
@click.option("--n-per-class", type=int, default=700)
@click.option("--seed", type=int, default=0)
@click.option("--labels-out", default=None, type=click.Path())
def synth_cmd(out_path, profiles_path, n_per_class, seed, labels_out):
    """Generate a synthetic flow dataset (default: 7 classes, 78 features)."""
    if profiles_path:
        profiles, n_features = load_profiles(profiles_path)
    else:
        from .synthgen import DEFAULT_N_FEATURES

        profiles = default_profiles(rows_per_class=n_per_class)
        n_features = DEFAULT_N_FEATURES
    matrix, truth = generate(profiles, n_features, seed)
    write_csv(_matrix_to_table(matrix), out_path)
    if labels_out:
        with open(labels_out, "w", encoding="utf-8") as fh:
            fh.write("label\n")
            for v in truth:
                fh.write(f"{int(v)}\n")
    click.echo(f"wrote {matrix.n_rows} rows x {matrix.n_features} features to {out_path}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(1)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except NetclustError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except Exception as exc:  # pragma: no cover - internal failures
        click.echo(f"internal error: {exc}", err=True)
        sys.exit(3)
    sys.exit(0)


if __name__ == "__main__":
    main()
