"""Pipeline orchestration and the persisted model bundle.

The bundle is a single self-describing JSON file carrying everything
needed to score new data: ingest metadata (dropped/kept columns), scaler
parameters, categorical encodings, the cluster model, the boosted model,
the config snapshot, and a SHA-256 content checksum. Outputs contain no
timestamps, so identical (config, input bytes) produce byte-identical
files.

One global seed fans out to per-stage seeds as
``sha256(f"{seed}:{stage}")`` truncated to 64 bits.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import boost as boost_mod
from . import cluster as cluster_mod
from .errors import DataError, NetclustError
from .ingest import IngestConfig, drop_identifiers, load_csv
from .labeling import PseudoLabeledDataset, class_distribution, label_dataset
from .metrics import class_report, confusion, multiclass_roc
from .preprocess import (
    FeatureMatrix,
    MissingPolicy,
    Scaler,
    SplitSpec,
    apply_scaler,
    clean,
    digitize,
    fit_scaler,
    split,
)

SCHEMA_VERSION = 1


def stage_seed(seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class PipelineConfig:
    ingest: IngestConfig = field(default_factory=IngestConfig)
    missing: MissingPolicy = field(default_factory=MissingPolicy)
    scale: str = "min-max"  # "min-max" | "z-score" | "none"
    test_fraction: float = 0.2
    cluster: cluster_mod.ClusterConfig = field(
        default_factory=lambda: cluster_mod.ClusterConfig(k=7)
    )
    boost: boost_mod.BoostParams = field(default_factory=boost_mod.BoostParams)
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "ingest": {
                "identifier_columns": list(self.ingest.identifier_columns),
                "sentinel_as_missing": list(self.ingest.sentinel_as_missing),
                "delimiter": self.ingest.delimiter,
                "has_header": self.ingest.has_header,
            },
            "missing": dataclasses.asdict(self.missing),
            "scale": self.scale,
            "test_fraction": self.test_fraction,
            "cluster": dataclasses.asdict(self.cluster),
            "boost": dataclasses.asdict(self.boost),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        cfg = cls()
        ing = doc.get("ingest", {})
        cfg.ingest = IngestConfig(
            identifier_columns=tuple(
                ing.get("identifier_columns", cfg.ingest.identifier_columns)
            ),
            sentinel_as_missing=tuple(
                ing.get("sentinel_as_missing", cfg.ingest.sentinel_as_missing)
            ),
            delimiter=ing.get("delimiter", ","),
            has_header=ing.get("has_header", True),
        )
        mis = doc.get("missing", {})
        cfg.missing = MissingPolicy(
            mode=mis.get("mode", "drop-column"),
            column_drop_threshold=mis.get("column_drop_threshold", 0.0),
        )
        cfg.scale = doc.get("scale", "min-max")
        cfg.test_fraction = doc.get("test_fraction", 0.2)
        clu = doc.get("cluster", {})
        cfg.cluster = cluster_mod.ClusterConfig(
            k=clu.get("k", 7),
            init=clu.get("init", "kmeans++"),
            max_iter=clu.get("max_iter", 300),
            tol=clu.get("tol", 1e-6),
            n_restarts=clu.get("n_restarts", 1),
            seed=clu.get("seed", 0),
        )
        bst = doc.get("boost", {})
        cfg.boost = boost_mod.BoostParams(
            n_rounds=bst.get("n_rounds", 100),
            learning_rate=bst.get("learning_rate", 0.3),
            max_depth=bst.get("max_depth", 6),
            lam=bst.get("lam", 1.0),
            gamma=bst.get("gamma", 0.0),
            min_child_weight=bst.get("min_child_weight", 1.0),
            seed=bst.get("seed", 0),
        )
        cfg.seed = doc.get("seed", 0)
        return cfg


# --- serialization helpers -------------------------------------------------

def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def scaler_to_dict(s: Scaler | None) -> dict | None:
    if s is None:
        return None
    return {
        "method": s.method,
        "feature_names": s.feature_names,
        "p0": s.p0.tolist(),
        "p1": s.p1.tolist(),
    }


def scaler_from_dict(doc: dict | None) -> Scaler | None:
    if doc is None:
        return None
    return Scaler(
        method=doc["method"],
        feature_names=list(doc["feature_names"]),
        p0=np.asarray(doc["p0"], dtype=np.float64),
        p1=np.asarray(doc["p1"], dtype=np.float64),
    )


def cluster_model_to_dict(m: cluster_mod.ClusterModel) -> dict:
    return {
        "centroids": m.centroids.tolist(),
        "inertia": m.inertia,
        "n_iterations": m.n_iterations,
        "cluster_sizes": m.cluster_sizes.tolist(),
        "converged": m.converged,
        "n_reseeds": m.n_reseeds,
    }


def cluster_model_from_dict(doc: dict) -> cluster_mod.ClusterModel:
    return cluster_mod.ClusterModel(
        centroids=np.asarray(doc["centroids"], dtype=np.float64),
        inertia=doc["inertia"],
        n_iterations=doc["n_iterations"],
        cluster_sizes=np.asarray(doc["cluster_sizes"], dtype=int),
        converged=doc["converged"],
        n_reseeds=doc.get("n_reseeds", 0),
    )


def boosted_model_to_dict(m: boost_mod.BoostedModel) -> dict:
    return {
        "n_classes": m.n_classes,
        "base_score": m.base_score,
        "params": dataclasses.asdict(m.params),
        "feature_names": m.feature_names,
        "train_logloss": m.train_logloss,
        "rounds": [[tree.nodes for tree in group] for group in m.rounds],
    }


def boosted_model_from_dict(doc: dict) -> boost_mod.BoostedModel:
    return boost_mod.BoostedModel(
        n_classes=doc["n_classes"],
        base_score=doc["base_score"],
        params=boost_mod.BoostParams(**doc["params"]),
        feature_names=list(doc["feature_names"]),
        train_logloss=list(doc["train_logloss"]),
        rounds=[
            [boost_mod.Tree(nodes=list(nodes)) for nodes in group]
            for group in doc["rounds"]
        ],
    )


def make_bundle(
    cfg: PipelineConfig,
    dropped_columns: list[str],
    kept_columns: list[str],
    encodings: dict,
    scaler: Scaler | None,
    cluster_model: cluster_mod.ClusterModel,
    boosted_model: boost_mod.BoostedModel,
) -> dict:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "ingest_meta": {
            "dropped_columns": dropped_columns,
            "kept_columns": kept_columns,
        },
        "encodings": encodings,
        "scaler": scaler_to_dict(scaler),
        "cluster_model": cluster_model_to_dict(cluster_model),
        "boosted_model": boosted_model_to_dict(boosted_model),
    }
    payload["checksum"] = _sha256_hex(canonical_json(payload).encode())
    return payload


def save_bundle(bundle: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(bundle))
        fh.write("\n")


def load_bundle(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        bundle = json.load(fh)
    if bundle.get("schema_version") != SCHEMA_VERSION:
        raise DataError(
            f"unrecognized bundle schema version: {bundle.get('schema_version')}"
        )
    stated = bundle.get("checksum")
    stripped = {k: v for k, v in bundle.items() if k != "checksum"}
    actual = _sha256_hex(canonical_json(stripped).encode())
    if stated != actual:
        raise DataError("bundle checksum mismatch; file corrupted or edited")
    return bundle


# --- pipeline --------------------------------------------------------------

class PipelineError(NetclustError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def run_pipeline(cfg: PipelineConfig, input_csv, out_dir=None, log=None):
    """Execute ingest -> clean -> digitize -> scale -> cluster -> label ->
    split -> train -> evaluate. Returns (bundle, report) as dicts; writes
    bundle.json, report.json, confusion.csv, and roc_class_<c>.csv under
    ``out_dir`` when given. On error, partial outputs are removed and the
    failing stage is named.
    """
    log = log or (lambda msg: None)
    stages_log = []

    def note(stage, msg):
        stages_log.append({"stage": stage, "info": msg})
        log(f"[{stage}] {msg}")

    def run_stage(name, fn):
        try:
            return fn()
        except NetclustError as exc:
            raise PipelineError(name, exc) from exc
        except Exception as exc:
            raise PipelineError(name, exc) from exc

    with open(input_csv, "rb") as fh:
        input_checksum = _sha256_hex(fh.read())

    table = run_stage("ingest", lambda: load_csv(input_csv, cfg.ingest))
    note("ingest", f"{table.n_rows} rows x {table.n_cols} columns")
    pre_drop_names = list(table.column_names)
    table = run_stage("ingest", lambda: drop_identifiers(table, cfg.ingest))
    note("ingest", f"after identifier drop: {table.n_cols} columns")

    cleaned = run_stage("clean", lambda: clean(table, cfg.missing))
    note("clean", f"{cleaned.n_rows} rows x {cleaned.n_cols} columns")
    dropped = [n for n in pre_drop_names if n not in cleaned.column_names]

    matrix = run_stage("digitize", lambda: digitize(cleaned))
    note("digitize", f"{matrix.n_features} numeric features")

    scaler = None
    if cfg.scale != "none":
        scaler = run_stage("scale", lambda: fit_scaler(matrix, cfg.scale))
        matrix = run_stage("scale", lambda: apply_scaler(scaler, matrix))
        note("scale", f"method={cfg.scale}")

    clu_cfg = dataclasses.replace(cfg.cluster, seed=stage_seed(cfg.seed, "cluster"))
    cluster_model = run_stage("cluster", lambda: cluster_mod.fit(matrix, clu_cfg))
    note(
        "cluster",
        f"k={clu_cfg.k} inertia={cluster_model.inertia:.6g} "
        f"iterations={cluster_model.n_iterations}",
    )

    ds = run_stage("label", lambda: label_dataset(matrix, cluster_model))
    distribution = class_distribution(ds.labels)
    note("label", f"distribution={distribution}")

    split_spec = SplitSpec(
        test_fraction=cfg.test_fraction,
        seed=stage_seed(cfg.seed, "split"),
        stratify=True,
    )
    train_idx, test_idx = run_stage(
        "split", lambda: split(matrix, ds.labels, split_spec)
    )
    note("split", f"train={len(train_idx)} test={len(test_idx)}")

    boost_params = dataclasses.replace(cfg.boost, seed=stage_seed(cfg.seed, "boost"))
    train_ds = run_stage(
        "train",
        lambda: PseudoLabeledDataset(
            features=matrix.take_rows(train_idx),
            labels=ds.labels[train_idx],
            k=ds.k,
        ),
    )
    boosted = run_stage("train", lambda: boost_mod.fit(train_ds, boost_params))
    note("train", f"rounds={boost_params.n_rounds} "
                  f"final_logloss={boosted.train_logloss[-1]:.6g}")

    def evaluate():
        test_m = matrix.take_rows(test_idx)
        y_true = ds.labels[test_idx]
        proba = boost_mod.predict_proba(boosted, test_m)
        y_pred = np.argmax(proba, axis=1)
        cm = confusion(y_true, y_pred, ds.k)
        report = class_report(cm)
        curves, macro_auc = multiclass_roc(proba, y_true)
        return y_pred, proba, cm, report, curves, macro_auc

    y_pred, proba, cm, report, curves, macro_auc = run_stage("evaluate", evaluate)
    note("evaluate", f"accuracy={report.accuracy:.4f} kappa={report.kappa:.4f}")

    bundle = make_bundle(
        cfg,
        dropped_columns=dropped,
        kept_columns=list(matrix.feature_names),
        encodings=matrix.encodings,
        scaler=scaler,
        cluster_model=cluster_model,
        boosted_model=boosted,
    )
    report_doc = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "input_checksum": input_checksum,
        "stages": stages_log,
        "n_rows": table.n_rows,
        "n_features": matrix.n_features,
        "class_distribution": {str(k): v for k, v in distribution.items()},
        "test_indices": test_idx.tolist(),
        "test_predictions": y_pred.tolist(),
        "classification": report.to_dict(),
        "confusion": cm.counts.tolist(),
        "roc_auc": {str(c): curve.auc for c, curve in curves.items()},
        "macro_auc": macro_auc,
    }

    if out_dir is not None:
        written = []
        try:
            os.makedirs(out_dir, exist_ok=True)

            def emit(name, writer):
                path = os.path.join(out_dir, name)
                writer(path)
                written.append(path)

            emit("bundle.json", lambda p: save_bundle(bundle, p))
            emit(
                "report.json",
                lambda p: open(p, "w", encoding="utf-8").write(
                    canonical_json(report_doc) + "\n"
                ),
            )

            def write_confusion(p):
                with open(p, "w", encoding="utf-8") as fh:
                    fh.write(",".join(f"pred_{c}" for c in range(ds.k)) + "\n")
                    for row in cm.counts:
                        fh.write(",".join(str(int(v)) for v in row) + "\n")

            emit("confusion.csv", write_confusion)
            for c, curve in curves.items():
                def write_roc(p, curve=curve):
                    with open(p, "w", encoding="utf-8") as fh:
                        fh.write("fpr,tpr\n")
                        for fpr, tpr in curve.points:
                            fh.write(f"{fpr!r},{tpr!r}\n")
                emit(f"roc_class_{c}.csv", write_roc)
        except Exception:
            for path in written:
                try:
                    os.remove(path)
                except OSError:
                    pass
            raise
    return bundle, report_doc


def score(bundle: dict, input_csv, out_csv=None) -> tuple[np.ndarray, np.ndarray]:
    """Apply a stored bundle to new data: replay drops, encodings, and
    scaling, then classify. Never re-fits anything.

    Returns (predicted labels, probability matrix); also writes a CSV when
    ``out_csv`` is given.
    """
    cfg = PipelineConfig.from_dict(bundle["config"])
    table = load_csv(input_csv, cfg.ingest)
    kept = bundle["ingest_meta"]["kept_columns"]
    missing_cols = [n for n in kept if n not in table.column_names]
    if missing_cols:
        raise DataError(f"input is missing feature column(s): {missing_cols}")
    idx = [table.column_names.index(n) for n in kept]
    sub = type(table)(
        column_names=[table.column_names[i] for i in idx],
        columns=[table.columns[i] for i in idx],
        n_rows=table.n_rows,
    )
    matrix = digitize(sub, encodings=bundle["encodings"])
    scaler = scaler_from_dict(bundle["scaler"])
    if scaler is not None:
        matrix = apply_scaler(scaler, matrix)
    model = boosted_model_from_dict(bundle["boosted_model"])
    proba = boost_mod.predict_proba(model, matrix)
    labels = np.argmax(proba, axis=1)
    if out_csv is not None:
        with open(out_csv, "w", encoding="utf-8") as fh:
            header = ["row", "predicted_class"] + [
                f"proba_{c}" for c in range(model.n_classes)
            ]
            fh.write(",".join(header) + "\n")
            for i in range(len(labels)):
                cells = [str(i), str(int(labels[i]))]
                cells += [repr(float(p)) for p in proba[i]]
                fh.write(",".join(cells) + "\n")
    return labels, proba
