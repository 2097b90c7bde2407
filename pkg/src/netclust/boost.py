"""Gradient-boosted decision trees for multi-class classification.

Second-order boosting on the softmax log-loss: each round fits one
regression tree per class to the per-row gradients/hessians, with the
regularized split gain

    1/2 * [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma

and leaf weight -G/(H+lambda) scaled by the learning rate. Split search is
exact greedy over sorted unique thresholds. Rows with a missing feature
value are tried on both sides of every candidate split and the better side
is stored as that split's default direction, so scoring tolerates missing
cells natively.

Trees grow depth-first to max_depth accepting any positive-gain split,
then are backward-pruned bottom-up: an internal node whose realized gain
falls below gamma collapses into a leaf.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DataError
from .labeling import PseudoLabeledDataset
from .preprocess import FeatureMatrix


@dataclass(frozen=True)
class BoostParams:
    n_rounds: int = 100
    learning_rate: float = 0.3
    max_depth: int = 6
    lam: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.lam < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise ValueError("lam, gamma, min_child_weight must be >= 0")


class Split(NamedTuple):
    feature: int
    threshold: float
    default_left: bool
    gain: float


@dataclass
class Tree:
    """Flat node array; node 0 is the root.

    Internal nodes: feature, threshold, default_left, left, right, gain,
    weight (the leaf weight the node would have if collapsed).
    Leaves: weight only.
    """

    nodes: list[dict] = field(default_factory=list)

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        """Route every row of X to a leaf and return the leaf weights."""
        n = X.shape[0]
        out = np.empty(n, dtype=np.float64)
        stack = [(0, np.arange(n))]
        while stack:
            nid, idx = stack.pop()
            node = self.nodes[nid]
            if "feature" not in node:
                out[idx] = node["weight"]
                continue
            col = X[idx, node["feature"]]
            miss = np.isnan(col)
            go_left = np.where(miss, node["default_left"], col < node["threshold"])
            stack.append((node["left"], idx[go_left]))
            stack.append((node["right"], idx[~go_left]))
        return out

    def max_depth(self) -> int:
        def depth(nid):
            node = self.nodes[nid]
            if "feature" not in node:
                return 0
            return 1 + max(depth(node["left"]), depth(node["right"]))

        return depth(0)


@dataclass
class BoostedModel:
    n_classes: int
    rounds: list[list[Tree]]  # rounds[r][c] = tree for class c at round r
    base_score: float
    params: BoostParams
    feature_names: list[str]
    train_logloss: list[float] = field(default_factory=list)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def softmax_grad_hess(logits, true_class: int):
    """Per-row gradient and hessian of the softmax log-loss.

    g_c = p_c - [c == true_class], h_c = p_c * (1 - p_c).
    """
    logits = np.asarray(logits, dtype=np.float64)
    C = logits.shape[-1]
    if not 0 <= true_class < C:
        raise DataError(f"true_class {true_class} out of range for {C} classes")
    p = softmax(logits)
    g = p.copy()
    g[true_class] -= 1.0
    h = p * (1.0 - p)
    return g, h


def _batch_grad_hess(logits: np.ndarray, y: np.ndarray):
    p = softmax(logits)
    g = p.copy()
    g[np.arange(len(y)), y] -= 1.0
    h = p * (1.0 - p)
    return g, h


def find_best_split(
    X: np.ndarray,
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    params: BoostParams,
) -> Optional[Split]:
    """Exact greedy split search over all features and thresholds.

    Thresholds are midpoints between consecutive distinct non-missing
    values; missing rows are tried on both sides and the better side wins
    (tie -> left). Returns None when no candidate has positive gain after
    the gamma penalty or every candidate violates min_child_weight.
    Scanning is in ascending feature then threshold order with strict
    improvement, so the result is deterministic.
    """
    best = _scan_splits(X, rows, g, h, params)
    if best is None or best.gain <= 0.0:
        return None
    return best


def _scan_splits(
    X: np.ndarray,
    rows: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    params: BoostParams,
) -> Optional[Split]:
    """Best candidate split regardless of gain sign (None only when no
    candidate satisfies min_child_weight)."""
    rows = np.asarray(rows)
    if len(rows) < 2:
        return None
    lam, mcw = params.lam, params.min_child_weight
    g_node = g[rows]
    h_node = h[rows]
    G_tot = float(g_node.sum())
    H_tot = float(h_node.sum())
    parent_score = G_tot * G_tot / (H_tot + lam)

    best: Optional[Split] = None
    for j in range(X.shape[1]):
        col = X[rows, j]
        miss = np.isnan(col)
        if miss.all():
            continue
        known = ~miss
        order = np.argsort(col[known], kind="stable")
        v = col[known][order]
        gk = np.cumsum(g_node[known][order])
        hk = np.cumsum(h_node[known][order])
        cut = np.flatnonzero(v[:-1] < v[1:])
        if len(cut) == 0:
            continue
        thresholds = 0.5 * (v[cut] + v[cut + 1])
        G_miss = float(g_node[miss].sum()) if miss.any() else 0.0
        H_miss = float(h_node[miss].sum()) if miss.any() else 0.0

        GLk, HLk = gk[cut], hk[cut]
        # scenario: missing routed left / right
        gains = np.full((2, len(cut)), -np.inf)
        for s, (Gm_l, Hm_l) in enumerate(((G_miss, H_miss), (0.0, 0.0))):
            GL = GLk + Gm_l
            HL = HLk + Hm_l
            GR = G_tot - GL
            HR = H_tot - HL
            ok = (HL >= mcw) & (HR >= mcw)
            gain = 0.5 * (
                GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent_score
            ) - params.gamma
            gains[s] = np.where(ok, gain, -np.inf)
        per_cut = np.maximum(gains[0], gains[1])
        i = int(np.argmax(per_cut))
        if not np.isfinite(per_cut[i]):
            continue
        if best is None or per_cut[i] > best.gain:
            best = Split(
                feature=j,
                threshold=float(thresholds[i]),
                default_left=bool(gains[0, i] >= gains[1, i]),
                gain=float(per_cut[i]),
            )
    return best


def grow_tree(X: np.ndarray, rows: np.ndarray, g, h, params: BoostParams) -> Tree:
    """Grow a tree to max_depth (gamma treated as 0 during growth), then
    backward-prune splits whose realized gain is below gamma."""
    grow_params = BoostParams(
        n_rounds=params.n_rounds,
        learning_rate=params.learning_rate,
        max_depth=params.max_depth,
        lam=params.lam,
        gamma=0.0,
        min_child_weight=params.min_child_weight,
        seed=params.seed,
    )
    lam, eta = params.lam, params.learning_rate
    nodes: list[dict] = []

    def leaf_weight(idx) -> float:
        G = float(g[idx].sum())
        H = float(h[idx].sum())
        return -G / (H + lam) * eta

    def build(idx: np.ndarray, depth: int) -> int:
        nid = len(nodes)
        nodes.append({"weight": leaf_weight(idx)})
        if depth >= params.max_depth or len(idx) < 2:
            return nid
        split = _scan_splits(X, idx, g, h, grow_params)
        if split is None:
            return nid
        if split.gain <= 0.0:
            # a gain of exactly zero with non-constant gradients is a
            # symmetric cancellation (XOR-like); splitting costs nothing
            # and lets deeper levels separate the classes
            g_idx = g[idx]
            if split.gain < 0.0 or float(g_idx.max()) == float(g_idx.min()):
                return nid
        col = X[idx, split.feature]
        miss = np.isnan(col)
        go_left = np.where(miss, split.default_left, col < split.threshold)
        left_idx, right_idx = idx[go_left], idx[~go_left]
        node = nodes[nid]
        node.update(
            feature=split.feature,
            threshold=split.threshold,
            default_left=split.default_left,
            gain=split.gain,
        )
        node["left"] = build(left_idx, depth + 1)
        node["right"] = build(right_idx, depth + 1)
        return nid

    build(np.asarray(rows), 0)

    def prune(nid: int) -> None:
        node = nodes[nid]
        if "feature" not in node:
            return
        prune(node["left"])
        prune(node["right"])
        left_leaf = "feature" not in nodes[node["left"]]
        right_leaf = "feature" not in nodes[node["right"]]
        if left_leaf and right_leaf and node["gain"] < params.gamma:
            for key in ("feature", "threshold", "default_left", "gain", "left", "right"):
                del node[key]

    prune(0)

    # repack to drop orphaned nodes
    packed: list[dict] = []

    def copy(nid: int) -> int:
        node = dict(nodes[nid])
        new_id = len(packed)
        packed.append(node)
        if "feature" in node:
            node["left"] = copy(node["left"])
            node["right"] = copy(node["right"])
        return new_id

    copy(0)
    return Tree(nodes=packed)


def _multiclass_logloss(logits: np.ndarray, y: np.ndarray) -> float:
    p = softmax(logits)
    eps = 1e-15
    return float(-np.mean(np.log(np.clip(p[np.arange(len(y)), y], eps, 1.0))))


def fit(ds: PseudoLabeledDataset, params: BoostParams | None = None) -> BoostedModel:
    """Train one tree per class per round on softmax gradients."""
    params = params or BoostParams()
    X = ds.features.values
    y = ds.labels
    if len(np.unique(y)) < 2:
        raise DataError("training data contains a single class; need >= 2")
    if len(y) < 2:
        raise DataError("need at least 2 training rows")
    C = ds.k
    n = len(y)
    logits = np.full((n, C), 0.0, dtype=np.float64)
    all_rows = np.arange(n)
    rounds: list[list[Tree]] = []
    losses = [_multiclass_logloss(logits, y)]
    for _ in range(params.n_rounds):
        G, H = _batch_grad_hess(logits, y)
        group = []
        for c in range(C):
            tree = grow_tree(X, all_rows, G[:, c], H[:, c], params)
            logits[:, c] += tree.leaf_values(X)
            group.append(tree)
        rounds.append(group)
        losses.append(_multiclass_logloss(logits, y))
    return BoostedModel(
        n_classes=C,
        rounds=rounds,
        base_score=0.0,
        params=params,
        feature_names=list(ds.features.feature_names),
        train_logloss=losses,
    )


def _matrix_for(model: BoostedModel, m) -> np.ndarray:
    if isinstance(m, FeatureMatrix):
        if m.feature_names != model.feature_names:
            raise DataError("feature names do not match the trained model")
        return m.values
    X = np.asarray(m, dtype=np.float64)
    if X.shape[1] != len(model.feature_names):
        raise DataError(
            f"expected {len(model.feature_names)} features, got {X.shape[1]}"
        )
    return X


def predict_proba(model: BoostedModel, m) -> np.ndarray:
    """n x C class probabilities (softmax of summed leaf weights)."""
    X = _matrix_for(model, m)
    logits = np.full((X.shape[0], model.n_classes), model.base_score)
    for group in model.rounds:
        for c, tree in enumerate(group):
            logits[:, c] += tree.leaf_values(X)
    return softmax(logits)


def predict(model: BoostedModel, m) -> np.ndarray:
    """Argmax class per row; ties break to the lowest class index."""
    return np.argmax(predict_proba(model, m), axis=1)
