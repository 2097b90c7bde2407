"""Independent oracles used by the test suite.

These deliberately avoid the library's own code paths: naive loops,
exhaustive enumeration, and incremental set-partition search.
"""

import math

import numpy as np


def exhaustive_partition_optimum(X, k):
    """Minimum inertia over all partitions of rows into <= k nonempty
    blocks. Incremental enumeration; exact up to float addition order."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    sq = [float(np.dot(x, x)) for x in X]
    total_sq = math.fsum(sq)
    best = [math.inf]
    sums = [[0.0] * d for _ in range(k)]
    counts = [0] * k

    def contrib():
        # inertia = sum ||x||^2 - sum_b ||S_b||^2 / n_b
        acc = 0.0
        for b in range(k):
            if counts[b]:
                s = sums[b]
                acc += sum(v * v for v in s) / counts[b]
        return total_sq - acc

    def rec(i, used):
        if i == n:
            val = contrib()
            if val < best[0]:
                best[0] = val
            return
        x = X[i]
        limit = min(used + 1, k)
        for b in range(limit):
            counts[b] += 1
            s = sums[b]
            for j in range(d):
                s[j] += x[j]
            rec(i + 1, max(used, b + 1))
            counts[b] -= 1
            for j in range(d):
                s[j] -= x[j]

    rec(0, 0)
    return best[0]


def nearest_centroid_scan(X, centroids):
    """Naive nearest-centroid labels with lowest-index tie-breaking."""
    labels = []
    for x in X:
        best_d, best_i = math.inf, -1
        for i, c in enumerate(centroids):
            d = math.fsum((a - b) ** 2 for a, b in zip(x, c))
            if d < best_d:
                best_d, best_i = d, i
        labels.append(best_i)
    return np.array(labels)


def naive_cluster_means(X, labels, k):
    out = np.zeros((k, X.shape[1]))
    for c in range(k):
        members = [x for x, l in zip(X, labels) if l == c]
        if members:
            for j in range(X.shape[1]):
                out[c, j] = math.fsum(m[j] for m in members) / len(members)
    return out


def brute_force_split(X, rows, g, h, lam, gamma, min_child_weight):
    """Exhaustive enumeration over (feature, midpoint threshold, missing
    direction) with naive Python sums. Tie rules: ascending feature, then
    ascending threshold position, strict improvement; missing-direction
    tie prefers left. Returns (feature, threshold, default_left, gain) or
    None when no candidate has positive gain."""
    rows = list(rows)
    G = sum(float(g[i]) for i in rows)
    H = sum(float(h[i]) for i in rows)
    parent = G * G / (H + lam)
    best = None
    n_features = X.shape[1]
    for j in range(n_features):
        known = [(float(X[i, j]), i) for i in rows if not math.isnan(X[i, j])]
        missing = [i for i in rows if math.isnan(X[i, j])]
        known.sort(key=lambda t: t[0])
        values = sorted({v for v, _ in known})
        Gm = sum(float(g[i]) for i in missing)
        Hm = sum(float(h[i]) for i in missing)
        for a, b in zip(values[:-1], values[1:]):
            t = 0.5 * (a + b)
            left = [i for v, i in known if v < t]
            right = [i for v, i in known if v >= t]
            GLk = sum(float(g[i]) for i in left)
            HLk = sum(float(h[i]) for i in left)
            GRk = sum(float(g[i]) for i in right)
            HRk = sum(float(h[i]) for i in right)
            cand = []
            for default_left in (True, False):
                GL = GLk + (Gm if default_left else 0.0)
                HL = HLk + (Hm if default_left else 0.0)
                GR = GRk + (0.0 if default_left else Gm)
                HR = HRk + (0.0 if default_left else Hm)
                if HL < min_child_weight or HR < min_child_weight:
                    continue
                gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent) - gamma
                cand.append((gain, default_left))
            if not cand:
                continue
            gain, default_left = max(cand, key=lambda t: (t[0], t[1]))
            if best is None or gain > best[3]:
                best = (j, t, default_left, gain)
    if best is None or best[3] <= 0.0:
        return None
    return best


def pair_count_auc(scores, y_true, positive_class):
    """Mann-Whitney concordance AUC: ties counted one half."""
    pos = [s for s, y in zip(scores, y_true) if y == positive_class]
    neg = [s for s, y in zip(scores, y_true) if y != positive_class]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def tally_confusion(y_true, y_pred, n_classes):
    counts = [[0] * n_classes for _ in range(n_classes)]
    for t, p in zip(y_true, y_pred):
        counts[t][p] += 1
    return np.array(counts)


def manual_tree_route(tree_nodes, row):
    """Walk a serialized tree for one row, honoring default directions."""
    nid = 0
    while True:
        node = tree_nodes[nid]
        if "feature" not in node:
            return node["weight"]
        v = row[node["feature"]]
        if math.isnan(v):
            go_left = node["default_left"]
        else:
            go_left = v < node["threshold"]
        nid = node["left"] if go_left else node["right"]


def best_label_mapping_f1(y_true, y_pred, n_classes):
    """Macro F1 after optimally matching predicted cluster indices to
    ground-truth classes (Hungarian assignment on the agreement matrix)."""
    from scipy.optimize import linear_sum_assignment

    agree = np.zeros((n_classes, n_classes))
    for t, p in zip(y_true, y_pred):
        agree[p, t] += 1
    rows, cols = linear_sum_assignment(-agree)
    mapping = {int(r): int(c) for r, c in zip(rows, cols)}
    mapped = np.array([mapping[int(p)] for p in y_pred])
    f1s = []
    for c in range(n_classes):
        tp = int(np.sum((mapped == c) & (np.asarray(y_true) == c)))
        fp = int(np.sum((mapped == c) & (np.asarray(y_true) != c)))
        fn = int(np.sum((mapped != c) & (np.asarray(y_true) == c)))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return float(np.mean(f1s))
