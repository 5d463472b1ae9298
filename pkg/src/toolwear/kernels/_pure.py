"""Pure-Python/numpy kernels: tree induction, vote counting, coalition values.

This is the fallback used when the compiled extension is unavailable, and the
behavioural reference the extension is tested against: for identical inputs
both backends must produce bit-identical outputs. To keep that guarantee,
split quality is scored with exact int64 arithmetic followed by a single
correctly-rounded double division, thresholds use one fixed expression, and
all randomness comes from the shared splitmix64 streams in toolwear.rng.
"""

from __future__ import annotations

import numpy as np

from ..rng import Rng, substream

__all__ = ["build_forest", "predict_votes", "coalition_values"]


def _best_split(X, y, idx, candidates, min_samples_leaf):
    """Best (score, feature, threshold) over candidate features, or None.

    Split quality is the within-node weighted Gini impurity rescaled by n/2:
        score = (nl0*nl1*nr + nr0*nr1*nl) / (nl*nr)
    which preserves the ordering of candidate splits. Numerator and
    denominator are exact in int64 (node sizes are far below 2**17), so the
    double quotient is correctly rounded and reproducible.
    """
    n = idx.shape[0]
    total1 = int(y[idx].sum())
    best_score = np.inf
    best = None
    for f in candidates:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        if sv[0] == sv[-1]:
            continue
        sy = y[idx][order]
        jump = np.nonzero(sv[:-1] < sv[1:])[0]
        nl = jump + 1
        ok = (nl >= min_samples_leaf) & (n - nl >= min_samples_leaf)
        jump = jump[ok]
        nl = nl[ok]
        if jump.size == 0:
            continue
        cum1 = np.cumsum(sy)
        nl1 = cum1[jump]
        nl0 = nl - nl1
        nr = n - nl
        nr1 = total1 - nl1
        nr0 = nr - nr1
        num = nl0 * nl1 * nr + nr0 * nr1 * nl
        den = nl * nr
        score = num / den
        j = int(np.argmin(score))  # first minimum = lowest threshold
        if score[j] < best_score:
            lo = float(sv[jump[j]])
            hi = float(sv[jump[j] + 1])
            thr = 0.5 * (lo + hi)
            if thr == hi:  # midpoint rounded up onto the right value
                thr = lo
            best_score = float(score[j])
            best = (f, thr)
    return best


def _build_tree(X, y, idx, rng, max_depth, min_samples_leaf, k, nodes):
    """Grow one tree depth-first (left before right), appending preorder
    node records to `nodes`. Returns the node id of the subtree root."""
    m = X.shape[1]

    def grow(idx, depth):
        nid = len(nodes)
        n = idx.shape[0]
        c1 = int(y[idx].sum())
        c0 = n - c1
        nodes.append([-1, 0.0, -1, -1, c0, c1])
        if c0 == 0 or c1 == 0:
            return nid
        if 0 <= max_depth <= depth:
            return nid
        if n < 2 * min_samples_leaf:
            return nid
        candidates = rng.sample_indices(m, k)
        best = _best_split(X, y, idx, candidates, min_samples_leaf)
        if best is None:
            return nid
        f, thr = best
        go_left = X[idx, f] <= thr
        left_id = grow(idx[go_left], depth + 1)
        right_id = grow(idx[~go_left], depth + 1)
        nodes[nid] = [f, thr, left_id, right_id, c0, c1]
        return nid

    return grow(idx, 0)


def build_forest(X, y, n_trees, max_depth, min_samples_leaf,
                 features_per_split, bootstrap, seed):
    """Train a bagged forest of CART trees on binary labels.

    Returns (feature, threshold, left, right, count0, count1, roots) flat
    arrays over all trees; `feature == -1` marks a leaf. Tree t uses the RNG
    substream (seed, t): bootstrap indices first, then one feature-subset
    draw per split attempt, in depth-first order.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n = X.shape[0]
    nodes: list[list] = []
    roots = np.empty(n_trees, dtype=np.int32)
    for t in range(n_trees):
        rng = Rng(substream(seed, t))
        if bootstrap:
            idx = np.array([rng.below(n) for _ in range(n)], dtype=np.int64)
        else:
            idx = np.arange(n, dtype=np.int64)
        roots[t] = _build_tree(X, y, idx, rng, max_depth,
                               min_samples_leaf, features_per_split, nodes)
    feature = np.array([r[0] for r in nodes], dtype=np.int32)
    threshold = np.array([r[1] for r in nodes], dtype=np.float64)
    left = np.array([r[2] for r in nodes], dtype=np.int32)
    right = np.array([r[3] for r in nodes], dtype=np.int32)
    count0 = np.array([r[4] for r in nodes], dtype=np.int64)
    count1 = np.array([r[5] for r in nodes], dtype=np.int64)
    return feature, threshold, left, right, count0, count1, roots


def predict_votes(feature, threshold, left, right, vote, roots, X):
    """Class-1 vote count per row of X, summed over all trees."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    votes = np.zeros(n, dtype=np.int64)
    if n == 0:
        return votes
    rows = np.arange(n)
    for root in roots:
        cur = np.full(n, root, dtype=np.int64)
        while True:
            f = feature[cur]
            live = f >= 0
            if not live.any():
                break
            r = rows[live]
            c = cur[live]
            go_left = X[r, f[live]] <= threshold[c]
            cur[r] = np.where(go_left, left[c], right[c])
        votes += vote[cur]
    return votes


def coalition_values(feature, threshold, left, right, vote, roots,
                     x, background, masks):
    """Mean class-1 vote fraction per coalition mask.

    For each mask, every background row is overwritten with x on the mask's
    feature positions and pushed through the forest; the value is the total
    vote count divided by (rows * trees), one exact int sum and one double
    division, matching the compiled kernel.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    background = np.ascontiguousarray(background, dtype=np.float64)
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    m = x.shape[0]
    b = background.shape[0]
    kcount = masks.shape[0]
    if kcount == 0:
        return np.empty(0, dtype=np.float64)
    bits = ((masks[:, None] >> np.arange(m)[None, :]) & 1).astype(bool)
    hybrids = np.where(bits[:, None, :], x[None, None, :],
                       background[None, :, :])
    hybrids = np.ascontiguousarray(hybrids.reshape(kcount * b, m))
    votes = predict_votes(feature, threshold, left, right, vote, roots,
                          hybrids)
    sums = votes.reshape(kcount, b).sum(axis=1)
    return sums / float(b * roots.shape[0])
