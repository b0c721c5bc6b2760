"""K-modes clustering of categorical records, with density-and-distance
initialization and automatic cluster-count selection.

Every tie (nearest mode, majority value, best restart, best k) breaks to the
lowest index or code, so runs are bitwise reproducible for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import EmptyLogError, NoValidKError
from .preprocess import RecordSet
from .seeds import derive_seed, substream


def hamming_dissimilarity(r1: np.ndarray, r2: np.ndarray) -> int:
    """Number of positions in which two code vectors differ."""
    a = np.asarray(r1)
    b = np.asarray(r2)
    if a.shape != b.shape:
        raise ValueError(f"record lengths differ: {a.shape} vs {b.shape}")
    return int((a != b).sum())


@dataclass(frozen=True)
class KSearchConfig:
    k_min: int = 10
    k_max: int = 20
    n_restarts: int = 3
    max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError("need 1 <= k_min <= k_max")
        if self.n_restarts < 1:
            raise ValueError("need at least one restart")


@dataclass(frozen=True)
class ClusterModel:
    """A fitted k-modes model over a RecordSet."""

    k: int
    modes: np.ndarray
    labels: np.ndarray
    cost: int
    iterations: int
    seed: int
    converged: bool
    cost_history: tuple[int, ...] = ()

    def cluster_sizes(self, weights: np.ndarray) -> np.ndarray:
        return np.bincount(self.labels, weights=weights, minlength=self.k)

    def nonempty_clusters(self) -> np.ndarray:
        return np.unique(self.labels)


def cao_init(records: RecordSet, k: int) -> np.ndarray:
    """Pick k initial modes by weighted density and distance.

    The first center is the densest record; each next one maximizes
    density * (min distance to the centers chosen so far).  Ties break to
    the record earliest in canonical order.
    """
    n = len(records)
    if k > n:
        raise NoValidKError(f"k={k} exceeds the {n} distinct records")
    X, w = records.codes, records.weights
    dens = kernels.density(X, w)
    chosen = [int(np.argmax(dens))]
    min_dist = kernels.dissim_matrix(X, X[chosen[-1]][None, :])[:, 0].astype(np.float64)
    while len(chosen) < k:
        score = dens * min_dist
        chosen.append(int(np.argmax(score)))
        d_new = kernels.dissim_matrix(X, X[chosen[-1]][None, :])[:, 0]
        np.minimum(min_dist, d_new, out=min_dist)
    return np.ascontiguousarray(X[chosen], dtype=np.int32)


def _random_init(records: RecordSet, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = np.sort(rng.choice(len(records), size=k, replace=False))
    return np.ascontiguousarray(records.codes[idx], dtype=np.int32)


def _repair_empty(X, w, modes, labels, dists) -> bool:
    """Re-seed empty clusters with the records farthest from their modes."""
    k = modes.shape[0]
    present = np.bincount(labels, minlength=k) > 0
    empties = np.flatnonzero(~present)
    if len(empties) == 0:
        return False
    order = np.lexsort((np.arange(len(X)), -dists))
    used = 0
    for c in empties:
        if used >= len(order):
            break
        modes[c] = X[order[used]]
        used += 1
    return True


def kmodes_fit(records: RecordSet, k: int, config: KSearchConfig) -> ClusterModel:
    """Fit k-modes with n_restarts initializations, returning the lowest-cost model.

    Restart 0 uses the density/distance initialization; later restarts draw
    distinct records at random, so repeated starts actually explore
    different local optima.  Within a fit, assignment and mode-update
    alternate until labels stabilize or max_iter is hit; the cost after each
    full cycle is non-increasing.
    """
    if len(records) == 0:
        raise EmptyLogError("cannot cluster an empty record set")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > len(records):
        raise NoValidKError(f"k={k} exceeds the {len(records)} distinct records")

    X, w = records.codes, records.weights
    n_cats = records.encoder.n_categories()
    best: ClusterModel | None = None

    for restart in range(config.n_restarts):
        if restart == 0:
            modes = cao_init(records, k)
        else:
            rng = substream(config.seed, "kmodes-restart", k, restart)
            modes = _random_init(records, k, rng)
        labels = None
        history: list[int] = []
        converged = False
        iterations = 0
        for _ in range(config.max_iter):
            iterations += 1
            new_labels, dists = kernels.assign(X, modes)
            if _repair_empty(X, w, modes, new_labels, dists):
                new_labels, dists = kernels.assign(X, modes)
            modes = kernels.update_modes(X, w, new_labels, modes, n_cats)
            history.append(kernels.member_cost(X, w, new_labels, modes))
            if labels is not None and np.array_equal(new_labels, labels):
                converged = True
                labels = new_labels
                break
            labels = new_labels
        final_labels, final_dists = kernels.assign(X, modes)
        cost = int((final_dists * w).sum())
        model = ClusterModel(
            k=k,
            modes=np.ascontiguousarray(modes, dtype=np.int32),
            labels=final_labels,
            cost=cost,
            iterations=iterations,
            seed=derive_seed(config.seed, "kmodes-restart", k, restart),
            converged=converged,
            cost_history=tuple(history),
        )
        if best is None or model.cost < best.cost:
            best = model
    return best


def silhouette_score(records: RecordSet, labels: np.ndarray, k: int) -> float:
    """Weighted mean silhouette under Hamming dissimilarity.

    Equivalent to computing the plain silhouette on the log with duplicates
    expanded.  Records in singleton (weight-1) clusters score 0; returns
    -1.0 if fewer than two clusters are populated.
    """
    X, w = records.codes, records.weights
    cluster_w = np.bincount(labels, weights=w, minlength=k)
    populated = np.flatnonzero(cluster_w > 0)
    if len(populated) < 2:
        return -1.0
    S = kernels.cluster_dist_sums(X, w, labels, k)
    own_w = cluster_w[labels]
    a = np.zeros(len(X))
    multi = own_w > 1
    a[multi] = S[np.arange(len(X)), labels][multi] / (own_w[multi] - 1)
    other = S / np.where(cluster_w > 0, cluster_w, np.inf)[None, :]
    other[np.arange(len(X)), labels] = np.inf
    other[:, cluster_w == 0] = np.inf
    b = other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.zeros(len(X))
    ok = multi & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    return float((s * w).sum() / w.sum())


@dataclass(frozen=True)
class KSearchResult:
    k: int
    model: ClusterModel
    scores: dict[int, float] = field(default_factory=dict)
    costs: dict[int, int] = field(default_factory=dict)
    criterion: str = "silhouette"


def select_k(records: RecordSet, config: KSearchConfig,
             quality_fn=None) -> KSearchResult:
    """Pick the cluster count in [k_min, k_max] with the best score.

    The default score is the mean silhouette (k=1 is degenerate there and is
    skipped); pass quality_fn(records, model) -> float to rank candidates by
    any other criterion, e.g. cross-validated policy quality.  Ties break to
    the smaller k.  The per-k total cost is reported as the elbow statistic.

    Falls back to k=1 when the range allows it and no multi-cluster k is
    feasible (e.g. a single distinct record); raises NoValidKError when
    nothing in the range is feasible.
    """
    if len(records) == 0:
        raise EmptyLogError("cannot select k for an empty record set")
    n = len(records)
    lo = config.k_min if quality_fn is not None else max(config.k_min, 2)
    candidates = [k for k in range(lo, config.k_max + 1) if k <= n]
    if not candidates:
        if config.k_min == 1 and n >= 1:
            model = kmodes_fit(records, 1, config)
            return KSearchResult(1, model, {}, {1: model.cost}, "fallback")
        raise NoValidKError(
            f"no feasible k in [{config.k_min}, {config.k_max}] for "
            f"{n} distinct records"
        )
    scores: dict[int, float] = {}
    costs: dict[int, int] = {}
    models: dict[int, ClusterModel] = {}
    for k in candidates:
        model = kmodes_fit(records, k, config)
        models[k] = model
        costs[k] = model.cost
        if quality_fn is not None:
            scores[k] = float(quality_fn(records, model))
        else:
            scores[k] = silhouette_score(records, model.labels, k)
    best_k = max(candidates, key=lambda k: (scores[k], -k))
    criterion = "quality" if quality_fn is not None else "silhouette"
    return KSearchResult(best_k, models[best_k], scores, costs, criterion)
