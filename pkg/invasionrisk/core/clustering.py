"""Density-based climate classes (HDBSCAN over exact pairwise distances).

The procedure follows the usual five steps: core distances, the
mutual-reachability graph, its minimum spanning tree, the condensed cluster
tree and excess-of-mass selection. Everything is O(n^2) and dense; port
registries are small enough for that.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from invasionrisk.core.climate import FeatureVector, feature_matrix
from invasionrisk.utils.exceptions import (
    AlignmentError,
    ConfigurationError,
    EmptyDatasetError,
)

logger = logging.getLogger(__name__)

NOISE = -1


@dataclass(frozen=True)
class ClusterParams:
    min_cluster_size: int = 5
    min_samples: int = 5

    def __post_init__(self) -> None:
        if self.min_cluster_size < 2:
            raise ConfigurationError(
                f"min_cluster_size must be >= 2, got {self.min_cluster_size}"
            )
        if self.min_samples < 1:
            raise ConfigurationError(
                f"min_samples must be >= 1, got {self.min_samples}"
            )


@dataclass(frozen=True)
class ClusterLabeling:
    """Cluster label per port (-1 is noise) and stability per cluster id."""

    port_ids: Tuple[str, ...]
    labels: Tuple[int, ...]
    stabilities: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.port_ids) != len(self.labels):
            raise AlignmentError(
                f"{len(self.port_ids)} ports but {len(self.labels)} labels"
            )
        if len(set(self.port_ids)) != len(self.port_ids):
            raise AlignmentError("Duplicate port_id in labeling")

    @property
    def n_clusters(self) -> int:
        return len({label for label in self.labels if label != NOISE})

    def as_dict(self) -> Dict[str, int]:
        return dict(zip(self.port_ids, self.labels))

    def label_of(self, port_id: str) -> int:
        try:
            return self.labels[self.port_ids.index(port_id)]
        except ValueError:
            raise AlignmentError(f"No cluster label for port {port_id!r}")

    def same_cluster(self, a: str, b: str) -> bool:
        """True when both ports share a non-noise cluster."""
        la = self.label_of(a)
        return la != NOISE and la == self.label_of(b)

    def aligned_labels(self, port_ids: Sequence[str]) -> np.ndarray:
        lookup = self.as_dict()
        missing = [p for p in port_ids if p not in lookup]
        if missing:
            raise AlignmentError(f"No cluster label for ports {missing}")
        return np.array([lookup[p] for p in port_ids], dtype=int)


@dataclass(frozen=True)
class CondensedTree:
    """Rows (parent, child, lambda_val, child_size); points are ids < n."""

    parent: np.ndarray
    child: np.ndarray
    lambda_val: np.ndarray
    child_size: np.ndarray
    n_points: int

    @property
    def root(self) -> int:
        return self.n_points


class _UnionFind:
    def __init__(self, size: int):
        self.parent = np.arange(size)

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return int(root)


def core_distances(points: np.ndarray, k: int) -> np.ndarray:
    """Distance to the k-th nearest neighbour, self excluded.

    When k reaches the number of points the farthest neighbour is used.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise EmptyDatasetError("Cannot compute core distances of no points")
    return _core_from_distances(cdist(points, points), k)


def _core_from_distances(distances: np.ndarray, k: int) -> np.ndarray:
    n = distances.shape[0]
    if n == 1:
        return np.zeros(1)
    ordered = np.sort(distances, axis=1)
    return ordered[:, min(k, n - 1)].copy()


def mutual_reachability(d_ij: float, core_i: float, core_j: float) -> float:
    return max(core_i, core_j, d_ij)


def mutual_reachability_matrix(distances: np.ndarray, core: np.ndarray) -> np.ndarray:
    return np.maximum(distances, np.maximum.outer(core, core))


def minimum_spanning_tree(weights: np.ndarray) -> np.ndarray:
    """Dense Prim over a full weight matrix.

    Returns an (n-1, 3) array of (smaller index, larger index, weight) sorted
    by weight, then by the two indices.
    """
    weights = np.asarray(weights, dtype=float)
    n = weights.shape[0]
    if n < 2:
        return np.empty((0, 3))

    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    attach = np.zeros(n, dtype=int)
    edges = np.empty((n - 1, 3))
    current = 0
    for step in range(n - 1):
        in_tree[current] = True
        row = weights[current]
        closer = ~in_tree & (row < best)
        best[closer] = row[closer]
        attach[closer] = current
        candidates = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidates))
        a, b = sorted((int(attach[nxt]), nxt))
        edges[step] = (a, b, best[nxt])
        current = nxt

    order = np.lexsort((edges[:, 1], edges[:, 0], edges[:, 2]))
    return edges[order]


def single_linkage(mst: np.ndarray, n: int) -> np.ndarray:
    """Merge tree (left, right, distance, size) from sorted MST edges.

    Merged clusters get ids n, n+1, ...; the last row creates the root.
    """
    uf = _UnionFind(2 * n - 1)
    sizes = np.concatenate([np.ones(n, dtype=int), np.zeros(n - 1, dtype=int)])
    linkage = np.empty((max(n - 1, 0), 4))
    next_label = n
    for row, (a, b, weight) in enumerate(mst):
        ra, rb = uf.find(int(a)), uf.find(int(b))
        size = sizes[ra] + sizes[rb]
        linkage[row] = (ra, rb, weight, size)
        uf.parent[ra] = next_label
        uf.parent[rb] = next_label
        sizes[next_label] = size
        next_label += 1
    return linkage


def _lambdas(distances: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lam = np.where(distances > 0, 1.0 / np.where(distances > 0, distances, 1.0), np.inf)
    finite = lam[np.isfinite(lam)]
    ceiling = float(finite.max()) if finite.size else 1.0
    return np.where(np.isfinite(lam), lam, ceiling)


def condense_tree(linkage: np.ndarray, min_cluster_size: int) -> CondensedTree:
    """Collapse the merge tree into clusters of at least min_cluster_size."""
    n = linkage.shape[0] + 1
    root = 2 * n - 2
    lam_of = _lambdas(linkage[:, 2]) if n > 1 else np.empty(0)

    def children(node: int) -> Tuple[int, int]:
        left, right = linkage[node - n, :2]
        return int(left), int(right)

    def size_of(node: int) -> int:
        return 1 if node < n else int(linkage[node - n, 3])

    def leaves(node: int) -> List[int]:
        stack, out = [node], []
        while stack:
            current = stack.pop()
            if current < n:
                out.append(current)
            else:
                stack.extend(children(current))
        return sorted(out)

    rows: List[Tuple[int, int, float, int]] = []
    # Single point
    if n == 1:
        rows.append((1, 0, 1.0, 1))
        return _tree_from_rows(rows, 1)

    # Walk the merge tree from the root down
    relabel = {root: n}
    next_label = n + 1
    queue = [root]
    while queue:
        node = queue.pop(0)
        parent = relabel[node]
        lam = float(lam_of[node - n])
        left, right = children(node)
        left_size, right_size = size_of(left), size_of(right)

        # True split into two child clusters
        if left_size >= min_cluster_size and right_size >= min_cluster_size:
            for sub, sub_size in ((left, left_size), (right, right_size)):
                relabel[sub] = next_label
                rows.append((parent, next_label, lam, sub_size))
                next_label += 1
                queue.append(sub)
            continue

        # Parent carries on; small sides fall out as points
        for sub, sub_size in ((left, left_size), (right, right_size)):
            if sub_size >= min_cluster_size:
                relabel[sub] = parent
                queue.append(sub)
            else:
                rows.extend((parent, point, lam, 1) for point in leaves(sub))

    return _tree_from_rows(rows, n)


def _tree_from_rows(rows: List[Tuple[int, int, float, int]], n: int) -> CondensedTree:
    array = np.array(rows, dtype=float).reshape(-1, 4)
    return CondensedTree(
        parent=array[:, 0].astype(int),
        child=array[:, 1].astype(int),
        lambda_val=array[:, 2],
        child_size=array[:, 3].astype(int),
        n_points=n,
    )


def compute_stability(tree: CondensedTree) -> Dict[int, float]:
    """Excess of mass: sum over members of (lambda_leave - lambda_birth)."""
    clusters = sorted(set(tree.parent.tolist()))
    birth = {c: 0.0 for c in clusters}
    for child, lam in zip(tree.child, tree.lambda_val):
        if child in birth:
            birth[int(child)] = float(lam)
    stability = {c: 0.0 for c in clusters}
    for parent, lam, size in zip(tree.parent, tree.lambda_val, tree.child_size):
        stability[int(parent)] += (float(lam) - birth[int(parent)]) * int(size)
    return stability


def select_clusters(tree: CondensedTree, stability: Mapping[int, float]) -> List[int]:
    """Excess-of-mass selection; the root is never selected."""
    stability = dict(stability)
    cluster_children: Dict[int, List[int]] = {c: [] for c in stability}
    for parent, child, size in zip(tree.parent, tree.child, tree.child_size):
        if size > 1 and int(child) in cluster_children:
            cluster_children[int(parent)].append(int(child))

    selected = {c: True for c in stability if c != tree.root}

    def descendants(node: int) -> List[int]:
        out, stack = [], list(cluster_children[node])
        while stack:
            current = stack.pop()
            out.append(current)
            stack.extend(cluster_children[current])
        return out

    for node in sorted(selected, reverse=True):
        subtree = sum(stability[c] for c in cluster_children[node])
        if cluster_children[node] and subtree > stability[node]:
            selected[node] = False
            stability[node] = subtree
        else:
            for sub in descendants(node):
                selected[sub] = False

    return sorted(c for c, keep in selected.items() if keep)


def _label_points(tree: CondensedTree, chosen: Sequence[int]) -> np.ndarray:
    parent_of = {int(c): int(p) for p, c in zip(tree.parent, tree.child)}
    chosen_set = set(chosen)
    labels = np.full(tree.n_points, NOISE, dtype=int)
    for point in range(tree.n_points):
        node = parent_of.get(point)
        while node is not None:
            if node in chosen_set:
                labels[point] = node
                break
            node = parent_of.get(node)
    return labels


def cluster_points(
    points: np.ndarray, params: ClusterParams
) -> Tuple[np.ndarray, Dict[int, float]]:
    """Labels (1..K by first member, -1 noise) and stabilities for a point matrix."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise EmptyDatasetError("Cannot cluster an empty dataset")
    n = points.shape[0]

    distances = cdist(points, points)
    core = _core_from_distances(distances, params.min_samples)
    reach = mutual_reachability_matrix(distances, core)
    mst = minimum_spanning_tree(reach)
    tree = condense_tree(single_linkage(mst, n), params.min_cluster_size)
    stability = compute_stability(tree)
    chosen = select_clusters(tree, stability)
    raw = _label_points(tree, chosen)

    mapping: Dict[int, int] = {}
    for label in raw:
        if label != NOISE and label not in mapping:
            mapping[int(label)] = len(mapping) + 1
    labels = np.array([mapping.get(int(x), NOISE) for x in raw], dtype=int)
    stabilities = {mapping[c]: max(0.0, stability[c]) for c in chosen if c in mapping}
    return labels, stabilities


def cluster(
    features: Sequence[FeatureVector], params: Optional[ClusterParams] = None
) -> ClusterLabeling:
    """Cluster standardized port feature vectors."""
    params = params or ClusterParams()
    if not features:
        raise EmptyDatasetError("Cannot cluster an empty dataset")
    if params.min_samples > len(features):
        logger.warning(
            f"min_samples={params.min_samples} exceeds {len(features)} ports; "
            "expect every port to be labeled noise"
        )
    labels, stabilities = cluster_points(feature_matrix(features), params)
    labeling = ClusterLabeling(
        port_ids=tuple(f.port_id for f in features),
        labels=tuple(int(x) for x in labels),
        stabilities=stabilities,
    )
    noise = sum(1 for x in labeling.labels if x == NOISE)
    logger.info(
        f"Found {labeling.n_clusters} climate clusters, {noise} noise ports"
    )
    return labeling
