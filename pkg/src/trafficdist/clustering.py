"""Bag similarity by density clustering.

The two bags are combined (duplicates kept), every occurrence is encoded as
its sentence TF vector, and DBSCAN groups the vectors under cosine distance.
A bag pair is similar when each cluster's fraction of reference texts stays
close to the overall mixing ratio; the score is the inverse of the
cluster-size-weighted average deviation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import Bag, Sentence
from .distributional import TermVector

__all__ = [
    "NOISE",
    "ClusterAssignment",
    "dbscan",
    "clus_score",
    "DEFAULT_EPS",
    "DEFAULT_MIN_PTS",
    "CLUS_EPS",
]

NOISE = -1
DEFAULT_EPS = 0.4
DEFAULT_MIN_PTS = 2
# Caps the score when every cluster matches the mixing ratio exactly.
CLUS_EPS = 1e-6


@dataclass
class ClusterAssignment:
    """Per-occurrence cluster labels (NOISE = -1) plus the member index
    lists per cluster id."""

    labels: list[int]
    clusters: dict[int, list[int]]


def _dense_unit_rows(points: Sequence[TermVector]) -> np.ndarray:
    vocab = sorted({t for p in points for t in p.weights})
    index = {t: i for i, t in enumerate(vocab)}
    mat = np.zeros((len(points), max(len(vocab), 1)))
    for i, p in enumerate(points):
        for t, w in p.weights.items():
            mat[i, index[t]] = w
        mat[i] /= p.norm
    return mat


def dbscan(points: Sequence[TermVector], eps: float, min_pts: int) -> ClusterAssignment:
    """DBSCAN under cosine distance (1 - cosine similarity).

    Semantics are pinned for reproducibility: the eps-neighborhood includes
    the point itself; clusters are the connected components of core points;
    border points join the lowest cluster id among their core neighbors;
    everything else is noise. Cluster ids are assigned by first core point
    in input order, so labels are deterministic given the input order.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    n = len(points)
    unit = _dense_unit_rows(points)
    dist = 1.0 - unit @ unit.T
    adjacent = dist <= eps
    core = adjacent.sum(axis=1) >= min_pts

    labels = [NOISE] * n
    next_id = 0
    for start in range(n):
        if not core[start] or labels[start] != NOISE:
            continue
        cluster_id = next_id
        next_id += 1
        stack = [start]
        labels[start] = cluster_id
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(adjacent[i]):
                j = int(j)
                if core[j] and labels[j] == NOISE:
                    labels[j] = cluster_id
                    stack.append(j)
    for i in range(n):
        if labels[i] != NOISE or not adjacent[i].any():
            continue
        core_neighbors = [int(j) for j in np.flatnonzero(adjacent[i]) if core[j]]
        if core_neighbors:
            labels[i] = min(labels[j] for j in core_neighbors)

    clusters: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        if lab != NOISE:
            clusters.setdefault(lab, []).append(i)
    return ClusterAssignment(labels=labels, clusters=clusters)


def sentence_tf(sentence: Sentence) -> TermVector:
    """Per-sentence TF encoding used as the default cluster encoder."""
    return TermVector.from_weights(
        {t: float(c) for t, c in Counter(sentence.tokens).items()}
    )


def clus_score(
    g: Bag,
    r: Bag,
    encoder: str | Callable[[Sentence], TermVector] = "tf",
    eps: float = DEFAULT_EPS,
    min_pts: int = DEFAULT_MIN_PTS,
) -> float:
    """Clustering-based bag similarity.

    Combines the bags keeping duplicates, clusters the encoded occurrences,
    and scores the inverse of the weighted purity deviation: for each
    cluster C, d(C) = |p(B) - p(C)| with p(B) the reference fraction of the
    combined bag and p(C) that of the cluster, weighted by |C|/|B|. Noise
    points count as singleton clusters so garbage cannot be ignored.
    """
    if encoder == "tf":
        encode = sentence_tf
    elif callable(encoder):
        encode = encoder
    else:
        raise ValueError(f"unknown encoder {encoder!r}")

    occurrences = [(s, False) for s in g.items] + [(s, True) for s in r.items]
    occurrences.sort(key=lambda pair: (pair[0].sort_key(), pair[1]))
    points = [encode(s) for s, _ in occurrences]
    assignment = dbscan(points, eps=eps, min_pts=min_pts)

    groups = dict(assignment.clusters)
    next_id = max(groups, default=-1) + 1
    for i, lab in enumerate(assignment.labels):
        if lab == NOISE:
            groups[next_id] = [i]
            next_id += 1

    total = len(occurrences)
    p_b = len(r) / total
    weighted = 0.0
    for members in groups.values():
        from_r = sum(1 for i in members if occurrences[i][1])
        p_c = from_r / len(members)
        weighted += abs(p_b - p_c) * len(members) / total
    return 1.0 / (weighted + CLUS_EPS)
