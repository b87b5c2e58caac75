"""Backdoor poisoning detection by clustering last-hidden-layer activations.

Training samples are segmented by the model's *predicted* class, each
segment's activations are PCA-reduced and 2-means clustered, and a cluster
analyzer decides which clusters look poisonous.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.cluster import KMeans
from sklearn.decomposition import PCA
from sklearn.metrics import silhouette_score

from .data import Dataset
from .exceptions import InvalidConfigError, InvalidInputError, ShapeError
from .utils import derive_seed

_ANALYZERS = ("relative_size", "distance", "silhouette")


@dataclass
class ActivationClusteringConfig:
    reduced_dims: int = 10
    num_clusters: int = 2
    analyzer: str = "relative_size"
    size_threshold: float = 0.35
    silhouette_threshold: float = 0.1
    seed: int = 0
    kmeans_restarts: int = 10

    def __post_init__(self) -> None:
        if self.num_clusters != 2:
            raise InvalidConfigError("activation clustering uses exactly 2 clusters")
        if self.analyzer not in _ANALYZERS:
            raise InvalidConfigError(f"analyzer must be one of {_ANALYZERS}")
        if not 0.0 < self.size_threshold < 1.0:
            raise InvalidConfigError("size_threshold must be in (0, 1)")
        if self.reduced_dims < 1 or self.kmeans_restarts < 1:
            raise InvalidConfigError("reduced_dims and kmeans_restarts must be >= 1")


@dataclass
class ClassClusterReport:
    """Clustering evidence for one predicted-class segment."""

    predicted_class: int
    sample_indices: np.ndarray
    cluster_ids: np.ndarray
    cluster_sizes: tuple[int, int]
    flagged_clusters: list[int]
    evidence: dict = field(default_factory=dict)
    skipped: bool = False


@dataclass
class PoisonVerdict:
    """Per-sample suspicion flags plus the per-class analyzer evidence."""

    suspected: np.ndarray
    cluster_ids: np.ndarray
    predicted_classes: np.ndarray
    class_reports: list[ClassClusterReport]

    def to_table(self) -> str:
        lines = ["index\tpredicted_class\tcluster_id\tsuspected"]
        for i in range(self.suspected.size):
            lines.append(
                f"{i}\t{self.predicted_classes[i]}\t{self.cluster_ids[i]}\t"
                f"{int(self.suspected[i])}"
            )
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "num_samples": int(self.suspected.size),
            "num_suspected": int(self.suspected.sum()),
            "classes": [
                {
                    "predicted_class": r.predicted_class,
                    "segment_size": int(r.sample_indices.size),
                    "cluster_sizes": list(r.cluster_sizes),
                    "flagged_clusters": r.flagged_clusters,
                    "skipped": r.skipped,
                    "evidence": {k: _as_plain(v) for k, v in r.evidence.items()},
                }
                for r in self.class_reports
            ],
        }


def _as_plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def collect_segmented_activations(classifier, dataset: Dataset) -> dict[int, np.ndarray]:
    """Last-hidden-layer activations segmented by the model's predictions.

    Segmentation uses predicted classes, not the (possibly poisoned) labels.
    Classes nobody is predicted into simply yield empty segments.
    """
    if classifier.num_hidden_layers < 1:
        raise InvalidInputError("activation clustering needs at least one hidden layer")
    predicted = classifier.predict_classes(dataset.x)
    activations = classifier.get_activations(dataset.x, classifier.num_hidden_layers - 1)
    segments: dict[int, np.ndarray] = {}
    for cls in range(classifier.nb_classes):
        idx = np.nonzero(predicted == cls)[0]
        segments[cls] = idx
    return {"indices": segments, "activations": activations, "predicted": predicted}


def cluster_class_activations(acts: np.ndarray, config: ActivationClusteringConfig):
    """PCA-reduce a segment and 2-means cluster it with seeded restarts.

    Returns (cluster ids, centroids in the raw activation space, reduced
    coordinates, per-restart inertias). The restart with the lowest inertia
    wins, making the k-means objective auditable.
    """
    acts = np.asarray(acts, dtype=np.float64)
    if acts.ndim != 2 or acts.shape[0] < 2:
        raise InvalidInputError("need at least 2 samples to cluster a segment")
    if np.ptp(acts, axis=0).max() == 0.0:
        # all rows identical: clustering is vacuous but ids stay defined
        ids = np.zeros(acts.shape[0], dtype=int)
        centroids = np.stack([acts[0], acts[0]])
        return ids, centroids, np.zeros((acts.shape[0], 1)), [0.0]
    n_comp = min(config.reduced_dims, acts.shape[0], acts.shape[1])
    reduced = PCA(n_components=n_comp, svd_solver="full").fit_transform(acts)
    best = None
    inertias = []
    for restart in range(config.kmeans_restarts):
        km = KMeans(
            n_clusters=config.num_clusters,
            n_init=1,
            init="k-means++",
            random_state=derive_seed(config.seed, "kmeans", restart) % (2**32),
        ).fit(reduced)
        inertias.append(float(km.inertia_))
        if best is None or km.inertia_ < best.inertia_:
            best = km
    ids = best.labels_.astype(int)
    centroids = np.stack(
        [
            acts[ids == c].mean(axis=0) if np.any(ids == c) else np.zeros(acts.shape[1])
            for c in range(config.num_clusters)
        ]
    )
    return ids, centroids, reduced, inertias


def analyze_clusters(
    ids: np.ndarray,
    reduced: np.ndarray,
    centroids: np.ndarray,
    config: ActivationClusteringConfig,
    own_class_centroid: np.ndarray | None = None,
    other_class_centroids: dict[int, np.ndarray] | None = None,
):
    """Decide which of the two clusters look poisonous.

    relative_size flags the smaller cluster when its fraction falls below
    size_threshold; distance flags a cluster whose centroid sits closer to
    another class's activation centroid than to its own class's; silhouette
    flags the smaller cluster when the segment separates cleanly (mean
    silhouette above the threshold).
    """
    ids = np.asarray(ids)
    sizes = np.array([(ids == c).sum() for c in range(2)])
    evidence: dict = {"cluster_sizes": sizes.copy()}
    if sizes.min() == 0:
        evidence["degenerate"] = "one cluster is empty; nothing flagged"
        return [], evidence
    fractions = sizes / sizes.sum()
    smaller = int(np.argmin(fractions))
    flagged: list[int] = []
    if config.analyzer == "relative_size":
        evidence["smaller_fraction"] = float(fractions[smaller])
        if fractions[smaller] < config.size_threshold:
            flagged = [smaller]
    elif config.analyzer == "distance":
        if own_class_centroid is None or not other_class_centroids:
            raise InvalidInputError("distance analyzer needs class centroids")
        dists = {}
        for c in range(2):
            d_own = float(np.linalg.norm(centroids[c] - own_class_centroid))
            d_other = min(
                float(np.linalg.norm(centroids[c] - mu))
                for mu in other_class_centroids.values()
            )
            dists[c] = (d_own, d_other)
            if d_other < d_own:
                flagged.append(c)
        evidence["centroid_distances"] = {
            str(c): {"own_class": d[0], "nearest_other_class": d[1]}
            for c, d in dists.items()
        }
    else:  # silhouette
        score = float(silhouette_score(reduced, ids))
        evidence["silhouette"] = score
        if score > config.silhouette_threshold:
            flagged = [smaller]
    return flagged, evidence


def scan_for_poison(classifier, dataset: Dataset, config: ActivationClusteringConfig) -> PoisonVerdict:
    """Run the full segmentation -> clustering -> analysis pipeline."""
    seg = collect_segmented_activations(classifier, dataset)
    activations = seg["activations"]
    predicted = seg["predicted"]
    n = dataset.n
    suspected = np.zeros(n, dtype=bool)
    cluster_ids = np.full(n, -1, dtype=int)
    class_centroids = {
        cls: activations[idx].mean(axis=0)
        for cls, idx in seg["indices"].items()
        if idx.size > 0
    }
    reports: list[ClassClusterReport] = []
    for cls, idx in seg["indices"].items():
        if idx.size < 2:
            reports.append(
                ClassClusterReport(
                    predicted_class=cls,
                    sample_indices=idx,
                    cluster_ids=np.full(idx.size, -1, dtype=int),
                    cluster_sizes=(int(idx.size), 0),
                    flagged_clusters=[],
                    evidence={"skipped": "segment has fewer than 2 samples"},
                    skipped=True,
                )
            )
            continue
        ids, centroids, reduced, inertias = cluster_class_activations(
            activations[idx], config
        )
        others = {c: mu for c, mu in class_centroids.items() if c != cls}
        flagged, evidence = analyze_clusters(
            ids, reduced, centroids, config,
            own_class_centroid=class_centroids.get(cls),
            other_class_centroids=others,
        )
        evidence["kmeans_inertias"] = inertias
        cluster_ids[idx] = ids
        for c in flagged:
            suspected[idx[ids == c]] = True
        reports.append(
            ClassClusterReport(
                predicted_class=cls,
                sample_indices=idx,
                cluster_ids=ids,
                cluster_sizes=(int((ids == 0).sum()), int((ids == 1).sum())),
                flagged_clusters=list(flagged),
                evidence=evidence,
            )
        )
    return PoisonVerdict(
        suspected=suspected,
        cluster_ids=cluster_ids,
        predicted_classes=predicted,
        class_reports=reports,
    )


def evaluate_verdict(suspected: np.ndarray, is_poison: np.ndarray, predicted_classes=None) -> dict:
    """Confusion summary of a verdict against ground truth flags."""
    suspected = np.asarray(suspected, dtype=bool)
    is_poison = np.asarray(is_poison, dtype=bool)
    if suspected.shape != is_poison.shape:
        raise ShapeError("verdict and ground truth lengths differ")

    def counts(mask):
        tp = int(np.sum(suspected[mask] & is_poison[mask]))
        fp = int(np.sum(suspected[mask] & ~is_poison[mask]))
        tn = int(np.sum(~suspected[mask] & ~is_poison[mask]))
        fn = int(np.sum(~suspected[mask] & is_poison[mask]))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return {
            "tp": tp, "fp": fp, "tn": tn, "fn": fn,
            "precision": precision, "recall": recall, "f1": f1,
        }

    out = {"overall": counts(np.ones_like(suspected, dtype=bool))}
    if predicted_classes is not None:
        predicted_classes = np.asarray(predicted_classes)
        out["per_class"] = {
            int(c): counts(predicted_classes == c) for c in np.unique(predicted_classes)
        }
    return out
