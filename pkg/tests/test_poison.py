import numpy as np
import pytest

from advkit import Dataset, MlpArchitecture, MlpClassifier, TrainConfig
from advkit.exceptions import InvalidConfigError, InvalidInputError, ShapeError
from advkit.harness import inject_backdoor, synth_bars8x8
from advkit.poison import (
    ActivationClusteringConfig,
    analyze_clusters,
    cluster_class_activations,
    collect_segmented_activations,
    evaluate_verdict,
    scan_for_poison,
)
from advkit.utils import one_hot


@pytest.fixture(scope="module")
def poisoned_run():
    train = synth_bars8x8(1500, seed=11)
    poisoned, is_poison = inject_backdoor(
        train, [45, 54, 63], 1.0, 0.10, target_class=1, seed=13
    )
    model = MlpClassifier(MlpArchitecture(64, (32,), 2), rng_seed=21)
    model.fit(poisoned.x, poisoned.y, TrainConfig(32, 30, 0.5, rng_seed=22))
    return model, poisoned, is_poison


class TestSegmentation:
    def test_segments_partition_dataset(self, poisoned_run):
        model, poisoned, _ = poisoned_run
        seg = collect_segmented_activations(model, poisoned)
        total = sum(idx.size for idx in seg["indices"].values())
        assert total == poisoned.n
        assert seg["activations"].shape == (poisoned.n, 32)

    def test_uses_predicted_not_true_labels(self, poisoned_run):
        model, poisoned, _ = poisoned_run
        seg1 = collect_segmented_activations(model, poisoned)
        relabeled = Dataset(
            poisoned.x, one_hot(1 - poisoned.labels(), 2), image_shape=poisoned.image_shape
        )
        seg2 = collect_segmented_activations(model, relabeled)
        for cls in seg1["indices"]:
            np.testing.assert_array_equal(seg1["indices"][cls], seg2["indices"][cls])

    def test_target_segment_contains_poison_and_genuine(self, poisoned_run):
        model, poisoned, is_poison = poisoned_run
        seg = collect_segmented_activations(model, poisoned)
        idx1 = seg["indices"][1]
        assert is_poison[idx1].any() and (~is_poison[idx1]).any()

    def test_no_hidden_layer_rejected(self):
        model = MlpClassifier(MlpArchitecture(4, (), 2), rng_seed=0)
        data = Dataset(np.random.default_rng(0).random((10, 4)), one_hot(np.zeros(10, int), 2))
        with pytest.raises(InvalidInputError):
            collect_segmented_activations(model, data)


class TestClustering:
    def test_separated_blobs_recovered_exactly(self):
        rng = np.random.default_rng(1)
        a = rng.normal(0.0, 0.1, size=(60, 12))
        b = rng.normal(5.0, 0.1, size=(40, 12))
        acts = np.concatenate([a, b])
        truth = np.r_[np.zeros(60, int), np.ones(40, int)]
        ids, centroids, reduced, inertias = cluster_class_activations(
            acts, ActivationClusteringConfig(seed=3)
        )
        agreement = max(np.mean(ids == truth), np.mean(ids == 1 - truth))
        assert agreement == 1.0
        assert np.all(np.isfinite(centroids))
        assert min(inertias) == pytest.approx(sorted(inertias)[0])

    def test_duplicate_rows_still_defined(self):
        acts = np.ones((20, 5))
        ids, centroids, _, _ = cluster_class_activations(
            acts, ActivationClusteringConfig(seed=4)
        )
        assert set(np.unique(ids)) <= {0, 1}
        assert np.all(np.isfinite(centroids))

    def test_chosen_restart_has_minimal_inertia(self):
        rng = np.random.default_rng(2)
        acts = rng.normal(size=(80, 10))
        _, _, _, inertias = cluster_class_activations(
            acts, ActivationClusteringConfig(seed=5)
        )
        assert len(inertias) == 10

    def test_rotation_invariance_up_to_swap(self):
        rng = np.random.default_rng(6)
        acts = np.concatenate(
            [rng.normal(0, 0.5, (50, 8)), rng.normal(4, 0.5, (50, 8))]
        )
        cfg = ActivationClusteringConfig(seed=7)
        ids1, _, _, _ = cluster_class_activations(acts, cfg)
        q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
        ids2, _, _, _ = cluster_class_activations(acts @ q, cfg)
        agreement = max(np.mean(ids1 == ids2), np.mean(ids1 == 1 - ids2))
        assert agreement == 1.0

    def test_tiny_segment_rejected(self):
        with pytest.raises(InvalidInputError):
            cluster_class_activations(np.ones((1, 4)), ActivationClusteringConfig())


class TestAnalyzers:
    def _ids(self, n0, n1):
        return np.r_[np.zeros(n0, int), np.ones(n1, int)]

    def test_relative_size_flags_small_cluster(self):
        cfg = ActivationClusteringConfig(analyzer="relative_size", size_threshold=0.35)
        reduced = np.random.default_rng(0).normal(size=(100, 3))
        flagged, evidence = analyze_clusters(
            self._ids(95, 5), reduced, np.zeros((2, 3)), cfg
        )
        assert flagged == [1]
        assert evidence["smaller_fraction"] == pytest.approx(0.05)

    def test_relative_size_balanced_no_flag(self):
        cfg = ActivationClusteringConfig(analyzer="relative_size")
        reduced = np.random.default_rng(1).normal(size=(100, 3))
        flagged, _ = analyze_clusters(self._ids(50, 50), reduced, np.zeros((2, 3)), cfg)
        assert flagged == []

    def test_distance_flags_transplanted_cluster(self):
        cfg = ActivationClusteringConfig(analyzer="distance")
        own = np.zeros(3)
        other = {1: np.full(3, 10.0)}
        centroids = np.stack([np.zeros(3), np.full(3, 9.5)])  # cluster 1 sits at class 1
        flagged, evidence = analyze_clusters(
            self._ids(80, 20), np.zeros((100, 3)), centroids, cfg,
            own_class_centroid=own, other_class_centroids=other,
        )
        assert flagged == [1]
        assert "centroid_distances" in evidence

    def test_silhouette_mixed_clusters_no_flag(self):
        cfg = ActivationClusteringConfig(analyzer="silhouette")
        rng = np.random.default_rng(2)
        reduced = rng.normal(size=(200, 4))
        ids = rng.integers(0, 2, 200)  # random split of one blob: silhouette ~ 0
        flagged, evidence = analyze_clusters(ids, reduced, np.zeros((2, 4)), cfg)
        assert flagged == []
        assert abs(evidence["silhouette"]) < 0.1

    def test_silhouette_separated_flags_smaller(self):
        cfg = ActivationClusteringConfig(analyzer="silhouette")
        reduced = np.concatenate(
            [np.random.default_rng(3).normal(0, 0.1, (80, 2)),
             np.random.default_rng(4).normal(6, 0.1, (20, 2))]
        )
        flagged, _ = analyze_clusters(self._ids(80, 20), reduced, np.zeros((2, 2)), cfg)
        assert flagged == [1]

    def test_empty_cluster_no_flag(self):
        cfg = ActivationClusteringConfig(analyzer="relative_size")
        flagged, evidence = analyze_clusters(
            np.zeros(10, int), np.zeros((10, 2)), np.zeros((2, 2)), cfg
        )
        assert flagged == []
        assert "degenerate" in evidence


class TestVerdictEvaluation:
    def test_perfect_verdict(self):
        truth = np.array([True, False, True, False])
        out = evaluate_verdict(truth, truth)
        assert out["overall"]["f1"] == 1.0

    def test_all_negative_has_zero_recall(self):
        truth = np.array([True, False, True])
        out = evaluate_verdict(np.zeros(3, bool), truth)
        assert out["overall"]["recall"] == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        suspected = rng.random(50) < 0.3
        truth = rng.random(50) < 0.2
        perm = rng.permutation(50)
        assert (
            evaluate_verdict(suspected, truth)["overall"]
            == evaluate_verdict(suspected[perm], truth[perm])["overall"]
        )

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            evaluate_verdict(np.zeros(3, bool), np.zeros(4, bool))


class TestScan:
    def test_end_to_end_verdict_quality(self, poisoned_run):
        model, poisoned, is_poison = poisoned_run
        cfg = ActivationClusteringConfig(analyzer="relative_size", seed=5)
        verdict = scan_for_poison(model, poisoned, cfg)
        assert verdict.suspected.shape == (poisoned.n,)
        evaluation = evaluate_verdict(
            verdict.suspected, is_poison, verdict.predicted_classes
        )
        assert evaluation["overall"]["f1"] >= 0.85

    def test_verdict_table_format(self, poisoned_run):
        model, poisoned, _ = poisoned_run
        cfg = ActivationClusteringConfig(seed=5)
        verdict = scan_for_poison(model, poisoned, cfg)
        lines = verdict.to_table().strip().split("\n")
        assert lines[0] == "index\tpredicted_class\tcluster_id\tsuspected"
        assert len(lines) == poisoned.n + 1
        summary = verdict.summary()
        assert summary["num_samples"] == poisoned.n

    def test_config_validation(self):
        with pytest.raises(InvalidConfigError):
            ActivationClusteringConfig(num_clusters=3)
        with pytest.raises(InvalidConfigError):
            ActivationClusteringConfig(analyzer="nonsense")
