import json

import numpy as np
import pytest

from ndcn.datasets import LabeledGraphBundle, gen_sbm_bundle, load_bundle, save_bundle
from ndcn.errors import FormatError
from ndcn.graphgen import Graph


def toy_bundle():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    rng = np.random.default_rng(0)
    return LabeledGraphBundle(
        graph=g,
        features=rng.normal(size=(4, 3)),
        labels=np.array([0, 0, 1, 1]),
        train_mask=np.array([True, False, False, True]),
        val_mask=np.array([False, True, False, False]),
        test_mask=np.array([False, False, True, False]),
    )


class TestBundleIO:
    def test_round_trip_bitwise(self, tmp_path):
        b = toy_bundle()
        save_bundle(b, tmp_path / "toy")
        back = load_bundle(tmp_path / "toy")
        assert np.array_equal(back.graph.edges, b.graph.edges)
        assert np.array_equal(back.features, b.features)  # %.17g is exact for float64
        assert np.array_equal(back.labels, b.labels)
        for name in ("train_mask", "val_mask", "test_mask"):
            assert np.array_equal(getattr(back, name), getattr(b, name))

    def test_missing_file(self, tmp_path):
        save_bundle(toy_bundle(), tmp_path / "toy")
        (tmp_path / "toy" / "labels.csv").unlink()
        with pytest.raises(FileNotFoundError):
            load_bundle(tmp_path / "toy")

    def test_declared_count_mismatch(self, tmp_path):
        save_bundle(toy_bundle(), tmp_path / "toy")
        split = json.loads((tmp_path / "toy" / "split.json").read_text())
        split["counts"]["train"] = 99
        (tmp_path / "toy" / "split.json").write_text(json.dumps(split))
        with pytest.raises(FormatError):
            load_bundle(tmp_path / "toy")

    def test_overlapping_masks(self, tmp_path):
        save_bundle(toy_bundle(), tmp_path / "toy")
        split = json.loads((tmp_path / "toy" / "split.json").read_text())
        split["val"] = split["train"]
        del split["counts"]
        (tmp_path / "toy" / "split.json").write_text(json.dumps(split))
        with pytest.raises(FormatError):
            load_bundle(tmp_path / "toy")

    def test_inconsistent_row_count(self, tmp_path):
        save_bundle(toy_bundle(), tmp_path / "toy")
        feats = (tmp_path / "toy" / "features.csv").read_text().strip().split("\n")
        (tmp_path / "toy" / "features.csv").write_text("\n".join(feats[:-1]) + "\n")
        with pytest.raises(FormatError):
            load_bundle(tmp_path / "toy")


class TestSbmBundle:
    def test_noise_free_features_identify_blocks(self):
        b = gen_sbm_bundle(40, 2, 0.2, 0.02, feature_noise=0.0, label_fraction=0.2, seed=0)
        assert np.array_equal(b.features.argmax(axis=1), b.labels)

    def test_equal_probabilities_remove_structure(self):
        # p_in == p_out: within and across densities agree up to noise
        b = gen_sbm_bundle(200, 2, 0.08, 0.08, feature_noise=0.5, label_fraction=0.1, seed=1)
        edges = b.graph.edges
        same = (b.labels[edges[:, 0]] == b.labels[edges[:, 1]]).sum()
        within_pairs = 2 * (100 * 99 // 2)
        across_pairs = 100 * 100
        within_rate = same / within_pairs
        across_rate = (len(edges) - same) / across_pairs
        assert abs(within_rate - 0.08) < 0.02
        assert abs(across_rate - 0.08) < 0.02

    def test_default_desk_bundle_validates(self):
        b = gen_sbm_bundle(200, 2, 0.1, 0.01, feature_noise=1.0, label_fraction=0.1, seed=2)
        b.validate()
        assert b.train_mask.sum() == 20
        assert abs(int(b.val_mask.sum()) - int(b.test_mask.sum())) <= 1
        # stratified: both blocks carry train labels
        assert len(np.unique(b.labels[b.train_mask])) == 2

    def test_stratification_failure(self):
        with pytest.raises(ValueError):
            gen_sbm_bundle(20, 2, 0.3, 0.05, feature_noise=0.1, label_fraction=0.01, seed=0)

    def test_deterministic(self):
        a = gen_sbm_bundle(60, 3, 0.2, 0.02, 0.5, 0.2, seed=9)
        b = gen_sbm_bundle(60, 3, 0.2, 0.02, 0.5, 0.2, seed=9)
        assert np.array_equal(a.graph.edges, b.graph.edges)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.train_mask, b.train_mask)
