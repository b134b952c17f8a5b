"""Labeled-graph bundles for node classification.

A bundle is a directory of four files (formats documented in the README):

  graph.edgelist   edge-list file as written by :mod:`ndcn.graphgen`
  features.csv     n rows of D comma-separated floats
  labels.csv       n integer class ids, one per line
  split.json       {"train": [...], "val": [...], "test": [...]} node ids;
                   an optional "counts" object declares expected sizes

``gen_sbm_bundle`` synthesizes a planted-partition stand-in for citation
data at desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .graphgen import Graph, SeedLike, _rng, gen_random_partition, read_edgelist, write_edgelist

__all__ = ["LabeledGraphBundle", "load_bundle", "save_bundle", "gen_sbm_bundle"]


@dataclass(frozen=True, eq=False)
class LabeledGraphBundle:
    graph: Graph
    features: np.ndarray  # (n, D) float
    labels: np.ndarray  # (n,) int in [0, C)
    train_mask: np.ndarray  # (n,) bool, pairwise disjoint with val/test
    val_mask: np.ndarray
    test_mask: np.ndarray

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1

    def validate(self) -> None:
        n = self.graph.n
        if self.features.shape[0] != n:
            raise FormatError(f"features have {self.features.shape[0]} rows, graph has {n} nodes")
        if not np.all(np.isfinite(self.features)):
            raise FormatError("features contain non-finite values")
        for name in ("labels", "train_mask", "val_mask", "test_mask"):
            if getattr(self, name).shape != (n,):
                raise FormatError(f"{name} must have shape ({n},)")
        overlap = (
            (self.train_mask & self.val_mask)
            | (self.train_mask & self.test_mask)
            | (self.val_mask & self.test_mask)
        )
        if overlap.any():
            raise FormatError("train/val/test masks overlap")
        masked = self.train_mask | self.val_mask | self.test_mask
        if np.any(self.labels[masked] < 0):
            raise FormatError("masked nodes must carry valid labels")

    def one_hot_labels(self) -> np.ndarray:
        c = self.num_classes
        out = np.zeros((self.graph.n, c))
        valid = self.labels >= 0
        out[np.flatnonzero(valid), self.labels[valid]] = 1.0
        return out


def _mask_from_ids(n: int, ids, name: str) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= n):
        raise FormatError(f"{name} split contains out-of-range node ids")
    if np.unique(ids).size != ids.size:
        raise FormatError(f"{name} split contains duplicate node ids")
    mask = np.zeros(n, dtype=bool)
    mask[ids] = True
    return mask


def load_bundle(path: str | Path) -> LabeledGraphBundle:
    path = Path(path)
    for fname in ("graph.edgelist", "features.csv", "labels.csv", "split.json"):
        if not (path / fname).exists():
            raise FileNotFoundError(path / fname)
    with open(path / "graph.edgelist") as fh:
        graph = read_edgelist(fh)
    features = np.loadtxt(path / "features.csv", delimiter=",", ndmin=2)
    labels = np.loadtxt(path / "labels.csv", dtype=np.int64, ndmin=1)
    with open(path / "split.json") as fh:
        try:
            split = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"split.json is not valid JSON: {exc}") from exc
    for key in ("train", "val", "test"):
        if key not in split:
            raise FormatError(f"split.json missing key {key!r}")
    counts = split.get("counts", {})
    for key, expected in counts.items():
        if key in ("train", "val", "test") and len(split[key]) != expected:
            raise FormatError(
                f"declared {key} count {expected} does not match {len(split[key])} ids"
            )
    bundle = LabeledGraphBundle(
        graph=graph,
        features=features,
        labels=labels,
        train_mask=_mask_from_ids(graph.n, split["train"], "train"),
        val_mask=_mask_from_ids(graph.n, split["val"], "val"),
        test_mask=_mask_from_ids(graph.n, split["test"], "test"),
    )
    bundle.validate()
    return bundle


def save_bundle(bundle: LabeledGraphBundle, path: str | Path) -> None:
    bundle.validate()
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "graph.edgelist", "w") as fh:
        write_edgelist(bundle.graph, fh)
    # 17 significant digits: float64 round-trips bitwise through text
    np.savetxt(path / "features.csv", bundle.features, delimiter=",", fmt="%.17g")
    np.savetxt(path / "labels.csv", bundle.labels, fmt="%d")
    split = {
        "train": np.flatnonzero(bundle.train_mask).tolist(),
        "val": np.flatnonzero(bundle.val_mask).tolist(),
        "test": np.flatnonzero(bundle.test_mask).tolist(),
    }
    split["counts"] = {k: len(v) for k, v in split.items()}
    with open(path / "split.json", "w") as fh:
        json.dump(split, fh, sort_keys=True, indent=1)


def gen_sbm_bundle(
    n: int,
    blocks: int,
    p_in: float,
    p_out: float,
    feature_noise: float,
    label_fraction: float,
    seed: SeedLike = 0,
) -> LabeledGraphBundle:
    """Planted-partition bundle: features are one-hot block indicators plus
    Gaussian noise; the train mask samples ``label_fraction`` of each block,
    remaining nodes split evenly into val and test."""
    if blocks < 2 or n < 2 * blocks:
        raise ValueError(f"need >= 2 blocks with >= 2 nodes each, got n={n}, blocks={blocks}")
    if not 0.0 < label_fraction < 1.0:
        raise ValueError(f"label_fraction must lie in (0, 1), got {label_fraction}")
    if feature_noise < 0:
        raise ValueError("feature_noise must be >= 0")
    base = n // blocks
    sizes = [base + (1 if i < n % blocks else 0) for i in range(blocks)]
    rng = _rng(seed)
    graph, membership = gen_random_partition(sizes, p_in, p_out, seed=rng)
    features = np.zeros((n, blocks))
    features[np.arange(n), membership] = 1.0
    features = features + feature_noise * rng.normal(size=features.shape)

    train_ids = []
    for b in range(blocks):
        ids = np.flatnonzero(membership == b)
        want = int(round(label_fraction * ids.size))
        if want < 1:
            raise ValueError(f"block {b} too small to stratify at fraction {label_fraction}")
        train_ids.append(rng.choice(ids, size=want, replace=False))
    train_ids = np.sort(np.concatenate(train_ids))
    rest = np.setdiff1d(np.arange(n), train_ids)
    rest = rng.permutation(rest)
    half = rest.size // 2
    bundle = LabeledGraphBundle(
        graph=graph,
        features=features,
        labels=membership.astype(np.int64),
        train_mask=_mask_from_ids(n, train_ids, "train"),
        val_mask=_mask_from_ids(n, np.sort(rest[:half]), "val"),
        test_mask=_mask_from_ids(n, np.sort(rest[half:]), "test"),
    )
    bundle.validate()
    return bundle
