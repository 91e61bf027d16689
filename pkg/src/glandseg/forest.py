"""From-scratch random forest for binary nucleus classification, with a
deterministic binary model format.

Determinism contract: fitting the same data with the same seed produces the
same trees (each tree draws from its own counter-based RNG stream keyed by
(seed, tree_index)), and saving the same forest twice produces identical
bytes.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import (
    ModelChecksumError,
    ModelFormatError,
    ModelVersionError,
    TruncatedModelError,
)

_MAGIC = b"GSRF"
_VERSION = 1
_HEADER = struct.Struct("<4sHQ")
_CRC = struct.Struct("<I")
_MIN_FILE = _HEADER.size + _CRC.size


@dataclass
class _Tree:
    """Flat preorder node arrays; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def _entropy(c0: np.ndarray, c1: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) of two-class count vectors, elementwise."""
    n = c0 + c1
    h = np.zeros(np.shape(n), dtype=np.float64)
    for c in (c0, c1):
        frac = np.divide(c, n, out=np.zeros_like(h), where=n > 0)
        pos = frac > 0
        h -= np.where(pos, frac * np.log(frac, where=pos, out=np.zeros_like(h)), 0.0)
    return h


def _best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray,
                min_leaf_size: int) -> tuple[int, float] | None:
    """Best (feature, threshold) by information gain over the candidate
    features, or None when no split has positive gain.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; blocks leaving either side below min_leaf_size are skipped.
    Ties resolve to the lowest feature index, then the lowest threshold.
    """
    n = len(y)
    total1 = int(y.sum())
    parent = float(_entropy(np.asarray(n - total1), np.asarray(total1)))
    best_gain = 0.0
    best: tuple[int, float] | None = None
    for f in np.sort(features):
        v = X[:, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        sy = y[order]
        cut = np.flatnonzero(sv[:-1] < sv[1:])
        if cut.size == 0:
            continue
        nl = cut + 1
        nr = n - nl
        ok = (nl >= min_leaf_size) & (nr >= min_leaf_size)
        if not ok.any():
            continue
        cut, nl, nr = cut[ok], nl[ok], nr[ok]
        l1 = np.cumsum(sy)[cut]
        l0 = nl - l1
        r1 = total1 - l1
        r0 = nr - r1
        child = (nl * _entropy(l0, l1) + nr * _entropy(r0, r1)) / n
        gains = parent - child
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            best = (int(f), float((sv[cut[i]] + sv[cut[i] + 1]) / 2.0))
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator,
               n_split_features: int, max_depth: int, min_leaf_size: int) -> _Tree:
    n_features = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[tuple[int, int]] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        nid = len(feature)
        c1 = int(y[idx].sum())
        c0 = len(idx) - c1
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((c0, c1))
        if c0 == 0 or c1 == 0 or depth >= max_depth or len(idx) < 2 * min_leaf_size:
            return nid
        feats = rng.choice(n_features, size=n_split_features, replace=False)
        split = _best_split(X[idx], y[idx], feats, min_leaf_size)
        if split is None:
            return nid
        f, thr = split
        go_left = X[idx, f] <= thr
        feature[nid] = f
        threshold[nid] = thr
        left[nid] = grow(idx[go_left], depth + 1)
        right[nid] = grow(idx[~go_left], depth + 1)
        return nid

    grow(np.arange(len(y)), 0)
    return _Tree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(counts, dtype=np.int64),
    )


def _tree_leaf_counts(tree: _Tree, X: np.ndarray) -> np.ndarray:
    """Route every row of X to its leaf; returns the (n, 2) leaf counts."""
    idx = np.zeros(len(X), dtype=np.int64)
    while True:
        feat = tree.feature[idx]
        active = np.flatnonzero(feat >= 0)
        if active.size == 0:
            break
        cur = idx[active]
        go_left = X[active, feat[active]] <= tree.threshold[cur]
        idx[active] = np.where(go_left, tree.left[cur], tree.right[cur])
    return tree.counts[idx]


class RandomForest(ClassifierMixin, BaseEstimator):
    """Bagged information-gain decision trees for two classes.

    Each tree bootstraps len(X) samples with replacement and considers
    n_split_features distinct features at every node; growth stops at
    purity, max_depth, or nodes smaller than 2 * min_leaf_size. Predicted
    probabilities average the normalized leaf class frequencies over all
    trees; an exact probability tie predicts class 1.
    """

    def __init__(self, n_trees: int = 500, n_split_features: int = 20,
                 max_depth: int = 25, min_leaf_size: int = 2, seed: int = 0):
        self.n_trees = n_trees
        self.n_split_features = n_split_features
        self.max_depth = max_depth
        self.min_leaf_size = min_leaf_size
        self.seed = seed

    def _validate_params(self) -> None:
        for name in ("n_trees", "n_split_features", "max_depth", "min_leaf_size"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def fit(self, X, y) -> "RandomForest":
        self._validate_params()
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError("y must be a vector matching X rows")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        y = y.astype(np.int64)
        if len(np.unique(y)) < 2:
            raise ValueError("training data must contain both classes")
        if self.n_split_features > X.shape[1]:
            raise ValueError(
                f"n_split_features={self.n_split_features} exceeds the "
                f"{X.shape[1]} available features"
            )
        trees = []
        for t in range(self.n_trees):
            key = np.array([self.seed, t], dtype=np.uint64)
            rng = np.random.Generator(np.random.Philox(key=key))
            boot = rng.integers(0, len(y), size=len(y))
            trees.append(_grow_tree(X[boot], y[boot], rng, self.n_split_features,
                                    self.max_depth, self.min_leaf_size))
        self.trees_ = trees
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        if not hasattr(self, "metadata_"):
            self.metadata_ = {}
        return self

    def _check_fitted_input(self, X) -> np.ndarray:
        if not hasattr(self, "trees_"):
            raise ValueError("forest is not fitted")
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected (n, {self.n_features_in_}) feature matrix, got {X.shape}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_fitted_input(X)
        acc = np.zeros((len(X), 2), dtype=np.float64)
        for tree in self.trees_:
            counts = _tree_leaf_counts(tree, X).astype(np.float64)
            acc += counts / counts.sum(axis=1, keepdims=True)
        return acc / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return (proba[:, 1] >= proba[:, 0]).astype(np.int64)


def save_forest(forest: RandomForest, path, metadata: dict | None = None) -> None:
    """Write a fitted forest to `path` in the package's binary format.

    Layout: magic "GSRF" (4B), format version (u16), payload length (u64),
    payload, CRC32 of the payload (u32), all little-endian. The payload is
    a length-prefixed JSON parameter block followed by per-tree preorder
    node records. `metadata` entries (JSON-serializable) are merged into
    the forest's metadata and stored in the parameter block.
    """
    if not hasattr(forest, "trees_"):
        raise ValueError("cannot save an unfitted forest")
    meta = dict(getattr(forest, "metadata_", {}))
    if metadata:
        meta.update(metadata)
    params = {
        "n_trees": forest.n_trees,
        "n_split_features": forest.n_split_features,
        "max_depth": forest.max_depth,
        "min_leaf_size": forest.min_leaf_size,
        "seed": forest.seed,
        "n_features": forest.n_features_in_,
        "metadata": meta,
    }
    blob = json.dumps(params, sort_keys=True).encode("utf-8")
    parts = [struct.pack("<I", len(blob)), blob]
    for tree in forest.trees_:
        parts.append(struct.pack("<I", tree.n_nodes))
        parts.append(tree.feature.astype("<i4").tobytes())
        parts.append(tree.threshold.astype("<f8").tobytes())
        parts.append(tree.left.astype("<i4").tobytes())
        parts.append(tree.right.astype("<i4").tobytes())
        parts.append(tree.counts.astype("<i8").tobytes())
    payload = b"".join(parts)
    data = _HEADER.pack(_MAGIC, _VERSION, len(payload)) + payload + _CRC.pack(
        zlib.crc32(payload)
    )
    with open(path, "wb") as fh:
        fh.write(data)


def load_forest(path) -> RandomForest:
    """Read a forest written by save_forest, verifying structure before
    trusting content: truncation, magic, version, payload length, checksum,
    then parse.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _MIN_FILE:
        raise TruncatedModelError(f"model file is {len(data)} bytes, shorter than a header")
    magic, version, plen = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise ModelVersionError(f"unsupported model format version {version}")
    if len(data) < _MIN_FILE + plen:
        raise TruncatedModelError(
            f"payload declares {plen} bytes but only {len(data) - _MIN_FILE} are present"
        )
    if len(data) > _MIN_FILE + plen:
        raise ModelFormatError("trailing bytes after the payload checksum")
    payload = data[_HEADER.size : _HEADER.size + plen]
    (crc,) = _CRC.unpack_from(data, _HEADER.size + plen)
    if zlib.crc32(payload) != crc:
        raise ModelChecksumError("payload checksum mismatch")
    try:
        return _parse_payload(payload)
    except (struct.error, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"malformed model payload: {exc}") from exc


def _parse_payload(payload: bytes) -> RandomForest:
    off = 0
    (blob_len,) = struct.unpack_from("<I", payload, off)
    off += 4
    params = json.loads(payload[off : off + blob_len].decode("utf-8"))
    off += blob_len
    forest = RandomForest(
        n_trees=params["n_trees"],
        n_split_features=params["n_split_features"],
        max_depth=params["max_depth"],
        min_leaf_size=params["min_leaf_size"],
        seed=params["seed"],
    )
    trees = []
    for _ in range(params["n_trees"]):
        (n_nodes,) = struct.unpack_from("<I", payload, off)
        off += 4
        arrays = []
        for dtype, cols in (("<i4", 1), ("<f8", 1), ("<i4", 1), ("<i4", 1), ("<i8", 2)):
            nbytes = np.dtype(dtype).itemsize * n_nodes * cols
            if off + nbytes > len(payload):
                raise ValueError("tree records run past the payload")
            arr = np.frombuffer(payload, dtype=dtype, count=n_nodes * cols, offset=off)
            arrays.append(arr.reshape(n_nodes, cols) if cols > 1 else arr.copy())
            off += nbytes
        trees.append(_Tree(arrays[0], arrays[1], arrays[2], arrays[3],
                           arrays[4].copy()))
    if off != len(payload):
        raise ValueError("unexpected bytes after the last tree record")
    forest.trees_ = trees
    forest.n_features_in_ = params["n_features"]
    forest.classes_ = np.array([0, 1])
    forest.metadata_ = params.get("metadata", {})
    return forest
