"""IID and label-sharded Non-IID client partitions."""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np

from src.data.datasets import Dataset
from src.exceptions import ParameterError
from src.models.experiment import PartitionSpec
from src.models.partition import ClientData

logger = logging.getLogger(__name__)


def _check_clients(K: int) -> None:
    if K <= 0:
        msg = f"client count must be positive, got {K}"
        raise ParameterError(msg)


def partition_iid(train: Dataset, test: Dataset, K: int, seed: int) -> list[ClientData]:
    """Shuffle both splits and deal equal slices; leftovers are discarded."""
    _check_clients(K)
    per_train, per_test = len(train) // K, len(test) // K
    if per_train == 0 or per_test == 0:
        msg = f"cannot give {K} clients at least one sample each"
        raise ParameterError(msg)
    rng = np.random.default_rng(seed)
    train_perm = rng.permutation(len(train))
    test_perm = rng.permutation(len(test))
    return [
        ClientData(
            client_id=k,
            train_indices=train_perm[k * per_train : (k + 1) * per_train].astype(np.int64),
            validate_indices=test_perm[k * per_test : (k + 1) * per_test].astype(np.int64),
        )
        for k in range(K)
    ]


def _split_block(block: np.ndarray, pieces: int) -> list[np.ndarray]:
    # Equal pieces, the last one absorbing the remainder
    size = block.size // pieces
    return [block[i * size : (i + 1) * size] for i in range(pieces - 1)] + [
        block[(pieces - 1) * size :]
    ]


def _cut_shards(labels: np.ndarray, classes: int, num_shards: int) -> list[np.ndarray]:
    order = np.argsort(labels, kind="stable")
    counts = np.bincount(labels, minlength=classes)
    present = counts[counts > 0]
    if num_shards % present.size == 0 and present.min() >= num_shards // present.size:
        # Class-aligned: every shard holds a single class
        per_class = num_shards // present.size
        shards: list[np.ndarray] = []
        start = 0
        for count in counts:
            if count:
                shards.extend(_split_block(order[start : start + count], per_class))
            start += count
        return shards
    return _split_block(order, num_shards)


def _mirror_quotas(
    train_sets: list[np.ndarray], train: Dataset, test: Dataset, rng: np.random.Generator
) -> list[np.ndarray]:
    """Give each client the share of every test class it holds of that train class."""
    classes = train.classes
    train_counts = np.bincount(train.labels, minlength=classes)
    client_counts = np.stack([np.bincount(train.labels[s], minlength=classes) for s in train_sets])
    pieces: list[list[np.ndarray]] = [[] for _ in train_sets]
    for c in range(min(classes, test.classes)):
        pool = rng.permutation(np.flatnonzero(test.labels == c))
        if train_counts[c] == 0 or pool.size == 0:
            continue
        bounds = (pool.size * np.cumsum(client_counts[:, c])) // train_counts[c]
        start = 0
        for k, stop in enumerate(bounds):
            pieces[k].append(pool[start:stop])
            start = int(stop)
    return [
        np.concatenate(p).astype(np.int64) if p else np.zeros(0, dtype=np.int64) for p in pieces
    ]


def partition_noniid(
    train: Dataset, test: Dataset, K: int, p: int, seed: int
) -> list[ClientData]:
    """Label-sharded split: ``K·p`` shards over the label-sorted data, ``p`` per client.

    When ``K·p`` is a multiple of the number of classes present, shards are cut
    inside each class so every shard is single-class and a client holds at most
    ``p`` classes. Otherwise the stable label sort is cut into contiguous shards
    that may straddle a class boundary: with shards no larger than the smallest
    class, each spans at most two classes and a client can hold up to ``2p``.
    The last shard absorbs any remainder. Validate sets mirror each client's
    class quotas on the test split.
    """
    _check_clients(K)
    if p < 1:
        msg = f"shards per client must be at least 1, got {p}"
        raise ParameterError(msg)
    num_shards = K * p
    if num_shards > len(train):
        msg = f"{num_shards} shards exceed the {len(train)} training samples"
        raise ParameterError(msg)

    shards = _cut_shards(train.labels, train.classes, num_shards)
    rng = np.random.default_rng(seed)
    deal = rng.permutation(num_shards)
    train_sets = [
        np.concatenate([shards[s] for s in np.sort(deal[k * p : (k + 1) * p])]).astype(np.int64)
        for k in range(K)
    ]
    validate_sets = _mirror_quotas(train_sets, train, test, rng)
    return [
        ClientData(client_id=k, train_indices=train_sets[k], validate_indices=validate_sets[k])
        for k in range(K)
    ]


def partition(
    train: Dataset, test: Dataset, spec: PartitionSpec, K: int | None = None
) -> list[ClientData]:
    """Partition according to a spec; ``K`` overrides the spec's client count."""
    clients = spec.clients if K is None else K
    if spec.mode == "iid":
        parts = partition_iid(train, test, clients, spec.seed)
    else:
        assert spec.shards_per_client is not None
        parts = partition_noniid(train, test, clients, spec.shards_per_client, spec.seed)
    logger.debug(
        "partitioned %s into %d clients (%s): %s",
        train.name,
        clients,
        spec.mode,
        [c.num_train for c in parts],
    )
    return parts


def class_histogram(
    cd: ClientData, ds: Dataset, which: Literal["train", "validate"] = "train"
) -> np.ndarray:
    """Exact per-class sample counts of one of a client's index sets."""
    indices = cd.train_indices if which == "train" else cd.validate_indices
    return np.bincount(ds.labels[np.asarray(indices, dtype=np.int64)], minlength=ds.classes)
