"""Miscellaneous python utils"""
import itertools
from typing import Iterable, Iterator, List, TypeVar

import numpy as np

T = TypeVar("T")


def batch(iterable: Iterable[T], size: int) -> Iterator[List[T]]:
    """Batch an iterable into chunks of specified size"""
    if size <= 0:
        raise ValueError(f"Batch size must be positive, got {size}")

    iterator = iter(iterable)

    while True:
        batch_items = list(itertools.islice(iterator, size))

        if not batch_items:
            return

        yield batch_items


def array_batches(array: np.ndarray, size: int) -> Iterator[np.ndarray]:
    """Split the leading axis of an array into consecutive chunks of `size`."""
    for index_batch in batch(range(array.shape[0]), size):
        yield array[index_batch[0] : index_batch[-1] + 1]


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, *keys).

    The same (seed, keys) always yields the same stream, and streams with
    different keys do not overlap, so workers and grid cells can draw in any
    order.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(keys))
    return np.random.default_rng(sequence)


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed for a child stream, used to record stage seeds in configs."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(keys))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
