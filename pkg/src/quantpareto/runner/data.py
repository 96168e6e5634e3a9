"""
Datasets: CIFAR-10 binary records and synthetic Gaussian class clusters.

CIFAR-10 binary files hold 3073-byte records: one label byte followed by
3072 pixel bytes, RGB planar (1024 red, 1024 green, 1024 blue) at 32x32.
Images are scaled to [0, 1] and standardised per channel with
CIFAR10_MEAN / CIFAR10_STD.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from quantpareto.core.errors import DatasetError
from quantpareto.runner.config import DatasetKind, DatasetSection

logger = logging.getLogger(__name__)

DATA_ROOT_ENV = "QUANTPARETO_DATA_ROOT"

CIFAR10_RECORD_BYTES = 3073
CIFAR10_SIDE = 32
CIFAR10_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
CIFAR10_TEST_FILE = "test_batch.bin"
CIFAR10_MEAN = np.array([0.4914, 0.4822, 0.4465], dtype=np.float32)
CIFAR10_STD = np.array([0.2470, 0.2435, 0.2616], dtype=np.float32)

CROP_PADDING = 4
DEFAULT_SYNTHETIC_TRAIN = 2048
DEFAULT_SYNTHETIC_EVAL = 512

Batch = tuple[np.ndarray, np.ndarray]


@dataclass
class ArrayDataset:
    """NHWC float32 images with int64 labels"""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        if self.images.shape[0] != self.labels.shape[0]:
            raise DatasetError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def head(self, n: Optional[int]) -> "ArrayDataset":
        if n is None or n >= len(self):
            return self
        return ArrayDataset(self.images[:n], self.labels[:n])


def decode_cifar_records(raw: bytes, num_classes: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """uint8 NHWC images and labels from concatenated CIFAR-10 records"""
    if len(raw) % CIFAR10_RECORD_BYTES:
        raise DatasetError(
            f"Truncated CIFAR-10 data: {len(raw)} bytes is not a multiple of "
            f"{CIFAR10_RECORD_BYTES}"
        )
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR10_RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    if labels.size and labels.max() >= num_classes:
        raise DatasetError(f"Label {labels.max()} out of range for {num_classes} classes")
    images = records[:, 1:].reshape(-1, 3, CIFAR10_SIDE, CIFAR10_SIDE).transpose(0, 2, 3, 1)
    return np.ascontiguousarray(images), labels


def read_cifar_file(path: Path, num_classes: int = 10) -> tuple[np.ndarray, np.ndarray]:
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DatasetError(f"Failed to read {path}: {e}") from e
    try:
        return decode_cifar_records(raw, num_classes)
    except DatasetError as e:
        raise DatasetError(f"{path}: {e}") from e


def normalize_cifar(images: np.ndarray) -> np.ndarray:
    scaled = images.astype(np.float32) / np.float32(255.0)
    return (scaled - CIFAR10_MEAN) / CIFAR10_STD


def resolve_data_root(descriptor: DatasetSection) -> Path:
    """QUANTPARETO_DATA_ROOT, else the configured path"""
    env_root = os.environ.get(DATA_ROOT_ENV)
    if env_root:
        return Path(env_root)
    if descriptor.path is None:
        raise DatasetError(
            f"No CIFAR-10 directory configured; set dataset.path or {DATA_ROOT_ENV}"
        )
    return descriptor.path


def load_cifar10(descriptor: DatasetSection) -> tuple[ArrayDataset, ArrayDataset]:
    root = resolve_data_root(descriptor)
    train_parts = [
        read_cifar_file(root / name, descriptor.num_classes) for name in CIFAR10_TRAIN_FILES
    ]
    train_images = np.concatenate([images for images, _ in train_parts])
    train_labels = np.concatenate([labels for _, labels in train_parts])
    eval_images, eval_labels = read_cifar_file(root / CIFAR10_TEST_FILE, descriptor.num_classes)

    train = ArrayDataset(normalize_cifar(train_images), train_labels).head(descriptor.train_size)
    evaluation = ArrayDataset(normalize_cifar(eval_images), eval_labels).head(descriptor.eval_size)
    logger.info("Loaded CIFAR-10 from %s: %d train, %d eval", root, len(train), len(evaluation))
    return train, evaluation


def synthetic_clusters(
    num_classes: int,
    resolution: int,
    train_size: int,
    eval_size: int,
    separation: float,
    seed: int,
) -> tuple[ArrayDataset, ArrayDataset]:
    """K Gaussian clusters in image space.

    Class means are ``separation`` times a fixed random image per class;
    samples add unit Gaussian noise. Separation 0 makes classes
    indistinguishable.
    """
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((num_classes, resolution, resolution, 3))
    centers /= np.sqrt(np.mean(centers**2, axis=(1, 2, 3), keepdims=True))

    def sample(n: int, stream: np.random.Generator) -> ArrayDataset:
        labels = stream.integers(0, num_classes, size=n)
        noise = stream.standard_normal((n, resolution, resolution, 3))
        images = separation * centers[labels] + noise
        return ArrayDataset(images.astype(np.float32), labels.astype(np.int64))

    train_rng, eval_rng = rng.spawn(2)
    return sample(train_size, train_rng), sample(eval_size, eval_rng)


def augment_batch(images: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random horizontal flip and 4-pixel zero-padded random crop"""
    n, h, w, _ = images.shape
    flip = rng.random(n) < 0.5
    out = np.where(flip[:, None, None, None], images[:, :, ::-1, :], images)
    padded = np.pad(
        out,
        ((0, 0), (CROP_PADDING, CROP_PADDING), (CROP_PADDING, CROP_PADDING), (0, 0)),
    )
    offsets = rng.integers(0, 2 * CROP_PADDING + 1, size=(n, 2))
    return np.stack(
        [padded[i, dy : dy + h, dx : dx + w] for i, (dy, dx) in enumerate(offsets)]
    )


class BatchStream:
    """Deterministic shuffled mini-batches; epoch e uses the stream seeded (seed, e)"""

    def __init__(
        self,
        dataset: ArrayDataset,
        batch_size: int,
        seed: int,
        augment: bool = False,
    ) -> None:
        if len(dataset) < batch_size:
            raise DatasetError(
                f"Dataset of {len(dataset)} examples is smaller than batch size {batch_size}"
            )
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed
        self.augment = augment

    def epoch(self, index: int) -> Iterator[Batch]:
        rng = np.random.default_rng([self.seed, index])
        order = rng.permutation(len(self.dataset))
        for start in range(0, len(order) - self.batch_size + 1, self.batch_size):
            idx = order[start : start + self.batch_size]
            images = self.dataset.images[idx]
            if self.augment:
                images = augment_batch(images, rng)
            yield images, self.dataset.labels[idx]

    def batches(self, num_steps: int) -> Iterator[Batch]:
        """Exactly ``num_steps`` batches, cycling through epochs"""
        produced = 0
        epoch = 0
        while produced < num_steps:
            for batch in self.epoch(epoch):
                if produced == num_steps:
                    return
                yield batch
                produced += 1
            epoch += 1


def iterate_in_order(dataset: ArrayDataset, batch_size: int) -> Iterator[Batch]:
    """Sequential batches covering every example once"""
    for start in range(0, len(dataset), batch_size):
        yield dataset.images[start : start + batch_size], dataset.labels[start : start + batch_size]


@dataclass
class DatasetSplits:
    train: ArrayDataset
    eval: ArrayDataset
    augment: bool

    def train_stream(self, batch_size: int, seed: int) -> BatchStream:
        return BatchStream(self.train, batch_size, seed, augment=self.augment)


def load_dataset(descriptor: DatasetSection, seed: int) -> DatasetSplits:
    """Train and eval splits for a dataset descriptor"""
    if descriptor.kind == DatasetKind.CIFAR10_BINARY:
        train, evaluation = load_cifar10(descriptor)
        return DatasetSplits(train, evaluation, augment=descriptor.augment)

    train, evaluation = synthetic_clusters(
        descriptor.num_classes,
        descriptor.resolution,
        descriptor.train_size or DEFAULT_SYNTHETIC_TRAIN,
        descriptor.eval_size or DEFAULT_SYNTHETIC_EVAL,
        descriptor.separation,
        seed,
    )
    return DatasetSplits(train, evaluation, augment=False)
