"""Image corpora: procedural textures and Netpbm directories

Images are returned as float arrays of shape (count, c, h, w) with values
in [0, 1].
"""

import pathlib
import re
from typing import Callable, Dict, Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np

from ..config import DatasetConfig, DatasetSource
from ..errors import ConfigurationError, IngestionError
from ..model import ModelConfig
from ..stages import outputs
from ..utils.log import getLogger
from ..utils.misc import array_batches, derive_rng

logger = getLogger(__file__)

NETPBM_SUFFIXES = (".pgm", ".ppm", ".pnm")

# Spawn keys of the corpus streams within the master seed
TRAIN_STREAM_KEY = 101
EVAL_STREAM_KEY = 102
SHUFFLE_STREAM_KEY = 103

ImageShape = Tuple[int, int, int]


class DatasetSplit(NamedTuple):
    train: np.ndarray
    eval: np.ndarray


# --- procedural corpus --- #


def _pixel_grid(height: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    rows, cols = np.meshgrid(
        (np.arange(height) + 0.5) / height, (np.arange(width) + 0.5) / width, indexing="ij"
    )
    return rows, cols


def _gradient(shape: ImageShape, rng: np.random.Generator) -> np.ndarray:
    channels, height, width = shape
    start, end = rng.uniform(0.0, 1.0, size=(2, channels, 1, 1))
    angle = rng.uniform(0.0, 2.0 * np.pi)

    rows, cols = _pixel_grid(height, width)
    projection = np.cos(angle) * cols + np.sin(angle) * rows
    t = (projection - projection.min()) / max(np.ptp(projection), 1e-12)
    return start + (end - start) * t


def _checkerboard(shape: ImageShape, rng: np.random.Generator) -> np.ndarray:
    channels, height, width = shape
    sizes = [size for size in (2, 4, 8) if size <= min(height, width) // 2] or [1]
    cell = int(rng.choice(sizes))
    first, second = rng.uniform(0.0, 1.0, size=(2, channels, 1, 1))

    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    mask = ((rows // cell + cols // cell) % 2).astype(np.float64)
    return first + (second - first) * mask


def _band_limited_noise(shape: ImageShape, rng: np.random.Generator) -> np.ndarray:
    channels, height, width = shape
    white = rng.standard_normal(shape)
    cutoff = rng.uniform(0.1, 0.3)

    freq_rows = np.fft.fftfreq(height)[:, None]
    freq_cols = np.fft.fftfreq(width)[None, :]
    mask = np.sqrt(freq_rows**2 + freq_cols**2) <= cutoff * 0.5

    texture = np.real(np.fft.ifft2(np.fft.fft2(white) * mask))
    low = texture.min(axis=(1, 2), keepdims=True)
    span = np.maximum(np.ptp(texture, axis=(1, 2), keepdims=True), 1e-12)
    return (texture - low) / span


def _soft_disc(shape: ImageShape, rng: np.random.Generator) -> np.ndarray:
    channels, height, width = shape
    background, foreground = rng.uniform(0.0, 1.0, size=(2, channels, 1, 1))
    center = rng.uniform(0.25, 0.75, size=2)
    radius = rng.uniform(0.15, 0.4)
    softness = rng.uniform(0.02, 0.1)

    rows, cols = _pixel_grid(height, width)
    distance = np.sqrt((rows - center[0]) ** 2 + (cols - center[1]) ** 2)
    alpha = np.clip((radius - distance) / softness + 0.5, 0.0, 1.0)
    return background + (foreground - background) * alpha


PROCEDURAL_KINDS: Dict[str, Callable[[ImageShape, np.random.Generator], np.ndarray]] = {
    "gradient": _gradient,
    "checkerboard": _checkerboard,
    "noise": _band_limited_noise,
    "disc": _soft_disc,
}


def procedural_images(
    count: int,
    shape: ImageShape,
    rng: np.random.Generator,
    kinds: Sequence[str] = tuple(PROCEDURAL_KINDS),
) -> np.ndarray:
    """`count` synthetic images cycling through `kinds`."""
    unknown = [kind for kind in kinds if kind not in PROCEDURAL_KINDS]
    if unknown or not kinds:
        raise ConfigurationError(
            f"Unknown procedural kinds {unknown}; choose from {sorted(PROCEDURAL_KINDS)}"
        )

    images = np.empty((count,) + tuple(shape))
    for index in range(count):
        generate = PROCEDURAL_KINDS[kinds[index % len(kinds)]]
        images[index] = generate(shape, rng)

    return np.clip(images, 0.0, 1.0)


# --- netpbm --- #

_HEADER_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")

_NETPBM_CHANNELS = {b"P2": 1, b"P5": 1, b"P3": 3, b"P6": 3}


def _header(data: bytes, path: pathlib.Path) -> Tuple[bytes, int, int, int, int]:
    """Magic, width, height, maxval and the offset of the pixel data."""
    tokens = []
    position = 0
    while len(tokens) < 4:
        match = _HEADER_TOKEN.match(data, position)
        if match is None:
            raise IngestionError(str(path), "truncated header")
        tokens.append(match.group(1))
        position = match.end()

    magic = tokens[0]
    if magic not in _NETPBM_CHANNELS:
        raise IngestionError(str(path), f"unsupported format {magic!r}")

    try:
        width, height, maxval = (int(token) for token in tokens[1:])
    except ValueError:
        raise IngestionError(str(path), "non-numeric header field")

    if width <= 0 or height <= 0:
        raise IngestionError(str(path), f"invalid size {width}x{height}")
    if not 0 < maxval < 65536:
        raise IngestionError(str(path), f"invalid maxval {maxval}")

    # Exactly one whitespace byte separates the header from binary data
    return magic, width, height, maxval, position + 1


def read_netpbm(path: pathlib.Path) -> np.ndarray:
    """Read a P2/P3/P5/P6 file as an (h, w, channels) array in [0, 1]."""
    try:
        data = path.read_bytes()
    except OSError as e:
        raise IngestionError(str(path), str(e))

    magic, width, height, maxval, offset = _header(data, path)
    channels = _NETPBM_CHANNELS[magic]
    count = width * height * channels

    if magic in (b"P2", b"P3"):
        try:
            values = np.array(data[offset - 1 :].split(), dtype=np.int64)
        except ValueError:
            raise IngestionError(str(path), "non-numeric pixel value")
    else:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        available = (len(data) - offset) // dtype.itemsize
        values = np.frombuffer(data, dtype=dtype, count=min(count, available), offset=offset)

    if values.size < count:
        raise IngestionError(str(path), f"expected {count} samples, found {values.size}")
    values = values[:count]
    if np.any(values > maxval) or np.any(values < 0):
        raise IngestionError(str(path), f"sample exceeds maxval {maxval}")

    return values.reshape(height, width, channels).astype(np.float64) / maxval


def fit_image(image: np.ndarray, shape: ImageShape) -> np.ndarray:
    """Center-crop to the target aspect ratio, resize (nearest) and match channels.

    Input is (h, w, channels); output is (c, h, w).
    """
    channels, height, width = shape
    source_h, source_w, source_c = image.shape

    if source_h * width > source_w * height:
        crop_h, crop_w = max(1, source_w * height // width), source_w
    else:
        crop_h, crop_w = source_h, max(1, source_h * width // height)
    top = (source_h - crop_h) // 2
    left = (source_w - crop_w) // 2
    cropped = image[top : top + crop_h, left : left + crop_w]

    rows = (np.arange(height) * crop_h) // height
    cols = (np.arange(width) * crop_w) // width
    resized = cropped[rows][:, cols]

    if source_c == channels:
        fitted = resized
    elif source_c == 1:
        fitted = np.repeat(resized, channels, axis=-1)
    elif channels == 1:
        fitted = resized.mean(axis=-1, keepdims=True)
    else:
        raise ConfigurationError(f"Cannot map {source_c} image channels to {channels}")

    return np.transpose(fitted, (2, 0, 1))


def load_directory(directory: pathlib.Path, shape: ImageShape) -> np.ndarray:
    """Every Netpbm file in `directory`, sorted by name."""
    if not directory.is_dir():
        raise IngestionError(str(directory), "not a directory")

    images: List[np.ndarray] = []
    skipped = 0
    for filepath in outputs.iter_data_paths(directory):
        if filepath.suffix.lower() not in NETPBM_SUFFIXES:
            skipped += 1
            continue
        images.append(fit_image(read_netpbm(filepath), shape))

    if skipped:
        logger.warning("Skipped %d non-Netpbm files in %s", skipped, directory)
    if not images:
        raise IngestionError(str(directory), "no Netpbm images found")

    return np.stack(images)


# --- datasets --- #


def load_images(
    dataset: DatasetConfig, model_config: ModelConfig, master_seed: int
) -> DatasetSplit:
    """Training and evaluation images for a run."""
    shape = model_config.image_shape

    if dataset.source == DatasetSource.PROCEDURAL:
        train = procedural_images(
            dataset.train_count, shape, derive_rng(master_seed, TRAIN_STREAM_KEY), dataset.kinds
        )
        evaluation = procedural_images(
            dataset.eval_count, shape, derive_rng(master_seed, EVAL_STREAM_KEY), dataset.kinds
        )
        return DatasetSplit(train=train, eval=evaluation)

    images = load_directory(dataset.path, shape)
    if dataset.shuffle:
        images = images[derive_rng(master_seed, SHUFFLE_STREAM_KEY).permutation(len(images))]

    if len(images) <= dataset.eval_count:
        logger.warning(
            "Only %d images in %s; training and evaluation share them", len(images), dataset.path
        )
        return DatasetSplit(train=images, eval=images)

    return DatasetSplit(train=images[dataset.eval_count :], eval=images[: dataset.eval_count])


def iter_image_batches(
    images: np.ndarray, batch_size: int, seed: int, shuffle: bool = True
) -> Iterator[np.ndarray]:
    """Batches of `images` in an order fixed by `seed`."""
    if shuffle:
        images = images[derive_rng(seed, SHUFFLE_STREAM_KEY).permutation(len(images))]
    yield from array_batches(images, batch_size)
