import pathlib

import numpy as np
import pytest

from hana_jscc.config import DatasetConfig, DatasetSource
from hana_jscc.errors import ConfigurationError, IngestionError
from hana_jscc.ingestors import images
from hana_jscc.model import ModelConfig


def _write(tmpdir, name, data):
    path = pathlib.Path(tmpdir) / name
    path.write_bytes(data)
    return path


def test_read_ascii_gray(tmpdir):
    path = _write(tmpdir, "gray.pgm", b"P2\n# comment\n2 2\n255\n0 255\n51 102\n")

    image = images.read_netpbm(path)

    assert image.shape == (2, 2, 1)
    assert image[0, 1, 0] == 1.0
    assert image[1, 0, 0] == pytest.approx(0.2)


def test_read_ascii_color(tmpdir):
    path = _write(tmpdir, "color.ppm", b"P3 1 2 15\n15 0 0\n0 15 0\n")

    image = images.read_netpbm(path)

    assert image.shape == (2, 1, 3)
    assert image[0, 0].tolist() == [1.0, 0.0, 0.0]
    assert image[1, 0].tolist() == [0.0, 1.0, 0.0]


def test_read_binary_gray(tmpdir):
    path = _write(tmpdir, "gray.pgm", b"P5\n3 1\n255\n" + bytes([0, 128, 255]))

    image = images.read_netpbm(path)

    assert image[0, :, 0].tolist() == [0.0, 128 / 255, 1.0]


def test_read_binary_color(tmpdir):
    path = _write(tmpdir, "color.ppm", b"P6\n1 1\n255\n" + bytes([255, 0, 51]))

    image = images.read_netpbm(path)

    assert image.shape == (1, 1, 3)
    assert image[0, 0].tolist() == [1.0, 0.0, 0.2]


def test_read_sixteen_bit(tmpdir):
    path = _write(tmpdir, "deep.pgm", b"P5\n2 1\n65535\n" + bytes([0xFF, 0xFF, 0x00, 0x00]))

    image = images.read_netpbm(path)

    assert image[0, :, 0].tolist() == [1.0, 0.0]


def test_binary_pixel_data_may_start_with_whitespace_byte(tmpdir):
    path = _write(tmpdir, "gray.pgm", b"P5\n2 1\n255\n" + bytes([10, 32]))

    assert images.read_netpbm(path)[0, :, 0].tolist() == [10 / 255, 32 / 255]


@pytest.mark.parametrize(
    "data, reason",
    [
        (b"P5\n4 4\n255\n" + bytes(3), "expected 16 samples"),
        (b"P7\n1 1\n255\n" + bytes(1), "unsupported format"),
        (b"P2\n1", "truncated header"),
        (b"P2\n1 1\n15\n16\n", "exceeds maxval"),
        (b"P2\nx 1\n15\n1\n", "non-numeric"),
    ],
)
def test_corrupt_files_name_the_file(tmpdir, data, reason):
    path = _write(tmpdir, "broken.pgm", data)

    with pytest.raises(IngestionError, match=reason) as excinfo:
        images.read_netpbm(path)

    assert excinfo.value.path == str(path)
    assert "broken.pgm" in str(excinfo.value)


def test_missing_file(tmpdir):
    with pytest.raises(IngestionError):
        images.read_netpbm(pathlib.Path(tmpdir) / "missing.pgm")


def test_fit_image_crops_and_resizes():
    image = np.arange(4 * 8, dtype=float).reshape(4, 8, 1) / 31.0

    fitted = images.fit_image(image, (3, 2, 2))

    assert fitted.shape == (3, 2, 2)
    assert np.array_equal(fitted[0], fitted[2])
    # Center 4x4 crop starts at column 2
    assert fitted[0, 0, 0] == image[0, 2, 0]


def test_fit_image_to_gray():
    image = np.stack([np.zeros((2, 2)), np.ones((2, 2)), np.full((2, 2), 0.5)], axis=-1)

    fitted = images.fit_image(image, (1, 2, 2))

    assert fitted.shape == (1, 2, 2)
    assert np.allclose(fitted, 0.5)


def test_procedural_images(rng):
    batch = images.procedural_images(8, (3, 16, 16), rng)

    assert batch.shape == (8, 3, 16, 16)
    assert batch.min() >= 0.0
    assert batch.max() <= 1.0


def test_procedural_images_are_deterministic():
    first = images.procedural_images(4, (3, 8, 8), np.random.default_rng(1))
    second = images.procedural_images(4, (3, 8, 8), np.random.default_rng(1))

    assert np.array_equal(first, second)


def test_unknown_procedural_kind(rng):
    with pytest.raises(ConfigurationError, match="sprite"):
        images.procedural_images(2, (3, 8, 8), rng, kinds=["sprite"])


def test_load_procedural_split():
    dataset = DatasetConfig(train_count=6, eval_count=3)
    model = ModelConfig(h=8, w=8, semantic_channels=[8, 16], n_tx=4, n_rx=4)

    split = images.load_images(dataset, model, master_seed=2)
    again = images.load_images(dataset, model, master_seed=2)

    assert split.train.shape == (6, 3, 8, 8)
    assert split.eval.shape == (3, 3, 8, 8)
    assert np.array_equal(split.train, again.train)
    assert not np.array_equal(split.train[:3], split.eval)


def test_load_directory(tmpdir):
    _write(tmpdir, "b.pgm", b"P2 2 2 1 1 1 1 1\n")
    _write(tmpdir, "a.pgm", b"P2 2 2 1 0 0 0 0\n")
    _write(tmpdir, "notes.txt", b"ignore me")

    loaded = images.load_directory(pathlib.Path(tmpdir), (3, 2, 2))

    assert loaded.shape == (2, 3, 2, 2)
    assert loaded[0].max() == 0.0
    assert loaded[1].min() == 1.0


def test_load_empty_directory(tmpdir):
    with pytest.raises(IngestionError, match="no Netpbm"):
        images.load_directory(pathlib.Path(tmpdir), (3, 2, 2))


def test_directory_split(tmpdir):
    for index in range(4):
        _write(tmpdir, f"{index}.pgm", f"P2 1 1 3 {index}\n".encode())
    dataset = DatasetConfig(source=DatasetSource.DIRECTORY, path=str(tmpdir), eval_count=1, shuffle=False)
    model = ModelConfig(h=8, w=8, semantic_channels=[8, 16], n_tx=4, n_rx=4, c=1)

    split = images.load_images(dataset, model, master_seed=0)

    assert split.eval.shape == (1, 1, 8, 8)
    assert split.train.shape == (3, 1, 8, 8)
    assert split.eval.max() == 0.0


def test_iter_image_batches(tiny_images):
    batches = list(images.iter_image_batches(tiny_images, 3, seed=0))

    assert [len(batch) for batch in batches] == [3, 3, 2]
    assert sorted(np.concatenate(batches).sum(axis=(1, 2, 3))) == sorted(tiny_images.sum(axis=(1, 2, 3)))


def test_iter_image_batches_in_order(tiny_images):
    batches = list(images.iter_image_batches(tiny_images, 5, seed=0, shuffle=False))

    assert [len(batch) for batch in batches] == [5, 3]
    assert np.array_equal(np.concatenate(batches), tiny_images)
