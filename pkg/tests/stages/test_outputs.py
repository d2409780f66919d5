import pathlib

from hana_jscc.stages import outputs
from hana_jscc.stages.common import TrainStage


def test_iter_data_paths(tmpdir):
    data_dir = pathlib.Path(tmpdir)
    (data_dir / "b.pgm").write_bytes(b"")
    (data_dir / "a.ppm").write_bytes(b"")
    (data_dir / "_skip.pgm").write_bytes(b"")
    (data_dir / ".hidden.pgm").write_bytes(b"")
    (data_dir / "nested").mkdir()

    assert [path.name for path in outputs.iter_data_paths(data_dir)] == ["a.ppm", "b.pgm"]
    assert [path.name for path in outputs.iter_data_paths(data_dir, suffix=".pgm")] == ["b.pgm"]


def test_copy_files(tmpdir):
    src_dir = pathlib.Path(tmpdir) / "src"
    src_dir.mkdir()
    (src_dir / "params.bin").write_bytes(b"\x00\x01\x02")
    (src_dir / "_partial").write_bytes(b"x")

    dst_dir = pathlib.Path(tmpdir) / "dst" / "stage1"
    outputs.copy_files(src_dir, dst_dir)

    assert (dst_dir / "params.bin").read_bytes() == b"\x00\x01\x02"
    assert not (dst_dir / "_partial").exists()


def test_stage_paths():
    base = pathlib.Path("out")

    assert outputs.generate_stage_dir(base, TrainStage.PRETRAIN_BASELINE) == base / "checkpoints" / "baseline"
    assert outputs.generate_log_path(base, TrainStage.STAGE2) == base / "logs" / "stage2.train.ndjson"
    assert outputs.generate_report_dir(base) == base / "reports"
