"""Save and load parameter stores as a manifest plus a flat payload

A checkpoint is a directory holding `manifest.json` (name, group, shape,
precision and byte offset of each parameter, the config hash and the stage)
and `params.bin`, every parameter concatenated as little-endian IEEE-754.
"""

import pathlib
import tempfile
from typing import List, NamedTuple, Optional

import numpy as np
import orjson
import pydantic
from pydantic import BaseModel

from ..errors import CheckpointMismatchError, ResourceError
from ..model import ModelConfig, ParameterGroup, ParameterStore, Precision
from ..utils.log import getLogger
from . import outputs
from .common import TrainStage

logger = getLogger(__file__)

MANIFEST_NAME = "manifest.json"
PAYLOAD_NAME = "params.bin"
FORMAT_VERSION = 1


class TensorEntry(BaseModel):
    name: str
    group: ParameterGroup
    shape: List[int]
    precision: Precision
    offset: int
    nbytes: int


class CheckpointManifest(BaseModel):
    format_version: int = FORMAT_VERSION
    stage: TrainStage
    config_hash: str
    model: ModelConfig
    frozen_groups: List[ParameterGroup]
    tensors: List[TensorEntry]
    payload: str = PAYLOAD_NAME


class Checkpoint(NamedTuple):
    manifest: CheckpointManifest
    store: ParameterStore


def _little_endian(dtype: np.dtype) -> np.dtype:
    return np.dtype(dtype).newbyteorder("<")


def save_checkpoint(
    store: ParameterStore,
    checkpoint_dir: pathlib.Path,
    stage: TrainStage,
    model_config: ModelConfig,
    config_hash: str,
) -> CheckpointManifest:
    """Write the checkpoint into a temporary directory, then copy it in place."""
    precision = Precision(store.dtype.name)
    wire_dtype = _little_endian(store.dtype)

    entries = []
    offset = 0
    for name, tensor in store.items():
        nbytes = tensor.size * wire_dtype.itemsize
        entries.append(
            TensorEntry(
                name=name,
                group=store.group_of(name),
                shape=list(tensor.shape),
                precision=precision,
                offset=offset,
                nbytes=nbytes,
            )
        )
        offset += nbytes

    manifest = CheckpointManifest(
        stage=stage,
        config_hash=config_hash,
        model=model_config,
        frozen_groups=sorted(store.frozen_groups, key=lambda group: group.value),
        tensors=entries,
    )

    with tempfile.TemporaryDirectory("_checkpoint") as tmp_str:
        tmp_dir = pathlib.Path(tmp_str)

        with (tmp_dir / PAYLOAD_NAME).open("wb") as payload_file:
            for _, tensor in store.items():
                payload_file.write(tensor.data.astype(wire_dtype).tobytes())

        with (tmp_dir / MANIFEST_NAME).open("wb") as manifest_file:
            manifest_file.write(
                orjson.dumps(orjson.loads(manifest.json()), option=orjson.OPT_INDENT_2)
            )

        outputs.copy_files(tmp_dir, checkpoint_dir)

    logger.info("Saved %s checkpoint with %d tensors to %s", stage.value, len(entries), checkpoint_dir)
    return manifest


def read_manifest(checkpoint_dir: pathlib.Path) -> CheckpointManifest:
    manifest_path = checkpoint_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise ResourceError(f"No checkpoint manifest at {manifest_path}")

    try:
        return CheckpointManifest.parse_obj(orjson.loads(manifest_path.read_bytes()))
    except (orjson.JSONDecodeError, pydantic.ValidationError) as e:
        raise CheckpointMismatchError(f"Unreadable checkpoint manifest {manifest_path}: {e}")


def load_checkpoint(
    checkpoint_dir: pathlib.Path,
    expected_hash: Optional[str] = None,
    force: bool = False,
) -> Checkpoint:
    """Load a checkpoint written by `save_checkpoint`.

    A config-hash mismatch raises unless `force` is set, in which case it
    is logged and the checkpoint is loaded anyway.
    """
    manifest = read_manifest(checkpoint_dir)

    if expected_hash is not None and manifest.config_hash != expected_hash:
        if not force:
            raise CheckpointMismatchError(
                f"Checkpoint {checkpoint_dir} was written for config {manifest.config_hash}, "
                f"current config is {expected_hash}; pass --force to load it anyway"
            )
        logger.warning(
            "Loading %s despite config hash mismatch (%s != %s)",
            checkpoint_dir,
            manifest.config_hash,
            expected_hash,
        )

    payload_path = checkpoint_dir / manifest.payload
    if not payload_path.exists():
        raise ResourceError(f"No checkpoint payload at {payload_path}")
    payload = payload_path.read_bytes()

    expected_size = sum(entry.nbytes for entry in manifest.tensors)
    if len(payload) != expected_size:
        raise CheckpointMismatchError(
            f"Payload {payload_path} has {len(payload)} bytes, manifest lists {expected_size}"
        )

    store = ParameterStore(np.dtype(manifest.model.precision.value))
    for entry in manifest.tensors:
        wire_dtype = _little_endian(np.dtype(entry.precision.value))
        count = int(np.prod(entry.shape, dtype=np.int64))
        values = np.frombuffer(payload, dtype=wire_dtype, count=count, offset=entry.offset)
        store.add(entry.name, entry.group, values.reshape(entry.shape))

    if manifest.frozen_groups:
        store.freeze(*manifest.frozen_groups)

    return Checkpoint(manifest=manifest, store=store)
