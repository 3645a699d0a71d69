"""
Binary checkpoint container for trained networks.

Layout: b"LOADIDNN", uint16 format version, uint32 header length, UTF-8 JSON
header, then the parameter arrays as little-endian float64 in header order.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from app.models.schemas import SCHEMA_VERSION, CheckpointHeader, ParameterEntry
from app.src.nets.network import Normalizer, init_params, named_arrays
from app.src.nets.training import TrainedModel
from app.utils.exceptions import MissingArtifactError, ConfigurationError

logger = logging.getLogger(__name__)

MAGIC = b"LOADIDNN"
_PREFIX = struct.Struct("<HI")


def save_model(path: Union[str, Path], model: TrainedModel) -> Path:
    """Write ``model`` to ``path`` and return the path."""
    path = Path(path)
    arrays = named_arrays(model.params)
    header = CheckpointHeader(
        version=SCHEMA_VERSION,
        config=model.config,
        n_inputs=next(iter(model.params.values())).input_width,
        n_outputs=model.params["output"].units,
        normalizer=model.normalizer.to_dict(),
        seed=int(model.seed),
        parameters=[ParameterEntry(name=name, shape=list(value.shape)) for name, value in arrays.items()],
    )
    header_bytes = header.model_dump_json().encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_PREFIX.pack(SCHEMA_VERSION, len(header_bytes)))
        f.write(header_bytes)
        for value in arrays.values():
            f.write(np.ascontiguousarray(value, dtype="<f8").tobytes())
    logger.info(f"Saved {model.config.cell} checkpoint to {path}")
    return path


def load_model(path: Union[str, Path]) -> TrainedModel:
    """
    Read a checkpoint written by save_model.

    Raises:
        MissingArtifactError: File absent
        ConfigurationError: Not a checkpoint, unsupported version or truncated data
    """
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"Checkpoint not found: {path}")
    data = path.read_bytes()
    if not data.startswith(MAGIC):
        raise ConfigurationError(f"{path} is not a network checkpoint")

    offset = len(MAGIC)
    version, header_length = _PREFIX.unpack_from(data, offset)
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"Unsupported checkpoint version {version} in {path}")
    offset += _PREFIX.size
    try:
        header = CheckpointHeader.model_validate_json(data[offset:offset + header_length])
    except ValidationError as e:
        raise ConfigurationError(f"Corrupt checkpoint header in {path}: {e}") from e
    offset += header_length

    # fresh containers of the right structure, then overwrite every array
    params = init_params(header.config, header.n_inputs, header.n_outputs, np.random.default_rng(0))
    arrays = named_arrays(params)
    for entry in header.parameters:
        if entry.name not in arrays:
            raise ConfigurationError(f"Unknown parameter {entry.name} in {path}")
        count = int(np.prod(entry.shape)) if entry.shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise ConfigurationError(f"Checkpoint {path} is truncated at {entry.name}")
        value = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(entry.shape)
        target = arrays[entry.name]
        if target.shape != value.shape:
            raise ConfigurationError(f"Parameter {entry.name} has shape {value.shape}, expected {target.shape}")
        target[...] = value
        offset = end

    return TrainedModel(
        config=header.config,
        params=params,
        normalizer=Normalizer.from_dict(header.normalizer),
        seed=header.seed,
    )
