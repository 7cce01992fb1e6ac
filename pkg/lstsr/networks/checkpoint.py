import json
import struct
import numpy as np

from pathlib import Path
from typing import Optional, Union
from lstsr.networks.mrunet import MruNet, MruNetConfig, build
from lstsr.utils.errors import CheckpointError
from lstsr.utils.logs import print_error

MAGIC = b'MRUC'
VERSION = 1
_PREFIX = struct.Struct('<4sIQ')
_DTYPES = {'f32le': ('<f4', 'float32'), 'f64le': ('<f8', 'float64')}


def _dtype_tag(net: MruNet) -> str:
    return 'f32le' if net.dtype == np.float32 else 'f64le'


def save_checkpoint(net: MruNet, path: Union[str, Path]) -> None:
    """
    Write parameters, running statistics, config and norm_max.

    Layout: magic `MRUC`, u32 LE version, u64 LE manifest length, UTF-8 JSON manifest
    (sorted keys), then every tensor's raw little-endian values in manifest order.
    """
    tag = _dtype_tag(net)
    np_dtype = np.dtype(_DTYPES[tag][0])
    entries, chunks, offset = [], [], 0
    tensors = [(name, t.data, 'param') for name, t in net.named_parameters()]
    tensors += [(name, array, 'buffer') for name, array in net.named_buffers()]
    for name, array, kind in tensors:
        raw = np.ascontiguousarray(array, dtype=np_dtype).tobytes()
        entries.append({'name': name, 'shape': list(array.shape), 'offset': offset, 'kind': kind})
        chunks.append(raw)
        offset += len(raw)
    manifest = json.dumps({
        'config': net.config.model_dump(mode='json'),
        'norm_max': net.norm_max,
        'dtype': tag,
        'payload_bytes': offset,
        'tensors': entries
    }, sort_keys=True).encode('utf-8')
    Path(path).write_bytes(_PREFIX.pack(MAGIC, VERSION, len(manifest)) + manifest + b''.join(chunks))


def load_checkpoint(path: Union[str, Path], expected_config: Optional[MruNetConfig] = None) -> MruNet:
    """
    Rebuild a network from a checkpoint written by `save_checkpoint`.

    Args:
        path (Union[str, Path]): Checkpoint file.
        expected_config (MruNetConfig, optional): Strict load; the stored config must equal it.

    Returns:
        MruNet: Network with bit-identical parameters, running statistics and norm_max.

    Raises:
        CheckpointError: Bad magic or version, truncated or inconsistent manifest/payload, config mismatch.
    """
    blob = Path(path).read_bytes()
    if len(blob) < _PREFIX.size:
        raise CheckpointError(f'{path}: truncated checkpoint header')
    magic, version, manifest_len = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f'{path}: not a checkpoint (magic {magic!r})')
    if version != VERSION:
        raise CheckpointError(f'{path}: unsupported checkpoint version {version}')
    start = _PREFIX.size
    if start + manifest_len > len(blob):
        raise CheckpointError(f'{path}: truncated manifest')
    try:
        manifest = json.loads(blob[start:start + manifest_len].decode('utf-8'))
        config = MruNetConfig.model_validate(manifest['config'])
        tag = manifest['dtype']
        np_dtype, dtype_name = _DTYPES[tag]
        entries = manifest['tensors']
        norm_max = float(manifest['norm_max'])
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointError(f'{path}: corrupt manifest: {e}')

    if expected_config is not None and config != expected_config:
        print_error(f'Checkpoint config {config.model_dump(mode="json")} '
                    f'does not match the expected {expected_config.model_dump(mode="json")}')
        raise CheckpointError(f'{path}: checkpoint config does not match the expected config')

    payload = blob[start + manifest_len:]
    if len(payload) != manifest.get('payload_bytes', len(payload)):
        raise CheckpointError(f'{path}: payload has {len(payload)} bytes, '
                              f'manifest expects {manifest["payload_bytes"]} (truncated file?)')

    net = build(config, seed=0, dtype=dtype_name)
    net.norm_max = norm_max
    targets = {name: t.data for name, t in net.named_parameters()}
    targets.update(net.named_buffers())
    if sorted(e['name'] for e in entries) != sorted(targets):
        raise CheckpointError(f'{path}: tensor manifest does not match the network built from its config')

    itemsize = np.dtype(np_dtype).itemsize
    for entry in entries:
        target = targets[entry['name']]
        shape = tuple(entry['shape'])
        if shape != target.shape:
            raise CheckpointError(f'{path}: tensor {entry["name"]} has shape {shape}, network expects {target.shape}')
        n_bytes = int(np.prod(shape, dtype=np.int64)) * itemsize
        offset = entry['offset']
        if offset < 0 or offset + n_bytes > len(payload):
            raise CheckpointError(f'{path}: tensor {entry["name"]} lies outside the payload (truncated file?)')
        target[...] = np.frombuffer(payload, dtype=np_dtype, count=n_bytes // itemsize, offset=offset).reshape(shape)
    return net
