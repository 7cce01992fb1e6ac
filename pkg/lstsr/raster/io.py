import json
import numpy as np

from pathlib import Path
from typing import Optional, Tuple, Union
from lstsr.raster.base import RasterGrid, GridKind
from lstsr.utils.errors import GridFormatError
from lstsr.utils.logs import print_error

GRID_SUFFIXES = ('.lstgrid', '.json', '.bin')
DTYPES = {'f32le': '<f4', 'f64le': '<f8'}

PathLike = Union[str, Path]


def grid_paths(path: PathLike) -> Tuple[Path, Path]:
    """
    Header and payload paths of a `.lstgrid` pair.

    `scene.lstgrid`, `scene.json`, `scene.bin` and `scene` all name the pair `scene.json` + `scene.bin`.
    """
    path = Path(path)
    if path.suffix in GRID_SUFFIXES:
        path = path.with_suffix('')
    return path.with_name(path.name + '.json'), path.with_name(path.name + '.bin')


def _lossless_dtype(values: np.ndarray) -> str:
    as_f32 = values.astype('<f4')
    same = np.array_equal(as_f32.astype(np.float64), values, equal_nan=True)
    # quiet-NaN payload bits are canonicalised on both paths, so NaNs never force f64
    return 'f32le' if same else 'f64le'


def store_grid(grid: RasterGrid, path: PathLike, dtype: Optional[str] = None) -> None:
    """
    Write a grid as a `.lstgrid` pair (JSON header + raw little-endian payload).

    Args:
        grid (RasterGrid): Grid to store.
        path (PathLike): Pair name, with or without the `.lstgrid` suffix.
        dtype (str, optional): `f32le` or `f64le`. Defaults to the narrowest lossless one.

    Raises:
        OSError: If the files cannot be written.
    """
    dtype = dtype or _lossless_dtype(grid.values)
    if dtype not in DTYPES:
        raise ValueError(f'unsupported dtype "{dtype}", expected one of {list(DTYPES)}')
    header_path, payload_path = grid_paths(path)
    header = {
        'width': grid.width,
        'height': grid.height,
        'pixel_size_m': grid.pixel_size_m,
        'dtype': dtype,
        'nodata': 'nan',
        'kind': grid.kind.value,
        'metadata': grid.metadata,
    }
    payload = np.where(np.isnan(grid.values), np.nan, grid.values).astype(DTYPES[dtype])
    header_path.parent.mkdir(parents=True, exist_ok=True)
    header_path.write_text(json.dumps(header, indent=2, sort_keys=True))
    payload_path.write_bytes(payload.tobytes(order='C'))


def _dimension(header: dict, key: str) -> int:
    value = header[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f'"{key}" must be an integer, got {value!r}')
    return value


def load_grid(path: PathLike) -> RasterGrid:
    """
    Read a `.lstgrid` pair.

    Args:
        path (PathLike): Pair name, with or without the `.lstgrid` suffix.

    Returns:
        RasterGrid: The grid; nodata payload entries become NaN.

    Raises:
        GridFormatError: Missing or corrupt header, non-integer or non-positive dimensions, or payload length
            mismatch.
    """
    header_path, payload_path = grid_paths(path)
    if not header_path.exists() or not payload_path.exists():
        print_error(f'Grid "{path}" needs both {header_path.name} and {payload_path.name} next to each other.')
        raise GridFormatError(f'missing .lstgrid pair for {path}')
    try:
        header = json.loads(header_path.read_text())
        width = _dimension(header, 'width')
        height = _dimension(header, 'height')
        pixel_size_m = float(header['pixel_size_m'])
        dtype = header.get('dtype', 'f32le')
        kind = GridKind(header.get('kind', GridKind.LST.value))
    except (ValueError, KeyError, TypeError) as e:
        raise GridFormatError(f'corrupt header {header_path}: {e}') from e
    if width <= 0 or height <= 0:
        raise GridFormatError(f'non-positive dimensions {width}x{height} in {header_path}')
    if dtype not in DTYPES:
        raise GridFormatError(f'unsupported dtype "{dtype}" in {header_path}')
    if header.get('nodata', 'nan') != 'nan':
        raise GridFormatError(f'unsupported nodata encoding "{header["nodata"]}" in {header_path}')

    raw = payload_path.read_bytes()
    itemsize = np.dtype(DTYPES[dtype]).itemsize
    expected = width * height * itemsize
    if len(raw) != expected:
        raise GridFormatError(
            f'payload {payload_path} holds {len(raw)} bytes, expected {expected} for {width}x{height} {dtype}')
    values = np.frombuffer(raw, dtype=DTYPES[dtype]).astype(np.float64).reshape(height, width)
    try:
        return RasterGrid(
            width=width,
            height=height,
            pixel_size_m=pixel_size_m,
            values=values,
            kind=kind,
            metadata=header.get('metadata') or {}
        )
    except ValueError as e:
        raise GridFormatError(f'invalid grid in {header_path}: {e}') from e
