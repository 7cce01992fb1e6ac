import enum
import numpy as np

from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Any, Dict, Tuple, Union

# Physical LST values are positive Kelvin; NaN encodes cloud/missing.
NODATA = float('nan')


class GridKind(enum.Enum):
    """What a grid holds. Only `LST` grids are held to the positive-Kelvin invariant."""
    LST = 'lst'
    NDVI = 'ndvi'
    RESIDUAL = 'residual'


def _as_readonly_2d(v: Any) -> np.ndarray:
    array = np.array(v, dtype=np.float64, copy=True)
    if array.ndim != 2:
        raise ValueError(f'expected a 2D array, got shape {array.shape}')
    array.flags.writeable = False
    return array


def bit_equal(a: np.ndarray, b: np.ndarray) -> bool:
    """Bitwise array equality; NaN payloads compare equal to themselves."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    return a.shape == b.shape and np.array_equal(a.view(np.uint64), b.view(np.uint64))


class RasterGrid(BaseModel):
    """
    A georeferenced-lite 2D field, row-major with a top-left origin.

    Attributes:
        width (int): Number of columns.
        height (int): Number of rows.
        pixel_size_m (float): Ground size of one pixel, in meters.
        values (np.ndarray): `(height, width)` float64 array; NaN marks nodata (cloud/missing).
        kind (GridKind): Quantity held by the grid. LST grids must be finite and > 0 K outside nodata.
        metadata (Dict[str, Any]): JSON-serialisable flags attached by producers (e.g. kriging diagnostics).
    """
    width: int
    height: int
    pixel_size_m: float
    values: np.ndarray
    kind: GridKind = GridKind.LST
    metadata: Dict[str, Any] = Field(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @field_validator('values', mode='before')
    def _validate_values(cls, v):
        array = np.array(v, dtype=np.float64, copy=True)
        # one canonical quiet-NaN bit pattern for nodata
        array[np.isnan(array)] = np.nan
        return _as_readonly_2d(array)

    @model_validator(mode='after')
    def _check_invariants(self) -> 'RasterGrid':
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f'grid dimensions must be positive, got {self.width}x{self.height}')
        if self.pixel_size_m <= 0:
            raise ValueError(f'pixel_size_m must be positive, got {self.pixel_size_m}')
        if self.values.shape != (self.height, self.width):
            raise ValueError(
                f'values has shape {self.values.shape}, expected (height, width) = ({self.height}, {self.width})')
        valid = self.values[~np.isnan(self.values)]
        if not np.all(np.isfinite(valid)):
            raise ValueError('grid values must be finite outside nodata')
        if self.kind == GridKind.LST and np.any(valid <= 0):
            raise ValueError('LST values must be > 0 K')
        return self

    @classmethod
    def from_array(
        cls,
        values: np.ndarray,
        pixel_size_m: float,
        kind: GridKind = GridKind.LST,
        metadata: Dict[str, Any] = None
    ) -> 'RasterGrid':
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f'expected a 2D array, got shape {values.shape}')
        return cls(
            width=values.shape[1],
            height=values.shape[0],
            pixel_size_m=pixel_size_m,
            values=values,
            kind=kind,
            metadata=metadata or {}
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    @property
    def nodata_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def has_nodata(self) -> bool:
        return bool(self.nodata_mask.any())

    def with_values(self, values: np.ndarray, pixel_size_m: float = None, **kwargs) -> 'RasterGrid':
        """New grid holding `values`, inheriting kind and (unless overridden) pixel size."""
        return RasterGrid.from_array(
            values,
            pixel_size_m=self.pixel_size_m if pixel_size_m is None else pixel_size_m,
            kind=kwargs.get('kind', self.kind),
            metadata=kwargs.get('metadata')
        )

    def to_patch(self) -> 'Patch':
        """Whole grid as a single patch; fails if it holds nodata."""
        return Patch(data=self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RasterGrid):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.pixel_size_m == other.pixel_size_m
            and self.kind == other.kind
            and self.metadata == other.metadata
            and bit_equal(self.values, other.values)
        )

    def __rich__(self) -> str:
        valid = self.values[~self.nodata_mask]
        value_range = f'{valid.min():.2f} .. {valid.max():.2f}' if valid.size else 'empty'
        return (
            f'[bold blue]RasterGrid[/bold blue] {self.width}x{self.height} '
            f'@ {self.pixel_size_m:g} m, kind={self.kind.value}, '
            f'nodata={int(self.nodata_mask.sum())}, range={value_range}'
        )


class Patch(BaseModel):
    """
    A nodata-free window of a grid (64x64 by default).

    Attributes:
        data (np.ndarray): 2D float64 values.
        row (int): Row offset of the window in its parent grid.
        col (int): Column offset of the window in its parent grid.
    """
    data: np.ndarray
    row: int = 0
    col: int = 0

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @field_validator('data', mode='before')
    def _validate_data(cls, v):
        array = _as_readonly_2d(v)
        if np.isnan(array).any():
            raise ValueError('patches cannot contain nodata')
        return array

    @property
    def size(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def offset(self) -> Tuple[int, int]:
        return self.row, self.col

    def __eq__(self, other) -> bool:
        if not isinstance(other, Patch):
            return NotImplemented
        return self.offset == other.offset and bit_equal(self.data, other.data)


PatchLike = Union[Patch, np.ndarray]


def as_array(patch: PatchLike) -> np.ndarray:
    """Values of a patch or plain array as float64."""
    if isinstance(patch, Patch):
        return patch.data
    if isinstance(patch, RasterGrid):
        return patch.values
    return np.asarray(patch, dtype=np.float64)
