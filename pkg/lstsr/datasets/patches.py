import enum
import json
import numpy as np

from pathlib import Path
from pydantic import field_validator, model_validator
from typing import Iterator, List, Optional, Sequence, Tuple, Union
from lstsr.datasets.base import Dataset, Batch
from lstsr.raster.base import Patch
from lstsr.resample.interpolate import make_ilr
from lstsr.utils.errors import ShapeError
from lstsr.utils.logs import print_text

DEFAULT_SPLIT = (0.75, 0.25)


class SplitTag(enum.Enum):
    TRAIN = 'train'
    TEST = 'test'
    VALIDATION = 'validation'


SPLIT_ORDER = (SplitTag.TRAIN, SplitTag.TEST, SplitTag.VALIDATION)


class PatchDataset(Dataset):
    """
    Paired high-resolution targets and their ILR inputs, with the normalization constant.

    Attributes:
        hr (np.ndarray): `(n, H, W)` ground-truth patches in Kelvin.
        ilr (np.ndarray): `(n, H, W)` interpolated low-resolution inputs in Kelvin.
        norm_max (float): Normalization constant, the maximum HR value of the train split.
        ratio (int): Degradation ratio used to build the ILR inputs.
        split (SplitTag): Which split this dataset is.
        offsets (np.ndarray): `(n, 2)` source offsets `(row, col)` of every patch.
    """
    hr: np.ndarray
    ilr: np.ndarray
    norm_max: float
    ratio: int
    split: SplitTag = SplitTag.TRAIN
    offsets: Optional[np.ndarray] = None

    class Config:
        arbitrary_types_allowed = True

    @field_validator('hr', 'ilr', mode='before')
    def _as_stack(cls, v):
        array = np.asarray(v, dtype=np.float64)
        if array.ndim != 3:
            raise ValueError(f'expected an (n, H, W) stack, got shape {array.shape}')
        return array

    @model_validator(mode='after')
    def _check_invariants(self) -> 'PatchDataset':
        if self.hr.shape != self.ilr.shape:
            raise ValueError(f'HR stack {self.hr.shape} and ILR stack {self.ilr.shape} differ in shape')
        if self.norm_max <= 0:
            raise ValueError(f'norm_max must be positive, got {self.norm_max}')
        if self.split == SplitTag.TRAIN and len(self) and self.norm_max < self.hr.max():
            raise ValueError(f'norm_max {self.norm_max} is below the train maximum {self.hr.max()}')
        if self.offsets is None:
            self.offsets = np.zeros((len(self), 2), dtype=np.int64)
        return self

    def __len__(self) -> int:
        return self.hr.shape[0]

    @property
    def patch_shape(self) -> Tuple[int, int]:
        return self.hr.shape[1:]

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return values / self.norm_max

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        return values * self.norm_max

    def batch_iterator(self, batch_size: int = 32, order: Optional[np.ndarray] = None) -> Iterator[Batch]:
        """
        Yields normalized (ILR, HR) batches shaped `(N, 1, H, W)`.

        Args:
            batch_size (int, optional): Size of each batch to be yielded. Defaults to 32.
            order (np.ndarray, optional): Permutation of record indices. Defaults to storage order.

        Yields:
            Iterator[Batch]: (normalized ILR, normalized HR) pairs.
        """
        order = np.arange(len(self)) if order is None else np.asarray(order)
        for i in range(0, len(order), batch_size):
            idx = order[i:i + batch_size]
            yield (self.normalize(self.ilr[idx])[:, None],
                   self.normalize(self.hr[idx])[:, None])

    def pairs(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(HR, ILR) pairs in storage order."""
        return [(self.hr[i], self.ilr[i]) for i in range(len(self))]

    def info(self) -> None:
        print_text(
            f'[bold]{self.split.value}[/bold]: {len(self)} patches of {self.patch_shape}, '
            f'ratio x{self.ratio}, norm_max={self.norm_max:.3f} K')


def _split_counts(n: int, split: Sequence[float]) -> List[int]:
    bounds = np.rint(np.cumsum(split) * n).astype(int)
    bounds[-1] = n
    return list(np.diff(np.concatenate([[0], bounds])))


def build_dataset(
    hr_patches: List[Patch],
    ratio: int,
    split: Sequence[float] = DEFAULT_SPLIT,
    seed: int = 0
) -> Tuple[PatchDataset, ...]:
    """
    Pair every HR patch with its ILR input and split the pairs with a seeded shuffle.

    Args:
        hr_patches (List[Patch]): Clean ground-truth patches, all of one shape.
        ratio (int): Degradation ratio (>= 2, dividing the patch size).
        split (Sequence[float]): Two (train, test) or three (train, test, validation)
            fractions summing to 1. Defaults to 75/25.
        seed (int): Seed of the shuffle permutation.

    Returns:
        Tuple[PatchDataset, ...]: One dataset per split fraction, in train/test/validation order,
            all sharing the norm_max of the train split.

    Raises:
        ValueError: Empty patch list, bad split fractions or an empty train split.
        ShapeError: Mixed patch shapes or a ratio that does not divide the patch size.
    """
    if not hr_patches:
        raise ValueError('cannot build a dataset from an empty patch list')
    if len(split) not in (2, 3) or any(f < 0 for f in split) or abs(sum(split) - 1.0) > 1e-9:
        raise ValueError(f'split must be 2 or 3 non-negative fractions summing to 1, got {tuple(split)}')
    shape = hr_patches[0].shape
    if any(p.shape != shape for p in hr_patches):
        raise ShapeError('all patches must share one shape')
    if ratio < 2 or shape[0] % ratio or shape[1] % ratio:
        raise ShapeError(f'ratio {ratio} must be >= 2 and divide the patch shape {shape}')

    hr = np.stack([p.data for p in hr_patches])
    ilr = np.stack([make_ilr(p, ratio).data for p in hr_patches])
    offsets = np.array([p.offset for p in hr_patches], dtype=np.int64)

    order = np.random.default_rng(seed).permutation(len(hr_patches))
    counts = _split_counts(len(order), split)
    if counts[0] == 0:
        raise ValueError(f'split {tuple(split)} leaves the train set empty for {len(order)} patches')
    chunks = np.split(order, np.cumsum(counts)[:-1])
    norm_max = float(hr[chunks[0]].max())

    return tuple(
        PatchDataset(
            hr=hr[idx], ilr=ilr[idx], offsets=offsets[idx],
            norm_max=norm_max, ratio=ratio, split=tag
        )
        for tag, idx in zip(SPLIT_ORDER, chunks)
    )


def save_dataset(dataset: PatchDataset, directory: Union[str, Path]) -> None:
    """Write `<split>.npz` (hr, ilr, offsets) and `<split>.json` (norm_max, ratio) under `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = dataset.split.value
    np.savez(directory / f'{name}.npz', hr=dataset.hr, ilr=dataset.ilr, offsets=dataset.offsets)
    (directory / f'{name}.json').write_text(json.dumps(
        {'norm_max': dataset.norm_max, 'ratio': dataset.ratio, 'split': name, 'count': len(dataset)},
        indent=2, sort_keys=True))


def load_dataset(directory: Union[str, Path], split: Union[str, SplitTag] = SplitTag.TRAIN) -> PatchDataset:
    """Read one split written by `save_dataset`."""
    directory = Path(directory)
    name = SplitTag(split).value
    meta_path, arrays_path = directory / f'{name}.json', directory / f'{name}.npz'
    if not meta_path.exists() or not arrays_path.exists():
        raise FileNotFoundError(f'no "{name}" split in dataset directory {directory}')
    meta = json.loads(meta_path.read_text())
    with np.load(arrays_path) as arrays:
        return PatchDataset(
            hr=arrays['hr'], ilr=arrays['ilr'], offsets=arrays['offsets'],
            norm_max=meta['norm_max'], ratio=meta['ratio'], split=SplitTag(name)
        )


def available_splits(directory: Union[str, Path]) -> List[SplitTag]:
    directory = Path(directory)
    return [tag for tag in SPLIT_ORDER if (directory / f'{tag.value}.json').exists()]
