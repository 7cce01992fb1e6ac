import numpy as np
import pytest

from lstsr.datasets import (
    PatchDataset, SplitTag, available_splits, build_dataset, load_dataset, save_dataset
)
from lstsr.raster import Patch
from lstsr.resample import make_ilr
from lstsr.utils.errors import ShapeError
from utils import smooth_patches


def test_build_dataset_split_sizes_and_norm_max():
    patches = smooth_patches(8)
    train_set, test_set = build_dataset(patches, ratio=4, seed=0)
    assert len(train_set) == 6 and len(test_set) == 2
    assert train_set.split == SplitTag.TRAIN and test_set.split == SplitTag.TEST
    assert train_set.norm_max == pytest.approx(train_set.hr.max())
    assert test_set.norm_max == train_set.norm_max

    # every source patch lands in exactly one split
    all_hr = np.concatenate([train_set.hr, test_set.hr])
    sources = np.stack([p.data for p in patches])
    assert sorted(map(bytes, all_hr)) == sorted(map(bytes, sources))


def test_build_dataset_pairs_hr_with_ilr():
    patches = smooth_patches(4)
    train_set = build_dataset(patches, ratio=2, split=(1.0, 0.0), seed=1)[0]
    for hr, ilr in train_set.pairs():
        np.testing.assert_array_equal(ilr, make_ilr(hr, 2).data)


def test_build_dataset_is_seeded():
    patches = smooth_patches(10)
    a = build_dataset(patches, ratio=4, seed=7)[0]
    b = build_dataset(patches, ratio=4, seed=7)[0]
    c = build_dataset(patches, ratio=4, seed=8)[0]
    assert np.array_equal(a.hr, b.hr)
    assert not np.array_equal(a.hr, c.hr)


def test_build_dataset_three_way_split():
    splits = build_dataset(smooth_patches(10), ratio=4, split=(0.6, 0.2, 0.2))
    assert [s.split for s in splits] == [SplitTag.TRAIN, SplitTag.TEST, SplitTag.VALIDATION]
    assert [len(s) for s in splits] == [6, 2, 2]


@pytest.mark.parametrize("patches, ratio, split, error", [
    ([], 4, (0.75, 0.25), ValueError),
    (smooth_patches(4), 4, (0.5, 0.6), ValueError),
    (smooth_patches(4), 4, (0.0, 1.0), ValueError),
    (smooth_patches(2) + smooth_patches(1, size=32), 4, (0.75, 0.25), ShapeError),
    (smooth_patches(4), 3, (0.75, 0.25), ShapeError),
])
def test_build_dataset_errors(patches, ratio, split, error):
    with pytest.raises(error):
        build_dataset(patches, ratio=ratio, split=split)


def test_batch_iterator_normalizes_and_covers_all_records():
    train_set = build_dataset(smooth_patches(5), ratio=4, split=(1.0, 0.0))[0]
    batches = list(train_set.batch_iterator(batch_size=2))
    assert [b[0].shape for b in batches] == [(2, 1, 16, 16), (2, 1, 16, 16), (1, 1, 16, 16)]
    hr = np.concatenate([b[1] for b in batches])
    assert hr.max() == pytest.approx(1.0)
    np.testing.assert_allclose(train_set.denormalize(hr[:, 0]), train_set.hr)

    order = np.array([4, 0])
    (ilr, _), = list(train_set.batch_iterator(batch_size=8, order=order))
    np.testing.assert_allclose(ilr[:, 0], train_set.normalize(train_set.ilr[order]))


def test_patch_dataset_invariants():
    hr = np.full((2, 8, 8), 300.0)
    with pytest.raises(ValueError):
        PatchDataset(hr=hr, ilr=np.full((2, 8, 4), 300.0), norm_max=300.0, ratio=2)
    with pytest.raises(ValueError):
        PatchDataset(hr=hr, ilr=hr, norm_max=0.0, ratio=2)
    with pytest.raises(ValueError):
        PatchDataset(hr=hr, ilr=hr, norm_max=250.0, ratio=2)
    # held-out splits may exceed the train maximum
    assert len(PatchDataset(hr=hr, ilr=hr, norm_max=250.0, ratio=2, split=SplitTag.TEST)) == 2


def test_save_load_dataset(tmp_path):
    train_set, test_set = build_dataset(smooth_patches(4), ratio=4, split=(0.5, 0.5))
    save_dataset(train_set, tmp_path)
    assert available_splits(tmp_path) == [SplitTag.TRAIN]
    save_dataset(test_set, tmp_path)
    assert available_splits(tmp_path) == [SplitTag.TRAIN, SplitTag.TEST]

    loaded = load_dataset(tmp_path, 'test')
    assert loaded.split == SplitTag.TEST
    assert loaded.norm_max == test_set.norm_max
    assert loaded.ratio == 4
    np.testing.assert_array_equal(loaded.hr, test_set.hr)
    np.testing.assert_array_equal(loaded.offsets, test_set.offsets)

    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path, SplitTag.VALIDATION)


def test_offsets_follow_the_patches():
    patches = [Patch(data=p.data, row=16 * i, col=0) for i, p in enumerate(smooth_patches(4))]
    train_set = build_dataset(patches, ratio=4, split=(1.0, 0.0))[0]
    for hr, (row, _) in zip(train_set.hr, train_set.offsets):
        np.testing.assert_array_equal(hr, patches[row // 16].data)
