import json
import numpy as np
import pytest

from lstsr.raster import GridKind, Patch, RasterGrid, extract_patches, grid_paths, load_grid, store_grid
from lstsr.utils.errors import GridFormatError, ShapeError
from utils import make_grid, smooth_field

NaN = float("nan")


def test_grid_validation():
    grid = make_grid(np.full((3, 4), 290.0))
    assert grid.shape == (3, 4)
    assert grid.width == 4 and grid.height == 3
    assert not grid.has_nodata
    assert not grid.values.flags.writeable

    with pytest.raises(ValueError):
        make_grid(np.full((3, 4), -1.0))
    with pytest.raises(ValueError):
        make_grid(np.full((3, 4), 290.0), pixel_size_m=0)
    with pytest.raises(ValueError):
        make_grid(np.array([[290.0, np.inf]]))
    # NDVI and residual grids are not held to the Kelvin invariant
    assert make_grid(np.full((2, 2), -0.5), kind=GridKind.RESIDUAL).kind == GridKind.RESIDUAL


def test_grid_nodata_and_with_values():
    grid = make_grid([[290.0, NaN], [291.0, 292.0]])
    assert grid.has_nodata
    assert grid.nodata_mask.tolist() == [[False, True], [False, False]]

    coarser = grid.with_values(np.full((1, 1), 291.0), pixel_size_m=2000.0)
    assert coarser.pixel_size_m == 2000.0
    assert coarser.kind == GridKind.LST
    with pytest.raises(ValueError):
        grid.to_patch()


@pytest.mark.parametrize("values, kind, metadata", [
    # float32-exact values
    (np.arange(1, 13, dtype=np.float64).reshape(3, 4) + 290.0, GridKind.LST, {}),
    # values that need float64
    (np.linspace(290.1, 300.3, 12).reshape(4, 3), GridKind.LST, {'source': 'synthetic'}),
    # nodata and negative residuals
    (np.array([[0.25, NaN], [-1.5, 0.0]]), GridKind.RESIDUAL, {'kriging_jitter': False}),
])
def test_store_load_is_bit_exact(tmp_path, values, kind, metadata):
    grid = RasterGrid.from_array(values, pixel_size_m=250.0, kind=kind, metadata=metadata)
    store_grid(grid, tmp_path / 'scene.lstgrid')
    loaded = load_grid(tmp_path / 'scene')
    assert loaded == grid
    assert np.array_equal(np.isnan(loaded.values), np.isnan(values))


def test_store_picks_narrowest_dtype(tmp_path):
    store_grid(make_grid(np.full((2, 2), 300.0)), tmp_path / 'a')
    store_grid(make_grid(np.full((2, 2), 300.1)), tmp_path / 'b')
    assert json.loads((tmp_path / 'a.json').read_text())['dtype'] == 'f32le'
    assert json.loads((tmp_path / 'b.json').read_text())['dtype'] == 'f64le'
    assert (tmp_path / 'a.bin').stat().st_size == 4 * 4
    assert (tmp_path / 'b.bin').stat().st_size == 4 * 8


def test_load_rejects_corrupt_pairs(tmp_path):
    with pytest.raises(GridFormatError):
        load_grid(tmp_path / 'missing')

    store_grid(make_grid(np.full((2, 3), 300.0)), tmp_path / 'g')
    header_path, payload_path = grid_paths(tmp_path / 'g.lstgrid')

    payload_path.write_bytes(payload_path.read_bytes()[:-1])
    with pytest.raises(GridFormatError):
        load_grid(tmp_path / 'g')

    header = json.loads(header_path.read_text())
    header['width'] = 0
    header_path.write_text(json.dumps(header))
    with pytest.raises(GridFormatError):
        load_grid(tmp_path / 'g')

    header_path.write_text('{not json')
    with pytest.raises(GridFormatError):
        load_grid(tmp_path / 'g')


@pytest.mark.parametrize("key, value", [
    ('width', 3.5),
    ('width', 3.0),
    ('height', '2'),
    ('height', True),
    ('width', None),
])
def test_load_rejects_non_integer_dimensions(tmp_path, key, value):
    store_grid(make_grid(np.full((2, 3), 300.0)), tmp_path / 'g')
    header_path, _ = grid_paths(tmp_path / 'g')
    header = json.loads(header_path.read_text())
    header[key] = value
    header_path.write_text(json.dumps(header))
    with pytest.raises(GridFormatError):
        load_grid(tmp_path / 'g')


def test_unknown_header_keys_are_ignored(tmp_path):
    store_grid(make_grid(np.full((2, 2), 300.0)), tmp_path / 'g')
    header_path, _ = grid_paths(tmp_path / 'g')
    header = json.loads(header_path.read_text())
    header['sensor'] = 'MODIS'
    header_path.write_text(json.dumps(header))
    assert load_grid(tmp_path / 'g').shape == (2, 2)


def test_extract_patches_tiles_the_grid():
    grid = make_grid(smooth_field(128))
    patches = extract_patches(grid, size=64)
    assert [p.offset for p in patches] == [(0, 0), (0, 64), (64, 0), (64, 64)]
    assert np.array_equal(patches[3].data, grid.values[64:, 64:])

    overlapping = extract_patches(grid, size=64, stride=32)
    assert len(overlapping) == 9


def test_extract_patches_skips_cloudy_windows():
    values = smooth_field(128)
    values[70, 10] = NaN
    patches = extract_patches(make_grid(values), size=64)
    assert [p.offset for p in patches] == [(0, 0), (0, 64), (64, 64)]
    assert all(not np.isnan(p.data).any() for p in patches)


@pytest.mark.parametrize("nodata_fraction", [0.005, 0.00002])
def test_extract_patches_matches_window_scan(nodata_fraction):
    rng = np.random.default_rng(14)
    values = rng.uniform(280.0, 320.0, size=(1200, 1200))
    values[rng.random((1200, 1200)) < nodata_fraction] = NaN
    patches = extract_patches(make_grid(values), size=64, stride=64)

    clean = [
        (row, col)
        for row in range(0, 1200 - 64 + 1, 64)
        for col in range(0, 1200 - 64 + 1, 64)
        if not np.isnan(values[row:row + 64, col:col + 64]).any()
    ]
    assert [p.offset for p in patches] == clean
    assert all(np.array_equal(p.data, values[r:r + 64, c:c + 64]) for p, (r, c) in zip(patches, clean))


def test_extract_patches_rejects_bad_sizes():
    grid = make_grid(smooth_field(64))
    with pytest.raises(ShapeError):
        extract_patches(grid, size=65)
    with pytest.raises(ShapeError):
        extract_patches(grid, size=32, stride=0)


def test_patch_rejects_nodata():
    with pytest.raises(ValueError):
        Patch(data=np.array([[1.0, NaN]]))
