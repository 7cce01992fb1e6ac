import numpy as np
import pytest

from unittest.mock import patch
from lstsr.autodiff import Tensor
from lstsr.datasets import build_dataset
from lstsr.metrics import evaluate_set
from lstsr.networks import MruNetConfig, build, save_checkpoint
from lstsr.raster import GridKind
from lstsr.resample import bicubic_upsample
from lstsr.training import (
    HISTORY_COLUMNS, TrainConfig, evaluate, feather_window, predict_dataset, super_resolve, tile_starts, train
)
from lstsr.utils.errors import DivergenceError, ShapeError
from lstsr.utils.internal_data import write_csv
from lstsr.utils.logs import progress_bar
from utils import make_grid, smooth_field, smooth_patches, tiny_model, tiny_train_config


@pytest.fixture
def splits():
    return build_dataset(smooth_patches(8, size=16), ratio=2, seed=0)


def test_default_learning_rate_schedule():
    config = TrainConfig()
    assert config.epochs == 300 and config.batch_size == 32
    assert config.lr_at(0) == 1e-4
    assert config.lr_at(49) == 1e-4
    assert config.lr_at(50) == pytest.approx(1e-6)
    assert config.lr_at(299) == pytest.approx(1e-6)


@pytest.mark.parametrize("overrides", [
    {'epochs': 0},
    {'batch_size': 0},
    {'lr': 0.0},
    {'lr_drop_epoch': 400},
    {'ratio': 1},
    {'dtype': 'float16'},
    {'max_steps': 0},
])
def test_train_config_validation(overrides):
    with pytest.raises(ValueError):
        TrainConfig(**overrides)


def test_train_config_from_file(tmp_path):
    path = tmp_path / 'train.json'
    path.write_text('{"epochs": 3, "lr": 0.001, "lr_drop_epoch": 2, "model": {"levels": 2, "base_filters": 4}}')
    config = TrainConfig.from_file(path)
    assert config.epochs == 3
    assert config.model.levels == 2 and config.model.base_filters == 4
    assert config.lr_drop_epoch == 2 and config.lr_at(2) == pytest.approx(1e-5)


def test_train_records_history(splits):
    train_set, test_set = splits
    config = tiny_train_config(epochs=3, lr_drop_epoch=2)
    net, history = train(train_set, test_set, config=config, verbose=False)
    assert list(history.records.columns) == HISTORY_COLUMNS
    assert len(history) == 3
    assert history.records['lr'].tolist() == pytest.approx([1e-3, 1e-3, 1e-4])
    assert history.steps == 3 * 2
    assert history.best_epoch == int(history.records['test_rmse'].idxmin())
    assert net.norm_max == train_set.norm_max
    assert np.all(np.isfinite(history.records['train_loss']))


def test_train_returns_the_best_epoch(splits):
    train_set, test_set = splits
    net, history = train(train_set, test_set, config=tiny_train_config(epochs=3), verbose=False)
    assert evaluate(net, test_set).rmse == pytest.approx(history.records['test_rmse'].min(), rel=1e-9)


def test_train_is_deterministic(tmp_path, splits):
    train_set, test_set = splits
    config = tiny_train_config(epochs=2)
    for run in ('a', 'b'):
        net, history = train(train_set, test_set, config=config, verbose=False)
        save_checkpoint(net, tmp_path / f'{run}.mruc')
        write_csv(history.records, tmp_path / f'{run}_history.csv')
        evaluate(net, test_set).to_csv(tmp_path / f'{run}_report.csv')
    for name in ('{}.mruc', '{}_history.csv', '{}_report.csv'):
        assert (tmp_path / name.format('a')).read_bytes() == (tmp_path / name.format('b')).read_bytes(), name


def test_zero_head_starts_from_bicubic(splits):
    train_set, test_set = splits
    config = tiny_train_config(epochs=1, lr_drop_epoch=1, lr=1e-12, zero_head=True)
    net, _ = train(train_set, test_set, config=config, verbose=False)
    bicubic = evaluate_set(list(zip(test_set.hr, test_set.ilr)))
    assert evaluate(net, test_set).rmse == pytest.approx(bicubic.rmse, rel=1e-6)


def test_train_without_test_set_and_max_steps(splits):
    train_set, _ = splits
    _, history = train(train_set, config=tiny_train_config(epochs=5, max_steps=3), verbose=False)
    assert history.steps == 3
    assert len(history) == 2
    assert history.best_epoch is None
    assert history.records['test_rmse'].isna().all()


def test_train_raises_on_divergence(splits):
    train_set, _ = splits
    with patch('lstsr.training.trainer.mse_loss', return_value=Tensor(np.array(np.nan))):
        with pytest.raises(DivergenceError):
            train(train_set, config=tiny_train_config(), verbose=False)


def test_train_writes_periodic_checkpoints(tmp_path, splits):
    train_set, _ = splits
    path = tmp_path / 'model.mruc'
    train(train_set, config=tiny_train_config(checkpoint_every=1), checkpoint_path=path, verbose=False)
    assert path.exists() and path.stat().st_size > 0


def test_predict_dataset_denormalizes(splits):
    train_set, _ = splits
    net = build(tiny_model(), dtype='float64')
    net.norm_max = train_set.norm_max
    net.zero_head()
    # an identity network returns the ILR inputs in Kelvin
    np.testing.assert_allclose(predict_dataset(net, train_set, batch_size=4), train_set.ilr, rtol=1e-12)
    assert evaluate(net, train_set).n_images == len(train_set)


@pytest.mark.slow
def test_overfits_a_small_dataset():
    train_set = build_dataset(smooth_patches(8, size=64), ratio=4, split=(1.0, 0.0))[0]
    config = TrainConfig(epochs=500, lr_drop_epoch=500, max_steps=500, batch_size=8, lr=1e-3, ratio=4,
                         model=MruNetConfig(levels=3, base_filters=32), dtype='float32')
    _, history = train(train_set, config=config, verbose=False)
    assert history.steps == 500
    losses = history.records['train_loss'].to_numpy()
    assert losses[-1] < 0.5 * losses[0]
    assert losses[-1] < 1e-3


@pytest.mark.parametrize("length, tile, overlap, expected", [
    (64, 64, 8, [0]),
    (100, 64, 8, [0, 36]),
    (120, 64, 8, [0, 56]),
    (130, 64, 8, [0, 56, 66]),
    (32, 16, 0, [0, 16]),
])
def test_tile_starts(length, tile, overlap, expected):
    assert tile_starts(length, tile, overlap) == expected


def test_feather_window_is_positive_and_flat_inside():
    window = feather_window(16, 4)
    assert window.shape == (16, 16)
    assert window.min() > 0
    assert window[8, 8] == 1.0
    assert window[0, 0] < window[2, 2]


@pytest.mark.parametrize("size, ratio, tile, overlap", [
    # single tile, no blending
    (8, 2, 16, 4),
    # blended tiles
    (10, 2, 16, 4),
    (9, 3, 16, 4),
])
def test_identity_network_reproduces_bicubic(size, ratio, tile, overlap):
    net = build(tiny_model(), dtype='float64')
    net.zero_head()
    net.norm_max = 310.0
    lr_grid = make_grid(smooth_field(size, seed=4), pixel_size_m=1000.0)
    fine = super_resolve(net, lr_grid, ratio, tile=tile, overlap=overlap)
    assert fine.shape == (size * ratio, size * ratio)
    assert fine.pixel_size_m == pytest.approx(1000.0 / ratio)
    assert fine.kind == GridKind.LST
    np.testing.assert_allclose(fine.values, bicubic_upsample(lr_grid.values, ratio).data, rtol=1e-12)


def test_constant_grid_stays_constant():
    net = build(tiny_model(), dtype='float64')
    net.zero_head()
    net.norm_max = 300.0
    fine = super_resolve(net, make_grid(np.full((20, 20), 300.0)), 4, tile=16, overlap=4)
    np.testing.assert_allclose(fine.values, 300.0, rtol=1e-12)


def test_super_resolve_errors():
    net = build(tiny_model(), dtype='float64')
    cloudy = smooth_field(8)
    cloudy[0, 0] = np.nan
    with pytest.raises(ValueError):
        super_resolve(net, make_grid(cloudy), 2, tile=16)
    with pytest.raises(ShapeError):
        super_resolve(net, make_grid(smooth_field(4)), 2, tile=16)
    with pytest.raises(ShapeError):
        super_resolve(net, make_grid(smooth_field(8)), 2, tile=18)
    with pytest.raises(ShapeError):
        super_resolve(net, make_grid(smooth_field(8)), 2, tile=16, overlap=16)


def test_super_resolve_progress_leaves_the_result_unchanged():
    net = build(tiny_model(), seed=3, dtype='float64')
    net.norm_max = 310.0
    lr_grid = make_grid(smooth_field(10, seed=4))
    with patch('lstsr.utils.logs.progress_bar', wraps=progress_bar) as bar:
        shown = super_resolve(net, lr_grid, 2, tile=16, overlap=4, verbose=True)
    bar.assert_called_once()
    quiet = super_resolve(net, lr_grid, 2, tile=16, overlap=4)
    np.testing.assert_array_equal(shown.values, quiet.values)
