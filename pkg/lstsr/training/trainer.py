import math
import numpy as np
import pandas as pd

from pathlib import Path
from pydantic import BaseModel
from typing import Dict, List, Optional, Tuple, Union
from lstsr.autodiff.ops import mse_loss
from lstsr.autodiff.optim import Adam
from lstsr.autodiff.tensor import Tensor, backward
from lstsr.datasets.patches import PatchDataset
from lstsr.metrics.report import MetricReport, evaluate_set
from lstsr.networks.checkpoint import save_checkpoint
from lstsr.networks.mrunet import MruNet, DTYPES, build
from lstsr.training.config import TrainConfig
from lstsr.utils.errors import DivergenceError
from lstsr.utils.internal_data import InternalDataFrame
from lstsr.utils.logs import print_text, print_error, print_dataframe, progress_bar
from lstsr.utils.parallel import ordered_map

HISTORY_COLUMNS = ['epoch', 'lr', 'train_loss', 'test_rmse', 'test_psnr', 'test_ssim']


class TrainHistory(BaseModel):
    """
    Per-epoch training record.

    Attributes:
        records (InternalDataFrame): One row per epoch: epoch, lr, train_loss (normalized MSE)
            and test_rmse / test_psnr / test_ssim in Kelvin (NaN without a test set).
        best_epoch (int, optional): Epoch with the lowest test RMSE; the returned network holds its weights.
        steps (int): Optimizer steps taken.
    """
    records: InternalDataFrame
    best_epoch: Optional[int] = None
    steps: int = 0

    class Config:
        arbitrary_types_allowed = True

    def __len__(self) -> int:
        return len(self.records)

    def __rich__(self) -> str:
        last = self.records.iloc[-1]
        return (f'[bold]{len(self)} epochs, {self.steps} steps[/bold]: final train loss {last["train_loss"]:.3e}, '
                f'best epoch {self.best_epoch}')


def predict_dataset(net: MruNet, dataset: PatchDataset, batch_size: int = 32) -> np.ndarray:
    """Eval-mode predictions for every ILR input, denormalized to Kelvin, `(n, H, W)`."""
    batches = [ilr for ilr, _ in dataset.batch_iterator(batch_size)]
    outputs = ordered_map(net.predict, batches)
    return dataset.denormalize(np.concatenate(outputs)[:, 0].astype(np.float64))


def evaluate(net: MruNet, dataset: PatchDataset, batch_size: int = 32) -> MetricReport:
    """Score network predictions against the HR targets of `dataset`, in Kelvin."""
    predictions = predict_dataset(net, dataset, batch_size)
    return evaluate_set(list(zip(dataset.hr, predictions)))


def _snapshot(net: MruNet) -> Dict[str, np.ndarray]:
    return {name: array.copy() for name, array in net.state_dict().items()}


def _restore(net: MruNet, state: Dict[str, np.ndarray]) -> None:
    for name, array in net.state_dict().items():
        array[...] = state[name]


def train(
    train_set: PatchDataset,
    test_set: Optional[PatchDataset] = None,
    config: Optional[TrainConfig] = None,
    checkpoint_path: Optional[Union[str, Path]] = None,
    verbose: bool = True
) -> Tuple[MruNet, TrainHistory]:
    """
    Train a Multi-residual U-Net on normalized (ILR, HR) pairs.

    Every epoch shuffles the train set with the seeded generator, minimizes the pixel MSE with Adam
    at `config.lr_at(epoch)`, then scores the test set in Kelvin. With a test set, the network
    is returned at its best-by-test-RMSE epoch.

    Args:
        train_set (PatchDataset): Training pairs; its norm_max is carried by the network.
        test_set (PatchDataset, optional): Held-out pairs scored after every epoch.
        config (TrainConfig, optional): Protocol. Defaults to `TrainConfig()`.
        checkpoint_path (Union[str, Path], optional): Where periodic checkpoints are written
            when `config.checkpoint_every` is set.
        verbose (bool): Show progress and the final history table.

    Returns:
        Tuple[MruNet, TrainHistory]: Trained network and per-epoch history.

    Raises:
        ValueError: Empty train set.
        DivergenceError: Non-finite loss.
    """
    config = config or TrainConfig()
    if len(train_set) == 0:
        raise ValueError('cannot train on an empty dataset')
    dtype = DTYPES[config.dtype]

    net = build(config.model, seed=config.seed, dtype=config.dtype)
    net.norm_max = train_set.norm_max
    if config.zero_head:
        net.zero_head()
    optimizer = Adam(net.parameters(), lr=config.lr)
    shuffle_rng = np.random.default_rng([config.seed, 1])

    rows: List[dict] = []
    best_rmse, best_epoch, best_state = math.inf, None, None
    steps = 0
    with progress_bar() as progress:
        task = progress.add_task('Training', total=config.epochs, visible=verbose)
        for epoch in range(config.epochs):
            optimizer.lr = config.lr_at(epoch)
            order = shuffle_rng.permutation(len(train_set))
            loss_sum, seen = 0.0, 0
            for ilr, hr in train_set.batch_iterator(config.batch_size, order):
                prediction = net(Tensor(ilr.astype(dtype)), training=True)
                loss = mse_loss(prediction, hr.astype(dtype))
                value = loss.item()
                if not math.isfinite(value):
                    print_error(f'Loss became {value} at epoch {epoch}, step {steps} (lr={optimizer.lr:g})')
                    raise DivergenceError(f'non-finite training loss at epoch {epoch}, step {steps}')
                optimizer.zero_grad()
                backward(loss)
                optimizer.step()
                steps += 1
                loss_sum += value * len(ilr)
                seen += len(ilr)
                if config.max_steps is not None and steps >= config.max_steps:
                    break

            row = {'epoch': epoch, 'lr': optimizer.lr, 'train_loss': loss_sum / seen,
                   'test_rmse': math.nan, 'test_psnr': math.nan, 'test_ssim': math.nan}
            if test_set is not None and len(test_set):
                report = evaluate(net, test_set, config.batch_size)
                row.update(test_rmse=report.rmse, test_psnr=report.psnr, test_ssim=report.ssim)
                if report.rmse < best_rmse:
                    best_rmse, best_epoch, best_state = report.rmse, epoch, _snapshot(net)
            rows.append(row)

            if checkpoint_path is not None and config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
                save_checkpoint(net, checkpoint_path)
            progress.update(task, advance=1, description=f'Epoch {epoch}: loss {row["train_loss"]:.3e}')
            if config.max_steps is not None and steps >= config.max_steps:
                break

    if best_state is not None:
        _restore(net, best_state)
    history = TrainHistory(records=pd.DataFrame(rows, columns=HISTORY_COLUMNS), best_epoch=best_epoch, steps=steps)
    if verbose:
        print_dataframe(history.records.tail(10), num_rows=None, title='Training history')
        if best_epoch is not None:
            print_text(f'Best test RMSE {best_rmse:.4f} K at epoch {best_epoch}', style='bold green')
    return net, history
