import enum
import numpy as np

from unittest.mock import patch
from lstsr.networks.mrunet import MruNetConfig
from lstsr.raster.base import GridKind, Patch, RasterGrid
from lstsr.training.config import TrainConfig


class PatchedCalls(enum.Enum):
    TRAIN = 'lstsr.cli.main.train'
    LOAD_CHECKPOINT = 'lstsr.cli.main.load_checkpoint'


def patching(target_function, data, strict=False):
    """
    A decorator that patches the specified function, making it return the expected output for the given input.

    Args:
    - target_function (str): The function to patch, in 'module.function' format.
    - data (list of dict): A list containing dictionaries with 'input' and 'output' keys.
      Inputs are compared with `==`, so only list scalar arguments there.

    Example:
    @patching(target_function='lstsr.cli.main.train', data=[{"input": {"verbose": True}, "output": (net, history)}])
    def test_my_function():
        my_function()
    """

    def decorator(test_func):
        def wrapper(*args, **kwargs):
            call_index = [0]

            def side_effect(*args, **kwargs):

                if call_index[0] >= len(data):
                    raise AssertionError(f"Unexpected call number {call_index[0]} to {target_function}")

                expected_input = data[call_index[0]]['input']
                expected_output = data[call_index[0]]['output']

                # Merging positional arguments into the keyword arguments for comparison
                actual_input = {**kwargs}
                for i, value in enumerate(args):
                    actual_input[f"arg_{i}"] = value

                if strict and set(actual_input) != set(expected_input):
                    raise AssertionError(
                        f"Expected arguments {sorted(expected_input)}\n\n"
                        f"but got {sorted(actual_input)}\non call number {call_index[0]} to {target_function}")
                for key, value in expected_input.items():
                    if key not in actual_input:
                        raise AssertionError(
                            f"Expected input {expected_input}\n\n"
                            f"but key '{key}' was missing on actual call number {call_index[0]} "
                            f"to {target_function}.")
                    if actual_input[key] != value:
                        raise AssertionError(
                            f"actual_input['{key}'] = {actual_input[key]!r} != {value!r}\n"
                            f"on call number {call_index[0]} to {target_function}.")

                call_index[0] += 1
                return expected_output

            with patch(target_function, side_effect=side_effect):
                return test_func(*args, **kwargs)

        return wrapper

    return decorator


def make_grid(values, pixel_size_m=1000.0, kind=GridKind.LST) -> RasterGrid:
    return RasterGrid.from_array(np.asarray(values, dtype=np.float64), pixel_size_m=pixel_size_m, kind=kind)


def smooth_field(size=64, seed=0, mean=300.0, amplitude=3.0) -> np.ndarray:
    """Sum of a few random low-frequency sinusoids around `mean` Kelvin."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    field = np.full((size, size), mean)
    for _ in range(4):
        fy, fx = rng.uniform(0.5, 3.0, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        field += amplitude / 4 * np.sin(2 * np.pi * (fy * y + fx * x) + phase)
    return field


def smooth_patches(n, size=16, seed=0):
    return [Patch(data=smooth_field(size, seed=seed + i)) for i in range(n)]


def tiny_model(**kwargs) -> MruNetConfig:
    return MruNetConfig(**{'levels': 2, 'base_filters': 2, **kwargs})


def tiny_train_config(**kwargs) -> TrainConfig:
    defaults = dict(
        epochs=2, batch_size=4, lr=1e-3, lr_drop_epoch=2, lr_drop_factor=10, ratio=2,
        model=tiny_model(), dtype='float64'
    )
    return TrainConfig(**{**defaults, **kwargs})
