from pathlib import Path
from pydantic import BaseModel, Field, model_validator
from typing import Optional, Union
from lstsr.networks.mrunet import MruNetConfig, DTYPES


class TrainConfig(BaseModel):
    """
    Training protocol.

    Attributes:
        epochs (int): Passes over the train set. Defaults to 300.
        batch_size (int): Mini-batch size. Defaults to 32.
        lr (float): Learning rate before the drop. Defaults to 1e-4.
        lr_drop_epoch (int): First epoch (0-based) trained at the dropped rate. Defaults to 50.
        lr_drop_factor (float): Divisor applied to `lr` from `lr_drop_epoch` on. Defaults to 100.
        seed (int): Seed of weight initialization and batch shuffling.
        ratio (int): Degradation ratio the network is trained for. Defaults to 4.
        checkpoint_every (int, optional): Write a checkpoint every this many epochs.
        max_steps (int, optional): Stop after this many optimizer steps.
        model (MruNetConfig): Network architecture.
        dtype (str): Training precision, 'float32' or 'float64'. Defaults to 'float32'.
        zero_head (bool): Start from a zeroed residual head, i.e. from the bicubic input. Defaults to False.
    """
    epochs: int = 300
    batch_size: int = 32
    lr: float = 1e-4
    lr_drop_epoch: int = 50
    lr_drop_factor: float = 100.0
    seed: int = 0
    ratio: int = 4
    checkpoint_every: Optional[int] = None
    max_steps: Optional[int] = None
    model: MruNetConfig = Field(default_factory=MruNetConfig)
    dtype: str = 'float32'
    zero_head: bool = False

    @model_validator(mode='after')
    def _check_invariants(self) -> 'TrainConfig':
        if self.epochs < 1:
            raise ValueError(f'epochs must be >= 1, got {self.epochs}')
        if self.batch_size < 1:
            raise ValueError(f'batch_size must be >= 1, got {self.batch_size}')
        if self.lr <= 0 or self.lr_drop_factor <= 0:
            raise ValueError('lr and lr_drop_factor must be > 0')
        if not 0 <= self.lr_drop_epoch <= self.epochs:
            raise ValueError(f'lr_drop_epoch must lie in [0, epochs], got {self.lr_drop_epoch}')
        if self.ratio < 2:
            raise ValueError(f'ratio must be >= 2, got {self.ratio}')
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ValueError('checkpoint_every must be >= 1')
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError('max_steps must be >= 1')
        if self.dtype not in DTYPES:
            raise ValueError(f'dtype must be one of {sorted(DTYPES)}, got "{self.dtype}"')
        return self

    def lr_at(self, epoch: int) -> float:
        """Piecewise-constant schedule: `lr` before `lr_drop_epoch`, `lr / lr_drop_factor` after."""
        return self.lr if epoch < self.lr_drop_epoch else self.lr / self.lr_drop_factor

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'TrainConfig':
        return cls.model_validate_json(Path(path).read_text())
