import enum
import numpy as np

from pydantic import BaseModel, model_validator
from typing import Dict, Iterator, List, Tuple, Union
from lstsr.autodiff.ops import add, concat_channels
from lstsr.autodiff.tensor import Tensor, no_grad
from lstsr.networks.layers import (
    Layer, ConvBlock, Conv2dLayer, ResidualUnit, TransposedUpsample, NearestUpsample
)
from lstsr.utils.errors import ShapeError

DTYPES = {'float32': np.float32, 'float64': np.float64}


class UpsampleKind(enum.Enum):
    TRANSPOSED = 'transposed'
    NEAREST_CONV = 'nearest_conv'


class MruNetConfig(BaseModel):
    """
    Multi-residual U-Net hyperparameters.

    Attributes:
        levels (int): Encoder depth. Defaults to 4.
        base_filters (int): Filters of the first level, doubled at every level. Defaults to 64.
        kernel (int): Odd kernel size of the convolution blocks. Defaults to 3.
        bridge_blocks (int): Residual units in the bridge. Defaults to 1.
        upsample (UpsampleKind): Decoder x2 upsampling operator. Defaults to a transposed convolution.
        in_channels (int): Input channels. Defaults to 1.
        out_channels (int): Output channels; must equal `in_channels` for the global residual. Defaults to 1.
    """
    levels: int = 4
    base_filters: int = 64
    kernel: int = 3
    bridge_blocks: int = 1
    upsample: UpsampleKind = UpsampleKind.TRANSPOSED
    in_channels: int = 1
    out_channels: int = 1

    class Config:
        frozen = True

    @model_validator(mode='after')
    def _check_invariants(self) -> 'MruNetConfig':
        if self.levels < 1:
            raise ValueError(f'levels must be >= 1, got {self.levels}')
        if self.base_filters < 1 or self.bridge_blocks < 1:
            raise ValueError('base_filters and bridge_blocks must be >= 1')
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f'kernel must be a positive odd size, got {self.kernel}')
        if self.in_channels != self.out_channels:
            raise ValueError('the global residual needs in_channels == out_channels')
        return self

    def filters(self, level: int) -> int:
        """Channel width of encoder level `level` (1-based); level `levels + 1` is the bridge."""
        return self.base_filters * 2 ** (level - 1)

    @property
    def divisor(self) -> int:
        return 2 ** self.levels


class EncoderLevel(Layer):
    res: ResidualUnit
    block: ConvBlock
    down: Conv2dLayer

    def encode(self, x: Tensor, training: bool = False) -> Tuple[Tensor, Tensor]:
        """Returns (skip features, downsampled features)."""
        skip = self.block(self.res(x, training=training), training=training)
        return skip, self.down(skip)

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        return self.encode(x, training=training)[1]


class DecoderLevel(Layer):
    up: Union[TransposedUpsample, NearestUpsample]
    res: ResidualUnit
    block: ConvBlock

    def forward(self, x: Tensor, skip: Tensor, training: bool = False) -> Tensor:
        """Upsample `x`, concatenate the matching encoder skip features and refine."""
        upsampled = self.up(x)
        if upsampled.shape != skip.shape:
            raise ShapeError(f'decoder features {upsampled.shape} do not match skip features {skip.shape}')
        merged = concat_channels(upsampled, skip)
        return self.block(self.res(merged, training=training), training=training)


class MruNet(BaseModel):
    """
    Multi-residual U-Net: maps an ILR image to a residual image and returns ILR + residual.

    Attributes:
        config (MruNetConfig): Architecture.
        input_block (ConvBlock): Lifts the input to `base_filters` channels.
        encoders (List[EncoderLevel]): Levels 1..L.
        bridge (List[ResidualUnit]): Residual units at the bottom of the U.
        decoders (List[DecoderLevel]): Levels L..1.
        head (Conv2dLayer): 1x1 convolution producing the residual image.
        norm_max (float): Normalization constant of the training set, carried for inference.
    """
    config: MruNetConfig
    input_block: ConvBlock
    encoders: List[EncoderLevel]
    bridge: List[ResidualUnit]
    decoders: List[DecoderLevel]
    head: Conv2dLayer
    norm_max: float = 1.0

    class Config:
        arbitrary_types_allowed = True

    @property
    def dtype(self):
        return self.head.weight.dtype

    def children(self) -> Iterator[Tuple[str, Layer]]:
        """Top-level layers with their stable name prefixes."""
        yield 'input', self.input_block
        for k, level in enumerate(self.encoders, start=1):
            yield f'enc{k}', level
        for i, unit in enumerate(self.bridge, start=1):
            yield ('bridge' if len(self.bridge) == 1 else f'bridge{i}'), unit
        for offset, level in enumerate(self.decoders):
            yield f'dec{self.config.levels - offset}', level
        yield 'head', self.head

    def named_parameters(self) -> List[Tuple[str, Tensor]]:
        return [item for prefix, layer in self.children() for item in layer.named_parameters(prefix + '.')]

    def named_buffers(self) -> List[Tuple[str, np.ndarray]]:
        return [item for prefix, layer in self.children() for item in layer.named_buffers(prefix + '.')]

    def parameters(self) -> List[Tensor]:
        return [tensor for _, tensor in self.named_parameters()]

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {name: tensor.data for name, tensor in self.named_parameters()}
        state.update(self.named_buffers())
        return state

    def num_parameters(self) -> int:
        """Number of trainable scalars."""
        return sum(tensor.size for tensor in self.parameters())

    def zero_head(self) -> None:
        """Zero the residual head so the network returns its input."""
        self.head.weight.data[...] = 0
        self.head.bias.data[...] = 0

    def forward(self, ilr: Tensor, training: bool = False) -> Tensor:
        """
        Predict the residual image and add it to the input.

        Args:
            ilr (Tensor): `(N, C, H, W)` normalized ILR input; H and W divisible by `2 ** levels`.
            training (bool): Batch-statistics mode (updates running statistics).

        Returns:
            Tensor: `ilr + residual`, same shape as `ilr`.

        Raises:
            ShapeError: Wrong rank or channels, or spatial size not divisible by `2 ** levels`.
        """
        if ilr.ndim != 4 or ilr.shape[1] != self.config.in_channels:
            raise ShapeError(f'expected (N, {self.config.in_channels}, H, W) input, got {ilr.shape}')
        h, w = ilr.shape[2:]
        if h % self.config.divisor or w % self.config.divisor:
            raise ShapeError(f'input size {h}x{w} must be divisible by 2^levels = {self.config.divisor}')

        x = self.input_block(ilr, training=training)
        skips = []
        for k, level in enumerate(self.encoders, start=1):
            skip, x = level.encode(x, training=training)
            expected = (self.config.filters(k), h >> (k - 1), w >> (k - 1))
            if skip.shape[1:] != expected:
                raise ShapeError(f'encoder level {k} produced {skip.shape[1:]}, expected {expected}')
            skips.append(skip)
        for unit in self.bridge:
            x = unit(x, training=training)
        for level, skip in zip(self.decoders, reversed(skips)):
            x = level.forward(x, skip, training=training)
        return add(ilr, self.head(x))

    def __call__(self, ilr: Tensor, training: bool = False) -> Tensor:
        return self.forward(ilr, training=training)

    def predict(self, ilr: np.ndarray) -> np.ndarray:
        """Eval-mode forward on a plain `(N, C, H, W)` array, without recording a graph."""
        with no_grad():
            return self.forward(Tensor(np.asarray(ilr, dtype=self.dtype)), training=False).data


def _upsample(config: MruNetConfig, c_in: int, c_out: int, rng, dtype):
    if config.upsample == UpsampleKind.TRANSPOSED:
        return TransposedUpsample.create(c_in, c_out, rng, dtype)
    return NearestUpsample.create(c_in, c_out, config.kernel, rng, dtype)


def build(config: MruNetConfig = None, seed: int = 0, dtype: str = 'float32') -> MruNet:
    """
    Build a Multi-residual U-Net with seeded Kaiming-uniform weights.

    Layers are initialized in order: input block, encoder levels 1..L, bridge, decoder levels L..1, head.
    Biases and batch-norm shifts start at zero and batch-norm scales at one.

    Args:
        config (MruNetConfig): Architecture. Defaults to `MruNetConfig()`.
        seed (int): Initialization seed.
        dtype (str): 'float32' (training) or 'float64' (gradient checks).

    Returns:
        MruNet: The freshly initialized network.
    """
    config = config or MruNetConfig()
    if dtype not in DTYPES:
        raise ValueError(f'dtype must be one of {sorted(DTYPES)}, got "{dtype}"')
    np_dtype = DTYPES[dtype]
    rng = np.random.default_rng(seed)
    k = config.kernel

    input_block = ConvBlock.create(config.in_channels, config.filters(1), k, rng, np_dtype)
    encoders = []
    for level in range(1, config.levels + 1):
        c = config.filters(level)
        encoders.append(EncoderLevel(
            res=ResidualUnit.create(c, c, k, rng, np_dtype),
            block=ConvBlock.create(c, c, k, rng, np_dtype),
            down=Conv2dLayer.create(c, 2 * c, 3, rng, np_dtype, stride=2, padding=1)
        ))
    c_bridge = config.filters(config.levels + 1)
    bridge = [ResidualUnit.create(c_bridge, c_bridge, k, rng, np_dtype) for _ in range(config.bridge_blocks)]
    decoders = []
    for level in range(config.levels, 0, -1):
        c = config.filters(level)
        decoders.append(DecoderLevel(
            up=_upsample(config, 2 * c, c, rng, np_dtype),
            res=ResidualUnit.create(2 * c, c, k, rng, np_dtype),
            block=ConvBlock.create(c, c, k, rng, np_dtype)
        ))
    head = Conv2dLayer.create(config.filters(1), config.out_channels, 1, rng, np_dtype)
    return MruNet(config=config, input_block=input_block, encoders=encoders,
                  bridge=bridge, decoders=decoders, head=head)


def forward(net: MruNet, ilr: Tensor, training: bool = False) -> Tensor:
    return net.forward(ilr, training=training)
