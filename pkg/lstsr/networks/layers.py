import math
import numpy as np

from abc import ABC, abstractmethod
from pydantic import BaseModel
from typing import Iterator, Optional, Tuple
from lstsr.autodiff.tensor import Tensor
from lstsr.autodiff.ops import add, batchnorm2d, conv2d, conv_transpose2d, relu, upsample_nearest


def kaiming_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, dtype) -> Tensor:
    bound = math.sqrt(6.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


def zeros(shape: Tuple[int, ...], dtype) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


class Layer(BaseModel, ABC):
    """
    Base class for network building blocks.

    Trainable tensors, running-statistic buffers and sub-layers are declared as fields;
    their declaration order fixes the parameter names and the initialization order.
    """

    class Config:
        arbitrary_types_allowed = True

    @abstractmethod
    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        """
        Apply the layer.

        Args:
            x (Tensor): `(N, C, H, W)` input.
            training (bool): Use batch statistics and update running statistics.

        Returns:
            Tensor: Layer output.
        """

    def __call__(self, x: Tensor, training: bool = False) -> Tensor:
        return self.forward(x, training=training)

    def named_parameters(self, prefix: str = '') -> Iterator[Tuple[str, Tensor]]:
        for name in type(self).model_fields:
            value = getattr(self, name)
            if isinstance(value, Tensor):
                yield prefix + name, value
            elif isinstance(value, Layer):
                yield from value.named_parameters(f'{prefix}{name}.')

    def named_buffers(self, prefix: str = '') -> Iterator[Tuple[str, np.ndarray]]:
        for name in type(self).model_fields:
            value = getattr(self, name)
            if isinstance(value, np.ndarray):
                yield prefix + name, value
            elif isinstance(value, Layer):
                yield from value.named_buffers(f'{prefix}{name}.')


class Conv2dLayer(Layer):
    weight: Tensor
    bias: Tensor
    stride: int = 1
    padding: int = 0

    @classmethod
    def create(cls, c_in: int, c_out: int, kernel: int, rng: np.random.Generator, dtype,
               stride: int = 1, padding: Optional[int] = None) -> 'Conv2dLayer':
        return cls(
            weight=kaiming_uniform(rng, (c_out, c_in, kernel, kernel), c_in * kernel * kernel, dtype),
            bias=zeros((c_out,), dtype),
            stride=stride,
            padding=kernel // 2 if padding is None else padding
        )

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        return conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class BatchNormLayer(Layer):
    gamma: Tensor
    beta: Tensor
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def create(cls, channels: int, dtype) -> 'BatchNormLayer':
        return cls(
            gamma=Tensor(np.ones(channels, dtype=dtype), requires_grad=True),
            beta=zeros((channels,), dtype),
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype)
        )

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        return batchnorm2d(x, self.gamma, self.beta, self.running_mean, self.running_var,
                           training=training, momentum=self.momentum, eps=self.eps)


class ConvBlock(Layer):
    """Convolution, batch normalization, ReLU."""
    conv: Conv2dLayer
    bn: BatchNormLayer

    @classmethod
    def create(cls, c_in: int, c_out: int, kernel: int, rng: np.random.Generator, dtype) -> 'ConvBlock':
        return cls(conv=Conv2dLayer.create(c_in, c_out, kernel, rng, dtype), bn=BatchNormLayer.create(c_out, dtype))

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        return relu(self.bn(self.conv(x), training=training))


class ResidualUnit(Layer):
    """
    Two convolution blocks plus a skip connection.

    The skip is the identity when channel counts agree, otherwise a 1x1 projection.
    """
    conv1: ConvBlock
    conv2: ConvBlock
    projection: Optional[Conv2dLayer] = None

    @classmethod
    def create(cls, c_in: int, c_out: int, kernel: int, rng: np.random.Generator, dtype) -> 'ResidualUnit':
        return cls(
            conv1=ConvBlock.create(c_in, c_out, kernel, rng, dtype),
            conv2=ConvBlock.create(c_out, c_out, kernel, rng, dtype),
            projection=Conv2dLayer.create(c_in, c_out, 1, rng, dtype) if c_in != c_out else None
        )

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        out = self.conv2(self.conv1(x, training=training), training=training)
        skip = x if self.projection is None else self.projection(x)
        return add(out, skip)


class TransposedUpsample(Layer):
    """x2 upsampling by a stride-2, kernel-2 transposed convolution."""
    weight: Tensor
    bias: Tensor

    @classmethod
    def create(cls, c_in: int, c_out: int, rng: np.random.Generator, dtype) -> 'TransposedUpsample':
        return cls(weight=kaiming_uniform(rng, (c_in, c_out, 2, 2), c_out * 4, dtype), bias=zeros((c_out,), dtype))

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        return conv_transpose2d(x, self.weight, self.bias, stride=2)


class NearestUpsample(Layer):
    """x2 nearest-neighbour upsampling followed by a convolution."""
    conv: Conv2dLayer

    @classmethod
    def create(cls, c_in: int, c_out: int, kernel: int, rng: np.random.Generator, dtype) -> 'NearestUpsample':
        return cls(conv=Conv2dLayer.create(c_in, c_out, kernel, rng, dtype))

    def forward(self, x: Tensor, training: bool = False) -> Tensor:
        return self.conv(upsample_nearest(x, 2))
