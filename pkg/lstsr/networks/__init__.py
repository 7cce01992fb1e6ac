from .layers import (
    Layer, Conv2dLayer, BatchNormLayer, ConvBlock, ResidualUnit, TransposedUpsample, NearestUpsample
)
from .mrunet import MruNet, MruNetConfig, UpsampleKind, EncoderLevel, DecoderLevel, build, forward
from .checkpoint import save_checkpoint, load_checkpoint, MAGIC, VERSION
