from .tensor import Tensor, Function, Context, Node, Graph, backward, no_grad, grad_enabled
from .ops import (
    ConvImpl, add, relu, tensor_sum, concat_channels, slice_channels, mse_loss,
    conv2d, conv_transpose2d, upsample_nearest, batchnorm2d
)
from .optim import AdamState, Adam, adam_step
from .gradcheck import GradCheckReport, grad_check, relative_error
