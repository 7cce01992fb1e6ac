import enum
import numpy as np

from numpy.lib.stride_tricks import sliding_window_view
from typing import Optional, Tuple, Union
from lstsr.autodiff.tensor import Context, Function, Tensor
from lstsr.utils.errors import ShapeError


class ConvImpl(enum.Enum):
    IM2COL = 'im2col'
    DIRECT = 'direct'


def _require_4d(name: str, array: np.ndarray) -> None:
    if array.ndim != 4:
        raise ShapeError(f'{name} must be (N, C, H, W), got shape {array.shape}')


def _taps(array: np.ndarray, i: int, j: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    return array[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride]


def _channels_last(array: np.ndarray) -> np.ndarray:
    """`(N, C, H, W)` -> `(N * H * W, C)`."""
    return array.transpose(0, 2, 3, 1).reshape(-1, array.shape[1])


def _channels_first(rows: np.ndarray, n: int, h: int, w: int) -> np.ndarray:
    """Inverse of `_channels_last`, returned contiguous."""
    return np.ascontiguousarray(rows.reshape(n, h, w, -1).transpose(0, 3, 1, 2))


def _im2col(padded: np.ndarray, k: int, stride: int) -> np.ndarray:
    """`(N, C, H, W)` -> `(N * out_h * out_w, C * k * k)` patch matrix, rows in `(n, y, x)` order."""
    windows = sliding_window_view(padded, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    n, c, out_h, out_w = windows.shape[:4]
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * k * k)


def _col2im(cols: np.ndarray, shape: Tuple[int, ...], k: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """Adjoint of `_im2col`: scatter-add patch rows onto a zero image of `shape`, one strided slice per tap."""
    n, c = shape[:2]
    cols = cols.reshape(n, out_h, out_w, c, k, k)
    image = np.zeros(shape, dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            _taps(image, i, j, stride, out_h, out_w)[...] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return image


class Add(Function):
    @staticmethod
    def forward(ctx: Context, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.shape != b.shape:
            raise ShapeError(f'add needs equal shapes, got {a.shape} and {b.shape}')
        return a + b

    @staticmethod
    def backward(ctx, grad_output):
        return grad_output, grad_output


class Relu(Function):
    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        mask = x > 0
        ctx.save_for_backward(mask)
        return np.where(mask, x, np.zeros((), dtype=x.dtype))

    @staticmethod
    def backward(ctx, grad_output):
        mask, = ctx.saved_tensors
        return np.where(mask, grad_output, np.zeros((), dtype=grad_output.dtype))


class Sum(Function):
    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        ctx.save(shape=x.shape)
        return np.sum(x)

    @staticmethod
    def backward(ctx, grad_output):
        return np.broadcast_to(grad_output, ctx.saved_data['shape']).copy()


class ConcatChannels(Function):
    @staticmethod
    def forward(ctx: Context, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _require_4d('concat operand', a)
        _require_4d('concat operand', b)
        if (a.shape[0], a.shape[2], a.shape[3]) != (b.shape[0], b.shape[2], b.shape[3]):
            raise ShapeError(f'concat needs equal N, H, W, got {a.shape} and {b.shape}')
        ctx.save(split=a.shape[1])
        return np.concatenate([a, b], axis=1)

    @staticmethod
    def backward(ctx, grad_output):
        split = ctx.saved_data['split']
        return grad_output[:, :split].copy(), grad_output[:, split:].copy()


class SliceChannels(Function):
    @staticmethod
    def forward(ctx: Context, x: np.ndarray, start: int, stop: int) -> np.ndarray:
        _require_4d('slice operand', x)
        if not 0 <= start < stop <= x.shape[1]:
            raise ShapeError(f'channel slice [{start}:{stop}] out of range for {x.shape[1]} channels')
        ctx.save(shape=x.shape, start=start, stop=stop)
        return x[:, start:stop].copy()

    @staticmethod
    def backward(ctx, grad_output):
        grad = np.zeros(ctx.saved_data['shape'], dtype=grad_output.dtype)
        grad[:, ctx.saved_data['start']:ctx.saved_data['stop']] = grad_output
        return grad


class MseLoss(Function):
    @staticmethod
    def forward(ctx: Context, pred: np.ndarray, target: np.ndarray) -> np.ndarray:
        if pred.shape != target.shape:
            raise ShapeError(f'mse_loss needs equal shapes, got {pred.shape} and {target.shape}')
        diff = pred - target
        ctx.save_for_backward(diff)
        return np.mean(diff * diff)

    @staticmethod
    def backward(ctx, grad_output):
        diff, = ctx.saved_tensors
        grad = grad_output * (2.0 / diff.size) * diff
        return grad, -grad


class Conv2d(Function):
    @staticmethod
    def forward(ctx: Context, x: np.ndarray, weight: np.ndarray, bias: Optional[np.ndarray],
                stride: int = 1, padding: int = 0, impl: ConvImpl = ConvImpl.IM2COL) -> np.ndarray:
        _require_4d('conv2d input', x)
        _require_4d('conv2d weight', weight)
        c_out, c_in, k, k_w = weight.shape
        if k != k_w:
            raise ShapeError(f'conv2d needs a square kernel, got {weight.shape[2:]}')
        if x.shape[1] != c_in:
            raise ShapeError(f'conv2d input has {x.shape[1]} channels, weight expects {c_in}')
        if bias is not None and bias.shape != (c_out,):
            raise ShapeError(f'conv2d bias must have shape ({c_out},), got {bias.shape}')
        if stride < 1 or padding < 0:
            raise ShapeError(f'conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}')
        padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        if padded.shape[2] < k or padded.shape[3] < k:
            raise ShapeError(f'kernel {k}x{k} does not fit padded input {padded.shape[2:]}')
        n = x.shape[0]
        out_h = (padded.shape[2] - k) // stride + 1
        out_w = (padded.shape[3] - k) // stride + 1

        cols = _im2col(padded, k, stride)
        if impl == ConvImpl.IM2COL:
            rows = cols @ weight.reshape(c_out, -1).T
        else:
            rows = np.zeros((n, out_h, out_w, c_out), dtype=x.dtype)
            for i in range(k):
                for j in range(k):
                    taps = _taps(padded, i, j, stride, out_h, out_w)
                    rows += np.tensordot(taps, weight[:, :, i, j], axes=([1], [1]))
        if bias is not None:
            rows = rows + bias
        out = _channels_first(rows, n, out_h, out_w)

        ctx.save_for_backward(cols, weight)
        ctx.save(stride=stride, padding=padding, padded_shape=padded.shape, out_shape=(out_h, out_w),
                 has_bias=bias is not None)
        return out

    @staticmethod
    def backward(ctx, grad_output):
        cols, weight = ctx.saved_tensors
        stride, padding = ctx.saved_data['stride'], ctx.saved_data['padding']
        out_h, out_w = ctx.saved_data['out_shape']
        padded_shape = ctx.saved_data['padded_shape']
        c_out, k = weight.shape[0], weight.shape[2]

        grad_rows = _channels_last(grad_output)
        grad_weight = (grad_rows.T @ cols).reshape(weight.shape)
        grad_padded = _col2im(grad_rows @ weight.reshape(c_out, -1), padded_shape, k, stride, out_h, out_w)
        h, w = padded_shape[2] - 2 * padding, padded_shape[3] - 2 * padding
        grad_x = grad_padded[:, :, padding:padding + h, padding:padding + w]
        grad_bias = grad_rows.sum(axis=0) if ctx.saved_data['has_bias'] else None
        return grad_x, grad_weight, grad_bias


class ConvTranspose2d(Function):
    @staticmethod
    def forward(ctx: Context, x: np.ndarray, weight: np.ndarray, bias: Optional[np.ndarray],
                stride: int = 2) -> np.ndarray:
        _require_4d('conv_transpose2d input', x)
        _require_4d('conv_transpose2d weight', weight)
        c_in, c_out, k, k_w = weight.shape
        if k != k_w:
            raise ShapeError(f'conv_transpose2d needs a square kernel, got {weight.shape[2:]}')
        if x.shape[1] != c_in:
            raise ShapeError(f'conv_transpose2d input has {x.shape[1]} channels, weight expects {c_in}')
        if bias is not None and bias.shape != (c_out,):
            raise ShapeError(f'conv_transpose2d bias must have shape ({c_out},), got {bias.shape}')
        if stride < 1:
            raise ShapeError(f'conv_transpose2d needs stride >= 1, got {stride}')
        n, _, h, w = x.shape
        x_rows = _channels_last(x)
        out_shape = (n, c_out, (h - 1) * stride + k, (w - 1) * stride + k)
        # every input pixel emits a k x k block per output channel; blocks overlap when k > stride
        out = _col2im(x_rows @ weight.reshape(c_in, -1), out_shape, k, stride, h, w)
        if bias is not None:
            out += bias[None, :, None, None]
        ctx.save_for_backward(x_rows, weight)
        ctx.save(stride=stride, in_shape=x.shape, has_bias=bias is not None)
        return out

    @staticmethod
    def backward(ctx, grad_output):
        x_rows, weight = ctx.saved_tensors
        stride = ctx.saved_data['stride']
        n, c_in, h, w = ctx.saved_data['in_shape']
        k = weight.shape[2]

        grad_cols = _im2col(grad_output, k, stride)
        grad_x = _channels_first(grad_cols @ weight.reshape(c_in, -1).T, n, h, w)
        grad_weight = (x_rows.T @ grad_cols).reshape(weight.shape)
        grad_bias = grad_output.sum(axis=(0, 2, 3)) if ctx.saved_data['has_bias'] else None
        return grad_x, grad_weight, grad_bias


class UpsampleNearest(Function):
    @staticmethod
    def forward(ctx: Context, x: np.ndarray, scale: int = 2) -> np.ndarray:
        _require_4d('upsample input', x)
        ctx.save(scale=scale)
        return x.repeat(scale, axis=2).repeat(scale, axis=3)

    @staticmethod
    def backward(ctx, grad_output):
        s = ctx.saved_data['scale']
        n, c, h, w = grad_output.shape
        return grad_output.reshape(n, c, h // s, s, w // s, s).sum(axis=(3, 5))


class BatchNorm2d(Function):
    @staticmethod
    def forward(ctx: Context, x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
                running_mean: np.ndarray, running_var: np.ndarray,
                training: bool = True, momentum: float = 0.1, eps: float = 1e-5) -> np.ndarray:
        _require_4d('batchnorm2d input', x)
        channels = x.shape[1]
        for name, array in (('gamma', gamma), ('beta', beta),
                            ('running_mean', running_mean), ('running_var', running_var)):
            if array.shape != (channels,):
                raise ShapeError(f'batchnorm2d {name} must have shape ({channels},), got {array.shape}')
        if eps <= 0:
            raise ValueError(f'batchnorm2d eps must be > 0, got {eps}')

        if training:
            count = x.shape[0] * x.shape[2] * x.shape[3]
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            unbiased = var * (count / (count - 1)) if count > 1 else var
            running_mean *= 1 - momentum
            running_mean += momentum * mean
            running_var *= 1 - momentum
            running_var += momentum * unbiased
        else:
            mean, var = running_mean, running_var
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        ctx.save_for_backward(x_hat, gamma, inv_std)
        ctx.save(training=training)
        return (gamma[None, :, None, None] * x_hat + beta[None, :, None, None]).astype(x.dtype, copy=False)

    @staticmethod
    def backward(ctx, grad_output):
        x_hat, gamma, inv_std = ctx.saved_tensors
        grad_gamma = np.sum(grad_output * x_hat, axis=(0, 2, 3))
        grad_beta = np.sum(grad_output, axis=(0, 2, 3))
        grad_x_hat = grad_output * gamma[None, :, None, None]
        if ctx.saved_data['training']:
            count = x_hat.shape[0] * x_hat.shape[2] * x_hat.shape[3]
            grad_x = (inv_std[None, :, None, None] / count) * (
                count * grad_x_hat
                - grad_x_hat.sum(axis=(0, 2, 3), keepdims=True)
                - x_hat * np.sum(grad_x_hat * x_hat, axis=(0, 2, 3), keepdims=True)
            )
        else:
            grad_x = grad_x_hat * inv_std[None, :, None, None]
        return grad_x, grad_gamma, grad_beta


Operand = Union[Tensor, np.ndarray]


def add(a: Tensor, b: Tensor) -> Tensor:
    return Add.apply(a, b)


def relu(x: Tensor) -> Tensor:
    return Relu.apply(x)


def tensor_sum(x: Tensor) -> Tensor:
    return Sum.apply(x)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    return ConcatChannels.apply(a, b)


def slice_channels(x: Tensor, start: int, stop: int) -> Tensor:
    return SliceChannels.apply(x, start, stop)


def mse_loss(pred: Tensor, target: Operand) -> Tensor:
    """Mean of squared differences over every element, `(1 / (N M)) sum (pred - target)^2`."""
    return MseLoss.apply(pred, target)


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, padding: int = 0,
           impl: ConvImpl = ConvImpl.IM2COL) -> Tensor:
    """
    2D cross-correlation with zero padding.

    Output spatial size is `floor((H + 2p - k) / s) + 1`. `impl` selects the im2col
    (one patch-matrix matmul per batch) path or the direct per-tap loop.
    """
    return Conv2d.apply(x, weight, bias, stride=stride, padding=padding, impl=impl)


def conv_transpose2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 2) -> Tensor:
    """
    Transposed convolution (the gradient of a strided convolution).

    `weight` is `(C_in, C_out, k, k)`; output spatial size is `(H - 1) s + k`.
    """
    return ConvTranspose2d.apply(x, weight, bias, stride=stride)


def upsample_nearest(x: Tensor, scale: int = 2) -> Tensor:
    return UpsampleNearest.apply(x, scale=scale)


def batchnorm2d(x: Tensor, gamma: Tensor, beta: Tensor, running_mean: np.ndarray, running_var: np.ndarray,
                training: bool = True, momentum: float = 0.1, eps: float = 1e-5) -> Tensor:
    """
    Per-channel batch normalization over `(N, H, W)`.

    Training mode normalizes with batch statistics and updates `running_mean` / `running_var`
    in place (the variance update uses the unbiased estimate); eval mode uses the running statistics.
    """
    return BatchNorm2d.apply(x, gamma, beta, running_mean, running_var,
                             training=training, momentum=momentum, eps=eps)
