import numpy as np

from pydantic import BaseModel
from typing import Callable, Dict, Mapping, Optional
from lstsr.autodiff.tensor import Tensor, backward, no_grad

FD_STEP = 1e-5
REL_FLOOR = 1e-6


class GradCheckReport(BaseModel):
    """
    Analytic versus central-difference gradients.

    Attributes:
        max_rel_error (Dict[str, float]): Worst relative error per checked tensor.
        checked (Dict[str, int]): Number of entries compared per tensor.
    """
    max_rel_error: Dict[str, float]
    checked: Dict[str, int]

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)

    def passed(self, tolerance: float) -> bool:
        return self.worst < tolerance

    def __rich__(self) -> str:
        lines = [f'{name}: {err:.2e} over {self.checked[name]} entries' for name, err in self.max_rel_error.items()]
        return '\n'.join(lines)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)


def grad_check(
    fn: Callable[[], Tensor],
    tensors: Mapping[str, Tensor],
    h: float = FD_STEP,
    samples: Optional[int] = None,
    seed: int = 0
) -> GradCheckReport:
    """
    Compare the gradients of the scalar `fn()` with central differences.

    Args:
        fn (Callable[[], Tensor]): Builds the graph from `tensors` and returns a scalar loss.
        tensors (Mapping[str, Tensor]): Float64 tensors to perturb, by name.
        h (float): Finite-difference step. Defaults to 1e-5.
        samples (int, optional): Check at most this many randomly chosen entries per tensor.
        seed (int): Seed for entry sampling.

    Returns:
        GradCheckReport: Maximum relative error `|a - n| / max(|a|, |n|, 1e-6)` per tensor.

    Raises:
        ValueError: If a tensor is not float64.
    """
    for name, tensor in tensors.items():
        if tensor.dtype != np.float64:
            raise ValueError(f'gradient checks need float64 tensors, "{name}" is {tensor.dtype}')
        # entries are perturbed through a flat view
        tensor.data = np.array(tensor.data, copy=True, order='C')
        tensor.zero_grad()

    backward(fn())
    analytic = {
        name: np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        for name, t in tensors.items()
    }

    rng = np.random.default_rng(seed)
    errors, checked = {}, {}
    for name, tensor in tensors.items():
        flat = tensor.data.reshape(-1)
        indices = np.arange(flat.size)
        if samples is not None and samples < flat.size:
            indices = rng.choice(flat.size, size=samples, replace=False)
        worst = 0.0
        for index in indices:
            original = flat[index]
            with no_grad():
                flat[index] = original + h
                plus = fn().item()
                flat[index] = original - h
                minus = fn().item()
            flat[index] = original
            numeric = (plus - minus) / (2 * h)
            worst = max(worst, relative_error(float(analytic[name].reshape(-1)[index]), numeric))
        errors[name], checked[name] = worst, len(indices)
    return GradCheckReport(max_rel_error=errors, checked=checked)
