import itertools
import threading
import numpy as np

from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Tuple, Type
from lstsr.utils.errors import GraphError

_ids = itertools.count()
_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, 'enabled', True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Run ops without recording graph nodes (this thread only)."""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Context:
    """Values an op keeps from its forward pass for its backward pass."""

    def __init__(self):
        self.saved_tensors: Tuple[np.ndarray, ...] = ()
        self.saved_data: Dict[str, Any] = {}

    def save_for_backward(self, *arrays: np.ndarray) -> None:
        self.saved_tensors = self.saved_tensors + arrays

    def save(self, **kwargs) -> None:
        self.saved_data.update(kwargs)


class Node:
    """
    One recorded op application.

    Attributes:
        op (str): Op kind (the Function class name).
        inputs (List[Tensor]): Tensor operands, in argument order.
        output_id (int): Id of the tensor this node produced.
        ctx (Context): Cached forward values; released once backward has run.
        visits (int): How many times backward processed this node.
    """
    __slots__ = ('op', 'function', 'inputs', 'positions', 'output_id', 'ctx', 'visits', 'consumed')

    def __init__(self, function: Type['Function'], inputs: List['Tensor'], positions: List[int],
                 output_id: int, ctx: Context):
        self.op = function.__name__
        self.function = function
        self.inputs = inputs
        self.positions = positions
        self.output_id = output_id
        self.ctx = ctx
        self.visits = 0
        self.consumed = False

    @property
    def input_ids(self) -> List[int]:
        return [t.id for t in self.inputs]


class Tensor:
    """
    An n-dimensional array with an optional gradient and the node that produced it.

    Image tensors are laid out `(N, C, H, W)`. The dtype of `data` is preserved by every op.
    """

    def __init__(self, data: Any, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        array = np.asarray(data, dtype=dtype)
        if array.dtype.kind != 'f':
            array = array.astype(np.float64)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.id = next(_ids)
        self.node: Optional[Node] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def item(self) -> float:
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> 'Tensor':
        return Tensor(self.data, requires_grad=False, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray) -> None:
        if grad.shape != self.data.shape:
            raise GraphError(f'gradient shape {grad.shape} does not match tensor shape {self.data.shape}')
        grad = grad.astype(self.data.dtype, copy=False)
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def backward(self) -> None:
        backward(self)

    def __add__(self, other: 'Tensor') -> 'Tensor':
        from lstsr.autodiff.ops import add
        return add(self, other)

    def __repr__(self) -> str:
        label = f' {self.name}' if self.name else ''
        return f'Tensor{label}(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})'


class Function:
    """
    A differentiable op. Subclasses implement `forward` on arrays and `backward` returning one
    gradient (or None) per tensor input.
    """

    @staticmethod
    def forward(ctx: Context, *args, **kwargs) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def backward(ctx: Context, grad_output: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *args, **kwargs) -> Tensor:
        ctx = Context()
        arrays = [a.data if isinstance(a, Tensor) else a for a in args]
        output = Tensor(cls.forward(ctx, *arrays, **kwargs))
        positions = [i for i, a in enumerate(args) if isinstance(a, Tensor)]
        tensors = [args[i] for i in positions]
        if grad_enabled() and any(t.requires_grad for t in tensors):
            output.requires_grad = True
            output.node = Node(cls, tensors, positions, output.id, ctx)
        return output


class Graph:
    """Op nodes reachable from a tensor, ordered so every input precedes its consumer."""

    def __init__(self, nodes: List[Node]):
        self.nodes = nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes)

    @classmethod
    def from_output(cls, output: Tensor) -> 'Graph':
        order: List[Node] = []
        visited = set()
        if output.node is None:
            return cls(order)
        stack: List[Tuple[Node, bool]] = [(output.node, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node.inputs:
                if parent.node is not None and id(parent.node) not in visited:
                    stack.append((parent.node, False))
        return cls(order)


def backward(loss: Tensor) -> None:
    """
    Accumulate dLoss/dθ into the `grad` of every leaf tensor that requires it.

    Nodes are processed once each, in reverse topological order; fan-out gradients are summed.
    The graph is consumed: its cached forward values are released.

    Raises:
        GraphError: If `loss` is not a scalar, or its graph was already consumed.
    """
    if loss.size != 1:
        raise GraphError(f'backward needs a scalar loss, got shape {loss.shape}')
    if loss.node is None:
        if loss.requires_grad:
            loss.accumulate_grad(np.ones_like(loss.data))
        return
    graph = Graph.from_output(loss)
    if any(node.consumed for node in graph):
        raise GraphError('graph already consumed by a previous backward call')

    grads: Dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
    for node in reversed(graph.nodes):
        node.visits += 1
        grad_output = grads.pop(node.output_id, None)
        if grad_output is not None:
            input_grads = node.function.backward(node.ctx, grad_output)
            if not isinstance(input_grads, tuple):
                input_grads = (input_grads,)
            for parent, position in zip(node.inputs, node.positions):
                grad = input_grads[position] if position < len(input_grads) else None
                if grad is None or not parent.requires_grad:
                    continue
                if parent.is_leaf:
                    parent.accumulate_grad(grad)
                elif parent.id in grads:
                    grads[parent.id] = grads[parent.id] + grad
                else:
                    grads[parent.id] = grad
        node.ctx = None
        node.consumed = True
