"""
Tensor com diferenciação automática em modo reverso.

Cada operação registra seus pais e uma closure de backward; `Tensor.backward`
percorre o grafo em ordem topológica reversa acumulando gradientes nas folhas.
Os dados ficam em `numpy.ndarray`; o dtype de entrada é preservado (float32 por
padrão, float64 quando promovido pelo grad_check).
"""
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from src.core.exceptions import DimensionMismatchException

DEFAULT_DTYPE = np.float32

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]


class Tensor:
    """
    Nó do grafo computacional.

    Folhas com `requires_grad=True` recebem `.grad` após `backward()`; nós
    intermediários só guardam pais quando algum deles exige gradiente.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward", "_op")
    __array_priority__ = 1000

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype: Optional[np.dtype] = None,
    ) -> None:
        array = np.asarray(data, dtype=dtype)
        if array.dtype.kind != "f":
            array = array.astype(DEFAULT_DTYPE)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = "leaf"

    @classmethod
    def from_op(
        cls, data: np.ndarray, parents: Sequence["Tensor"], backward: BackwardFn, op: str
    ) -> "Tensor":
        """Cria o resultado de uma operação, ligando-o ao grafo se necessário."""
        out = cls(data)
        out._op = op
        if any(parent.requires_grad for parent in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    # === Propriedades ===

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        """Retorna os dados (sem cópia)."""
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self) -> "Tensor":
        """Retorna um tensor com os mesmos dados e sem histórico."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name='{self.name}'" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self._op}{label})"

    # === Backpropagation ===

    def _topological_order(self) -> list["Tensor"]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        Propaga gradientes a partir deste tensor.

        Args:
            grad: Gradiente de saída (obrigatório se o tensor não for escalar)

        Raises:
            DimensionMismatchException: Se o tensor não for escalar e grad for None
        """
        if not self.requires_grad:
            return
        if grad is None:
            if self.data.size != 1:
                raise DimensionMismatchException("backward", "size", 1, self.data.size)
            grad = np.ones_like(self.data)

        pending: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(self._topological_order()):
            node_grad = pending.pop(id(node), None)
            if node_grad is None:
                continue
            if node._backward is None:
                node_grad = np.asarray(node_grad, dtype=node.data.dtype)
                node.grad = node_grad.copy() if node.grad is None else node.grad + node_grad
                continue
            for parent, parent_grad in zip(node._parents, node._backward(node_grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    # === Aritmética ===

    def __add__(self, other: Any) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        return div(self, other)

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __getitem__(self, index: Any) -> "Tensor":
        return getitem(self, index)

    def sum(self, axis: Optional[Union[int, tuple[int, ...]]] = None) -> "Tensor":
        return reduce_sum(self, axis)

    def mean(self, axis: Optional[Union[int, tuple[int, ...]]] = None) -> "Tensor":
        return reduce_mean(self, axis)

    def reshape(self, *shape: Any) -> "Tensor":
        target = shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape
        return reshape(self, tuple(target))


def as_tensor(value: Any) -> Tensor:
    """Converte escalares/arrays em Tensor constante (sem gradiente)."""
    if isinstance(value, Tensor):
        return value
    array = np.asarray(value)
    if array.dtype.kind != "f":
        array = array.astype(DEFAULT_DTYPE)
    return Tensor(array)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduz um gradiente broadcast de volta à forma original do operando."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _pair(a: Any, b: Any) -> tuple[Tensor, Tensor]:
    """Converte o operando não-Tensor para o dtype do operando Tensor."""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(np.asarray(b, dtype=a.dtype))
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(np.asarray(a, dtype=b.dtype)), b
    return as_tensor(a), as_tensor(b)


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise DimensionMismatchException(op, "shape", a.shape, b.shape) from e


def add(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast("add", a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), backward, "add")


def sub(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast("sub", a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast("mul", a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), backward, "mul")


def div(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast("div", a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (
            unbroadcast(g / b.data, a.shape),
            unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return Tensor.from_op(a.data / b.data, (a, b), backward, "div")


def _is_basic_index(index: Any) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(item, (slice, int)) or item is Ellipsis or item is None for item in items)


def getitem(a: Tensor, index: Any) -> Tensor:
    basic = _is_basic_index(index)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(a.data)
        if basic:
            full[index] += g
        else:
            np.add.at(full, index, g)
        return (full,)

    return Tensor.from_op(np.array(a.data[index]), (a,), backward, "getitem")


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        data = a.data.reshape(shape)
    except ValueError as e:
        raise DimensionMismatchException("reshape", "size", a.size, shape) from e

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g.reshape(a.shape),)

    return Tensor.from_op(data, (a,), backward, "reshape")


def reduce_sum(a: Tensor, axis: Optional[Union[int, tuple[int, ...]]] = None) -> Tensor:
    # acumulação em 64 bits
    data = np.sum(a.data, axis=axis, dtype=np.float64).astype(a.dtype)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).astype(a.dtype),)

    return Tensor.from_op(np.asarray(data), (a,), backward, "sum")


def reduce_mean(a: Tensor, axis: Optional[Union[int, tuple[int, ...]]] = None) -> Tensor:
    data = np.mean(a.data, axis=axis, dtype=np.float64).astype(a.dtype)
    count = a.size // max(np.asarray(data).size, 1)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None:
            g = np.expand_dims(g, axis)
        return ((np.broadcast_to(g, a.shape) / count).astype(a.dtype),)

    return Tensor.from_op(np.asarray(data), (a,), backward, "mean")
