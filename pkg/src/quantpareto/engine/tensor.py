"""
Tensors, parameters and the reverse-mode tape.

Ops record themselves on the tape that is active in the current context
(``with Tape() as tape:``). Without an active tape nothing is recorded, which
is how evaluation runs. A tape belongs to one thread.
"""

from contextvars import ContextVar, Token
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt

from quantpareto.core.errors import GraphError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar(
    "quantpareto_active_tape", default=None
)


class Tensor:
    """Dense array plus the bookkeeping reverse mode needs"""

    def __init__(
        self, data: npt.ArrayLike, requires_grad: bool = False, name: str = ""
    ) -> None:
        self.data = np.asarray(data)
        self.requires_grad = requires_grad
        self.name = name
        self._grad: Optional[np.ndarray] = None

    @property
    def grad(self) -> Optional[np.ndarray]:
        return self._grad

    @grad.setter
    def grad(self, value: Optional[np.ndarray]) -> None:
        self._grad = value

    def accumulate_grad(self, g: np.ndarray) -> None:
        self._grad = g.astype(self.data.dtype, copy=True) if self._grad is None else self._grad + g

    def zero_grad(self) -> None:
        self._grad = None

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def dtype(self) -> np.dtype:  # type: ignore[type-arg]
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.data.dtype})"


class Parameter(Tensor):
    """Trainable tensor with a gradient and an SGD momentum buffer.

    Both buffers have the value's shape and are allocated on first use, so a
    shape-only model never materialises them.
    """

    def __init__(self, data: npt.ArrayLike, name: str = "") -> None:
        super().__init__(data, requires_grad=True, name=name)
        self._momentum: Optional[np.ndarray] = None

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            self._grad = np.zeros_like(self.data)
        return self._grad

    @grad.setter
    def grad(self, value: Optional[np.ndarray]) -> None:
        self._grad = value

    @property
    def has_momentum(self) -> bool:
        return self._momentum is not None

    @property
    def momentum_buf(self) -> np.ndarray:
        if self._momentum is None:
            self._momentum = np.zeros_like(self.data)
        return self._momentum

    @momentum_buf.setter
    def momentum_buf(self, value: np.ndarray) -> None:
        self._momentum = value


@dataclass
class _Node:
    output: Tensor
    parents: tuple[Tensor, ...]
    backward: BackwardFn


class Tape:
    """Records ops in forward order and replays them in reverse"""

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self._token: Optional[Token[Optional["Tape"]]] = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self._nodes)

    def record(
        self, output: Tensor, parents: Sequence[Tensor], backward: BackwardFn
    ) -> None:
        self._nodes.append(_Node(output, tuple(parents), backward))

    def backward(self, loss: Tensor) -> dict[Tensor, np.ndarray]:
        """Propagate d(loss)/d(.) to every leaf that requires grad.

        Leaf gradients are accumulated into ``.grad`` and also returned. The
        recorded graph is released afterwards.
        """
        if not self._nodes:
            raise GraphError("backward called before any forward op was recorded")
        if loss.size != 1:
            raise GraphError(f"Loss must be a scalar, got shape {loss.shape}")
        if not any(node.output is loss for node in self._nodes):
            raise GraphError("Loss was not produced on this tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        seen: dict[int, Tensor] = {}

        for node in reversed(self._nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            for parent, parent_grad in zip(node.parents, node.backward(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + parent_grad if key in grads else parent_grad
                seen[key] = parent

        leaf_grads: dict[Tensor, np.ndarray] = {}
        for key, g in grads.items():
            tensor = seen.get(key)
            if tensor is None:
                continue
            tensor.accumulate_grad(g)
            leaf_grads[tensor] = g

        self._nodes.clear()
        return leaf_grads


def current_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def apply_op(
    data: np.ndarray,
    parents: Sequence[Tensor],
    backward: BackwardFn,
    name: str = "",
) -> Tensor:
    """Wrap an op result, recording it if a tape is active and grads are needed"""
    requires_grad = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=requires_grad, name=name)
    tape = _ACTIVE_TAPE.get()
    if requires_grad and tape is not None:
        tape.record(out, parents, backward)
    return out
