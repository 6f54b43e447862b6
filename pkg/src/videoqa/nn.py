"""Named trainable parameters and the recurrent building blocks.

Initialisation policy: matrices uniform(-0.08, 0.08), biases zero, LSTM
forget-gate bias +1.0. Every parameter records its init spec so a run is
reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .autodiff import (
    ShapeError,
    Tensor,
    add,
    add_rowvec,
    concat,
    dropout,
    lstm_cell,
    matmul,
    stack,
    take_row,
)

INIT_SCALE = 0.08


@dataclass
class Parameter:
    """A named trainable tensor plus the description of how it was initialised."""

    name: str
    tensor: Tensor
    init_spec: str


class ParameterSet:
    """Ordered collection of uniquely named parameters."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, values: np.ndarray, init_spec: str) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        t = Tensor(values, requires_grad=True)
        self._params[name] = Parameter(name, t, init_spec)
        return t

    def matrix(self, name: str, rows: int, cols: int, rng: np.random.Generator,
               scale: float = INIT_SCALE) -> Tensor:
        values = rng.uniform(-scale, scale, size=(rows, cols))
        return self.add(name, values, f"uniform(-{scale},{scale})")

    def vector(self, name: str, n: int, fill: float = 0.0) -> Tensor:
        spec = "zeros" if fill == 0.0 else f"constant({fill})"
        return self.add(name, np.full(n, fill, dtype=float), spec)

    def uniform_vector(self, name: str, n: int, rng: np.random.Generator,
                       scale: float = INIT_SCALE) -> Tensor:
        values = rng.uniform(-scale, scale, size=n)
        return self.add(name, values, f"uniform(-{scale},{scale})")

    def remove(self, name: str) -> None:
        del self._params[name]

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name].tensor

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self) -> Iterator[tuple[str, Parameter]]:
        return iter(self._params.items())

    def tensors(self) -> Iterator[Tensor]:
        return (p.tensor for p in self._params.values())

    def total_size(self) -> int:
        return sum(p.tensor.size for p in self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.tensor.grad = None


_GATES = ("i", "f", "o", "g")


@dataclass
class LSTMWeights:
    """One LSTM direction: 4 input matrices, 4 recurrent matrices, 4 biases."""

    W_i: Tensor
    W_f: Tensor
    W_o: Tensor
    W_g: Tensor
    U_i: Tensor
    U_f: Tensor
    U_o: Tensor
    U_g: Tensor
    b_i: Tensor
    b_f: Tensor
    b_o: Tensor
    b_g: Tensor

    @property
    def input_size(self) -> int:
        return self.W_i.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.W_i.shape[1]

    def fused(self):
        """Single differentiable (W,U,b) triple in gate order (i,f,o,g).

        Concatenation is recorded on the tape, so gradients flow back into
        the 12 individually named parameters.
        """
        W = concat([self.W_i, self.W_f, self.W_o, self.W_g], axis=1)
        U = concat([self.U_i, self.U_f, self.U_o, self.U_g], axis=1)
        b = concat([self.b_i, self.b_f, self.b_o, self.b_g], axis=0)
        return W, U, b


def add_lstm(params: ParameterSet, prefix: str, input_dim: int, hidden: int,
             rng: np.random.Generator) -> LSTMWeights:
    """Create the 12 parameters of one LSTM direction under ``prefix``."""
    tensors = {}
    for gate in _GATES:
        tensors[f"W_{gate}"] = params.matrix(f"{prefix}.W_{gate}", input_dim, hidden, rng)
        tensors[f"U_{gate}"] = params.matrix(f"{prefix}.U_{gate}", hidden, hidden, rng)
        # forget-gate bias starts at +1 so early cell state survives
        tensors[f"b_{gate}"] = params.vector(f"{prefix}.b_{gate}", hidden,
                                             fill=1.0 if gate == "f" else 0.0)
    return LSTMWeights(**tensors)


def step_lstm(x: Tensor, h_prev: Tensor, c_prev: Tensor, weights: LSTMWeights):
    """Convenience single step on unfused weights (tests, tiny models)."""
    W, U, b = weights.fused()
    return lstm_cell(x, h_prev, c_prev, W, U, b)


def bilstm(inputs: Tensor, forward: LSTMWeights, backward: LSTMWeights, *,
           dropout_rate: float = 0.0, training: bool = False,
           rng: np.random.Generator | None = None):
    """Run a bidirectional LSTM over the rows of ``inputs`` (T, input_dim).

    Returns ``(states, sentence)`` where ``states`` is (T, 2H) with row t the
    concatenation of forward state t and backward state t, and ``sentence``
    is last-forward ++ first-backward. Initial states are zero. Dropout (if
    any) is applied to each input row once, shared by both directions.
    """
    if inputs.ndim != 2:
        raise ShapeError(f"bilstm expects (T, input_dim) inputs, got {inputs.shape}")
    T = inputs.shape[0]
    if T < 1:
        raise ShapeError("bilstm over an empty sequence")
    if forward.hidden_size != backward.hidden_size:
        raise ShapeError("bilstm direction widths differ")
    hid = forward.hidden_size
    rows = [take_row(inputs, t) for t in range(T)]
    if dropout_rate and training:
        rows = [dropout(r, dropout_rate, training, rng) for r in rows]

    Wf, Uf, bf = forward.fused()
    Wb, Ub, bb = backward.fused()
    zeros = Tensor(np.zeros(hid))

    h, c = zeros, zeros
    fw_states = []
    for t in range(T):
        h, c = lstm_cell(rows[t], h, c, Wf, Uf, bf)
        fw_states.append(h)

    h, c = zeros, zeros
    bw_states: list[Tensor | None] = [None] * T
    for t in reversed(range(T)):
        h, c = lstm_cell(rows[t], h, c, Wb, Ub, bb)
        bw_states[t] = h

    states = concat([stack(fw_states), stack(bw_states)], axis=1)
    sentence = concat([fw_states[-1], bw_states[0]])
    return states, sentence


def affine(x: Tensor, W: Tensor, b: Tensor | None = None) -> Tensor:
    """x @ W (+ b), where x is a vector or a matrix of row vectors."""
    out = matmul(x, W)
    if b is None:
        return out
    return add_rowvec(out, b) if out.ndim == 2 else add(out, b)
