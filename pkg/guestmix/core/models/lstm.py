"""
Stacked (bi)directional LSTM in numpy with full backpropagation through time.

Gate rows in ``W`` (4H x in), ``U`` (4H x H) and ``b`` (4H) are ordered
input, forget, output, candidate. Batches are padded to a common length and
carry a 0/1 mask; masked steps leave the state untouched and emit zeros.

The backward direction runs the same recurrence over each sequence reversed
within its own length, so padding stays at the tail in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from guestmix._config import FORGET_BIAS_INIT
from guestmix.core.models.base import sigmoid

Params = Dict[str, np.ndarray]

FORWARD = "fwd"
BACKWARD = "bwd"


def directions(bidirectional: bool) -> Tuple[str, ...]:
    return (FORWARD, BACKWARD) if bidirectional else (FORWARD,)


def param_name(layer: int, direction: str, block: str) -> str:
    return f"lstm{layer}.{direction}.{block}"


def layer_input_dim(layer: int, input_dim: int, hidden: int, bidirectional: bool) -> int:
    if layer == 0:
        return input_dim
    return hidden * len(directions(bidirectional))


def representation_dim(hidden: int, bidirectional: bool) -> int:
    return hidden * len(directions(bidirectional))


def init_lstm_params(
    rng: np.random.Generator,
    *,
    layers: int,
    hidden: int,
    input_dim: int,
    bidirectional: bool,
    forget_bias: float = FORGET_BIAS_INIT,
) -> Params:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) weights; forget-gate bias set to ``forget_bias``."""
    bound = 1.0 / np.sqrt(hidden)
    params: Params = {}
    for layer in range(layers):
        in_dim = layer_input_dim(layer, input_dim, hidden, bidirectional)
        for direction in directions(bidirectional):
            b = np.zeros(4 * hidden)
            b[hidden:2 * hidden] = forget_bias
            params[param_name(layer, direction, "W")] = rng.uniform(-bound, bound, (4 * hidden, in_dim))
            params[param_name(layer, direction, "U")] = rng.uniform(-bound, bound, (4 * hidden, hidden))
            params[param_name(layer, direction, "b")] = b
    return params


def init_output_params(rng: np.random.Generator, rep_dim: int) -> Params:
    bound = 1.0 / np.sqrt(rep_dim)
    return {"out.w": rng.uniform(-bound, bound, rep_dim), "out.b": np.zeros(1)}


def lstm_parameter_count(input_dim: int, hidden: int) -> int:
    """Scalars of one LSTM direction: ``4 * (H*d + H*H + H)``."""
    return 4 * (hidden * input_dim + hidden * hidden + hidden)


# ═══════════════════════════════════════════════════════════════
#  Single cell
# ═══════════════════════════════════════════════════════════════

def _gates(x: np.ndarray, h: np.ndarray, W: np.ndarray, U: np.ndarray, b: np.ndarray):
    hidden = U.shape[1]
    z = x @ W.T + h @ U.T + b
    i = sigmoid(z[..., :hidden])
    f = sigmoid(z[..., hidden:2 * hidden])
    o = sigmoid(z[..., 2 * hidden:3 * hidden])
    g = np.tanh(z[..., 3 * hidden:])
    return i, f, o, g


def lstm_cell(
    x: np.ndarray, h: np.ndarray, c: np.ndarray, W: np.ndarray, U: np.ndarray, b: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """One step: ``c' = f*c + i*g`` and ``h' = o*tanh(c')``."""
    i, f, o, g = _gates(np.asarray(x, dtype=np.float64), np.asarray(h, dtype=np.float64), W, U, b)
    c_new = f * c + i * g
    return o * np.tanh(c_new), c_new


# ═══════════════════════════════════════════════════════════════
#  One direction over a padded batch
# ═══════════════════════════════════════════════════════════════

@dataclass
class _Step:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    tanh_c: np.ndarray
    mask: np.ndarray


def run_direction(
    X: np.ndarray, mask: np.ndarray, W: np.ndarray, U: np.ndarray, b: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, List[_Step]]:
    """Run a direction over ``X`` (B x T x in).

    Returns per-step outputs (B x T x H), the final carried state (B x H) and
    the step cache for :func:`run_direction_backward`.
    """
    batch, steps_total, _ = X.shape
    hidden = U.shape[1]
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    Y = np.zeros((batch, steps_total, hidden))
    steps: List[_Step] = []
    for t in range(steps_total):
        m = mask[:, t][:, None]
        x = X[:, t]
        i, f, o, g = _gates(x, h, W, U, b)
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        steps.append(_Step(x, h, c, i, f, o, g, tanh_c, m))
        Y[:, t] = m * h_new
        c = m * c_new + (1.0 - m) * c
        h = m * h_new + (1.0 - m) * h
    return Y, h, steps


def run_direction_backward(
    steps: Sequence[_Step],
    dY: np.ndarray,
    dh_final: np.ndarray,
    W: np.ndarray,
    U: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gradients ``(dX, dW, dU, db)`` given output and final-state gradients."""
    batch, steps_total, hidden = dY.shape
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * hidden)
    dX = np.zeros((batch, steps_total, W.shape[1]))
    dh = np.array(dh_final, dtype=np.float64, copy=True)
    dc = np.zeros((batch, hidden))
    for t in reversed(range(steps_total)):
        s = steps[t]
        m = s.mask
        dh_new = m * (dh + dY[:, t])
        dc_new = m * dc + dh_new * s.o * (1.0 - s.tanh_c ** 2)
        dz = np.concatenate(
            [
                dc_new * s.g * s.i * (1.0 - s.i),
                dc_new * s.c_prev * s.f * (1.0 - s.f),
                dh_new * s.tanh_c * s.o * (1.0 - s.o),
                dc_new * s.i * (1.0 - s.g ** 2),
            ],
            axis=1,
        )
        dW += dz.T @ s.x
        dU += dz.T @ s.h_prev
        db += dz.sum(axis=0)
        dX[:, t] = dz @ W
        dh = dz @ U + (1.0 - m) * dh
        dc = dc_new * s.f + (1.0 - m) * dc
    return dX, dW, dU, db


def reverse_index(lengths: Sequence[int], steps_total: int) -> np.ndarray:
    """Per-row time index reversing the first ``length`` steps; padding stays put.

    Applying the gather twice is the identity.
    """
    index = np.tile(np.arange(steps_total), (len(lengths), 1))
    for row, length in enumerate(lengths):
        index[row, :length] = np.arange(length - 1, -1, -1)
    return index


def gather_time(X: np.ndarray, index: np.ndarray) -> np.ndarray:
    return X[np.arange(X.shape[0])[:, None], index]


# ═══════════════════════════════════════════════════════════════
#  Stack
# ═══════════════════════════════════════════════════════════════

@dataclass
class StackCache:
    mask: np.ndarray
    lengths: np.ndarray
    reverse: Optional[np.ndarray]
    steps: List[Dict[str, List[_Step]]] = field(default_factory=list)
    input_dims: List[int] = field(default_factory=list)


def stack_forward(
    params: Params,
    X: np.ndarray,
    mask: np.ndarray,
    *,
    layers: int,
    hidden: int,
    bidirectional: bool,
    pooling: str = "final",
) -> Tuple[np.ndarray, StackCache]:
    """Sequence representation (B x R) for an embedded, padded batch.

    ``final`` pooling concatenates the last forward state with the backward
    state at the first token; ``mean`` averages top-layer outputs over the
    unmasked steps. Empty sequences get a zero representation.
    """
    lengths = mask.sum(axis=1).astype(np.int64)
    reverse = reverse_index(lengths, X.shape[1]) if bidirectional else None
    cache = StackCache(mask=mask, lengths=lengths, reverse=reverse)
    inputs = X
    finals: Dict[str, np.ndarray] = {}
    for layer in range(layers):
        outputs = []
        layer_steps: Dict[str, List[_Step]] = {}
        cache.input_dims.append(inputs.shape[2])
        for direction in directions(bidirectional):
            W = params[param_name(layer, direction, "W")]
            U = params[param_name(layer, direction, "U")]
            b = params[param_name(layer, direction, "b")]
            source = inputs if direction == FORWARD else gather_time(inputs, reverse)
            Y, h_final, steps = run_direction(source, mask, W, U, b)
            if direction == BACKWARD:
                Y = gather_time(Y, reverse)
            outputs.append(Y)
            layer_steps[direction] = steps
            finals[direction] = h_final
        cache.steps.append(layer_steps)
        inputs = np.concatenate(outputs, axis=2) if bidirectional else outputs[0]

    if pooling == "final":
        rep = np.concatenate([finals[d] for d in directions(bidirectional)], axis=1)
    elif pooling == "mean":
        rep = inputs.sum(axis=1) / np.maximum(lengths, 1)[:, None]
    else:
        raise ValueError(f"unknown pooling '{pooling}'")
    return rep, cache


def stack_backward(
    params: Params,
    cache: StackCache,
    drep: np.ndarray,
    *,
    layers: int,
    hidden: int,
    bidirectional: bool,
    pooling: str = "final",
) -> Tuple[Params, np.ndarray]:
    """Parameter gradients and the gradient w.r.t. the embedded input."""
    batch, steps_total = cache.mask.shape
    dirs = directions(bidirectional)
    width = hidden * len(dirs)
    zeros_state = np.zeros((batch, hidden))

    if pooling == "final":
        dtop = np.zeros((batch, steps_total, width))
        top_finals = {d: drep[:, k * hidden:(k + 1) * hidden] for k, d in enumerate(dirs)}
    else:
        scale = drep / np.maximum(cache.lengths, 1)[:, None]
        dtop = scale[:, None, :] * cache.mask[:, :, None]
        top_finals = {d: zeros_state for d in dirs}

    grads: Params = {}
    doutputs = dtop
    for layer in reversed(range(layers)):
        dinputs = np.zeros((batch, steps_total, cache.input_dims[layer]))
        for k, direction in enumerate(dirs):
            W = params[param_name(layer, direction, "W")]
            U = params[param_name(layer, direction, "U")]
            dY = doutputs[:, :, k * hidden:(k + 1) * hidden]
            dh_final = top_finals[direction] if layer == layers - 1 else zeros_state
            if direction == BACKWARD:
                dY = gather_time(dY, cache.reverse)
            dX, dW, dU, db = run_direction_backward(cache.steps[layer][direction], dY, dh_final, W, U)
            if direction == BACKWARD:
                dX = gather_time(dX, cache.reverse)
            dinputs += dX
            grads[param_name(layer, direction, "W")] = dW
            grads[param_name(layer, direction, "U")] = dU
            grads[param_name(layer, direction, "b")] = db
        doutputs = dinputs
    return grads, doutputs


# ═══════════════════════════════════════════════════════════════
#  Output layer and loss
# ═══════════════════════════════════════════════════════════════

def output_scores(params: Params, rep: np.ndarray) -> np.ndarray:
    return rep @ params["out.w"] + params["out.b"][0]


def bce_with_logits(scores: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean binary cross-entropy on logits and its gradient w.r.t. the logits."""
    y = np.asarray(labels, dtype=np.float64)
    loss = float(np.mean(np.logaddexp(0.0, scores) - y * scores))
    dscores = (np.atleast_1d(sigmoid(scores)) - y) / len(y)
    return loss, dscores


def output_backward(params: Params, rep: np.ndarray, dscores: np.ndarray) -> Tuple[Params, np.ndarray]:
    grads = {"out.w": rep.T @ dscores, "out.b": np.array([dscores.sum()])}
    return grads, np.outer(dscores, params["out.w"])
