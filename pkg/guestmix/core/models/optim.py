"""Adam with lazily updated sparse rows, and global-norm gradient clipping."""

from __future__ import annotations

import math
from typing import Dict, Optional, Tuple

import numpy as np

from guestmix._config import DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS, DEFAULT_LR

Dense = Dict[str, np.ndarray]
Sparse = Dict[int, np.ndarray]


def global_norm(dense: Dense, sparse: Optional[Sparse] = None) -> float:
    total = sum(float(np.sum(g * g)) for g in dense.values())
    if sparse:
        total += sum(float(np.sum(g * g)) for g in sparse.values())
    return math.sqrt(total)


def clip_global_norm(dense: Dense, sparse: Optional[Sparse] = None, max_norm: float = 5.0) -> Tuple[float, float]:
    """Scale gradients in place so their joint L2 norm is at most ``max_norm``.

    Returns ``(norm before, norm after)``.
    """
    before = global_norm(dense, sparse)
    if before <= max_norm or before == 0.0:
        return before, before
    scale = max_norm / before
    for g in dense.values():
        g *= scale
    if sparse:
        for g in sparse.values():
            g *= scale
    return before, global_norm(dense, sparse)


class Adam:
    """Adam over named dense arrays plus an optional table of sparse rows.

    Sparse rows (subword buckets) keep their own moments and are only updated
    on steps where they receive a gradient; bias correction uses the global
    step count.
    """

    def __init__(
        self,
        lr: float = DEFAULT_LR,
        beta1: float = DEFAULT_BETA1,
        beta2: float = DEFAULT_BETA2,
        eps: float = DEFAULT_EPS,
    ) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: Dense = {}
        self._v: Dense = {}
        self._sparse_m: Sparse = {}
        self._sparse_v: Sparse = {}

    def _update(self, param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray) -> None:
        m *= self.beta1
        m += (1.0 - self.beta1) * grad
        v *= self.beta2
        v += (1.0 - self.beta2) * grad * grad
        m_hat = m / (1.0 - self.beta1 ** self.t)
        v_hat = v / (1.0 - self.beta2 ** self.t)
        param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def step(
        self,
        params: Dense,
        grads: Dense,
        rows: Optional[Sparse] = None,
        row_grads: Optional[Sparse] = None,
    ) -> None:
        self.t += 1
        for name in sorted(grads):
            grad = grads[name]
            if name not in self._m:
                self._m[name] = np.zeros_like(grad)
                self._v[name] = np.zeros_like(grad)
            self._update(params[name], grad, self._m[name], self._v[name])
        if rows is None or not row_grads:
            return
        for key in sorted(row_grads):
            grad = row_grads[key]
            if key not in self._sparse_m:
                self._sparse_m[key] = np.zeros_like(grad)
                self._sparse_v[key] = np.zeros_like(grad)
            row = rows.get(key)
            if row is None:
                row = np.zeros_like(grad)
                rows[key] = row
            self._update(row, grad, self._sparse_m[key], self._sparse_v[key])
