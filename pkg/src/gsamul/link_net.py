"""The learned link: a one-input, one-output network with a single
tanh hidden layer, plus an identity stand-in used by the ablation mode.

Parameter vectors are flattened in the fixed order (w1 | b1 | w2 | b2),
giving ``3H + 1`` entries for hidden width ``H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(eq=False)
class LinkNetwork:
    """Scalar map u -> b2 + sum_h w2[h] * tanh(w1[h] * u + b1[h])."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    @property
    def hidden_size(self) -> int:
        return self.w1.shape[0]

    @property
    def n_params(self) -> int:
        return 3 * self.hidden_size + 1

    def params_flat(self) -> np.ndarray:
        return np.concatenate([self.w1, self.b1, self.w2, [self.b2]])

    def with_params(self, flat: np.ndarray) -> "LinkNetwork":
        """New network with parameters replaced from a flat (w1|b1|w2|b2) vector."""
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise InvalidInputError(
                f"expected {self.n_params} parameters, got shape {flat.shape}"
            )
        h = self.hidden_size
        return LinkNetwork(
            w1=flat[:h].copy(),
            b1=flat[h : 2 * h].copy(),
            w2=flat[2 * h : 3 * h].copy(),
            b2=float(flat[3 * h]),
        )

    def forward(self, u):
        """Evaluate the link; broadcasts over array-valued ``u``."""
        u = np.asarray(u, dtype=float)
        z = np.tanh(np.multiply.outer(u, self.w1) + self.b1)
        out = z @ self.w2 + self.b2
        return float(out) if u.ndim == 0 else out

    def grad_input(self, u):
        """d(forward)/du; broadcasts over array-valued ``u``."""
        u = np.asarray(u, dtype=float)
        z = np.tanh(np.multiply.outer(u, self.w1) + self.b1)
        out = (1.0 - z * z) @ (self.w2 * self.w1)
        return float(out) if u.ndim == 0 else out

    def grad_params(self, u: float) -> np.ndarray:
        """Exact partials of forward(u) in flat (w1|b1|w2|b2) order."""
        return self.param_gradients(np.asarray([u], dtype=float))[0]

    def param_gradients(self, u: np.ndarray) -> np.ndarray:
        """Per-point parameter gradients, shape (len(u), 3H+1)."""
        u = np.asarray(u, dtype=float)
        z = np.tanh(np.multiply.outer(u, self.w1) + self.b1)  # (n, H)
        sech2 = 1.0 - z * z
        d_b1 = sech2 * self.w2  # (n, H)
        d_w1 = d_b1 * u[:, None]
        d_w2 = z
        d_b2 = np.ones((u.shape[0], 1))
        return np.hstack([d_w1, d_b1, d_w2, d_b2])


@dataclass(eq=False)
class IdentityLink:
    """Fixed identity link used by the ablation mode: forward(u) = u,
    unit input gradient, no trainable parameters."""

    @property
    def hidden_size(self) -> int:
        return 0

    @property
    def n_params(self) -> int:
        return 0

    def params_flat(self) -> np.ndarray:
        return np.zeros(0)

    def with_params(self, flat: np.ndarray) -> "IdentityLink":
        return self

    def forward(self, u):
        u = np.asarray(u, dtype=float)
        return float(u) if u.ndim == 0 else u.copy()

    def grad_input(self, u):
        u = np.asarray(u, dtype=float)
        return 1.0 if u.ndim == 0 else np.ones_like(u)

    def grad_params(self, u: float) -> np.ndarray:
        return np.zeros(0)

    def param_gradients(self, u: np.ndarray) -> np.ndarray:
        return np.zeros((np.asarray(u).shape[0], 0))


def init_network(hidden_size: int, rng: np.random.Generator) -> LinkNetwork:
    """Draw every parameter independently from U(0, 1).

    The ``3H + 1`` values are drawn as one block in flat order, so the
    result is deterministic given the generator state.
    """
    if hidden_size < 1:
        raise InvalidInputError(f"hidden_size must be >= 1, got {hidden_size}")
    h = hidden_size
    flat = rng.uniform(size=3 * h + 1)
    return LinkNetwork(
        w1=flat[:h].copy(),
        b1=flat[h : 2 * h].copy(),
        w2=flat[2 * h : 3 * h].copy(),
        b2=float(flat[3 * h]),
    )
