"""Single-loop bilevel training.

Each iteration performs three moves from the current pair (alpha, theta):

1. a minibatch descent probe on the penalized training objective giving
   a transient ``alpha_bar`` (group-shrinkage times the old group, minus
   the scaled data gradient),
2. a full-validation-batch descent step on the link parameters, taken at
   ``alpha_bar``,
3. a full-training-batch refresh of alpha with the same shrinkage rule,
   evaluated at the *new* link parameters, followed by the unit-norm /
   sign projection.

Both step sizes follow the constant schedule min(1/L, c/sqrt(T)).  The
group shrinkage factor 1 - eta*lam/||alpha_j|| floors the norm at a small
epsilon and clamps negative factors to zero, which zeroes the group
before the gradient term is added (soft-threshold behavior).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import build_basis, design_matrix
from .data import Dataset
from .errors import (
    DegenerateStateError,
    InvalidInputError,
    NumericalDivergenceError,
)
from .link_net import IdentityLink, LinkNetwork, init_network
from .model import (
    AdditiveCoefficients,
    GsamulModel,
    LossSpec,
    least_squares_loss,
    penalty,
    project_identifiability,
)


@dataclass(frozen=True)
class TrainConfig:
    """Knobs of one training run.

    ``lam`` weights the group-norm penalty, ``iters`` is the fixed
    iteration count T, ``schedule_c`` and ``smoothness`` (the assumed
    Lipschitz-smoothness constant) set the step size
    min(1/smoothness, schedule_c/sqrt(T)), and ``group_floor`` guards the
    shrinkage factor against zero group norms.  ``identity_link`` swaps
    the network for a fixed identity map and skips the link update."""

    lam: float = 1e-2
    iters: int = 400
    batch_size: int = 32
    schedule_c: float = 1.0
    smoothness: float = 1.0
    seed: int = 0
    identity_link: bool = False
    group_floor: float = 1e-8

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidInputError(f"lam must be >= 0, got {self.lam}")
        if self.iters < 1:
            raise InvalidInputError(f"iters must be >= 1, got {self.iters}")
        if self.batch_size < 1:
            raise InvalidInputError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.schedule_c <= 0:
            raise InvalidInputError(f"schedule_c must be > 0, got {self.schedule_c}")
        if self.smoothness <= 0:
            raise InvalidInputError(f"smoothness must be > 0, got {self.smoothness}")
        if self.group_floor <= 0:
            raise InvalidInputError(f"group_floor must be > 0, got {self.group_floor}")


@dataclass(frozen=True)
class HyperParams:
    """Structural hyperparameters: spline degree and count, hidden width."""

    degree: int = 3
    d: int = 8
    hidden: int = 25


@dataclass(eq=False)
class TrainTrace:
    """Per-iteration training record, one entry per iteration 1..T."""

    t: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    inner_objective: np.ndarray = field(default_factory=lambda: np.zeros(0))
    outer_objective: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grad_norm_sq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    group_norms: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __len__(self) -> int:
        return self.t.shape[0]


def lr_schedule(t: int, config: TrainConfig) -> tuple[float, float]:
    """Step sizes (eta_t, nu_t) at iteration t; constant in t."""
    step = min(1.0 / config.smoothness, config.schedule_c / math.sqrt(config.iters))
    return step, step


def _data_gradient_alpha(
    alpha: AdditiveCoefficients,
    link: LinkNetwork | IdentityLink,
    psi: np.ndarray,
    y: np.ndarray,
    loss: LossSpec,
) -> np.ndarray:
    """Mean gradient of the unpenalized loss in the flat coefficients."""
    u = psi @ alpha.flat
    resid = loss.derivative(y, link.forward(u))
    return psi.T @ (resid * link.grad_input(u)) / psi.shape[0]


def _shrink_update(
    alpha: AdditiveCoefficients,
    grad_flat: np.ndarray,
    eta: float,
    lam: float,
    group_floor: float,
) -> AdditiveCoefficients:
    norms = alpha.group_norms()
    factor = 1.0 - eta * lam / np.maximum(norms, group_floor)
    factor = np.maximum(factor, 0.0)
    new = factor[:, None] * alpha.groups - eta * grad_flat.reshape(alpha.p, alpha.d)
    return AdditiveCoefficients(new)


def inner_step(
    alpha: AdditiveCoefficients,
    link: LinkNetwork | IdentityLink,
    psi: np.ndarray,
    y: np.ndarray,
    eta: float,
    lam: float,
    loss: LossSpec,
    group_floor: float = 1e-8,
) -> AdditiveCoefficients:
    """Minibatch descent probe on the penalized training objective.

    ``psi`` holds the design rows of the minibatch.  Returns the transient
    iterate; no projection is applied here."""
    if psi.shape[0] == 0:
        raise InvalidInputError("inner step needs a non-empty minibatch")
    grad = _data_gradient_alpha(alpha, link, psi, y, loss)
    return _shrink_update(alpha, grad, eta, lam, group_floor)


def outer_gradient(
    link: LinkNetwork | IdentityLink,
    alpha_bar: AdditiveCoefficients,
    psi_val: np.ndarray,
    y_val: np.ndarray,
    loss: LossSpec,
) -> np.ndarray:
    """Mean gradient of the validation loss in the link parameters,
    evaluated at the transient coefficients ``alpha_bar``."""
    if psi_val.shape[0] == 0:
        raise InvalidInputError("outer step needs a non-empty validation set")
    u = psi_val @ alpha_bar.flat
    resid = loss.derivative(y_val, link.forward(u))
    return link.param_gradients(u).T @ resid / psi_val.shape[0]


def outer_step(
    link: LinkNetwork | IdentityLink,
    alpha_bar: AdditiveCoefficients,
    psi_val: np.ndarray,
    y_val: np.ndarray,
    nu: float,
    loss: LossSpec,
) -> LinkNetwork | IdentityLink:
    """Full-validation-batch descent step on the link parameters."""
    grad = outer_gradient(link, alpha_bar, psi_val, y_val, loss)
    return link.with_params(link.params_flat() - nu * grad)


def alpha_step(
    alpha: AdditiveCoefficients,
    link_next: LinkNetwork | IdentityLink,
    psi_train: np.ndarray,
    y_train: np.ndarray,
    eta: float,
    lam: float,
    loss: LossSpec,
    group_floor: float = 1e-8,
) -> AdditiveCoefficients:
    """Full-batch coefficient refresh at the updated link, then projection."""
    if psi_train.shape[0] == 0:
        raise InvalidInputError("alpha step needs a non-empty training set")
    grad = _data_gradient_alpha(alpha, link_next, psi_train, y_train, loss)
    updated = _shrink_update(alpha, grad, eta, lam, group_floor)
    if np.linalg.norm(updated.flat) == 0.0:
        raise DegenerateStateError(
            "every coefficient group shrank to zero; decrease lam or eta"
        )
    return project_identifiability(updated)


def train(
    train_ds: Dataset,
    val_ds: Dataset,
    config: TrainConfig,
    hyper: HyperParams,
    loss: LossSpec | None = None,
) -> tuple[GsamulModel, TrainTrace]:
    """Run the full single-loop procedure and return the final model and
    its per-iteration trace.

    Bases are built from the training features only; validation rows
    falling outside the training range are clamped at evaluation.  All
    randomness (parameter init, minibatch sampling) comes from one
    generator seeded with ``config.seed``, so identical inputs give
    bit-identical results.
    """
    if train_ds.p != val_ds.p:
        raise InvalidInputError(
            f"train has p={train_ds.p} features but validation has p={val_ds.p}"
        )
    if train_ds.n == 0 or val_ds.n == 0:
        raise InvalidInputError("train and validation sets must be non-empty")
    if loss is None:
        loss = least_squares_loss()

    rng = np.random.default_rng(config.seed)
    p = train_ds.p
    bases = [build_basis(train_ds.X[:, j], hyper.degree, hyper.d) for j in range(p)]
    psi_tr = design_matrix(bases, train_ds.X)
    psi_val = design_matrix(bases, val_ds.X)
    y_tr = train_ds.y
    y_val = val_ds.y

    # Uniform U(0,1) start for both parameter blocks (alpha drawn first),
    # with alpha projected onto the unit-norm constraint set.
    alpha = project_identifiability(
        AdditiveCoefficients(rng.uniform(size=(p, hyper.d)))
    )
    link: LinkNetwork | IdentityLink
    if config.identity_link:
        link = IdentityLink()
    else:
        link = init_network(hyper.hidden, rng)

    n = train_ds.n
    batch = min(config.batch_size, n)
    T = config.iters
    trace = TrainTrace(
        t=np.arange(1, T + 1),
        inner_objective=np.zeros(T),
        outer_objective=np.zeros(T),
        grad_norm_sq=np.zeros(T),
        group_norms=np.zeros((T, p)),
    )

    for t in range(1, T + 1):
        eta, nu = lr_schedule(t, config)
        idx = rng.choice(n, size=batch, replace=False)
        alpha_bar = inner_step(
            alpha, link, psi_tr[idx], y_tr[idx], eta, config.lam, loss,
            config.group_floor,
        )
        if config.identity_link:
            grad_sq = 0.0
        else:
            grad = outer_gradient(link, alpha_bar, psi_val, y_val, loss)
            grad_sq = float(grad @ grad)
            link = link.with_params(link.params_flat() - nu * grad)
        alpha = alpha_step(
            alpha, link, psi_tr, y_tr, eta, config.lam, loss, config.group_floor
        )

        u_tr = psi_tr @ alpha.flat
        inner = float(np.mean(loss.value(y_tr, link.forward(u_tr))))
        inner += config.lam * penalty(alpha)
        u_val = psi_val @ alpha.flat
        outer = float(np.mean(loss.value(y_val, link.forward(u_val))))
        if not (np.isfinite(inner) and np.isfinite(outer) and np.isfinite(grad_sq)):
            raise NumericalDivergenceError(
                f"non-finite objective at iteration {t} "
                f"(inner={inner}, outer={outer}); reduce the step size"
            )
        k = t - 1
        trace.inner_objective[k] = inner
        trace.outer_objective[k] = outer
        trace.grad_norm_sq[k] = grad_sq
        trace.group_norms[k] = alpha.group_norms()

    return GsamulModel(bases=bases, alpha=alpha, link=link), trace


def min_grad_norm(trace: TrainTrace) -> float:
    """Smallest recorded squared link-gradient norm."""
    if len(trace) == 0:
        raise InvalidInputError("empty trace")
    return float(trace.grad_norm_sq.min())
