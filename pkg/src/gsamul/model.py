"""The assembled model: grouped additive coefficients, spline bases, and
the link network, together with the loss abstraction, penalized and
unpenalized objectives, the identifiability projection, and JSON
serialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .basis import SplineBasis, design_matrix, design_row
from .data import Dataset
from .errors import DegenerateStateError, InvalidInputError
from .link_net import IdentityLink, LinkNetwork

MODEL_FORMAT = "gsamul-model"
MODEL_VERSION = 1


@dataclass(eq=False)
class AdditiveCoefficients:
    """Coefficient vector of the additive part, stored as p groups of d.

    ``groups[j]`` holds the d coefficients of feature j+1; the flattened
    layout is feature-major, matching design rows."""

    groups: np.ndarray

    def __post_init__(self):
        self.groups = np.asarray(self.groups, dtype=float)
        if self.groups.ndim != 2:
            raise InvalidInputError(
                f"coefficients must be a (p, d) array, got shape {self.groups.shape}"
            )

    @property
    def p(self) -> int:
        return self.groups.shape[0]

    @property
    def d(self) -> int:
        return self.groups.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.groups.reshape(-1)

    @classmethod
    def from_flat(cls, flat: np.ndarray, p: int, d: int) -> "AdditiveCoefficients":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (p * d,):
            raise InvalidInputError(
                f"expected a flat vector of length {p * d}, got shape {flat.shape}"
            )
        return cls(flat.reshape(p, d).copy())

    def group_norms(self) -> np.ndarray:
        return np.linalg.norm(self.groups, axis=1)


@dataclass(eq=False)
class LossSpec:
    """A pointwise loss and its derivative in the prediction argument.

    Both callables are vectorized over numpy arrays.  Only least squares
    ships here; other losses plug in through the same two callables."""

    kind: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray, np.ndarray], np.ndarray]


def least_squares_loss() -> LossSpec:
    """(y - yhat)^2 / 2, so the derivative in yhat is yhat - y."""
    return LossSpec(
        kind="least_squares",
        value=lambda y, yhat: 0.5 * (np.asarray(y) - np.asarray(yhat)) ** 2,
        derivative=lambda y, yhat: np.asarray(yhat) - np.asarray(y),
    )


@dataclass(eq=False)
class GsamulModel:
    """Spline bases + grouped coefficients + link."""

    bases: list[SplineBasis]
    alpha: AdditiveCoefficients
    link: LinkNetwork | IdentityLink

    def __post_init__(self):
        if len(self.bases) != self.alpha.p:
            raise InvalidInputError(
                f"{len(self.bases)} bases but {self.alpha.p} coefficient groups"
            )
        for j, b in enumerate(self.bases):
            if b.d != self.alpha.d:
                raise InvalidInputError(
                    f"basis {j + 1} has d={b.d} but coefficients have d={self.alpha.d}"
                )

    @property
    def p(self) -> int:
        return self.alpha.p

    def additive_score(self, x: np.ndarray) -> float:
        """Design row at x dotted with the flattened coefficients."""
        return float(design_row(self.bases, x) @ self.alpha.flat)

    def predict(self, x: np.ndarray) -> float:
        return float(self.link.forward(self.additive_score(x)))

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Additive scores for every row of X."""
        return design_matrix(self.bases, X) @ self.alpha.flat

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return self.link.forward(self.scores(X))

    def component_values(self, X: np.ndarray) -> np.ndarray:
        """Estimated per-feature component values, shape (n, p)."""
        X = np.asarray(X, dtype=float)
        out = np.empty((X.shape[0], self.p))
        for j, b in enumerate(self.bases):
            out[:, j] = b.evaluate_many(X[:, j]) @ self.alpha.groups[j]
        return out


def penalty(alpha: AdditiveCoefficients) -> float:
    """Sum over features of the Euclidean norm of each coefficient group."""
    return float(alpha.group_norms().sum())


def objective_inner(
    model: GsamulModel, data: Dataset, loss: LossSpec, lam: float
) -> float:
    """Mean loss on ``data`` plus ``lam`` times the group-norm penalty."""
    if lam < 0:
        raise InvalidInputError(f"lam must be >= 0, got {lam}")
    if data.n == 0:
        raise InvalidInputError("objective over an empty dataset")
    mean_loss = float(np.mean(loss.value(data.y, model.predict_batch(data.X))))
    return mean_loss + lam * penalty(model.alpha)


def objective_outer(model: GsamulModel, data: Dataset, loss: LossSpec) -> float:
    """Unpenalized mean loss on ``data``."""
    if data.n == 0:
        raise InvalidInputError("objective over an empty dataset")
    return float(np.mean(loss.value(data.y, model.predict_batch(data.X))))


def project_identifiability(alpha: AdditiveCoefficients) -> AdditiveCoefficients:
    """Rescale to unit Euclidean norm and fix the sign so the first
    coordinate is positive (no flip when it lands exactly on zero)."""
    flat = alpha.flat
    norm = float(np.linalg.norm(flat))
    if norm == 0.0:
        raise DegenerateStateError("cannot normalize an all-zero coefficient vector")
    scaled = flat / norm
    if scaled[0] < 0.0:
        scaled = -scaled
    return AdditiveCoefficients.from_flat(scaled, alpha.p, alpha.d)


def model_to_json(model: GsamulModel) -> str:
    """Version-tagged JSON with per-feature degree/knots, flattened
    coefficients, and the link parameters."""
    if isinstance(model.link, IdentityLink):
        link = {"kind": "identity"}
    else:
        link = {
            "kind": "mlp",
            "hidden_size": model.link.hidden_size,
            "params": model.link.params_flat().tolist(),
        }
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "bases": [
            {"degree": b.degree, "knots": b.knots.tolist()} for b in model.bases
        ],
        "alpha": model.alpha.flat.tolist(),
        "link": link,
    }
    return json.dumps(doc)


def model_from_json(text: str) -> GsamulModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise InvalidInputError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise InvalidInputError(f"unsupported model version {doc.get('version')!r}")
    bases = []
    for spec in doc["bases"]:
        knots = np.asarray(spec["knots"], dtype=float)
        degree = int(spec["degree"])
        bases.append(
            SplineBasis(
                degree=degree,
                knots=knots,
                d=len(knots) - degree - 1,
                domain_lo=float(knots[0]),
                domain_hi=float(knots[-1]),
            )
        )
    d = bases[0].d
    alpha = AdditiveCoefficients.from_flat(
        np.asarray(doc["alpha"], dtype=float), len(bases), d
    )
    link_doc = doc["link"]
    if link_doc["kind"] == "identity":
        link: LinkNetwork | IdentityLink = IdentityLink()
    else:
        h = int(link_doc["hidden_size"])
        flat = np.asarray(link_doc["params"], dtype=float)
        link = LinkNetwork(
            w1=np.zeros(h), b1=np.zeros(h), w2=np.zeros(h), b2=0.0
        ).with_params(flat)
    return GsamulModel(bases=bases, alpha=alpha, link=link)


def save_model(model: GsamulModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model))


def load_model(path: str | Path) -> GsamulModel:
    return model_from_json(Path(path).read_text())
