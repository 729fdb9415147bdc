"""Datasets: synthetic generators, irrelevant-feature augmentation,
CSV ingestion, and split protocols.

Two synthetic families are provided.  Both draw inputs i.i.d. U(0, 1),
pass the sum of a few fixed component functions through a nonlinear
response map, and add Gaussian noise to the training response:

* example "a": components sin(pi*x1) and 0.5*x2^2 - 2/3, response 3*sin(f)
* example "b": four components (see ``component_values``), response exp(f/4)

Features beyond the informative ones are inert: they are drawn but do
not enter the response.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

INFORMATIVE_COUNT = {"a": 2, "b": 4}


@dataclass(eq=False)
class Dataset:
    """An (X, y) sample with optional generator ground truth.

    ``truth_components[i, j]`` holds the true per-feature effect at row i
    (zero columns for inert features), ``truth_score`` their sum, and
    ``truth_link`` the noiseless response.  ``informative`` lists the
    1-based positions of features that actually enter the response.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    truth_components: np.ndarray | None = None
    truth_score: np.ndarray | None = None
    truth_link: np.ndarray | None = None
    informative: tuple[int, ...] | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def take(self, idx: np.ndarray) -> "Dataset":
        """Row subset preserving any ground-truth arrays."""
        return Dataset(
            X=self.X[idx],
            y=self.y[idx],
            feature_names=list(self.feature_names),
            truth_components=None if self.truth_components is None else self.truth_components[idx],
            truth_score=None if self.truth_score is None else self.truth_score[idx],
            truth_link=None if self.truth_link is None else self.truth_link[idx],
            informative=self.informative,
        )


@dataclass(frozen=True)
class SynthSpec:
    """Configuration of one synthetic draw."""

    example: str
    n: int
    p: int
    noise_sd: float = math.sqrt(0.1)
    seed: int = 0


def component_values(example: str, X: np.ndarray) -> np.ndarray:
    """True per-feature component values, shape (n, p); inert columns are 0."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    out = np.zeros((n, p))
    if example == "a":
        out[:, 0] = np.sin(np.pi * X[:, 0])
        out[:, 1] = 0.5 * X[:, 1] ** 2 - 2.0 / 3.0
    elif example == "b":
        out[:, 0] = 0.3 * (np.sin(np.pi * X[:, 0]) - 2.0 / np.pi)
        out[:, 1] = 0.5 * ((X[:, 1] - 0.5) ** 2 - 1.0 / 12.0)
        out[:, 2] = 0.4 * (np.exp(-X[:, 2]) + np.e - 1.0)
        out[:, 3] = math.log(2.0) - 1.0 / (1.0 + X[:, 3])
    else:
        raise InvalidInputError(f"unknown synthetic example {example!r}")
    return out


def link_value(example: str, score):
    """True response map applied to the additive score."""
    score = np.asarray(score, dtype=float)
    if example == "a":
        return 3.0 * np.sin(score)
    if example == "b":
        return np.exp(0.25 * score)
    raise InvalidInputError(f"unknown synthetic example {example!r}")


def _generate(spec: SynthSpec) -> Dataset:
    k = INFORMATIVE_COUNT[spec.example]
    if spec.p < k:
        raise InvalidInputError(
            f"example {spec.example!r} needs p >= {k}, got p={spec.p}"
        )
    if spec.noise_sd < 0:
        raise InvalidInputError("noise_sd must be >= 0")
    rng = np.random.default_rng(spec.seed)
    X = rng.uniform(size=(spec.n, spec.p))
    comps = component_values(spec.example, X)
    score = comps.sum(axis=1)
    clean = link_value(spec.example, score)
    y = clean.copy()
    if spec.noise_sd > 0:
        y = y + spec.noise_sd * rng.standard_normal(spec.n)
    return Dataset(
        X=X,
        y=y,
        feature_names=[f"x{j + 1}" for j in range(spec.p)],
        truth_components=comps,
        truth_score=score,
        truth_link=clean,
        informative=tuple(range(1, k + 1)),
    )


def gen_example_a(spec: SynthSpec) -> Dataset:
    if spec.example != "a":
        raise InvalidInputError(f"spec.example is {spec.example!r}, expected 'a'")
    return _generate(spec)


def gen_example_b(spec: SynthSpec) -> Dataset:
    if spec.example != "b":
        raise InvalidInputError(f"spec.example is {spec.example!r}, expected 'b'")
    return _generate(spec)


def generate(spec: SynthSpec) -> Dataset:
    """Dispatch on ``spec.example``."""
    return _generate(spec)


def gen_eval_grid(spec: SynthSpec, n_eval: int) -> Dataset:
    """A noise-free draw from the same family, used for validation/testing."""
    return _generate(replace(spec, n=n_eval, noise_sd=0.0))


def augment_irrelevant(
    ds: Dataset, q: int, lo: float, hi: float, seed: int
) -> Dataset:
    """Append ``q`` i.i.d. U(lo, hi) columns named noise_1..noise_q.

    The response and any stored ground truth are unchanged (new truth
    columns are zero)."""
    if q < 0:
        raise InvalidInputError(f"q must be >= 0, got {q}")
    if q == 0:
        return ds
    if lo >= hi:
        raise InvalidInputError(f"need lo < hi, got lo={lo}, hi={hi}")
    rng = np.random.default_rng(seed)
    extra = rng.uniform(lo, hi, size=(ds.n, q))
    comps = ds.truth_components
    if comps is not None:
        comps = np.hstack([comps, np.zeros((ds.n, q))])
    return Dataset(
        X=np.hstack([ds.X, extra]),
        y=ds.y.copy(),
        feature_names=list(ds.feature_names) + [f"noise_{k + 1}" for k in range(q)],
        truth_components=comps,
        truth_score=None if ds.truth_score is None else ds.truth_score.copy(),
        truth_link=None if ds.truth_link is None else ds.truth_link.copy(),
        informative=ds.informative,
    )


def load_csv(path: str | Path, target_column: str) -> Dataset:
    """Read a headered, all-numeric CSV; every non-target column is a feature.

    Raises descriptive errors for a missing file, a missing target column,
    or non-numeric cells (reported with their 1-based data row numbers).
    """
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"CSV file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"CSV file {path} is empty") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise InvalidInputError(
                f"target column {target_column!r} not in header {header}"
            )
        t_idx = header.index(target_column)
        rows: list[list[float]] = []
        bad_rows: list[int] = []
        for rownum, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                bad_rows.append(rownum)
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                bad_rows.append(rownum)
        if bad_rows:
            shown = ", ".join(str(r) for r in bad_rows[:20])
            more = "" if len(bad_rows) <= 20 else f" (+{len(bad_rows) - 20} more)"
            raise InvalidInputError(
                f"non-numeric or malformed cells in {path} at data row(s) {shown}{more}"
            )
    if not rows:
        raise InvalidInputError(f"CSV file {path} has no data rows")
    arr = np.asarray(rows, dtype=float)
    feat_idx = [j for j in range(len(header)) if j != t_idx]
    return Dataset(
        X=arr[:, feat_idx],
        y=arr[:, t_idx],
        feature_names=[header[j] for j in feat_idx],
    )


def save_csv(ds: Dataset, path: str | Path, target_name: str = "y") -> None:
    """Write features plus a target column; ground truth, when present,
    goes to a ``<path>.truth.json`` sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + [target_name])
        for i in range(ds.n):
            writer.writerow([repr(v) for v in ds.X[i]] + [repr(float(ds.y[i]))])
    if ds.truth_components is not None:
        sidecar = {
            "format": "gsamul-truth",
            "version": 1,
            "informative": list(ds.informative or ()),
            "components": ds.truth_components.tolist(),
            "score": None if ds.truth_score is None else ds.truth_score.tolist(),
            "link": None if ds.truth_link is None else ds.truth_link.tolist(),
        }
        Path(str(path) + ".truth.json").write_text(json.dumps(sidecar))


def split(
    ds: Dataset, fractions: tuple[float, float, float] = (0.4, 0.4, 0.2), seed: int = 0
) -> tuple[Dataset, Dataset, Dataset]:
    """Random disjoint (train, validation, test) partition covering all rows.

    The first two parts get floor(n * fraction) rows; the remainder is the
    test part."""
    f1, f2, f3 = fractions
    if min(f1, f2, f3) <= 0:
        raise InvalidInputError("split fractions must all be positive")
    if abs(f1 + f2 + f3 - 1.0) > 1e-9:
        raise InvalidInputError(f"split fractions must sum to 1, got {fractions}")
    n1 = int(np.floor(ds.n * f1))
    n2 = int(np.floor(ds.n * f2))
    n3 = ds.n - n1 - n2
    if min(n1, n2, n3) < 1:
        raise InvalidInputError(
            f"split of n={ds.n} with fractions {fractions} leaves an empty part"
        )
    perm = np.random.default_rng(seed).permutation(ds.n)
    return (
        ds.take(perm[:n1]),
        ds.take(perm[n1 : n1 + n2]),
        ds.take(perm[n1 + n2 :]),
    )
