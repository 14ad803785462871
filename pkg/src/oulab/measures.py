"""Discrete measures, the cosine mode basis, tangent fields and push-forward.

The reference measure is a weighted point cloud in R^d (canonically the
midpoint discretization of uniform[0,1] in d = 1).  Tangent fields are
vector fields on its support, stored as raw per-atom values and optionally
as coefficients in an orthonormal mode basis.  The push-forward map sends a
field phi to the image measure obtained by moving every atom x_i to
phi(x_i); for the discrete reference this is exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiscreteMeasure",
    "BaseMeasure",
    "EigenBasis",
    "TangentVector",
    "make_base_measure",
    "eigenbasis_cosine",
    "gram_matrix",
    "gram_tolerance",
    "sample_gaussian_tangent",
    "pushforward",
    "tangent_norm",
    "save_measure_csv",
    "load_measure_csv",
]

_WEIGHT_TOL = 1e-9


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError("points must be an (N,) or (N, d) array")
    return pts


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms in R^d; weights are strictly positive and sum to one.

    Immutable: the arrays are stored read-only and every transform returns a
    new value.  Coincident atoms are allowed and are never merged.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        pts = _as_points(self.points)
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != pts.shape[0]:
            raise ValueError("weights must be one value per atom")
        if pts.shape[0] == 0:
            raise ValueError("a measure needs at least one atom")
        if not np.all(np.isfinite(pts)):
            raise ValueError("atom positions must be finite")
        if not np.all(w > 0.0):
            raise ValueError("weights must be strictly positive")
        if abs(float(w.sum()) - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to one")
        pts = pts.copy()
        w = w.copy()
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n_atoms(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def points1d(self) -> np.ndarray:
        """Flat atom positions; only meaningful for d = 1."""
        if self.dim != 1:
            raise ValueError("points1d requires a one-dimensional measure")
        return self.points[:, 0]

    def moment(self, p: float) -> float:
        """p-th absolute moment sum_i w_i ||x_i||^p."""
        norms = np.linalg.norm(self.points, axis=1)
        return float(np.sum(self.weights * norms ** p))


@dataclass(frozen=True)
class BaseMeasure(DiscreteMeasure):
    """Reference measure: a DiscreteMeasure that remembers how it was built."""

    kind: str = "custom"


def make_base_measure(kind: str, N: int, d: int = 1, seed: int | None = None) -> BaseMeasure:
    """Construct a reference measure.

    kind="uniform01": midpoints (i - 1/2)/N on [0, 1] with equal weights
    (d must be 1).  kind="gaussian": N iid standard normal atoms in R^d,
    equal weights, deterministic for a given seed.
    """
    if N < 1:
        raise ValueError("need at least one atom")
    weights = np.full(N, 1.0 / N)
    if kind == "uniform01":
        if d != 1:
            raise ValueError("uniform01 reference is one-dimensional")
        points = (np.arange(N) + 0.5) / N
        return BaseMeasure(points=points, weights=weights, kind="uniform01")
    if kind == "gaussian":
        rng = np.random.default_rng(seed)
        points = rng.standard_normal((N, d))
        return BaseMeasure(points=points, weights=weights, kind="gaussian")
    raise ValueError(f"unknown base measure kind {kind!r}")


def gram_tolerance(n_atoms: int, n_modes: int) -> float:
    """Midpoint-rule error budget for the discrete Gram matrix."""
    return max(1e-9, 10.0 * n_modes ** 2 / n_atoms ** 2)


@dataclass(frozen=True)
class EigenBasis:
    """Mode fields evaluated on the support of the reference measure.

    ``values`` has shape (M, N): row n holds the n-th field at every atom
    (d = 1 only).  The discrete Gram matrix must match the identity within
    :func:`gram_tolerance`.
    """

    base: BaseMeasure
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != self.base.n_atoms:
            raise ValueError("values must have shape (M, N) over the base support")
        if self.base.dim != 1:
            raise ValueError("mode bases are implemented for d = 1 only")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        gram = gram_matrix(self)
        defect = np.abs(gram - np.eye(self.n_modes)).max() if self.n_modes else 0.0
        tol = gram_tolerance(self.base.n_atoms, max(self.n_modes, 1))
        if defect > tol:
            raise ValueError(f"Gram defect {defect:.3e} exceeds tolerance {tol:.3e}")

    @property
    def n_modes(self) -> int:
        return int(self.values.shape[0])


def gram_matrix(basis: EigenBasis) -> np.ndarray:
    """Discrete Gram matrix sum_i w_i phi_m(x_i) phi_n(x_i)."""
    weighted = basis.values * basis.base.weights
    return weighted @ basis.values.T


def eigenbasis_cosine(base: BaseMeasure, M: int) -> EigenBasis:
    """Cosine basis on the uniform[0,1] midpoint reference.

    Mode 1 is the constant field 1; mode n >= 2 is sqrt(2) cos((n-1) pi x).
    On the midpoint grid these are exactly orthonormal as long as M <= N/2;
    beyond that the high modes alias and the basis is rejected.
    """
    if base.kind != "uniform01" or base.dim != 1:
        raise ValueError("cosine basis requires the uniform01 reference")
    if M < 0:
        raise ValueError("mode count must be nonnegative")
    if M > base.n_atoms // 2:
        raise ValueError("too many modes for this support (aliasing); raise N or lower M")
    x = base.points1d
    values = np.empty((M, base.n_atoms))
    for n in range(M):
        if n == 0:
            values[n] = 1.0
        else:
            values[n] = np.sqrt(2.0) * np.cos(n * np.pi * x)
    return EigenBasis(base=base, values=values)


@dataclass(frozen=True)
class TangentVector:
    """Vector field on the support of the reference measure (d = 1).

    ``values`` are the per-atom field values; ``coeffs`` are mode
    coefficients when the field was built from (or projected onto) a basis.
    """

    values: np.ndarray
    coeffs: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.coeffs is not None:
            c = np.asarray(self.coeffs, dtype=float).copy()
            c.setflags(write=False)
            object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_coeffs(cls, basis: EigenBasis, coeffs) -> "TangentVector":
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (basis.n_modes,):
            raise ValueError("one coefficient per basis mode")
        return cls(values=c @ basis.values, coeffs=c)

    def to_coeffs(self, basis: EigenBasis, gram_correct: bool = True) -> np.ndarray:
        """Project the raw field onto the basis.

        With ``gram_correct`` the (near-identity) Gram system is solved so the
        projection is exact for fields in the span even when the discrete
        modes are only approximately orthonormal.
        """
        raw = basis.values @ (basis.base.weights * self.values)
        if not gram_correct or basis.n_modes == 0:
            return raw
        return np.linalg.solve(gram_matrix(basis), raw)


def sample_gaussian_tangent(spectrum, basis: EigenBasis, seed) -> TangentVector:
    """One draw of the centred Gaussian field: independent mode coefficients
    with variance 1/alpha_n.  Deterministic for a given seed."""
    if spectrum.n_modes != basis.n_modes:
        raise ValueError("spectrum and basis must agree on the mode count")
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(spectrum.n_modes) / np.sqrt(spectrum.alphas)
    return TangentVector.from_coeffs(basis, coeffs)


def pushforward(base: DiscreteMeasure, phi: TangentVector) -> DiscreteMeasure:
    """Image measure of ``base`` under the field: atom x_i moves to phi(x_i).

    Weights are unchanged, so total mass is preserved exactly.  Coincident
    image atoms are kept as-is.
    """
    vals = phi.values
    if vals.shape[0] != base.n_atoms:
        raise ValueError("field must be defined on the support of the measure")
    return DiscreteMeasure(points=vals, weights=base.weights)


def tangent_norm(base: DiscreteMeasure, phi: TangentVector, p: float) -> float:
    """L^p(base) norm (sum_i w_i ||phi(x_i)||^p)^(1/p)."""
    if p < 1.0:
        raise ValueError("p must be at least 1")
    vals = _as_points(phi.values)
    norms = np.linalg.norm(vals, axis=1)
    return float(np.sum(base.weights * norms ** p) ** (1.0 / p))


def save_measure_csv(measure: DiscreteMeasure, path) -> None:
    """Write atoms as CSV with header x_1,...,x_d,weight at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{j + 1}" for j in range(measure.dim)] + ["weight"])
        for row, w in zip(measure.points, measure.weights):
            writer.writerow([f"{v:.17g}" for v in row] + [f"{w:.17g}"])


def load_measure_csv(path) -> DiscreteMeasure:
    """Read a measure written by :func:`save_measure_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != "weight" or len(header) < 2:
            raise ValueError(f"{path}: expected header x_1,...,x_d,weight")
        d = len(header) - 1
        points, weights = [], []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ValueError(f"{path}:{line}: expected {d + 1} columns")
            points.append([float(v) for v in row[:d]])
            weights.append(float(row[d]))
    return DiscreteMeasure(points=np.asarray(points), weights=np.asarray(weights))
