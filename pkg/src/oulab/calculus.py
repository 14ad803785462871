"""Cylindrical functions on measures and their intrinsic derivatives.

A cylindrical function has the form f(mu) = g(mu(psi_1), ..., mu(psi_n)) for
an outer g with closed-form gradient and inner test functions psi_i with
closed-form gradients.  Its intrinsic gradient at mu is the vector field

    x  |->  sum_i  d_i g(mu(psi_1), ..., mu(psi_n)) * grad psi_i(x),

and the directional derivative along a field phi is the L^2(mu) pairing of
that gradient with phi.  The module also ships finite-difference oracles for
both derivatives, the C^1 clamp / tail-penalty reference functions used by
the capacity machinery, and the sampled-vs-declared gradient bound check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .measures import DiscreteMeasure, TangentVector, pushforward

__all__ = [
    "TestFunction",
    "OuterFunction",
    "CylindricalFunction",
    "IntrinsicGradient",
    "make_cylindrical",
    "named_function",
    "compose_outer",
    "directional_derivative_fd",
    "intrinsic_pairing",
    "chain_rule_residual",
    "gradient_dual_norms",
    "c1_clamp",
    "c1_clamp_slope",
    "tail_penalty",
    "clamped_tail_mass",
    "tail_domination_constants",
    "fd_step",
    "TEST_FUNCTIONS",
    "OUTER_FUNCTIONS",
    "FUNCTION_CATALOG",
]

# Declared domain radius for the polynomially growing catalogue entries;
# gradient bounds below are valid for atoms within this ball.
DOMAIN_RADIUS = 8.0


@dataclass(frozen=True)
class TestFunction:
    """Inner test psi: R^d -> R with gradient and a declared gradient bound."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    grad_bound: float

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.fn(points)


@dataclass(frozen=True)
class OuterFunction:
    """Outer g: R^n -> R with gradient and per-partial sup bounds."""

    name: str
    arity: int
    fn: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    grad_bounds: tuple[float, ...]


@dataclass(frozen=True)
class CylindricalFunction:
    """f(mu) = g(mu(psi_1), ..., mu(psi_n)) with closed-form derivatives."""

    name: str
    outer: OuterFunction
    tests: tuple[TestFunction, ...]

    def __post_init__(self) -> None:
        if len(self.tests) != self.outer.arity:
            raise ValueError("outer arity must match the number of test functions")

    def statistics(self, mu: DiscreteMeasure) -> np.ndarray:
        """The linear statistics (mu(psi_1), ..., mu(psi_n))."""
        return np.array([float(np.sum(mu.weights * t.fn(mu.points))) for t in self.tests])

    def __call__(self, mu: DiscreteMeasure) -> float:
        return float(self.outer.fn(self.statistics(mu)))

    def gradient(self, mu: DiscreteMeasure) -> "IntrinsicGradient":
        """Closed-form intrinsic gradient at mu (no finite differences)."""
        partials = np.asarray(self.outer.grad(self.statistics(mu)), dtype=float)
        return IntrinsicGradient(partials=partials, tests=self.tests)

    @property
    def uniform_gradient_bound(self) -> float:
        """sup over measures and atoms of the gradient norm, from the declared
        per-factor bounds (valid on the declared domain)."""
        return float(sum(b * t.grad_bound for b, t in zip(self.outer.grad_bounds, self.tests)))


@dataclass(frozen=True)
class IntrinsicGradient:
    """Evaluator x -> Df(mu)(x) for a fixed mu."""

    partials: np.ndarray
    tests: tuple[TestFunction, ...]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        if squeeze:
            pts = pts[:, None]
        out = np.zeros_like(pts)
        for c, t in zip(self.partials, self.tests):
            if c != 0.0:
                out += c * t.grad(pts)
        return out[:, 0] if squeeze else out


def fd_step(scale: float, h: float = 1e-5) -> float:
    """Central-difference step h * (1 + |scale|), balancing truncation against
    round-off near cube-root machine epsilon."""
    return h * (1.0 + abs(scale))


def directional_derivative_fd(f: CylindricalFunction, mu: DiscreteMeasure,
                              phi_values: np.ndarray, h: float) -> float:
    """Central difference of eps -> f(mu with atoms shifted by eps * phi)."""
    if h <= 0.0:
        raise ValueError("step must be positive")
    vals = np.asarray(phi_values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    plus = DiscreteMeasure(points=mu.points + h * vals, weights=mu.weights)
    minus = DiscreteMeasure(points=mu.points - h * vals, weights=mu.weights)
    return (f(plus) - f(minus)) / (2.0 * h)


def intrinsic_pairing(f: CylindricalFunction, mu: DiscreteMeasure,
                      phi_values: np.ndarray) -> float:
    """Analytic directional derivative sum_i w_i <Df(mu)(x_i), phi(x_i)>."""
    grad = f.gradient(mu)(mu.points)
    vals = np.asarray(phi_values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return float(np.sum(mu.weights * np.sum(grad * vals, axis=1)))


def chain_rule_residual(u: CylindricalFunction, base: DiscreteMeasure,
                        phi: TangentVector, xi: TangentVector, h: float) -> float:
    """|FD of eps -> u(image of (phi + eps xi))  -  analytic tangent pairing|.

    The analytic side evaluates the intrinsic gradient of u at the image
    measure along the pushed field, sum_i w_i <Du(mu)(phi(x_i)), xi(x_i)>.
    """
    if h <= 0.0:
        raise ValueError("step must be positive")
    image = pushforward(base, phi)
    fd = directional_derivative_fd(u, image, xi.values, h)
    analytic = intrinsic_pairing(u, image, xi.values)
    return abs(fd - analytic)


def gradient_dual_norms(f: CylindricalFunction, measures: Sequence[DiscreteMeasure],
                        p: float) -> tuple[float, float]:
    """Sampled max of the dual gradient norm and the declared uniform bound.

    For each measure the dual norm is (sum_i w_i |Df(mu)(x_i)|^{p*})^{1/p*}
    with p* = p/(p-1), read as the per-atom max norm when p = 1.  The
    declared bound dominates every sampled norm, so the pair brackets the
    true sup over all measures.
    """
    if not measures:
        raise ValueError("need at least one sampled measure")
    if p < 1.0:
        raise ValueError("p must be at least 1")
    best = 0.0
    for mu in measures:
        grad = f.gradient(mu)(mu.points)
        norms = np.linalg.norm(grad, axis=1)
        if p == 1.0:
            dual = float(norms.max())
        else:
            p_star = p / (p - 1.0)
            dual = float(np.sum(mu.weights * norms ** p_star) ** (1.0 / p_star))
        best = max(best, dual)
    return best, f.uniform_gradient_bound


# ---------------------------------------------------------------------------
# Reference functions for the capacity machinery.

def c1_clamp(s, level: float = 1.0):
    """C^1 saturation: identity on [-level, level], constant +-3*level/2
    outside [-2*level, 2*level], quadratic blend in between.

    Integral of the trapezoid slope min(clip(s/l + 2, 0, 1), clip(2 - s/l, 0, 1)).
    """
    if level <= 0.0:
        raise ValueError("level must be positive")
    s_arr = np.asarray(s, dtype=float)
    l = level
    lower = 0.5 * l + 2.0 * s_arr + s_arr ** 2 / (2.0 * l)
    upper = -0.5 * l + 2.0 * s_arr - s_arr ** 2 / (2.0 * l)
    out = np.select(
        [s_arr <= -2.0 * l, s_arr < -l, s_arr <= l, s_arr < 2.0 * l],
        [-1.5 * l, lower, s_arr, upper],
        default=1.5 * l,
    )
    return out if out.ndim else float(out)


def c1_clamp_slope(s, level: float = 1.0):
    """Derivative of :func:`c1_clamp`: a continuous trapezoid, equal to one on
    [-level, level] and vanishing outside [-2*level, 2*level]."""
    if level <= 0.0:
        raise ValueError("level must be positive")
    s_arr = np.asarray(s, dtype=float)
    out = np.minimum(np.clip(s_arr / level + 2.0, 0.0, 1.0),
                     np.clip(2.0 - s_arr / level, 0.0, 1.0))
    return out if out.ndim else float(out)


def tail_penalty(s, threshold: float, p: float):
    """(1 + [(s - threshold)^+]^2)^(p/2) - 1: zero up to the threshold, then
    growing like the p-th power; nonincreasing in the threshold."""
    if threshold < 0.0:
        raise ValueError("threshold must be nonnegative")
    if p < 1.0:
        raise ValueError("p must be at least 1")
    excess = np.clip(np.asarray(s, dtype=float) - threshold, 0.0, None)
    out = (1.0 + excess ** 2) ** (0.5 * p) - 1.0
    return out if out.ndim else float(out)


def clamped_tail_mass(mu: DiscreteMeasure, threshold: float, p: float = 2.0) -> float:
    """C^1-clamped tail-penalty mass of a measure.

    Applies the unit clamp to mu(tail_penalty(|x|)).  Nonincreasing in the
    threshold and exactly zero once the threshold exceeds every atom norm.
    """
    norms = np.linalg.norm(mu.points, axis=1)
    stat = float(np.sum(mu.weights * tail_penalty(norms, threshold, p)))
    return float(c1_clamp(stat, level=1.0))


def tail_domination_constants(p: float, threshold: float) -> tuple[float, float]:
    """Radius R and constant c with tail_penalty(s) >= c * s^p for s >= R.

    For s >= R := max(2 * threshold, 4) the excess is at least s/2, so
    (1 + excess^2)^(p/2) - 1 >= (s/2)^p - 1 >= s^p / 2^(p+1).
    """
    if p < 1.0:
        raise ValueError("p must be at least 1")
    return max(2.0 * threshold, 4.0), 2.0 ** -(p + 1.0)


# ---------------------------------------------------------------------------
# Function catalogue.  Gradient bounds for polynomially growing entries are
# declared on the ball of radius DOMAIN_RADIUS.

def _coord(points: np.ndarray) -> np.ndarray:
    return points[:, 0]


def _coord_grad(points: np.ndarray) -> np.ndarray:
    out = np.zeros_like(points)
    out[:, 0] = 1.0
    return out


def _sqnorm(points: np.ndarray) -> np.ndarray:
    return np.sum(points ** 2, axis=1)


def _sqnorm_grad(points: np.ndarray) -> np.ndarray:
    return 2.0 * points


def _cos_pi(points: np.ndarray) -> np.ndarray:
    return np.cos(np.pi * points[:, 0])


def _cos_pi_grad(points: np.ndarray) -> np.ndarray:
    out = np.zeros_like(points)
    out[:, 0] = -np.pi * np.sin(np.pi * points[:, 0])
    return out


def _atan(points: np.ndarray) -> np.ndarray:
    return np.arctan(points[:, 0])


def _atan_grad(points: np.ndarray) -> np.ndarray:
    out = np.zeros_like(points)
    out[:, 0] = 1.0 / (1.0 + points[:, 0] ** 2)
    return out


TEST_FUNCTIONS: dict[str, TestFunction] = {
    "coord": TestFunction("coord", _coord, _coord_grad, 1.0),
    "square": TestFunction("square", _sqnorm, _sqnorm_grad, 2.0 * DOMAIN_RADIUS),
    "cos_pi": TestFunction("cos_pi", _cos_pi, _cos_pi_grad, float(np.pi)),
    "atan": TestFunction("atan", _atan, _atan_grad, 1.0),
}

OUTER_FUNCTIONS: dict[str, OuterFunction] = {
    "id": OuterFunction("id", 1, lambda r: r[0], lambda r: np.array([1.0]), (1.0,)),
    "tanh": OuterFunction("tanh", 1, lambda r: math.tanh(r[0]),
                          lambda r: np.array([1.0 / math.cosh(r[0]) ** 2]), (1.0,)),
    "sin": OuterFunction("sin", 1, lambda r: math.sin(r[0]),
                         lambda r: np.array([math.cos(r[0])]), (1.0,)),
    "square": OuterFunction("square", 1, lambda r: r[0] ** 2,
                            lambda r: np.array([2.0 * r[0]]),
                            (2.0 * DOMAIN_RADIUS ** 2,)),
    "smooth_clamp01": OuterFunction(
        "smooth_clamp01", 1,
        lambda r: 0.5 * (1.0 + math.tanh(2.0 * r[0] - 1.0)),
        lambda r: np.array([1.0 / math.cosh(2.0 * r[0] - 1.0) ** 2]),
        (1.0,),
    ),
    "tanh_sum": OuterFunction(
        "tanh_sum", 2,
        lambda r: math.tanh(r[0] + r[1]),
        lambda r: np.full(2, 1.0 / math.cosh(r[0] + r[1]) ** 2),
        (1.0, 1.0),
    ),
    "sin_diff": OuterFunction(
        "sin_diff", 2,
        lambda r: math.sin(r[0] - r[1]),
        lambda r: np.array([math.cos(r[0] - r[1]), -math.cos(r[0] - r[1])]),
        (1.0, 1.0),
    ),
}


def make_cylindrical(outer: str, tests: Sequence[str], name: str | None = None) -> CylindricalFunction:
    """Compose catalogue primitives into a cylindrical function."""
    try:
        g = OUTER_FUNCTIONS[outer]
    except KeyError:
        raise ValueError(f"unknown outer function {outer!r}") from None
    try:
        ts = tuple(TEST_FUNCTIONS[t] for t in tests)
    except KeyError as exc:
        raise ValueError(f"unknown test function {exc.args[0]!r}") from None
    label = name or f"{outer}({', '.join(tests)})"
    return CylindricalFunction(name=label, outer=g, tests=ts)


FUNCTION_CATALOG: dict[str, CylindricalFunction] = {
    "mean": make_cylindrical("id", ["coord"], name="mean"),
    "second_moment": make_cylindrical("id", ["square"], name="second_moment"),
    "tanh_mean": make_cylindrical("tanh", ["coord"], name="tanh_mean"),
    "sin_second_moment": make_cylindrical("sin", ["square"], name="sin_second_moment"),
    "tanh_second_moment": make_cylindrical("tanh", ["square"], name="tanh_second_moment"),
    "mean_squared": make_cylindrical("square", ["coord"], name="mean_squared"),
    "atan_mean": make_cylindrical("id", ["atan"], name="atan_mean"),
    "tanh_mixed": make_cylindrical("tanh_sum", ["coord", "cos_pi"], name="tanh_mixed"),
}


def named_function(name: str) -> CylindricalFunction:
    """Look up a catalogue function; composition syntax outer(test1,test2)."""
    if name in FUNCTION_CATALOG:
        return FUNCTION_CATALOG[name]
    if "(" in name and name.endswith(")"):
        outer, _, rest = name.partition("(")
        tests = [t.strip() for t in rest[:-1].split(",") if t.strip()]
        return make_cylindrical(outer, tests)
    raise ValueError(f"unknown function name {name!r}")


def compose_outer(tau: OuterFunction, f: CylindricalFunction,
                  name: str | None = None) -> CylindricalFunction:
    """tau o f for a scalar outer tau: contraction-type post-composition."""
    if tau.arity != 1:
        raise ValueError("post-composition needs a scalar outer function")
    g = f.outer
    composed = OuterFunction(
        name=f"{tau.name}*{g.name}",
        arity=g.arity,
        fn=lambda r, _t=tau, _g=g: _t.fn(np.array([_g.fn(r)])),
        grad=lambda r, _t=tau, _g=g: float(_t.grad(np.array([_g.fn(r)]))[0]) * np.asarray(_g.grad(r), dtype=float),
        grad_bounds=tuple(_tb * _gb for _tb in tau.grad_bounds for _gb in g.grad_bounds),
    )
    return CylindricalFunction(name=name or f"{tau.name}({f.name})", outer=composed, tests=f.tests)
