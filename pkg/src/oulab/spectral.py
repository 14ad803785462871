"""Per-mode spectral building blocks of the Gaussian / OU construction.

The model is a diagonal Ornstein-Uhlenbeck system: independent scalar modes
indexed by n = 1..M, the n-th one following

    dX = -alpha_n X dt + sqrt(2) dW,

with stationary law N(0, 1/alpha_n).  Everything here is a pure closed-form
function of the rates: exact transition sampling, the L2-orthonormal Hermite
eigenfunctions of the one-mode generator h'' - alpha x h', the L2 trace of
the one-mode heat kernel together with an elementary upper bound, and the
trace bound for the whole mode product (computed in log space with a
certified tail).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Spectrum",
    "make_spectrum",
    "ou_transition",
    "hermite_eigenfunction",
    "hermite_eigenfunction_deriv",
    "mode_trace_exact",
    "mode_trace_bound",
    "heat_kernel_sq_bound",
    "lowest_generator_eigenvalues",
]


@dataclass(frozen=True)
class Spectrum:
    """Nondecreasing positive rates with a certified reciprocal tail bound.

    ``alphas`` holds the first M rates; ``tail_sum_bound`` is an upper bound
    on sum_{n > M} 1/alpha_n (zero for explicit finite lists, where there is
    no tail).  Summable reciprocals are what make the mode product of
    stationary variances trace class.
    """

    family: str
    alphas: np.ndarray
    tail_sum_bound: float
    power_a: float | None = None
    power_s: float | None = None

    def __post_init__(self) -> None:
        alphas = np.asarray(self.alphas, dtype=float)
        if alphas.ndim != 1:
            raise ValueError("alphas must be a one-dimensional sequence")
        if alphas.size and not np.all(alphas > 0.0):
            raise ValueError("rates must be strictly positive")
        if alphas.size and np.any(np.diff(alphas) < 0.0):
            raise ValueError("rates must be nondecreasing")
        if not self.tail_sum_bound >= 0.0:
            raise ValueError("tail_sum_bound must be nonnegative")
        alphas = alphas.copy()
        alphas.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)

    @property
    def n_modes(self) -> int:
        return int(self.alphas.size)


def make_spectrum(family: str = "power", M: int | None = None, *,
                  a: float = 1.0, s: float = 2.0,
                  alphas=None) -> Spectrum:
    """Build a rate sequence.

    family="power": alpha_n = a * n**s for n = 1..M, requiring s > 1 so the
    reciprocal sum converges; the tail is bounded by the integral comparison
    sum_{n>M} 1/(a n^s) <= M**(1-s) / (a (s-1)).

    family="explicit": ``alphas`` is any finite positive list; it is sorted
    and the tail bound is zero.
    """
    if family == "power":
        if M is None or M < 1:
            raise ValueError("power family needs a truncation count M >= 1")
        if a <= 0.0:
            raise ValueError("power family needs a > 0")
        if s <= 1.0:
            raise ValueError("power family needs exponent s > 1 (reciprocal sum diverges otherwise)")
        n = np.arange(1, M + 1, dtype=float)
        tail = M ** (1.0 - s) / (a * (s - 1.0))
        return Spectrum(family="power", alphas=a * n ** s, tail_sum_bound=tail,
                        power_a=a, power_s=s)
    if family == "explicit":
        if alphas is None:
            raise ValueError("explicit family needs an alphas list")
        arr = np.sort(np.asarray(alphas, dtype=float))
        return Spectrum(family="explicit", alphas=arr, tail_sum_bound=0.0)
    raise ValueError(f"unknown spectrum family {family!r}")


def ou_transition(alpha: float, t: float, x0, z):
    """Exact one-step transition of dX = -alpha X dt + sqrt(2) dW.

    Returns exp(-alpha t) * x0 + sqrt((1 - exp(-2 alpha t)) / alpha) * z for
    a standard normal draw ``z``; exact in distribution for every t >= 0 and
    preserving the stationary law N(0, 1/alpha).  ``x0`` and ``z`` may be
    arrays of matching shape.
    """
    if alpha <= 0.0:
        raise ValueError("rate alpha must be positive")
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    decay = math.exp(-alpha * t)
    spread = math.sqrt(-math.expm1(-2.0 * alpha * t) / alpha)
    return decay * np.asarray(x0, dtype=float) + spread * np.asarray(z, dtype=float)


def hermite_eigenfunction(k: int, alpha: float, x):
    """k-th orthonormal eigenfunction of h'' - alpha x h' in L2(N(0, 1/alpha)).

    This is the probabilists' Hermite polynomial in sqrt(alpha) x divided by
    sqrt(k!); the eigenvalue of the negative generator is k * alpha.  The
    normalization is fixed so the family is orthonormal with positive leading
    coefficient.
    """
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if alpha <= 0.0:
        raise ValueError("rate alpha must be positive")
    y = math.sqrt(alpha) * np.asarray(x, dtype=float)
    h_prev = np.ones_like(y)
    if k == 0:
        return h_prev
    h = y
    for j in range(1, k):
        h, h_prev = y * h - j * h_prev, h
    return h / math.sqrt(math.factorial(k))


def hermite_eigenfunction_deriv(k: int, alpha: float, x):
    """Derivative of :func:`hermite_eigenfunction`: sqrt(alpha * k) times the
    (k-1)-th eigenfunction, zero for k = 0."""
    if k == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return math.sqrt(alpha * k) * hermite_eigenfunction(k - 1, alpha, x)


def mode_trace_exact(alpha: float, t: float) -> float:
    """Exact one-mode squared heat-kernel trace sum_{k>=0} exp(-2 k alpha t)."""
    if alpha <= 0.0:
        raise ValueError("rate alpha must be positive")
    if t <= 0.0:
        raise ValueError("trace diverges at t <= 0")
    return 1.0 / -math.expm1(-2.0 * alpha * t)


def mode_trace_bound(alpha: float, t: float) -> float:
    """Elementary upper bound 1 + 2 exp(-2 alpha t) / ((2 alpha t) ^ 1).

    Dominates :func:`mode_trace_exact` for every alpha, t > 0: the geometric
    series is at most 1 + exp(-2 alpha t) + integral_1^inf exp(-2 alpha t s) ds.
    """
    if alpha <= 0.0:
        raise ValueError("rate alpha must be positive")
    if t <= 0.0:
        raise ValueError("bound diverges at t <= 0")
    x = 2.0 * alpha * t
    return 1.0 + 2.0 * math.exp(-x) / min(x, 1.0)


def _next_rate(spectrum: Spectrum) -> float:
    if spectrum.family == "power":
        return spectrum.power_a * float(spectrum.n_modes + 1) ** spectrum.power_s
    return float(spectrum.alphas[-1]) if spectrum.n_modes else math.inf


def heat_kernel_sq_bound(spectrum: Spectrum, t: float) -> float:
    """Product of the per-mode trace bounds over the whole (infinite) spectrum.

    The first M factors are accumulated in log space with compensated
    summation; the remaining modes contribute at most tail_sum_bound / t to
    the log because log(1+x) <= x and each tail term is below 1/(alpha_n t).
    The certified tail constant requires 2 alpha_n t >= 1 for every tail
    mode; if the truncation is too short for that at this t, the call is
    rejected rather than returning an unsound number.
    """
    if t <= 0.0:
        raise ValueError("bound diverges at t <= 0")
    log_main = math.fsum(
        math.log1p(2.0 * math.exp(-2.0 * a * t) / min(2.0 * a * t, 1.0))
        for a in spectrum.alphas
    )
    log_tail = 0.0
    if spectrum.tail_sum_bound > 0.0:
        if 2.0 * _next_rate(spectrum) * t < 1.0:
            raise ValueError(
                "tail modes violate 2*alpha*t >= 1 at this t; "
                "increase the truncation count M"
            )
        log_tail = spectrum.tail_sum_bound / t
    return math.exp(log_main + log_tail)


def lowest_generator_eigenvalues(spectrum: Spectrum, count: int) -> np.ndarray:
    """Smallest ``count`` eigenvalues (with multiplicity) of the negative
    generator of the truncated mode product.

    The eigenvalues are all finite sums sum_n k_n * alpha_n over multi-indices
    k; they are enumerated in increasing order by a heap over canonical
    nondecreasing mode sequences.
    """
    if count < 1:
        raise ValueError("count must be positive")
    alphas = spectrum.alphas
    out: list[float] = []
    heap: list[tuple[float, int]] = [(0.0, 0)]
    while heap and len(out) < count:
        value, lo = heapq.heappop(heap)
        out.append(value)
        for m in range(lo, alphas.size):
            heapq.heappush(heap, (value + float(alphas[m]), m))
    return np.asarray(out)
