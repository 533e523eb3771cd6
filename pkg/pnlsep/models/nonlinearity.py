"""
Strictly monotone scalar functions used for the sensor distortions f_i and the
trainable compensators g_i.

Every family evaluates element-wise on scalars or arrays. Parameter gradients
are returned with the parameter axis first: shape ``(n_params,) + z.shape``.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import ClassVar, Tuple

import numpy as np

from pnlsep.exceptions import DomainError, RangeError, RejectedInputError


DEFAULT_DOMAIN: Tuple[float, float] = (-1e6, 1e6)
DEFAULT_INVERSE_TOL = 1e-10
MAX_INVERSE_ITERATIONS = 200

# Smallest segment slope a monotone_pwl accepts, and the floor projection clamps to.
PWL_MIN_SLOPE = 1e-9
PROJECTION_MIN_SLOPE = 1e-6
MIN_TANH_GAIN = 1e-6
# tanh(18) is still below 1.0 in double precision; beyond it tanh rounds to exactly 1.0
TANH_SATURATION = 18.0


def _check_domain_bounds(domain) -> Tuple[float, float]:
    lo, hi = (float(bound) for bound in domain)
    if not lo < hi:
        raise RejectedInputError(f"domain must be a non-empty interval, got [{lo}, {hi}]")
    return lo, hi


class Nonlinearity(ABC):
    """Base class for component-wise strictly increasing functions."""

    family: ClassVar[str]
    domain: Tuple[float, float]

    # Public operations validate their input, the underscored hooks compute.

    def eval(self, z):
        return self._eval(self._in_domain(z))

    def deriv(self, z):
        return self._deriv(self._in_domain(z))

    def param_grad(self, z) -> np.ndarray:
        return self._param_grad(self._in_domain(z))

    def deriv_param_grad(self, z) -> np.ndarray:
        return self._deriv_param_grad(self._in_domain(z))

    def inverse(self, x, tol: float = DEFAULT_INVERSE_TOL):
        """
        Solve eval(z) = x for z.

        Args:
            x: Value(s) inside the image of the domain
            tol: Absolute tolerance on |eval(z) - x|

        Returns:
            z with |eval(z) - x| <= tol (or a bracket collapsed to machine precision)

        Raises:
            RangeError: If x lies outside the image of the domain
        """
        if not tol > 0:
            raise RejectedInputError(f"inverse tolerance must be positive, got {tol}")
        x = np.asarray(x, dtype=np.float64)
        lo, hi = self.image
        if np.any(~np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
            raise RangeError(f"{self.family}: value outside the image [{lo:.6g}, {hi:.6g}]")
        return self._inverse(x, tol)

    @property
    def image(self) -> Tuple[float, float]:
        lo, hi = self.domain
        return float(self._eval(np.float64(lo))), float(self._eval(np.float64(hi)))

    @property
    def n_params(self) -> int:
        return len(self.params)

    @property
    @abstractmethod
    def params(self) -> np.ndarray:
        """Trainable parameter vector (empty for parameter-free families)."""

    @abstractmethod
    def with_params(self, theta) -> "Nonlinearity":
        """Return a copy carrying ``theta`` projected onto the feasible set."""

    @abstractmethod
    def _eval(self, z: np.ndarray):
        ...

    @abstractmethod
    def _deriv(self, z: np.ndarray):
        ...

    def _param_grad(self, z: np.ndarray) -> np.ndarray:
        return np.empty((0,) + np.shape(z))

    def _deriv_param_grad(self, z: np.ndarray) -> np.ndarray:
        return np.empty((0,) + np.shape(z))

    def _in_domain(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        lo, hi = self.domain
        if np.any(~np.isfinite(z)) or np.any(z < lo) or np.any(z > hi):
            raise DomainError(f"{self.family}: input outside the domain [{lo:.6g}, {hi:.6g}]")
        return z

    def _inverse(self, x: np.ndarray, tol: float) -> np.ndarray:
        # Bracketing bisection refined by Newton steps; strict monotonicity
        # keeps the root inside [lo, hi] throughout.
        lo = np.full(x.shape, self.domain[0])
        hi = np.full(x.shape, self.domain[1])
        z = np.clip(x, lo, hi)
        for _ in range(MAX_INVERSE_ITERATIONS):
            residual = self._eval(z) - x
            done = np.abs(residual) <= tol
            if np.all(done):
                return z
            below = residual < 0
            lo = np.where(below & ~done, z, lo)
            hi = np.where(~below & ~done, z, hi)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                newton = z - residual / self._deriv(z)
            inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
            candidate = np.where(inside, newton, 0.5 * (lo + hi))
            z = np.where(done, z, candidate)
            if np.all(done | (hi - lo <= 4 * np.finfo(np.float64).eps * np.maximum(1.0, np.abs(z)))):
                return z
        raise RangeError(f"{self.family}: inverse did not converge within {MAX_INVERSE_ITERATIONS} iterations")


@dataclass(frozen=True, eq=False)
class Identity(Nonlinearity):
    """f(z) = z."""

    domain: Tuple[float, float] = DEFAULT_DOMAIN
    family: ClassVar[str] = "identity"

    def __post_init__(self):
        object.__setattr__(self, "domain", _check_domain_bounds(self.domain))

    @property
    def params(self) -> np.ndarray:
        return np.empty(0)

    def with_params(self, theta) -> "Identity":
        return self

    def _eval(self, z):
        return z * 1.0

    def _deriv(self, z):
        return np.ones_like(z)

    def _inverse(self, x, tol):
        return x * 1.0


@dataclass(frozen=True, eq=False)
class ScaledTanh(Nonlinearity):
    """
    f(z) = tanh(a z), a > 0.

    The domain is clipped to |a z| <= 18 so eval stays below 1.0 in magnitude
    and every value of the image has a finite inverse.
    """

    a: float = 1.0
    domain: Tuple[float, float] = DEFAULT_DOMAIN
    family: ClassVar[str] = "scaled_tanh"

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise RejectedInputError(f"scaled_tanh gain must be positive, got {self.a}")
        object.__setattr__(self, "a", float(self.a))
        lo, hi = _check_domain_bounds(self.domain)
        limit = TANH_SATURATION / self.a
        object.__setattr__(self, "domain", _check_domain_bounds((max(lo, -limit), min(hi, limit))))

    @property
    def params(self) -> np.ndarray:
        return np.array([self.a])

    def with_params(self, theta) -> "ScaledTanh":
        return ScaledTanh(a=max(float(theta[0]), MIN_TANH_GAIN), domain=self.domain)

    def _eval(self, z):
        return np.tanh(self.a * z)

    def _deriv(self, z):
        return self.a / np.cosh(self.a * z) ** 2

    def _param_grad(self, z):
        return np.stack([z / np.cosh(self.a * z) ** 2])

    def _deriv_param_grad(self, z):
        sech2 = 1.0 / np.cosh(self.a * z) ** 2
        return np.stack([sech2 - 2.0 * self.a * z * sech2 * np.tanh(self.a * z)])

    def _inverse(self, x, tol):
        if np.any(np.abs(x) >= 1.0):
            raise RangeError("scaled_tanh: saturated value has no finite inverse")
        return np.arctanh(x) / self.a


@dataclass(frozen=True, eq=False)
class Cubic(Nonlinearity):
    """f(z) = z + c z^3, c >= 0."""

    c: float = 0.0
    domain: Tuple[float, float] = DEFAULT_DOMAIN
    family: ClassVar[str] = "cubic"

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c >= 0):
            raise RejectedInputError(f"cubic coefficient must be non-negative, got {self.c}")
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "domain", _check_domain_bounds(self.domain))

    @property
    def params(self) -> np.ndarray:
        return np.array([self.c])

    def with_params(self, theta) -> "Cubic":
        return Cubic(c=max(float(theta[0]), 0.0), domain=self.domain)

    def _eval(self, z):
        return z + self.c * z ** 3

    def _deriv(self, z):
        return 1.0 + 3.0 * self.c * z ** 2

    def _param_grad(self, z):
        return np.stack([z ** 3])

    def _deriv_param_grad(self, z):
        return np.stack([3.0 * z ** 2])


@dataclass(frozen=True, eq=False)
class MonotonePWL(Nonlinearity):
    """
    Strictly increasing piecewise-linear function through (knots[k], values[k]).

    Linear extrapolation past the end knots uses the end-segment slopes. The
    derivative is the active segment slope, right-continuous at the knots.
    Trainable parameters are the knot values; knot positions stay fixed.
    """

    knots: np.ndarray = field(default_factory=lambda: np.array([-1.0, 1.0]))
    values: np.ndarray = field(default_factory=lambda: np.array([-1.0, 1.0]))
    domain: Tuple[float, float] = DEFAULT_DOMAIN
    family: ClassVar[str] = "monotone_pwl"

    def __post_init__(self):
        knots = np.array(self.knots, dtype=np.float64)
        values = np.array(self.values, dtype=np.float64)
        if knots.ndim != 1 or values.shape != knots.shape or knots.size < 2:
            raise RejectedInputError("monotone_pwl needs matching 1-D knots and values with at least two entries")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise RejectedInputError("monotone_pwl knots and values must be finite")
        if np.any(np.diff(knots) <= 0):
            raise RejectedInputError("monotone_pwl knots must be strictly increasing")
        slopes = np.diff(values) / np.diff(knots)
        if np.any(slopes <= PWL_MIN_SLOPE):
            raise RejectedInputError(
                f"monotone_pwl values must be strictly increasing (every slope > {PWL_MIN_SLOPE:g})"
            )
        knots.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domain", _check_domain_bounds(self.domain))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    @property
    def params(self) -> np.ndarray:
        return self.values.copy()

    def with_params(self, theta, min_slope: float = PROJECTION_MIN_SLOPE) -> "MonotonePWL":
        return MonotonePWL(knots=self.knots, values=project_increasing(self.knots, theta, min_slope), domain=self.domain)

    def affine(self, scale: float, shift: float) -> "MonotonePWL":
        """Return scale * f + shift (scale > 0)."""
        if not scale > 0:
            raise RejectedInputError(f"affine scale must be positive, got {scale}")
        return MonotonePWL(knots=self.knots, values=self.values * scale + shift, domain=self.domain)

    def _segments(self, z):
        index = np.searchsorted(self.knots, z, side="right") - 1
        return np.clip(index, 0, self.knots.size - 2)

    def _eval(self, z):
        i = self._segments(z)
        return self.values[i] + self.slopes[i] * (z - self.knots[i])

    def _deriv(self, z):
        return self.slopes[self._segments(z)]

    def _param_grad(self, z):
        i = self._segments(z)
        width = self.knots[i + 1] - self.knots[i]
        w = (z - self.knots[i]) / width
        grad = np.zeros((self.knots.size,) + np.shape(z))
        _scatter(grad, i, 1.0 - w)
        _scatter(grad, i + 1, w)
        return grad

    def _deriv_param_grad(self, z):
        i = self._segments(z)
        inv_width = 1.0 / (self.knots[i + 1] - self.knots[i])
        grad = np.zeros((self.knots.size,) + np.shape(z))
        _scatter(grad, i, -inv_width)
        _scatter(grad, i + 1, inv_width)
        return grad

    def _inverse(self, x, tol):
        i = np.clip(np.searchsorted(self.values, x, side="right") - 1, 0, self.values.size - 2)
        z = self.knots[i] + (x - self.values[i]) / self.slopes[i]
        return np.clip(z, *self.domain)


@dataclass(frozen=True, eq=False)
class InverseOf(Nonlinearity):
    """Exact inverse of another family; has no trainable parameters."""

    base: Nonlinearity = field(default_factory=Identity)
    tol: float = DEFAULT_INVERSE_TOL
    family: ClassVar[str] = "inverse_of"

    @property
    def domain(self) -> Tuple[float, float]:
        return self.base.image

    @property
    def image(self) -> Tuple[float, float]:
        return self.base.domain

    @property
    def params(self) -> np.ndarray:
        return np.empty(0)

    def with_params(self, theta) -> "InverseOf":
        return self

    def _eval(self, x):
        return self.base.inverse(x, self.tol)

    def _deriv(self, x):
        return 1.0 / self.base.deriv(self.base.inverse(x, self.tol))

    def _inverse(self, z, tol):
        return self.base.eval(z)


def project_increasing(knots, values, min_slope: float = PROJECTION_MIN_SLOPE) -> np.ndarray:
    """
    Clamp every segment slope of (knots, values) to at least ``min_slope``.

    The first value is kept; later values are rebuilt from clamped increments.
    """
    knots = np.asarray(knots, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    widths = np.diff(knots)
    increments = np.maximum(np.diff(values), min_slope * widths)
    return np.concatenate([values[:1], values[0] + np.cumsum(increments)])


def _scatter(grad: np.ndarray, index, weights):
    # grad[index[t], t] = weights[t] for every sample position t
    if grad.ndim == 1:
        grad[index] += weights
        return
    flat = grad.reshape(grad.shape[0], -1)
    positions = np.arange(flat.shape[1])
    np.add.at(flat, (np.ravel(index), positions), np.ravel(np.broadcast_to(weights, np.shape(index))))
