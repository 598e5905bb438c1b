"""Probability densities used as weighting functions of the weighted Chamfer distance.

Eight families are supported, each with a closed-form mode and an analytic first
derivative obtained from the logarithmic derivative of its density:

============== ======================= ===============================
kind           parameters              mode
============== ======================= ===============================
chi_squared    k                       max(k - 2, 0)
extreme_value  beta                    0
weibull        k, lambda               lambda ((k-1)/k)^(1/k) if k > 1
log_logistic   alpha, beta             alpha ((beta-1)/(beta+1))^(1/beta) if beta > 1
gamma          k_shape, theta_scale    (k_shape - 1) theta_scale if k_shape >= 1
logistic       sigma                   0
normal         sigma                   0
landau         (none)                  0
============== ======================= ===============================

The gamma family uses shape and scale (rate = 1/theta_scale). The log-logistic
density is the standard one, (beta/alpha)(x/alpha)^(beta-1) / (1 + (x/alpha)^beta)^2.
"""

import difflib
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Protocol, Union

import numpy as np

from .exceptions import UnknownWeightingError, WeightDomainError
from .records import format_number
from .special import gammaln

ArrayLike = Union[float, np.ndarray]

WEIGHT_KINDS: tuple[str, ...] = (
    "chi_squared",
    "extreme_value",
    "weibull",
    "log_logistic",
    "gamma",
    "logistic",
    "normal",
    "landau",
)

PARAM_NAMES: dict[str, tuple[str, ...]] = {
    "chi_squared": ("k",),
    "extreme_value": ("beta",),
    "weibull": ("k", "lambda"),
    "log_logistic": ("alpha", "beta"),
    "gamma": ("k_shape", "theta_scale"),
    "logistic": ("sigma",),
    "normal": ("sigma",),
    "landau": (),
}

PARAM_ALIASES: dict[str, dict[str, str]] = {
    "extreme_value": {"sigma": "beta"},
    "weibull": {"lam": "lambda", "lambda_": "lambda"},
    "gamma": {"k": "k_shape", "theta": "theta_scale", "shape": "k_shape", "scale": "theta_scale"},
}

# Parameter points used for the experiments with each family.
EXPERIMENT_PARAMS: dict[str, dict[str, float]] = {
    "chi_squared": {"k": 3.0},
    "extreme_value": {"beta": 1.4},
    "weibull": {"k": 2.0, "lambda": 5.0},
    "log_logistic": {"alpha": 5.0, "beta": 2.0},
    "gamma": {"k_shape": 2.0, "theta_scale": 2.5},
    "logistic": {"sigma": 1.0},
    "normal": {"sigma": 1.4},
    "landau": {},
}

POSITIVE_SUPPORT = frozenset({"chi_squared", "weibull", "log_logistic", "gamma"})

_SQRT_TWO_PI = np.sqrt(2.0 * np.pi)


def suggest_kinds(name: str, max_suggestions: int = 3) -> list[str]:
    """Suggest weighting kinds close to a misspelled name."""
    return difflib.get_close_matches(name, WEIGHT_KINDS, n=max_suggestions, cutoff=0.5)


def _unknown_kind(kind: str) -> UnknownWeightingError:
    message = f"Unknown weighting function '{kind}'. Valid kinds: {', '.join(WEIGHT_KINDS)}"
    suggestions = suggest_kinds(kind)
    if suggestions:
        message += f". Did you mean: {', '.join(suggestions)}?"
    return UnknownWeightingError(message)


def validate_kind(kind: str) -> str:
    """Return ``kind`` if it names a weighting family.

    Raises:
        UnknownWeightingError: Listing the valid kinds and close matches.
    """
    if kind not in PARAM_NAMES:
        raise _unknown_kind(kind)
    return kind


def canonical_params(kind: str, params: Optional[Mapping[str, float]]) -> dict[str, float]:
    """Resolve aliases, check names and positivity, and order parameters canonically.

    Args:
        kind: Weighting kind.
        params: Parameter values keyed by name or alias; None selects the
            experiment parameter point of the kind.

    Returns:
        Parameters keyed by canonical name, in canonical order.

    Raises:
        UnknownWeightingError: If ``kind`` is not a known kind.
        WeightDomainError: On unknown, missing or non-positive parameters.
    """
    if kind not in PARAM_NAMES:
        raise _unknown_kind(kind)
    if params is None:
        return dict(EXPERIMENT_PARAMS[kind])

    aliases = PARAM_ALIASES.get(kind, {})
    resolved: dict[str, float] = {}
    for name, value in params.items():
        canonical = aliases.get(name, name)
        if canonical not in PARAM_NAMES[kind]:
            valid = ", ".join(PARAM_NAMES[kind]) or "none"
            raise WeightDomainError(f"'{name}' is not a parameter of {kind} (parameters: {valid})")
        if canonical in resolved:
            raise WeightDomainError(f"parameter '{canonical}' of {kind} given twice")
        value = float(value)
        if not (np.isfinite(value) and value > 0):
            raise WeightDomainError(f"parameter '{canonical}' of {kind} must be > 0, got {value}")
        resolved[canonical] = value

    missing = [name for name in PARAM_NAMES[kind] if name not in resolved]
    if missing:
        raise WeightDomainError(f"{kind} is missing parameter(s): {', '.join(missing)}")
    return {name: resolved[name] for name in PARAM_NAMES[kind]}


class Weighting(Protocol):
    """Anything usable as the weighting function f of a weighted Chamfer distance."""

    def pdf(self, x: ArrayLike) -> ArrayLike: ...

    def pdf_prime(self, x: ArrayLike) -> ArrayLike: ...

    def mode(self) -> float: ...


def _at_zero(power: float, value_when_flat: float) -> float:
    """Continuous limit at x = 0 of c * x**power * g(x), or 0 if it is unbounded."""
    if power > 0 or power < 0:
        return 0.0
    return value_when_flat


@dataclass(frozen=True)
class WeightingFunction:
    """One of the eight density families with concrete parameters.

    Attributes:
        kind: Family name, one of WEIGHT_KINDS
        params: Parameter values keyed by canonical name
    """
    kind: str
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", canonical_params(self.kind, self.params))

    @classmethod
    def create(cls, kind: str, **params: float) -> "WeightingFunction":
        """Build a weighting function; with no parameters, use the experiment point."""
        return cls(kind, params if params or kind == "landau" else None)

    def __hash__(self) -> int:
        return hash((self.kind, tuple(self.params.items())))

    def label(self) -> str:
        """Spec string such as ``gamma:k_shape=2,theta_scale=2.5``."""
        if not self.params:
            return self.kind
        body = ",".join(f"{name}={format_number(value)}" for name, value in self.params.items())
        return f"{self.kind}:{body}"

    def pdf(self, x: ArrayLike) -> ArrayLike:
        """Density at ``x``; 0 outside the support or where the limit is unbounded."""
        arr = np.asarray(x, dtype=np.float64)
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            out = _PDF[self.kind](arr, self.params)
        out = np.where(np.isfinite(out), out, 0.0)
        return float(out) if out.ndim == 0 else out

    def pdf_prime(self, x: ArrayLike) -> ArrayLike:
        """Analytic derivative of the density at ``x`` (strictly inside the support).

        Raises:
            WeightDomainError: If some ``x`` is on or outside the support boundary.
        """
        arr = np.asarray(x, dtype=np.float64)
        if self.kind in POSITIVE_SUPPORT and np.any(arr <= 0):
            raise WeightDomainError(
                f"derivative of {self.kind} is only defined for x > 0"
            )
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            density = np.asarray(self.pdf(arr))
            out = density * _LOG_DERIVATIVE[self.kind](arr, self.params)
        # exp underflow makes density 0 where the log-derivative may be large
        out = np.where(density == 0.0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def mode(self) -> float:
        """Closed-form mode of the density."""
        return _MODE[self.kind](self.params)


# Densities --------------------------------------------------------------------

def _chi_squared_pdf(x, p):
    k = p["k"]
    half = k / 2.0
    log_norm = -half * np.log(2.0) - gammaln(half)
    safe = np.where(x > 0, x, 1.0)
    inside = np.exp(log_norm + (half - 1.0) * np.log(safe) - safe / 2.0)
    zero = _at_zero(half - 1.0, float(np.exp(log_norm)))
    return np.where(x > 0, inside, np.where(x == 0, zero, 0.0))


def _extreme_value_pdf(x, p):
    beta = p["beta"]
    z = x / beta
    return np.exp(-(z + np.exp(-z))) / beta


def _weibull_pdf(x, p):
    k, lam = p["k"], p["lambda"]
    safe = np.where(x > 0, x, 1.0)
    ratio = safe / lam
    inside = (k / lam) * ratio ** (k - 1.0) * np.exp(-(ratio ** k))
    zero = _at_zero(k - 1.0, 1.0 / lam)
    return np.where(x > 0, inside, np.where(x == 0, zero, 0.0))


def _log_logistic_pdf(x, p):
    alpha, beta = p["alpha"], p["beta"]
    safe = np.where(x > 0, x, 1.0)
    ratio = safe / alpha
    inside = (beta / alpha) * ratio ** (beta - 1.0) / (1.0 + ratio ** beta) ** 2
    zero = _at_zero(beta - 1.0, 1.0 / alpha)
    return np.where(x > 0, inside, np.where(x == 0, zero, 0.0))


def _gamma_pdf(x, p):
    k, theta = p["k_shape"], p["theta_scale"]
    log_norm = -gammaln(k) - k * np.log(theta)
    safe = np.where(x > 0, x, 1.0)
    inside = np.exp(log_norm + (k - 1.0) * np.log(safe) - safe / theta)
    zero = _at_zero(k - 1.0, 1.0 / theta)
    return np.where(x > 0, inside, np.where(x == 0, zero, 0.0))


def _logistic_pdf(x, p):
    sigma = p["sigma"]
    # Symmetric in x; |x| keeps exp from overflowing.
    e = np.exp(-np.abs(x) / sigma)
    return e / (sigma * (1.0 + e) ** 2)


def _normal_pdf(x, p):
    sigma = p["sigma"]
    return np.exp(-(x * x) / (2.0 * sigma * sigma)) / (sigma * _SQRT_TWO_PI)


def _landau_pdf(x, p):
    return np.exp(-(x + np.exp(-x)) / 2.0) / _SQRT_TWO_PI


_PDF = {
    "chi_squared": _chi_squared_pdf,
    "extreme_value": _extreme_value_pdf,
    "weibull": _weibull_pdf,
    "log_logistic": _log_logistic_pdf,
    "gamma": _gamma_pdf,
    "logistic": _logistic_pdf,
    "normal": _normal_pdf,
    "landau": _landau_pdf,
}


# d/dx log f -------------------------------------------------------------------

def _log_logistic_dlog(x, p):
    alpha, beta = p["alpha"], p["beta"]
    u = (x / alpha) ** beta
    return (beta - 1.0) / x - 2.0 * beta * u / (x * (1.0 + u))


_LOG_DERIVATIVE = {
    "chi_squared": lambda x, p: (p["k"] / 2.0 - 1.0) / x - 0.5,
    "extreme_value": lambda x, p: (np.exp(-x / p["beta"]) - 1.0) / p["beta"],
    "weibull": lambda x, p: (p["k"] - 1.0) / x - (p["k"] / p["lambda"]) * (x / p["lambda"]) ** (p["k"] - 1.0),
    "log_logistic": _log_logistic_dlog,
    "gamma": lambda x, p: (p["k_shape"] - 1.0) / x - 1.0 / p["theta_scale"],
    "logistic": lambda x, p: -np.tanh(x / (2.0 * p["sigma"])) / p["sigma"],
    "normal": lambda x, p: -x / (p["sigma"] * p["sigma"]),
    "landau": lambda x, p: -(1.0 - np.exp(-x)) / 2.0,
}


# Modes ------------------------------------------------------------------------

def _weibull_mode(p):
    k, lam = p["k"], p["lambda"]
    return lam * ((k - 1.0) / k) ** (1.0 / k) if k > 1 else 0.0


def _log_logistic_mode(p):
    alpha, beta = p["alpha"], p["beta"]
    return alpha * ((beta - 1.0) / (beta + 1.0)) ** (1.0 / beta) if beta > 1 else 0.0


def _gamma_mode(p):
    k, theta = p["k_shape"], p["theta_scale"]
    return (k - 1.0) * theta if k >= 1 else 0.0


_MODE = {
    "chi_squared": lambda p: max(p["k"] - 2.0, 0.0),
    "extreme_value": lambda p: 0.0,
    "weibull": _weibull_mode,
    "log_logistic": _log_logistic_mode,
    "gamma": _gamma_mode,
    "logistic": lambda p: 0.0,
    "normal": lambda p: 0.0,
    "landau": lambda p: 0.0,
}


def pdf(f: Weighting, x: ArrayLike) -> ArrayLike:
    """Evaluate the density of ``f`` at ``x``."""
    return f.pdf(x)


def pdf_prime(f: Weighting, x: ArrayLike) -> ArrayLike:
    """Evaluate the analytic derivative of the density of ``f`` at ``x``."""
    return f.pdf_prime(x)


def mode(f: Weighting) -> float:
    """Closed-form mode of ``f``."""
    return f.mode()


# Parameter grids --------------------------------------------------------------

def _steps(start: float, stop: float, step: float) -> tuple[float, ...]:
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


@dataclass(frozen=True)
class ParamGrid:
    """Finite candidate values per parameter of one weighting kind.

    Attributes:
        kind: Weighting kind
        values: Candidate values keyed by canonical parameter name, ascending and
            without duplicates
    """
    kind: str
    values: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PARAM_NAMES:
            raise _unknown_kind(self.kind)
        names = PARAM_NAMES[self.kind]
        aliases = PARAM_ALIASES.get(self.kind, {})
        values = {aliases.get(k, k): tuple(sorted({float(v) for v in vs})) for k, vs in self.values.items()}
        if set(values) != set(names):
            raise WeightDomainError(
                f"grid for {self.kind} must list exactly: {', '.join(names) or 'no parameters'}"
            )
        for name, candidates in values.items():
            if not candidates:
                raise WeightDomainError(f"grid for {self.kind} has no values for '{name}'")
            if not all(np.isfinite(v) and v > 0 for v in candidates):
                raise WeightDomainError(f"grid values for '{name}' must be finite and > 0")
        object.__setattr__(self, "values", {name: values[name] for name in names})

    def __hash__(self) -> int:
        return hash((self.kind, tuple(self.values.items())))

    def __len__(self) -> int:
        return int(np.prod([len(v) for v in self.values.values()], dtype=np.int64))

    def points(self) -> Iterator[dict[str, float]]:
        """Parameter points in lexicographic grid order."""
        names = list(self.values)
        for combo in itertools.product(*self.values.values()):
            yield dict(zip(names, combo))

    def __contains__(self, params: Mapping[str, float]) -> bool:
        resolved = canonical_params(self.kind, params)
        return all(resolved[name] in self.values[name] for name in self.values)


_DEFAULT_GRIDS: dict[str, dict[str, tuple[float, ...]]] = {
    "chi_squared": {"k": _steps(0.5, 10.0, 0.5)},
    "extreme_value": {"beta": _steps(0.2, 5.0, 0.2)},
    "weibull": {"k": _steps(1.0, 5.0, 0.5), "lambda": _steps(0.5, 10.0, 0.5)},
    "log_logistic": {"alpha": _steps(1.0, 10.0, 1.0), "beta": _steps(1.0, 5.0, 0.5)},
    "gamma": {"k_shape": _steps(1.0, 5.0, 0.5), "theta_scale": _steps(0.5, 5.0, 0.5)},
    "logistic": {"sigma": _steps(0.2, 5.0, 0.2)},
    "normal": {"sigma": _steps(0.2, 5.0, 0.2)},
    "landau": {},
}


def default_grid(kind: str) -> ParamGrid:
    """Default search grid of a weighting kind (contains its experiment point)."""
    if kind not in _DEFAULT_GRIDS:
        raise _unknown_kind(kind)
    return ParamGrid(kind, _DEFAULT_GRIDS[kind])
