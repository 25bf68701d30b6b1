"""Rate functions, initial/terminal data and the problem specification.

A problem is ``du/dt = A u - U u / hbar`` (with ``hbar = 1`` when the model is
unscaled) and data ``g``. Final-value problems are stated with
``direction="backward"`` and solved in elapsed time ``horizon - t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import AdmissibilityWarning, ConfigError
from .levy_core import LevyModel

__all__ = ["RateFunction", "BoundaryData", "ProblemSpec"]

_RATE_FAMILIES = ("quadratic", "quadratic_minus_linear", "polynomial", "half_power")
_DATA_FAMILIES = ("scaled_gaussian", "constant_exp", "one", "schwartz")


@dataclass(frozen=True)
class RateFunction:
    """The rate ``U(p)``; every family except ``half_power`` is a polynomial.

    ``coeffs`` are ascending polynomial coefficients.
    """

    family: str
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in _RATE_FAMILIES:
            raise ConfigError(f"rate.family must be one of {_RATE_FAMILIES}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.family != "half_power" and not self.coeffs:
            raise ConfigError("rate.coeffs must not be empty")

    @classmethod
    def quadratic(cls, c: float = 0.5) -> "RateFunction":
        return cls("quadratic", (0.0, 0.0, c))

    @classmethod
    def quadratic_minus_linear(cls, shift: float = 0.0) -> "RateFunction":
        return cls("quadratic_minus_linear", (shift, -1.0, 1.0))

    @classmethod
    def polynomial(cls, coeffs) -> "RateFunction":
        return cls("polynomial", tuple(coeffs))

    @classmethod
    def half_power(cls) -> "RateFunction":
        return cls("half_power")

    @property
    def is_polynomial(self) -> bool:
        return self.family != "half_power"

    @property
    def degree(self) -> int:
        c = np.trim_zeros(np.asarray(self.coeffs), "b")
        return max(len(c) - 1, 0)

    def __call__(self, p):
        if self.family == "half_power":
            return np.sqrt(np.abs(p))
        return P.polyval(p, self.coeffs)

    def derivative(self, p, n: int = 1):
        if self.family == "half_power":
            raise ConfigError("half_power rate has no derivatives at 0; not usable here")
        return P.polyval(p, P.polyder(self.coeffs, n)) if n <= len(self.coeffs) else np.zeros_like(p)

    def deriv_coeffs(self, n: int = 1) -> np.ndarray:
        if not self.is_polynomial:
            raise ConfigError("half_power rate has no polynomial derivatives")
        d = P.polyder(np.asarray(self.coeffs), n) if n else np.asarray(self.coeffs)
        return np.atleast_1d(np.asarray(d, dtype=float))

    def bounded_below(self) -> bool:
        if self.family == "half_power":
            return True
        c = np.trim_zeros(np.asarray(self.coeffs), "b")
        if len(c) <= 1:
            return True
        return (len(c) - 1) % 2 == 0 and c[-1] > 0

    def satisfies_growth(self, a_min: float = 1.0, window: float = 50.0, n: int = 2001) -> bool:
        """Numerical check of ``U(p) >= c |p|^a`` for ``|p| > C`` on a bounded window.

        Fits the tail exponent on ``C <= |p| <= window`` with ``C = window / 5``.
        """
        p = np.linspace(window / 5, window, n)
        both = np.concatenate([p, -p])
        u = self(both)
        if np.any(u <= 0):
            return False
        a = np.polyfit(np.log(np.abs(both)), np.log(u), 1)[0]
        return a >= a_min - 1e-6

    def to_dict(self) -> dict:
        return {"family": self.family, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class BoundaryData:
    """Data ``g``, always stored through ``log g`` so tiny values stay representable.

    * ``scaled_gaussian``: ``exp(-c p^2 / hbar)``, times ``(2 pi hbar)^{-1/2}`` if normalized
    * ``constant_exp``: ``exp(-1 / hbar)``
    * ``one``: ``1``
    * ``schwartz``: ``sum_i w_i exp(-(p - m_i)^2 / (2 s_i^2))`` with ``w_i > 0``
    """

    family: str
    c: float = 0.5
    normalized: bool = False
    components: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if self.family not in _DATA_FAMILIES:
            raise ConfigError(f"data.family must be one of {_DATA_FAMILIES}")
        if self.family == "scaled_gaussian" and not self.c > 0:
            raise ConfigError("data.c must be > 0")
        if self.family == "schwartz":
            comps = tuple((float(w), float(m), float(s)) for w, m, s in self.components)
            if not comps or any(w <= 0 or s <= 0 for w, _, s in comps):
                raise ConfigError("data.components need positive weights and widths")
            object.__setattr__(self, "components", comps)

    @classmethod
    def scaled_gaussian(cls, c: float = 0.5, normalized: bool = False) -> "BoundaryData":
        return cls("scaled_gaussian", c=c, normalized=normalized)

    @classmethod
    def constant_exp(cls) -> "BoundaryData":
        return cls("constant_exp")

    @classmethod
    def one(cls) -> "BoundaryData":
        return cls("one")

    @classmethod
    def schwartz(cls, components) -> "BoundaryData":
        return cls("schwartz", components=tuple(components))

    @classmethod
    def gaussian(cls, width: float = 1.0, center: float = 0.0) -> "BoundaryData":
        return cls.schwartz([(1.0, center, width)])

    @property
    def decays(self) -> bool:
        return self.family in ("scaled_gaussian", "schwartz")

    def log_value(self, p, hbar: float = 1.0):
        p = np.asarray(p, dtype=float)
        if self.family == "scaled_gaussian":
            out = -self.c * p * p / hbar
            if self.normalized:
                out = out - 0.5 * math.log(2 * math.pi * hbar)
            return out
        if self.family == "constant_exp":
            return np.full_like(p, -1.0 / hbar)
        if self.family == "one":
            return np.zeros_like(p)
        terms = np.stack([math.log(w) - (p - m) ** 2 / (2 * s * s) for w, m, s in self.components])
        top = terms.max(axis=0)
        return top + np.log(np.exp(terms - top).sum(axis=0))

    def value(self, p, hbar: float = 1.0):
        return np.exp(self.log_value(p, hbar))

    def boundary(self) -> tuple[str, float]:
        """Boundary term of the variational problem: (kind, coefficient).

        ``("square", c)`` stands for ``c |phi(T) + p|^2``, ``("constant", 1)``
        for the additive constant of ``exp(-1/hbar)`` data, ``("none", 0)``.
        """
        if self.family == "scaled_gaussian":
            return "square", self.c
        if self.family == "constant_exp":
            return "constant", 1.0
        if self.family == "one":
            return "none", 0.0
        raise ConfigError("schwartz data has no semiclassical boundary term")

    def to_dict(self) -> dict:
        out = {"family": self.family}
        if self.family == "scaled_gaussian":
            out.update(c=self.c, normalized=self.normalized)
        if self.family == "schwartz":
            out["components"] = [list(c) for c in self.components]
        return out


@dataclass(frozen=True)
class ProblemSpec:
    model: LevyModel
    rate: RateFunction
    data: BoundaryData
    horizon: float = 1.0
    direction: str = "forward"

    def __post_init__(self):
        if not self.horizon > 0:
            raise ConfigError("problem.horizon must be > 0")
        if self.direction not in ("forward", "backward"):
            raise ConfigError("problem.direction must be 'forward' or 'backward'")
        if not self.rate.bounded_below():
            raise ConfigError("rate is unbounded below; the Feynman-Kac weight would overflow")
        if self.rate.family == "half_power" and not self.model.is_subordinator:
            raise ConfigError("half_power rate is admissible only with a subordinator model")

    @property
    def hbar(self) -> float:
        return self.model.scale

    def elapsed(self, t: float | None = None) -> float:
        """Elapsed time of the internal initial-value problem at physical time ``t``."""
        if t is None:
            return self.horizon
        if not -1e-12 <= t <= self.horizon + 1e-12:
            raise ValueError(f"t must lie in [0, {self.horizon}]")
        return float(t) if self.direction == "forward" else float(self.horizon - t)

    def with_model(self, model: LevyModel) -> "ProblemSpec":
        return ProblemSpec(model, self.rate, self.data, self.horizon, self.direction)

    def with_horizon(self, horizon: float) -> "ProblemSpec":
        return ProblemSpec(self.model, self.rate, self.data, horizon, self.direction)

    def check_admissible(self) -> bool:
        """Warn when no Feynman-Kac theorem covers this (model, rate) pair."""
        m = self.model
        pure_jump = m.sigma2 == 0 and m.b == 0 and m.jumps is not None and m.jumps.symmetric
        if pure_jump:
            return True
        ok = self.rate.satisfies_growth(a_min=1e-3 if m.is_subordinator else 1.0)
        if not ok:
            warnings.warn(
                "rate does not satisfy U(p) >= c|p|^a on the test window", AdmissibilityWarning, stacklevel=3
            )
        return ok
