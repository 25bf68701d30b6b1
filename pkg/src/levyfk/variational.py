"""Hamiltonians, Legendre transforms, actions and Euler-Lagrange extremals.

For a Lévy triplet ``(b, sigma2, nu)`` the Hamiltonian is

    H0(x) = b x + sigma2 x^2 / 2 + int (e^{x k} - 1) nu(dk)

and ``L0 = H0*`` its Legendre transform. Extremals of

    S(phi) = int L0(phi') ds + int U(phi + p) ds + boundary(phi(T) + p),  phi(t0) = 0

are computed from the Hamiltonian system ``phi' = H0'(psi)``,
``psi' = U'(phi + p)`` (``psi = L0'(phi')``) by shooting on ``psi(t0)``: the
transversality condition is ``psi(T) + 2 kappa (phi(T) + p) = 0`` for a
``kappa |.|^2`` boundary and ``psi(T) = 0`` otherwise. The integration is
fixed-step RK4 with step ``1e-4`` of the interval length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import _rk4
from .errors import ConfigError, RangeError, SolverError
from .levy_core import GammaDensity, LevyModel, TwoPoint
from .problem import BoundaryData, RateFunction

__all__ = [
    "Hamiltonian",
    "Lagrangian",
    "LegendreResult",
    "BoundaryTerm",
    "MinimizerResult",
    "ProbeReport",
    "hamiltonian_h0",
    "legendre_l0",
    "action_value",
    "solve_el",
    "solve_el_config",
    "solve_el_momentum",
    "solve_el_jump",
    "harmonic_closed_form",
    "el_residual",
    "probe_local_minimality",
]

_EXP_SAFE = 700.0
_N_STEPS = 10_000
_TOL = 1e-10


class Hamiltonian:
    """``H0`` of an (unscaled) Lévy triplet, with first and second derivatives."""

    def __init__(self, model: LevyModel):
        model = model.unscaled()
        self.model = model
        self.b = float(model.b)
        self.s2 = float(model.sigma2)
        if model.jumps is None:
            self.k, self.w = np.empty(0), np.empty(0)
        else:
            k, w = model.jumps.nodes()
            self.k, self.w = np.asarray(k, float), np.asarray(w, float)
        # the gamma density integrates e^{xk} k^{-1} e^{-k} only for x < 1
        self.upper = 1.0 if isinstance(model.jumps, GammaDensity) else math.inf
        self._kmax = float(np.max(np.abs(self.k))) if self.k.size else 0.0
        # a subordinator has H0' > b everywhere, so L0 is infinite for u <= b
        self.slope_floor = self.b if self.s2 == 0 and self.k.size and np.all(self.k > 0) else -math.inf

    @classmethod
    def gaussian(cls, sigma2: float = 1.0, b: float = 0.0) -> "Hamiltonian":
        return cls(LevyModel(b=b, sigma2=sigma2))

    @classmethod
    def two_point(cls, alpha: float = 1.0, mass: float = 1.0) -> "Hamiltonian":
        return cls(LevyModel(jumps=TwoPoint(alpha, mass)))

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.k.size and np.any(np.multiply.outer(x, self.k) > _EXP_SAFE):
            raise RangeError(f"|x| up to {np.max(np.abs(x)):.4g} overflows exp(x k) with |k| <= {self._kmax:.4g}")
        if np.any(x >= self.upper):
            raise RangeError(f"H0 is infinite for x >= {self.upper:g}")
        return x

    def _jump(self, x, power: int):
        if not self.k.size:
            return np.zeros_like(x)
        e = np.exp(np.multiply.outer(x, self.k))
        if power == 0:
            return (e - 1.0) @ self.w
        return e @ (self.w * self.k**power)

    def h0(self, x):
        x = self._check(x)
        return self.b * x + 0.5 * self.s2 * x * x + self._jump(x, 0)

    def h0p(self, x):
        x = self._check(x)
        return self.b + self.s2 * x + self._jump(x, 1)

    def h0pp(self, x):
        x = self._check(x)
        return self.s2 + self._jump(x, 2)

    def h0ppp(self, x):
        x = self._check(x)
        return self._jump(x, 3)

    def is_convex(self, grid=None) -> bool:
        grid = np.linspace(-3, min(3.0, self.upper - 1e-3), 121) if grid is None else grid
        return bool(np.all(self.h0pp(grid) >= 0))

    def kernel_args(self):
        return self.b, self.s2, self.k, self.w


def hamiltonian_h0(H: Hamiltonian, x):
    """``H0(x)``; exact for atomic measures, quadrature for the gamma density."""
    out = H.h0(x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LegendreResult:
    value: np.ndarray | float
    argmax: np.ndarray | float


class Lagrangian:
    """``L0(u) = sup_x (x u - H0(x))`` with a closed form where one exists.

    ``closed_form`` is ``"gaussian"`` (pure Brownian with drift),
    ``"two_point"`` (driftless symmetric two-point jumps) or ``"numeric"``
    (safeguarded Newton on ``H0'(x) = u``). ``None`` picks automatically.
    """

    def __init__(self, hamiltonian: Hamiltonian | LevyModel, closed_form: str | None = None):
        H = hamiltonian if isinstance(hamiltonian, Hamiltonian) else Hamiltonian(hamiltonian)
        self.hamiltonian = H
        jumps = H.model.jumps
        auto = "numeric"
        if jumps is None and H.s2 > 0:
            auto = "gaussian"
        elif isinstance(jumps, TwoPoint) and H.b == 0 and H.s2 == 0:
            auto = "two_point"
        if closed_form is None:
            closed_form = auto
        if closed_form not in ("gaussian", "two_point", "numeric"):
            raise ConfigError("closed_form must be 'gaussian', 'two_point' or 'numeric'")
        if closed_form != "numeric" and closed_form != auto:
            raise ConfigError(f"closed form {closed_form!r} does not apply to this model")
        if closed_form == "numeric" and jumps is None and H.s2 == 0:
            raise ConfigError("pure-drift model has a degenerate Lagrangian")
        self.closed_form = closed_form

    @classmethod
    def gaussian(cls, sigma2: float = 1.0, b: float = 0.0) -> "Lagrangian":
        return cls(Hamiltonian.gaussian(sigma2, b))

    @classmethod
    def two_point(cls, alpha: float = 1.0, mass: float = 1.0) -> "Lagrangian":
        return cls(Hamiltonian.two_point(alpha, mass))

    def argmax(self, u):
        u = np.asarray(u, dtype=float)
        H = self.hamiltonian
        if self.closed_form == "gaussian":
            return (u - H.b) / H.s2
        if self.closed_form == "two_point":
            jumps = H.model.jumps
            return np.arcsinh(u / (jumps.mass * jumps.alpha)) / jumps.alpha
        return self._numeric(u)[0]

    def value(self, u):
        u = np.asarray(u, dtype=float)
        H = self.hamiltonian
        if self.closed_form == "gaussian":
            return (u - H.b) ** 2 / (2 * H.s2)
        if self.closed_form == "two_point":
            a, m = H.model.jumps.alpha, H.model.jumps.mass
            r = u / (m * a)
            return (u / a) * np.arcsinh(r) - m * np.sqrt(1.0 + r * r) + m
        return self._numeric(u)[1]

    __call__ = value

    def derivative(self, u):
        """``L0'(u)``, the conjugate momentum (equal to the argmax)."""
        return self.argmax(u)

    def _numeric(self, u: np.ndarray):
        H = self.hamiltonian
        inside = u > H.slope_floor
        x = np.full(u.shape, -np.inf)
        val = np.full(u.shape, np.inf)
        if inside.any():
            x[inside] = self._newton(u[inside])
            val[inside] = x[inside] * u[inside] - H.h0(x[inside])
        if u.ndim == 0:
            return float(x), float(val)
        return x, val

    def _newton(self, u: np.ndarray) -> np.ndarray:
        H = self.hamiltonian
        shape = u.shape
        u = u.ravel()
        lo = np.full(u.shape, -1.0)
        hi = np.full(u.shape, min(1.0, 0.5 * H.upper))
        for _ in range(80):
            bad = H.h0p(lo) > u
            if not bad.any():
                break
            lo[bad] *= 2.0
        else:
            raise RangeError("u below the range of H0'")
        for _ in range(80):
            bad = H.h0p(hi) < u
            if not bad.any():
                break
            hi[bad] = np.where(np.isfinite(H.upper), 0.5 * (hi[bad] + H.upper), 2.0 * hi[bad])
        else:
            raise RangeError("u above the range of H0'")
        x = 0.5 * (lo + hi)
        for _ in range(200):
            f = H.h0p(x) - u
            lo = np.where(f < 0, x, lo)
            hi = np.where(f > 0, x, hi)
            step = f / np.maximum(H.h0pp(x), 1e-300)
            new = x - step
            outside = (new <= lo) | (new >= hi) | ~np.isfinite(new)
            new = np.where(outside, 0.5 * (lo + hi), new)
            done = np.abs(new - x) <= 1e-15 * (1.0 + np.abs(x))
            x = new
            if done.all():
                break
        return x.reshape(shape)


def legendre_l0(L: Lagrangian, u) -> LegendreResult:
    value, x = L.value(u), L.argmax(u)
    if np.ndim(value) == 0:
        return LegendreResult(float(value), float(x))
    return LegendreResult(value, x)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryTerm:
    """``kappa |phi(T) + p|^2`` (``kind="square"``), an additive constant, or nothing."""

    kind: str = "none"
    coef: float = 0.0

    def __post_init__(self):
        if self.kind not in ("square", "constant", "none"):
            raise ConfigError("boundary kind must be 'square', 'constant' or 'none'")
        if self.kind == "square" and not self.coef > 0:
            raise ConfigError("square boundary needs a positive coefficient")

    @classmethod
    def full_square(cls) -> "BoundaryTerm":
        return cls("square", 1.0)

    @classmethod
    def half_square(cls) -> "BoundaryTerm":
        return cls("square", 0.5)

    @classmethod
    def square(cls, kappa: float) -> "BoundaryTerm":
        return cls("square", float(kappa))

    @classmethod
    def constant(cls, value: float = 1.0) -> "BoundaryTerm":
        return cls("constant", float(value))

    @classmethod
    def none(cls) -> "BoundaryTerm":
        return cls()

    @classmethod
    def from_data(cls, data: BoundaryData) -> "BoundaryTerm":
        kind, coef = data.boundary()
        return cls(kind, coef)

    @property
    def kappa(self) -> float:
        return self.coef if self.kind == "square" else 0.0

    def __call__(self, end: float) -> float:
        if self.kind == "square":
            return self.coef * end * end
        return self.coef if self.kind == "constant" else 0.0


def action_value(L: Lagrangian, U: RateFunction, s, phi, p: float, boundary: BoundaryTerm) -> float:
    """Trapezoid value of ``int L0(phi') + U(phi + p) ds + boundary(phi(T) + p)``.

    ``phi'`` is a second-order finite difference on the sample grid ``s``.
    """
    s = np.asarray(s, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if s.size < 3:
        raise ValueError("need at least 3 samples")
    dphi = np.gradient(phi, s, edge_order=2)
    integrand = L.value(dphi) + U(phi + p)
    return float(np.trapezoid(integrand, s) + boundary(phi[-1] + p))


# ---------------------------------------------------------------------------


@dataclass
class MinimizerResult:
    """Extremal on ``[t0, t1]`` together with its action decomposition."""

    s: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    psi: np.ndarray
    p: float
    action: float
    potential: float
    boundary: float
    residual: float
    iterations: int
    boundary_term: BoundaryTerm
    hamiltonian: Hamiltonian = field(repr=False)
    rate: RateFunction = field(repr=False)
    trace: list = field(default_factory=list, repr=False)
    closed_form_error: float | None = None
    rho: np.ndarray | None = field(default=None, repr=False)

    @property
    def t0(self) -> float:
        return float(self.s[0])

    @property
    def t1(self) -> float:
        return float(self.s[-1])

    @property
    def total(self) -> float:
        return self.action + self.potential + self.boundary

    @property
    def G(self) -> float:
        """``-L0'(phi'(t0)) = -psi(t0)``; equals ``-phi'(t0)`` for ``H0 = x^2/2``."""
        return -float(self.psi[0])

    @property
    def energy(self) -> np.ndarray:
        """``H0(psi) - U(phi + p)``, a first integral of the extremal system."""
        return self.hamiltonian.h0(self.psi) - self.rate(self.phi + self.p)

    def summary(self) -> dict:
        return {
            "t0": self.t0,
            "t1": self.t1,
            "p": self.p,
            "action": self.action,
            "potential": self.potential,
            "boundary": self.boundary,
            "total": self.total,
            "G": self.G,
            "residual": self.residual,
            "iterations": self.iterations,
        }


def _linear_guess(H: Hamiltonian, du: np.ndarray, p: float, T: float, kappa: float) -> float:
    """Initial momentum from the system linearised about ``phi = 0``."""
    c, v = float(H.h0p(0.0)), float(H.h0pp(0.0))
    f = float(np.polynomial.polynomial.polyval(p, du))
    a = float(np.polynomial.polynomial.polyval(p, np.polynomial.polynomial.polyder(du))) if du.size > 1 else 0.0
    M = np.zeros((3, 3))
    M[0, 1], M[0, 2] = v, c
    M[1, 0], M[1, 2] = a, f
    E = expm(M * T)

    def resid(psi0):
        x, y, _ = E @ np.array([0.0, psi0, 1.0])
        return y + 2 * kappa * (x + p)

    r0, r1 = resid(0.0), resid(1.0)
    return -r0 / (r1 - r0) if r1 != r0 else 0.0


def solve_el(
    H: Hamiltonian,
    U: RateFunction,
    p: float,
    t0: float,
    t1: float,
    boundary: BoundaryTerm,
    n_steps: int = _N_STEPS,
    tol: float = _TOL,
    max_iter: int = 60,
) -> MinimizerResult:
    """Shoot on ``psi(t0)`` until the transversality residual is below ``tol``."""
    T = float(t1 - t0)
    if not T > 0:
        raise ValueError("need t1 > t0")
    du = U.deriv_coeffs(1)
    if du.size == 0:
        du = np.zeros(1)
    kappa = boundary.kappa
    args = H.kernel_args()

    def residual(psi0):
        x, y = _rk4.endpoint(T, n_steps, psi0, p, *args, du)
        return y + 2 * kappa * (x + p)

    x0 = _linear_guess(H, du, p, T, kappa)
    if H.upper < math.inf:
        x0 = min(x0, 0.5 * H.upper)
    r0 = residual(x0)
    trace = [(x0, r0)]
    if not math.isfinite(r0):
        x0, r0 = 0.0, residual(0.0)
        trace.append((x0, r0))
    x1 = x0 + 1e-3 * (1.0 + abs(x0))
    r1 = residual(x1)
    trace.append((x1, r1))
    it = 0
    while not abs(r1) <= tol:
        it += 1
        if it > max_iter or not math.isfinite(r0):
            raise SolverError(f"shooting did not converge (|residual|={abs(r1):.3g})", trace)
        if r1 == r0:
            raise SolverError("shooting stalled: secant slope vanished", trace)
        x2 = x1 - r1 * (x1 - x0) / (r1 - r0)
        if H.upper < math.inf and x2 >= H.upper:
            x2 = 0.5 * (x1 + H.upper)
        r2 = residual(x2)
        halvings = 0
        while not math.isfinite(r2):
            halvings += 1
            if halvings > 60:
                raise SolverError("shooting left the finite range of the extremal system", trace)
            x2 = 0.5 * (x1 + x2)
            r2 = residual(x2)
        trace.append((x2, r2))
        x0, r0, x1, r1 = x1, r1, x2, r2
    psi0 = x1

    phi, psi = _rk4.integrate(T, n_steps, psi0, p, *args, du)
    s = np.linspace(t0, t1, n_steps + 1)
    dphi = H.h0p(psi)
    lag = psi * dphi - H.h0(psi)  # L0(phi') at conjugate pairs
    return MinimizerResult(
        s=s,
        phi=phi,
        dphi=dphi,
        psi=psi,
        p=float(p),
        action=float(np.trapezoid(lag, s)),
        potential=float(np.trapezoid(U(phi + p), s)),
        boundary=float(boundary(phi[-1] + p)),
        residual=abs(float(r1)),
        iterations=it,
        boundary_term=boundary,
        hamiltonian=H,
        rate=U,
        trace=trace,
    )


def harmonic_closed_form(a: float, c1: float, q: float, T: float, kappa: float, s):
    """Extremal of ``phi'' = a (phi + q) + c1`` with ``phi(0) = 0``, ``phi'(T) = -2 kappa (phi(T) + q)``.

    Returns ``(phi, phi')`` on ``s`` (measured from the left end).
    """
    s = np.asarray(s, dtype=float)
    w = math.sqrt(a)
    shift = c1 / a
    A = q + shift
    ch, sh = math.cosh(w * T), math.sinh(w * T)
    B = -(A * w * sh + 2 * kappa * (A * ch - shift)) / (w * ch + 2 * kappa * sh)
    y = -shift + A * np.cosh(w * s) + B * np.sinh(w * s)
    dy = w * (A * np.sinh(w * s) + B * np.cosh(w * s))
    return y - q, dy


def solve_el_config(V: RateFunction, q: float, t: float, kappa: float, **kw) -> MinimizerResult:
    """Extremal of ``phi'' = V'(phi + q)`` on ``[0, t]`` with ``phi'(t) = -2 kappa (phi(t) + q)``.

    For quadratic ``V`` the hyperbolic closed form is computed as well and
    the sup-norm path difference is stored in ``closed_form_error``.
    """
    boundary = BoundaryTerm.square(kappa) if kappa > 0 else BoundaryTerm.none()
    res = solve_el(Hamiltonian.gaussian(1.0), V, q, 0.0, t, boundary, **kw)
    c = np.asarray(V.coeffs + (0.0, 0.0, 0.0))
    if V.is_polynomial and V.degree <= 2 and c[2] > 0:
        phi, _ = harmonic_closed_form(2 * c[2], c[1], q, t, kappa, res.s)
        res.closed_form_error = float(np.max(np.abs(phi - res.phi)))
    return res


def solve_el_momentum(
    L: Lagrangian,
    p: float,
    t: float,
    kappa: float,
    rate: RateFunction | None = None,
    **kw,
) -> MinimizerResult:
    """Extremal of ``(L0'(phi'))' = U'(phi + p)`` on ``[0, t]``; ``U = p^2/2`` by default."""
    rate = RateFunction.quadratic(0.5) if rate is None else rate
    boundary = BoundaryTerm.square(kappa) if kappa > 0 else BoundaryTerm.none()
    return solve_el(L.hamiltonian, rate, p, 0.0, t, boundary, **kw)


def solve_el_jump(alpha: float, p: float, t: float = 0.0, t1: float = 1.0, mass: float = 1.0, **kw) -> MinimizerResult:
    """Minimiser for two-point jumps with ``U(p) = p^2 - p`` and data ``exp(-1/hbar)``.

    Solves ``z'' = alpha (2(z + p) - 1) sqrt(z'^2 + (m alpha)^2)`` on
    ``[t, t1]``, ``z(t) = 0``, ``z'(t1) = 0``. ``rho = asinh(z'/(m alpha))``
    is attached (for ``m = 1`` this is ``ln(z'/alpha + sqrt((z'/alpha)^2 + 1))``).
    """
    if not alpha > 0:
        raise ConfigError("alpha must be > 0")
    H = Hamiltonian.two_point(alpha, mass)
    res = solve_el(H, RateFunction.quadratic_minus_linear(0.0), p, t, t1, BoundaryTerm.constant(1.0), **kw)
    res.rho = alpha * res.psi
    return res


def el_residual(res: MinimizerResult) -> float:
    """Sup-norm defect of the extremal system under second-order differences."""
    H, U = res.hamiltonian, res.rate
    dphi = np.gradient(res.phi, res.s, edge_order=2)
    dpsi = np.gradient(res.psi, res.s, edge_order=2)
    r1 = dphi - H.h0p(res.psi)
    r2 = dpsi - U.derivative(res.phi + res.p)
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    deltas: np.ndarray
    eps: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.deltas >= 0))

    @property
    def min_delta(self) -> float:
        return float(np.min(self.deltas))


def probe_local_minimality(
    res: MinimizerResult,
    n_probes: int = 20,
    eps: float = 1e-3,
    seed: int = 0,
    n_modes: int = 4,
    stride: int = 10,
) -> ProbeReport:
    """Compare the action of ``phi`` with ``phi + eps * bump`` for random smooth bumps.

    Bumps are random combinations of ``sin((j - 1/2) pi (s - t0)/T)``: they
    vanish at ``t0`` and leave the right end free, matching the admissible
    variations. Both actions use the same discretisation (every
    ``stride``-th sample), so discretisation error cancels in the difference.
    """
    L = Lagrangian(res.hamiltonian)
    s = res.s[::stride]
    phi = res.phi[::stride]
    x = (s - s[0]) / (s[-1] - s[0])
    rng = np.random.default_rng(seed)
    base = action_value(L, res.rate, s, phi, res.p, res.boundary_term)
    deltas = []
    for _ in range(n_probes):
        coef = rng.standard_normal(n_modes)
        bump = sum(c * np.sin((j + 0.5) * math.pi * x) for j, c in enumerate(coef))
        bump /= np.max(np.abs(bump))
        deltas.append(action_value(L, res.rate, s, phi + eps * bump, res.p, res.boundary_term) - base)
    return ProbeReport(np.asarray(deltas), eps)
