"""Characteristic functions of operators, Wigner functions and effective squeezing.

Also provides a small algebra of analytic characteristic functions built
from delta points, Gaussian peaks and rings. Delta and ring primitives
carry finite weights: the coefficient in front of the distribution, not a
function value. Evaluating one returns that weight when the argument sits
within ``tol`` of its support, so multiplying by a twirl filter acts on
the weights.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InfiniteSqueezingError, PreconditionError
from .fockspace import SQRT_2PI, TruncatedOperator, as_phase_point, displacement

DEFAULT_TOL = 1e-9


def symplectic_form(alpha, beta) -> complex:
    """omega(alpha, beta) = alpha beta* - alpha* beta, purely imaginary."""
    alpha, beta = complex(alpha), complex(beta)
    return alpha * beta.conjugate() - alpha.conjugate() * beta


def char_of_operator(op: TruncatedOperator, alpha) -> complex:
    """Tr[D^dag(alpha) op] on the operator's cutoff."""
    if not np.all(np.isfinite(op.entries)):
        raise PreconditionError("operator has non-finite entries")
    d = displacement(-as_phase_point(alpha), op.cutoff)
    return complex(np.sum(d.entries * op.entries.T))


def _check_density(rho: TruncatedOperator):
    tr = rho.trace()
    if abs(tr - 1) > 1e-8:
        raise PreconditionError(f"density matrix trace {tr:.12g} != 1")
    if not rho.is_hermitian(1e-10):
        raise PreconditionError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(rho.entries).min() < -1e-10:
        raise PreconditionError("density matrix is not positive semidefinite")


@dataclass(frozen=True)
class SqueezingReport:
    delta_q: float
    delta_p: float


def _squeezing_from_char(value: complex, label: str) -> float:
    mag = abs(value)
    if mag == 0:
        raise InfiniteSqueezingError(f"|rho| vanishes at the {label} stabilizer point")
    if mag >= 1:
        warnings.warn(f"|rho| = {mag:.6g} >= 1 at the {label} stabilizer point; clamping", RuntimeWarning, stacklevel=3)
        return 0.0
    return math.sqrt(-math.log(mag) / math.pi)


def effective_squeezing(rho: TruncatedOperator) -> SqueezingReport:
    """Displacement-invariant squeezing from |rho| at the stabilizer points."""
    _check_density(rho)
    return SqueezingReport(
        delta_q=_squeezing_from_char(char_of_operator(rho, 1j * SQRT_2PI), "q"),
        delta_p=_squeezing_from_char(char_of_operator(rho, SQRT_2PI), "p"),
    )


def wigner(rho: TruncatedOperator, grid) -> np.ndarray:
    """Wigner function from the displaced-parity form.

    W(alpha) = (2/pi) Tr[D^dag(alpha) rho D(alpha) Pi] = (2/pi) Tr[rho D(2 alpha) Pi],
    normalized so the integral over d^2 alpha is one.
    """
    _check_density(rho)
    sign = (-1.0) ** np.arange(rho.cutoff)
    # Tr[rho D Pi] = sum_ij D[j, i] rho[i, j] (-1)^i
    rho_pi = rho.entries.T * sign[None, :]
    out = []
    for alpha in np.ravel(np.asarray(grid, dtype=complex)):
        d = displacement(2 * alpha, rho.cutoff).entries
        out.append((2 / math.pi) * np.sum(d * rho_pi).real)
    return np.array(out)


def wigner_from_char(rho: TruncatedOperator, alpha, half_width: float = 7.0, points: int = 141) -> float:
    """Definitional Wigner value: pi^-2 int d^2 beta e^{omega(alpha, beta)} rho(-beta).

    Brute-force trapezoid quadrature over a square; only suitable for states
    whose characteristic function has decayed at ``half_width``.
    """
    xs = np.linspace(-half_width, half_width, points)
    h = xs[1] - xs[0]
    total = 0.0 + 0.0j
    for x in xs:
        for y in xs:
            beta = complex(x, y)
            total += np.exp(symplectic_form(alpha, beta)) * char_of_operator(rho, -beta)
    return float((total * h * h / math.pi**2).real)


# ---------------------------------------------------------------- analytic chars


@dataclass(frozen=True)
class DeltaPoint:
    location: complex
    weight: complex

    def evaluate(self, alpha: complex, tol: float) -> complex:
        return self.weight if abs(alpha - self.location) < tol else 0j

    def mirrored(self):
        return DeltaPoint(-self.location, self.weight.conjugate())


@dataclass(frozen=True)
class GaussPeak:
    center: complex
    weight: complex
    width: float = 1.0

    def evaluate(self, alpha: complex, tol: float) -> complex:
        return self.weight * math.exp(-abs(alpha - self.center) ** 2 / (2 * self.width**2))

    def mirrored(self):
        return GaussPeak(-self.center, self.weight.conjugate(), self.width)


@dataclass(frozen=True)
class Ring:
    radius: float
    weight: complex

    def __post_init__(self):
        if self.radius < 0:
            raise PreconditionError("ring radius must be non-negative")

    def evaluate(self, alpha: complex, tol: float) -> complex:
        return self.weight if abs(abs(alpha) - self.radius) < tol else 0j

    def mirrored(self):
        return Ring(self.radius, self.weight.conjugate())


def _same(a, b, tol=1e-12) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Ring):
        return abs(a.radius - b.radius) < tol and abs(a.weight - b.weight) < tol
    loc_a = a.location if isinstance(a, DeltaPoint) else a.center
    loc_b = b.location if isinstance(b, DeltaPoint) else b.center
    ok = abs(loc_a - loc_b) < tol and abs(a.weight - b.weight) < tol
    return ok and (not isinstance(a, GaussPeak) or abs(a.width - b.width) < tol)


@dataclass(frozen=True)
class AnalyticChar:
    """Sum of analytic primitives representing a Hermitian operator.

    Hermiticity requires h*(-alpha) = h(alpha): every term at z with weight
    w must have a partner at -z with weight w*.
    """

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        for t in terms:
            if not any(_same(t.mirrored(), u) for u in terms):
                raise PreconditionError(f"term {t} has no Hermitian partner")

    def __add__(self, other: AnalyticChar) -> AnalyticChar:
        return AnalyticChar(self.terms + other.terms)

    def scaled(self, factor: float) -> AnalyticChar:
        out = []
        for t in self.terms:
            if isinstance(t, DeltaPoint):
                out.append(DeltaPoint(t.location, t.weight * factor))
            elif isinstance(t, GaussPeak):
                out.append(GaussPeak(t.center, t.weight * factor, t.width))
            else:
                out.append(Ring(t.radius, t.weight * factor))
        return AnalyticChar(tuple(out))

    def filtered(self, filter_fn) -> AnalyticChar:
        """Multiply delta weights by a real even filter; other primitives are rejected."""
        out = []
        for t in self.terms:
            if not isinstance(t, DeltaPoint):
                raise PreconditionError("only delta-point characteristic functions can be filtered pointwise")
            out.append(DeltaPoint(t.location, t.weight * filter_fn(t.location)))
        return AnalyticChar(tuple(out))


def analytic_char_eval(h: AnalyticChar, alpha, tol: float = DEFAULT_TOL) -> complex:
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    alpha = as_phase_point(alpha)
    return complex(sum(t.evaluate(alpha, tol) for t in h.terms))


def _delta(z, w) -> DeltaPoint:
    return DeltaPoint(complex(z), complex(w))


def h_gkp() -> AnalyticChar:
    """Passive GKP stabilizer Hamiltonian: unit negative deltas at +-sqrt(2pi), +-i sqrt(2pi)."""
    return AnalyticChar(tuple(_delta(z, -1) for z in (SQRT_2PI, -SQRT_2PI, 1j * SQRT_2PI, -1j * SQRT_2PI)))


def h_cat2(beta) -> AnalyticChar:
    beta = complex(beta)
    return AnalyticChar((GaussPeak(2 * beta, -1 + 0j), GaussPeak(-2 * beta, -1 + 0j)))


def h_cat4(beta) -> AnalyticChar:
    beta = complex(beta)
    centers = (2 * beta, -2 * beta, 2j * beta, -2j * beta)
    return AnalyticChar(tuple(GaussPeak(c, -1 + 0j) for c in centers))


def h_jj(e_j: float, phi: float) -> AnalyticChar:
    """Josephson cosine in the lab frame: -E_J/2 at +-i phi."""
    return AnalyticChar((_delta(1j * phi, -e_j / 2), _delta(-1j * phi, -e_j / 2)))


def h_jj_rwa(e_j: float, phi: float) -> AnalyticChar:
    """Rotating-wave average of h_jj: weight -E_J per unit time smeared on |alpha| = phi."""
    return AnalyticChar((Ring(phi, complex(-e_j)),))

