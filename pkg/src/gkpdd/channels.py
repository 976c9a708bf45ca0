"""Bosonic CP maps as Kraus lists and as continuous chi functions c(alpha, beta).

A channel acts as N(rho) = int d^2a d^2b c(a, b) D(a) rho D(b)^dag, with
c(a, b) = pi^-2 sum_l c_l(a) c_l(b)^* and c_l(a) = Tr[D^dag(a) E_l].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DomainError, InvalidDimensionError, PreconditionError
from .fockspace import (
    TruncatedOperator,
    as_phase_point,
    displacement,
    displacement_columns,
    identity,
    truncation_unreliable,
)

COMPLETENESS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus_ops: tuple
    label: str = ""

    def __post_init__(self):
        ops = tuple(self.kraus_ops)
        if not ops:
            raise PreconditionError("a channel needs at least one Kraus operator")
        cutoffs = {op.cutoff for op in ops}
        if len(cutoffs) != 1:
            raise InvalidDimensionError(f"Kraus operators have mixed cutoffs {sorted(cutoffs)}")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def cutoff(self) -> int:
        return self.kraus_ops[0].cutoff

    def completeness_defect(self, block: int | None = None) -> float:
        """max |sum E^dag E - I| on the top-left block (default: half the cutoff)."""
        block = block or max(1, self.cutoff // 2)
        total = sum(op.entries.conj().T @ op.entries for op in self.kraus_ops)
        return float(np.abs(total[:block, :block] - np.eye(block)).max())


def identity_channel(cutoff: int) -> KrausChannel:
    return KrausChannel((identity(cutoff),), "identity")


def apply_channel(ch: KrausChannel, rho: TruncatedOperator) -> TruncatedOperator:
    if rho.cutoff != ch.cutoff:
        raise InvalidDimensionError(f"cutoff mismatch: channel {ch.cutoff}, state {rho.cutoff}")
    out = np.zeros_like(rho.entries)
    for op in ch.kraus_ops:
        out += op.entries @ rho.entries @ op.entries.conj().T
    return TruncatedOperator(out, rho.unreliable or any(op.unreliable for op in ch.kraus_ops))


@dataclass(frozen=True)
class ChiEvaluator:
    """Pointwise-callable chi function. ``kind`` is 'closed_form' or 'kraus_derived'."""

    fn: Callable[[complex, complex], complex]
    kind: str
    cutoff: int | None = None
    label: str = ""

    def __call__(self, alpha, beta) -> complex:
        return complex(self.fn(as_phase_point(alpha), as_phase_point(beta)))

    def reliable(self, alpha, beta) -> bool:
        """False when a Kraus-derived value was evaluated beyond the truncation-safe range."""
        if self.cutoff is None:
            return True
        return not (truncation_unreliable(alpha, self.cutoff) or truncation_unreliable(beta, self.cutoff))


@dataclass(frozen=True)
class LossParams:
    gamma: float

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise DomainError(f"loss probability gamma must lie in (0, 1), got {self.gamma}")

    @classmethod
    def from_rate(cls, kappa: float, t: float) -> LossParams:
        return cls(1 - math.exp(-kappa * t))

    @property
    def gamma_bar(self) -> float:
        """Effective loss parameter 1/(1 - sqrt(1 - gamma)), always >= 1."""
        return 1.0 / (1.0 - math.sqrt(1.0 - self.gamma))


def _loss_superdiagonal(gamma: float, l: int, cutoff: int, convention: str) -> np.ndarray:
    """Nonzero entries E_l[n - l, n] for n = l .. cutoff-1."""
    exponent = {"half": 0.5, "full": 1.0}[convention]
    n = np.arange(l, cutoff)
    log_amp = (
        0.5 * l * math.log(gamma / (1 - gamma))
        + 0.5 * (gammaln(n + 1) - gammaln(n - l + 1) - gammaln(l + 1))
        + exponent * n * math.log(1 - gamma)
    )
    return np.exp(log_amp)


def photon_loss_kraus(
    gamma: float, cutoff: int, l_max: int | None = None, convention: str = "half", check: bool = True
) -> KrausChannel:
    """Kraus operators E_l = (g/(1-g))^{l/2} a^l / sqrt(l!) (1-g)^{x n}.

    ``convention='half'`` uses x = 1/2, the trace-preserving amplitude-damping
    channel; ``'full'`` uses x = 1 and is kept only to show that it is not
    trace preserving. With ``l_max=None`` the Kraus rank grows until the
    completeness defect drops below 1e-8 (capped at cutoff - 1).
    """
    LossParams(gamma)
    if convention not in ("half", "full"):
        raise DomainError(f"unknown convention {convention!r}")
    if cutoff < 2:
        raise InvalidDimensionError(f"cutoff must be >= 2, got {cutoff}")

    def build(lm):
        ops = []
        for l in range(lm + 1):
            e = np.zeros((cutoff, cutoff))
            if l < cutoff:
                n = np.arange(l, cutoff)
                e[n - l, n] = _loss_superdiagonal(gamma, l, cutoff, convention)
            ops.append(TruncatedOperator(e))
        return KrausChannel(tuple(ops), f"photon-loss gamma={gamma}")

    if l_max is None:
        l_max = 1
        ch = build(l_max)
        while ch.completeness_defect() >= COMPLETENESS_TOL and l_max < cutoff - 1:
            l_max = min(2 * l_max, cutoff - 1)
            ch = build(l_max)
    else:
        ch = build(l_max)
    if check:
        defect = ch.completeness_defect()
        if defect >= COMPLETENESS_TOL:
            raise ConvergenceError(
                f"completeness defect {defect:.3e} with l_max={l_max}; increase l_max", defect=defect, l_max=l_max
            )
    return ch


def photon_loss_chi(params: LossParams) -> ChiEvaluator:
    """Closed form c(a, b) = (gbar/pi)^2 <b|a>^(2 gbar - 1)."""
    gb = params.gamma_bar
    pref = (gb / math.pi) ** 2

    def fn(a, b):
        log_overlap = -(abs(a) ** 2 + abs(b) ** 2 - 2 * b.conjugate() * a) / 2
        return pref * np.exp((2 * gb - 1) * log_overlap)

    return ChiEvaluator(fn, "closed_form", label=f"photon-loss gamma={params.gamma}")


class _TraceCache:
    def __init__(self, compute):
        self._compute = compute
        self._store = {}

    def __call__(self, alpha: complex) -> np.ndarray:
        if alpha not in self._store:
            self._store[alpha] = self._compute(alpha)
        return self._store[alpha]


def chi_from_kraus(ch: KrausChannel) -> ChiEvaluator:
    """c(a, b) = pi^-2 sum_l Tr[D^dag(a) E_l] Tr[D^dag(b) E_l]^*."""
    stack = np.stack([op.entries for op in ch.kraus_ops])

    def traces(alpha):
        d = displacement(-alpha, ch.cutoff).entries
        return np.einsum("ij,lji->l", d, stack)

    cache = _TraceCache(traces)

    def fn(a, b):
        return np.sum(cache(a) * cache(b).conj()) / math.pi**2

    return ChiEvaluator(fn, "kraus_derived", cutoff=ch.cutoff, label=ch.label)


def photon_loss_chi_banded(gamma: float, cutoff: int) -> ChiEvaluator:
    """Kraus-trace chi of the photon-loss channel using that E_l lives on one superdiagonal.

    Same sum as :func:`chi_from_kraus` applied to :func:`photon_loss_kraus`
    with full Kraus rank (half convention), but D(-alpha) is streamed column
    by column and never stored, so cutoffs of many thousands stay cheap.
    Small gamma needs large cutoffs: E_l is concentrated near n ~ l / gamma.
    """
    LossParams(gamma)
    if cutoff < 2:
        raise InvalidDimensionError(f"cutoff must be >= 2, got {cutoff}")
    n = np.arange(cutoff)

    def traces(alpha):
        # Tr[D(-alpha) E_l] = sum_j D(-alpha)[j + l, j] E_l[j, j + l]
        out = np.zeros(cutoff)
        for j, col in displacement_columns(abs(alpha) ** 2, cutoff):
            out[: cutoff - j] += col * _loss_row(gamma, j, cutoff)
        return out * np.exp(1j * cmath.phase(-alpha) * n)

    cache = _TraceCache(traces)

    def fn(a, b):
        return np.sum(cache(a) * cache(b).conj()) / math.pi**2

    return ChiEvaluator(fn, "kraus_derived", cutoff=cutoff, label=f"photon-loss gamma={gamma} (banded)")


def _loss_row(gamma: float, j: int, cutoff: int) -> np.ndarray:
    """E_l[j, j + l] for l = 0 .. cutoff-1-j (half convention)."""
    l = np.arange(cutoff - j)
    nn = j + l
    log_amp = (
        0.5 * l * math.log(gamma / (1 - gamma))
        + 0.5 * (gammaln(nn + 1) - gammaln(j + 1) - gammaln(l + 1))
        + 0.5 * nn * math.log(1 - gamma)
    )
    return np.exp(log_amp)


def finite_squeezing_chi(delta: float) -> ChiEvaluator:
    """Coherent finite-squeezing map: (pi d^2)^-1 exp(-|a|^2/d^2) exp(-|b|^2/d^2)."""
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")

    def fn(a, b):
        return math.exp(-(abs(a) ** 2 + abs(b) ** 2) / delta**2) / (math.pi * delta**2)

    return ChiEvaluator(fn, "closed_form", label=f"finite-squeezing delta={delta}")


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    residual: float = field(default=0.0)


def fit_offdiagonal_decay(chi: ChiEvaluator, distances, anchor=0j, direction=1 + 0j) -> DecayFit:
    """Least-squares fit of log|c(anchor + d u, anchor)| = b - rate d^2 along a ray u."""
    u = complex(direction) / abs(direction)
    d = np.asarray(distances, dtype=float)
    y = np.log([abs(chi(anchor + x * u, anchor)) for x in d])
    coef, res, *_ = np.polyfit(d**2, y, 1, full=True)
    return DecayFit(rate=-float(coef[0]), intercept=float(coef[1]), residual=float(res[0]) if len(res) else 0.0)
