"""Displacement twirls: binomial lattice measures, their filters, and matrix-level application."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channels import ChiEvaluator, KrausChannel
from .errors import DomainError, PreconditionError, TruncationWarning
from .fockspace import SQRT_2PI, SQRT_PI_2, TRUNCATION_RATIO, TruncatedOperator, displacement

VARIANTS = {"logical": SQRT_PI_2, "stabilizer": SQRT_2PI}


def _check_level(N):
    if int(N) != N or N < 1:
        raise DomainError(f"twirl level must be an integer >= 1, got {N}")


def _check_variant(variant):
    if variant not in VARIANTS:
        raise DomainError(f"unknown twirl variant {variant!r}; expected one of {sorted(VARIANTS)}")


def binomial_step_weight(N: int, n: int) -> Fraction:
    """P(n) = 2^{-2N} C(2N, n+N) for one lattice axis."""
    if abs(n) > N:
        return Fraction(0)
    return Fraction(math.comb(2 * N, n + N), 4**N)


@dataclass(frozen=True)
class TwirlMeasure:
    """Weighted displacement lattice {(n + i m) * shift_unit}.

    ``weights`` maps integer lattice labels (n, m) to exact rationals.
    """

    weights: dict
    level: int
    shift_unit: float
    variant: str = "logical"

    def __post_init__(self):
        total = sum(self.weights.values())
        if total != 1:
            raise PreconditionError(f"twirl weights sum to {total}, not 1")
        if any(w <= 0 for w in self.weights.values()):
            raise PreconditionError("twirl weights must be positive")

    @property
    def atoms(self) -> list:
        """[(gamma, weight)] in a fixed row-major order over (n, m)."""
        return [(complex(n, m) * self.shift_unit, float(w)) for (n, m), w in sorted(self.weights.items())]

    def points(self) -> np.ndarray:
        return np.array([g for g, _ in self.atoms])

    def float_weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def second_moment(self) -> float:
        """sum weight |gamma|^2, the mean photon number a twirl adds to vacuum."""
        return float(sum(w * (n * n + m * m) for (n, m), w in self.weights.items())) * self.shift_unit**2

    def max_photons(self) -> float:
        return max(n * n + m * m for n, m in self.weights) * self.shift_unit**2


def twirl_measure(N: int, variant: str = "logical") -> TwirlMeasure:
    _check_level(N)
    _check_variant(variant)
    axis = {n: binomial_step_weight(N, n) for n in range(-N, N + 1)}
    weights = {(n, m): axis[n] * axis[m] for n in axis for m in axis}
    return TwirlMeasure(weights, int(N), VARIANTS[variant], variant)


def point_measure(shift_unit: float = SQRT_PI_2) -> TwirlMeasure:
    """Measure with a single atom at the origin (the trivial twirl)."""
    return TwirlMeasure({(0, 0): Fraction(1)}, 1, shift_unit, "trivial")


def convolve(a: TwirlMeasure, b: TwirlMeasure) -> TwirlMeasure:
    """Exact lattice convolution; running twirl a then twirl b draws from this measure."""
    if a.shift_unit != b.shift_unit:
        raise PreconditionError("cannot convolve measures with different shift units")
    out = {}
    for (n1, m1), w1 in a.weights.items():
        for (n2, m2), w2 in b.weights.items():
            key = (n1 + n2, m1 + m2)
            out[key] = out.get(key, Fraction(0)) + w1 * w2
    return TwirlMeasure(out, a.level + b.level, a.shift_unit, a.variant)


@dataclass(frozen=True)
class FilterKind:
    variant: str
    level: int

    def __post_init__(self):
        _check_variant(self.variant)
        _check_level(self.level)


def filter_value(delta, kind: FilterKind) -> float:
    """[(1 + cos(2u Re d))(1 + cos(2u Im d)) / 4]^N with u the shift unit of the variant."""
    d = complex(delta)
    k = 2 * VARIANTS[kind.variant]
    return float((0.25 * (1 + math.cos(k * d.real)) * (1 + math.cos(k * d.imag))) ** kind.level)


def measure_filter(delta, measure: TwirlMeasure) -> float:
    """sum weight * exp(omega(delta, gamma)) by direct summation over the atoms."""
    d = complex(delta)
    g = measure.points()
    omega = d * g.conj() - d.conjugate() * g
    return float(np.sum(measure.float_weights() * np.exp(omega)).real)


def twirl_chi(chi: ChiEvaluator, kind: FilterKind) -> ChiEvaluator:
    def fn(a, b):
        return chi.fn(a, b) * filter_value(a - b, kind)

    return ChiEvaluator(fn, chi.kind, chi.cutoff, f"{chi.label} twirled({kind.variant}, N={kind.level})")


def max_safe_level(cutoff: int, variant: str = "logical") -> int:
    """Largest N whose extreme lattice point stays within the truncation-safe range (0 if none)."""
    _check_variant(variant)
    u2 = VARIANTS[variant] ** 2
    # extreme atom (N, N) carries 2 N^2 u^2 photons
    return int(math.floor(math.sqrt(TRUNCATION_RATIO * cutoff / (2 * u2))))


def _displacements(measure: TwirlMeasure, cutoff: int):
    if measure.max_photons() > TRUNCATION_RATIO * cutoff:
        warnings.warn(
            f"twirl reaches |gamma|^2 = {measure.max_photons():.1f} > cutoff/4 = {cutoff / 4:g}; "
            "matrix-level result is unreliable",
            TruncationWarning,
            stacklevel=3,
        )
    return [(displacement(g, cutoff), w) for g, w in measure.atoms]


def twirl_state_matrix(rho: TruncatedOperator, measure: TwirlMeasure) -> TruncatedOperator:
    """sum weight D(gamma) rho D^dag(gamma)."""
    out = np.zeros((rho.cutoff, rho.cutoff), dtype=complex)
    unreliable = rho.unreliable
    for d, w in _displacements(measure, rho.cutoff):
        out += w * (d.entries @ rho.entries @ d.entries.conj().T)
        unreliable = unreliable or d.unreliable
    return TruncatedOperator(out, unreliable)


def twirled_kraus(ch: KrausChannel, measure: TwirlMeasure) -> KrausChannel:
    """Expanded Kraus set {sqrt(w) D^dag(gamma) E_l D(gamma)} of the twirled channel."""
    ops = []
    for d, w in _displacements(measure, ch.cutoff):
        for e in ch.kraus_ops:
            m = math.sqrt(w) * (d.entries.conj().T @ e.entries @ d.entries)
            ops.append(TruncatedOperator(m, d.unreliable or e.unreliable))
    return KrausChannel(tuple(ops), f"{ch.label} twirled(N={measure.level})")


def twirl_channel_matrix(ch: KrausChannel, rho: TruncatedOperator, measure: TwirlMeasure) -> TruncatedOperator:
    """sum weight D^dag(gamma) N(D(gamma) rho D^dag(gamma)) D(gamma)."""
    if rho.cutoff != ch.cutoff:
        raise PreconditionError(f"cutoff mismatch: channel {ch.cutoff}, state {rho.cutoff}")
    out = np.zeros((rho.cutoff, rho.cutoff), dtype=complex)
    unreliable = rho.unreliable
    for d, w in _displacements(measure, rho.cutoff):
        dm, dd = d.entries, d.entries.conj().T
        moved = dm @ rho.entries @ dd
        inner = sum(e.entries @ moved @ e.entries.conj().T for e in ch.kraus_ops)
        out += w * (dd @ inner @ dm)
        unreliable = unreliable or d.unreliable
    return TruncatedOperator(out, unreliable)


PHOTON_GAIN_CONTEXTS = ("channel_max", "channel_extremal_prob", "state_avg_stabilizer", "state_avg_logical")


def photon_gain(N: int, context: str) -> float:
    """Closed-form photon-number bookkeeping of an N-level twirl.

    channel_max: largest mean-photon change, pi N^2 (extreme atom of the logical lattice).
    channel_extremal_prob: probability of drawing an extreme atom, 2^{2-4N}.
    state_avg_stabilizer / state_avg_logical: mean |gamma|^2 under the measure.
    """
    _check_level(N)
    if context == "channel_max":
        return math.pi * N * N
    if context == "channel_extremal_prob":
        return 2.0 ** (2 - 4 * N)
    if context == "state_avg_stabilizer":
        return 2 * math.pi * N
    if context == "state_avg_logical":
        return math.pi * N / 2
    raise DomainError(f"unknown photon-gain context {context!r}; expected one of {PHOTON_GAIN_CONTEXTS}")


def extremal_probability(measure: TwirlMeasure) -> Fraction:
    """Total exact weight on the four corner atoms (+-N, +-N)."""
    N = measure.level
    return sum(measure.weights.get((sn * N, sm * N), Fraction(0)) for sn in (-1, 1) for sm in (-1, 1))
