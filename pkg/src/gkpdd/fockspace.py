"""Operators and states on a truncated single-mode Fock space.

Phase-space amplitudes follow ``alpha = (q + i p) / sqrt(2)`` and the
displacement operator is ``D(alpha) = exp(alpha a^dag - conj(alpha) a)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln, roots_hermite

from .errors import ConvergenceError, DomainError, InvalidDimensionError, PreconditionError

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2 * math.pi)
SQRT_PI_2 = math.sqrt(math.pi / 2)

# |alpha|^2 above cutoff * this ratio marks a displaced operator as unreliable
TRUNCATION_RATIO = 0.25


def as_phase_point(value) -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"phase-space amplitude must be finite, got {value!r}")
    return z


def truncation_unreliable(alpha, cutoff: int) -> bool:
    return abs(alpha) ** 2 > TRUNCATION_RATIO * cutoff


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Dense matrix on the Fock space spanned by |0>, ..., |cutoff-1>.

    ``unreliable`` is set when the operator was built from displacements
    too large for the cutoff; arithmetic propagates it.
    """

    entries: np.ndarray
    unreliable: bool = False
    hermitian: bool = field(default=False, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidDimensionError(f"operator must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if self.hermitian and not self.is_hermitian():
            raise PreconditionError("operator claimed Hermitian but is not")

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0]

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        a = self.entries
        scale = np.abs(a).max()
        return bool(np.abs(a - a.conj().T).max() <= rtol * scale) if scale > 0 else True

    def dag(self) -> TruncatedOperator:
        return TruncatedOperator(self.entries.conj().T, self.unreliable)

    def block(self, size: int) -> np.ndarray:
        return self.entries[:size, :size]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def _check(self, other: TruncatedOperator):
        if other.cutoff != self.cutoff:
            raise InvalidDimensionError(f"cutoff mismatch: {self.cutoff} vs {other.cutoff}")

    def __matmul__(self, other):
        if isinstance(other, TruncatedOperator):
            self._check(other)
            return TruncatedOperator(self.entries @ other.entries, self.unreliable or other.unreliable)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, TruncatedOperator):
            self._check(other)
            return TruncatedOperator(self.entries + other.entries, self.unreliable or other.unreliable)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, TruncatedOperator):
            self._check(other)
            return TruncatedOperator(self.entries - other.entries, self.unreliable or other.unreliable)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return TruncatedOperator(self.entries * scalar, self.unreliable)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return TruncatedOperator(-self.entries, self.unreliable)


@dataclass(frozen=True, eq=False)
class KetState:
    amplitudes: np.ndarray
    unreliable: bool = False

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).ravel()
        if v.size < 1:
            raise InvalidDimensionError("empty state vector")
        norm = np.linalg.norm(v)
        if abs(norm - 1) > 1e-8:
            raise PreconditionError(f"state not normalized (norm {norm:.12g})")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def normalized(cls, amplitudes, unreliable: bool = False) -> KetState:
        v = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise PreconditionError("cannot normalize the zero vector")
        return cls(v / norm, unreliable)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size

    def density(self) -> TruncatedOperator:
        v = self.amplitudes
        return TruncatedOperator(np.outer(v, v.conj()), self.unreliable)

    def overlap(self, other: KetState) -> complex:
        """<self|other>"""
        if other.cutoff != self.cutoff:
            raise InvalidDimensionError(f"cutoff mismatch: {self.cutoff} vs {other.cutoff}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expect(self, op: TruncatedOperator) -> complex:
        if op.cutoff != self.cutoff:
            raise InvalidDimensionError(f"cutoff mismatch: {self.cutoff} vs {op.cutoff}")
        v = self.amplitudes
        return complex(np.vdot(v, op.entries @ v))


def _check_cutoff(cutoff: int, minimum: int = 2):
    if int(cutoff) != cutoff or cutoff < minimum:
        raise InvalidDimensionError(f"cutoff must be an integer >= {minimum}, got {cutoff}")


def annihilation(cutoff: int) -> TruncatedOperator:
    _check_cutoff(cutoff)
    return TruncatedOperator(np.diag(np.sqrt(np.arange(1, cutoff)), k=1))


def creation(cutoff: int) -> TruncatedOperator:
    return annihilation(cutoff).dag()


def number(cutoff: int) -> TruncatedOperator:
    _check_cutoff(cutoff, 1)
    return TruncatedOperator(np.diag(np.arange(cutoff, dtype=float)))


def parity(cutoff: int) -> TruncatedOperator:
    _check_cutoff(cutoff, 1)
    return TruncatedOperator(np.diag((-1.0) ** np.arange(cutoff)))


def identity(cutoff: int) -> TruncatedOperator:
    _check_cutoff(cutoff, 1)
    return TruncatedOperator(np.eye(cutoff))


def embed(op: TruncatedOperator, cutoff: int) -> TruncatedOperator:
    """Zero-pad ``op`` into a larger Fock space."""
    if cutoff < op.cutoff:
        raise InvalidDimensionError(f"cannot embed cutoff {op.cutoff} into {cutoff}")
    big = np.zeros((cutoff, cutoff), dtype=complex)
    big[: op.cutoff, : op.cutoff] = op.entries
    return TruncatedOperator(big, op.unreliable)


def fock_state(n: int, cutoff: int) -> KetState:
    _check_cutoff(cutoff, 1)
    if not 0 <= n < cutoff:
        raise DomainError(f"Fock index {n} outside [0, {cutoff})")
    v = np.zeros(cutoff, dtype=complex)
    v[n] = 1
    return KetState(v)


def laguerre(n: int, k: int, x: float) -> float:
    """Generalized Laguerre polynomial L_n^(k)(x) by three-term recurrence."""
    if n < 0 or k < 0:
        raise DomainError(f"laguerre requires n, k >= 0 (got n={n}, k={k})")
    prev, cur = 1.0, 1.0 + k - x
    if n == 0:
        return prev
    for j in range(1, n):
        prev, cur = cur, ((2 * j + 1 + k - x) * cur - (j + k) * prev) / (j + 1)
    return cur


def laguerre_sequence(nmax: int, x: float, k: int = 0) -> np.ndarray:
    """L_0^(k)(x), ..., L_{nmax-1}^(k)(x)."""
    out = np.empty(nmax)
    if nmax == 0:
        return out
    out[0] = 1.0
    if nmax > 1:
        out[1] = 1.0 + k - x
    for j in range(1, nmax - 1):
        out[j + 1] = ((2 * j + 1 + k - x) * out[j] - (j + k) * out[j - 1]) / (j + 1)
    return out


def displacement_columns(x: float, cutoff: int):
    """Yield (n, G[n:, n]) for the lower triangle of |D| at |alpha|^2 = x.

    G[n + k, n] = sqrt(n!/(n+k)!) x^(k/2) e^(-x/2) L_n^(k)(x). Runs the
    Laguerre recurrence along each sub-diagonal in the normalized variable
    g_n = sqrt(n!/(n+k)!) L_n^(k), with a per-diagonal log scale so neither
    the prefactor nor the polynomial overflows. Memory is O(cutoff).
    """
    if x == 0.0:
        for n in range(cutoff):
            col = np.zeros(cutoff - n)
            col[0] = 1.0
            yield n, col
        return
    k = np.arange(cutoff, dtype=float)
    scale = 0.5 * k * math.log(x) - 0.5 * x - 0.5 * gammaln(k + 1)
    g_prev = np.zeros(cutoff)
    g = np.ones(cutoff)
    with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
        for n in range(cutoff):
            live = cutoff - n  # diagonals k with n + k < cutoff
            kk = k[:live]
            vals = np.sign(g[:live]) * np.exp(np.log(np.abs(g[:live])) + scale[:live])
            yield n, np.nan_to_num(vals)
            if live <= 1:
                break
            g_next = ((2 * n + 1 + kk - x) * g[:live] - np.sqrt(n * (n + kk)) * g_prev[:live]) / np.sqrt(
                (n + 1) * (n + kk + 1)
            )
            g_prev[:live], g[:live] = g[:live], g_next
            big = np.abs(g) > 1e150
            if big.any():
                g[big] *= 1e-150
                g_prev[big] *= 1e-150
                scale[big] += 150 * math.log(10)


def _displacement_magnitudes(x: float, cutoff: int) -> np.ndarray:
    """Dense lower-triangular G[m, n] (m >= n) from :func:`displacement_columns`."""
    G = np.zeros((cutoff, cutoff))
    for n, col in displacement_columns(x, cutoff):
        G[n:, n] = col
    return G


def displacement(alpha, cutoff: int) -> TruncatedOperator:
    """Fock-basis matrix elements of D(alpha) from the generalized-Laguerre closed form.

    The truncated matrix holds exact matrix elements of the infinite
    operator; it is not exactly unitary. The result is flagged unreliable
    when |alpha|^2 exceeds a quarter of the cutoff.
    """
    _check_cutoff(cutoff)
    alpha = as_phase_point(alpha)
    G = _displacement_magnitudes(abs(alpha) ** 2, cutoff)
    theta = cmath.phase(alpha)
    k = np.subtract.outer(np.arange(cutoff), np.arange(cutoff))
    lower = G * np.exp(1j * theta * k)
    upper = (G * np.exp(1j * theta * k)).T.conj() * np.where(k.T % 2 == 0, 1.0, -1.0)
    D = np.where(k >= 0, lower, upper)
    return TruncatedOperator(D, truncation_unreliable(alpha, cutoff))


def displacement_expm(alpha, cutoff: int, pad: int = 0) -> TruncatedOperator:
    """D(alpha) as a matrix exponential of the truncated generator.

    Computed in a space enlarged by ``pad`` levels and cropped back, which
    moves the truncation artifacts out of the returned block. Used as an
    independent check of :func:`displacement`.
    """
    _check_cutoff(cutoff)
    alpha = as_phase_point(alpha)
    dim = cutoff + pad
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1)
    D = expm(alpha * a.conj().T - alpha.conjugate() * a)
    return TruncatedOperator(D[:cutoff, :cutoff], truncation_unreliable(alpha, cutoff))


def coherent_state(alpha, cutoff: int) -> KetState:
    _check_cutoff(cutoff)
    alpha = as_phase_point(alpha)
    n = np.arange(cutoff)
    with np.errstate(divide="ignore"):
        logmag = n * math.log(abs(alpha)) if alpha != 0 else np.where(n == 0, 0.0, -np.inf)
    amps = np.exp(logmag - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2) * np.exp(1j * cmath.phase(alpha) * n)
    return KetState.normalized(amps, truncation_unreliable(alpha, cutoff))


def hermite_functions(kmax: int, x) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions h_0..h_{kmax-1} evaluated at ``x``.

    h_k(q) = (2^k k! sqrt(pi))^(-1/2) H_k(q) exp(-q^2/2), the position
    representation of |k> for a = (q + i p)/sqrt(2). Uses the normalized
    recurrence with a per-point log scale, so values far in the tails
    underflow cleanly to zero instead of poisoning the recurrence.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((kmax, x.size))
    scale = -0.5 * x**2 - 0.25 * math.log(math.pi)
    prev = np.zeros(x.size)
    cur = np.ones(x.size)
    with np.errstate(divide="ignore", under="ignore"):
        for k in range(kmax):
            out[k] = np.sign(cur) * np.exp(np.log(np.abs(cur)) + scale)
            nxt = math.sqrt(2 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
            prev, cur = cur, nxt
            big = np.abs(cur) > 1e150
            if big.any():
                cur[big] *= 1e-150
                prev[big] *= 1e-150
                scale[big] += 150 * math.log(10)
    return out


def _gauss_hermite_projection(wavefunction, cutoff: int, order: int):
    """Project a real-line wavefunction onto |0>..|cutoff-1>.

    Gauss-Hermite nodes with weights rewritten as w_i e^{x_i^2} =
    1 / (K h_{K-1}(x_i)^2), which avoids the overflow of e^{x^2}.
    Returns (coefficients, norm^2 of the wavefunction).
    """
    x, _ = roots_hermite(order)
    h = hermite_functions(order, x)
    w = 1.0 / (order * h[order - 1] ** 2)
    psi = wavefunction(x)
    coeffs = h[:cutoff] @ (w * psi)
    return coeffs, float(np.sum(w * np.abs(psi) ** 2))


def gkp_peak_count(delta: float, floor: float = 1e-12) -> int:
    """Largest |n| kept in the peak sum: exp(-2 pi delta^2 n^2) >= floor."""
    return int(math.ceil(math.sqrt(-math.log(floor) / (2 * math.pi * delta**2))))


def gkp_wavefunction(bit: int, delta: float):
    """Unnormalized position wavefunction of the finite-energy code state."""
    n_peak = gkp_peak_count(delta)
    ns = np.arange(-n_peak, n_peak + 1)
    centers = (2 * ns + bit) * SQRT_PI
    envelope = np.exp(-2 * delta**2 * math.pi * ns**2)

    def psi(q):
        q = np.asarray(q, dtype=float)[..., None]
        return np.sum(envelope * np.exp(-((q - centers) ** 2) / (2 * delta**2)), axis=-1)

    return psi


def gkp_codestate(bit: int, delta: float, cutoff: int, quad_order: int | None = None) -> KetState:
    """Finite-squeezing GKP code state |0_delta> or |1_delta> in the Fock basis."""
    if bit not in (0, 1):
        raise DomainError(f"bit must be 0 or 1, got {bit}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    _check_cutoff(cutoff)
    order = max(quad_order or 0, 2 * cutoff)
    coeffs, total = _gauss_hermite_projection(gkp_wavefunction(bit, delta), cutoff, order)
    amp = np.abs(coeffs)
    tail_mass = max(0.0, 1.0 - float(np.sum(amp**2)) / total)
    if amp[-4:].max() >= 1e-6 * amp.max():
        raise ConvergenceError(
            f"cutoff {cutoff} too small for delta={delta} (tail mass {tail_mass:.3e})",
            tail_mass=tail_mass,
            cutoff=cutoff,
        )
    return KetState.normalized(coeffs)


def magic_state(sign: str, delta: float, cutoff: int) -> KetState:
    """|H+> = cos(pi/8)|0> + sin(pi/8)|1>, |H-> = -sin(pi/8)|0> + cos(pi/8)|1>."""
    if sign not in ("+", "-"):
        raise DomainError(f"sign must be '+' or '-', got {sign!r}")
    zero = gkp_codestate(0, delta, cutoff).amplitudes
    one = gkp_codestate(1, delta, cutoff).amplitudes
    c, s = math.cos(math.pi / 8), math.sin(math.pi / 8)
    vec = c * zero + s * one if sign == "+" else -s * zero + c * one
    return KetState.normalized(vec)


def tail_mass(state: KetState, keep: int) -> float:
    """Probability carried by Fock levels >= keep."""
    return float(np.sum(np.abs(state.amplitudes[keep:]) ** 2))
