"""Josephson-oscillator substrate, engineered average Hamiltonians and their spectra.

The rotating-wave substrate has characteristic function -E_J on the ring
|alpha| = phi. Its Fock matrix is -E_J times the phase average of
D(phi e^{i theta}), i.e. -E_J D(phi)[m, n] delta_{mn}. A decoupling schedule
multiplies the characteristic function by its filter F, so the averaged
Hamiltonian is

    H[m, n] = -E_J D(phi)[m, n] * (1/2pi) int F(phi e^{i t}) e^{i (m - n) t} dt,

which is evaluated here with an FFT over the ring. This is the cutoff-to-
infinity limit of summing D^dag(Q) h D(Q) over the schedule, without the
large-photon-number displacements that route needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.optimize import minimize

from .charfunc import SqueezingReport, _squeezing_from_char, char_of_operator
from .ddseq import SHIFT_SETS, _check_shift_set
from .errors import ConvergenceError, DomainError, FitError, PreconditionError
from .fockspace import (
    SQRT_2PI,
    SQRT_PI_2,
    KetState,
    TruncatedOperator,
    displacement,
    displacement_expm,
    fock_state,
    laguerre_sequence,
    magic_state,
)

R_Q = constants.h / (2 * constants.e) ** 2


@dataclass(frozen=True)
class CircuitParams:
    inductance: float
    capacitance: float
    josephson_energy: float

    @property
    def osc_frequency(self) -> float:
        """Angular frequency (LC)^-1/2 in rad/s."""
        return 1.0 / math.sqrt(self.inductance * self.capacitance)

    @property
    def impedance(self) -> float:
        return math.sqrt(self.inductance / self.capacitance)

    @property
    def phi(self) -> float:
        """Junction displacement length sqrt(pi Z / R_Q)."""
        return math.sqrt(math.pi * self.impedance / R_Q)


def circuit_params(L: float, C: float, E_J: float) -> CircuitParams:
    for name, v in (("L", L), ("C", C), ("E_J", E_J)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    return CircuitParams(L, C, E_J)


def substrate_hamiltonian(E_J: float, phi: float, cutoff: int) -> TruncatedOperator:
    """Diagonal -E_J e^{-phi^2/2} L_n(phi^2)."""
    if cutoff < 2:
        raise PreconditionError(f"cutoff must be >= 2, got {cutoff}")
    if phi <= 0:
        raise DomainError(f"phi must be positive, got {phi}")
    x = phi * phi
    return TruncatedOperator(np.diag(-E_J * math.exp(-x / 2) * laguerre_sequence(cutoff, x)), hermitian=True)


def ring_phase_average(E_J: float, phi: float, cutoff: int, points: int = 720, pad: int = 80) -> TruncatedOperator:
    """-(E_J/2) <D(i phi e^{i t}) + h.c.>_t by brute-force averaging of padded matrix exponentials."""
    acc = np.zeros((cutoff, cutoff), dtype=complex)
    for t in 2 * np.pi * np.arange(points) / points:
        d = displacement_expm(1j * phi * np.exp(1j * t), cutoff, pad).entries
        acc += d + d.conj().T
    return TruncatedOperator(-E_J / 2 * acc / points)


def _ring_filter_coefficients(phi: float, N: int, shift_set: str, cutoff: int) -> np.ndarray:
    """fh[k] = mean_t F(phi e^{it}) e^{-ikt}, on enough points that |k| < cutoff is alias free."""
    ux, uy = SHIFT_SETS[shift_set]

    def coeffs(K):
        a = phi * np.exp(2j * np.pi * np.arange(K) / K)
        F = (0.25 * (1 + np.cos(2 * ux * a.imag)) * (1 + np.cos(2 * uy * a.real))) ** N
        return np.fft.fft(F) / K

    K = 1 << int(math.ceil(math.log2(4 * cutoff + 16 * N * (1 + 2 * max(ux, uy) * phi))))
    fh, fh2 = coeffs(K), coeffs(2 * K)
    k = np.arange(-(cutoff - 1), cutoff)
    if np.abs(fh[k % K] - fh2[k % (2 * K)]).max() > 1e-15:
        raise ConvergenceError("ring filter Fourier series not resolved", K=K)
    return fh


def engineered_hamiltonian(
    N: int, E_J: float = 1.0, cutoff: int = 150, phi: float = SQRT_2PI, shift_set: str = "logical"
) -> TruncatedOperator:
    """Average Hamiltonian of the rotating-wave substrate under a level-N schedule."""
    if int(N) != N or N < 1:
        raise DomainError(f"N must be an integer >= 1, got {N}")
    _check_shift_set(shift_set)
    fh = _ring_filter_coefficients(phi, int(N), shift_set, cutoff)
    diff = np.subtract.outer(np.arange(cutoff), np.arange(cutoff))
    H = -E_J * displacement(phi, cutoff).entries * fh[(-diff) % len(fh)]
    return TruncatedOperator((H + H.conj().T) / 2)


def _diagonalize(H: np.ndarray):
    """eigh, split into the four n mod 4 sectors when H commutes with e^{i pi n / 2}."""
    c = H.shape[0]
    diff = np.subtract.outer(np.arange(c), np.arange(c))
    if np.abs(H[diff % 4 != 0]).max(initial=0.0) > 1e-14 * np.abs(H).max():
        return np.linalg.eigh(H)
    vals, vecs = [], []
    for s in range(4):
        ix = np.arange(s, c, 4)
        w, v = np.linalg.eigh(H[np.ix_(ix, ix)])
        full = np.zeros((c, len(w)), dtype=complex)
        full[ix] = v
        vals.append(w)
        vecs.append(full)
    vals = np.concatenate(vals)
    vecs = np.concatenate(vecs, axis=1)
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


@dataclass(frozen=True)
class SpectrumReport:
    N: int
    eigenvalues: tuple
    ground_pair_splitting: float
    gap: float
    squeezing_reports: tuple
    cutoff_used: int
    converged: bool
    stabilizer_values: tuple = ()
    ground_states: tuple = field(default=(), repr=False, compare=False)

    @property
    def ground_delta(self) -> float:
        """Mean of delta_q and delta_p over the two lowest eigenstates."""
        vals = [v for r in self.squeezing_reports[:2] for v in (r.delta_q, r.delta_p)]
        return float(np.mean(vals))


def _spectrum_at(N, E_J, cutoff, phi, shift_set, n_levels):
    vals, vecs = _diagonalize(engineered_hamiltonian(N, E_J, cutoff, phi, shift_set).entries)
    return vals[:n_levels], vecs[:, :n_levels]


def engineered_spectrum(
    N: int,
    E_J: float = 1.0,
    cutoff: int | None = None,
    n_levels: int = 10,
    tol: float = 1e-6,
    max_cutoff: int = 2400,
    phi: float = SQRT_2PI,
    shift_set: str = "logical",
) -> SpectrumReport:
    """Lowest eigenpairs of the engineered Hamiltonian at a converged cutoff.

    Starting from ``cutoff`` (default 150, or 300 above N = 15) the cutoff
    doubles until the lowest ``n_levels`` eigenvalues move by less than
    ``tol * E_J``; the larger of the last two cutoffs is reported.
    """
    c = cutoff or (150 if N <= 15 else 300)
    vals, vecs = _spectrum_at(N, E_J, c, phi, shift_set, n_levels)
    while True:
        c2 = 2 * c
        if c2 > max_cutoff:
            raise ConvergenceError(
                f"spectrum for N={N} not converged below cutoff {max_cutoff}", N=N, cutoff=c, max_cutoff=max_cutoff
            )
        vals2, vecs2 = _spectrum_at(N, E_J, c2, phi, shift_set, n_levels)
        change = np.abs(vals2 - vals).max()
        c, vals, vecs = c2, vals2, vecs2
        if change < tol * abs(E_J):
            break

    d_q = displacement(-1j * SQRT_2PI, c).entries
    d_p = displacement(-SQRT_2PI, c).entries
    reports, stab = [], []
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        rq, rp = v.conj() @ d_q @ v, v.conj() @ d_p @ v
        reports.append(SqueezingReport(_squeezing_from_char(rq, "q"), _squeezing_from_char(rp, "p")))
        stab.append((float(2 * rq.real), float(2 * rp.real)))
    return SpectrumReport(
        N=int(N),
        eigenvalues=tuple(float(x) for x in vals),
        ground_pair_splitting=float(vals[1] - vals[0]),
        gap=float(vals[2] - vals[1]),
        squeezing_reports=tuple(reports),
        cutoff_used=c,
        converged=True,
        stabilizer_values=tuple(stab),
        ground_states=(KetState(vecs[:, 0]), KetState(vecs[:, 1])),
    )


def power_law_fit(xs, ys) -> tuple:
    """Least-squares slope of log y against log x; returns (exponent, r_squared)."""
    lx = np.log(np.asarray(xs, dtype=float))
    y = np.asarray(ys, dtype=float)
    if len(lx) < 2 or np.any(y <= 0):
        raise FitError("power-law fit needs at least two positive points")
    ly = np.log(y)
    if np.var(lx) == 0 or np.var(ly) == 0:
        raise FitError("degenerate power-law fit (zero variance)")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    r2 = 1 - np.sum(resid**2) / np.sum((ly - ly.mean()) ** 2)
    return float(slope), float(r2)


def squeezing_scaling_fit(reports, min_points: int = 8) -> tuple:
    if len(reports) < min_points:
        raise FitError(f"need at least {min_points} spectra, got {len(reports)}")
    return power_law_fit([r.N for r in reports], [r.ground_delta for r in reports])


# ---------------------------------------------------------------- overlaps


def _pair_fidelities(O: np.ndarray, theta: float, phase: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    V = np.array([[c, -np.exp(-1j * phase) * s], [np.exp(1j * phase) * s, c]])
    return np.abs(np.diag(O @ V)) ** 2


def subspace_fidelities(ground_states, targets) -> tuple:
    """Best (|<t0|g0'>|^2, |<t1|g1'>|^2) over unitary mixings g' of the ground pair.

    Maximizes the sum of the two fidelities over the 2x2 rotation (diagonal
    phases do not change fidelities) by a coarse grid followed by a local
    simplex refinement. Targets longer than the ground states are cropped.
    """
    c = ground_states[0].cutoff
    G = np.stack([g.amplitudes for g in ground_states], axis=1)
    T = np.stack([t.amplitudes[:c] if hasattr(t, "amplitudes") else np.asarray(t)[:c] for t in targets], axis=1)
    O = T.conj().T @ G

    def cost(x):
        return -np.sum(_pair_fidelities(O, x[0], x[1]))

    grid = [(t, p) for t in np.linspace(0, np.pi, 37) for p in np.linspace(0, 2 * np.pi, 37)]
    start = min(grid, key=cost)
    best = minimize(cost, start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    f = _pair_fidelities(O, *best.x)
    return float(f[0]), float(f[1])


def magic_target(sign: str, delta: float, min_cutoff: int, max_cutoff: int = 4096) -> KetState:
    """Magic state built at the smallest doubling of ``min_cutoff`` that resolves it."""
    c = min_cutoff
    while True:
        try:
            return magic_state(sign, delta, c)
        except ConvergenceError:
            if 2 * c > max_cutoff:
                raise
            c *= 2


def magic_overlap(report: SpectrumReport, delta_grid) -> tuple:
    """(best_delta, (F+, F-)) maximizing F+ + F- over the grid and the ground-space rotation."""
    if len(report.ground_states) != 2:
        raise PreconditionError("report does not carry the ground-pair eigenvectors")
    c = report.cutoff_used
    best = None
    for delta in delta_grid:
        targets = (magic_target("+", delta, c), magic_target("-", delta, c))
        f = subspace_fidelities(report.ground_states, targets)
        if best is None or sum(f) > sum(best[1]):
            best = (float(delta), f)
    return best


def fock_fidelities(report: SpectrumReport) -> tuple:
    """Same optimization against the bare Fock pair |0>, |1>."""
    c = report.cutoff_used
    return subspace_fidelities(report.ground_states, (fock_state(0, c), fock_state(1, c)))


# ---------------------------------------------------------------- feasibility


@dataclass(frozen=True)
class FeasibilityReport:
    N: int
    osc_frequency: float
    T_C_min: float
    T_X_bound: float
    margin: float = 10.0
    T_X: float | None = None

    def feasible_at(self, T_X: float) -> bool:
        """'Much smaller than' encoded as T_X below T_X_bound / margin."""
        return T_X < self.T_X_bound / self.margin

    @property
    def feasible(self) -> bool | None:
        return None if self.T_X is None else self.feasible_at(self.T_X)


def feasibility(osc_frequency: float, N: int, T_X: float | None = None, margin: float = 10.0) -> FeasibilityReport:
    """Period lower bound (2pi/w) 2^{4N} and elementary-pulse bound (2pi/w)/sqrt(2)."""
    if not osc_frequency > 0:
        raise DomainError("oscillator frequency must be positive")
    if int(N) != N or N < 1:
        raise DomainError(f"N must be an integer >= 1, got {N}")
    if T_X is not None and T_X < 0:
        raise DomainError("T_X must be non-negative")
    if not margin > 0:
        raise DomainError("margin must be positive")
    period = 2 * math.pi / osc_frequency
    return FeasibilityReport(int(N), osc_frequency, period * 2 ** (4 * N), period / math.sqrt(2), margin, T_X)


# ---------------------------------------------------------------- support scans


def char_support_scan(op: TruncatedOperator, unit: float = SQRT_PI_2, radius: int = 2) -> dict:
    """{(n, m): |Tr[D^dag((n + i m) unit) op]|} for |n|, |m| <= radius."""
    return {
        (n, m): abs(char_of_operator(op, complex(n, m) * unit))
        for n in range(-radius, radius + 1)
        for m in range(-radius, radius + 1)
    }


def dominant_axis(scan: dict, exclude_origin: bool = True, floor: float = 0.1) -> str:
    """'real', 'imaginary', 'mixed' or 'none': where the largest scanned magnitude sits."""
    pts = {k: v for k, v in scan.items() if not (exclude_origin and k == (0, 0))}
    (n, m), top = max(pts.items(), key=lambda kv: kv[1])
    if top < floor:
        return "none"
    if m == 0:
        return "real"
    if n == 0:
        return "imaginary"
    return "mixed"


LOGICAL_LABELS = {"real": "X", "imaginary": "Z", "mixed": "Y", "none": "I"}


def surviving_logical(N: int, shift_set: str, cutoff: int = 200, E_J: float = 1.0) -> tuple:
    """Engineer the phi = sqrt(pi/2) ring with ``shift_set`` and report which logical axis survives.

    D(sqrt(pi/2)) shifts q by sqrt(pi) (logical X) and D(i sqrt(pi/2))
    shifts p by sqrt(pi) (logical Z). Returns (label, scan).
    """
    H = engineered_hamiltonian(N, E_J, cutoff, SQRT_PI_2, shift_set)
    scan = char_support_scan(H, SQRT_PI_2, 2)
    return LOGICAL_LABELS[dominant_axis(scan)], scan
