"""Bang-bang periodic decoupling schedules built from twirl measures.

A schedule walks a Hamiltonian cycle of the kings graph on the
(2N+1) x (2N+1) lattice, dwelling at vertex (n, m) for the fraction of the
period given by the twirl weight of that vertex. In the toggling frame the
free Hamiltonian seen during dwell k is D^dag(Q_k) h0 D(Q_k).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import expm, schur

from .charfunc import symplectic_form
from .errors import DomainError, PreconditionError, TruncationWarning
from .fockspace import SQRT_PI_2, TruncatedOperator, displacement, embed, truncation_unreliable
from .twirl import binomial_step_weight

# (real-axis unit, imaginary-axis unit) of the displacement lattice per shift set
SHIFT_SETS = {
    "logical": (SQRT_PI_2, SQRT_PI_2),
    "stabilizer": (2 * SQRT_PI_2, 2 * SQRT_PI_2),
    "pauli_x": (2 * SQRT_PI_2, SQRT_PI_2),
    "pauli_z": (SQRT_PI_2, 2 * SQRT_PI_2),
}

_EPS = 1e-12


def _check_shift_set(shift_set):
    if shift_set not in SHIFT_SETS:
        raise DomainError(f"unknown shift set {shift_set!r}; expected one of {sorted(SHIFT_SETS)}")


def lattice_point(vertex, shift_set: str) -> complex:
    ux, uy = SHIFT_SETS[shift_set]
    n, m = vertex
    return complex(n * ux, m * uy)


def pulse_bound(shift_set: str) -> float:
    """Largest pulse amplitude a king move can produce: |u_x + i u_y|."""
    _check_shift_set(shift_set)
    return abs(complex(*SHIFT_SETS[shift_set]))


# ---------------------------------------------------------------- graph


@dataclass(frozen=True)
class ControlGraph:
    N: int
    vertices: tuple
    edges: frozenset

    def neighbours(self, v) -> list:
        return sorted(u for e in self.edges if v in e for u in e if u != v)

    def degree(self, v) -> int:
        return sum(1 for e in self.edges if v in e)

    def adjacent(self, u, v) -> bool:
        return frozenset((u, v)) in self.edges


def control_graph(N: int) -> ControlGraph:
    if int(N) != N or N < 1:
        raise DomainError(f"N must be an integer >= 1, got {N}")
    N = int(N)
    verts = tuple((n, m) for n in range(-N, N + 1) for m in range(-N, N + 1))
    vset = set(verts)
    edges = set()
    for n, m in verts:
        for dn in (-1, 0, 1):
            for dm in (-1, 0, 1):
                u = (n + dn, m + dm)
                if (dn, dm) != (0, 0) and u in vset:
                    edges.add(frozenset(((n, m), u)))
    return ControlGraph(N, verts, frozenset(edges))


def hamiltonian_cycle(g: ControlGraph) -> list:
    """Explicit Hamiltonian cycle of the odd-sided kings graph, starting at (0, 0).

    Grid coordinates x, y run over 0..2N. The walk covers row y = 0 left to
    right, snakes through columns 2N..2 over rows 1..2N, then zigzags up the
    last two columns ((1, y), (0, y) for y = 2N..1) using diagonal moves;
    (0, 1) is adjacent to the start (0, 0). The list does not repeat the
    start vertex; the step from the last vertex back to the first closes it.
    """
    N = g.N
    s = 2 * N + 1
    walk = [(x, 0) for x in range(s)]
    for j, x in enumerate(range(s - 1, 1, -1)):
        ys = range(1, s) if j % 2 == 0 else range(s - 1, 0, -1)
        walk.extend((x, y) for y in ys)
    for y in range(s - 1, 0, -1):
        walk.extend([(1, y), (0, y)])
    cycle = [(x - N, y - N) for x, y in walk]
    start = cycle.index((0, 0))
    return cycle[start:] + cycle[:start]


def is_hamiltonian_cycle(g: ControlGraph, cycle) -> bool:
    if len(cycle) != len(g.vertices) or set(cycle) != set(g.vertices):
        return False
    return all(g.adjacent(cycle[k], cycle[(k + 1) % len(cycle)]) for k in range(len(cycle)))


# ---------------------------------------------------------------- schedules


@dataclass(frozen=True)
class ScheduleEntry:
    vertex: tuple
    Q: complex
    P: complex
    tau: Fraction


@dataclass(frozen=True)
class PulseSchedule:
    entries: tuple
    shift_set: str = "logical"
    N: int = 0
    period: float | None = None

    def __post_init__(self):
        _check_shift_set(self.shift_set)
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise PreconditionError("schedule has no entries")
        if sum(e.tau for e in entries) != 1:
            raise PreconditionError("dwell fractions do not sum to 1")
        if any(e.tau < 0 for e in entries):
            raise PreconditionError("negative dwell fraction")
        if abs(entries[0].Q) > _EPS:
            raise PreconditionError("schedule must start at the identity (Q_1 = 0)")
        for k, e in enumerate(entries):
            nxt = entries[k + 1].Q if k + 1 < len(entries) else 0j
            if abs(e.Q + e.P - nxt) > _EPS:
                raise PreconditionError(f"entry {k}: Q + P does not reach the next accumulated displacement")
        if abs(sum(e.P for e in entries)) > _EPS:
            raise PreconditionError("net displacement over the cycle is not zero")
        bound = pulse_bound(self.shift_set)
        if max(abs(e.P) for e in entries) > bound + _EPS:
            raise PreconditionError(f"pulse amplitude exceeds the king-move bound {bound:.6g}")
        if self.period is not None and self.period <= 0:
            raise PreconditionError("period must be positive")

    @property
    def M(self) -> int:
        return len(self.entries)

    def taus(self) -> np.ndarray:
        return np.array([float(e.tau) for e in self.entries])

    def accumulated(self) -> np.ndarray:
        return np.array([e.Q for e in self.entries])

    def max_pulse(self) -> float:
        return max(abs(e.P) for e in self.entries)

    def global_phase(self) -> float:
        """Phase Phi with D(P_M)...D(P_1) = e^{i Phi} I, from the composition law."""
        return sum(symplectic_form(e.P, e.Q) for e in self.entries).imag / 2


def trivial_schedule() -> PulseSchedule:
    return PulseSchedule((ScheduleEntry((0, 0), 0j, 0j, Fraction(1)),), "logical", 0)


def schedule_from_cycle(cycle, N: int, shift_set: str = "logical", period: float | None = None) -> PulseSchedule:
    """Schedule visiting ``cycle`` in order; dwell at (n, m) is the level-N twirl weight."""
    _check_shift_set(shift_set)
    g = control_graph(N)
    cycle = list(cycle)
    if cycle[0] != (0, 0) or not is_hamiltonian_cycle(g, cycle):
        raise PreconditionError("not a Hamiltonian cycle of the control graph starting at (0, 0)")
    Qs = [lattice_point(v, shift_set) for v in cycle]
    entries = []
    for k, v in enumerate(cycle):
        nxt = Qs[k + 1] if k + 1 < len(cycle) else 0j
        tau = binomial_step_weight(N, v[0]) * binomial_step_weight(N, v[1])
        entries.append(ScheduleEntry(v, Qs[k], nxt - Qs[k], tau))
    return PulseSchedule(tuple(entries), shift_set, N, period)


def pulse_schedule(N: int, shift_set: str = "logical", period: float | None = None) -> PulseSchedule:
    return schedule_from_cycle(hamiltonian_cycle(control_graph(N)), N, shift_set, period)


def schedule_filter(alpha, sched: PulseSchedule) -> complex:
    """sum_k tau_k exp(omega(alpha, Q_k)), the factor conjugation puts on char(h0)."""
    a = complex(alpha)
    Q = sched.accumulated()
    return complex(np.sum(sched.taus() * np.exp(a * Q.conj() - a.conjugate() * Q)))


def shift_set_filter(alpha, N: int, shift_set: str = "logical") -> float:
    """Closed form of :func:`schedule_filter` for a level-N binomial schedule.

    [(1 + cos(2 u_x Im a)) / 2]^N [(1 + cos(2 u_y Re a)) / 2]^N.
    """
    _check_shift_set(shift_set)
    ux, uy = SHIFT_SETS[shift_set]
    a = complex(alpha)
    return float((0.25 * (1 + math.cos(2 * ux * a.imag)) * (1 + math.cos(2 * uy * a.real))) ** N)


# ---------------------------------------------------------------- dynamics


@dataclass(frozen=True)
class AverageHamiltonian:
    matrix: TruncatedOperator
    order: int = 0


def _require_hermitian(h0: TruncatedOperator):
    if not h0.is_hermitian(1e-10):
        raise PreconditionError("h0 must be Hermitian")


def toggling_hamiltonians(h0: TruncatedOperator, sched: PulseSchedule):
    """[D^dag(Q_k) h0 D(Q_k)] for each schedule entry, on h0's cutoff."""
    out = []
    for e in sched.entries:
        d = displacement(e.Q, h0.cutoff)
        m = d.entries.conj().T @ h0.entries @ d.entries
        out.append(TruncatedOperator((m + m.conj().T) / 2, h0.unreliable or d.unreliable))
    return out


def average_hamiltonian(h0: TruncatedOperator, sched: PulseSchedule, work_cutoff: int | None = None) -> AverageHamiltonian:
    """sum_k tau_k D^dag(Q_k) h0 D(Q_k).

    With ``work_cutoff`` larger than h0's cutoff, h0 is zero-padded first so
    the conjugated copies are not clipped by the truncation; the result then
    lives on the larger space.
    """
    _require_hermitian(h0)
    if work_cutoff is not None:
        h0 = embed(h0, work_cutoff)
    c = h0.cutoff
    if any(truncation_unreliable(e.Q, c) for e in sched.entries):
        warnings.warn(f"schedule displacements exceed the safe range for cutoff {c}", TruncationWarning, stacklevel=2)
    total = np.zeros((c, c), dtype=complex)
    for hk, e in zip(toggling_hamiltonians(h0, sched), sched.entries):
        total += float(e.tau) * hk.entries
    unreliable = h0.unreliable or any(truncation_unreliable(e.Q, c) for e in sched.entries)
    return AverageHamiltonian(TruncatedOperator(total, unreliable, hermitian=True))


def stroboscopic_propagator(
    h0: TruncatedOperator, sched: PulseSchedule, T_C: float, periods: int = 1, frame: str = "toggling"
) -> TruncatedOperator:
    """One-or-more-period propagator of the pulsed evolution.

    ``frame='toggling'`` multiplies exp(-i tau_k T_C D^dag(Q_k) h0 D(Q_k)),
    which is exactly unitary on the truncated space. ``frame='lab'`` forms
    the literal product D(P_k) exp(-i tau_k T_C h0) with truncated pulse
    matrices and removes the global phase of the pulse product; the two
    agree on the low-photon block.
    """
    if T_C <= 0:
        raise PreconditionError("T_C must be positive")
    if int(periods) != periods or periods < 1:
        raise PreconditionError("periods must be a positive integer")
    _require_hermitian(h0)
    c = h0.cutoff
    U = np.eye(c, dtype=complex)
    if frame == "toggling":
        for hk, e in zip(toggling_hamiltonians(h0, sched), sched.entries):
            U = expm(-1j * float(e.tau) * T_C * hk.entries) @ U
    elif frame == "lab":
        for e in sched.entries:
            U = displacement(e.P, c).entries @ expm(-1j * float(e.tau) * T_C * h0.entries) @ U
        U = U * np.exp(-1j * sched.global_phase())
    else:
        raise DomainError(f"unknown frame {frame!r}")
    if not np.all(np.isfinite(U)):
        raise PreconditionError("propagator has non-finite entries")
    return TruncatedOperator(np.linalg.matrix_power(U, int(periods)), h0.unreliable)


def unitary_log(U: np.ndarray) -> np.ndarray:
    """Principal matrix logarithm of a unitary via complex Schur form, branch cut at -pi."""
    T, Z = schur(U, output="complex")
    lam = np.diag(T)
    logs = np.log(np.abs(lam)) + 1j * np.angle(lam)
    return (Z * logs[None, :]) @ Z.conj().T


def magnus_defect(h0: TruncatedOperator, sched: PulseSchedule, T_C: float, block: int | None = None) -> float:
    """max |(i/T_C) log U(T_C) - H_av| on the top-left block (default: half the cutoff)."""
    U = stroboscopic_propagator(h0, sched, T_C)
    h_eff = 1j * unitary_log(U.entries) / T_C
    h_av = average_hamiltonian(h0, sched).matrix.entries
    block = block or h0.cutoff // 2
    return float(np.abs(h_eff - h_av)[:block, :block].max())
