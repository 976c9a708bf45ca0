import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import laguerre as nplag
from scipy.special import eval_genlaguerre

from gkpdd.errors import ConvergenceError, DomainError, InvalidDimensionError, PreconditionError
from gkpdd.fockspace import (
    SQRT_2PI,
    SQRT_PI,
    KetState,
    TruncatedOperator,
    annihilation,
    coherent_state,
    creation,
    displacement,
    displacement_expm,
    fock_state,
    gkp_codestate,
    gkp_wavefunction,
    hermite_functions,
    identity,
    laguerre,
    laguerre_sequence,
    magic_state,
    number,
    parity,
    tail_mass,
)

small = st.floats(-1, 1, allow_nan=False)


def explicit_laguerre(n, k, x):
    return sum((-1) ** j * math.comb(n + k, n - j) * x**j / math.factorial(j) for j in range(n + 1))


# ---------------------------------------------------------------- operators


def test_annihilation_cutoff_two():
    np.testing.assert_array_equal(annihilation(2).entries, [[0, 1], [0, 0]])


def test_annihilation_entry():
    assert annihilation(3).entries[1, 2] == pytest.approx(math.sqrt(2))


def test_annihilation_rejects_small_cutoff():
    with pytest.raises(InvalidDimensionError):
        annihilation(1)


@pytest.mark.parametrize("cutoff", [3, 10, 40])
def test_commutator_identity_off_the_edge(cutoff):
    a, ad = annihilation(cutoff), creation(cutoff)
    comm = (a @ ad - ad @ a).entries
    np.testing.assert_allclose(comm[: cutoff - 1, : cutoff - 1], np.eye(cutoff - 1), atol=1e-12)


def test_number_and_parity():
    assert np.allclose(np.diag(number(5).entries), np.arange(5))
    assert np.allclose(np.diag(parity(4).entries), [1, -1, 1, -1])
    assert number(6).is_hermitian()


def test_operator_rejects_nonsquare():
    with pytest.raises(InvalidDimensionError):
        TruncatedOperator(np.zeros((2, 3)))


def test_false_hermitian_claim_rejected():
    with pytest.raises(PreconditionError):
        TruncatedOperator(np.array([[0, 1], [0, 0]]), hermitian=True)


def test_entries_are_read_only():
    op = identity(3)
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5


def test_unreliable_flag_propagates():
    d = displacement(5.0, 20)
    assert d.unreliable
    assert (d @ identity(20)).unreliable
    assert not displacement(0.5, 20).unreliable


def test_ket_norm_validated():
    with pytest.raises(PreconditionError):
        KetState(np.array([1.0, 1.0]))


# ---------------------------------------------------------------- laguerre


def test_laguerre_values():
    assert laguerre(0, 0, 2 * math.pi) == 1.0
    assert laguerre(1, 0, 2 * math.pi) == pytest.approx(1 - 2 * math.pi)
    expected = nplag.lagval(2 * math.pi, [0] * 5 + [1])
    assert laguerre(5, 0, 2 * math.pi) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n", range(9))
@pytest.mark.parametrize("k", [0, 1, 3, 7])
def test_laguerre_matches_explicit_polynomial(n, k):
    for x in (0.0, 0.7, 2 * math.pi, 11.0):
        assert laguerre(n, k, x) == pytest.approx(explicit_laguerre(n, k, x), rel=1e-10, abs=1e-10)


def test_laguerre_sequence_matches_scipy():
    x = 2 * math.pi
    np.testing.assert_allclose(laguerre_sequence(30, x, 2), eval_genlaguerre(np.arange(30), 2, x), rtol=1e-9)


def test_laguerre_domain():
    with pytest.raises(DomainError):
        laguerre(-1, 0, 1.0)
    with pytest.raises(DomainError):
        laguerre(2, -1, 1.0)


# ---------------------------------------------------------------- displacement


def test_vacuum_element():
    assert displacement(1.0, 10).entries[0, 0] == pytest.approx(math.exp(-0.5))


def test_zero_displacement_is_identity():
    np.testing.assert_array_equal(displacement(0, 12).entries, np.eye(12))


@pytest.mark.parametrize("alpha", [0.3, 0.5 - 1.1j, 1.7j, -2.0 + 0.4j])
def test_displacement_matches_expm_oracle(alpha):
    d = displacement(alpha, 40).entries
    oracle = displacement_expm(alpha, 40, pad=80).entries
    np.testing.assert_allclose(d, oracle, atol=1e-12)


def test_displacement_matches_closed_form_with_scipy_laguerre():
    alpha, c = 0.8 + 0.6j, 25
    x = abs(alpha) ** 2
    d = displacement(alpha, c).entries
    for m in range(c):
        for n in range(m + 1):
            val = (
                math.sqrt(math.factorial(n) / math.factorial(m))
                * alpha ** (m - n)
                * math.exp(-x / 2)
                * eval_genlaguerre(n, m - n, x)
            )
            assert d[m, n] == pytest.approx(val, abs=1e-12)
            # upper triangle from D(alpha)^dag = D(-alpha)
            assert d[n, m] == pytest.approx((-alpha.conjugate()) ** (m - n) * val / alpha ** (m - n), abs=1e-12)


def test_composition_law_example():
    a, b, c = 0.3, 0.2j, 80
    omega = a * np.conj(b) - np.conj(a) * b
    lhs = (displacement(a, c) @ displacement(b, c)).entries[:40, :40]
    rhs = np.exp(omega / 2) * displacement(a + b, c).entries[:40, :40]
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(small, small, small, small)
def test_composition_law_property(ar, ai, br, bi):
    a, b = complex(ar, ai), complex(br, bi)
    if abs(a) > 1 or abs(b) > 1:
        return
    c = 80
    omega = a * b.conjugate() - a.conjugate() * b
    lhs = (displacement(a, c) @ displacement(b, c)).entries[:40, :40]
    rhs = np.exp(omega / 2) * displacement(a + b, c).entries[:40, :40]
    assert np.abs(lhs - rhs).max() < 1e-8


@pytest.mark.parametrize("alpha", [SQRT_2PI, 1j * SQRT_2PI, SQRT_2PI * np.exp(0.7j), 1.0])
def test_unitarity_on_half_block(alpha):
    c = 150
    d = displacement(alpha, c).entries
    err = np.abs(d @ d.conj().T - np.eye(c))[: c // 2, : c // 2].max()
    assert err < 1e-8


def test_displacement_large_cutoff_finite():
    d = displacement(3.0 + 4.0j, 600).entries
    assert np.all(np.isfinite(d))
    assert np.abs(d).max() <= 1 + 1e-9


def test_displacement_rejects_nonfinite():
    with pytest.raises(DomainError):
        displacement(complex(np.nan, 0), 5)


# ---------------------------------------------------------------- states


def test_coherent_state_is_displaced_vacuum():
    alpha = 0.7 - 0.4j
    psi = coherent_state(alpha, 40).amplitudes
    np.testing.assert_allclose(psi, displacement(alpha, 40).entries[:, 0], atol=1e-12)


def test_hermite_functions_orthonormal():
    x = np.linspace(-15, 15, 6001)
    h = hermite_functions(20, x)
    gram = h @ h.T * (x[1] - x[0])
    np.testing.assert_allclose(gram, np.eye(20), atol=1e-9)


def test_hermite_functions_stable_far_out():
    h = hermite_functions(300, np.array([0.0, 20.0, 40.0]))
    assert np.all(np.isfinite(h))


@pytest.fixture(scope="module")
def code_states():
    return gkp_codestate(0, 0.3, 200), gkp_codestate(1, 0.3, 200)


def test_codestates_normalized(code_states):
    for s in code_states:
        assert np.linalg.norm(s.amplitudes) == pytest.approx(1, abs=1e-8)


def _wavefunction_overlap(delta):
    q = np.linspace(-25, 25, 200001)
    f0, f1 = gkp_wavefunction(0, delta)(q), gkp_wavefunction(1, delta)(q)
    h = q[1] - q[0]
    return np.sum(f0 * f1) * h / math.sqrt(np.sum(f0 * f0) * h * np.sum(f1 * f1) * h)


def test_codestate_overlap_matches_wavefunction_oracle(code_states):
    zero, one = code_states
    fock = abs(zero.overlap(one))
    assert fock == pytest.approx(_wavefunction_overlap(0.3), rel=1e-6)
    # peaks at even and odd multiples of sqrt(pi) overlap by about exp(-pi / (4 delta^2))
    assert fock < 10 * math.exp(-math.pi / (4 * 0.09))


def test_codestate_zero_is_even(code_states):
    amp = code_states[0].amplitudes
    assert np.sum(np.abs(amp[1::2]) ** 2) < 1e-4


def test_codestate_peak_positions(code_states):
    # <q> sampled via the Hermite expansion: |1> peaks at odd multiples of sqrt(pi)
    q = np.array([0.0, SQRT_PI])
    h = hermite_functions(200, q)
    psi0 = code_states[0].amplitudes.real @ h
    psi1 = code_states[1].amplitudes.real @ h
    assert abs(psi0[0]) > 100 * abs(psi0[1])
    assert abs(psi1[1]) > 100 * abs(psi1[0])


def test_codestate_insufficient_cutoff():
    with pytest.raises(ConvergenceError) as exc:
        gkp_codestate(0, 0.3, 60)
    assert exc.value.diagnostics["tail_mass"] > 0


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.2])
def test_codestate_delta_domain(delta):
    with pytest.raises(DomainError):
        gkp_codestate(0, delta, 100)


def test_tail_mass_decreases_with_cutoff():
    big = gkp_codestate(0, 0.4, 300)
    masses = [tail_mass(big, k) for k in (60, 80, 100, 120, 140)]
    assert all(a > b for a, b in zip(masses, masses[1:]))


def test_magic_states(code_states):
    plus, minus = magic_state("+", 0.3, 200), magic_state("-", 0.3, 200)
    assert np.linalg.norm(plus.amplitudes) == pytest.approx(1, abs=1e-8)
    assert abs(code_states[0].overlap(plus)) == pytest.approx(math.cos(math.pi / 8), abs=1e-3)
    # orthogonal up to the code-state overlap
    s = code_states[0].overlap(code_states[1]).real
    assert abs(plus.overlap(minus)) < 2 * abs(s)


def test_magic_sign_domain():
    with pytest.raises(DomainError):
        magic_state("x", 0.3, 200)


def test_fock_state_bounds():
    with pytest.raises(DomainError):
        fock_state(5, 5)
