import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from busqed import analytic
from busqed.analytic import (
    RabiAmplitudes,
    jc_propagator,
    rabi_evolve,
    swap_state,
    three_level_chain,
)
from busqed.dynamics import ControlKnobs, DeviceParams, mhz_to_angular
from busqed.errors import InvalidParameterError
from busqed.fockspace import build_space


def _rabi_ode_oracle(c0: RabiAmplitudes, t: float):
    """Integrate the coupled amplitude ODEs directly (independent route)."""
    g_n = c0.g * math.sqrt(c0.n + 1)

    def rhs(tau, y):
        ce, cg = y
        return [-1j * g_n * cg * np.exp(1j * c0.delta * tau),
                -1j * g_n * ce * np.exp(-1j * c0.delta * tau)]

    sol = solve_ivp(rhs, (0.0, t), [c0.c_e_n, c0.c_g_n1], rtol=1e-11,
                    atol=1e-12, dense_output=False)
    return sol.y[0, -1], sol.y[1, -1]


def test_rabi_resonant_closed_form():
    g = mhz_to_angular(13.0)
    c0 = RabiAmplitudes(1.0, 0.0, n=0, g=g, delta=0.0)
    for t in (0.0, 3.0, 11.7, 40.0):
        c = rabi_evolve(c0, t)
        assert c.c_e_n == pytest.approx(math.cos(g * t), abs=1e-14)
        assert c.c_g_n1 == pytest.approx(-1j * math.sin(g * t), abs=1e-14)


def test_rabi_identity_at_zero_time():
    c0 = RabiAmplitudes(0.6, 0.8j, n=2, g=0.3, delta=0.9)
    c = rabi_evolve(c0, 0.0)
    assert c.c_e_n == c0.c_e_n and c.c_g_n1 == c0.c_g_n1


@pytest.mark.parametrize("n,delta", [(0, 0.0), (0, 0.35), (1, -0.2), (3, 0.8)])
def test_rabi_matches_direct_integration(n, delta):
    c0 = RabiAmplitudes(math.cos(0.7), 1j * math.sin(0.7), n=n,
                        g=mhz_to_angular(21.0), delta=delta)
    for t in (2.5, 17.0):
        c = rabi_evolve(c0, t)
        ce, cg = _rabi_ode_oracle(c0, t)
        assert abs(c.c_e_n - ce) < 1e-9
        assert abs(c.c_g_n1 - cg) < 1e-9


def test_rabi_composition_property():
    c0 = RabiAmplitudes(0.28 + 0.1j, math.sqrt(1 - abs(0.28 + 0.1j) ** 2),
                        n=1, g=0.11, delta=0.4)
    once = rabi_evolve(c0, 9.3)
    split = rabi_evolve(rabi_evolve(c0, 4.1), 5.2)
    assert abs(once.c_e_n - split.c_e_n) < 1e-12
    assert abs(once.c_g_n1 - split.c_g_n1) < 1e-12
    assert split.t0 == pytest.approx(9.3)


def test_rabi_normalization_preserved():
    c = RabiAmplitudes(0.6, 0.8, n=2, g=0.2, delta=1.3)
    for t in np.linspace(0.3, 50.0, 17):
        out = rabi_evolve(c, float(t))
        assert abs(abs(out.c_e_n) ** 2 + abs(out.c_g_n1) ** 2 - 1.0) < 1e-12


def test_rabi_far_detuned_population_bound():
    # min over t of |c_e|^2 is bounded by 1 - 4 g^2 (n+1) / Omega^2
    g, delta, n = 0.08, 1.2, 1
    c0 = RabiAmplitudes(1.0, 0.0, n=n, g=g, delta=delta)
    floor = 1.0 - 4.0 * g * g * (n + 1) / c0.omega_rabi ** 2
    mins = min(abs(rabi_evolve(c0, float(t)).c_e_n) ** 2
               for t in np.linspace(0.0, 120.0, 600))
    assert mins >= floor - 1e-12


def test_rabi_norm_preserved_for_subnormalized_pair():
    # the pair may hold only part of a larger state's amplitude; its own
    # norm is still a constant of motion
    c0 = RabiAmplitudes(0.5, 0.1j, n=0, g=0.1, delta=0.7)
    norm0 = abs(c0.c_e_n) ** 2 + abs(c0.c_g_n1) ** 2
    out = rabi_evolve(c0, 23.0)
    assert abs(out.c_e_n) ** 2 + abs(out.c_g_n1) ** 2 == pytest.approx(norm0)
    with pytest.raises(InvalidParameterError):
        RabiAmplitudes(1.0, 0.0, n=-1, g=0.1, delta=0.0)


# ---------------------------------------------------------------------------
# resonant swap


def test_swap_state_quarter_half_and_three_quarter():
    g = mhz_to_angular(50.0)
    theta = math.pi / 2  # pure single-photon input
    quarter = swap_state(theta, g, math.pi / (2 * g))
    assert quarter[0, 1] == pytest.approx(0.0, abs=1e-15)
    assert quarter[1, 0] == pytest.approx(-1j, abs=1e-15)
    half = swap_state(theta, g, math.pi / g)
    assert half[0, 1] == pytest.approx(-1.0, abs=1e-15)
    threeq = swap_state(theta, g, 3 * math.pi / (2 * g))
    assert threeq[1, 0] == pytest.approx(1j, abs=1e-14)


def test_swap_state_vacuum_component_unchanged():
    out = swap_state(0.0, 0.3, 17.0)
    assert out[0, 0] == 1.0
    assert np.abs(out).sum() == 1.0


def test_swap_matches_rabi_at_n0():
    # photon-exchange swap and the two-level Rabi pair share amplitudes
    # at zero detuning (mapping |e> -> photon in r_j, |g,1> -> photon in R)
    g, t, theta = 0.21, 6.4, 0.77
    out = swap_state(theta, g, t)
    c0 = RabiAmplitudes(math.sin(theta), 0.0, n=0, g=g, delta=0.0)
    c = rabi_evolve(c0, t)
    assert abs(out[0, 1] - c.c_e_n) < 1e-14
    assert abs(out[1, 0] - c.c_g_n1) < 1e-14


# ---------------------------------------------------------------------------
# resonant qutrit-bus propagators


@pytest.mark.parametrize("which,g,t,n_max", [
    ("ge", 0.0817, 13.0, 2), ("ef", 0.1155, 27.2, 3), ("ge", 0.3, 5.0, 1),
])
def test_jc_propagator_unitarity(which, g, t, n_max):
    u = jc_propagator(which, g, t, n_max)
    assert np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= 1e-12


def test_jc_propagator_printed_matrix_elements():
    # half swap: |g,1> -> -i|e,0>
    g = mhz_to_angular(13.0)
    u = jc_propagator("ge", g, math.pi / (2 * g), n_max=1)
    lo_1 = 2 * 1 + 0
    hi_0 = 2 * 0 + 1
    assert abs(u[hi_0, lo_1] - (-1j)) < 1e-12
    # pi pulse on |e, n=1> (upper level of the e-f pair holding a photon
    # is index (n=1, lo)): cos(g t sqrt(n)) factor gives the minus sign
    g_ef = mhz_to_angular(13.0) * math.sqrt(2)
    u = jc_propagator("ef", g_ef, math.pi / g_ef, n_max=1)
    e_1 = 2 * 1 + 0
    assert abs(u[e_1, e_1] - (-1.0)) < 1e-12
    # vacuum + lower level is dark
    assert abs(u[0, 0] - 1.0) < 1e-14


@pytest.mark.parametrize("n", [0, 1, 2])
def test_jc_propagator_cosine_diagonals(n):
    # <lo,n|U|lo,n> = cos(g t sqrt(n));  <hi,n|U|hi,n> = cos(g t sqrt(n+1))
    g, t = 0.145, 7.3
    u = jc_propagator("ge", g, t, n_max=3)
    lo = 2 * n + 0
    hi = 2 * n + 1
    assert u[lo, lo] == pytest.approx(math.cos(g * t * math.sqrt(n)),
                                      abs=1e-12)
    assert u[hi, hi] == pytest.approx(math.cos(g * t * math.sqrt(n + 1)),
                                      abs=1e-12)


# ---------------------------------------------------------------------------
# three-level chain


def _chain_closed_form(g, t):
    # eigenvectors of the equal-coupling chain give, for the symmetric
    # tridiagonal generator, U11 = (cos(sqrt2 g t)+1)/2, U13 = (cos-1)/2,
    # U12 = -i sin(sqrt2 g t)/sqrt2
    c = math.cos(math.sqrt(2.0) * g * t)
    s = math.sin(math.sqrt(2.0) * g * t)
    return np.array([
        [(c + 1) / 2, -1j * s / math.sqrt(2), (c - 1) / 2],
        [-1j * s / math.sqrt(2), c, -1j * s / math.sqrt(2)],
        [(c - 1) / 2, -1j * s / math.sqrt(2), (c + 1) / 2],
    ])


@pytest.mark.parametrize("t_factor", [0.25, 0.5, 1.0, 1.7])
def test_chain_matches_closed_form(t_factor):
    g = mhz_to_angular(13.0)
    t = t_factor * math.pi / (math.sqrt(2.0) * g)
    u = three_level_chain(g, g, t)
    assert np.abs(u - _chain_closed_form(g, t)).max() < 1e-12


def test_chain_complete_transfer_and_period():
    g = mhz_to_angular(22.0)
    t_pi = math.pi / (math.sqrt(2.0) * g)
    u = three_level_chain(g, g, t_pi)
    assert abs(u[2, 0] - (-1.0)) < 1e-12     # |1,0,g> -> -|0,0,e>
    assert abs(u[0, 2] - (-1.0)) < 1e-12     # and symmetrically back
    u_full = three_level_chain(g, g, 2.0 * t_pi)
    assert np.abs(u_full - np.eye(3)).max() < 1e-12


def test_chain_unequal_couplings_flagged():
    with pytest.warns(UserWarning):
        u = three_level_chain(0.1, 0.2, 5.0)
    assert np.abs(u.conj().T @ u - np.eye(3)).max() < 1e-12


# ---------------------------------------------------------------------------
# full-layout ideal propagators and oracle report


def test_ideal_segment_unitary_keeps_only_resonant_couplings():
    dev = DeviceParams()
    layout = build_space()
    # parked qutrit: only the r1 swap survives; the state with a bus
    # photon and qutrit g must not leak into the qutrit
    u = analytic.ideal_segment_unitary(dev, ControlKnobs(50.0, 0.0, 5.0),
                                       3.0, layout)
    src = layout.index_of(0, 1, 0, "g")
    leak = layout.index_of(0, 0, 0, "e")
    assert abs(u[leak, src]) == 0.0
    assert abs(u[layout.index_of(1, 0, 0, "g"), src]) > 0.1


def test_oracle_report_within_bound():
    report = analytic.oracle_report()
    assert set(report) == {"swap_r1", "chain", "jc_ge", "jc_ef",
                           "rabi_detuned"}
    for name, value in report.items():
        assert value <= 1e-6, f"{name} deviates by {value:g}"
