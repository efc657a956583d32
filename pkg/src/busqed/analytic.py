"""Closed-form Jaynes-Cummings solutions used as the integrator's oracle.

Everything here is exact closed-system algebra on small spaces: the
general two-level Rabi solution, the resonant bus-resonator swap, the
resonant qutrit-bus propagators obtained by exponentiating the reduced
two-level Hamiltonians, and the equal-coupling three-state chain that
implements the photon-to-qutrit transfer.  Peak couplings are angular
(rad/ns) and times are in ns throughout.

The printed closed forms of the resonant propagators mix square-root-
of-number-operator factors whose ordering is easy to get wrong in
transcription, so the propagators are computed by matrix exponentiation
of the reduced Hamiltonians; the printed forms appear only as test
expectations on explicit basis states.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from . import dynamics as dyn
from . import fockspace as fs
from .errors import InvalidParameterError
from .fockspace import PureState, SpaceLayout


@dataclass(frozen=True)
class RabiAmplitudes:
    """State of one resonant/detuned Rabi pair {|e,n>, |g,n+1>}.

    c_e_n and c_g_n1 are the interaction-picture amplitudes; g is the
    bare coupling (rad/ns) and delta the qubit-field detuning (rad/ns).
    The interaction-picture phases reference absolute time, so the pair
    carries the time t0 it has already evolved to; that makes repeated
    evolution compose exactly.  The norm |c_e_n|^2 + |c_g_n1|^2 is
    preserved by evolution (equal to 1 whenever initialized normalized).
    """

    c_e_n: complex
    c_g_n1: complex
    n: int
    g: float
    delta: float
    t0: float = 0.0

    def __post_init__(self):
        if self.n < 0:
            raise InvalidParameterError("photon number must be >= 0")

    @property
    def omega_rabi(self) -> float:
        """Generalized Rabi frequency sqrt(4 g^2 (n+1) + delta^2)."""
        return math.sqrt(4.0 * self.g ** 2 * (self.n + 1) + self.delta ** 2)


def rabi_evolve(c0: RabiAmplitudes, t: float) -> RabiAmplitudes:
    """Propagate the two amplitudes for a further time t >= 0.

    General solution of the detuned Jaynes-Cummings pair (the pair
    couples with strength g*sqrt(n+1)), including the
    exp(+-i delta t / 2) interaction-picture phases.  Starting from
    t0 = 0 this is the textbook closed form; evolving in pieces gives
    identically the same amplitudes as one long step.
    """
    if t < 0:
        raise InvalidParameterError("time must be >= 0")
    omega = c0.omega_rabi
    g_n = c0.g * math.sqrt(c0.n + 1)
    if omega == 0.0:
        return replace(c0, t0=c0.t0 + t)
    # strip the absolute-time phases, apply the autonomous dressed
    # rotation, then restore the phases at the advanced time
    d_e = c0.c_e_n * np.exp(-0.5j * c0.delta * c0.t0)
    d_g = c0.c_g_n1 * np.exp(0.5j * c0.delta * c0.t0)
    half = 0.5 * omega * t
    cos_h = math.cos(half)
    sin_h = math.sin(half)
    ratio = c0.delta / omega
    mix = 2.0 * g_n / omega
    e_e = (cos_h - 1j * ratio * sin_h) * d_e - 1j * mix * sin_h * d_g
    e_g = (cos_h + 1j * ratio * sin_h) * d_g - 1j * mix * sin_h * d_e
    t1 = c0.t0 + t
    c_e = e_e * np.exp(0.5j * c0.delta * t1)
    c_g = e_g * np.exp(-0.5j * c0.delta * t1)
    return replace(c0, c_e_n=complex(c_e), c_g_n1=complex(c_g), t0=t1)


def swap_state(theta_in: float, g_j: float, t: float) -> np.ndarray:
    """Resonant bus-resonator swap acting on cos(th)|00> + sin(th)|01>.

    Returns the two-mode state as a (2, 2) array indexed [n_R, n_j].
    The vacuum component is stationary; the single-photon component
    evolves as cos(g t)|0>_R|1>_j - i sin(g t)|1>_R|0>_j.
    """
    out = np.zeros((2, 2), dtype=complex)
    out[0, 0] = math.cos(theta_in)
    amp = math.sin(theta_in)
    out[0, 1] = amp * math.cos(g_j * t)
    out[1, 0] = -1j * amp * math.sin(g_j * t)
    return out


def jc_propagator(which: str, g: float, t: float, n_max: int) -> np.ndarray:
    """Resonant qutrit-bus propagator on (bus ⊗ two-level) by exponentiation.

    ``which`` names the transition the two-level pair represents ("ge"
    or "ef"); pass the corresponding coupling as g.  Bus Fock states run
    0..n_max and the flat index is n*2 + s with s=0 the lower and s=1
    the upper level, so U[(n, s), (m, s')] addresses <n, s|U|m, s'>.
    """
    if which not in ("ge", "ef"):
        raise InvalidParameterError(f"unknown transition {which!r}")
    if n_max < 0:
        raise InvalidParameterError("n_max must be >= 0")
    dim = 2 * (n_max + 1)
    h = np.zeros((dim, dim), dtype=complex)
    for n in range(n_max):
        # a sigma^+ couples |n+1, lo> -> |n, hi> with weight g*sqrt(n+1)
        h[2 * n + 1, 2 * (n + 1)] = g * math.sqrt(n + 1)
    h = h + h.conj().T
    return expm(-1j * h * t)


def three_level_chain(g1: float, g_ge: float, t: float) -> np.ndarray:
    """Propagator of the chain {|1,0,g>, |0,1,g>, |0,0,e>}.

    The photon hops r1 -> R with strength g1 while R exchanges with the
    qutrit at g_ge.  At the equal-coupling working point g1 = g_ge the spectrum
    is {0, +-sqrt(2) g} and the end-to-end amplitude after time t is
    (cos(sqrt(2) g t) - 1)/2, giving a complete |1,0,g> -> -|0,0,e>
    transfer at t = pi/(sqrt(2) g).
    """
    if abs(g1 - g_ge) > 1e-12 * max(abs(g1), abs(g_ge), 1.0):
        warnings.warn("unequal chain couplings: outside the equal-coupling "
                      "regime the transfer is incomplete", stacklevel=2)
    h = np.array([[0.0, g1, 0.0],
                  [g1, 0.0, g_ge],
                  [0.0, g_ge, 0.0]], dtype=complex)
    return expm(-1j * h * t)


# ---------------------------------------------------------------------------
# full-space ideal propagators (segment-local interaction picture)


def ideal_segment_unitary(dev: dyn.DeviceParams, knobs: dyn.ControlKnobs,
                          duration: float, layout: SpaceLayout) -> np.ndarray:
    """Ideal unitary of one segment: resonant couplings only.

    In the segment-local interaction picture the detuned couplings
    oscillate and average away while the resonant ones are static; the
    idealized protocol keeps only the latter.  Exponentiating that
    restriction on the full layout gives the reference map the
    integrator is compared against.
    """
    h = np.zeros((layout.total_dim,) * 2, dtype=complex)
    for c, delta in dyn._coupling_terms(dev, knobs, layout):
        if abs(delta) < 1e-9:
            h += c + c.conj().T
    return expm(-1j * h * duration)


def compose_schedule_unitary(dev: dyn.DeviceParams,
                             schedule: dyn.ControlSchedule,
                             layout: SpaceLayout) -> np.ndarray:
    """Time-ordered product of the ideal segment unitaries."""
    u = np.eye(layout.total_dim, dtype=complex)
    for seg in schedule.segments:
        u = ideal_segment_unitary(dev, seg.knobs, seg.duration, layout) @ u
    return u


# ---------------------------------------------------------------------------
# integrator-vs-oracle cross checks


def _max_amp_dev(psi: PureState, reference: np.ndarray) -> float:
    return float(np.abs(psi.amplitudes - reference).max())


def oracle_report(dev: dyn.DeviceParams | None = None,
                  opts: dyn.SolverOptions | None = None) -> dict[str, float]:
    """Max amplitude deviation of the integrator from each closed form.

    Every protocol segment type is integrated as a closed system in a
    configuration where its reduced model is exact (spectator couplings
    removed or energetically excluded) and compared amplitude-by-
    amplitude against the analytic propagator.
    """
    dev = (dev or dyn.DeviceParams()).lossless()
    opts = opts or dyn.SolverOptions()
    report = {}

    # resonant r1-R swap with the qutrit decoupled: the two-mode reduction is exact
    dev_swap = replace(dev, g_ge=0.0)
    layout = fs.build_space()
    g_ang = dyn.mhz_to_angular(dev.g_max)
    t_swap = 0.37 * math.pi / g_ang
    knobs = dyn.ControlKnobs(dev.g_max, 0.0, 5.0)
    sched = dyn.ControlSchedule((dyn.Segment(t_swap, knobs),), "swap-check")
    theta = 0.3 * math.pi
    psi0 = PureState(layout,
                     math.cos(theta) * fs.basis_state(layout, 0, 0, 0, "g").amplitudes
                     + math.sin(theta) * fs.basis_state(layout, 1, 0, 0, "g").amplitudes)
    _, states = dyn.schrodinger_evolve(psi0, dev_swap, sched, opts)
    target = swap_state(theta, g_ang, t_swap)
    ref = np.zeros(layout.total_dim, dtype=complex)
    ref[layout.index_of(0, 0, 0, "g")] = target[0, 0]
    ref[layout.index_of(1, 0, 0, "g")] = target[0, 1]
    ref[layout.index_of(0, 1, 0, "g")] = target[1, 0]
    report["swap_r1"] = _max_amp_dev(states[-1], ref)

    # equal-coupling chain (c-phase steps i/v); exact in the one-excitation
    # sector because the f level sits two excitations up
    g_chain = dyn.mhz_to_angular(dev.g_ge)
    t_chain = math.pi / (math.sqrt(2.0) * g_chain)
    knobs = dyn.ControlKnobs(dev.g_ge, 0.0, dev.omega_r)
    sched = dyn.ControlSchedule((dyn.Segment(t_chain, knobs),), "chain-check")
    u_chain = three_level_chain(g_chain, g_chain, t_chain)
    basis = [(1, 0, 0, "g"), (0, 1, 0, "g"), (0, 0, 0, "e")]
    worst = 0.0
    for col, occ in enumerate(basis):
        psi0 = fs.basis_state(layout, *occ)
        _, states = dyn.schrodinger_evolve(psi0, dev, sched, opts)
        ref = np.zeros(layout.total_dim, dtype=complex)
        for row, occ_r in enumerate(basis):
            ref[layout.index_of(*occ_r)] = u_chain[row, col]
        worst = max(worst, _max_amp_dev(states[-1], ref))
    report["chain"] = worst

    # resonant g-e exchange (7-step qutrit swap); exact in the
    # one-excitation sector
    t_ge = 0.5 * math.pi / g_chain
    knobs = dyn.ControlKnobs(0.0, 0.0, dev.omega_r)
    sched = dyn.ControlSchedule((dyn.Segment(t_ge, knobs),), "ge-check")
    u_ge = jc_propagator("ge", g_chain, t_ge, n_max=1)
    pairs = [((0, 1, 0, "g"), (1, 0)), ((0, 0, 0, "e"), (0, 1))]
    worst = 0.0
    for (occ, (n, s)) in pairs:
        psi0 = fs.basis_state(layout, *occ)
        _, states = dyn.schrodinger_evolve(psi0, dev, sched, opts)
        ref = np.zeros(layout.total_dim, dtype=complex)
        for (occ_r, (n_r, s_r)) in pairs:
            ref[layout.index_of(*occ_r)] = u_ge[2 * n_r + s_r, 2 * n + s]
        worst = max(worst, _max_amp_dev(states[-1], ref))
    report["jc_ge"] = worst

    # resonant e-f pi pulse (c-phase step iii); a two-level bus keeps the
    # |g,2> leakage path out of the space so the reduced model is exact
    layout_ef = fs.build_space((3, 2, 3))
    g_ef_ang = dyn.mhz_to_angular(dev.g_ef)
    t_ef = math.pi / g_ef_ang
    knobs = dyn.ControlKnobs(0.0, 0.0, dev.omega_ef_park)
    sched = dyn.ControlSchedule((dyn.Segment(t_ef, knobs),), "ef-check")
    u_ef = jc_propagator("ef", g_ef_ang, t_ef, n_max=1)
    pairs = [((0, 1, 0, "e"), (1, 0)), ((0, 0, 0, "f"), (0, 1))]
    worst = 0.0
    for (occ, (n, s)) in pairs:
        psi0 = fs.basis_state(layout_ef, *occ)
        _, states = dyn.schrodinger_evolve(psi0, dev, sched, opts)
        ref = np.zeros(layout_ef.total_dim, dtype=complex)
        for (occ_r, (n_r, s_r)) in pairs:
            ref[layout_ef.index_of(*occ_r)] = u_ef[2 * n_r + s_r, 2 * n + s]
        worst = max(worst, _max_amp_dev(states[-1], ref))
    report["jc_ef"] = worst

    # detuned Rabi pair at n=0 against the general closed-form solution
    delta_ghz = -0.65
    knobs = dyn.ControlKnobs(0.0, 0.0, dev.omega_r + delta_ghz)
    t_rabi = 12.0
    sched = dyn.ControlSchedule((dyn.Segment(t_rabi, knobs),), "rabi-check")
    c0 = RabiAmplitudes(c_e_n=complex(math.cos(0.4)),
                        c_g_n1=complex(math.sin(0.4)), n=0,
                        g=g_chain, delta=dyn.ghz_to_angular(delta_ghz))
    psi0 = PureState(layout,
                     c0.c_e_n * fs.basis_state(layout, 0, 0, 0, "e").amplitudes
                     + c0.c_g_n1 * fs.basis_state(layout, 0, 1, 0, "g").amplitudes)
    _, states = dyn.schrodinger_evolve(psi0, dev, sched, opts)
    c_t = rabi_evolve(c0, t_rabi)
    ref = np.zeros(layout.total_dim, dtype=complex)
    ref[layout.index_of(0, 0, 0, "e")] = c_t.c_e_n
    ref[layout.index_of(0, 1, 0, "g")] = c_t.c_g_n1
    report["rabi_detuned"] = _max_amp_dev(states[-1], ref)

    return report
