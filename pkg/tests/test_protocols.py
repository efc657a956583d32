import math

import numpy as np
import pytest

from busqed import analytic, protocols
from busqed.dynamics import DeviceParams
from busqed.errors import (
    AnharmonicityError,
    DegenerateScheduleError,
    InvalidParameterError,
    ScheduleVerificationError,
)
from busqed.fockspace import build_space

DEV = DeviceParams()
LAYOUT = build_space()


def test_transfer_schedule_durations():
    sched = protocols.state_transfer_schedule(DEV, g_op=50.0)
    assert [seg.duration for seg in sched.segments] == [5.0, 5.0]
    assert sched.total_duration == pytest.approx(10.0, abs=1e-12)
    # the coupler moves from r1 to r2 while the qutrit stays parked
    assert sched.segments[0].knobs.g1 == 50.0
    assert sched.segments[0].knobs.g2 == 0.0
    assert sched.segments[1].knobs.g1 == 0.0
    assert sched.segments[1].knobs.g2 == 50.0
    assert all(seg.knobs.omega_ge == 5.0 for seg in sched.segments)


def test_transfer_sign_plus_triples_second_leg():
    minus = protocols.state_transfer_schedule(DEV, variant="sign_minus")
    plus = protocols.state_transfer_schedule(DEV, variant="sign_plus")
    assert plus.segments[0].duration == minus.segments[0].duration
    assert plus.segments[1].duration == pytest.approx(
        3.0 * minus.segments[1].duration)


def test_transfer_schedule_rejections():
    with pytest.raises(DegenerateScheduleError):
        protocols.state_transfer_schedule(DEV, g_op=0.0)
    with pytest.raises(InvalidParameterError):
        protocols.state_transfer_schedule(DEV, g_op=60.0)
    with pytest.raises(InvalidParameterError):
        protocols.state_transfer_schedule(DEV, variant="sideways")


def test_cphase5_knob_table():
    sched = protocols.cphase_schedule_5step(DEV)
    rows = [(s.knobs.g1, s.knobs.g2, s.knobs.omega_ge) for s in sched.segments]
    assert rows == [
        (13.0, 0.0, 6.65),
        (0.0, 50.0, 5.0),
        (0.0, 0.0, 7.37),
        (0.0, 50.0, 5.0),
        (13.0, 0.0, 6.65),
    ]
    # step iii parks the e-f transition exactly on the bus
    assert rows[2][2] - DEV.delta == pytest.approx(DEV.omega_r)


def test_cphase5_durations():
    sched = protocols.cphase_schedule_5step(DEV)
    t_chain = 1000.0 / (2.0 * math.sqrt(2.0) * 13.0)
    t_ef = 500.0 / (math.sqrt(2.0) * 13.0)
    durations = [seg.duration for seg in sched.segments]
    assert durations[0] == pytest.approx(t_chain, rel=1e-12)
    assert durations[1] == pytest.approx(5.0, rel=1e-12)
    assert durations[2] == pytest.approx(t_ef, rel=1e-12)
    # the chain transfer and the e-f pi pulse take the same time because
    # the e-f coupling is sqrt(2) times the g-e one
    assert durations[0] == pytest.approx(durations[2], rel=1e-12)
    assert abs(sched.total_duration - 91.5) <= 0.1


def test_cphase5_rejections():
    with pytest.raises(AnharmonicityError):
        protocols.cphase_schedule_5step(DEV, step3_omega_ge=7.0)
    with pytest.raises(DegenerateScheduleError):
        protocols.cphase_schedule_5step(DeviceParams(g_ge=0.0))
    with pytest.raises(InvalidParameterError):
        protocols.cphase_schedule_5step(DeviceParams(g_ge=55.0))


def test_cphase7_knob_table_and_durations():
    sched = protocols.cphase_schedule_7step(DEV, layout=LAYOUT)
    rows = [(s.knobs.g1, s.knobs.g2, s.knobs.omega_ge) for s in sched.segments]
    assert rows == [
        (50.0, 0.0, 5.0),
        (0.0, 0.0, 6.65),
        (0.0, 50.0, 5.0),
        (0.0, 0.0, 7.37),
        (0.0, 50.0, 5.0),
        (0.0, 0.0, 6.65),
        (50.0, 0.0, 5.0),
    ]
    durations = [seg.duration for seg in sched.segments]
    assert durations[0] == durations[2] == durations[4] == durations[6] == 5.0
    assert durations[1] == pytest.approx(250.0 / 13.0, rel=1e-12)
    assert durations[3] == pytest.approx(500.0 / (math.sqrt(2) * 13.0),
                                         rel=1e-12)


def test_cphase7_veto_of_bad_durations():
    good = protocols.cphase_schedule_7step(DEV, layout=LAYOUT)
    durations = [seg.duration for seg in good.segments]
    with pytest.raises(ScheduleVerificationError):
        protocols.cphase_schedule_7step(
            DEV, durations=(0.0,) + tuple(durations[1:]), layout=LAYOUT)
    with pytest.raises(ScheduleVerificationError):
        protocols.cphase_schedule_7step(DEV, durations=(5.0,) * 7,
                                        layout=LAYOUT)


@pytest.mark.parametrize("kind,angles", [
    ("state_transfer", dict(theta=0.61)),
    ("state_transfer", dict(theta=2.2)),
    ("cphase_5step", dict(theta1=0.53, theta2=1.1)),
    ("cphase_7step", dict(theta1=2.9, theta2=0.17)),
])
def test_ideal_composition_reaches_ideal_final_state(kind, angles):
    proto = protocols.ProtocolSpec(kind, **angles)
    sched = proto.schedule(DEV)
    u = analytic.compose_schedule_unitary(DEV, sched, LAYOUT)
    psi_out = u @ proto.initial_state(LAYOUT).amplitudes
    ideal = proto.ideal_final_state(LAYOUT).amplitudes
    fidelity = abs(np.vdot(ideal, psi_out)) ** 2
    assert fidelity >= 1.0 - 1e-10


@pytest.mark.parametrize("factory", [
    protocols.cphase_schedule_5step,
    lambda dev: protocols.cphase_schedule_7step(dev, layout=LAYOUT),
])
def test_cphase_ideal_action_is_the_logical_gate(factory):
    sched = factory(DEV)
    assert protocols.ideal_action_deviation(DEV, sched, LAYOUT) <= 1e-10


def test_cphase_matrix_squares_to_identity():
    u = protocols.cphase_logical_matrix()
    assert np.array_equal(u @ u, np.eye(4))
    assert np.array_equal(np.diag(u), protocols.CPHASE_DIAG)


def test_initial_state_amplitudes():
    theta = math.pi / 4
    psi = protocols.initial_state("state_transfer", theta=theta,
                                  layout=LAYOUT)
    amps = psi.amplitudes
    assert amps[LAYOUT.index_of(0, 0, 0, "g")] == pytest.approx(
        math.cos(theta))
    assert amps[LAYOUT.index_of(1, 0, 0, "g")] == pytest.approx(
        math.sin(theta))
    psi = protocols.initial_state("cphase", theta1=theta, theta2=theta,
                                  layout=LAYOUT)
    logical = psi.amplitudes[protocols.logical_indices(LAYOUT)]
    assert np.allclose(logical, 0.5)
    vac = protocols.initial_state("state_transfer", theta=0.0, layout=LAYOUT)
    assert np.linalg.norm(vac.amplitudes) == pytest.approx(1.0)
    assert vac.amplitudes[LAYOUT.index_of(0, 0, 0, "g")] == 1.0


def test_ideal_final_state_signs():
    theta = 0.9
    minus = protocols.ideal_final_state("state_transfer", theta=theta,
                                        variant="sign_minus", layout=LAYOUT)
    plus = protocols.ideal_final_state("state_transfer", theta=theta,
                                       variant="sign_plus", layout=LAYOUT)
    idx = LAYOUT.index_of(0, 0, 1, "g")
    assert minus.amplitudes[idx] == pytest.approx(-math.sin(theta))
    assert plus.amplitudes[idx] == pytest.approx(math.sin(theta))
    final = protocols.ideal_final_state("cphase", theta1=0.7, theta2=1.3,
                                        layout=LAYOUT)
    signs = np.sign(final.amplitudes[protocols.logical_indices(LAYOUT)].real)
    assert list(signs) == [1.0, -1.0, 1.0, 1.0]


def test_protocol_spec_validation():
    with pytest.raises(InvalidParameterError):
        protocols.ProtocolSpec("bell_pair")
    with pytest.raises(InvalidParameterError):
        protocols.ProtocolSpec("state_transfer", theta=float("inf"))
    with pytest.raises(InvalidParameterError):
        protocols.initial_state("cphase", theta1=0.3, layout=LAYOUT)
