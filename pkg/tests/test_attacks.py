import pytest

from mgcps.attacks import (
    NO_ATTACK,
    AttackSpec,
    AttackSpecError,
    CommandInjection,
    MeasurementInjection,
    SequenceOverride,
    inject_phantom_command,
    tamper_downlink,
    tamper_uplink,
)
from mgcps.fixtures import (
    SCENARIO1_ONSET,
    TAMPER_MAGNITUDE_PU,
    TAMPERED_SEQUENCE_ANGLES,
    scenario1_attack,
    scenario2_attack,
)
from mgcps.messages import ControlCommand, Measurement
from mgcps.phasors import Phasor, ThreePhase, to_sequence, quantize_sequence


def make_measurement(source="load2", cycle=1, magnitude=0.81, angle=116.3):
    current = ThreePhase.balanced(magnitude, angle)
    voltage = ThreePhase.balanced(401.0, 0.0)
    return Measurement(
        source=source,
        source_index=3,
        cycle=cycle,
        voltage=voltage,
        current=current,
        voltage_seq=quantize_sequence(to_sequence(voltage)),
        current_seq=quantize_sequence(to_sequence(current)),
        perception_ts=100,
    )


def test_uplink_identity_without_matching_injection():
    m = make_measurement(cycle=5)
    assert tamper_uplink(m, NO_ATTACK, 5) is m
    spec = scenario1_attack(0.81)
    assert tamper_uplink(m, spec, 5) is m  # before the window
    other = make_measurement(source="load1", cycle=12)
    assert tamper_uplink(other, spec, 12) is other  # different target


def test_uplink_applies_fixture_values_at_onset():
    spec = scenario1_attack(0.81)
    m = make_measurement(cycle=SCENARIO1_ONSET)
    tampered = tamper_uplink(m, spec, SCENARIO1_ONSET)
    neg_angle, zero_angle = TAMPERED_SEQUENCE_ANGLES[SCENARIO1_ONSET]
    expected_mag = TAMPER_MAGNITUDE_PU * 0.81
    assert tampered.current_seq.negative.magnitude == pytest.approx(expected_mag)
    assert tampered.current_seq.negative.angle_deg == neg_angle
    assert tampered.current_seq.zero.angle_deg == zero_angle
    # untouched fields
    assert tampered.voltage == m.voltage
    assert tampered.perception_ts == m.perception_ts
    # positive sequence keeps the measured value
    assert tampered.current_seq.positive == m.current_seq.positive


def test_tampered_measurement_is_self_consistent():
    spec = scenario1_attack(0.81)
    for cycle in TAMPERED_SEQUENCE_ANGLES:
        tampered = tamper_uplink(make_measurement(cycle=cycle), spec, cycle)
        recomputed = to_sequence(tampered.current)
        for got, declared in (
            (recomputed.negative, tampered.current_seq.negative),
            (recomputed.zero, tampered.current_seq.zero),
        ):
            assert abs(got.magnitude - declared.magnitude) <= 1e-4
            assert abs(got.angle_deg - declared.angle_deg) <= 1e-2


def make_command(value="closed", target="load2"):
    return ControlCommand(
        target=target,
        capability="breaker",
        value=value,
        cycle=15,
        issue_ts=700,
        issuing_node="agent4",
    )


def test_downlink_identity_cases():
    cmd = make_command()
    assert tamper_downlink(cmd, NO_ATTACK, 15) == cmd
    inert = AttackSpec(
        command_injections=(
            CommandInjection(target="setpoint-node", start_cycle=1,
                             capability="setpoint", setpoint_delta=0.0),
        )
    )
    setpoint = ControlCommand("setpoint-node", "setpoint", 1.0, 1, 10, "agent1")
    assert tamper_downlink(setpoint, inert, 5).value == 1.0


def test_downlink_overrides_discrete_value():
    spec = scenario2_attack()
    cmd = make_command(value="closed")
    applied = tamper_downlink(cmd, spec, 15)
    assert applied.value == "open"
    assert cmd.value == "closed"  # issued record is untouched
    before_onset = tamper_downlink(cmd, spec, 14)
    assert before_onset == cmd


def test_downlink_additive_setpoint():
    spec = AttackSpec(
        command_injections=(
            CommandInjection(target="dg1", start_cycle=1,
                             capability="setpoint", setpoint_delta=0.25),
        )
    )
    cmd = ControlCommand("dg1", "setpoint", 1.0, 2, 10, "agent1")
    assert tamper_downlink(cmd, spec, 2).value == pytest.approx(1.25)


def test_phantom_commands():
    assert inject_phantom_command(NO_ATTACK, 20) == ()
    spec = scenario2_attack()
    assert inject_phantom_command(spec, 14) == ()
    phantoms = inject_phantom_command(spec, 15, issue_ts=900)
    assert len(phantoms) == 1
    assert phantoms[0].target == "load2"
    assert phantoms[0].value == "open"
    assert phantoms[0].issuing_node is None
    assert phantoms[0].issue_ts == 900
    # a covered channel emits nothing
    assert inject_phantom_command(spec, 15, covered={("load2", "breaker")}) == ()


def test_phantoms_for_two_distinct_actuators():
    spec = AttackSpec(
        command_injections=(
            CommandInjection(target="load1", start_cycle=5, override_value="open"),
            CommandInjection(target="load3", start_cycle=5, override_value="open"),
        )
    )
    phantoms = inject_phantom_command(spec, 6)
    assert [p.target for p in phantoms] == ["load1", "load3"]


def test_overlapping_measurement_windows_rejected():
    override = SequenceOverride(negative=Phasor(0.3, 10.0))
    with pytest.raises(AttackSpecError):
        AttackSpec(
            measurement_injections=(
                MeasurementInjection("load2", 5, 10, {7: override}),
                MeasurementInjection("load2", 8, None, {9: override}),
            )
        )
    # distinct targets may overlap freely
    AttackSpec(
        measurement_injections=(
            MeasurementInjection("load1", 5, 10, {7: override}),
            MeasurementInjection("load2", 8, None, {9: override}),
        )
    )


def test_same_actuator_twice_rejected():
    with pytest.raises(AttackSpecError):
        AttackSpec(
            command_injections=(
                CommandInjection(target="load2", start_cycle=1, override_value="open"),
                CommandInjection(target="load2", start_cycle=9, override_value="open"),
            )
        )


def test_injection_field_validation():
    with pytest.raises(AttackSpecError):
        MeasurementInjection("load2", 10, 5)
    with pytest.raises(AttackSpecError):
        CommandInjection(target="load2", start_cycle=1,
                         setpoint_delta=1.0, override_value="open")
