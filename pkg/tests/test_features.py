import math

import numpy as np
import pytest

from emulator.robot import movement_duration
from emulator.session import emulate_session
from features.extract import build_matrix, extract_features, extract_many, first_row_index
from features.matrix import FEATURE_COLUMNS, FeatureMatrix, vocabulary
from models.robot import LinkParams, MovementClass, MovementProgram, RobotModel
from models.trace import UNKNOWN_LABEL, Direction, FlowTrace, PacketRecord, TcpFlag
from utils.errors import DatasetError, RoboTraceError

C2R = Direction.ControllerToRobot
R2C = Direction.RobotToController


def packet(ts, direction, payload, seq, ack, flags=TcpFlag.PSH | TcpFlag.ACK):
    return PacketRecord(
        timestamp=ts, direction=direction, frame_len=54 + payload, frame_cap_len=54 + payload,
        ip_len=40 + payload, ip_hdr_len=20, tcp_payload_len=payload, tcp_hdr_len=20, tcp_flags=flags,
        seq=seq, ack=ack, window_size=1000, tls_record_len=payload, tls_record_count=1 if payload else 0,
    )


def two_packet_flow(label="X"):
    return FlowTrace("two", label, [packet(0.0, C2R, 40, 1000, 5000), packet(0.08, R2C, 30, 5000, 1040)])


def test_two_packet_flow_hand_computation():
    first, second = extract_features(two_packet_flow())
    assert first.bytes_in_flight == 40
    assert first.inter_arrival_s == 0.0
    assert first.cum_bytes_same_dir == 40
    assert first.push_bytes_sent == 40
    assert first.ack_rtt_s == 0.0
    assert second.ack_rtt_s == pytest.approx(0.08)
    assert second.inter_arrival_s == pytest.approx(0.08)
    assert second.direction == 1
    assert second.cum_bytes_same_dir == 30


def test_push_bytes_accumulate_until_psh():
    flow = FlowTrace("push", "X", [
        packet(0.0, C2R, 100, 1, 0, flags=TcpFlag.ACK),
        packet(0.01, C2R, 50, 101, 0, flags=TcpFlag.ACK),
        packet(0.02, C2R, 10, 151, 0),
        packet(0.03, C2R, 7, 161, 0),
    ])
    assert [r.push_bytes_sent for r in extract_features(flow)] == [100, 150, 160, 7]


def test_handshake_only_flow_is_empty(flow):
    handshake = FlowTrace("hs", "X", [p for p in flow.packets if p.timestamp < flow.meta.first_command_ts], flow.meta)
    assert extract_features(handshake) == []
    matrix = build_matrix([handshake])
    assert matrix.n_rows == 0
    assert matrix.columns == list(FEATURE_COLUMNS)


def test_empty_flow_is_empty():
    assert extract_features(FlowTrace("e", "X", [])) == []


def test_synthetic_rows_skip_handshake(flow):
    rows = extract_features(flow)
    assert len(rows) == len(flow.packets) - 12
    assert rows[0].packet_time_s == 0.0
    assert rows[0].direction == 0
    assert all(r.label == "X" and r.flow_id == "fixture-flow" for r in rows)


def test_ingested_flow_uses_first_idle_gap():
    packets = [packet(t, C2R, 10, 1 + i * 10, 0) for i, t in enumerate((0.0, 0.01, 0.02, 1.0, 2.0))]
    flow = FlowTrace("ingested", None, packets)
    assert first_row_index(flow) == 3
    assert first_row_index(flow, handshake_gap_s=5.0) == 0
    rows = extract_features(flow)
    assert len(rows) == 2
    assert rows[0].label == UNKNOWN_LABEL


def test_inter_arrival_sums_to_flow_span(lossy_flow):
    rows = extract_features(lossy_flow)
    total = sum(r.inter_arrival_s for r in rows)
    assert total == pytest.approx(rows[-1].packet_time_s - rows[0].packet_time_s)


@pytest.mark.parametrize("movement", MovementClass.ordered())
def test_ack_rtt_closed_form_on_clean_flow(movement):
    program = MovementProgram(movement=movement, distance_mm=1, speed_code=25000, repetitions=5)
    flow = emulate_session(program, LinkParams(seed=6))
    rows = extract_features(flow)
    command, reply = rows[0], rows[1]
    factors = [RobotModel().axis_factors[a] for a in movement.axes]
    motion = movement_duration(math.sqrt(len(factors)), 25000) * sum(factors) / len(factors)
    expected = motion + (command.frame_len + reply.frame_len) * 8 / 100e6
    replies = [r for r in rows if r.direction == 1]
    assert len(replies) == program.repetitions
    for r in replies:
        assert r.ack_rtt_s == pytest.approx(expected, abs=1e-9)


def test_bytes_in_flight_matches_brute_force(lossy_flow):
    """Rescan from scratch: highest byte sent minus highest byte the peer acknowledged."""
    start = first_row_index(lossy_flow)
    rows = extract_features(lossy_flow)
    packets = lossy_flow.packets
    for offset, row in enumerate(rows):
        i = start + offset
        p = packets[i]
        own = [q for q in packets[: i + 1] if q.direction is p.direction]
        sent_max = max(q.seq + q.tcp_payload_len + (1 if q.has(TcpFlag.SYN) else 0) for q in own)
        acks = [q.ack for q in packets[: i + 1] if q.direction is not p.direction and q.has(TcpFlag.ACK)]
        acked = max(acks) if acks else own[0].seq
        unacked = max(0, sent_max - acked)
        assert 0 <= row.bytes_in_flight <= unacked


def test_build_matrix_counts_and_order():
    flows = [FlowTrace(f"f{i}", "Y", [packet(j * 0.01, C2R, 10, 1 + j * 10, 0) for j in range(4)]) for i in range(3)]
    matrix = build_matrix(flows)
    assert matrix.n_rows == 12
    assert list(dict.fromkeys(matrix.flow_ids)) == ["f0", "f1", "f2"]
    assert matrix.class_names == ["Y"]


def test_unlabeled_flow_rows_are_unknown():
    matrix = build_matrix([two_packet_flow(label=None)])
    assert set(matrix.labels) == {UNKNOWN_LABEL}


def test_empty_input_keeps_full_header():
    matrix = build_matrix([])
    assert matrix.n_rows == 0
    assert matrix.columns == list(FEATURE_COLUMNS)
    assert len(FEATURE_COLUMNS) == 16


def test_extract_many_matches_serial(flow, lossy_flow):
    serial = build_matrix([flow, lossy_flow, flow])
    parallel = extract_many([flow, lossy_flow, flow], workers=2)
    assert np.array_equal(serial.values, parallel.values)
    assert list(serial.flow_ids) == list(parallel.flow_ids)


def test_extraction_is_pure(lossy_flow):
    assert extract_features(lossy_flow) == extract_features(lossy_flow)


def test_vocabulary_order():
    assert vocabulary(["Unknown", "XYZ", "X", "Z"]) == ["X", "Z", "XYZ", "Unknown"]


def test_csv_round_trip_keeps_schema(tmp_path, flow):
    matrix = build_matrix([flow])
    path = tmp_path / "features.csv"
    matrix.write_csv(path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == list(FEATURE_COLUMNS) + ["label", "flow_id"]
    back = FeatureMatrix.read_csv(path)
    assert np.array_equal(back.values, matrix.values)
    assert list(back.labels) == list(matrix.labels)


def test_read_csv_errors(tmp_path):
    with pytest.raises(RoboTraceError, match="file not found"):
        FeatureMatrix.read_csv(tmp_path / "none.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(DatasetError, match="label"):
        FeatureMatrix.read_csv(bad)


def test_ragged_matrix_is_rejected():
    with pytest.raises(DatasetError, match="ragged"):
        FeatureMatrix(np.zeros((2, 16)), ["X"], ["f", "f"])


def test_payload_length_tracks_distance_digits():
    def command_len(distance):
        program = MovementProgram(movement=MovementClass.Y, distance_mm=distance, repetitions=1)
        return extract_features(emulate_session(program, LinkParams(seed=1)))[0].tcp_payload_len

    assert command_len(1) == command_len(5)
    assert command_len(1) < command_len(10)
