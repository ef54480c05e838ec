import io
import json

import pytest

from models.trace import Direction, FlowTrace, PacketRecord, TcpFlag, flags_from_str, flags_to_str
from traffic.canonical import FIELDS, load_traces, read_canonical, save_traces, write_canonical
from traffic.flows import assemble_flows
from traffic.validate import assert_valid, packet_violations, validate_trace
from utils.errors import RoboTraceError, TraceFormatError


def packet(ts, direction=Direction.ControllerToRobot, payload=40, flags=TcpFlag.PSH | TcpFlag.ACK, seq=1000, ack=0):
    return PacketRecord(
        timestamp=ts,
        direction=direction,
        frame_len=14 + 20 + 32 + payload,
        frame_cap_len=14 + 20 + 32 + payload,
        ip_len=20 + 32 + payload,
        ip_hdr_len=20,
        tcp_payload_len=payload,
        tcp_hdr_len=32,
        tcp_flags=flags,
        seq=seq,
        ack=ack,
        window_size=65535,
        tls_record_len=payload,
        tls_record_count=1 if payload else 0,
    )


def roundtrip(traces):
    buffer = io.BytesIO()
    write_canonical(traces, buffer)
    buffer.seek(0)
    return read_canonical(buffer)


def test_flag_strings():
    assert flags_to_str(TcpFlag.PSH | TcpFlag.ACK) == "PA"
    assert flags_to_str(TcpFlag.SYN | TcpFlag.ACK) == "SA"
    assert flags_to_str(TcpFlag(0)) == ""
    for text in ("PA", "S", "FA", "R", ""):
        assert flags_to_str(flags_from_str(text)) == text
    with pytest.raises(ValueError):
        flags_from_str("PX")


def test_direction_codes():
    assert Direction.ControllerToRobot.code == 0
    assert Direction.RobotToController.code == 1
    assert Direction.ControllerToRobot.peer is Direction.RobotToController


def test_write_empty_sequence_is_header_only():
    buffer = io.BytesIO()
    written = write_canonical([], buffer)
    lines = buffer.getvalue().decode().splitlines()
    assert written == len(buffer.getvalue())
    assert len(lines) == 1
    assert json.loads(lines[0])["format"] == "robotrace-canonical"


def test_two_packet_flow_roundtrip():
    flow = FlowTrace("f1", "X", [packet(0.0), packet(0.08, Direction.RobotToController, ack=1040)])
    buffer = io.BytesIO()
    write_canonical([flow], buffer)
    lines = buffer.getvalue().decode().splitlines()
    assert len(lines) == 3
    assert list(json.loads(lines[1])) == list(FIELDS)
    assert roundtrip([flow]) == [flow]


def test_unlabeled_flow_writes_null_label():
    flow = FlowTrace("f1", None, [packet(0.0)])
    buffer = io.BytesIO()
    write_canonical([flow], buffer)
    line = json.loads(buffer.getvalue().decode().splitlines()[1])
    assert line["label"] is None
    assert line["tcp_flags"] == "PA"
    assert roundtrip([flow])[0].label is None


def test_emulated_flow_roundtrip_keeps_meta(flow):
    back = roundtrip([flow])[0]
    assert back == flow
    assert back.meta.first_command_ts == flow.meta.first_command_ts


def test_interleaved_lines_group_by_flow_and_sort():
    rows = []
    for flow_id, ts in (("a", 0.5), ("b", 0.0), ("a", 0.1), ("b", 0.2)):
        rows.append(json.dumps({
            "flow_id": flow_id, "label": "X", "ts": ts, "dir": "c2r", "frame_len": 60, "frame_cap_len": 60,
            "ip_len": 46, "ip_hdr_len": 20, "tcp_payload_len": 0, "tcp_hdr_len": 20, "tcp_flags": "A",
            "seq": 1, "ack": 2, "window_size": 100, "tls_record_len": 0, "tls_record_count": 0, "retx": False,
        }))
    traces = read_canonical(io.BytesIO(("\n".join(rows) + "\n").encode()))
    assert [t.flow_id for t in traces] == ["a", "b"]
    assert [p.timestamp for p in traces[0].packets] == [0.1, 0.5]
    assert len(traces[1].packets) == 2


def test_missing_field_names_field_and_line():
    buffer = io.BytesIO()
    write_canonical([FlowTrace("f1", "X", [packet(0.0), packet(1.0)])], buffer)
    lines = buffer.getvalue().decode().splitlines()
    broken = json.loads(lines[2])
    del broken["window_size"]
    lines[2] = json.dumps(broken)
    with pytest.raises(TraceFormatError, match=r"line 3: field 'window_size'"):
        read_canonical(io.BytesIO("\n".join(lines).encode()))


def test_malformed_json_names_line():
    with pytest.raises(TraceFormatError, match="line 2"):
        read_canonical(io.BytesIO(b'{"format": "robotrace-canonical", "version": 1, "flows": {}}\n{oops\n'))


def test_save_and_load_traces(tmp_path, flow):
    path = tmp_path / "traces.jsonl"
    save_traces([flow], path)
    assert load_traces(path) == [flow]
    with pytest.raises(RoboTraceError, match="file not found"):
        load_traces(tmp_path / "absent.jsonl")


def test_assemble_flows_without_split_point():
    flows = assemble_flows([packet(t) for t in (10.0, 11.0, 14.9)], idle_gap_s=5.0)
    assert len(flows) == 1
    assert [p.timestamp for p in flows[0].packets] == pytest.approx([0.0, 1.0, 4.9])


def test_assemble_flows_single_split_rebases_second_flow():
    flows = assemble_flows([packet(t) for t in (0.0, 1.0, 6.0, 6.5)], idle_gap_s=5.0)
    assert len(flows) == 2
    assert flows[1].packets[0].timestamp == 0.0
    assert flows[1].packets[1].timestamp == pytest.approx(0.5)
    assert sum(len(f.packets) for f in flows) == 4


def test_assemble_flows_empty_input():
    assert assemble_flows([]) == []


def test_validator_accepts_emulated_flow(flow, lossy_flow):
    assert validate_trace(flow) == []
    assert_valid([flow, lossy_flow])


def test_validator_reports_broken_invariants():
    bad = PacketRecord(
        timestamp=-1.0, direction=Direction.ControllerToRobot, frame_len=50, frame_cap_len=60, ip_len=40,
        ip_hdr_len=20, tcp_payload_len=10, tcp_hdr_len=20, tcp_flags=TcpFlag.ACK, seq=0, ack=0,
        window_size=0, tls_record_len=5, tls_record_count=0,
    )
    problems = packet_violations(bad)
    assert any("negative timestamp" in p for p in problems)
    assert any("frame_cap_len" in p for p in problems)
    assert any("ip_len 40 <" in p for p in problems)
    assert any("tls_record_count" in p for p in problems)
    with pytest.raises(TraceFormatError, match="invalid trace"):
        assert_valid([FlowTrace("bad", None, [bad])])


def test_validator_flags_empty_and_unordered_flows():
    assert validate_trace(FlowTrace("empty", None, [])) == ["empty: flow has no packets"]
    problems = validate_trace(FlowTrace("late", None, [packet(1.0), packet(0.5)]))
    assert problems == ["late[1]: timestamp 0.5 before 1.0"]
