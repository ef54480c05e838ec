import io
import socket
import struct

import dpkt
import pytest

from models.trace import Direction, TcpFlag
from tests.conftest import CONTROLLER_IP, ROBOT_IP, pcap_bytes, tcp_frame, tls_record
from traffic.pcap import parse_pcap
from traffic.tls import scan_records
from traffic.validate import packet_violations
from utils.errors import PcapFormatError

SYN, SYN_ACK, ACK, PSH_ACK = 0x02, 0x12, 0x10, 0x18


def udp_frame() -> bytes:
    # Same layout as a TCP frame with protocol 17 in the IP header
    return tcp_frame(proto=17)


def session_frames():
    return [
        (1.0, tcp_frame(seq=100, flags=SYN)),
        (1.001, tcp_frame(src=ROBOT_IP, dst=CONTROLLER_IP, sport=8883, dport=40000, seq=500, ack=101, flags=SYN_ACK)),
        (1.002, tcp_frame(seq=101, ack=501, flags=ACK)),
        (2.0, tcp_frame(seq=101, ack=501, payload=tls_record(40))),
        (2.1, tcp_frame(src=ROBOT_IP, dst=CONTROLLER_IP, sport=8883, dport=40000, seq=501, ack=146,
                        payload=tls_record(30))),
    ]


def test_little_endian_capture():
    capture = parse_pcap(pcap_bytes(session_frames(), endian="<"))
    assert capture.byte_order == "little"
    assert len(capture.packets) == 5
    assert capture.skipped_count == 0


def test_big_endian_capture_matches_little_endian():
    little = parse_pcap(pcap_bytes(session_frames(), endian="<"))
    big = parse_pcap(pcap_bytes(session_frames(), endian=">"))
    assert big.byte_order == "big"
    assert big.packets == little.packets


def test_nanosecond_timestamps():
    capture = parse_pcap(pcap_bytes([(3.000000123, tcp_frame(flags=SYN))], nanosecond=True))
    assert capture.nanosecond
    assert capture.packets[0].timestamp == pytest.approx(3.000000123, abs=1e-9)


def test_accepts_a_binary_stream():
    assert len(parse_pcap(io.BytesIO(pcap_bytes(session_frames()))).packets) == 5


def test_udp_frames_are_skipped_and_counted():
    frames = [(i * 0.1, tcp_frame(seq=1000 + i * 10, payload=b"x" * 10)) for i in range(10)]
    frames += [(1.0 + i * 0.1, udp_frame()) for i in range(3)]
    capture = parse_pcap(pcap_bytes(frames))
    assert len(capture.packets) == 10
    assert capture.skipped_count == 3


def test_non_ipv4_ethertype_is_skipped():
    arp = b"\xff" * 12 + struct.pack("!H", 0x0806) + b"\x00" * 28
    capture = parse_pcap(pcap_bytes([(0.0, arp), (0.1, tcp_frame(flags=SYN))]))
    assert capture.skipped_count == 1
    assert len(capture.packets) == 1


def test_truncated_frame_is_counted():
    capture = parse_pcap(pcap_bytes([(0.0, b"\x00" * 10), (0.1, tcp_frame(flags=SYN))]))
    assert capture.truncated_count == 1
    assert len(capture.packets) == 1


def test_cut_off_record_is_counted_as_truncated():
    data = pcap_bytes([(0.0, tcp_frame(flags=SYN)), (0.1, tcp_frame(seq=1, flags=ACK))])
    capture = parse_pcap(data[:-5])
    assert capture.truncated_count == 1
    assert len(capture.packets) == 1


def test_vlan_tagged_frame():
    capture = parse_pcap(pcap_bytes([(0.0, tcp_frame(vlan=True, payload=tls_record(40)))]))
    p = capture.packets[0]
    assert p.tcp_payload_len == 45
    assert p.frame_len == 14 + 4 + 20 + 20 + 45


def test_tcp_options_frame_built_with_dpkt():
    payload = tls_record(40)
    tcp = dpkt.tcp.TCP(sport=40000, dport=8883, seq=7, ack=9, off=6, flags=dpkt.tcp.TH_PUSH | dpkt.tcp.TH_ACK,
                       win=1000, opts=b"\x02\x04\x05\xb4", data=payload)
    ip = dpkt.ip.IP(src=socket.inet_aton(CONTROLLER_IP), dst=socket.inet_aton(ROBOT_IP), p=dpkt.ip.IP_PROTO_TCP,
                    len=20 + 24 + len(payload), data=tcp)
    eth = dpkt.ethernet.Ethernet(src=b"\x02" * 6, dst=b"\x04" * 6, type=dpkt.ethernet.ETH_TYPE_IP, data=ip)
    capture = parse_pcap(pcap_bytes([(0.0, bytes(eth))]))
    p = capture.packets[0]
    assert p.tcp_hdr_len == 24
    assert p.tcp_payload_len == 45
    assert p.seq == 7 and p.window_size == 1000
    assert p.tls_record_len == 40


def test_non_first_fragment_is_skipped():
    frame = bytearray(tcp_frame(payload=b"x" * 10))
    struct.pack_into("!H", frame, 14 + 6, 0x0010)
    capture = parse_pcap(pcap_bytes([(0.0, bytes(frame)), (0.1, tcp_frame(flags=SYN))]))
    assert capture.skipped_count == 1
    assert len(capture.packets) == 1


def test_pcapng_is_rejected_explicitly():
    with pytest.raises(PcapFormatError, match="pcapng unsupported"):
        parse_pcap(struct.pack("<I", 0x0A0D0D0A) + b"\x00" * 40)


def test_bad_magic_is_unsupported_format():
    with pytest.raises(PcapFormatError, match="bad magic"):
        parse_pcap(b"\x00\x01\x02\x03" + b"\x00" * 40)


def test_non_ethernet_link_type_is_rejected():
    with pytest.raises(PcapFormatError, match="link type 101"):
        parse_pcap(pcap_bytes([], link_type=101))


def test_empty_capture_has_no_packets():
    capture = parse_pcap(pcap_bytes([]))
    assert capture.packets == []
    assert capture.controller is None


def test_fields_and_direction_from_first_syn():
    capture = parse_pcap(pcap_bytes(session_frames()))
    assert capture.controller == CONTROLLER_IP
    directions = [p.direction for p in capture.packets]
    assert directions == [
        Direction.ControllerToRobot,
        Direction.RobotToController,
        Direction.ControllerToRobot,
        Direction.ControllerToRobot,
        Direction.RobotToController,
    ]
    data = capture.packets[3]
    assert data.tcp_flags == TcpFlag.PSH | TcpFlag.ACK
    assert data.ip_hdr_len == 20
    assert data.tcp_hdr_len == 20
    assert data.tcp_payload_len == 45
    assert data.ip_len == 85
    assert data.frame_len == data.frame_cap_len == 99
    assert data.seq == 101
    assert data.ack == 501
    assert data.window_size == 65535


def test_explicit_controller_overrides_direction():
    capture = parse_pcap(pcap_bytes(session_frames()), controller=ROBOT_IP)
    assert capture.packets[0].direction is Direction.RobotToController


def test_snap_length_shortens_capture_length():
    frame = tcp_frame(payload=tls_record(200))
    capture = parse_pcap(pcap_bytes([(0.0, frame[:96], len(frame))], snaplen=96))
    p = capture.packets[0]
    assert p.frame_len == len(frame)
    assert p.frame_cap_len == 96
    assert p.tcp_payload_len == 205
    assert p.tls_record_len == 200


def test_tls_record_header_decode():
    capture = parse_pcap(pcap_bytes([(0.0, tcp_frame(payload=tls_record(0x0123)))]))
    p = capture.packets[0]
    assert p.tls_record_len == 0x0123
    assert p.tls_record_count >= 1


def test_multiple_records_are_counted():
    payload = tls_record(6, content_type=20) + tls_record(40, content_type=22)
    framing = scan_records(payload)
    assert framing.record_len == 6
    assert framing.record_count == 2


def test_non_tls_payload_has_no_framing():
    assert scan_records(b"GET / HTTP/1.1\r\n").record_count == 0
    assert scan_records(b"\x17\x03\x05\x00\x10").record_len == 0
    assert scan_records(b"\x17\x03").record_len == 0


def test_empty_record_has_no_framing():
    assert scan_records(b"\x17\x03\x03\x00\x00") == (0, 0)


def test_empty_record_is_stepped_over():
    payload = tls_record(0, content_type=20) + tls_record(40)
    assert scan_records(payload) == (40, 1)


def test_empty_record_packet_passes_validation():
    capture = parse_pcap(pcap_bytes([(0.0, tcp_frame(payload=tls_record(0)))]))
    p = capture.packets[0]
    assert (p.tls_record_len, p.tls_record_count) == (0, 0)
    assert packet_violations(p) == []


def test_retransmission_detected_on_repeated_segment():
    frames = [
        (0.0, tcp_frame(seq=100, payload=b"a" * 20)),
        (0.1, tcp_frame(seq=120, payload=b"b" * 20)),
        (0.3, tcp_frame(seq=100, payload=b"a" * 20)),
    ]
    capture = parse_pcap(pcap_bytes(frames))
    assert [p.is_retransmission for p in capture.packets] == [False, False, True]


def test_parse_is_deterministic():
    data = pcap_bytes(session_frames())
    assert parse_pcap(data).packets == parse_pcap(data).packets
