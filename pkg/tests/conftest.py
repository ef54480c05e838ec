import os
import struct
import tempfile

# Point the run registry at a throwaway database before anything imports db.init
os.environ["RUN_DATABASE_URL"] = f"sqlite:///{tempfile.mkdtemp(prefix='robotrace-test-')}/runs.db"

import pytest  # noqa: E402

from emulator.session import emulate_session  # noqa: E402
from models.robot import LinkParams, MovementClass, MovementProgram, TlsChannelModel  # noqa: E402

CONTROLLER_IP = "10.0.0.1"
ROBOT_IP = "10.0.0.2"


def ip_bytes(address: str) -> bytes:
    return bytes(int(part) for part in address.split("."))


def tcp_frame(src=CONTROLLER_IP, dst=ROBOT_IP, sport=40000, dport=8883, seq=0, ack=0, flags=0x18,
              window=65535, payload=b"", vlan=False, proto=6) -> bytes:
    """Ethernet II / IPv4 / TCP frame with a 20-byte TCP header and no options."""
    tcp = struct.pack("!HHIIHHHH", sport, dport, seq, ack, (5 << 12) | flags, window, 0, 0)
    ip_len = 20 + len(tcp) + len(payload)
    ip = struct.pack("!BBHHHBBH4s4s", 0x45, 0, ip_len, 0, 0x4000, 64, proto, 0, ip_bytes(src), ip_bytes(dst))
    eth = b"\x02" * 6 + b"\x04" * 6
    if vlan:
        eth += struct.pack("!HH", 0x8100, 10)
    eth += struct.pack("!H", 0x0800)
    return eth + ip + tcp + payload


def tls_record(length: int, content_type: int = 23) -> bytes:
    return struct.pack("!BHH", content_type, 0x0303, length) + b"\xaa" * length


def pcap_bytes(frames, endian="<", nanosecond=False, link_type=1, snaplen=65535) -> bytes:
    """frames: iterable of (timestamp, frame bytes) or (timestamp, frame bytes, orig_len)."""
    magic = 0xA1B23C4D if nanosecond else 0xA1B2C3D4
    out = struct.pack(endian + "IHHiIII", magic, 2, 4, 0, 0, snaplen, link_type)
    scale = 1_000_000_000 if nanosecond else 1_000_000
    for item in frames:
        ts, frame = item[0], item[1]
        orig_len = item[2] if len(item) > 2 else len(frame)
        sec = int(ts)
        frac = int(round((ts - sec) * scale))
        out += struct.pack(endian + "IIII", sec, frac, len(frame), orig_len) + frame
    return out


@pytest.fixture
def make_pcap():
    return pcap_bytes


@pytest.fixture
def make_frame():
    return tcp_frame


@pytest.fixture
def program():
    return MovementProgram(movement=MovementClass.X, distance_mm=1, speed_code=25000, repetitions=5)


@pytest.fixture
def flow(program):
    return emulate_session(program, LinkParams(seed=11), TlsChannelModel(), flow_id="fixture-flow")


@pytest.fixture
def lossy_flow(program):
    return emulate_session(program, LinkParams(delay_ms=10, loss_pct=25, seed=3), TlsChannelModel(), flow_id="lossy")
