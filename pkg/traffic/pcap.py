"""
Classic pcap ingestion (Ethernet II / IPv4 / TCP only).
"""
import logging
import socket
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Dict, List, Optional, Tuple, Union

import dpkt

from models.trace import Direction, PacketRecord, TcpFlag
from traffic.tls import scan_records
from utils.errors import PcapFormatError

logger = logging.getLogger(__name__)

MAGIC_USEC = 0xA1B2C3D4
MAGIC_NSEC = 0xA1B23C4D
PCAPNG_MAGIC = 0x0A0D0D0A
LINKTYPE_ETHERNET = 1

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
ETH_HEADER_LEN = 14
VLAN_TAG_LEN = 4
IP_MIN_HEADER_LEN = 20
TCP_MIN_HEADER_LEN = 20
SEQ_MOD = 1 << 32


@dataclass
class PcapCapture:
    packets: List[PacketRecord] = field(default_factory=list)
    skipped_count: int = 0
    truncated_count: int = 0
    byte_order: str = "little"
    snaplen: int = 65535
    link_type: int = LINKTYPE_ETHERNET
    nanosecond: bool = False
    controller: Optional[str] = None


def _seq_after(a: int, b: int) -> bool:
    """a > b in 32-bit serial number arithmetic."""
    return 0 < ((a - b) % SEQ_MOD) < (SEQ_MOD >> 1)


def _read_global_header(data: bytes) -> Tuple[str, bool, int, int]:
    if len(data) < 4:
        raise PcapFormatError("unsupported format: file shorter than a pcap magic number")
    magic_be = struct.unpack(">I", data[:4])[0]
    if magic_be == PCAPNG_MAGIC:
        raise PcapFormatError("pcapng unsupported: convert the capture to classic pcap first")
    magic_le = struct.unpack("<I", data[:4])[0]
    if magic_le in (MAGIC_USEC, MAGIC_NSEC):
        endian, nanosecond = "<", magic_le == MAGIC_NSEC
    elif magic_be in (MAGIC_USEC, MAGIC_NSEC):
        endian, nanosecond = ">", magic_be == MAGIC_NSEC
    else:
        raise PcapFormatError(f"unsupported format: bad magic 0x{magic_be:08x}")
    if len(data) < GLOBAL_HEADER_LEN:
        raise PcapFormatError("unsupported format: truncated global header")
    _, _, _, _, _, snaplen, network = struct.unpack(endian + "IHHiIII", data[:GLOBAL_HEADER_LEN])
    if network != LINKTYPE_ETHERNET:
        raise PcapFormatError(f"unsupported link type {network} (only Ethernet II)")
    return endian, nanosecond, snaplen, network


class _Frame:
    __slots__ = ("ts", "src", "dst", "sport", "dport", "frame_len", "cap_len", "ip_len", "ip_hdr_len",
                 "tcp_hdr_len", "payload_len", "flags", "seq", "ack", "window", "payload")


def _decode_frame(frame: bytes, ts: float, orig_len: int) -> Union[_Frame, str]:
    """Return the decoded TCP frame, or "skip"/"truncated"."""
    try:
        eth = dpkt.ethernet.Ethernet(frame)
    except dpkt.UnpackError:
        return "truncated"
    if eth.type != dpkt.ethernet.ETH_TYPE_IP:
        return "skip"
    ip = eth.data
    if not isinstance(ip, dpkt.ip.IP):
        return "truncated" if len(ip) < IP_MIN_HEADER_LEN else "skip"
    if ip.v != 4 or ip.p != dpkt.ip.IP_PROTO_TCP:
        return "skip"
    if ip.off & dpkt.ip.IP_OFFMASK:
        # Non-first fragment carries no TCP header
        return "skip"
    tcp = ip.data
    if not isinstance(tcp, dpkt.tcp.TCP):
        return "truncated" if len(tcp) < TCP_MIN_HEADER_LEN else "skip"
    ip_start = ETH_HEADER_LEN + VLAN_TAG_LEN * len(getattr(eth, "vlan_tags", []))
    ip_hdr_len = ip.hl * 4
    tcp_hdr_len = tcp.off * 4
    payload_len = ip.len - ip_hdr_len - tcp_hdr_len
    if payload_len < 0 or orig_len < ip_start + ip.len:
        # Header lengths that contradict each other
        return "skip"
    f = _Frame()
    f.ts = ts
    f.src = socket.inet_ntoa(ip.src)
    f.dst = socket.inet_ntoa(ip.dst)
    f.sport, f.dport = tcp.sport, tcp.dport
    # Ethernet framing (incl. VLAN tags) plus IP length; padding to 60 bytes stays in frame_len
    f.frame_len = orig_len
    f.cap_len = len(frame)
    f.ip_len, f.ip_hdr_len, f.tcp_hdr_len, f.payload_len = ip.len, ip_hdr_len, tcp_hdr_len, payload_len
    f.flags = TcpFlag(tcp.flags & 0x1F)
    f.seq, f.ack, f.window = tcp.seq, tcp.ack, tcp.win
    f.payload = bytes(tcp.data)
    return f


def parse_pcap(source: Union[BinaryIO, bytes], controller: Optional[str] = None) -> PcapCapture:
    """Parse a classic pcap capture into PacketRecords.

    The controller endpoint (an IPv4 address) decides direction. When not
    given it is the sender of the first SYN, or of the first TCP packet.
    """
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    endian, nanosecond, snaplen, link_type = _read_global_header(data)
    capture = PcapCapture(
        byte_order="little" if endian == "<" else "big",
        snaplen=snaplen,
        link_type=link_type,
        nanosecond=nanosecond,
    )
    divisor = 1e9 if nanosecond else 1e6

    frames: List[_Frame] = []
    offset = GLOBAL_HEADER_LEN
    record = struct.Struct(endian + "IIII")
    while offset < len(data):
        if len(data) - offset < RECORD_HEADER_LEN:
            capture.truncated_count += 1
            break
        ts_sec, ts_frac, incl_len, orig_len = record.unpack_from(data, offset)
        offset += RECORD_HEADER_LEN
        if len(data) - offset < incl_len:
            capture.truncated_count += 1
            break
        frame = data[offset:offset + incl_len]
        offset += incl_len
        decoded = _decode_frame(frame, ts_sec + ts_frac / divisor, max(orig_len, incl_len))
        if decoded == "skip":
            capture.skipped_count += 1
        elif decoded == "truncated":
            capture.truncated_count += 1
        else:
            frames.append(decoded)

    if controller is None and frames:
        syn = next((f for f in frames if f.flags & TcpFlag.SYN and not f.flags & TcpFlag.ACK), frames[0])
        controller = syn.src
    capture.controller = controller

    highest: Dict[Tuple[str, int, str, int], int] = {}
    for f in frames:
        key = (f.src, f.sport, f.dst, f.dport)
        consumed = f.payload_len + (1 if f.flags & (TcpFlag.SYN | TcpFlag.FIN) else 0)
        seq_end = (f.seq + consumed) % SEQ_MOD
        retx = False
        if consumed:
            if key in highest and not _seq_after(seq_end, highest[key]):
                retx = True
            else:
                highest[key] = seq_end
        framing = scan_records(f.payload)
        capture.packets.append(
            PacketRecord(
                timestamp=f.ts,
                direction=Direction.ControllerToRobot if f.src == controller else Direction.RobotToController,
                frame_len=f.frame_len,
                frame_cap_len=f.cap_len,
                ip_len=f.ip_len,
                ip_hdr_len=f.ip_hdr_len,
                tcp_payload_len=f.payload_len,
                tcp_hdr_len=f.tcp_hdr_len,
                tcp_flags=f.flags,
                seq=f.seq,
                ack=f.ack,
                window_size=f.window,
                tls_record_len=framing.record_len,
                tls_record_count=framing.record_count,
                is_retransmission=retx,
            )
        )

    if capture.skipped_count or capture.truncated_count:
        logger.warning(
            f"pcap: skipped {capture.skipped_count} non-TCP/IPv4 frames, {capture.truncated_count} truncated"
        )
    logger.info(f"pcap: {len(capture.packets)} TCP packets, controller {controller}")
    return capture
