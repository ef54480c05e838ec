"""
Canonical JSON-lines trace format.

Line 1 is a header object; every following line is one packet:

    {"format": "robotrace-canonical", "version": 1, "fields": [...],
     "flows": {"<flow_id>": {"label": ..., "meta": ...}, ...}}
    {"flow_id": ..., "label": ..., "ts": ..., "dir": "c2r", ..., "retx": false}

Flow metadata rides in the header so a write/read round trip is lossless.
"""
import io
import json
import logging
from typing import BinaryIO, Dict, Iterable, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from models.trace import Direction, FlowMeta, FlowTrace, PacketRecord, flags_from_str, flags_to_str
from utils.errors import RoboTraceError, TraceFormatError
from utils.files import atomic_write

logger = logging.getLogger(__name__)

FORMAT_NAME = "robotrace-canonical"
FORMAT_VERSION = 1
FIELDS = (
    "flow_id",
    "label",
    "ts",
    "dir",
    "frame_len",
    "frame_cap_len",
    "ip_len",
    "ip_hdr_len",
    "tcp_payload_len",
    "tcp_hdr_len",
    "tcp_flags",
    "seq",
    "ack",
    "window_size",
    "tls_record_len",
    "tls_record_count",
    "retx",
)


class CanonicalLine(BaseModel):
    model_config = ConfigDict(extra="forbid")

    flow_id: str
    label: Optional[str]
    ts: float
    dir: Literal["c2r", "r2c"]
    frame_len: int
    frame_cap_len: int
    ip_len: int
    ip_hdr_len: int
    tcp_payload_len: int
    tcp_hdr_len: int
    tcp_flags: str
    seq: int
    ack: int
    window_size: int
    tls_record_len: int
    tls_record_count: int
    retx: bool


def packet_line(flow_id: str, label: Optional[str], p: PacketRecord) -> Dict:
    return {
        "flow_id": flow_id,
        "label": label,
        "ts": p.timestamp,
        "dir": p.direction.value,
        "frame_len": p.frame_len,
        "frame_cap_len": p.frame_cap_len,
        "ip_len": p.ip_len,
        "ip_hdr_len": p.ip_hdr_len,
        "tcp_payload_len": p.tcp_payload_len,
        "tcp_hdr_len": p.tcp_hdr_len,
        "tcp_flags": flags_to_str(p.tcp_flags),
        "seq": p.seq,
        "ack": p.ack,
        "window_size": p.window_size,
        "tls_record_len": p.tls_record_len,
        "tls_record_count": p.tls_record_count,
        "retx": p.is_retransmission,
    }


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def write_canonical(traces: Iterable[FlowTrace], sink: BinaryIO) -> int:
    traces = list(traces)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "fields": list(FIELDS),
        "flows": {
            t.flow_id: {"label": t.label, "meta": t.meta.model_dump(mode="json") if t.meta else None}
            for t in traces
        },
    }
    written = 0
    try:
        written += sink.write((_dumps(header) + "\n").encode("utf-8"))
        for trace in traces:
            for p in trace.packets:
                written += sink.write((_dumps(packet_line(trace.flow_id, trace.label, p)) + "\n").encode("utf-8"))
    except OSError as e:
        raise RoboTraceError(f"failed writing canonical trace after {written} bytes: {e}")
    logger.debug(f"Wrote {len(traces)} flows ({written} bytes) in canonical format")
    return written


def _parse_header(obj: Dict, line_no: int) -> Dict:
    if obj.get("format") != FORMAT_NAME:
        raise TraceFormatError(f"line {line_no}: unknown format {obj.get('format')!r}")
    if obj.get("version") != FORMAT_VERSION:
        raise TraceFormatError(f"line {line_no}: unsupported version {obj.get('version')!r}")
    flows = obj.get("flows") or {}
    if not isinstance(flows, dict):
        raise TraceFormatError(f"line {line_no}: field 'flows' must be an object")
    return flows


def _to_packet(row: CanonicalLine, line_no: int) -> PacketRecord:
    try:
        flags = flags_from_str(row.tcp_flags)
    except ValueError as e:
        raise TraceFormatError(f"line {line_no}: field 'tcp_flags': {e}")
    return PacketRecord(
        timestamp=row.ts,
        direction=Direction(row.dir),
        frame_len=row.frame_len,
        frame_cap_len=row.frame_cap_len,
        ip_len=row.ip_len,
        ip_hdr_len=row.ip_hdr_len,
        tcp_payload_len=row.tcp_payload_len,
        tcp_hdr_len=row.tcp_hdr_len,
        tcp_flags=flags,
        seq=row.seq,
        ack=row.ack,
        window_size=row.window_size,
        tls_record_len=row.tls_record_len,
        tls_record_count=row.tls_record_count,
        is_retransmission=row.retx,
    )


def read_canonical(source: BinaryIO) -> List[FlowTrace]:
    declared: Dict[str, Dict] = {}
    packets: Dict[str, List[PacketRecord]] = {}
    labels: Dict[str, Optional[str]] = {}

    for line_no, raw in enumerate(source, start=1):
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        if not text.strip():
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"line {line_no}: not valid JSON: {e.msg}")
        if not isinstance(obj, dict):
            raise TraceFormatError(f"line {line_no}: expected a JSON object")
        if line_no == 1 and "format" in obj:
            declared = _parse_header(obj, line_no)
            continue
        try:
            row = CanonicalLine.model_validate(obj)
        except ValidationError as e:
            err = e.errors()[0]
            field = ".".join(str(x) for x in err["loc"]) or "<line>"
            raise TraceFormatError(f"line {line_no}: field '{field}': {err['msg']}")
        packets.setdefault(row.flow_id, []).append(_to_packet(row, line_no))
        labels.setdefault(row.flow_id, row.label)

    order = list(declared) + [fid for fid in packets if fid not in declared]
    traces = []
    for flow_id in order:
        info = declared.get(flow_id) or {}
        meta = info.get("meta")
        try:
            meta = FlowMeta.model_validate(meta) if meta else None
        except ValidationError as e:
            raise TraceFormatError(f"header: flow {flow_id}: invalid meta: {e.errors()[0]['msg']}")
        flow_packets = sorted(packets.get(flow_id, []), key=lambda p: p.timestamp)
        label = labels[flow_id] if flow_id in labels else info.get("label")
        traces.append(FlowTrace(flow_id=flow_id, label=label, packets=flow_packets, meta=meta))
    logger.debug(f"Read {len(traces)} flows from canonical trace")
    return traces


def save_traces(traces: Iterable[FlowTrace], path) -> int:
    buffer = io.BytesIO()
    write_canonical(traces, buffer)
    return atomic_write(path, buffer.getvalue())


def load_traces(path) -> List[FlowTrace]:
    try:
        with open(path, "rb") as fh:
            return read_canonical(fh)
    except FileNotFoundError:
        raise RoboTraceError(f"file not found: {path}")
