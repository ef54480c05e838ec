import logging
from dataclasses import replace
from pathlib import Path

from commands.common import execute, resolve_seed, resolve_workers
from models.run import RunConfig
from traffic.canonical import save_traces
from traffic.flows import DEFAULT_IDLE_GAP_S, assemble_flows
from traffic.pcap import parse_pcap
from utils.errors import RoboTraceError

logger = logging.getLogger(__name__)


def register(subparsers):
    p = subparsers.add_parser("import", help="parse a classic pcap capture into canonical traces")
    p.add_argument("pcap", help="capture file (classic pcap, Ethernet)")
    p.add_argument("--out", required=True, help="canonical trace file to write")
    p.add_argument("--controller", help="controller IPv4 address; default is the first SYN sender")
    p.add_argument("--idle-gap", type=float, default=DEFAULT_IDLE_GAP_S, help="seconds of silence that end a flow")
    p.add_argument("--label", help="label every imported flow")
    p.set_defaults(handler=run)


def run(args) -> int:
    config = RunConfig(
        command="import",
        inputs=[Path(args.pcap)],
        output=Path(args.out),
        seed=resolve_seed(args),
        workers=resolve_workers(args),
        verbosity=args.verbosity,
    )

    def work():
        try:
            with open(args.pcap, "rb") as fh:
                capture = parse_pcap(fh, args.controller)
        except OSError as e:
            raise RoboTraceError(f"cannot read {args.pcap}: {e}")
        flows = assemble_flows(capture.packets, args.idle_gap)
        if args.label:
            flows = [replace(f, label=args.label) for f in flows]
        save_traces(flows, config.output)
        if capture.skipped_count or capture.truncated_count:
            logger.warning(
                f"Skipped {capture.skipped_count} non-TCP/IPv4 frames, {capture.truncated_count} truncated records"
            )
        counts = {
            "packets": len(capture.packets),
            "flows": len(flows),
            "skipped": capture.skipped_count,
            "truncated": capture.truncated_count,
            "controller": capture.controller,
            "retransmissions": sum(1 for p in capture.packets if p.is_retransmission),
        }
        return counts, [config.output]

    return execute(config, work)
