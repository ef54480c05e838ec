import struct
from typing import NamedTuple

TLS_HEADER = struct.Struct("!BHH")
TLS_HEADER_LEN = TLS_HEADER.size

# change_cipher_spec, alert, handshake, application_data
CONTENT_TYPES = range(20, 24)
# TLS 1.0 through 1.2 record versions
RECORD_VERSIONS = range(0x0301, 0x0304)


class TlsFraming(NamedTuple):
    record_len: int
    record_count: int


def is_record_header(data: bytes, offset: int = 0) -> bool:
    if len(data) - offset < TLS_HEADER_LEN:
        return False
    content_type, version, _ = TLS_HEADER.unpack_from(data, offset)
    return content_type in CONTENT_TYPES and version in RECORD_VERSIONS


def scan_records(payload: bytes) -> TlsFraming:
    """Frame the TLS records that start in one TCP payload.

    record_len is the length field of the first non-empty record (ciphertext
    bytes after the 5-byte header); record_count counts non-empty records found
    by walking the payload until the data runs out or stops looking like a
    record. Zero-length records carry nothing and are stepped over.
    """
    first_len = 0
    count = 0
    offset = 0
    while is_record_header(payload, offset):
        length = TLS_HEADER.unpack_from(payload, offset)[2]
        if length:
            first_len = first_len or length
            count += 1
        offset += TLS_HEADER_LEN + length
    return TlsFraming(first_len, count)
