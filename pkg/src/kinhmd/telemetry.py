"""Flight-simulator telemetry ingestion over UDP.

Wire format follows the X-Plane 11 style "DATA" output: a 5-byte header
``DATA\\x00`` then any number of 36-byte records, each a little-endian
unsigned 32-bit record index followed by eight little-endian float32
values. Which record index carries accelerations (and in what units)
varies between simulator versions and setups, so the mapping lives in
ChannelMap configuration and is never hard-coded.

The receiver publishes into a single-slot latest-sample mailbox; readers
never block the socket thread.
"""

from __future__ import annotations

import logging
import math
import socket
import struct
import threading
import time
from dataclasses import dataclass, replace

from .stimulus import AccelerationSample

log = logging.getLogger(__name__)

PACKET_HEADER = b"DATA\x00"
RECORD_SIZE = 36
_RECORD = struct.Struct("<I8f")

DEFAULT_PORT = 49005
DEFAULT_STALENESS_TIMEOUT_S = 0.2

FEED_LIVE = "live"
FEED_STALE = "stale"
FEED_NEVER = "never_received"


class NotADataPacket(ValueError):
    """Datagram does not start with the DATA header."""


class MalformedPacket(ValueError):
    """Structurally broken packet; byte_offset points at the truncated record."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


@dataclass(frozen=True)
class DataRecord:
    index: int
    values: tuple[float, ...]  # exactly 8


@dataclass(frozen=True)
class DataPacket:
    records: tuple[DataRecord, ...]


def parse_packet(data: bytes) -> DataPacket:
    """Decode one datagram; total over arbitrary bytes (error or packet, never a crash).

    Unrecognized record indices are retained for the caller to filter.
    """
    if len(data) < len(PACKET_HEADER) or data[:5] != PACKET_HEADER:
        raise NotADataPacket(f"bad header {bytes(data[:5])!r}")
    payload_len = len(data) - 5
    if payload_len % RECORD_SIZE != 0:
        raise MalformedPacket(
            "truncated record", byte_offset=5 + payload_len - payload_len % RECORD_SIZE
        )
    records = []
    for off in range(5, len(data), RECORD_SIZE):
        fields = _RECORD.unpack_from(data, off)
        records.append(DataRecord(fields[0], fields[1:]))
    return DataPacket(tuple(records))


def encode_packet(pkt: DataPacket) -> bytes:
    """Serialize a packet bit-exactly in the wire format."""
    out = bytearray(PACKET_HEADER)
    for rec in pkt.records:
        out += _RECORD.pack(rec.index, *rec.values)
    return bytes(out)


@dataclass(frozen=True)
class ChannelMap:
    """Which record and value slots carry the 3-axis acceleration.

    Defaults are an example configuration only; the correct record index,
    slot order and unit scale depend on the simulator's data-output setup
    and must be confirmed against it.
    """

    record_index: int = 4
    slot_for_ax: int = 0
    slot_for_ay: int = 1
    slot_for_az: int = 2
    scale: float = 1.0  # m/s^2 per source unit

    def __post_init__(self):
        slots = (self.slot_for_ax, self.slot_for_ay, self.slot_for_az)
        if len(set(slots)) != 3 or not all(0 <= s <= 7 for s in slots):
            raise ValueError(f"slots must be distinct and within 0..7, got {slots}")
        if not math.isfinite(self.scale) or self.scale == 0.0:
            raise ValueError(f"scale must be finite and nonzero, got {self.scale}")


def extract_sample(pkt: DataPacket, cmap: ChannelMap, now: float) -> AccelerationSample | None:
    """Map the configured record to a sample stamped at receipt time.

    Returns None when no record matches or a mapped value is non-finite
    (samples must stay finite); with duplicate matching records the last
    one wins.
    """
    match = None
    for rec in pkt.records:
        if rec.index == cmap.record_index:
            match = rec
    if match is None:
        return None
    ax = match.values[cmap.slot_for_ax] * cmap.scale
    ay = match.values[cmap.slot_for_ay] * cmap.scale
    az = match.values[cmap.slot_for_az] * cmap.scale
    if not (math.isfinite(ax) and math.isfinite(ay) and math.isfinite(az)):
        return None
    return AccelerationSample(now, (ax, ay, az))


@dataclass(frozen=True)
class FeedStatus:
    """Liveness of the telemetry feed as seen by the control loop."""

    last_sample_time: float | None = None
    staleness_timeout: float = DEFAULT_STALENESS_TIMEOUT_S
    state: str = FEED_NEVER

    def with_sample(self, now: float) -> "FeedStatus":
        return replace(self, last_sample_time=now, state=FEED_LIVE)


def check_staleness(status: FeedStatus, now: float) -> FeedStatus:
    """Re-evaluate feed state at `now`; stale never flips back without a new sample."""
    if status.last_sample_time is None:
        return replace(status, state=FEED_NEVER)
    if now - status.last_sample_time > status.staleness_timeout:
        return replace(status, state=FEED_STALE)
    if status.state == FEED_STALE:
        return status
    return replace(status, state=FEED_LIVE)


class LatestMailbox:
    """Single-slot mailbox with atomic replacement; readers never block writers."""

    def __init__(self):
        self._slot: tuple[int, AccelerationSample] | None = None  # (seq, sample)
        self._seq = 0

    def put(self, sample: AccelerationSample) -> None:
        self._seq += 1
        self._slot = (self._seq, sample)  # single reference swap, atomic in CPython

    def peek(self) -> tuple[int, AccelerationSample] | None:
        return self._slot


class UdpReceiver:
    """Background UDP listener feeding the latest-sample mailbox.

    Parse or mapping failures are counted, never raised into the socket
    thread; the control loop sees bad input only as staleness.
    """

    def __init__(
        self,
        cmap: ChannelMap,
        port: int = DEFAULT_PORT,
        host: str = "127.0.0.1",
        staleness_timeout: float = DEFAULT_STALENESS_TIMEOUT_S,
        clock=time.monotonic,
    ):
        self.cmap = cmap
        self.port = port
        self.host = host
        self.clock = clock
        self.mailbox = LatestMailbox()
        self.packets_ok = 0
        self.packets_bad = 0
        self._status = FeedStatus(staleness_timeout=staleness_timeout)
        self._sock: socket.socket | None = None
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()

    def start(self) -> None:
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((self.host, self.port))
        self._sock.settimeout(0.05)
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="kinhmd-udp", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                data, _ = self._sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                pkt = parse_packet(data)
            except (NotADataPacket, MalformedPacket) as exc:
                self.packets_bad += 1
                log.debug("dropped datagram: %s", exc)
                continue
            sample = extract_sample(pkt, self.cmap, self.clock())
            if sample is None:
                self.packets_bad += 1
                continue
            self.packets_ok += 1
            self.mailbox.put(sample)
            self._status = self._status.with_sample(sample.timestamp)

    def status(self, now: float | None = None) -> FeedStatus:
        return check_staleness(self._status, self.clock() if now is None else now)

    def latest(self) -> AccelerationSample | None:
        slot = self.mailbox.peek()
        return slot[1] if slot is not None else None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()
