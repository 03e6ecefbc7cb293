"""Protocol client for a USB high-rate sampling power monitor.

The wire protocol is a small command/response scheme plus a sample stream:

  command frame   1 op byte + payload, answered by 1 status byte + payload
  sample record   little-endian ``<fff`` = (t_s, current_a, voltage_v)

Only the client side lives here. Real USB traffic is out of scope; the
client runs against any object implementing :class:`MonitorTransport`,
and :class:`SimulatedMonitorTransport` serves records from a workload
profile so the full path can be exercised without hardware. Per the
instrument's usage model the USB charge channel is enabled while idle and
disabled for the duration of a measurement.
"""

from __future__ import annotations

import struct
from abc import ABC, abstractmethod

from .errors import AcquisitionError
from .sampling import PowerSample, SampleTrace, SourceConfig

OP_SET_LIMIT = 0x01
OP_SET_USB_CHANNEL = 0x02
OP_GET_SERIAL = 0x03
OP_START_SAMPLING = 0x10
OP_STOP_SAMPLING = 0x11

STATUS_OK = 0x00

SAMPLE_RECORD = struct.Struct("<fff")


class MonitorTransport(ABC):
    """Byte transport to the instrument (USB bulk endpoints in the field)."""

    @abstractmethod
    def open(self) -> None: ...

    @abstractmethod
    def close(self) -> None: ...

    @abstractmethod
    def command(self, op: int, payload: bytes = b"") -> bytes:
        """Send one command frame, return the response payload."""

    @abstractmethod
    def read_samples(self, max_records: int) -> bytes:
        """Return up to ``max_records`` packed sample records (b"" when done)."""


class MonitorProtocolClient:
    """Drives one monitor: configure limits, gate the USB channel, sample."""

    def __init__(self, transport: MonitorTransport, config: SourceConfig):
        self._transport = transport
        self._config = config
        self.serial_number: str | None = None

    def connect(self) -> None:
        self._transport.open()
        raw = self._transport.command(OP_GET_SERIAL)
        self.serial_number = raw.decode("ascii").strip("\x00")
        if self._config.serial_number and self.serial_number != self._config.serial_number:
            raise AcquisitionError(
                f"monitor serial mismatch: expected {self._config.serial_number}, "
                f"got {self.serial_number}"
            )
        self._transport.command(
            OP_SET_LIMIT, struct.pack("<f", self._config.runtime_current_limit)
        )
        self._transport.command(
            OP_SET_USB_CHANNEL, bytes([1 if self._config.usb_channel_enabled else 0])
        )

    def acquire(self, duration: float) -> SampleTrace:
        rate = self._config.rate_hz
        expected = round(duration * rate)
        # charging off while measuring, back on afterwards
        self._transport.command(OP_SET_USB_CHANNEL, b"\x00")
        self._transport.command(OP_START_SAMPLING, struct.pack("<Id", rate, duration))
        samples: list[PowerSample] = []
        while len(samples) < expected:
            raw = self._transport.read_samples(expected - len(samples))
            if not raw:
                break
            if len(raw) % SAMPLE_RECORD.size:
                raise AcquisitionError("monitor returned a truncated sample record")
            for t, cur, volt in SAMPLE_RECORD.iter_unpack(raw):
                samples.append(PowerSample(t, cur, volt))
        stop = self._transport.command(OP_STOP_SAMPLING)
        (dropped,) = struct.unpack("<I", stop)
        self._transport.command(
            OP_SET_USB_CHANNEL, bytes([1 if self._config.usb_channel_enabled else 0])
        )
        return SampleTrace(
            samples=samples,
            nominal_rate_hz=rate,
            dropped_count=dropped,
            source_id=f"monitor:{self.serial_number}",
        )

    def close(self) -> None:
        self._transport.close()


class SimulatedMonitorTransport(MonitorTransport):
    """In-memory instrument: answers the protocol and serves profile samples."""

    def __init__(self, profile, serial_number: str = "SIM0001"):
        self._profile = profile
        self._serial = serial_number
        self._pending: list[PowerSample] = []
        self._dropped = 0
        self.opened = False
        self.command_log: list[tuple[int, bytes]] = []

    def open(self) -> None:
        self.opened = True

    def close(self) -> None:
        self.opened = False

    def command(self, op: int, payload: bytes = b"") -> bytes:
        if not self.opened:
            raise AcquisitionError("transport not open")
        self.command_log.append((op, payload))
        if op == OP_GET_SERIAL:
            return self._serial.encode("ascii")
        if op == OP_START_SAMPLING:
            rate, duration = struct.unpack("<Id", payload)
            src = SourceConfig(kind="simulated", rate_hz=rate, profile=self._profile)
            from .sampling import SampleStream

            stream = SampleStream(src, duration)
            self._pending = [s for chunk in stream.chunks() for s in chunk]
            self._dropped = stream.dropped_count
            return b""
        if op == OP_STOP_SAMPLING:
            return struct.pack("<I", self._dropped)
        return b""

    def read_samples(self, max_records: int) -> bytes:
        if not self._pending:
            return b""
        batch, self._pending = self._pending[:max_records], self._pending[max_records:]
        return b"".join(SAMPLE_RECORD.pack(s.t, s.current, s.voltage) for s in batch)
