"""Emulated PCIe-SpaceWire interface card.

BAR0 is a little-endian 32-bit control/status register file, BAR2 a flat
packet buffer RAM that receives framed SpaceWire packets. Register access
semantics are read-only, read-write or write-one-self-clear.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .kernel import MmioGranularityError

BAR0_LENGTH = 4096
BAR2_LENGTH = 65536

PACKET_HEADER_LEN = 4  # u32 LE payload length in front of every packet
SAMPLE_PAYLOAD_LEN = 12  # x, y, z as signed 32-bit little-endian


class RegKind(Enum):
    RO = "read-only"
    RW = "read-write"
    W1SC = "write-one-self-clear"


@dataclass(frozen=True)
class RegisterSpec:
    offset: int
    name: str
    kind: RegKind
    reset: int = 0


REG_DEVICE_ID = 0x000
REG_VERSION = 0x004
REG_PORT_STATUS = 0x008
REG_LINK_ENABLE = 0x00C
REG_LINK_RESET = 0x010
REG_ACC_X = 0x020
REG_ACC_Y = 0x024
REG_ACC_Z = 0x028
REG_SAMPLE_COUNT = 0x02C
REG_FIFO_LEVEL = 0x030
REG_SCRATCH = 0x100

BAR0_REGISTERS = (
    RegisterSpec(REG_DEVICE_ID, "DEVICE_ID", RegKind.RO, 0x53505743),
    RegisterSpec(REG_VERSION, "VERSION", RegKind.RO, 0x00010000),
    RegisterSpec(REG_PORT_STATUS, "PORT_STATUS", RegKind.RO),    # bit i-1: port i link in Run
    RegisterSpec(REG_LINK_ENABLE, "LINK_ENABLE", RegKind.RW),    # bit i-1 commands port i enabled
    RegisterSpec(REG_LINK_RESET, "LINK_RESET", RegKind.W1SC),    # writing bit i-1 resets port i
    RegisterSpec(REG_ACC_X, "ACC_X", RegKind.RO),
    RegisterSpec(REG_ACC_Y, "ACC_Y", RegKind.RO),
    RegisterSpec(REG_ACC_Z, "ACC_Z", RegKind.RO),
    RegisterSpec(REG_SAMPLE_COUNT, "SAMPLE_COUNT", RegKind.RO),
    RegisterSpec(REG_FIFO_LEVEL, "FIFO_LEVEL", RegKind.RO),      # bytes of packet data valid in BAR2
    RegisterSpec(REG_SCRATCH, "SCRATCH", RegKind.RW),
)

_BY_OFFSET = {spec.offset: spec for spec in BAR0_REGISTERS}

_U32 = 0xFFFFFFFF


class DeviceModelError(Exception):
    """Base class for card-level access errors."""


class UndefinedRegisterError(DeviceModelError):
    pass


class OutOfRangeError(DeviceModelError):
    pass


class FifoOverflowError(DeviceModelError):
    pass


def _width_mask(width: int) -> int:
    return (1 << (8 * width)) - 1


class SpwCard:
    """Register file, packet FIFO and the bridge to the link network.

    The card is owned by the simulation core and never accessed
    concurrently. `snapshot_registers` hands inspectors an immutable copy.
    """

    def __init__(self) -> None:
        self._stored = {s.offset: s.reset for s in BAR0_REGISTERS if s.kind is RegKind.RW}
        self._bar2 = bytearray(BAR2_LENGTH)
        self._fifo_cursor = 0
        self._sample_latch = (0, 0, 0)
        self._sample_count = 0
        self.dropped_packets = 0
        self.mmio_access_count = 0
        self._network = None
        self._sample_listeners: list[Callable[[int, int, int], None]] = []

    def attach_network(self, network) -> None:
        """Bind the card to a link network; drives PORT_STATUS and LINK_*."""
        self._network = network

    def add_sample_listener(self, listener: Callable[[int, int, int], None]) -> None:
        self._sample_listeners.append(listener)

    # -- MMIO dispatch -------------------------------------------------------

    def mmio_read(self, bar: int, offset: int, width: int) -> int:
        self.mmio_access_count += 1
        if bar == 0:
            spec, byte_off = self._locate(offset, width)
            word = self._read_word(spec)
            return (word >> (8 * byte_off)) & _width_mask(width)
        if bar == 2:
            self._check_bar2(offset, width)
            return int.from_bytes(self._bar2[offset:offset + width], "little")
        raise OutOfRangeError(f"no BAR {bar} on this card")

    def mmio_write(self, bar: int, offset: int, width: int, value: int) -> None:
        self.mmio_access_count += 1
        if value < 0 or value > _width_mask(width):
            raise OutOfRangeError(f"value {value:#x} does not fit in {width} bytes")
        if bar == 0:
            spec, byte_off = self._locate(offset, width)
            self._write_word(spec, byte_off, width, value)
            return
        if bar == 2:
            self._check_bar2(offset, width)
            self._bar2[offset:offset + width] = value.to_bytes(width, "little")
            return
        raise OutOfRangeError(f"no BAR {bar} on this card")

    def _locate(self, offset: int, width: int) -> tuple[RegisterSpec, int]:
        if width not in (1, 2, 4):
            raise MmioGranularityError(
                f"{width}-byte access exceeds the 4-byte register granularity"
            )
        if offset < 0 or offset + width > BAR0_LENGTH:
            raise OutOfRangeError(f"offset {offset:#x} width {width} outside BAR0")
        base = offset & ~0x3
        spec = _BY_OFFSET.get(base)
        if spec is None:
            raise UndefinedRegisterError(f"no register at offset {base:#06x}")
        if offset + width > base + 4:
            raise UndefinedRegisterError(
                f"access at {offset:#x} width {width} crosses the end of {spec.name}"
            )
        return spec, offset - base

    @staticmethod
    def _check_bar2(offset: int, width: int) -> None:
        if width not in (1, 2, 4, 8):
            raise OutOfRangeError(f"unsupported BAR2 access width {width}")
        if offset < 0 or offset + width > BAR2_LENGTH:
            raise OutOfRangeError(f"offset {offset:#x} width {width} outside BAR2")

    def _read_word(self, spec: RegisterSpec) -> int:
        if spec.offset == REG_PORT_STATUS:
            return (self._network.discovery_mask() if self._network else 0) & _U32
        if spec.offset == REG_FIFO_LEVEL:
            return self._fifo_cursor
        if spec.offset == REG_SAMPLE_COUNT:
            return self._sample_count & _U32
        if spec.offset == REG_ACC_X:
            return self._sample_latch[0] & _U32
        if spec.offset == REG_ACC_Y:
            return self._sample_latch[1] & _U32
        if spec.offset == REG_ACC_Z:
            return self._sample_latch[2] & _U32
        if spec.kind is RegKind.W1SC:
            return 0
        return self._stored.get(spec.offset, spec.reset)

    def _write_word(self, spec: RegisterSpec, byte_off: int, width: int, value: int) -> None:
        if spec.kind is RegKind.RO:
            return  # silently ignored
        shifted = (value & _width_mask(width)) << (8 * byte_off)
        if spec.kind is RegKind.W1SC:
            if spec.offset == REG_LINK_RESET:
                self._pulse_link_reset(shifted)
            return
        mask = _width_mask(width) << (8 * byte_off)
        old = self._stored[spec.offset]
        new = (old & ~mask) | (shifted & mask)
        self._stored[spec.offset] = new & _U32
        if spec.offset == REG_LINK_ENABLE:
            self._apply_link_enable(new)

    def _apply_link_enable(self, bits: int) -> None:
        if self._network is None:
            return
        for port in self._network.port_numbers():
            command = "enable" if bits & (1 << (port - 1)) else "disable"
            self._network.link_command(port, command)

    def _pulse_link_reset(self, bits: int) -> None:
        if self._network is None:
            return
        for port in self._network.port_numbers():
            if bits & (1 << (port - 1)):
                self._network.link_command(port, "reset")

    # -- packet FIFO -----------------------------------------------------------

    def deliver_packet(self, port: int, payload: bytes) -> None:
        """Store ``[len u32 LE][payload]`` at the FIFO write cursor.

        A 12-byte payload is additionally decoded as an accelerometer
        sample and latched into ACC_X/Y/Z.
        """
        if len(payload) > BAR2_LENGTH - self._fifo_cursor - PACKET_HEADER_LEN:
            self.dropped_packets += 1
            raise FifoOverflowError(
                f"{len(payload)}-byte packet from port {port} does not fit "
                f"(cursor {self._fifo_cursor})"
            )
        cursor = self._fifo_cursor
        self._bar2[cursor:cursor + PACKET_HEADER_LEN] = struct.pack("<I", len(payload))
        cursor += PACKET_HEADER_LEN
        self._bar2[cursor:cursor + len(payload)] = payload
        self._fifo_cursor = cursor + len(payload)
        if len(payload) == SAMPLE_PAYLOAD_LEN:
            x, y, z = struct.unpack("<iii", payload)
            self._sample_latch = (x, y, z)
            self._sample_count += 1
            for listener in self._sample_listeners:
                listener(x, y, z)

    def drain_fifo(self) -> bytes:
        """Return all buffered packet bytes and reset the FIFO to empty."""
        data = bytes(self._bar2[: self._fifo_cursor])
        self._fifo_cursor = 0
        return data

    @property
    def fifo_level(self) -> int:
        return self._fifo_cursor

    def snapshot_registers(self) -> dict[str, int]:
        return {spec.name: self._read_word(spec) for spec in BAR0_REGISTERS}


def split_packets(data: bytes) -> list[bytes]:
    """Split a drained FIFO byte string back into packet payloads."""
    payloads = []
    pos = 0
    while pos < len(data):
        if pos + PACKET_HEADER_LEN > len(data):
            raise ValueError("truncated packet header")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += PACKET_HEADER_LEN
        if pos + length > len(data):
            raise ValueError("truncated packet payload")
        payloads.append(data[pos:pos + length])
        pos += length
    return payloads
