"""Control-code packing and command buffer codec.

A 32-bit control word carries four bit fields::

    31           16 15  14 13          2 1   0
    [ device_type ] [acc] [  function  ] [mth]

device_type 16 bits, access 2 bits, function 12 bits, method 2 bits.
All buffers are little-endian packed structs.
"""

from __future__ import annotations

import random
import struct
import uuid
from dataclasses import dataclass, field
from typing import Optional, Union

DEVICE_TYPE = 0x8000
ACCESS_ANY = 0
METHOD_BUFFERED = 0

FUNC_GET_BAR0_ADDR = 0x800
FUNC_READ_REG = 0x801
FUNC_WRITE_REG = 0x802
FUNC_LINK_ENABLE = 0x803
FUNC_LINK_RESET = 0x804
FUNC_PORT_DISCOVERY = 0x805
FUNC_ACQUIRE_DATA = 0x806

_DEVICE_TYPE_BITS = 16
_ACCESS_BITS = 2
_FUNCTION_BITS = 12
_METHOD_BITS = 2


class CodecError(Exception):
    pass


class FieldOutOfRangeError(CodecError):
    pass


class BadLengthError(CodecError):
    pass


class UnknownControlCodeError(CodecError):
    pass


class BadCommandError(CodecError):
    pass


def encode_ctl_code(device_type: int, access: int, function: int, method: int) -> int:
    for name, value, bits in (
        ("device_type", device_type, _DEVICE_TYPE_BITS),
        ("access", access, _ACCESS_BITS),
        ("function", function, _FUNCTION_BITS),
        ("method", method, _METHOD_BITS),
    ):
        if value < 0 or value >= (1 << bits):
            raise FieldOutOfRangeError(f"{name}={value:#x} does not fit in {bits} bits")
    return (device_type << 16) | (access << 14) | (function << 2) | method


def decode_ctl_code(word: int) -> tuple[int, int, int, int]:
    if word < 0 or word > 0xFFFFFFFF:
        raise FieldOutOfRangeError(f"control word {word:#x} is not a u32")
    device_type = (word >> 16) & 0xFFFF
    access = (word >> 14) & 0x3
    function = (word >> 2) & 0xFFF
    method = word & 0x3
    return device_type, access, function, method


def _code(function: int) -> int:
    return encode_ctl_code(DEVICE_TYPE, ACCESS_ANY, function, METHOD_BUFFERED)


CTL_GET_BAR0_ADDR = _code(FUNC_GET_BAR0_ADDR)
CTL_READ_REG = _code(FUNC_READ_REG)
CTL_WRITE_REG = _code(FUNC_WRITE_REG)
CTL_LINK_ENABLE = _code(FUNC_LINK_ENABLE)
CTL_LINK_RESET = _code(FUNC_LINK_RESET)
CTL_PORT_DISCOVERY = _code(FUNC_PORT_DISCOVERY)
CTL_ACQUIRE_DATA = _code(FUNC_ACQUIRE_DATA)


# -- command objects ------------------------------------------------------------


@dataclass(frozen=True)
class GetBar0Addr:
    pass


@dataclass(frozen=True)
class ReadReg:
    offset: int
    length: int = 4


@dataclass(frozen=True)
class WriteReg:
    offset: int
    length: int
    data: bytes


@dataclass(frozen=True)
class LinkEnable:
    port: int


@dataclass(frozen=True)
class LinkReset:
    port: int


@dataclass(frozen=True)
class PortDiscovery:
    pass


@dataclass(frozen=True)
class AcquireData:
    max_bytes: int = 65536


Command = Union[GetBar0Addr, ReadReg, WriteReg, LinkEnable, LinkReset,
                PortDiscovery, AcquireData]


def _check_u32(name: str, value: int) -> None:
    if value < 0 or value > 0xFFFFFFFF:
        raise FieldOutOfRangeError(f"{name}={value} is not a u32")


def encode_command(cmd: Command) -> tuple[int, bytes]:
    """Return (control word, input buffer) for a command object."""
    if isinstance(cmd, GetBar0Addr):
        return CTL_GET_BAR0_ADDR, b""
    if isinstance(cmd, ReadReg):
        _check_u32("offset", cmd.offset)
        _check_u32("length", cmd.length)
        return CTL_READ_REG, struct.pack("<II", cmd.offset, cmd.length)
    if isinstance(cmd, WriteReg):
        _check_u32("offset", cmd.offset)
        _check_u32("length", cmd.length)
        if len(cmd.data) != cmd.length:
            raise BadLengthError(
                f"write carries {len(cmd.data)} data bytes but declares {cmd.length}")
        return CTL_WRITE_REG, struct.pack("<II", cmd.offset, cmd.length) + cmd.data
    if isinstance(cmd, LinkEnable):
        _check_u32("port", cmd.port)
        return CTL_LINK_ENABLE, struct.pack("<I", cmd.port)
    if isinstance(cmd, LinkReset):
        _check_u32("port", cmd.port)
        return CTL_LINK_RESET, struct.pack("<I", cmd.port)
    if isinstance(cmd, PortDiscovery):
        return CTL_PORT_DISCOVERY, b""
    if isinstance(cmd, AcquireData):
        _check_u32("max_bytes", cmd.max_bytes)
        return CTL_ACQUIRE_DATA, struct.pack("<I", cmd.max_bytes)
    raise BadCommandError(f"not a command object: {cmd!r}")


def decode_command(ctl_code: int, buffer: bytes) -> Command:
    """Inverse of :func:`encode_command`; raises on malformed buffers."""
    if ctl_code == CTL_GET_BAR0_ADDR:
        _check_empty(buffer)
        return GetBar0Addr()
    if ctl_code == CTL_READ_REG:
        offset, length = _unpack_exact("<II", buffer)
        return ReadReg(offset=offset, length=length)
    if ctl_code == CTL_WRITE_REG:
        if len(buffer) < 8:
            raise BadLengthError(f"write header needs 8 bytes, got {len(buffer)}")
        offset, length = struct.unpack_from("<II", buffer)
        data = buffer[8:]
        if len(data) != length:
            raise BadLengthError(
                f"write declares {length} data bytes but carries {len(data)}")
        return WriteReg(offset=offset, length=length, data=data)
    if ctl_code == CTL_LINK_ENABLE:
        (port,) = _unpack_exact("<I", buffer)
        return LinkEnable(port=port)
    if ctl_code == CTL_LINK_RESET:
        (port,) = _unpack_exact("<I", buffer)
        return LinkReset(port=port)
    if ctl_code == CTL_PORT_DISCOVERY:
        _check_empty(buffer)
        return PortDiscovery()
    if ctl_code == CTL_ACQUIRE_DATA:
        (max_bytes,) = _unpack_exact("<I", buffer)
        return AcquireData(max_bytes=max_bytes)
    raise UnknownControlCodeError(f"unknown control word {ctl_code:#010x}")


def _check_empty(buffer: bytes) -> None:
    if buffer:
        raise BadLengthError(f"expected an empty input buffer, got {len(buffer)} bytes")


def _unpack_exact(fmt: str, buffer: bytes):
    size = struct.calcsize(fmt)
    if len(buffer) != size:
        raise BadLengthError(f"expected {size} input bytes, got {len(buffer)}")
    return struct.unpack(fmt, buffer)


# -- response buffers ------------------------------------------------------------


def encode_bar0_response(address: int) -> bytes:
    if address < 0 or address > 0xFFFFFFFFFFFFFFFF:
        raise FieldOutOfRangeError(f"address {address:#x} is not a u64")
    return struct.pack("<Q", address)


def decode_bar0_response(buffer: bytes) -> int:
    (address,) = _unpack_exact("<Q", buffer)
    return address


def encode_write_response(written: int) -> bytes:
    _check_u32("written", written)
    return struct.pack("<I", written)


def decode_write_response(buffer: bytes) -> int:
    (written,) = _unpack_exact("<I", buffer)
    return written


def encode_status_response(status: int) -> bytes:
    _check_u32("status", status)
    return struct.pack("<I", status)


def decode_status_response(buffer: bytes) -> int:
    (status,) = _unpack_exact("<I", buffer)
    return status


def encode_mask_response(mask: int) -> bytes:
    _check_u32("mask", mask)
    return struct.pack("<I", mask)


def decode_mask_response(buffer: bytes) -> int:
    (mask,) = _unpack_exact("<I", buffer)
    return mask


# -- interface GUIDs ------------------------------------------------------------


def guid_generate(seed: Optional[int] = None) -> uuid.UUID:
    """Random version-4 GUID; seeded generation is reproducible."""
    if seed is None:
        return uuid.uuid4()
    rng = random.Random(seed)
    return uuid.UUID(int=rng.getrandbits(128), version=4)


_NAMES = {
    CTL_GET_BAR0_ADDR: "get-bar0-addr",
    CTL_READ_REG: "read-reg",
    CTL_WRITE_REG: "write-reg",
    CTL_LINK_ENABLE: "link-enable",
    CTL_LINK_RESET: "link-reset",
    CTL_PORT_DISCOVERY: "port-discovery",
    CTL_ACQUIRE_DATA: "acquire-data",
}


def ctl_code_name(ctl_code: int) -> str:
    return _NAMES.get(ctl_code, f"unknown({ctl_code:#010x})")
