"""Request/response schemas for the HTTP API. All integers are decimal JSON."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

I32_MIN = -(2 ** 31)
I32_MAX = 2 ** 31 - 1
U32_MAX = 2 ** 32 - 1


class DeviceInfo(BaseModel):
    guid: str
    bar0_phys: Optional[int]
    lifecycle: str
    device_id: str
    tick: int


class RegisterRead(BaseModel):
    offset: int
    len: int
    data: int


class RegisterWrite(BaseModel):
    offset: int = Field(ge=0, le=U32_MAX)
    len: int = Field(default=4, ge=1, le=4)
    data: int = Field(ge=0, le=U32_MAX)


class WriteResult(BaseModel):
    offset: int
    len: int
    written: int


class LinkResult(BaseModel):
    port: int
    action: str
    status: str


class PortsResponse(BaseModel):
    mask: int


class AcquireRequest(BaseModel):
    max_bytes: int = Field(default=65536, ge=0, le=U32_MAX)


class AcquireResponse(BaseModel):
    bytes: int
    packets: list[str]  # hex-encoded payloads, delivery order


class InjectRequest(BaseModel):
    x: int = Field(ge=I32_MIN, le=I32_MAX)
    y: int = Field(ge=I32_MIN, le=I32_MAX)
    z: int = Field(ge=I32_MIN, le=I32_MAX)


class TickRequest(BaseModel):
    n: int = Field(default=1, ge=0, le=1_000_000)


class TickResponse(BaseModel):
    tick: int


class StatusResponse(BaseModel):
    status: str


class ErrorResponse(BaseModel):
    detail: str
