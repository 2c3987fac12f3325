"""HTTP + WebSocket API over a SimulationSession.

Handlers talk to the simulation only through the session's serialized
methods; driver-status failures map onto 400/404/409 responses.
"""

from __future__ import annotations

import asyncio
import contextlib
import queue
import threading
from typing import Optional

from fastapi import FastAPI, Query, Request, WebSocket, WebSocketDisconnect
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..config import AUTO_TICK_RATE_HZ, ServiceConfig
from .models import (
    AcquireRequest,
    AcquireResponse,
    DeviceInfo,
    InjectRequest,
    LinkResult,
    PortsResponse,
    RegisterRead,
    RegisterWrite,
    StatusResponse,
    TickRequest,
    TickResponse,
    WriteResult,
)
from .session import CommandResult, FailureKind, SimulationSession

_FAILURE_HTTP_STATUS = {
    FailureKind.INVALID_PARAMETER: 400,
    FailureKind.NOT_SUPPORTED: 400,
    FailureKind.NOT_FOUND: 404,
    FailureKind.HANDLE_CLOSED: 409,
    FailureKind.DEVICE_NOT_STARTED: 409,
    FailureKind.KERNEL_HALTED: 409,
    FailureKind.INTERNAL: 500,
}


class ApiError(Exception):
    def __init__(self, status_code: int, detail: str) -> None:
        self.status_code = status_code
        self.detail = detail


def _unwrap(result: CommandResult):
    if not result.ok:
        status = _FAILURE_HTTP_STATUS.get(result.failure_kind, 500)
        raise ApiError(status, f"{result.command}: {result.reason}")
    return result.payload


def create_app(config: Optional[ServiceConfig] = None,
               session: Optional[SimulationSession] = None,
               panel_dir: Optional[str] = None) -> FastAPI:
    config = config or ServiceConfig()
    session = session or SimulationSession(config)

    ticker_stop = threading.Event()

    def _ticker() -> None:
        interval = 1.0 / AUTO_TICK_RATE_HZ
        while not ticker_stop.wait(interval):
            session.tick(1)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        thread = None
        if config.auto_tick:
            thread = threading.Thread(target=_ticker, name="auto-tick", daemon=True)
            thread.start()
        try:
            yield
        finally:
            ticker_stop.set()
            if thread is not None:
                thread.join(timeout=1.0)

    app = FastAPI(title="spwpcie control service", lifespan=lifespan)
    app.state.session = session
    app.state.config = config

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request,
                                 exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc.errors())})

    @app.get("/api/device", response_model=DeviceInfo)
    def get_device() -> DeviceInfo:
        return DeviceInfo(**session.device_info())

    @app.get("/api/registers", response_model=RegisterRead)
    def read_register(offset: int = Query(ge=0, le=0xFFFFFFFF),
                      len: int = Query(default=4, ge=1, le=4)) -> RegisterRead:
        value = _unwrap(session.read_reg(offset, len))
        return RegisterRead(offset=offset, len=len, data=value)

    @app.post("/api/registers", response_model=WriteResult)
    def write_register(body: RegisterWrite) -> WriteResult:
        written = _unwrap(session.write_reg(body.offset, body.len, body.data))
        return WriteResult(offset=body.offset, len=body.len, written=written)

    def _check_port(port: int) -> None:
        if port not in session.port_numbers():
            raise ApiError(404, f"no port {port} on this router")

    @app.post("/api/links/{port}/enable", response_model=LinkResult)
    def enable_link(port: int) -> LinkResult:
        _check_port(port)
        _unwrap(session.link_enable(port))
        return LinkResult(port=port, action="enable", status="ok")

    @app.post("/api/links/{port}/reset", response_model=LinkResult)
    def reset_link(port: int) -> LinkResult:
        _check_port(port)
        _unwrap(session.link_reset(port))
        return LinkResult(port=port, action="reset", status="ok")

    @app.get("/api/ports", response_model=PortsResponse)
    def get_ports() -> PortsResponse:
        return PortsResponse(mask=_unwrap(session.discover()))

    @app.post("/api/acquire", response_model=AcquireResponse)
    def acquire(body: Optional[AcquireRequest] = None) -> AcquireResponse:
        body = body or AcquireRequest()
        payload = _unwrap(session.acquire(body.max_bytes))
        return AcquireResponse(
            bytes=payload["bytes"],
            packets=[packet.hex() for packet in payload["packets"]])

    @app.post("/api/inject", response_model=StatusResponse)
    def inject(body: InjectRequest) -> StatusResponse:
        session.inject_sample(body.x, body.y, body.z)
        return StatusResponse(status="ok")

    @app.post("/api/tick", response_model=TickResponse)
    def tick(body: Optional[TickRequest] = None) -> TickResponse:
        body = body or TickRequest()
        return TickResponse(tick=session.tick(body.n))

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket) -> None:
        await ws.accept()
        frames = session.subscribe()
        try:
            while True:
                try:
                    frame = frames.get_nowait()
                except queue.Empty:
                    # Idle: watch for client disconnect without blocking
                    # the sample feed for long.
                    try:
                        message = await asyncio.wait_for(ws.receive(), timeout=0.02)
                    except asyncio.TimeoutError:
                        continue
                    if message.get("type") == "websocket.disconnect":
                        break
                    continue
                await ws.send_json(frame)
        except WebSocketDisconnect:
            pass
        finally:
            session.unsubscribe(frames)

    if panel_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=panel_dir, html=True), name="panel")

    return app
