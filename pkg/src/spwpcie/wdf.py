"""Event-driven driver framework over the simulated kernel.

Drivers register a table of callbacks instead of owning a main loop:
``driver_entry`` runs once at registration, ``evt_device_add`` when a
matching device arrives, ``evt_prepare_hardware`` / ``evt_release_hardware``
around hardware ownership, and an optional I/O control handler that the
framework dispatches at each queue's configured interrupt level.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Callable, Optional

from .kernel import (
    BugcheckError,
    Irql,
    PnpEvent,
    PnpEventKind,
    RoutineAttributes,
    SimKernel,
)


class DeviceState(Enum):
    ABSENT = "absent"
    ADDED = "added"
    HARDWARE_PREPARED = "hardware-prepared"
    STARTED = "started"
    REMOVED = "removed"


class QueueKind(Enum):
    IO_CONTROL = "io-control"


class IoStatus(IntEnum):
    SUCCESS = 0
    INVALID_PARAMETER = 1
    NOT_SUPPORTED = 2


@dataclass(frozen=True)
class IoRequest:
    ctl_code: int
    input: bytes = b""
    kind: QueueKind = QueueKind.IO_CONTROL


@dataclass(frozen=True)
class IoResponse:
    status: IoStatus
    output: bytes = b""

    @property
    def bytes_returned(self) -> int:
        return len(self.output)


class FrameworkError(Exception):
    pass


class MissingCallbackError(FrameworkError):
    pass


class DuplicateQueueKindError(FrameworkError):
    pass


class DuplicateInterfaceError(FrameworkError):
    pass


class InterfaceNotFoundError(FrameworkError):
    pass


class DeviceNotStartedError(FrameworkError):
    pass


class NoQueueForRequestError(FrameworkError):
    pass


class NoDriverForDeviceError(FrameworkError):
    pass


@dataclass(frozen=True)
class DriverCallbacks:
    driver_entry: Callable[["RegisteredDriver"], None]
    evt_device_add: Callable[["FrameworkDevice"], None]
    evt_prepare_hardware: Callable[["FrameworkDevice"], None]
    evt_release_hardware: Callable[["FrameworkDevice"], None]
    evt_io_device_control: Optional[
        Callable[["FrameworkDevice", IoRequest], IoResponse]] = None
    attributes: dict[str, RoutineAttributes] = field(default_factory=dict)

    def routine(self, name: str, default_pageable: bool) -> RoutineAttributes:
        return self.attributes.get(name, RoutineAttributes(name, pageable=default_pageable))


@dataclass
class IoQueue:
    kind: QueueKind
    dispatch_irql: Irql
    handler: Callable[["FrameworkDevice", IoRequest], IoResponse]


class RegisteredDriver:
    def __init__(self, name: str, callbacks: DriverCallbacks) -> None:
        self.name = name
        self.callbacks = callbacks
        self.devices: list[FrameworkDevice] = []


class FrameworkDevice:
    """Per-device framework object handed to every driver callback."""

    def __init__(self, framework: "WdfFramework", driver: RegisteredDriver,
                 event: PnpEvent) -> None:
        self.framework = framework
        self.driver = driver
        self.device_id = event.device_id
        self.resources = event.resources
        self.backend = event.backend
        self.state = DeviceState.ABSENT
        self.context: dict[str, Any] = {}
        self.queues: dict[QueueKind, IoQueue] = {}
        self.interfaces: list[uuid.UUID] = []

    @property
    def kernel(self) -> SimKernel:
        return self.framework.kernel

    def create_queue(self, kind: QueueKind,
                     handler: Callable[["FrameworkDevice", IoRequest], IoResponse],
                     dispatch_irql: Irql = Irql.DISPATCH) -> IoQueue:
        if kind in self.queues:
            raise DuplicateQueueKindError(f"device already has a {kind.value} queue")
        queue = IoQueue(kind=kind, dispatch_irql=dispatch_irql, handler=handler)
        self.queues[kind] = queue
        return queue

    def register_interface(self, guid: uuid.UUID) -> str:
        return self.framework.register_interface(self, guid)


def interface_path(guid: uuid.UUID) -> str:
    return "\\\\interface\\{%s}\\0" % guid


@dataclass(frozen=True)
class RequestLogEntry:
    device_id: str
    ctl_code: int
    input: bytes


class WdfFramework:
    """Owns driver registration, device lifecycle and request dispatch.

    The framework registers itself as the kernel's plug-and-play listener.
    With ``auto_cleanup`` it releases any I/O regions a buggy driver left
    mapped after hardware release, mirroring what the framework would
    reclaim on behalf of the driver.
    """

    def __init__(self, kernel: SimKernel, auto_cleanup: bool = True) -> None:
        self.kernel = kernel
        self.auto_cleanup = auto_cleanup
        self.drivers: dict[str, RegisteredDriver] = {}
        self.devices: dict[str, FrameworkDevice] = {}
        self._interfaces: dict[str, FrameworkDevice] = {}
        self.trace: list[tuple[str, str]] = []  # (callback name, subject)
        self.request_log: list[RequestLogEntry] = []
        kernel.add_pnp_listener(self)

    # -- driver registration ------------------------------------------------------

    def register_driver(self, name: str, callbacks: DriverCallbacks) -> RegisteredDriver:
        for required in ("driver_entry", "evt_device_add",
                         "evt_prepare_hardware", "evt_release_hardware"):
            if getattr(callbacks, required) is None:
                raise MissingCallbackError(f"driver {name!r} lacks {required}")
        if name in self.drivers:
            raise FrameworkError(f"driver {name!r} already registered")
        driver = RegisteredDriver(name, callbacks)
        self.drivers[name] = driver
        self.trace.append(("driver_entry", name))
        self.kernel.invoke_at_irql(
            callbacks.routine("driver_entry", default_pageable=True),
            Irql.PASSIVE,
            lambda: callbacks.driver_entry(driver))
        return driver

    # -- pnp listener protocol ------------------------------------------------------

    def on_pnp_event(self, event: PnpEvent) -> None:
        if event.kind is PnpEventKind.DEVICE_ARRIVAL:
            self._on_arrival(event)
        elif event.kind is PnpEventKind.DEVICE_REMOVAL:
            self._on_removal(event)

    def on_device_cleanup(self, device_id: str) -> None:
        if not self.auto_cleanup:
            return
        for region in self.kernel.live_regions(device_id):
            self.kernel.unmap_io_space(region)

    def _driver_for(self, event: PnpEvent) -> RegisteredDriver:
        if event.driver is not None:
            driver = self.drivers.get(event.driver)
            if driver is None:
                raise NoDriverForDeviceError(
                    f"device {event.device_id} names unknown driver {event.driver!r}")
            return driver
        if len(self.drivers) == 1:
            return next(iter(self.drivers.values()))
        raise NoDriverForDeviceError(
            f"device {event.device_id} does not name a driver and "
            f"{len(self.drivers)} are registered")

    def _on_arrival(self, event: PnpEvent) -> None:
        driver = self._driver_for(event)
        device = FrameworkDevice(self, driver, event)
        callbacks = driver.callbacks
        self.devices[event.device_id] = device
        driver.devices.append(device)

        self.trace.append(("evt_device_add", event.device_id))
        self.kernel.invoke_at_irql(
            callbacks.routine("evt_device_add", default_pageable=True),
            Irql.PASSIVE,
            lambda: callbacks.evt_device_add(device))
        device.state = DeviceState.ADDED

        self.trace.append(("evt_prepare_hardware", event.device_id))
        self.kernel.invoke_at_irql(
            callbacks.routine("evt_prepare_hardware", default_pageable=True),
            Irql.PASSIVE,
            lambda: callbacks.evt_prepare_hardware(device))
        device.state = DeviceState.HARDWARE_PREPARED
        device.state = DeviceState.STARTED

    def _on_removal(self, event: PnpEvent) -> None:
        device = self.devices.get(event.device_id)
        if device is None:
            return
        callbacks = device.driver.callbacks
        if device.state in (DeviceState.STARTED, DeviceState.HARDWARE_PREPARED):
            self.trace.append(("evt_release_hardware", event.device_id))
            self.kernel.invoke_at_irql(
                callbacks.routine("evt_release_hardware", default_pageable=True),
                Irql.PASSIVE,
                lambda: callbacks.evt_release_hardware(device))
        device.state = DeviceState.REMOVED
        for guid in list(device.interfaces):
            self.deregister_interface(guid)
        device.driver.devices.remove(device)
        del self.devices[event.device_id]

    # -- interface directory ------------------------------------------------------

    def register_interface(self, device: FrameworkDevice, guid: uuid.UUID) -> str:
        path = interface_path(guid)
        if path in self._interfaces:
            raise DuplicateInterfaceError(f"interface {path} already registered")
        self._interfaces[path] = device
        device.interfaces.append(guid)
        return path

    def deregister_interface(self, guid: uuid.UUID) -> None:
        path = interface_path(guid)
        device = self._interfaces.pop(path, None)
        if device is None:
            raise InterfaceNotFoundError(f"no interface {path}")
        if guid in device.interfaces:
            device.interfaces.remove(guid)

    def open_interface(self, guid: uuid.UUID) -> FrameworkDevice:
        path = interface_path(guid)
        device = self._interfaces.get(path)
        if device is None:
            raise InterfaceNotFoundError(f"no interface {path}")
        return device

    def interface_paths(self) -> list[str]:
        return sorted(self._interfaces)

    # -- request dispatch ------------------------------------------------------

    def dispatch_request(self, device: FrameworkDevice, request: IoRequest) -> IoResponse:
        if device.state is not DeviceState.STARTED:
            raise DeviceNotStartedError(
                f"device {device.device_id} is {device.state.value}, not started")
        queue = device.queues.get(request.kind)
        if queue is None:
            raise NoQueueForRequestError(
                f"device {device.device_id} has no {request.kind.value} queue")
        self.request_log.append(RequestLogEntry(
            device_id=device.device_id,
            ctl_code=request.ctl_code,
            input=bytes(request.input)))
        callbacks = device.driver.callbacks
        return self.kernel.invoke_at_irql(
            callbacks.routine("evt_io_device_control", default_pageable=False),
            queue.dispatch_irql,
            lambda: queue.handler(device, request))
