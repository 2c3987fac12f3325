"""One simulated machine: kernel, framework, driver, card, network.

The session is the single owner of the simulation. Every public method
takes the session lock, so API handlers and WebSocket broadcasters may
call in from any thread; the simulation itself stays single-threaded.
Each control command runs isolated: a failing command reports Failure
and leaves the session fully usable.
"""

from __future__ import annotations

import threading
import uuid
from collections import deque
from dataclasses import dataclass
from enum import Enum
from queue import SimpleQueue
from typing import Any, Optional

from .. import ioctl
from ..card import SpwCard, split_packets
from ..config import ServiceConfig
from ..driver import DRIVER_NAME, SpwPcieDriver
from ..kernel import (
    BarResource,
    BugcheckError,
    BusDeviceDescriptor,
    KernelHaltedError,
    SimKernel,
)
from ..network import SpwNetwork
from ..wdf import (
    DeviceNotStartedError,
    InterfaceNotFoundError,
    IoRequest,
    IoStatus,
    WdfFramework,
    interface_path,
)
from ..card import BAR0_LENGTH, BAR2_LENGTH

DEVICE_ID = "spw0"
SAMPLE_RING_CAPACITY = 1024


class FailureKind(Enum):
    INVALID_PARAMETER = "invalid-parameter"
    NOT_SUPPORTED = "not-supported"
    NOT_FOUND = "not-found"
    HANDLE_CLOSED = "handle-closed"
    DEVICE_NOT_STARTED = "device-not-started"
    KERNEL_HALTED = "kernel-halted"
    INTERNAL = "internal"


@dataclass(frozen=True)
class CommandResult:
    command: str
    ok: bool
    payload: Any = None
    reason: Optional[str] = None
    failure_kind: Optional[FailureKind] = None
    duration_ticks: int = 0


@dataclass
class DeviceHandle:
    interface_path: str
    open: bool = True

    def close(self) -> None:
        self.open = False  # idempotent


@dataclass(frozen=True)
class SimBackend:
    """Card-side handle carried in plug-and-play resources."""
    card: SpwCard
    network: SpwNetwork


class SimulationSession:
    def __init__(self, config: Optional[ServiceConfig] = None) -> None:
        self.config = config or ServiceConfig()
        self._lock = threading.RLock()

        self.kernel = SimKernel()
        self.framework = WdfFramework(self.kernel)
        self.card = SpwCard()
        self.network = SpwNetwork(
            topology=self.config.build_topology(),
            sample_period=self.config.sample_period)
        self.network.attach_card(self.card)
        self.backend = SimBackend(card=self.card, network=self.network)

        self.interface_guid = self.config.interface_guid()
        self.driver = SpwPcieDriver(interface_guid=self.interface_guid)
        self.framework.register_driver(DRIVER_NAME, self.driver.callbacks())

        self.descriptor = BusDeviceDescriptor(
            device_id=DEVICE_ID,
            bars=(
                BarResource(index=0, base=self.config.bar0_base, length=BAR0_LENGTH),
                BarResource(index=2, base=self.config.bar2_base, length=BAR2_LENGTH),
            ),
            mmio_handler=self.card,
            backend=self.backend,
            driver=DRIVER_NAME,
        )
        self.kernel.plug_device(self.descriptor)
        self._device = self.framework.open_interface(self.interface_guid)
        self.handle = self.open_device(self.interface_guid)

        self.samples: deque[dict[str, int]] = deque(maxlen=SAMPLE_RING_CAPACITY)
        self._subscribers: list[SimpleQueue] = []
        self.card.add_sample_listener(self._on_sample)
        self.dispatched_count = 0

    # -- sample fan-out ----------------------------------------------------------

    def _on_sample(self, x: int, y: int, z: int) -> None:
        frame = {"tick": self.network.tick_count, "x": x, "y": y, "z": z}
        self.samples.append(frame)
        for queue in self._subscribers:
            queue.put(frame)

    def subscribe(self) -> SimpleQueue:
        with self._lock:
            queue: SimpleQueue = SimpleQueue()
            self._subscribers.append(queue)
            return queue

    def unsubscribe(self, queue: SimpleQueue) -> None:
        with self._lock:
            if queue in self._subscribers:
                self._subscribers.remove(queue)

    # -- device access ----------------------------------------------------------

    def open_device(self, guid: uuid.UUID) -> DeviceHandle:
        """Look up the interface directory; raises InterfaceNotFoundError."""
        with self._lock:
            self.framework.open_interface(guid)
            return DeviceHandle(interface_path=interface_path(guid))

    def device_io_control(self, cmd: ioctl.Command,
                          handle: Optional[DeviceHandle] = None) -> CommandResult:
        name = type(cmd).__name__
        with self._lock:
            handle = handle if handle is not None else self.handle
            if not handle.open:
                return CommandResult(
                    command=name, ok=False, reason="handle is closed",
                    failure_kind=FailureKind.HANDLE_CLOSED)
            try:
                ctl_code, buffer = ioctl.encode_command(cmd)
            except ioctl.CodecError as exc:
                return CommandResult(
                    command=name, ok=False, reason=str(exc),
                    failure_kind=FailureKind.INVALID_PARAMETER)
            return self._submit(name, ctl_code, buffer, cmd)

    def raw_io_control(self, ctl_code: int, buffer: bytes) -> CommandResult:
        """Submit an arbitrary control word + buffer (fuzzing entry point)."""
        with self._lock:
            return self._submit(ioctl.ctl_code_name(ctl_code), ctl_code, buffer, None)

    def _submit(self, name: str, ctl_code: int, buffer: bytes,
                cmd: Optional[ioctl.Command]) -> CommandResult:
        request = IoRequest(ctl_code=ctl_code, input=buffer)
        try:
            response = self.framework.dispatch_request(self._device, request)
            self.dispatched_count += 1
        except DeviceNotStartedError as exc:
            # Rejected before reaching the driver; not counted as dispatched.
            return CommandResult(command=name, ok=False, reason=str(exc),
                                 failure_kind=FailureKind.DEVICE_NOT_STARTED)
        except (BugcheckError, KernelHaltedError) as exc:
            self.dispatched_count += 1
            return CommandResult(command=name, ok=False, reason=str(exc),
                                 failure_kind=FailureKind.KERNEL_HALTED)
        except Exception as exc:  # isolation contract: never poison the session
            self.dispatched_count += 1
            return CommandResult(command=name, ok=False, reason=str(exc),
                                 failure_kind=FailureKind.INTERNAL)
        if response.status is IoStatus.INVALID_PARAMETER:
            return CommandResult(command=name, ok=False, reason="invalid parameter",
                                 failure_kind=FailureKind.INVALID_PARAMETER)
        if response.status is IoStatus.NOT_SUPPORTED:
            return CommandResult(command=name, ok=False, reason="not supported",
                                 failure_kind=FailureKind.NOT_SUPPORTED)
        return CommandResult(command=name, ok=True,
                             payload=self._decode_payload(cmd, response.output))

    @staticmethod
    def _decode_payload(cmd: Optional[ioctl.Command], output: bytes) -> Any:
        if isinstance(cmd, ioctl.GetBar0Addr):
            return ioctl.decode_bar0_response(output)
        if isinstance(cmd, ioctl.ReadReg):
            return int.from_bytes(output, "little")
        if isinstance(cmd, ioctl.WriteReg):
            return ioctl.decode_write_response(output)
        if isinstance(cmd, (ioctl.LinkEnable, ioctl.LinkReset)):
            return ioctl.decode_status_response(output)
        if isinstance(cmd, ioctl.PortDiscovery):
            return ioctl.decode_mask_response(output)
        return output

    # -- convenience commands -----------------------------------------------------

    def bar0_addr(self) -> CommandResult:
        return self.device_io_control(ioctl.GetBar0Addr())

    def read_reg(self, offset: int, length: int = 4) -> CommandResult:
        return self.device_io_control(ioctl.ReadReg(offset=offset, length=length))

    def write_reg(self, offset: int, length: int, value: int) -> CommandResult:
        if value < 0 or length < 1 or value >= (1 << (8 * length)):
            return CommandResult(
                command="WriteReg", ok=False,
                reason=f"value {value} does not fit in {length} bytes",
                failure_kind=FailureKind.INVALID_PARAMETER)
        data = value.to_bytes(length, "little")
        return self.device_io_control(
            ioctl.WriteReg(offset=offset, length=length, data=data))

    def link_enable(self, port: int) -> CommandResult:
        return self.device_io_control(ioctl.LinkEnable(port=port))

    def link_reset(self, port: int) -> CommandResult:
        return self.device_io_control(ioctl.LinkReset(port=port))

    def discover(self) -> CommandResult:
        return self.device_io_control(ioctl.PortDiscovery())

    def acquire(self, max_bytes: int = BAR2_LENGTH) -> CommandResult:
        result = self.device_io_control(ioctl.AcquireData(max_bytes=max_bytes))
        if not result.ok:
            return result
        payloads = split_packets(result.payload)
        return CommandResult(command=result.command, ok=True, payload={
            "bytes": len(result.payload),
            "raw": result.payload,
            "packets": payloads,
        })

    # -- simulation control ------------------------------------------------------

    def tick(self, n: int = 1) -> int:
        with self._lock:
            self.network.tick(n)
            return self.network.tick_count

    def inject_sample(self, x: int, y: int, z: int) -> None:
        with self._lock:
            self.network.set_injected_sample(x, y, z)

    def port_numbers(self) -> list[int]:
        return self.network.port_numbers()

    def device_info(self) -> dict[str, Any]:
        with self._lock:
            bar0 = self.bar0_addr()
            return {
                "guid": str(self.interface_guid),
                "bar0_phys": bar0.payload if bar0.ok else None,
                "lifecycle": self._device.state.value,
                "device_id": DEVICE_ID,
                "tick": self.network.tick_count,
            }

    def unplug(self) -> None:
        """Remove the simulated device (used by lifecycle tests)."""
        with self._lock:
            self.kernel.unplug_device(DEVICE_ID)

    def replug(self) -> None:
        with self._lock:
            self.kernel.plug_device(self.descriptor)
            self._device = self.framework.open_interface(self.interface_guid)
            self.handle = self.open_device(self.interface_guid)
