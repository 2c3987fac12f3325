"""The interface-card driver: lifecycle callbacks plus the I/O control handler.

`evt_prepare_hardware` maps both BARs through the kernel; the control
handler decodes command buffers, touches the mapped registers and packs
reply buffers. Register offsets and widths are validated before any
hardware touch, so a malformed request fails that one request instead of
faulting the machine.
"""

from __future__ import annotations

import struct
import uuid

from . import ioctl
from .card import (
    BAR0_LENGTH,
    DeviceModelError,
    REG_LINK_ENABLE,
    REG_LINK_RESET,
    REG_PORT_STATUS,
    split_packets,
)
from .kernel import AccessKind, KernelError, RoutineAttributes
from .wdf import (
    DriverCallbacks,
    FrameworkDevice,
    IoRequest,
    IoResponse,
    IoStatus,
    Irql,
    QueueKind,
)

DRIVER_NAME = "spw_pcie"

# Interface GUID of the bundled install manifest.
DEFAULT_INTERFACE_GUID = uuid.UUID("3c04a9dd-78e5-44e3-9c1a-7b25a1f0c9d2")

_REG_WIDTHS = (1, 2, 4)
_MAX_PORT = 32  # LINK_ENABLE/LINK_RESET carry one bit per port in a u32


class SpwPcieDriver:
    """Callback bundle bound to one interface GUID.

    Subclasses may override individual callbacks (and their paging
    attributes) to model driver bugs; the stock configuration keeps the
    control handler non-pageable because it runs at dispatch level.
    """

    def __init__(self, interface_guid: uuid.UUID = DEFAULT_INTERFACE_GUID,
                 io_control_pageable: bool = False,
                 dispatch_irql: Irql = Irql.DISPATCH) -> None:
        self.interface_guid = interface_guid
        self.io_control_pageable = io_control_pageable
        self.dispatch_irql = dispatch_irql
        self.handled_count = 0

    def callbacks(self) -> DriverCallbacks:
        return DriverCallbacks(
            driver_entry=self.driver_entry,
            evt_device_add=self.evt_device_add,
            evt_prepare_hardware=self.evt_prepare_hardware,
            evt_release_hardware=self.evt_release_hardware,
            evt_io_device_control=self.evt_io_device_control,
            attributes={
                "driver_entry": RoutineAttributes("driver_entry", pageable=True),
                "evt_device_add": RoutineAttributes("evt_device_add", pageable=True),
                "evt_prepare_hardware": RoutineAttributes(
                    "evt_prepare_hardware", pageable=True),
                "evt_release_hardware": RoutineAttributes(
                    "evt_release_hardware", pageable=True),
                "evt_io_device_control": RoutineAttributes(
                    "evt_io_device_control", pageable=self.io_control_pageable),
            },
        )

    # -- lifecycle ------------------------------------------------------------

    def driver_entry(self, driver) -> None:
        pass

    def evt_device_add(self, device: FrameworkDevice) -> None:
        device.create_queue(QueueKind.IO_CONTROL, self.evt_io_device_control,
                            dispatch_irql=self.dispatch_irql)
        device.register_interface(self.interface_guid)

    def evt_prepare_hardware(self, device: FrameworkDevice) -> None:
        bars = {bar.index: bar for bar in device.resources}
        for index in (0, 2):
            if index not in bars:
                raise KernelError(f"device {device.device_id} reports no BAR {index}")
        bar0, bar2 = bars[0], bars[2]
        device.context["bar0"] = device.kernel.map_io_space(
            device.device_id, bar0.base, bar0.length)
        device.context["bar2"] = device.kernel.map_io_space(
            device.device_id, bar2.base, bar2.length)
        device.context["bar0_phys"] = bar0.base

    def evt_release_hardware(self, device: FrameworkDevice) -> None:
        for key in ("bar0", "bar2"):
            region = device.context.pop(key, None)
            if region is not None and not region.released:
                device.kernel.unmap_io_space(region)

    # -- control requests ------------------------------------------------------

    def evt_io_device_control(self, device: FrameworkDevice,
                              request: IoRequest) -> IoResponse:
        self.handled_count += 1
        try:
            command = ioctl.decode_command(request.ctl_code, request.input)
        except ioctl.UnknownControlCodeError:
            return IoResponse(IoStatus.NOT_SUPPORTED)
        except ioctl.CodecError:
            return IoResponse(IoStatus.INVALID_PARAMETER)
        try:
            return self._execute(device, command)
        except (ioctl.CodecError, DeviceModelError):
            # Bad field values or an access landing in a register-map hole.
            return IoResponse(IoStatus.INVALID_PARAMETER)

    def _execute(self, device: FrameworkDevice, command) -> IoResponse:
        if isinstance(command, ioctl.GetBar0Addr):
            return IoResponse(
                IoStatus.SUCCESS,
                ioctl.encode_bar0_response(device.context["bar0_phys"]))

        if isinstance(command, ioctl.ReadReg):
            if not self._reg_window_ok(command.offset, command.length):
                return IoResponse(IoStatus.INVALID_PARAMETER)
            value = device.kernel.region_access(
                device.context["bar0"], command.offset, command.length,
                AccessKind.READ)
            return IoResponse(
                IoStatus.SUCCESS, int(value).to_bytes(command.length, "little"))

        if isinstance(command, ioctl.WriteReg):
            if not self._reg_window_ok(command.offset, command.length):
                return IoResponse(IoStatus.INVALID_PARAMETER)
            value = int.from_bytes(command.data, "little")
            device.kernel.region_access(
                device.context["bar0"], command.offset, command.length,
                AccessKind.WRITE, value)
            return IoResponse(
                IoStatus.SUCCESS, ioctl.encode_write_response(command.length))

        if isinstance(command, (ioctl.LinkEnable, ioctl.LinkReset)):
            return self._link_command(device, command)

        if isinstance(command, ioctl.PortDiscovery):
            mask = device.kernel.region_access(
                device.context["bar0"], REG_PORT_STATUS, 4, AccessKind.READ)
            return IoResponse(IoStatus.SUCCESS, ioctl.encode_mask_response(mask))

        if isinstance(command, ioctl.AcquireData):
            return self._acquire(device, command)

        return IoResponse(IoStatus.NOT_SUPPORTED)

    @staticmethod
    def _reg_window_ok(offset: int, length: int) -> bool:
        return length in _REG_WIDTHS and 0 <= offset and offset + length <= BAR0_LENGTH

    def _link_command(self, device: FrameworkDevice, command) -> IoResponse:
        port = command.port
        if not 1 <= port <= _MAX_PORT:
            return IoResponse(IoStatus.INVALID_PARAMETER)
        bit = 1 << (port - 1)
        region = device.context["bar0"]
        if isinstance(command, ioctl.LinkEnable):
            # Read-modify-write one bit so per-port commands compose.
            current = device.kernel.region_access(
                region, REG_LINK_ENABLE, 4, AccessKind.READ)
            device.kernel.region_access(
                region, REG_LINK_ENABLE, 4, AccessKind.WRITE, current | bit)
        else:
            device.kernel.region_access(
                region, REG_LINK_RESET, 4, AccessKind.WRITE, bit)
        return IoResponse(IoStatus.SUCCESS, ioctl.encode_status_response(0))

    def _acquire(self, device: FrameworkDevice, command: ioctl.AcquireData) -> IoResponse:
        backend = device.backend
        if backend is None:
            return IoResponse(IoStatus.INVALID_PARAMETER)
        data = backend.card.drain_fifo()
        if len(data) <= command.max_bytes:
            return IoResponse(IoStatus.SUCCESS, data)
        # Keep only whole frames that fit the caller's buffer; the excess
        # is discarded, never a split frame.
        kept = bytearray()
        for payload in split_packets(data):
            frame = struct.pack("<I", len(payload)) + payload
            if len(kept) + len(frame) > command.max_bytes:
                break
            kept.extend(frame)
        return IoResponse(IoStatus.SUCCESS, bytes(kept))
