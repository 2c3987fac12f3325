"""Deterministic simulated kernel environment.

Provides IRQL tracking, paged-code enforcement, physical-to-virtual IO
region mapping with bounds checking, use-after-release detection, leak
accounting and a plug-and-play event source. A rule violation raises a
:class:`BugcheckError` and halts the kernel instance; every operation
after that fails with :class:`KernelHaltedError`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Callable, Iterable, Optional, TypeVar

T = TypeVar("T")


class Irql(IntEnum):
    """Execution priority rank. Paged code must stay below DISPATCH."""

    PASSIVE = 0
    APC = 1
    DISPATCH = 2


class AccessKind(Enum):
    READ = "read"
    WRITE = "write"


class BugcheckCode(Enum):
    PAGED_CODE_AT_ELEVATED_IRQL = "paged_code_at_elevated_irql"
    OUT_OF_BOUNDS_ACCESS = "out_of_bounds_access"
    ACCESS_AFTER_RELEASE = "access_after_release"


@dataclass(frozen=True)
class Bugcheck:
    code: BugcheckCode
    detail: str
    routine: Optional[str] = None
    irql: Optional[Irql] = None
    address: Optional[int] = None


class KernelError(Exception):
    """Base class for simulated kernel faults."""


class KernelHaltedError(KernelError):
    """Raised by any entry point after the kernel has bugchecked."""


class BugcheckError(KernelError):
    """Fatal rule violation; carries the recorded :class:`Bugcheck`."""

    def __init__(self, bugcheck: Bugcheck):
        super().__init__(f"bugcheck {bugcheck.code.value}: {bugcheck.detail}")
        self.bugcheck = bugcheck


class RangeNotAssignedError(KernelError):
    pass


class RegionOverlapError(KernelError):
    pass


class DuplicateDeviceError(KernelError):
    pass


class NoSuchDeviceError(KernelError):
    pass


class MmioGranularityError(KernelError):
    """Raised by an MMIO handler for an access wider than the register."""


@dataclass(frozen=True)
class RoutineAttributes:
    """Placement attributes of a driver routine (paged vs non-paged)."""

    name: str
    pageable: bool = False


@dataclass
class IoRegion:
    """A live mapping of a physical BAR window into kernel space."""

    handle: int
    device_id: str
    bar_index: int
    bar_offset: int
    phys_base: int
    length: int
    released: bool = False


@dataclass(frozen=True)
class BarResource:
    index: int
    base: int
    length: int


@dataclass(frozen=True)
class BusDeviceDescriptor:
    """What the bus reports when a device is plugged in.

    ``mmio_handler`` implements ``mmio_read(bar, offset, width)`` and
    ``mmio_write(bar, offset, width, value)``. ``backend`` is the emulated
    hardware object itself, handed to the bound driver for operations that
    have no register-level encoding. ``driver`` optionally names the driver
    the device binds to; with a single registered driver it may be omitted.
    """

    device_id: str
    bars: tuple[BarResource, ...]
    mmio_handler: Any
    backend: Any = None
    driver: Optional[str] = None


class PnpEventKind(Enum):
    DEVICE_ARRIVAL = "device_arrival"
    DEVICE_REMOVAL = "device_removal"


@dataclass(frozen=True)
class PnpEvent:
    kind: PnpEventKind
    device_id: str
    resources: tuple[BarResource, ...] = ()
    backend: Any = None
    driver: Optional[str] = None


_WIDTHS = (1, 2, 4, 8)


class SimKernel:
    """Single-threaded simulation core owning bus devices and IO regions.

    All entry points must be called from one logical execution context;
    concurrent callers have to serialize through a command channel owned
    by the embedding service.
    """

    def __init__(self) -> None:
        self.bugchecks: list[Bugcheck] = []
        self.current_irql: Irql = Irql.PASSIVE
        self._routine_stack: list[str] = []
        self._devices: dict[str, BusDeviceDescriptor] = {}
        self._regions: dict[str, list[IoRegion]] = {}
        self._leaked: list[tuple[str, IoRegion]] = []
        self._listeners: list[Any] = []
        self._next_handle = 1
        self.region_access_count = 0

    # -- state helpers -----------------------------------------------------

    @property
    def halted(self) -> bool:
        return bool(self.bugchecks)

    @property
    def last_bugcheck(self) -> Optional[Bugcheck]:
        return self.bugchecks[-1] if self.bugchecks else None

    def _check_running(self) -> None:
        if self.halted:
            raise KernelHaltedError("halted: " + self.bugchecks[0].detail)

    def _bugcheck(self, code: BugcheckCode, detail: str, address: Optional[int] = None) -> None:
        routine = self._routine_stack[-1] if self._routine_stack else None
        record = Bugcheck(code, detail, routine=routine, irql=self.current_irql, address=address)
        self.bugchecks.append(record)
        raise BugcheckError(record)

    def add_pnp_listener(self, listener: Any) -> None:
        """Listener needs ``on_pnp_event(event)`` and ``on_device_cleanup(id)``."""
        self._listeners.append(listener)

    # -- IRQL / paging rules -----------------------------------------------

    def invoke_at_irql(self, routine: RoutineAttributes, irql: Irql, body: Callable[[], T]) -> T:
        """Run ``body`` with the ambient IRQL set to ``irql``.

        Touching a routine tagged as pageable at DISPATCH or above is fatal.
        """
        self._check_running()
        prev_irql = self.current_irql
        self.current_irql = irql
        self._routine_stack.append(routine.name)
        try:
            if routine.pageable and irql >= Irql.DISPATCH:
                self._bugcheck(
                    BugcheckCode.PAGED_CODE_AT_ELEVATED_IRQL,
                    f"pageable routine {routine.name!r} invoked at {irql.name}",
                )
            return body()
        finally:
            self._routine_stack.pop()
            self.current_irql = prev_irql

    # -- IO space mapping ----------------------------------------------------

    def map_io_space(self, device_id: str, phys_base: int, length: int) -> IoRegion:
        self._check_running()
        if length <= 0:
            raise ValueError(f"region length must be positive, got {length}")
        if phys_base < 0 or phys_base + length > 2**64:
            raise ValueError("physical range outside 64-bit address space")
        descriptor = self._devices.get(device_id)
        if descriptor is None:
            raise NoSuchDeviceError(f"device {device_id!r} is not plugged in")
        bar = self._containing_bar(descriptor, phys_base, length)
        if bar is None:
            raise RangeNotAssignedError(
                f"[{phys_base:#x}, {phys_base + length:#x}) is not inside a BAR assigned to {device_id!r}"
            )
        for other in self.live_regions(device_id):
            if phys_base < other.phys_base + other.length and other.phys_base < phys_base + length:
                raise RegionOverlapError(
                    f"range {phys_base:#x}+{length:#x} overlaps live region {other.handle}"
                )
        region = IoRegion(
            handle=self._next_handle,
            device_id=device_id,
            bar_index=bar.index,
            bar_offset=phys_base - bar.base,
            phys_base=phys_base,
            length=length,
        )
        self._next_handle += 1
        self._regions.setdefault(device_id, []).append(region)
        return region

    @staticmethod
    def _containing_bar(descriptor: BusDeviceDescriptor, base: int, length: int) -> Optional[BarResource]:
        for bar in descriptor.bars:
            if base >= bar.base and base + length <= bar.base + bar.length:
                return bar
        return None

    def unmap_io_space(self, region: IoRegion) -> None:
        self._check_running()
        if region.released:
            raise ValueError(f"region {region.handle} already released")
        region.released = True

    def live_regions(self, device_id: str) -> list[IoRegion]:
        return [r for r in self._regions.get(device_id, []) if not r.released]

    def region_access(
        self,
        region: IoRegion,
        offset: int,
        width: int,
        kind: AccessKind,
        value: Optional[int] = None,
    ) -> Optional[int]:
        """Forward an access to the owning device's MMIO handler.

        Crossing the region end or touching a released region is fatal,
        mirroring the "reads and writes must not cross" rule.
        """
        self._check_running()
        if width not in _WIDTHS:
            raise ValueError(f"width must be one of {_WIDTHS}, got {width}")
        if kind is AccessKind.WRITE and value is None:
            raise ValueError("write access requires a value")
        self.region_access_count += 1
        address = region.phys_base + offset
        if region.released:
            self._bugcheck(
                BugcheckCode.ACCESS_AFTER_RELEASE,
                f"access to released region {region.handle}",
                address=address,
            )
        if region.device_id not in self._devices:
            self._bugcheck(
                BugcheckCode.ACCESS_AFTER_RELEASE,
                f"region {region.handle} belongs to removed device {region.device_id!r}",
                address=address,
            )
        if offset < 0 or offset + width > region.length:
            self._bugcheck(
                BugcheckCode.OUT_OF_BOUNDS_ACCESS,
                f"{width}-byte {kind.value} at offset {offset:#x} crosses region end ({region.length:#x})",
                address=address,
            )
        handler = self._devices[region.device_id].mmio_handler
        bar_offset = region.bar_offset + offset
        try:
            if kind is AccessKind.READ:
                return handler.mmio_read(region.bar_index, bar_offset, width)
            handler.mmio_write(region.bar_index, bar_offset, width, value)
            return None
        except MmioGranularityError as exc:
            self._bugcheck(BugcheckCode.OUT_OF_BOUNDS_ACCESS, str(exc), address=address)
            raise AssertionError("unreachable")  # _bugcheck always raises

    # -- plug and play --------------------------------------------------------

    def plug_device(self, descriptor: BusDeviceDescriptor) -> list[PnpEvent]:
        self._check_running()
        if not descriptor.bars:
            raise ValueError("descriptor carries no BAR assignment")
        if any(bar.length <= 0 for bar in descriptor.bars):
            raise ValueError("BAR lengths must be positive")
        if descriptor.device_id in self._devices:
            raise DuplicateDeviceError(f"device {descriptor.device_id!r} already plugged")
        self._devices[descriptor.device_id] = descriptor
        self._regions.setdefault(descriptor.device_id, [])
        event = PnpEvent(
            kind=PnpEventKind.DEVICE_ARRIVAL,
            device_id=descriptor.device_id,
            resources=descriptor.bars,
            backend=descriptor.backend if descriptor.backend is not None else descriptor.mmio_handler,
            driver=descriptor.driver,
        )
        for listener in self._listeners:
            listener.on_pnp_event(event)
        return [event]

    def unplug_device(self, device_id: str) -> list[PnpEvent]:
        """Remove a device: notify listeners, then account for leaks.

        Regions still live after the removal callbacks ran are recorded as
        leaks before any automatic cleanup gets a chance to release them.
        """
        self._check_running()
        if device_id not in self._devices:
            raise NoSuchDeviceError(f"device {device_id!r} is not plugged in")
        event = PnpEvent(kind=PnpEventKind.DEVICE_REMOVAL, device_id=device_id)
        for listener in self._listeners:
            listener.on_pnp_event(event)
        for region in self.live_regions(device_id):
            self._leaked.append((device_id, region))
        for listener in self._listeners:
            listener.on_device_cleanup(device_id)
        del self._devices[device_id]
        self._regions.pop(device_id, None)
        return [event]

    def leak_report(self) -> list[tuple[str, IoRegion]]:
        """Regions a removed device failed to release, in removal order."""
        return list(self._leaked)

    def plugged_devices(self) -> Iterable[str]:
        return tuple(self._devices)
