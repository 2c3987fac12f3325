import uuid

import pytest

from spwpcie import ioctl
from spwpcie.driver import DEFAULT_INTERFACE_GUID, SpwPcieDriver
from spwpcie.kernel import (
    BugcheckCode,
    BugcheckError,
    Irql,
    RegionOverlapError,
    RoutineAttributes,
)
from spwpcie.wdf import (
    DeviceNotStartedError,
    DeviceState,
    DriverCallbacks,
    DuplicateInterfaceError,
    DuplicateQueueKindError,
    FrameworkError,
    InterfaceNotFoundError,
    IoRequest,
    IoResponse,
    IoStatus,
    MissingCallbackError,
    NoDriverForDeviceError,
    NoQueueForRequestError,
    QueueKind,
    WdfFramework,
    interface_path,
)

from conftest import build_stack


def test_interface_path_layout():
    guid = uuid.UUID("3c04a9dd-78e5-44e3-9c1a-7b25a1f0c9d2")
    assert interface_path(guid) == \
        "\\\\interface\\{3c04a9dd-78e5-44e3-9c1a-7b25a1f0c9d2}\\0"


def test_driver_entry_runs_once_at_registration():
    stack = build_stack(plug=False)
    entries = [name for name, _ in stack.framework.trace if name == "driver_entry"]
    assert entries == ["driver_entry"]
    stack.kernel.plug_device(stack.descriptor)
    entries = [name for name, _ in stack.framework.trace if name == "driver_entry"]
    assert entries == ["driver_entry"]


def test_lifecycle_trace_and_states():
    stack = build_stack()
    assert stack.device.state is DeviceState.STARTED
    stack.kernel.unplug_device("spw0")
    names = [name for name, _ in stack.framework.trace]
    assert names == ["driver_entry", "evt_device_add",
                     "evt_prepare_hardware", "evt_release_hardware"]
    assert "spw0" not in stack.framework.devices


def test_missing_callback_rejected():
    stack = build_stack(plug=False)
    callbacks = DriverCallbacks(
        driver_entry=lambda d: None,
        evt_device_add=lambda d: None,
        evt_prepare_hardware=None,
        evt_release_hardware=lambda d: None)
    with pytest.raises(MissingCallbackError):
        stack.framework.register_driver("broken", callbacks)


def test_duplicate_driver_name_rejected():
    stack = build_stack(plug=False)
    with pytest.raises(FrameworkError):
        stack.framework.register_driver("spw_pcie", SpwPcieDriver().callbacks())


def test_unknown_named_driver_rejected():
    stack = build_stack(plug=False)
    descriptor = stack.descriptor.__class__(
        device_id="other", bars=stack.descriptor.bars,
        mmio_handler=stack.card, backend=stack.descriptor.backend,
        driver="missing_driver")
    with pytest.raises(NoDriverForDeviceError):
        stack.kernel.plug_device(descriptor)


def test_sole_driver_binds_unnamed_device():
    stack = build_stack(plug=False)
    descriptor = stack.descriptor.__class__(
        device_id="anon", bars=stack.descriptor.bars,
        mmio_handler=stack.card, backend=stack.descriptor.backend,
        driver=None)
    stack.kernel.plug_device(descriptor)
    assert stack.framework.devices["anon"].state is DeviceState.STARTED


def test_interface_directory_round_trip():
    stack = build_stack()
    device = stack.framework.open_interface(DEFAULT_INTERFACE_GUID)
    assert device.device_id == "spw0"
    path = interface_path(DEFAULT_INTERFACE_GUID)
    assert path in stack.framework.interface_paths()


def test_unknown_interface_rejected():
    stack = build_stack()
    with pytest.raises(InterfaceNotFoundError):
        stack.framework.open_interface(uuid.uuid4())


def test_duplicate_interface_rejected():
    stack = build_stack()
    device = stack.framework.devices["spw0"]
    with pytest.raises(DuplicateInterfaceError):
        stack.framework.register_interface(device, DEFAULT_INTERFACE_GUID)


def test_removal_deregisters_interface():
    stack = build_stack()
    stack.kernel.unplug_device("spw0")
    with pytest.raises(InterfaceNotFoundError):
        stack.framework.open_interface(DEFAULT_INTERFACE_GUID)


def test_duplicate_queue_kind_rejected():
    stack = build_stack()
    device = stack.framework.devices["spw0"]
    with pytest.raises(DuplicateQueueKindError):
        device.create_queue(QueueKind.IO_CONTROL, lambda d, r: IoResponse(IoStatus.SUCCESS))


def test_dispatch_requires_started_device():
    stack = build_stack()
    device = stack.framework.devices["spw0"]
    stack.kernel.unplug_device("spw0")
    with pytest.raises(DeviceNotStartedError):
        stack.framework.dispatch_request(
            device, IoRequest(ctl_code=ioctl.CTL_GET_BAR0_ADDR))


def test_dispatch_requires_matching_queue():
    class NoQueueDriver(SpwPcieDriver):
        def evt_device_add(self, device):
            device.register_interface(self.interface_guid)

    stack = build_stack(driver=NoQueueDriver())
    device = stack.framework.devices["spw0"]
    with pytest.raises(NoQueueForRequestError):
        stack.framework.dispatch_request(
            device, IoRequest(ctl_code=ioctl.CTL_GET_BAR0_ADDR))


def test_dispatch_runs_at_queue_irql():
    seen = []

    class IrqlProbeDriver(SpwPcieDriver):
        def evt_io_device_control(self, device, request):
            seen.append(device.kernel.current_irql)
            return super().evt_io_device_control(device, request)

    stack = build_stack(driver=IrqlProbeDriver())
    device = stack.framework.devices["spw0"]
    stack.framework.dispatch_request(device, IoRequest(ctl_code=ioctl.CTL_GET_BAR0_ADDR))
    assert seen == [Irql.DISPATCH]
    assert stack.kernel.current_irql is Irql.PASSIVE


def test_pageable_io_control_at_dispatch_bugchecks():
    stack = build_stack(driver=SpwPcieDriver(io_control_pageable=True))
    device = stack.framework.devices["spw0"]
    with pytest.raises(BugcheckError) as info:
        stack.framework.dispatch_request(
            device, IoRequest(ctl_code=ioctl.CTL_GET_BAR0_ADDR))
    assert info.value.bugcheck.code is BugcheckCode.PAGED_CODE_AT_ELEVATED_IRQL
    assert len(stack.kernel.bugchecks) == 1


def test_pageable_io_control_at_passive_is_safe():
    stack = build_stack(
        driver=SpwPcieDriver(io_control_pageable=True, dispatch_irql=Irql.PASSIVE))
    device = stack.framework.devices["spw0"]
    response = stack.framework.dispatch_request(
        device, IoRequest(ctl_code=ioctl.CTL_GET_BAR0_ADDR))
    assert response.status is IoStatus.SUCCESS


def test_request_log_records_traffic():
    stack = build_stack()
    device = stack.framework.devices["spw0"]
    word, buffer = ioctl.encode_command(ioctl.ReadReg(offset=0x100, length=4))
    stack.framework.dispatch_request(device, IoRequest(ctl_code=word, input=buffer))
    entry = stack.framework.request_log[-1]
    assert entry.device_id == "spw0"
    assert entry.ctl_code == word
    assert entry.input == buffer


def test_prepare_failure_leaves_device_unstarted():
    stack = build_stack(plug=False)
    descriptor = stack.descriptor.__class__(
        device_id="spw0", bars=stack.descriptor.bars[:1],  # BAR2 missing
        mmio_handler=stack.card, backend=stack.descriptor.backend,
        driver="spw_pcie")
    with pytest.raises(Exception):
        stack.kernel.plug_device(descriptor)
    assert stack.framework.devices["spw0"].state is DeviceState.ADDED
    with pytest.raises(DeviceNotStartedError):
        stack.framework.dispatch_request(
            stack.framework.devices["spw0"],
            IoRequest(ctl_code=ioctl.CTL_GET_BAR0_ADDR))


def test_double_prepare_surfaces_overlap():
    stack = build_stack()
    device = stack.framework.devices["spw0"]
    with pytest.raises(RegionOverlapError):
        stack.driver.evt_prepare_hardware(device)


def test_auto_cleanup_releases_leaked_regions():
    class LeakyDriver(SpwPcieDriver):
        def evt_release_hardware(self, device):
            pass  # bug under test: forgets to unmap

    stack = build_stack(driver=LeakyDriver())
    stack.kernel.unplug_device("spw0")
    leaked = stack.kernel.leak_report()
    assert len(leaked) == 2
    # auto_cleanup reclaimed them after the leak was recorded
    assert all(region.released for _, region in leaked)


def test_auto_cleanup_can_be_disabled():
    class LeakyDriver(SpwPcieDriver):
        def evt_release_hardware(self, device):
            pass

    stack = build_stack(driver=LeakyDriver(), auto_cleanup=False)
    regions = list(stack.kernel.live_regions("spw0"))
    stack.kernel.unplug_device("spw0")
    assert len(stack.kernel.leak_report()) == 2
    assert all(not region.released for region in regions)


def test_replug_after_unplug_starts_fresh():
    stack = build_stack()
    stack.kernel.unplug_device("spw0")
    stack.kernel.plug_device(stack.descriptor)
    assert stack.framework.devices["spw0"].state is DeviceState.STARTED
    device = stack.framework.open_interface(DEFAULT_INTERFACE_GUID)
    response = stack.framework.dispatch_request(
        device, IoRequest(ctl_code=ioctl.CTL_GET_BAR0_ADDR))
    assert response.status is IoStatus.SUCCESS
