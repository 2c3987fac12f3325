import struct
import uuid

import pytest

from spwpcie import ioctl
from spwpcie.config import ServiceConfig
from spwpcie.service.session import FailureKind, SimulationSession
from spwpcie.wdf import InterfaceNotFoundError


def test_device_info_defaults(session):
    info = session.device_info()
    assert info["bar0_phys"] == 0xD2100000
    assert info["lifecycle"] == "started"
    assert info["guid"] == "3c04a9dd-78e5-44e3-9c1a-7b25a1f0c9d2"
    assert info["tick"] == 0


def test_bar0_addr(session):
    result = session.bar0_addr()
    assert result.ok
    assert result.payload == 0xD2100000


def test_config_overrides_bar_bases():
    config = ServiceConfig(bar0_base=0xF0000000, bar2_base=0xE0000000)
    session = SimulationSession(config)
    assert session.bar0_addr().payload == 0xF0000000


def test_scratch_round_trip(session):
    assert session.read_reg(0x100, 4).payload == 0
    written = session.write_reg(0x100, 4, 2222)
    assert written.ok and written.payload == 4
    assert session.read_reg(0x100, 4).payload == 2222


def test_write_value_must_fit(session):
    result = session.write_reg(0x100, 1, 300)
    assert not result.ok
    assert result.failure_kind is FailureKind.INVALID_PARAMETER


def test_read_length_three_fails_cleanly(session):
    result = session.read_reg(0x100, 3)
    assert not result.ok
    assert result.failure_kind is FailureKind.INVALID_PARAMETER


def test_open_device_by_guid(session):
    handle = session.open_device(session.interface_guid)
    assert handle.open
    assert "3c04a9dd" in handle.interface_path


def test_open_unknown_guid_raises(session):
    with pytest.raises(InterfaceNotFoundError):
        session.open_device(uuid.uuid4())


def test_closed_handle_rejected_and_reopen_works(session):
    handle = session.open_device(session.interface_guid)
    handle.close()
    handle.close()  # idempotent
    result = session.device_io_control(ioctl.GetBar0Addr(), handle=handle)
    assert not result.ok
    assert result.failure_kind is FailureKind.HANDLE_CLOSED
    fresh = session.open_device(session.interface_guid)
    result = session.device_io_control(ioctl.GetBar0Addr(), handle=fresh)
    assert result.ok


def test_command_isolation_failure_then_hundred_successes(session):
    bad = session.read_reg(0x1000, 4)
    assert not bad.ok
    assert bad.failure_kind is FailureKind.INVALID_PARAMETER
    for index in range(100):
        session.write_reg(0x100, 4, index)
        result = session.read_reg(0x100, 4)
        assert result.ok and result.payload == index


def test_unknown_control_word_reported(session):
    result = session.raw_io_control(0x7777_0000, b"")
    assert not result.ok
    assert result.failure_kind is FailureKind.NOT_SUPPORTED


def test_links_and_discovery(session):
    assert session.link_enable(1).ok
    assert session.link_enable(3).ok
    session.tick(5)
    assert session.discover().payload == 0x05
    assert session.link_reset(1).ok
    assert session.discover().payload == 0x04


def test_acquire_collects_samples(session):
    session.link_enable(1)
    session.link_enable(3)
    session.inject_sample(-1000, 0, 0)
    session.tick(11)
    result = session.acquire()
    assert result.ok
    assert result.payload["bytes"] == 16
    assert result.payload["packets"] == [struct.pack("<iii", -1000, 0, 0)]


def test_sample_ring_and_subscribers(session):
    queue = session.subscribe()
    session.link_enable(1)
    session.link_enable(3)
    session.tick(11)
    assert list(session.samples) == [{"tick": 11, "x": 0, "y": 0, "z": 0}]
    assert queue.get_nowait() == {"tick": 11, "x": 0, "y": 0, "z": 0}
    session.unsubscribe(queue)
    session.unsubscribe(queue)  # second call is harmless
    session.tick(10)
    assert queue.empty()


def test_unplug_gives_device_not_started(session):
    session.unplug()
    result = session.read_reg(0x100, 4)
    assert not result.ok
    assert result.failure_kind is FailureKind.DEVICE_NOT_STARTED
    assert session.device_info()["lifecycle"] == "removed"


def test_replug_restores_service(session):
    session.unplug()
    session.replug()
    assert session.read_reg(0x000, 4).payload == 0x53505743
    assert session.device_info()["lifecycle"] == "started"


def test_audit_counters_agree_across_layers(session):
    session.write_reg(0x100, 4, 1)
    session.read_reg(0x100, 4)
    session.link_enable(1)
    session.discover()
    session.read_reg(0x1000, 4)       # fails at the driver guard
    session.raw_io_control(0x1, b"")  # unknown word
    assert session.dispatched_count == len(session.framework.request_log)
    assert session.dispatched_count == session.driver.handled_count
    # Every card register touch went through a kernel region access.
    assert session.card.mmio_access_count == session.kernel.region_access_count


def test_duration_ticks_zero_for_immediate_commands(session):
    result = session.bar0_addr()
    assert result.duration_ticks == 0
