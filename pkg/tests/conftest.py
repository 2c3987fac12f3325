import uuid
from dataclasses import dataclass

import pytest

from spwpcie.card import BAR0_LENGTH, BAR2_LENGTH, SpwCard
from spwpcie.driver import DRIVER_NAME, SpwPcieDriver
from spwpcie.kernel import BarResource, BusDeviceDescriptor, SimKernel
from spwpcie.network import SpwNetwork, Topology, default_topology
from spwpcie.service.session import SimBackend, SimulationSession
from spwpcie.wdf import WdfFramework

BAR0_BASE = 0xD2100000
BAR2_BASE = 0xD2000000


@dataclass
class Stack:
    """A hand-assembled simulation stack for layer-level tests."""
    kernel: SimKernel
    framework: WdfFramework
    card: SpwCard
    network: SpwNetwork
    driver: SpwPcieDriver
    descriptor: BusDeviceDescriptor

    @property
    def device(self):
        return self.framework.devices[self.descriptor.device_id]


def build_stack(driver=None, topology=None, sample_period=10,
                device_id="spw0", bar0_base=BAR0_BASE, bar2_base=BAR2_BASE,
                plug=True, auto_cleanup=True) -> Stack:
    kernel = SimKernel()
    framework = WdfFramework(kernel, auto_cleanup=auto_cleanup)
    card = SpwCard()
    network = SpwNetwork(topology=topology or default_topology(),
                         sample_period=sample_period)
    network.attach_card(card)
    driver = driver or SpwPcieDriver()
    framework.register_driver(DRIVER_NAME, driver.callbacks())
    descriptor = BusDeviceDescriptor(
        device_id=device_id,
        bars=(
            BarResource(index=0, base=bar0_base, length=BAR0_LENGTH),
            BarResource(index=2, base=bar2_base, length=BAR2_LENGTH),
        ),
        mmio_handler=card,
        backend=SimBackend(card=card, network=network),
        driver=DRIVER_NAME,
    )
    if plug:
        kernel.plug_device(descriptor)
    return Stack(kernel=kernel, framework=framework, card=card,
                 network=network, driver=driver, descriptor=descriptor)


@pytest.fixture
def stack() -> Stack:
    return build_stack()


@pytest.fixture
def session() -> SimulationSession:
    return SimulationSession()


@pytest.fixture
def client(session):
    from fastapi.testclient import TestClient

    from spwpcie.service.api import create_app

    app = create_app(session=session)
    with TestClient(app) as test_client:
        yield test_client
