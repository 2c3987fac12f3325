"""Discrete-time SpaceWire link network.

A small router fans out numbered ports; each port may hold an attached
node (the interface card itself, an accelerometer node, or nothing).
Every link has two endpoints that walk the six-state link FSM in
lockstep, one transition per tick. The model is fully deterministic:
equal command sequences produce equal state and traffic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Callable, Optional

DEFAULT_SAMPLE_PERIOD = 10
HANDSHAKE_TICKS = 5  # ErrorReset -> Run when both ends are enabled


class LinkState(IntEnum):
    ERROR_RESET = 0
    ERROR_WAIT = 1
    READY = 2
    STARTED = 3
    CONNECTING = 4
    RUN = 5


class NodeKind(Enum):
    INTERFACE_CARD = "interface-card"
    ACCELEROMETER = "accelerometer"
    EMPTY = "empty"


@dataclass(frozen=True)
class Topology:
    router_ports: int = 3
    attachments: tuple[tuple[int, NodeKind], ...] = ()

    def kind_at(self, port: int) -> NodeKind:
        for number, kind in self.attachments:
            if number == port:
                return kind
        return NodeKind.EMPTY


def default_topology() -> Topology:
    """Accelerometer on port 1, the card itself on port 3, port 2 empty."""
    return Topology(
        router_ports=3,
        attachments=(
            (1, NodeKind.ACCELEROMETER),
            (3, NodeKind.INTERFACE_CARD),
        ),
    )


class NoSuchPortError(Exception):
    pass


@dataclass
class LinkEndpoint:
    enabled: bool
    state: LinkState = LinkState.ERROR_RESET


@dataclass
class _Port:
    number: int
    kind: NodeKind
    router_end: LinkEndpoint = field(default_factory=lambda: LinkEndpoint(enabled=False))
    node_end: Optional[LinkEndpoint] = None

    def ends(self) -> list[LinkEndpoint]:
        out = [self.router_end]
        if self.node_end is not None:
            out.append(self.node_end)
        return out


@dataclass(frozen=True)
class _InFlight:
    deliver_at: int
    port: int
    payload: bytes


class SpwNetwork:
    def __init__(self, topology: Optional[Topology] = None,
                 sample_period: int = DEFAULT_SAMPLE_PERIOD) -> None:
        if sample_period < 1:
            raise ValueError("sample_period must be >= 1")
        self.topology = topology or default_topology()
        self.sample_period = sample_period
        self._ports: dict[int, _Port] = {}
        for number in range(1, self.topology.router_ports + 1):
            kind = self.topology.kind_at(number)
            port = _Port(number=number, kind=kind)
            if kind is not NodeKind.EMPTY:
                # Attached nodes come up with their link enabled; the router
                # side stays disabled until commanded.
                port.node_end = LinkEndpoint(enabled=True)
            self._ports[number] = port
        self.tick_count = 0
        self._in_flight: list[_InFlight] = []
        self._card = None
        self._injected: Optional[tuple[int, int, int]] = None
        self.emitted_samples = 0

    # -- wiring ----------------------------------------------------------------

    def attach_card(self, card) -> None:
        self._card = card
        card.attach_network(self)

    def port_numbers(self) -> list[int]:
        return sorted(self._ports)

    def _port(self, port: int) -> _Port:
        try:
            return self._ports[port]
        except KeyError:
            raise NoSuchPortError(f"router has no port {port}") from None

    # -- commands ----------------------------------------------------------------

    def link_command(self, port: int, command: str) -> None:
        entry = self._port(port)
        if command == "enable":
            entry.router_end.enabled = True
        elif command == "disable":
            entry.router_end.enabled = False
        elif command == "reset":
            for end in entry.ends():
                end.state = LinkState.ERROR_RESET
        else:
            raise ValueError(f"unknown link command {command!r}")

    def set_injected_sample(self, x: int, y: int, z: int) -> None:
        """Force the accelerometer output; persists until replaced."""
        self._injected = (x, y, z)

    def accel_waveform(self, tick: int) -> tuple[int, int, int]:
        """Sample source when nothing is injected: a resting sensor."""
        return (0, 0, 0)

    # -- inspection ----------------------------------------------------------------

    def link_state(self, port: int) -> LinkState:
        return self._port(port).router_end.state

    def discovery_mask(self) -> int:
        mask = 0
        for number, entry in self._ports.items():
            if entry.router_end.state is LinkState.RUN:
                mask |= 1 << (number - 1)
        return mask

    # -- time ----------------------------------------------------------------

    def tick(self, n: int = 1) -> None:
        for _ in range(n):
            self._step()

    def _step(self) -> None:
        self.tick_count += 1
        self._update_links()
        self._deliver_arrivals()
        self._emit_samples()

    def _update_links(self) -> None:
        # Synchronous update: every endpoint steps off the same snapshot.
        snapshot: dict[int, tuple[LinkState, Optional[LinkState]]] = {}
        for number, entry in self._ports.items():
            node_state = entry.node_end.state if entry.node_end else None
            snapshot[number] = (entry.router_end.state, node_state)
        for number, entry in self._ports.items():
            router_state, node_state = snapshot[number]
            entry.router_end.state = self._next_state(
                router_state, entry.router_end.enabled, node_state,
                partner_exists=entry.node_end is not None)
            if entry.node_end is not None:
                entry.node_end.state = self._next_state(
                    node_state, entry.node_end.enabled, router_state,
                    partner_exists=True)
        # A freshly reset endpoint silences the wire immediately; the other
        # end sees the loss within the same tick rather than reaching Run
        # against a dead partner.
        for entry in self._ports.values():
            if entry.node_end is None:
                continue
            a, b = entry.router_end, entry.node_end
            for mine, theirs in ((a, b), (b, a)):
                if (theirs.state is LinkState.ERROR_RESET
                        and mine.state >= LinkState.CONNECTING):
                    mine.state = LinkState.ERROR_RESET

    @staticmethod
    def _next_state(state: LinkState, enabled: bool,
                    partner: Optional[LinkState], partner_exists: bool) -> LinkState:
        if state >= LinkState.STARTED and not enabled:
            return LinkState.ERROR_RESET
        if state >= LinkState.CONNECTING and (
                partner is None or partner is LinkState.ERROR_RESET):
            return LinkState.ERROR_RESET
        if state is LinkState.ERROR_RESET:
            return LinkState.ERROR_WAIT
        if state is LinkState.ERROR_WAIT:
            return LinkState.READY
        if state is LinkState.READY:
            if enabled and partner_exists:
                return LinkState.STARTED
            return LinkState.READY
        if state is LinkState.STARTED:
            if partner is not None and partner >= LinkState.STARTED:
                return LinkState.CONNECTING
            return LinkState.STARTED
        if state is LinkState.CONNECTING:
            if partner is not None and partner >= LinkState.CONNECTING:
                return LinkState.RUN
            return LinkState.CONNECTING
        return LinkState.RUN

    def _deliver_arrivals(self) -> None:
        due = [p for p in self._in_flight if p.deliver_at <= self.tick_count]
        self._in_flight = [p for p in self._in_flight if p.deliver_at > self.tick_count]
        for item in due:
            self._deliver(item)

    def _deliver(self, item: _InFlight) -> None:
        card_port = self._card_port()
        if card_port is None or self._card is None:
            return
        # Traffic reaches the card only while its own link is in Run.
        if self._ports[card_port].router_end.state is not LinkState.RUN:
            return
        try:
            self._card.deliver_packet(item.port, item.payload)
        except Exception:
            # Card FIFO full: the packet is dropped on the floor, the
            # network keeps running.
            pass

    def _emit_samples(self) -> None:
        if self.tick_count % self.sample_period != 0:
            return
        for number, entry in self._ports.items():
            if entry.kind is not NodeKind.ACCELEROMETER:
                continue
            if entry.router_end.state is not LinkState.RUN:
                continue
            x, y, z = self._injected if self._injected else self.accel_waveform(self.tick_count)
            payload = struct.pack("<iii", x, y, z)
            self._in_flight.append(
                _InFlight(deliver_at=self.tick_count + 1, port=number, payload=payload))
            self.emitted_samples += 1

    def _card_port(self) -> Optional[int]:
        for number, entry in self._ports.items():
            if entry.kind is NodeKind.INTERFACE_CARD:
                return number
        return None
