"""Service configuration: UTF-8 key=value file, `SPW_CONFIG` names it.

Recognized keys::

    bar0_base=0xD2100000     BAR0 physical base (hex or decimal)
    bar2_base=0xD2000000     BAR2 physical base
    guid=<canonical>         interface GUID; default from the bundled manifest
    topology=default|path    link topology, or a JSON file describing one
    sample_period=10         accelerometer emission period in ticks
    listen=host:port         bind address for `serve`
    auto_tick=on|off         advance simulated time at 50 ticks/s while serving
"""

from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .manifest import InstallManifest, parse_manifest
from .network import NodeKind, Topology, default_topology

ENV_VAR = "SPW_CONFIG"
AUTO_TICK_RATE_HZ = 50

_NODE_KINDS = {kind.value: kind for kind in NodeKind}


class ConfigError(Exception):
    pass


def bundled_manifest_text() -> str:
    return resources.files("spwpcie").joinpath("data/spw_pcie.inf").read_text("utf-8")


def bundled_manifest() -> InstallManifest:
    return parse_manifest(bundled_manifest_text())


@dataclass
class ServiceConfig:
    bar0_base: int = 0xD2100000
    bar2_base: int = 0xD2000000
    guid: Optional[uuid.UUID] = None
    topology: str = "default"
    sample_period: int = 10
    listen_host: str = "127.0.0.1"
    listen_port: int = 8000
    auto_tick: bool = False

    def interface_guid(self) -> uuid.UUID:
        return self.guid if self.guid is not None else bundled_manifest().interface_guid

    def build_topology(self) -> Topology:
        if self.topology == "default":
            return default_topology()
        return load_topology_file(self.topology)


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value, 0)  # accepts 0x-prefixed hex and plain decimal
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def parse_config(text: str) -> ServiceConfig:
    config = ServiceConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "bar0_base":
            config.bar0_base = _parse_int(key, value)
        elif key == "bar2_base":
            config.bar2_base = _parse_int(key, value)
        elif key == "guid":
            try:
                config.guid = uuid.UUID(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: bad guid {value!r}") from None
        elif key == "topology":
            config.topology = value
        elif key == "sample_period":
            period = _parse_int(key, value)
            if period < 1:
                raise ConfigError(f"line {lineno}: sample_period must be >= 1")
            config.sample_period = period
        elif key == "listen":
            host, _, port = value.rpartition(":")
            if not host or not port.isdigit():
                raise ConfigError(f"line {lineno}: listen must be host:port, got {value!r}")
            config.listen_host, config.listen_port = host, int(port)
        elif key == "auto_tick":
            if value not in ("on", "off"):
                raise ConfigError(f"line {lineno}: auto_tick must be on or off")
            config.auto_tick = value == "on"
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    return config


def load_config(path: Optional[str] = None) -> ServiceConfig:
    """Load from `path`, else from $SPW_CONFIG, else defaults."""
    chosen = path or os.environ.get(ENV_VAR)
    if not chosen:
        return ServiceConfig()
    return parse_config(Path(chosen).read_text("utf-8"))


def load_topology_file(path: str) -> Topology:
    """JSON topology: {"router_ports": N, "attachments": {"1": "accelerometer"}}."""
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load topology {path!r}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("topology document must be a JSON object")
    ports = doc.get("router_ports", 3)
    if not isinstance(ports, int) or ports < 1:
        raise ConfigError("router_ports must be a positive integer")
    attachments = []
    for number_text, kind_text in dict(doc.get("attachments", {})).items():
        try:
            number = int(number_text)
        except (TypeError, ValueError):
            raise ConfigError(f"bad port number {number_text!r}") from None
        if not 1 <= number <= ports:
            raise ConfigError(f"port {number} outside 1..{ports}")
        kind = _NODE_KINDS.get(kind_text)
        if kind is None:
            raise ConfigError(
                f"unknown node kind {kind_text!r}; expected one of {sorted(_NODE_KINDS)}")
        attachments.append((number, kind))
    if len({n for n, _ in attachments}) != len(attachments):
        raise ConfigError("duplicate port attachment")
    return Topology(router_ports=ports, attachments=tuple(attachments))
