"""Driver install manifest: an INI subset with [Version] and [Interface].

[Version] names the device class, provider and a DriverVer of the form
``MM/DD/YYYY,major.minor.build.revision``; [Interface] carries the GUID
callers use to locate the device.
"""

from __future__ import annotations

import configparser
import io
import re
import uuid
from dataclasses import dataclass

_DRIVER_VER_RE = re.compile(
    r"^\s*(\d{1,2})/(\d{1,2})/(\d{4})\s*,\s*(\d+)\.(\d+)\.(\d+)\.(\d+)\s*$")


class ManifestError(Exception):
    pass


class MissingSectionError(ManifestError):
    pass


class MissingKeyError(ManifestError):
    pass


class BadVersionFormatError(ManifestError):
    pass


class BadGuidError(ManifestError):
    pass


@dataclass(frozen=True)
class InstallManifest:
    device_class: str
    provider: str
    driver_date: tuple[int, int, int]  # (month, day, year)
    driver_version: tuple[int, int, int, int]
    interface_guid: uuid.UUID

    @property
    def driver_ver_text(self) -> str:
        month, day, year = self.driver_date
        return "%02d/%02d/%04d,%d.%d.%d.%d" % ((month, day, year) + self.driver_version)


def parse_manifest(text: str) -> InstallManifest:
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=(";",), inline_comment_prefixes=(";",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ManifestError(f"unparseable manifest: {exc}") from exc

    sections = {name.lower(): name for name in parser.sections()}

    def section(name: str) -> configparser.SectionProxy:
        actual = sections.get(name.lower())
        if actual is None:
            raise MissingSectionError(f"manifest has no [{name}] section")
        return parser[actual]

    def key(sec: configparser.SectionProxy, name: str) -> str:
        value = sec.get(name)
        if value is None:
            raise MissingKeyError(f"[{sec.name}] has no {name} key")
        return value.strip()

    version = section("Version")
    interface = section("Interface")

    device_class = key(version, "Class")
    provider = key(version, "Provider")
    ver_text = key(version, "DriverVer")
    match = _DRIVER_VER_RE.match(ver_text)
    if not match:
        raise BadVersionFormatError(
            f"DriverVer must look like MM/DD/YYYY,a.b.c.d, got {ver_text!r}")
    month, day, year = int(match[1]), int(match[2]), int(match[3])
    if not (1 <= month <= 12 and 1 <= day <= 31):
        raise BadVersionFormatError(f"DriverVer has no such date: {ver_text!r}")
    numbers = tuple(int(match[i]) for i in range(4, 8))

    guid_text = key(interface, "Guid").strip("{}")
    try:
        guid = uuid.UUID(guid_text)
    except ValueError as exc:
        raise BadGuidError(f"bad interface GUID {guid_text!r}") from exc

    return InstallManifest(
        device_class=device_class,
        provider=provider,
        driver_date=(month, day, year),
        driver_version=numbers,  # type: ignore[arg-type]
        interface_guid=guid,
    )


def serialize_manifest(manifest: InstallManifest) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key capitalization
    parser["Version"] = {
        "Class": manifest.device_class,
        "Provider": manifest.provider,
        "DriverVer": manifest.driver_ver_text,
    }
    parser["Interface"] = {"Guid": "{%s}" % manifest.interface_guid}
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()


def load_manifest_file(path) -> InstallManifest:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_manifest(handle.read())
