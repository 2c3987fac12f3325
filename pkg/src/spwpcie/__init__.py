"""Desk-scale emulation of a PCIe-SpaceWire interface card and its driver stack.

Layers, bottom to top: a simulated kernel (`kernel`), the emulated card
(`card`), a deterministic link network (`network`), an event-driven
driver framework (`wdf`), the concrete card driver (`driver`), a binary
control protocol (`ioctl`), and an HTTP/WebSocket control service
(`service`) with a CLI (`cli`).
"""

__version__ = "0.1.0"
