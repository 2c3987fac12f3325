"""spwctl: command-line client for the control service.

Every subcommand is a thin wrapper over one HTTP endpoint; `serve` runs
the service itself. Register offsets are hexadecimal without prefix to
mirror the interactive console style; data values are decimal.

Exit codes: 0 success, 1 command failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import httpx

DEFAULT_URL = "http://127.0.0.1:8000"
ENV_URL = "SPW_URL"


def hex_offset(text: str) -> int:
    try:
        value = int(text, 16)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a hexadecimal offset") from None
    if value < 0:
        raise argparse.ArgumentTypeError("offset must be non-negative")
    return value


def nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 0:
        raise argparse.ArgumentTypeError("value must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spwctl", description="control the emulated PCIe-SpaceWire card")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--url", default=os.environ.get(ENV_URL, DEFAULT_URL),
        help="service base URL (or $SPW_URL)")
    common.add_argument(
        "--ticks", type=nonneg_int, default=0, metavar="N",
        help="advance simulated time N ticks before running the command")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    add_parser("bar0", help="report the BAR0 physical address")

    read = add_parser("read", help="read a register")
    read.add_argument("--offset", type=hex_offset, required=True,
                      help="register offset, hex without prefix")
    read.add_argument("--len", type=int, default=4, dest="length",
                      help="access width in bytes (1, 2 or 4)")

    write = add_parser("write", help="write a register")
    write.add_argument("--offset", type=hex_offset, required=True,
                       help="register offset, hex without prefix")
    write.add_argument("--data", type=nonneg_int, required=True,
                       help="value to write, decimal")
    write.add_argument("--len", type=int, default=4, dest="length",
                       help="access width in bytes (1, 2 or 4)")

    link = add_parser("link", help="issue a link command")
    link.add_argument("action", choices=("enable", "reset"))
    link.add_argument("port", type=int)

    add_parser("discover", help="report the port discovery mask")

    acquire = add_parser("acquire", help="drain buffered packets")
    acquire.add_argument("--max-bytes", type=nonneg_int, default=65536)

    tick = add_parser("tick", help="advance simulated time")
    tick.add_argument("n", type=nonneg_int, nargs="?", default=1)

    inject = add_parser("inject", help="override the accelerometer sample")
    inject.add_argument("--x", type=int, required=True)
    inject.add_argument("--y", type=int, default=0)
    inject.add_argument("--z", type=int, default=0)

    serve = add_parser("serve", help="run the control service")
    serve.add_argument("--config", default=None,
                       help="config file path (or $SPW_CONFIG)")
    serve.add_argument("--panel", default=None, metavar="DIR",
                       help="serve a built web panel from this directory")
    serve.add_argument("--auto-tick", action="store_true",
                       help="advance time continuously while serving")

    return parser


def _fail(response) -> int:
    try:
        detail = response.json().get("detail", response.text)
    except ValueError:
        detail = response.text
    print(f"error: {detail}", file=sys.stderr)
    return 1


def _cmd_bar0(client) -> int:
    response = client.get("/api/device")
    if response.status_code >= 400:
        return _fail(response)
    print("bar0 addr:0x%08X" % response.json()["bar0_phys"])
    return 0


def _cmd_read(client, args) -> int:
    response = client.get("/api/registers",
                          params={"offset": args.offset, "len": args.length})
    if response.status_code >= 400:
        return _fail(response)
    body = response.json()
    print("read data:%d" % body["data"])
    print("datasize:%d" % body["len"])
    return 0


def _cmd_write(client, args) -> int:
    response = client.post("/api/registers", json={
        "offset": args.offset, "len": args.length, "data": args.data})
    if response.status_code >= 400:
        return _fail(response)
    print("written:%d" % response.json()["written"])
    return 0


def _cmd_link(client, args) -> int:
    response = client.post(f"/api/links/{args.port}/{args.action}")
    if response.status_code >= 400:
        return _fail(response)
    print(f"link {args.action} {args.port}:ok")
    return 0


def _cmd_discover(client) -> int:
    response = client.get("/api/ports")
    if response.status_code >= 400:
        return _fail(response)
    print("port mask:0x%02X" % response.json()["mask"])
    return 0


def _cmd_acquire(client, args) -> int:
    response = client.post("/api/acquire", json={"max_bytes": args.max_bytes})
    if response.status_code >= 400:
        return _fail(response)
    body = response.json()
    print("acquired bytes:%d" % body["bytes"])
    for packet in body["packets"]:
        print("packet len:%d data:%s" % (len(packet) // 2, packet))
    return 0


def _cmd_tick(client, args) -> int:
    response = client.post("/api/tick", json={"n": args.n})
    if response.status_code >= 400:
        return _fail(response)
    print("tick:%d" % response.json()["tick"])
    return 0


def _cmd_inject(client, args) -> int:
    response = client.post("/api/inject",
                           json={"x": args.x, "y": args.y, "z": args.z})
    if response.status_code >= 400:
        return _fail(response)
    print("inject:ok")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .config import load_config
    from .service.api import create_app

    config = load_config(args.config)
    if args.auto_tick:
        config.auto_tick = True
    app = create_app(config, panel_dir=args.panel)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port)
    return 0


def run_cli(argv: Optional[list[str]] = None, client=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "serve":
        return _cmd_serve(args)

    owned = client is None
    if owned:
        client = httpx.Client(base_url=args.url, timeout=10.0)
    try:
        if args.ticks:
            response = client.post("/api/tick", json={"n": args.ticks})
            if response.status_code >= 400:
                return _fail(response)
        if args.command == "bar0":
            return _cmd_bar0(client)
        if args.command == "read":
            return _cmd_read(client, args)
        if args.command == "write":
            return _cmd_write(client, args)
        if args.command == "link":
            return _cmd_link(client, args)
        if args.command == "discover":
            return _cmd_discover(client)
        if args.command == "acquire":
            return _cmd_acquire(client, args)
        if args.command == "tick":
            return _cmd_tick(client, args)
        if args.command == "inject":
            return _cmd_inject(client, args)
        parser.error(f"unknown command {args.command!r}")
        return 2
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if owned:
            client.close()


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
