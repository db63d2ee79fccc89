"""Command line: run a space, call into one, or edit its rules live."""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import threading

from .errors import PolicyRPCError
from .negotiation import ManagerMode, PolicyManager
from .policy import CallSite
from .proxy import is_proxy, reference_of
from .rpc import Space
from .scenario import run_pda_scenario, sample_book
from .transport import parse_addr
from .typeregistry import default_types
from .wire import RemoteReference


def _mechanism(text: str) -> str:
    return text.upper() if text.lower() in ("by_value", "by_reference") else text


def to_plain(value, _seen=None):
    """JSON-friendly view of a decoded value."""
    if _seen is None:
        _seen = set()
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, list):
        return [to_plain(v, _seen) for v in value]
    if is_proxy(value):
        return {"ref": str(reference_of(value))}
    if id(value) in _seen:
        return {"cycle": type(value).__name__}
    _seen.add(id(value))
    info = default_types.info_for(value)
    fields = info.get_fields(value) if info else vars(value).items()
    out = {"type": info.name if info else type(value).__name__,
           "fields": {k: to_plain(v, _seen) for k, v in fields}}
    _seen.discard(id(value))
    return out


def _connect(args):
    space = Space(ManagerMode.COOPERATIVE if args.cooperative else ManagerMode.AUTONOMOUS,
                  name="cli")
    if getattr(args, "rules", None):
        space.policy.load_file(args.rules)
    return space, space.connect_tcp(args.addr)


def cmd_serve(args) -> int:
    space = Space(ManagerMode.COOPERATIVE if args.cooperative else ManagerMode.AUTONOMOUS,
                  name="server")
    if args.rules:
        n = space.policy.load_file(args.rules)
        print(f"loaded {n} rules from {args.rules}", flush=True)
    if not args.no_demo:
        space.bind("address-book", sample_book())
    server = space.serve_tcp(args.addr)
    host, port = server.address
    print(f"listening {host}:{port} space {space.space_id}", flush=True)
    for name, ref in sorted(space.names.items()):
        print(f"bound {name} {ref}", flush=True)
    stop = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    try:
        stop.wait()
    except KeyboardInterrupt:
        pass
    space.close()
    return 0


def cmd_call(args) -> int:
    call_args = json.loads(args.args)
    if not isinstance(call_args, list):
        raise ValueError("--args must be a JSON array")
    space, conn = _connect(args)
    try:
        if args.ref.count(":") >= 2:
            target = conn.proxy(RemoteReference.parse(args.ref))
        else:
            target = conn.lookup(args.ref)
        result = getattr(target, args.method)(*call_args)
        print(json.dumps(to_plain(result)))
    finally:
        space.close()
    return 0


def cmd_set_policy(args) -> int:
    space, conn = _connect(args)
    try:
        control = conn.control()
        ov = not args.non_overridable
        mech = _mechanism(args.mechanism)
        if args.kind == "class":
            control.set_class_policy(args.class_name, mech, ov)
        elif args.kind == "method":
            control.set_method_policy(args.class_name, args.method, mech, ov, args.depth)
        elif args.kind == "param":
            control.set_param_policy(args.class_name, args.method, args.index, mech, ov,
                                     args.depth)
        else:
            control.set_default_policy(mech)
        print(control.rules())
    finally:
        space.close()
    return 0


def cmd_resolve(args) -> int:
    site = CallSite.from_dict(json.loads(args.site))
    if args.addr:
        space, conn = _connect(args)
        try:
            print(conn.control().resolve(json.dumps(site.to_dict())))
        finally:
            space.close()
        return 0
    manager = PolicyManager()
    if args.rules:
        manager.load_file(args.rules)
    print(json.dumps(manager.resolve(site).to_dict()))
    return 0


def cmd_scenario(args) -> int:
    mode = ManagerMode.AUTONOMOUS if args.autonomous else ManagerMode.COOPERATIVE
    report = run_pda_scenario("tcp" if args.tcp else "in_memory", mode)
    print(report)
    passed = sum(ok for _, ok, _ in report.results)
    print(f"{passed}/{len(report.results)} assertions passed in {report.elapsed:.2f}s")
    return 0 if report.passed else 1


def _addr(text):
    try:
        parse_addr(text)
    except PolicyRPCError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="policyrpc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run an address space over TCP")
    p.add_argument("--addr", type=_addr, default="127.0.0.1:7700")
    p.add_argument("--rules", help="JSON rule file to load at startup")
    p.add_argument("--cooperative", action="store_true")
    p.add_argument("--no-demo", action="store_true", help="don't bind the sample address book")
    p.set_defaults(func=cmd_serve)

    def client(p):
        p.add_argument("--addr", type=_addr, required=True)
        p.add_argument("--rules", help="rules for the client's own space")
        p.add_argument("--cooperative", action="store_true")

    p = sub.add_parser("call", help="invoke a method on a remote object")
    client(p)
    p.add_argument("--ref", required=True, help="SPACE:OBJ:TYPE or a bound name")
    p.add_argument("--method", required=True)
    p.add_argument("--args", default="[]", help="JSON array of arguments")
    p.set_defaults(func=cmd_call)

    p = sub.add_parser("set-policy", help="change a rule in a running space")
    client(p)
    kinds = p.add_subparsers(dest="kind", required=True)
    for kind in ("class", "method", "param", "default"):
        k = kinds.add_parser(kind)
        if kind != "default":
            k.add_argument("class_name")
        if kind in ("method", "param"):
            k.add_argument("method")
        if kind == "param":
            k.add_argument("index", type=int)
        k.add_argument("mechanism")
        k.add_argument("--non-overridable", action="store_true")
        k.add_argument("--depth", type=int, default=None)
    p.set_defaults(func=cmd_set_policy)

    p = sub.add_parser("resolve", help="print the decision for a call site")
    p.add_argument("--addr", type=_addr)
    p.add_argument("--rules")
    p.add_argument("--cooperative", action="store_true")
    p.add_argument("--site", required=True,
                   help='e.g. {"class":"Book","method":"get","role":"return","actual":"Entry"}')
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("scenario", help="run a demonstration")
    p.add_argument("name", choices=["pda"])
    p.add_argument("--tcp", action="store_true")
    p.add_argument("--autonomous", action="store_true", help="PDA manager ignores the desktop")
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (PolicyRPCError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
