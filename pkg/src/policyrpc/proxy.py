"""Client-side stand-ins for remote objects."""

from __future__ import annotations

from functools import partial

from .wire import RemoteReference


class RemoteProxy:
    """Forwards attribute calls to the object named by a remote reference.

    ``proxy.set_phone("555")`` runs ``set_phone`` in the exporting space.
    Attribute access always yields a callable; there is no remote field
    access.
    """

    __slots__ = ("_rpc_ref", "_rpc_conn", "__weakref__")

    def __init__(self, ref: RemoteReference, connection):
        object.__setattr__(self, "_rpc_ref", ref)
        object.__setattr__(self, "_rpc_conn", connection)

    def __getattr__(self, name):
        if name.startswith("__"):
            raise AttributeError(name)
        return partial(self._rpc_conn.invoke, self._rpc_ref, name)

    def __setattr__(self, name, value):
        raise AttributeError("remote proxies are read-only")

    def __repr__(self):
        return f"<RemoteProxy {self._rpc_ref}>"


def reference_of(proxy: RemoteProxy) -> RemoteReference:
    return proxy._rpc_ref


def connection_of(proxy: RemoteProxy):
    return proxy._rpc_conn


def invoke_remote(proxy: RemoteProxy, method_name: str, *args):
    return proxy._rpc_conn.invoke(proxy._rpc_ref, method_name, *args)


def is_proxy(obj) -> bool:
    return isinstance(obj, RemoteProxy)
