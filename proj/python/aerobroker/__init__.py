"""Python bindings for the aerobroker data brokerage core."""

import json

from ._core import (
    BrokerError,
    builtin_scenarios,
    canonicalize,
    digest,
    run_cli,
    verify_ledger_bytes,
    verify_ledger_file,
)
from ._core import Broker as _Broker

__all__ = [
    "ApiError",
    "Broker",
    "BrokerError",
    "builtin_scenarios",
    "canonicalize",
    "digest",
    "run_cli",
    "verify_ledger_bytes",
    "verify_ledger_file",
]


class ApiError(Exception):
    def __init__(self, status, code, message):
        super().__init__(f"{status} {code}: {message}")
        self.status = status
        self.code = code
        self.message = message


class Broker:
    """A broker with a manual clock, addressed through the JSON API."""

    def __init__(self, data_dir=None, config=None, now=1_700_000_000, seed=None):
        cfg = json.dumps(config or {})
        self._core = _Broker(None if data_dir is None else str(data_dir), cfg, now, seed)

    @property
    def now(self):
        return self._core.now

    @now.setter
    def now(self, value):
        self._core.now = value

    def advance(self, seconds):
        self._core.advance(seconds)

    def request(self, method, path, body=None, api_key=None, idempotency_key=None):
        """Returns (status, decoded body)."""
        text = "" if body is None else json.dumps(body)
        status, out = self._core.request(method, path, text, api_key, idempotency_key)
        return status, json.loads(out)

    def call(self, method, path, body=None, api_key=None, idempotency_key=None):
        """Like request() but raises ApiError on a non-2xx status."""
        status, out = self.request(method, path, body, api_key, idempotency_key)
        if status >= 300:
            err = out.get("error", {})
            raise ApiError(status, err.get("code"), err.get("message"))
        return out

    def canonical_state(self):
        return json.loads(self._core.canonical_state())
