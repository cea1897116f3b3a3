"""Service client used by the CLI.

With a server URL it talks HTTP; without one it spins up the ASGI app
in-process (same request/response path, no network), so batch runs and
tests work offline while keeping the service as the single compute entry.
"""

from __future__ import annotations

from typing import Optional


class ServiceClient:
    def __init__(self, server: Optional[str] = None, timeout: Optional[float] = None):
        self._owned = None
        if server:
            import httpx

            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=timeout)
        else:
            from fastapi.testclient import TestClient

            from .service.app import create_app

            self._owned = TestClient(create_app(), raise_server_exceptions=False)
            self._client = self._owned

    def post(self, path, payload):
        resp = self._client.post(path, json=payload)
        try:
            body = resp.json()
        except ValueError:
            body = {"error": {"code": "bad_response", "message": resp.text[:500]}}
        return resp.status_code, body

    def get(self, path):
        resp = self._client.get(path)
        return resp.status_code, resp.json()

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
