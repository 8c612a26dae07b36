"""HTTP client for the service API.

Without a server URL the app runs in-process behind the same HTTP
interface (ASGI transport), so the CLI works standalone with identical
request/response semantics; pointing at a remote server changes nothing
but the transport.
"""

from __future__ import annotations

import httpx


class ServiceError(RuntimeError):
    def __init__(self, status_code: int, detail: str):
        super().__init__(f"service returned {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


class ServiceClient:
    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                # fastapi's testclient import warns about its own httpx pin
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .app import create_app

            self._client = TestClient(create_app())

    def close(self) -> None:
        self._client.close()

    def _handle(self, resp: httpx.Response) -> dict:
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except Exception:
                detail = resp.text
            raise ServiceError(resp.status_code, str(detail))
        return resp.json()

    def get(self, path: str) -> dict:
        return self._handle(self._client.get(path))

    def post(self, path: str, payload: dict) -> dict:
        return self._handle(self._client.post(path, json=payload))
