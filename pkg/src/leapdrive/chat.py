"""Minimal JSON-over-HTTP chat client shared by the external adapters.

Request body: ``{"system": str, "messages": [{"role": str, "content": str}]}``;
response body: ``{"content": str}``. Endpoint and key come from arguments or
the ``LEAPDRIVE_CHAT_ENDPOINT`` / ``LEAPDRIVE_CHAT_API_KEY`` environment variables.
"""

from __future__ import annotations

import os

import httpx

DEFAULT_TIMEOUT = 10.0
ENDPOINT_ENV = "LEAPDRIVE_CHAT_ENDPOINT"
API_KEY_ENV = "LEAPDRIVE_CHAT_API_KEY"


class ChatError(RuntimeError):
    pass


class ChatTimeout(ChatError):
    pass


class ChatClient:
    def __init__(self, endpoint: str | None = None, api_key: str | None = None,
                 timeout: float = DEFAULT_TIMEOUT, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not self.endpoint:
            raise ChatError(f"no chat endpoint configured (set {ENDPOINT_ENV})")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout = timeout
        self._transport = transport

    @staticmethod
    def build_request(system: str, messages: list[dict]) -> dict:
        return {"system": system, "messages": [{"role": m["role"], "content": m["content"]} for m in messages]}

    def complete(self, system: str, messages: list[dict]) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            with httpx.Client(transport=self._transport, timeout=self.timeout) as client:
                resp = client.post(self.endpoint, json=self.build_request(system, messages), headers=headers)
        except httpx.TimeoutException as exc:
            raise ChatTimeout(f"chat call exceeded {self.timeout} s") from exc
        except httpx.HTTPError as exc:
            raise ChatError(f"chat transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise ChatError(f"chat endpoint returned HTTP {resp.status_code}")
        try:
            content = resp.json()["content"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ChatError("malformed chat response: expected {'content': str}") from exc
        if not isinstance(content, str):
            raise ChatError("malformed chat response: content is not text")
        return content
