"""Adapter seam for an external vision-language perceiver.

Only the request/response contract ships here; the built-in describer in
:mod:`.describe` is what the harness uses.
"""

from __future__ import annotations

import json
from typing import Protocol

import numpy as np

from ..chat import ChatClient, ChatError
from .describe import CriticalObject, EgoContext, SceneDescription


class Perceiver(Protocol):
    def describe(self, frames: list, prompt: str) -> SceneDescription: ...


def serialize_frame(frame) -> dict | str:
    """Feature grids become ``{"shape", "data"}``; paths pass through as strings."""
    if isinstance(frame, (str,)):
        return frame
    arr = np.asarray(frame, dtype=float)
    return {"shape": list(arr.shape), "data": arr.ravel().tolist()}


def build_request(frames: list, prompt: str) -> dict:
    return {"frames": [serialize_frame(f) for f in frames], "prompt": prompt}


def parse_response(payload: dict, frame: int = 0, ego: EgoContext | None = None) -> SceneDescription:
    try:
        objects = sorted((CriticalObject.from_dict(o) for o in payload["objects"]), key=lambda o: o.distance)
        summary = str(payload["summary"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ChatError(f"malformed perceiver response: {exc}") from exc
    return SceneDescription(frame=frame, objects=tuple(objects), ego=ego or EgoContext(0.0, "", 0.0), summary=summary)


class ExternalPerceiver:
    """Sends serialized frames and the perceiver prompt over the chat protocol.

    The model is expected to answer with a JSON object
    ``{"objects": [CriticalObject fields...], "summary": str}``.
    """

    def __init__(self, client: ChatClient, system_prompt: str):
        self.client = client
        self.system_prompt = system_prompt

    def describe(self, frames: list, prompt: str, frame: int = 0, ego: EgoContext | None = None) -> SceneDescription:
        request = build_request(frames, prompt)
        content = self.client.complete(self.system_prompt, [{"role": "user", "content": json.dumps(request)}])
        try:
            payload = json.loads(content)
        except json.JSONDecodeError as exc:
            raise ChatError("perceiver reply is not JSON") from exc
        return parse_response(payload, frame, ego)
