from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

_FILES = {"system": "system.txt", "traffic_rules": "traffic_rules.txt", "reflection": "reflection.txt"}


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class PromptSet:
    """System prompt, traffic rules and reflection prompt as versioned text."""

    system: str
    traffic_rules: str
    reflection: str

    def __post_init__(self):
        for name in _FILES:
            if not getattr(self, name).strip():
                raise ValueError(f"prompt {name!r} is empty")

    def hashes(self) -> dict[str, str]:
        return {name: text_hash(getattr(self, name)) for name in _FILES}

    @classmethod
    def load(cls, directory=None) -> "PromptSet":
        """Read the prompt files from ``directory`` or the packaged defaults."""
        if directory is None:
            root = resources.files(__package__).joinpath("prompts")
            texts = {name: root.joinpath(fn).read_text(encoding="utf-8") for name, fn in _FILES.items()}
        else:
            d = Path(directory)
            texts = {name: (d / fn).read_text(encoding="utf-8") for name, fn in _FILES.items()}
        return cls(**texts)
