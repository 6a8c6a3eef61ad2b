"""Prompt template loading and rendering.

Templates live as plain text files; placeholders like ``{content}`` are
replaced literally (no str.format, so arbitrary braces in user content are
safe). A directory of overrides may shadow any bundled template by name.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

TEMPLATE_NAMES = ("classify", "apply", "select", "segment", "meta")


def _bundled(name: str) -> str:
    return (resources.files("methodforge") / "prompts" / f"{name}.txt").read_text(encoding="utf-8")


class PromptLibrary:
    def __init__(self, override_dir: str | Path | None = None) -> None:
        self._templates: dict[str, str] = {}
        for name in TEMPLATE_NAMES:
            text = None
            if override_dir is not None:
                candidate = Path(override_dir) / f"{name}.txt"
                if candidate.exists():
                    text = candidate.read_text(encoding="utf-8")
            self._templates[name] = text if text is not None else _bundled(name)

    def render(self, name: str, **fields: str) -> str:
        text = self._templates[name]
        for key, value in fields.items():
            text = text.replace("{" + key + "}", value)
        return text


_default_library: PromptLibrary | None = None


def default_prompts() -> PromptLibrary:
    global _default_library
    if _default_library is None:
        _default_library = PromptLibrary()
    return _default_library
