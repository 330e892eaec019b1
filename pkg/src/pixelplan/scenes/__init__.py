"""Authored scene fixtures for the benchmark suites."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import ValidationError
from ..types import Scene

_FIXTURE_DIR = Path(__file__).parent


def builtin_scene_names() -> list[str]:
    return sorted(p.stem for p in _FIXTURE_DIR.glob("*.json"))


def load_builtin(name: str) -> Scene:
    path = _FIXTURE_DIR / f"{name}.json"
    if not path.is_file():
        raise ValidationError(
            f"unknown scene fixture {name!r}; available: {builtin_scene_names()}")
    return Scene.from_dict(json.loads(path.read_text(encoding="utf-8")))


def empty_scene(image_size=(640, 480)) -> Scene:
    return Scene(obstacles=(), safety_margin=0.0, image_size=tuple(image_size))


def resolve_scene(spec: str | None, image_size=(640, 480)) -> Scene:
    """A fixture name, a path to a scene JSON, or None for the empty scene."""
    if spec is None or spec == "none":
        return empty_scene(image_size)
    if spec in builtin_scene_names():
        return load_builtin(spec)
    path = Path(spec)
    if path.is_file():
        return Scene.from_dict(json.loads(path.read_text(encoding="utf-8")))
    raise ValidationError(f"scene {spec!r} is neither a fixture name nor a file")
