"""File formats for every pipeline artifact.

- dataset: JSON Lines, one frame per line
  {frame_index, joint_config, image_state, joint_velocity, dt}
- pairs:   JSON Lines {k_start, k_end, dq}
- scene:   JSON {image_size, safety_margin, obstacles}
- roadmap: JSON {metric_tag, k, nodes, frame_indices, joint_configs, edges}
- model:   JSON {net, input_mean, input_std}
- path:    JSON {metric_tag, states, costs, joint_configs, frame_indices}
- track log: JSON Lines of step records, plus a JSON summary

Writers are canonical (sorted keys, fixed separators) so identical values
produce identical bytes; readers raise ParseError with the byte offset and,
where known, the offending field path.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import ParseError
from .mlp import DisplacementModel
from .pairs import PairSample
from .roadmap import Roadmap
from .sim import Frame
from .types import ImageState, JointConfig, PlannedPath, Scene


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(obj))
        fh.write("\n")


def read_json(path):
    data = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", byte_offset=exc.pos) from exc


def write_jsonl(path, records) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(canonical_dumps(rec))
            fh.write("\n")


def read_jsonl(path):
    """Yield (record, line_start_offset); malformed lines raise ParseError at
    their absolute byte offset (a truncated final record errors at EOF)."""
    offset = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if stripped:
                try:
                    yield json.loads(stripped), offset
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{path}: {exc.msg}",
                                     byte_offset=offset + exc.pos) from exc
            offset += len(line.encode("utf-8"))


def _require(record: dict, key: str, offset: int, path) -> object:
    if key not in record:
        raise ParseError(f"{path}: missing key", byte_offset=offset, field_path=key)
    return record[key]


# -- dataset ---------------------------------------------------------------

def save_dataset(frames: list[Frame], path) -> None:
    write_jsonl(path, ({
        "frame_index": f.frame_index,
        "joint_config": f.joint_config.to_list(),
        "image_state": f.image_state.to_list(),
        "joint_velocity": list(f.joint_velocity),
        "dt": f.dt,
    } for f in frames))


def load_dataset(path) -> list[Frame]:
    frames = []
    for rec, offset in read_jsonl(path):
        try:
            frames.append(Frame(
                frame_index=int(_require(rec, "frame_index", offset, path)),
                joint_config=JointConfig.from_list(_require(rec, "joint_config", offset, path)),
                image_state=ImageState.from_list(_require(rec, "image_state", offset, path)),
                joint_velocity=tuple(float(v) for v in _require(rec, "joint_velocity", offset, path)),
                dt=float(_require(rec, "dt", offset, path)),
            ))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: {exc}", byte_offset=offset) from exc
    return frames


# -- pair samples ----------------------------------------------------------

def save_pairs(samples: list[PairSample], path) -> None:
    write_jsonl(path, (s.to_dict() for s in samples))


def load_pairs(path) -> list[PairSample]:
    out = []
    for rec, offset in read_jsonl(path):
        try:
            out.append(PairSample.from_dict(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: {exc}", byte_offset=offset) from exc
    return out


# -- single-document artifacts ----------------------------------------------

def save_scene(scene: Scene, path) -> None:
    write_json(path, scene.to_dict())


def load_scene(path) -> Scene:
    return Scene.from_dict(read_json(path))


def save_roadmap(rm: Roadmap, path) -> None:
    write_json(path, rm.to_dict())


def load_roadmap(path) -> Roadmap:
    return Roadmap.from_dict(read_json(path))


def save_model(model: DisplacementModel, path) -> None:
    write_json(path, model.to_dict())


def load_model(path) -> DisplacementModel:
    try:
        return DisplacementModel.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def save_path(p: PlannedPath, path) -> None:
    write_json(path, p.to_dict())


def load_path(path) -> PlannedPath:
    return PlannedPath.from_dict(read_json(path))


def save_track_log(records, path) -> None:
    write_jsonl(path, (r.to_dict() for r in records))


def resolve_out_dir(explicit: str | None = None) -> Path:
    """Output directory: explicit argument, then PIXELPLAN_OUT_DIR, then cwd."""
    if explicit:
        return Path(explicit)
    return Path(os.environ.get("PIXELPLAN_OUT_DIR", "."))
