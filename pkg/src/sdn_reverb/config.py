"""Experiment configuration file (YAML), validated with pydantic.

Example::

    scene:
      room_dims: [5.0, 5.0, 5.0]
      source_pos: [1.3, 2.1, 1.7]
      mic_pos: [3.6, 3.0, 2.9]
      absorption: 0.5
    matrix:
      kind: isotropic
      seed: 0
    render:
      duration: 1.0
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .geometry import N_WALLS, DirectivityPattern, SceneConfig
from .scattering import MATRIX_KINDS


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FilterSpec(_Strict):
    b: list[float]
    a: list[float] = [1.0]


class DirectivitySpec(_Strict):
    kind: Literal["omni", "cardioid", "table"] = "omni"
    a: float = 1.0
    angles: list[float] = []
    gains: list[float] = []
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def pattern(self) -> DirectivityPattern:
        return DirectivityPattern(self.kind, self.a, tuple(self.angles), tuple(self.gains))


class SceneSpec(_Strict):
    room_dims: tuple[float, float, float]
    source_pos: tuple[float, float, float]
    mic_pos: tuple[float, float, float]
    absorption: Union[float, list[float]] = 0.5
    wall_filter: Optional[FilterSpec] = None
    wall_filters: Optional[list[Optional[FilterSpec]]] = None
    sample_rate: float = 44100.0
    sound_speed: float = 343.0
    source_directivity: DirectivitySpec = DirectivitySpec()
    mic_directivity: DirectivitySpec = DirectivitySpec()
    direct_path: bool = True
    reflection_sign: Literal[1, -1] = 1

    @model_validator(mode="after")
    def _check(self):
        if isinstance(self.absorption, list) and len(self.absorption) != N_WALLS:
            raise ValueError(f"absorption list needs {N_WALLS} values")
        if self.wall_filter is not None and self.wall_filters is not None:
            raise ValueError("give either wall_filter or wall_filters, not both")
        if self.wall_filters is not None and len(self.wall_filters) != N_WALLS:
            raise ValueError(f"wall_filters needs {N_WALLS} entries")
        return self

    def to_scene(self) -> SceneConfig:
        filters = None
        if self.wall_filter is not None:
            filters = tuple((self.wall_filter.b, self.wall_filter.a) for _ in range(N_WALLS))
        elif self.wall_filters is not None:
            filters = tuple(None if f is None else (f.b, f.a) for f in self.wall_filters)
        alpha = self.absorption
        return SceneConfig(
            room_dims=self.room_dims,
            source_pos=self.source_pos,
            mic_pos=self.mic_pos,
            wall_absorption=tuple(alpha) if isinstance(alpha, list) else (alpha,) * N_WALLS,
            sample_rate=self.sample_rate,
            sound_speed=self.sound_speed,
            source_dir=self.source_directivity.pattern(),
            source_axis=self.source_directivity.axis,
            mic_dir=self.mic_directivity.pattern(),
            mic_axis=self.mic_directivity.axis,
            direct_path_enabled=self.direct_path,
            reflection_sign=float(self.reflection_sign),
            wall_filters=filters,
        )


class MatrixSpec(_Strict):
    kind: Literal[MATRIX_KINDS] = "isotropic"
    seed: int = 0
    admittances: Optional[list[float]] = None


class RenderSpec(_Strict):
    duration: float = Field(1.0, gt=0)
    air_absorption: float = Field(0.0, ge=0, lt=1)


class AnalysisSpec(_Strict):
    edc: bool = True
    t60: bool = True
    ned: bool = True
    octave_bands: list[float] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0]
    fit_range_db: tuple[float, float] = (-5.0, -35.0)
    ned_window: float = 0.020
    ned_hop: float = 0.005


class OutputSpec(_Strict):
    path: Optional[str] = None
    format: Literal["wav", "csv"] = "wav"


class ToolkitConfig(_Strict):
    scene: SceneSpec
    matrix: MatrixSpec = MatrixSpec()
    render: RenderSpec = RenderSpec()
    analysis: AnalysisSpec = AnalysisSpec()
    output: OutputSpec = OutputSpec()

    def dumps(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)


def parse_config(text: str) -> ToolkitConfig:
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError("configuration must be a mapping")
    return ToolkitConfig.model_validate(data)


def load_config(path) -> ToolkitConfig:
    return parse_config(Path(path).read_text())


DEFAULT_CONFIG = ToolkitConfig(
    scene=SceneSpec(room_dims=(5.0, 5.0, 5.0), source_pos=(1.3, 2.1, 1.7), mic_pos=(3.6, 3.0, 2.9))
)
