"""JSON scenario documents.

Example::

    {
      "shutters": ["a", "b", "c"],
      "photon_modes": ["a", "b"],
      "photon_amplitudes": [[0.7071067811865476, 0], [0.7071067811865476, 0]],
      "pre_state": [[0.5773502691896258, 0], [0.5773502691896258, 0], [0.5773502691896258, 0]],
      "post_state": [[0.5773502691896258, 0], [0.5773502691896258, 0], [-0.5773502691896258, 0]]
    }

Complex numbers are ``[re, im]`` pairs. ``pre_state`` defaults to the
uniform superposition; ``post_state`` may only be omitted for three shutters.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .linalg import LinalgError, StateVector
from .prepost import PrePostEnsemble
from .shutter import ShutterScenario, build_scenario, shutter_shape, three_box_post_state, uniform_state

FIELDS = ("shutters", "photon_modes", "photon_amplitudes", "pre_state", "post_state")


class ConfigError(ValueError):
    """Invalid scenario document; ``field`` and ``line`` locate the problem when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.reason = message
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _line_of(text: str | None, field: str) -> int | None:
    if not text:
        return None
    m = re.search(rf'"{re.escape(field)}"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _labels(value: Any, field: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(x, str) and x for x in value):
        raise ConfigError("expected a list of nonempty strings", field)
    return tuple(value)


def _complex_list(value: Any, field: str) -> tuple[complex, ...]:
    if not isinstance(value, list):
        raise ConfigError("expected a list of [re, im] pairs", field)
    out = []
    for i, pair in enumerate(value):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
            or not all(np.isfinite(pair))
        ):
            raise ConfigError(f"entry {i} is not a finite [re, im] pair: {pair!r}", f"{field}[{i}]")
        out.append(complex(pair[0], pair[1]))
    return tuple(out)


def _pairs(values) -> list[list[float]]:
    return [[float(c.real), float(c.imag)] for c in values]


@dataclass(frozen=True)
class ScenarioConfig:
    shutters: tuple[str, ...]
    photon_modes: tuple[str, ...]
    photon_amplitudes: tuple[complex, ...]
    pre_state: tuple[complex, ...] | None = None
    post_state: tuple[complex, ...] | None = None

    @classmethod
    def from_dict(cls, data: Any, text: str | None = None) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("scenario document must be a JSON object")
        try:
            unknown = sorted(set(data) - set(FIELDS))
            if unknown:
                raise ConfigError(f"unknown field(s) {unknown}", unknown[0])
            for name in FIELDS[:3]:
                if name not in data:
                    raise ConfigError("required field is missing", name)
            cfg = cls(
                shutters=_labels(data["shutters"], "shutters"),
                photon_modes=_labels(data["photon_modes"], "photon_modes"),
                photon_amplitudes=_complex_list(data["photon_amplitudes"], "photon_amplitudes"),
                pre_state=None if data.get("pre_state") is None else _complex_list(data["pre_state"], "pre_state"),
                post_state=None if data.get("post_state") is None else _complex_list(data["post_state"], "post_state"),
            )
            cfg._check_lengths()
        except ConfigError as exc:
            if exc.line is None and exc.field is not None:
                raise ConfigError(exc.reason, exc.field, _line_of(text, exc.field.split("[")[0])) from None
            raise
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
        return cls.from_dict(data, text)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        return cls.from_json(text)

    @classmethod
    def default(cls) -> "ScenarioConfig":
        return cls(("a", "b", "c"), ("a", "b"), (2 ** -0.5, 2 ** -0.5))

    @classmethod
    def from_scenario(cls, s: ShutterScenario) -> "ScenarioConfig":
        return cls(
            shutters=s.shutters,
            photon_modes=s.photon_modes,
            photon_amplitudes=tuple(complex(c) for c in s.photon_amplitudes),
            pre_state=tuple(complex(c) for c in s.pre_state.amplitudes),
            post_state=tuple(complex(c) for c in s.post_state.amplitudes),
        )

    def _check_lengths(self) -> None:
        if len(self.photon_amplitudes) != len(self.photon_modes):
            raise ConfigError(
                f"{len(self.photon_amplitudes)} amplitudes for {len(self.photon_modes)} photon modes",
                "photon_amplitudes",
            )
        for name in ("pre_state", "post_state"):
            v = getattr(self, name)
            if v is not None and len(v) != len(self.shutters):
                raise ConfigError(f"{len(v)} amplitudes for {len(self.shutters)} shutters", name)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "shutters": list(self.shutters),
            "photon_modes": list(self.photon_modes),
            "photon_amplitudes": _pairs(self.photon_amplitudes),
        }
        for name in ("pre_state", "post_state"):
            v = getattr(self, name)
            if v is not None:
                out[name] = _pairs(v)
        return out

    def to_scenario(self) -> ShutterScenario:
        try:
            return build_scenario(
                self.shutters, self.photon_modes, self.photon_amplitudes, self.pre_state, self.post_state
            )
        except LinalgError as exc:
            raise ConfigError(str(exc), _blame(str(exc))) from None

    def ensemble(self) -> PrePostEnsemble:
        """Pre/post pair on the shutter space only; photon fields are not consulted."""
        try:
            shape = shutter_shape(self.shutters)
            pre = uniform_state(shape) if self.pre_state is None else StateVector(shape, self.pre_state)
            if self.post_state is not None:
                post = StateVector(shape, self.post_state)
            elif shape.dim == 3:
                post = three_box_post_state(shape)
            else:
                raise ConfigError(f"no default post_state for {shape.dim} shutters", "post_state")
            return PrePostEnsemble(pre, post)
        except LinalgError as exc:
            raise ConfigError(str(exc), _blame(str(exc))) from None


_BLAME = (
    ("photon amplitudes", "photon_amplitudes"),
    ("photon_amplitudes", "photon_amplitudes"),
    ("photon", "photon_modes"),
    ("pre", "pre_state"),
    ("post", "post_state"),
    ("shutter", "shutters"),
)


def _blame(message: str) -> str | None:
    for phrase, field in _BLAME:
        if phrase in message:
            return field
    return None
