"""Plain-text model files: one ``name = value`` per line.

``model = hh|sds`` selects the parameter set; every other key must be a field of
that set (parameters, ``*_init`` values, ``t_end``). ``#`` starts a comment.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from pydantic import BaseModel, ValidationError

from parthines.core.errors import ModelConfigError
from parthines.schemas.models import HHParams, SDSParams

ModelParams = Union[HHParams, SDSParams]

PARAMS_BY_MODEL: dict[str, type[BaseModel]] = {"hh": HHParams, "sds": SDSParams}


def parse_model_text(text: str, source: str = "<text>") -> tuple[str, ModelParams]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ModelConfigError(f"{source}:{lineno}: expected 'name = value', got {raw!r}")
        if key in entries:
            raise ModelConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value

    model = entries.pop("model", None)
    if model not in PARAMS_BY_MODEL:
        raise ModelConfigError(
            f"{source}: 'model' must be one of {sorted(PARAMS_BY_MODEL)}, got {model!r}"
        )
    try:
        params = PARAMS_BY_MODEL[model].model_validate(entries)
    except ValidationError as exc:
        raise ModelConfigError(f"{source}: {exc}") from exc
    return model, params  # type: ignore[return-value]


def load_model_file(path: Union[str, Path]) -> tuple[str, ModelParams]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelConfigError(f"cannot read {path}: {exc}") from exc
    return parse_model_text(text, str(path))


def dump_model_text(model: str, params: ModelParams) -> str:
    """Serialise with repr() so reloading reproduces every float exactly."""
    lines = [f"model = {model}"]
    lines += [f"{key} = {value!r}" for key, value in params.model_dump().items()]
    return "\n".join(lines) + "\n"


def dump_model_file(path: Union[str, Path], model: str, params: ModelParams) -> None:
    Path(path).write_text(dump_model_text(model, params), encoding="utf-8")
