"""CNN models as ordered per-layer resource descriptors.

Profile CSV format (UTF-8, LF)::

    #input_bytes=581910
    # optional comment lines (kept on round trip)
    index,name,mem_bytes,flops,output_bytes
    1,conv1,4569072,171271800,4567248
    ...
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ParseError, ValidationError

HEADER = ["index", "name", "mem_bytes", "flops", "output_bytes"]
PRAGMA = "#input_bytes="


@dataclass(frozen=True)
class LayerSpec:
    index: int
    name: str
    mem_bytes: int
    flops: int
    output_bytes: int


@dataclass(frozen=True)
class CnnProfile:
    model_name: str
    layers: tuple[LayerSpec, ...]
    input_bytes: int
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        validate(self)

    @property
    def M(self) -> int:
        return len(self.layers)

    @property
    def mem(self) -> list[int]:
        return [l.mem_bytes for l in self.layers]

    @property
    def flops(self) -> list[int]:
        return [l.flops for l in self.layers]

    @property
    def outputs(self) -> list[int]:
        return [l.output_bytes for l in self.layers]

    def head(self, m: int) -> "CnnProfile":
        """First ``m`` layers, e.g. a truncated VGG head for desk-scale runs."""
        return CnnProfile(f"{self.model_name}[:{m}]", self.layers[:m], self.input_bytes, self.notes)


def validate(profile: CnnProfile) -> None:
    if not profile.layers:
        raise ValidationError("profile has no layers")
    if not profile.input_bytes > 0:
        raise ValidationError("input_bytes must be positive")
    last = len(profile.layers)
    for pos, layer in enumerate(profile.layers, start=1):
        if layer.index != pos:
            raise ValidationError(f"expected index {pos}, got {layer.index}", row=pos)
        if layer.mem_bytes <= 0:
            raise ValidationError("mem_bytes must be positive", row=pos)
        if layer.flops <= 0:
            raise ValidationError("flops must be positive", row=pos)
        if layer.output_bytes < 0 or (pos == last and layer.output_bytes < 1):
            raise ValidationError("output_bytes out of range", row=pos)


def total_memory(profile: CnnProfile) -> int:
    return sum(l.mem_bytes for l in profile.layers)


def total_flops(profile: CnnProfile) -> int:
    return sum(l.flops for l in profile.layers)


def total_params(profile: CnnProfile) -> int:
    """Parameter count implied by mem_bytes = 4 * params + output_bytes."""
    return sum((l.mem_bytes - l.output_bytes) // 4 for l in profile.layers)


def parse_profile(text: str, model_name: str = "custom") -> CnnProfile:
    lines = text.splitlines()
    input_bytes = None
    notes = []
    pos = 0
    while pos < len(lines) and lines[pos].startswith("#"):
        line = lines[pos]
        if line.startswith(PRAGMA):
            try:
                input_bytes = int(line[len(PRAGMA):])
            except ValueError:
                raise ParseError(f"bad input_bytes pragma {line!r}", line=pos + 1) from None
        else:
            notes.append(line[1:].strip())
        pos += 1
    if input_bytes is None:
        raise ParseError("missing '#input_bytes=<n>' pragma", line=1)
    if pos >= len(lines) or [c.strip() for c in lines[pos].split(",")] != HEADER:
        raise ParseError(f"expected header {','.join(HEADER)}", line=pos + 1)
    header_line = pos + 1

    layers = []
    reader = csv.reader(io.StringIO("\n".join(lines[pos + 1:])))
    for n, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(HEADER):
            raise ParseError(f"expected {len(HEADER)} fields, got {len(row)}", line=header_line + n)
        try:
            index, mem, flops, out = (int(row[i]) for i in (0, 2, 3, 4))
        except ValueError:
            raise ParseError(f"non-integer field in {row!r}", line=header_line + n) from None
        layers.append(LayerSpec(index, row[1].strip(), mem, flops, out))
    return CnnProfile(model_name, tuple(layers), input_bytes, tuple(notes))


def load_profile(path) -> CnnProfile:
    path = Path(path)
    return parse_profile(path.read_text(encoding="utf-8"), model_name=path.stem)


def dumps_profile(profile: CnnProfile) -> str:
    out = [f"{PRAGMA}{profile.input_bytes}"]
    out += [f"# {note}" for note in profile.notes]
    out.append(",".join(HEADER))
    for l in profile.layers:
        out.append(f"{l.index},{l.name},{l.mem_bytes},{l.flops},{l.output_bytes}")
    return "\n".join(out) + "\n"


def save_profile(profile: CnnProfile, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_profile(profile))


def _builtin(name: str) -> CnnProfile:
    text = resources.files("swarmsplit").joinpath("profiles").joinpath(f"{name}.csv").read_text(encoding="utf-8")
    return parse_profile(text, model_name=name)


def builtin_lenet() -> CnnProfile:
    return _builtin("lenet")


def builtin_vgg16() -> CnnProfile:
    return _builtin("vgg16")


BUILTINS = {"lenet": builtin_lenet, "vgg16": builtin_vgg16}


def resolve_profile(name_or_path) -> CnnProfile:
    if str(name_or_path) in BUILTINS:
        return BUILTINS[str(name_or_path)]()
    return load_profile(name_or_path)
