"""Grid-sampled fields on ℝ^{2n+1}: a tiny CSV / binary file format and a C² spline interpolant.

CSV layout (``#`` lines are the header, one sample per remaining line, row-major
with the last axis, t, varying fastest)::

    # hs2-grid-v1
    # n=1
    # axis=0 lower=-1.0 step=0.1 count=21
    # axis=1 lower=-1.0 step=0.1 count=21
    # axis=2 lower=-1.0 step=0.1 count=21
    0.123
    ...

Binary layout: one UTF-8 JSON line ``{"format": "hs2-grid-v1", "n": 1,
"lower": [...], "step": [...], "count": [...]}`` terminated by ``\\n``,
followed by little-endian float64 samples in the same row-major order.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .fields import ScalarField

MAGIC = "hs2-grid-v1"


class GridFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GridSamples:
    n: int
    lower: np.ndarray
    step: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        d = 2 * self.n + 1
        lower = np.asarray(self.lower, dtype=float)
        step = np.asarray(self.step, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if lower.shape != (d,) or step.shape != (d,) or values.ndim != d:
            raise GridFormatError(f"grid for n={self.n} needs {d} axes")
        if np.any(step <= 0):
            raise GridFormatError("grid steps must be positive")
        if min(values.shape) < 4:
            raise GridFormatError("need at least 4 samples per axis for a cubic spline")
        if not np.all(np.isfinite(values)):
            raise GridFormatError("grid values must be finite")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "step", step)
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.step * (np.asarray(self.count) - 1)

    def axes(self) -> list[np.ndarray]:
        return [self.lower[k] + self.step[k] * np.arange(c) for k, c in enumerate(self.count)]

    @classmethod
    def sample(cls, field: ScalarField, lower, upper, count) -> "GridSamples":
        lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
        count = tuple(int(c) for c in np.broadcast_to(count, lower.shape))
        step = (upper - lower) / (np.asarray(count) - 1)
        axes = [lower[k] + step[k] * np.arange(c) for k, c in enumerate(count)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(field.n, lower, step, field.value(pts))

    def to_field(self, fd_step: float | None = None) -> ScalarField:
        """Cubic B-spline interpolant (C²); derivatives by finite differences."""
        coeffs = ndimage.spline_filter(self.values, order=3, mode="mirror")
        lower, step, upper = self.lower, self.step, self.upper
        d = lower.size

        def value(z):
            z = np.asarray(z, dtype=float)
            flat = z.reshape(-1, d)
            if np.any(flat < lower - 1e-9 * step) or np.any(flat > upper + 1e-9 * step):
                raise ValueError("point outside the sampled grid")
            idx = ((flat - lower) / step).T
            out = ndimage.map_coordinates(coeffs, idx, order=3, mode="mirror", prefilter=False)
            return out.reshape(z.shape[:-1])

        h = float(fd_step) if fd_step is not None else float(np.min(step)) / 4
        return ScalarField(self.n, value, fd_step=h, name="grid")


def write_csv(grid: GridSamples, path) -> None:
    lines = [f"# {MAGIC}", f"# n={grid.n}"]
    for k, (lo, st, c) in enumerate(zip(grid.lower, grid.step, grid.count)):
        lines.append(f"# axis={k} lower={float(lo)!r} step={float(st)!r} count={c}")
    lines.extend(repr(float(v)) for v in grid.values.ravel(order="C"))
    Path(path).write_text("\n".join(lines) + "\n")


_AXIS = re.compile(r"#\s*axis=(\d+)\s+lower=(\S+)\s+step=(\S+)\s+count=(\d+)")


def read_csv(path) -> GridSamples:
    header, data = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            (header if line.startswith("#") else data).append(line)
    if not header or header[0].lstrip("# ").strip() != MAGIC:
        raise GridFormatError(f"{path}: missing '{MAGIC}' header")
    n = None
    axes = {}
    for line in header[1:]:
        if m := re.match(r"#\s*n=(\d+)", line):
            n = int(m.group(1))
        elif m := _AXIS.match(line):
            axes[int(m.group(1))] = (float(m.group(2)), float(m.group(3)), int(m.group(4)))
    if n is None or sorted(axes) != list(range(2 * n + 1)):
        raise GridFormatError(f"{path}: header must give n and all {2 * (n or 0) + 1} axes")
    lower = np.array([axes[k][0] for k in sorted(axes)])
    step = np.array([axes[k][1] for k in sorted(axes)])
    count = tuple(axes[k][2] for k in sorted(axes))
    values = np.array([float(v.split(",")[0]) for v in data])
    if values.size != int(np.prod(count)):
        raise GridFormatError(f"{path}: expected {int(np.prod(count))} samples, found {values.size}")
    return GridSamples(n, lower, step, values.reshape(count))


def write_binary(grid: GridSamples, path) -> None:
    head = {"format": MAGIC, "n": grid.n, "lower": grid.lower.tolist(),
            "step": grid.step.tolist(), "count": list(grid.count)}
    with open(path, "wb") as fh:
        fh.write((json.dumps(head, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def read_binary(path) -> GridSamples:
    with open(path, "rb") as fh:
        head = json.loads(fh.readline().decode())
        if head.get("format") != MAGIC:
            raise GridFormatError(f"{path}: not a {MAGIC} file")
        count = tuple(int(c) for c in head["count"])
        values = np.frombuffer(fh.read(), dtype="<f8")
    if values.size != int(np.prod(count)):
        raise GridFormatError(f"{path}: expected {int(np.prod(count))} samples, found {values.size}")
    return GridSamples(int(head["n"]), np.array(head["lower"]), np.array(head["step"]), values.reshape(count))


def read_grid(path) -> GridSamples:
    """Dispatch on content: binary files start with a JSON object."""
    with open(path, "rb") as fh:
        first = fh.read(1)
    return read_binary(path) if first == b"{" else read_csv(path)
