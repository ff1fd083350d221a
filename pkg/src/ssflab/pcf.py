"""Compactly supported step functions with exact integration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import UnsupportedWeight

__all__ = ["PiecewiseConstantFunction", "integrate_pcf", "l1_distance"]


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFunction:
    """Step function equal to ``values[k]`` on ``[breakpoints[k], breakpoints[k+1])``.

    The function is zero left of ``breakpoints[0]`` and from ``breakpoints[-1]``
    on. ``support`` is a closed interval containing all breakpoints.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    support: tuple

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or v.ndim != 1 or b.size < 1:
            raise ValueError("breakpoints and values must be 1-D, breakpoints nonempty")
        if v.size != b.size - 1:
            raise ValueError("need len(values) == len(breakpoints) - 1")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise ValueError("breakpoints and values must be finite")
        lo, hi = (float(self.support[0]), float(self.support[1]))
        if lo > hi:
            raise ValueError("support must be an interval [a, b] with a <= b")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support", (lo, hi))

    @classmethod
    def zero(cls, support=(0.0, 0.0)) -> "PiecewiseConstantFunction":
        return cls(np.array([float(support[0])]), np.empty(0), support)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (k >= 0) & (k < self.values.size)
        out = np.zeros(x.shape)
        out[inside] = self.values[k[inside]]
        return out

    def on_grid(self, grid: np.ndarray) -> np.ndarray:
        """Values on the cells of a finer sorted ``grid`` (left-endpoint rule is exact)."""
        return self(np.asarray(grid)[:-1])

    def integral(self) -> float:
        return float(np.dot(self.values, self.widths))

    def l1_norm(self) -> float:
        return float(np.dot(np.abs(self.values), self.widths))

    def min_value(self) -> float:
        return float(self.values.min()) if self.values.size else 0.0

    def cumulative(self, x):
        """``F(x) = integral of f over (-inf, x]``, piecewise linear."""
        x = np.asarray(x, dtype=float)
        b = self.breakpoints
        F_b = np.concatenate([[0.0], np.cumsum(self.values * self.widths)])
        k = np.clip(np.searchsorted(b, x, side="right") - 1, 0, b.size - 1)
        slope = np.where((x >= b[0]) & (k < self.values.size), self(x), 0.0)
        base = np.where(x < b[0], 0.0, F_b[k])
        offset = np.where(x < b[0], 0.0, x - b[k])
        return base + slope * offset

    def second_cumulative(self, x):
        """``G(x) = integral of F over (-inf, x]``, piecewise quadratic."""
        x = np.asarray(x, dtype=float)
        b = self.breakpoints
        w = self.widths
        F_b = np.concatenate([[0.0], np.cumsum(self.values * w)])
        G_b = np.concatenate([[0.0], np.cumsum(F_b[:-1] * w + 0.5 * self.values * w**2)])
        k = np.clip(np.searchsorted(b, x, side="right") - 1, 0, b.size - 1)
        d = np.where(x < b[0], 0.0, x - b[k])
        v = np.where((x >= b[0]) & (k < self.values.size), self(x), 0.0)
        return np.where(x < b[0], 0.0, G_b[k] + F_b[k] * d + 0.5 * v * d**2)

    def _combine(self, other: "PiecewiseConstantFunction", op) -> "PiecewiseConstantFunction":
        grid = np.union1d(self.breakpoints, other.breakpoints)
        vals = op(self.on_grid(grid), other.on_grid(grid))
        support = (min(self.support[0], other.support[0]), max(self.support[1], other.support[1]))
        return PiecewiseConstantFunction(grid, vals, support)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def scaled(self, c: float) -> "PiecewiseConstantFunction":
        return PiecewiseConstantFunction(self.breakpoints, c * self.values, self.support)

    def to_table(self, label: str = "eta") -> str:
        """Two tab-separated columns, one header line; the last row closes the support."""
        lines = [f"# lambda {label}"]
        vals = np.concatenate([self.values, [0.0]])
        for b, v in zip(self.breakpoints.tolist(), vals.tolist()):
            lines.append(f"{b!r}\t{v!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_table(cls, text: str, support=None) -> "PiecewiseConstantFunction":
        rows = [ln.split("\t") for ln in text.splitlines() if ln and not ln.startswith("#")]
        b = np.array([float(r[0]) for r in rows])
        v = np.array([float(r[1]) for r in rows[:-1]])
        if support is None:
            support = (b[0], b[-1])
        return cls(b, v, support)


def l1_distance(f: PiecewiseConstantFunction, g: PiecewiseConstantFunction) -> float:
    """Exact ``||f - g||_1`` on the union grid."""
    return (f - g).l1_norm()


def integrate_pcf(f: PiecewiseConstantFunction, w) -> complex:
    """Exact ``integral of f(lambda) w(lambda) d lambda``.

    ``w`` is a FunctionSpec (polynomial, exponential, schwartz or bounded_test)
    or another step function. Each cell is integrated in closed form, so there
    is no quadrature error in lambda.
    """
    from .functions import FunctionSpec

    if f.values.size == 0:
        return 0j
    lo, hi = f.breakpoints[:-1], f.breakpoints[1:]
    if isinstance(w, PiecewiseConstantFunction):
        return complex(f._combine(w, np.multiply).integral())
    if not isinstance(w, FunctionSpec):
        raise UnsupportedWeight(f"cannot integrate against {type(w).__name__}")
    return w.integrate_cells(lo, hi, f.values)
