"""Scalar functions that can be lifted to Hermitian matrices.

A :class:`FunctionSpec` is one of four kinds:

``polynomial``
    ``sum_r coeffs[r] * x**r``.
``exponential``
    ``amplitude * exp(i t x)``.
``schwartz``
    A rapidly decaying function represented by its Fourier synthesis
    ``f(x) = integral fhat(t) exp(i t x) dt``, discretized as
    ``sum_j weight_j * fhat_j * exp(i t_j x)``. An optional closed form
    ``(f, f', f'')`` is used for direct evaluation.
``bounded_test``
    ``g(x) = integral_anchor^x f(mu) d mu`` for a bounded step function ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from .exceptions import FunctionEvaluationError, UnsupportedWeight
from .pcf import PiecewiseConstantFunction

__all__ = [
    "FunctionSpec",
    "polynomial",
    "monomial",
    "exponential",
    "schwartz",
    "gaussian",
    "bounded_test",
    "CONFLUENCE_RTOL",
]

KINDS = ("polynomial", "exponential", "schwartz", "bounded_test")

# |alpha - beta| <= CONFLUENCE_RTOL * max(1, spectral range) uses the derivative
CONFLUENCE_RTOL = 1e-8

# Fourier samples processed per block when integrating or building kernels
_SAMPLE_BLOCK = 64


def _exp_divided_difference(t, a, b):
    """``(e^{ita} - e^{itb}) / (a - b)`` without cancellation; ``it e^{ita}`` at a == b."""
    return 1j * t * np.exp(0.5j * t * (a + b)) * np.sinc(t * (a - b) / (2 * np.pi))


def _exp_cell_integral(t, lo, hi):
    """``integral_lo^hi e^{itx} dx`` via the midpoint/sinc form."""
    h = hi - lo
    return np.exp(0.5j * t * (lo + hi)) * h * np.sinc(t * h / (2 * np.pi))


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    kind: str
    coeffs: Optional[np.ndarray] = None
    t: Optional[float] = None
    amplitude: complex = 1.0
    fourier_samples: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None
    closed_form: Optional[Tuple[Callable, ...]] = None
    test_density: Optional[PiecewiseConstantFunction] = None
    anchor: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")
        payloads = {
            "polynomial": self.coeffs is not None,
            "exponential": self.t is not None,
            "schwartz": self.fourier_samples is not None,
            "bounded_test": self.test_density is not None,
        }
        if sum(payloads.values()) != 1 or not payloads[self.kind]:
            raise ValueError(f"{self.kind} spec needs exactly its own payload")
        if self.kind == "polynomial":
            c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128))
            if c.size == 0:
                raise ValueError("polynomial needs at least one coefficient")
            object.__setattr__(self, "coeffs", c)
        if self.kind == "schwartz":
            ts, wts, fh = (np.asarray(x) for x in self.fourier_samples)
            if ts.size == 0 or not (ts.shape == wts.shape == fh.shape):
                raise ValueError("fourier_samples must be nonempty arrays of equal length")
            object.__setattr__(
                self,
                "fourier_samples",
                (ts.astype(float), wts.astype(np.complex128), fh.astype(np.complex128)),
            )

    # -- descriptors ---------------------------------------------------------------

    @property
    def degree(self) -> int:
        if self.kind != "polynomial":
            raise AttributeError("degree is defined for polynomials only")
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    @property
    def fourier_coefficients(self) -> Tuple[np.ndarray, np.ndarray]:
        """``(t_j, weight_j * fhat_j)``."""
        ts, wts, fh = self.fourier_samples
        return ts, wts * fh

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.kind == "polynomial":
            return "poly[" + ",".join(f"{c.real:g}" if c.imag == 0 else f"{c:g}" for c in self.coeffs) + "]"
        if self.kind == "exponential":
            return f"exp[t={self.t:g}]"
        if self.kind == "schwartz":
            return f"schwartz[{self.fourier_samples[0].size} samples]"
        return "bounded_test"

    # -- pointwise evaluation ------------------------------------------------------

    def __call__(self, x):
        return self.derivative_values(x, 0)

    def synthesize(self, x, order: int = 0):
        """Fourier-synthesis value of the ``order``-th derivative."""
        ts, c = self.fourier_coefficients
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=np.complex128)
        for start in range(0, ts.size, _SAMPLE_BLOCK):
            tb, cb = ts[start:start + _SAMPLE_BLOCK], c[start:start + _SAMPLE_BLOCK]
            out += np.exp(1j * np.multiply.outer(x, tb)) @ (cb * (1j * tb) ** order)
        return out

    def derivative_values(self, x, order: int = 1):
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            c = P.polyder(self.coeffs, order) if order else self.coeffs
            return P.polyval(x, c).astype(np.complex128) * np.ones_like(x)
        if self.kind == "exponential":
            return self.amplitude * (1j * self.t) ** order * np.exp(1j * self.t * x)
        if self.kind == "schwartz":
            if self.closed_form is not None and order < len(self.closed_form):
                return np.asarray(self.closed_form[order](x), dtype=np.complex128) * np.ones_like(x)
            return self.synthesize(x, order)
        dens = self.test_density
        if order == 0:
            return (dens.cumulative(x) - dens.cumulative(self.anchor)).astype(np.complex128)
        if order == 1:
            return dens(x).astype(np.complex128)
        raise FunctionEvaluationError("bounded test functions have one derivative")

    # -- derived specs -------------------------------------------------------------

    def derivative(self, order: int = 1) -> "FunctionSpec":
        """Spec of the ``order``-th derivative (not available for bounded_test)."""
        if order == 0:
            return self
        if self.kind == "polynomial":
            c = P.polyder(self.coeffs, order)
            return replace(self, coeffs=c if c.size else np.zeros(1), label="")
        if self.kind == "exponential":
            return replace(self, amplitude=self.amplitude * (1j * self.t) ** order, label="")
        if self.kind == "schwartz":
            ts, wts, fh = self.fourier_samples
            cf = self.closed_form[order:] if self.closed_form else None
            return replace(
                self,
                fourier_samples=(ts, wts, fh * (1j * ts) ** order),
                closed_form=cf or None,
                label="",
            )
        raise UnsupportedWeight("bounded_test has no derivative spec")

    def fourier_view(self) -> "FunctionSpec":
        """The same schwartz function evaluated purely through its Fourier samples."""
        if self.kind != "schwartz":
            return self
        return replace(self, closed_form=None)

    # -- matrix-function kernels ---------------------------------------------------

    def divided_difference(self, a, b) -> np.ndarray:
        """Kernel ``[f(a_i) - f(b_j)] / (a_i - b_j)`` with confluent value ``f'``."""
        a = np.asarray(a, dtype=float)[:, None]
        b = np.asarray(b, dtype=float)[None, :]
        if self.kind == "polynomial":
            # h_m(a, b) = sum_{j<=m} a^{m-j} b^j via h_m = a h_{m-1} + b^m
            out = np.zeros(np.broadcast(a, b).shape, dtype=np.complex128)
            h = np.ones_like(out)
            bpow = np.ones_like(b, dtype=np.complex128)
            for c in self.coeffs[1:]:
                out += c * h
                bpow = bpow * b
                h = a * h + bpow
            return out
        if self.kind == "exponential":
            return self.amplitude * _exp_divided_difference(self.t, a, b)
        if self.kind == "schwartz" and self.closed_form is None:
            ts, c = self.fourier_coefficients
            out = np.zeros(np.broadcast(a, b).shape, dtype=np.complex128)
            for tj, cj in zip(ts, c):
                out += cj * _exp_divided_difference(tj, a, b)
            return out
        return self._generic_divided_difference(a, b)

    def _generic_divided_difference(self, a, b):
        span = max(a.max(), b.max()) - min(a.min(), b.min())
        thresh = CONFLUENCE_RTOL * max(1.0, float(span))
        diff = a - b
        close = np.abs(diff) <= thresh
        fa, fb = self(a.ravel())[:, None], self(b.ravel())[None, :]
        safe = np.where(close, 1.0, diff)
        kernel = (fa - fb) / safe
        if np.any(close):
            mid = np.broadcast_to(0.5 * (a + b), kernel.shape)
            kernel = np.where(close, self.derivative_values(mid, 1), kernel)
        return kernel

    # -- exact integration against step functions ----------------------------------

    def integrate_cells(self, lo, hi, values) -> complex:
        """``sum_k values[k] * integral_{lo[k]}^{hi[k]} self(x) dx`` in closed form."""
        lo, hi, values = (np.asarray(x, dtype=float) for x in (lo, hi, values))
        if self.kind == "polynomial":
            anti = P.polyint(self.coeffs)
            return complex(np.dot(values, P.polyval(hi, anti) - P.polyval(lo, anti)))
        if self.kind == "exponential":
            return complex(self.amplitude * np.dot(values, _exp_cell_integral(self.t, lo, hi)))
        if self.kind == "schwartz":
            ts, c = self.fourier_coefficients
            total = 0j
            for start in range(0, ts.size, _SAMPLE_BLOCK):
                tb = ts[start:start + _SAMPLE_BLOCK]
                cells = _exp_cell_integral(tb[:, None], lo[None, :], hi[None, :])
                total += complex(np.dot(c[start:start + _SAMPLE_BLOCK], cells @ values))
            return total
        dens = self.test_density
        g_anchor = float(dens.cumulative(self.anchor))
        cell = dens.second_cumulative(hi) - dens.second_cumulative(lo) - (hi - lo) * g_anchor
        return complex(np.dot(values, cell))


def polynomial(coeffs: Sequence[complex], label: str = "") -> FunctionSpec:
    """Polynomial with ``coeffs[r]`` multiplying ``x**r``."""
    return FunctionSpec("polynomial", coeffs=np.asarray(coeffs), label=label)


def monomial(r: int) -> FunctionSpec:
    c = np.zeros(r + 1)
    c[r] = 1.0
    return FunctionSpec("polynomial", coeffs=c, label=f"x^{r}")


def exponential(t: float, amplitude: complex = 1.0) -> FunctionSpec:
    return FunctionSpec("exponential", t=float(t), amplitude=amplitude)


def schwartz(t, weights, fhat, closed_form=None, label: str = "") -> FunctionSpec:
    return FunctionSpec(
        "schwartz",
        fourier_samples=(np.asarray(t), np.asarray(weights), np.asarray(fhat)),
        closed_form=tuple(closed_form) if closed_form else None,
        label=label,
    )


def gaussian(sigma: float = 1.0, t_max: float = 12.0, n_samples: int = 256) -> FunctionSpec:
    """``exp(-x^2 / (2 sigma^2))`` on a trapezoid Fourier grid over ``[-t_max, t_max]``.

    With ``f(x) = integral fhat(t) e^{itx} dt`` the transform is
    ``fhat(t) = sigma / sqrt(2 pi) * exp(-sigma^2 t^2 / 2)``. The discretized
    synthesis is periodic with period ``2 pi / dt``, so the grid must be fine
    enough for the spectra it is applied to.
    """
    if n_samples < 2:
        raise ValueError("need at least two Fourier samples")
    ts = np.linspace(-t_max, t_max, n_samples)
    dt = ts[1] - ts[0]
    w = np.full(n_samples, dt)
    w[0] = w[-1] = 0.5 * dt
    fhat = sigma / np.sqrt(2 * np.pi) * np.exp(-0.5 * (sigma * ts) ** 2)
    s2 = sigma * sigma

    def f0(x):
        return np.exp(-0.5 * np.square(x) / s2)

    def f1(x):
        return -x / s2 * f0(x)

    def f2(x):
        return (np.square(x) / s2 - 1.0) / s2 * f0(x)

    return schwartz(ts, w, fhat, closed_form=(f0, f1, f2),
                    label=f"gaussian[sigma={sigma:g},tmax={t_max:g},n={n_samples}]")


def bounded_test(density: PiecewiseConstantFunction, anchor: Optional[float] = None) -> FunctionSpec:
    """``g(x) = integral_anchor^x density``; ``anchor`` defaults to the density's left end."""
    if anchor is None:
        anchor = float(density.breakpoints[0])
    return FunctionSpec("bounded_test", test_density=density, anchor=float(anchor))
