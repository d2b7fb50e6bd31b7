"""Monotone envelope functions bounding play-operator branches.

Two closed families: affine (``LinearEnvelope``) and scaled/shifted
hyperbolic tangent (``TanhEnvelope``). Both are strictly increasing by
construction, which keeps the operator branches monotone and the zero
points invertible. Instances are immutable and safe to share between
evaluation contexts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, RangeError


def _checked(v):
    """Validate a scalar or array input and return it as float(s)."""
    arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("envelope input must be finite")
    return float(arr) if arr.ndim == 0 else arr


@dataclass(frozen=True)
class LinearEnvelope:
    """gamma(v) = a*v + b with slope a > 0."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ConfigError("linear envelope parameters must be finite")
        if self.a <= 0:
            raise ConfigError(f"linear envelope requires slope a > 0, got a={self.a}")

    def __call__(self, v):
        return self.a * _checked(v) + self.b

    def inverse(self, y):
        """Solve gamma(v) = y exactly."""
        return (_checked(y) - self.b) / self.a

    def to_dict(self):
        return {"family": "linear", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class TanhEnvelope:
    """gamma(v) = c*tanh(d*v + e) + f with c > 0 and d > 0.

    Range is the open interval (f - c, f + c).
    """

    c: float
    d: float
    e: float
    f: float

    def __post_init__(self):
        vals = (self.c, self.d, self.e, self.f)
        if not all(np.isfinite(x) for x in vals):
            raise ConfigError("tanh envelope parameters must be finite")
        if self.c <= 0 or self.d <= 0:
            raise ConfigError(
                f"tanh envelope requires c > 0 and d > 0, got c={self.c}, d={self.d}"
            )

    def __call__(self, v):
        return self.c * np.tanh(self.d * _checked(v) + self.e) + self.f

    def inverse(self, y):
        """Solve gamma(v) = y for scalar y strictly inside the range.

        Uses the closed-form artanh identity, falling back to bisection
        when the closed form loses accuracy near the range edges.
        """
        y = float(_checked(y))
        u = (y - self.f) / self.c
        if abs(u) >= 1.0:
            raise RangeError(
                f"value {y} outside envelope range ({self.f - self.c}, {self.f + self.c})"
            )
        v = (np.arctanh(u) - self.e) / self.d
        if abs(self(v) - y) <= 1e-10 * max(1.0, abs(y)):
            return float(v)
        return self._bisect(y, v)

    def _bisect(self, y, v0):
        lo, hi, span = v0, v0, 1.0
        while self(lo) > y:
            lo -= span
            span *= 2.0
        span = 1.0
        while self(hi) < y:
            hi += span
            span *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self(mid) < y:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-14 * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)

    def to_dict(self):
        return {"family": "tanh", "c": self.c, "d": self.d, "e": self.e, "f": self.f}


Envelope = LinearEnvelope | TanhEnvelope


def envelope_from_dict(doc: dict) -> Envelope:
    """Build an envelope from its serialized form."""
    try:
        family = doc["family"]
    except (TypeError, KeyError):
        raise ConfigError(f"envelope document missing 'family': {doc!r}") from None
    try:
        if family == "linear":
            return LinearEnvelope(a=float(doc["a"]), b=float(doc["b"]))
        if family == "tanh":
            return TanhEnvelope(
                c=float(doc["c"]), d=float(doc["d"]), e=float(doc["e"]), f=float(doc["f"])
            )
    except KeyError as exc:
        raise ConfigError(f"envelope document missing field {exc}") from None
    raise ConfigError(f"unknown envelope family {family!r}")


def lipschitz_check(env: Envelope, lo: float, hi: float, grid: int = 1001) -> float:
    """Maximum finite-difference slope of ``env`` over a uniform grid.

    Diagnostic only; no bound is enforced anywhere in the toolkit.
    """
    if not (lo < hi):
        raise ConfigError(f"need lo < hi, got [{lo}, {hi}]")
    if grid < 2:
        raise ConfigError(f"need grid >= 2, got {grid}")
    vs = np.linspace(lo, hi, int(grid))
    gs = env(vs)
    return float(np.max(np.abs(np.diff(gs)) / np.diff(vs)))
