"""Piecewise Laurent polynomials in the radius, with exact calculus.

A piece stores ``sum_j c_j r**(low + j) + log * ln(r)``.  Negative powers are
needed because radial fluxes carry a ``1/r**(d-1)`` factor; the log term only
appears in antiderivatives of ``1/r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import ConstraintError, SolverError

MAX_DEGREE = 16
R_FLOOR = 1e-14
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Laurent:
    coeffs: tuple
    low: int = 0
    log: float = 0.0

    def __post_init__(self):
        c = [float(v) for v in np.atleast_1d(self.coeffs)]
        low = int(self.low)
        while c and c[0] == 0.0:
            c.pop(0)
            low += 1
        while c and c[-1] == 0.0:
            c.pop()
        if not c:
            low = 0
        object.__setattr__(self, "coeffs", tuple(c))
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "log", float(self.log))

    @classmethod
    def constant(cls, value):
        return cls((value,), 0)

    @property
    def high(self):
        return self.low + len(self.coeffs) - 1

    @property
    def is_zero(self):
        return not self.coeffs and self.log == 0.0

    @property
    def powers(self):
        return np.arange(self.low, self.low + len(self.coeffs))

    def __call__(self, r):
        r = np.asarray(r, float)
        out = np.zeros_like(r)
        if self.coeffs:
            needs_floor = self.low < 0 or self.log != 0.0
            rr = np.maximum(r, R_FLOOR) if needs_floor else r
            base = rr**self.low if self.low != 0 else np.ones_like(rr)
            acc = np.zeros_like(rr)
            for c in reversed(self.coeffs):
                acc = acc * rr + c
            out = acc * base
        if self.log:
            out = out + self.log * np.log(np.maximum(r, R_FLOOR))
        return out

    def scalar(self, r):
        """Fast float evaluation for root solving."""
        if r < R_FLOOR and (self.low < 0 or self.log):
            r = R_FLOOR
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * r + c
        if self.low:
            acc *= r**self.low
        if self.log:
            acc += self.log * math.log(r)
        return acc

    def _padded(self, low, high):
        arr = np.zeros(high - low + 1)
        if self.coeffs:
            arr[self.low - low : self.high - low + 1] = self.coeffs
        return arr

    def __add__(self, other):
        if not isinstance(other, Laurent):
            other = Laurent.constant(other)
        if not self.coeffs or not other.coeffs:
            base = self if self.coeffs else other
            return Laurent(base.coeffs, base.low, self.log + other.log)
        low, high = min(self.low, other.low), max(self.high, other.high)
        return Laurent(self._padded(low, high) + other._padded(low, high), low, self.log + other.log)

    __radd__ = __add__

    def __neg__(self):
        return Laurent(tuple(-c for c in self.coeffs), self.low, -self.log)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Laurent):
            return Laurent(tuple(c * other for c in self.coeffs), self.low, self.log * other)
        if self.log or other.log:
            raise ConstraintError("products of logarithmic terms are not supported")
        if not self.coeffs or not other.coeffs:
            return Laurent(())
        return Laurent(np.convolve(self.coeffs, other.coeffs), self.low + other.low)

    __rmul__ = __mul__

    def shift(self, k):
        """Multiply by ``r**k``."""
        if self.log:
            raise ConstraintError("cannot shift a logarithmic term")
        return Laurent(self.coeffs, self.low + k)

    def derivative(self):
        p = self.powers
        c = np.asarray(self.coeffs) * p
        out = Laurent(c, self.low - 1) if self.coeffs else Laurent(())
        if self.log:
            out = out + Laurent((self.log,), -1)
        return out

    def antiderivative(self):
        """Antiderivative without constant; a ``1/r`` term becomes ``log``."""
        if self.log:
            raise ConstraintError("cannot integrate a logarithmic term")
        c = np.array(self.coeffs, float)
        p = self.powers
        log = 0.0
        if np.any(p == -1):
            log = float(c[p == -1][0])
            c = c.copy()
            c[p == -1] = 0.0
        safe = np.where(p == -1, 1, p + 1)
        return Laurent(c / safe, self.low + 1, log)

    def numerator(self):
        """Ascending polynomial coefficients of ``r**(-low) * self`` (no log)."""
        if self.log:
            raise ConstraintError("numerator undefined for logarithmic pieces")
        return np.asarray(self.coeffs, float)

    def magnitude(self, a, b):
        """Upper bound of the sum of absolute term sizes on ``[a, b]``."""
        if not self.coeffs and not self.log:
            return 0.0
        a = max(a, R_FLOOR)
        p = self.powers
        terms = np.abs(self.coeffs) * np.maximum(a ** p.astype(float), b ** p.astype(float))
        lg = abs(self.log) * max(abs(math.log(a)), abs(math.log(b)))
        return float(terms.sum() + lg)

    def cleaned(self, a, b, rel=64 * _EPS):
        """Drop terms that are rounding noise relative to the piece's magnitude on ``[a, b]``."""
        if not self.coeffs:
            return self
        a_ = max(a, R_FLOOR)
        p = self.powers.astype(float)
        sizes = np.abs(self.coeffs) * np.maximum(a_**p, b**p)
        scale = sizes.sum()
        keep = np.where(sizes <= rel * scale, 0.0, self.coeffs)
        return Laurent(keep, self.low, self.log)


@dataclass(frozen=True)
class PiecewisePoly:
    """Laurent pieces on consecutive intervals ``[breaks[p], breaks[p+1]]``."""

    breaks: tuple
    pieces: tuple

    def __post_init__(self):
        b = tuple(float(x) for x in self.breaks)
        pieces = tuple(p if isinstance(p, Laurent) else Laurent(*p) for p in self.pieces)
        if len(b) != len(pieces) + 1 or not pieces:
            raise ConstraintError(f"{len(b)} breakpoints for {len(pieces)} pieces")
        if any(hi <= lo for lo, hi in zip(b, b[1:])):
            raise ConstraintError(f"breakpoints must increase strictly: {b}")
        for i, p in enumerate(pieces):
            if p.coeffs and (p.high - min(p.low, 0)) > 4 * MAX_DEGREE:
                raise ConstraintError(f"piece {i} exceeds the degree limit")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def from_spec(cls, rows):
        """Build from ``(r_lo, r_hi, coeffs[, low])`` rows that must be contiguous."""
        rows = list(rows)
        if not rows:
            raise ConstraintError("empty piecewise specification")
        breaks, pieces = [float(rows[0][0])], []
        for i, row in enumerate(rows):
            lo, hi, coeffs = row[0], row[1], row[2]
            low = row[3] if len(row) > 3 else 0
            if float(lo) != breaks[-1]:
                raise ConstraintError(f"piece {i} starts at {lo}, previous ended at {breaks[-1]}")
            if len(coeffs) > MAX_DEGREE + 1:
                raise ConstraintError(f"piece {i} exceeds degree {MAX_DEGREE}")
            breaks.append(float(hi))
            pieces.append(Laurent(tuple(coeffs), int(low)))
        return cls(tuple(breaks), tuple(pieces))

    @classmethod
    def constant(cls, value, a, b):
        return cls((a, b), (Laurent.constant(value),))

    @property
    def lo(self):
        return self.breaks[0]

    @property
    def hi(self):
        return self.breaks[-1]

    def piece_index(self, r):
        idx = np.searchsorted(self.breaks, r, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def __call__(self, r):
        r = np.asarray(r, float)
        idx = self.piece_index(r)
        out = np.empty_like(r)
        for p in np.unique(idx):
            sel = idx == p
            out[sel] = self.pieces[p](r[sel])
        return out if out.ndim else float(out)

    def refine(self, breaks):
        """Same function on a finer breakpoint set containing the current one."""
        new = sorted(set(self.breaks) | {float(b) for b in breaks if self.lo < b < self.hi})
        pieces = []
        for a, b in zip(new, new[1:]):
            pieces.append(self.pieces[int(self.piece_index(0.5 * (a + b)))])
        return PiecewisePoly(tuple(new), tuple(pieces))

    def map(self, fn):
        return PiecewisePoly(self.breaks, tuple(fn(p) for p in self.pieces))

    def derivative(self):
        return self.map(Laurent.derivative)

    def integral(self, a, b):
        """Exact integral over ``[a, b]`` using piece antiderivatives."""
        if b < a:
            return -self.integral(b, a)
        total = []
        for p, (lo, hi) in enumerate(zip(self.breaks, self.breaks[1:])):
            x0, x1 = max(lo, a), min(hi, b)
            if x1 <= x0:
                continue
            g = self.pieces[p].antiderivative()
            total.append(float(g(x1)) - float(g(x0)))
        return math.fsum(total)


def common_breaks(*functions):
    pts = set()
    for f in functions:
        pts.update(f.breaks)
    return sorted(pts)


def real_roots_in(laurent, a, b, n_probe=16):
    """Sign-changing roots of a Laurent piece in ``(a, b)``.

    Candidates come from the companion-matrix roots of the numerator,
    supplemented by a uniform probe; every sign change between consecutive
    probe points is refined by bracketing.
    """
    from .rootfind import bracket_root

    c = laurent.numerator()
    if c.size <= 1:
        return []
    cands = []
    try:
        for z in np.polynomial.polynomial.polyroots(c):
            if abs(z.imag) <= 1e-7 * max(1.0, abs(z.real)) and a < z.real < b:
                cands.append(z.real)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"root isolation failed on [{a}, {b}]: {exc}") from exc
    cands = sorted(cands)
    # probes keep clear of candidate roots, and consecutive candidates are
    # separated by their midpoint, so each simple root sits strictly inside
    # one bracket whose end values are far from zero
    gap = 1e-6 * (b - a)
    uniform = [x for x in np.linspace(a, b, n_probe + 1).tolist() if all(abs(x - z) > gap for z in cands)]
    mids = [0.5 * (x + y) for x, y in zip(cands, cands[1:])]
    probes = sorted(set(uniform) | set(mids) | {a, b})
    vals = laurent(np.array(probes))
    scale = laurent.magnitude(a, b)
    roots = []
    for x0, x1, v0, v1 in zip(probes, probes[1:], vals, vals[1:]):
        if abs(v0) <= 1e-13 * scale or abs(v1) <= 1e-13 * scale:
            # endpoint roots are handled by the caller's interval logic
            if x0 == a or x1 == b:
                continue
        if v0 * v1 < 0:
            roots.append(bracket_root(laurent, x0, x1))
    return roots
