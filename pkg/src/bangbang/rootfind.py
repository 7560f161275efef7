"""Bracketed scalar root finding (bisection / Illinois regula falsi hybrid)."""

from __future__ import annotations

from ._validation import SolverError

XTOL = 1e-12
MAX_ITER = 200


def bracket_root(fn, a, b, xtol=XTOL, max_iter=MAX_ITER):
    """Root of ``fn`` in ``[a, b]`` where ``fn(a)`` and ``fn(b)`` differ in sign.

    Illinois false-position steps, with a bisection step whenever two
    consecutive steps fail to halve the bracket, so the bracket shrinks at
    least as fast as plain bisection every few iterations.
    """
    lo, hi = (a, b) if a <= b else (b, a)
    flo, fhi = float(fn(lo)), float(fn(hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise SolverError(f"root not bracketed on [{a!r}, {b!r}]: f = {flo!r}, {fhi!r}")
    wlo, whi = flo, fhi  # Illinois-weighted end values
    last = 0
    slow = 0
    for _ in range(max_iter):
        width = hi - lo
        if width <= 0.5 * xtol * 1e-2 or width <= 4e-16 * max(abs(lo), abs(hi)):
            break
        if slow >= 2:
            x = 0.5 * (lo + hi)
            slow = 0
        else:
            x = hi - whi * (hi - lo) / (whi - wlo)
            if not lo < x < hi:
                x = 0.5 * (lo + hi)
        fx = float(fn(x))
        if fx == 0.0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo, wlo = x, fx, fx
            if last == -1:
                whi *= 0.5
            last = -1
        else:
            hi, fhi, whi = x, fx, fx
            if last == 1:
                wlo *= 0.5
            last = 1
        slow = slow + 1 if hi - lo > 0.5 * width else 0
    else:
        if hi - lo > xtol:
            raise SolverError(f"bracketing did not converge: width {hi - lo!r}")
    return lo if abs(flo) <= abs(fhi) else hi
