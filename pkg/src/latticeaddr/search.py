"""One-dimensional extremum search: golden section with a grid pre-pass."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


class Extremum(NamedTuple):
    x: float
    value: float
    evaluations: int


def golden_section(func: Callable[[float], float], a: float, b: float,
                   xtol: float = 1e-10, maximize: bool = False,
                   max_iter: int = 500) -> Extremum:
    """Locate an extremum of a unimodal ``func`` on ``[a, b]``.

    The bracket shrinks by 1/phi per iteration until it is narrower than
    ``xtol``; the best of the final interior points is returned.
    """
    if not b > a:
        raise DomainError(f"empty bracket [{a}, {b}]")
    sign = -1.0 if maximize else 1.0
    f = lambda x: sign * func(x)  # noqa: E731

    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while (b - a) > xtol and n < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        n += 1
    x, fx = (c, fc) if fc < fd else (d, fd)
    return Extremum(float(x), float(sign * fx), n)


def grid_then_golden(func: Callable[[float], float], a: float, b: float, n_grid: int = 101,
                     xtol: float = 1e-10, maximize: bool = False,
                     interior: bool = True) -> Extremum:
    """Grid scan for the best cell, then golden-section refinement inside it.

    With ``interior=True`` an optimum sitting on the bracket edge raises
    :class:`DomainError` (no interior extremum in range).
    """
    xs = np.linspace(a, b, n_grid)
    vals = np.array([func(x) for x in xs])
    i = int(np.argmax(vals) if maximize else np.argmin(vals))
    if interior and i in (0, n_grid - 1):
        kind = "maximum" if maximize else "minimum"
        raise DomainError(f"no interior {kind} in [{a}, {b}] (grid optimum at edge x={xs[i]})")
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, n_grid - 1)]
    ext = golden_section(func, lo, hi, xtol=xtol, maximize=maximize)
    return Extremum(ext.x, ext.value, ext.evaluations + n_grid)
