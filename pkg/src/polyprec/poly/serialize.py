"""Plain-text serialization of preconditioning polynomials.

Layout (one value per line, 17 significant digits, complex as ``re im``)::

    polyprec-poly 1
    kind chebyshev
    interval <a> <b>
    coeffs <count>
    <c_0>
    ...

``ritz_newton`` stores ``nodes`` and ``divided_diffs`` blocks;
``contour_ls`` stores ``nodes``, ``H_small <rows> <cols>`` (row-major) and
``alpha``.
"""

import numpy as np

from ..errors import ParseError
from .chebyshev import ChebyshevPoly
from .contour import ContourLSPoly
from .newton import NewtonPoly

__all__ = ["dumps", "loads", "save_poly", "load_poly"]

MAGIC = "polyprec-poly 1"


def _fmt(x):
    x = complex(x)
    return f"{x.real:.17g} {x.imag:.17g}"


def _block(name, arr, lines):
    arr = np.ravel(arr)
    lines.append(f"{name} {arr.size}")
    lines.extend(_fmt(x) for x in arr)


def dumps(q):
    lines = [MAGIC, f"kind {q.kind}"]
    if isinstance(q, ChebyshevPoly):
        a, b = q.interval
        lines.append(f"interval {a:.17g} {b:.17g}")
        lines.append(f"coeffs {q.coeffs.size}")
        lines.extend(f"{c:.17g}" for c in q.coeffs)
    elif isinstance(q, NewtonPoly):
        _block("nodes", q.nodes, lines)
        _block("divided_diffs", q.divided_diffs, lines)
    elif isinstance(q, ContourLSPoly):
        lines.append(f"real {int(q.is_real)}")
        _block("nodes", q.nodes, lines)
        r, c = q.H_small.shape
        lines.append(f"H_small {r} {c}")
        lines.extend(_fmt(x) for x in q.H_small.ravel())
        _block("alpha", q.alpha, lines)
    else:
        raise TypeError(f"cannot serialize {type(q).__name__}")
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.i = 0

    def next(self):
        while self.i < len(self.lines):
            self.i += 1
            s = self.lines[self.i - 1].strip()
            if s and not s.startswith("#"):
                return s
        raise ParseError("unexpected end of file", self.i)

    def header(self, key, nargs):
        tok = self.next().split()
        if tok[0] != key or len(tok) != nargs + 1:
            raise ParseError(f"expected '{key}' with {nargs} value(s)", self.i)
        return tok[1:]

    def values(self, count, cplx=True):
        out = np.empty(count, dtype=complex if cplx else float)
        for k in range(count):
            tok = self.next().split()
            try:
                out[k] = complex(float(tok[0]), float(tok[1])) if cplx else float(tok[0])
            except (ValueError, IndexError):
                raise ParseError(f"bad number {' '.join(tok)!r}", self.i) from None
        return out


def _maybe_real(x):
    return x.real.copy() if np.all(x.imag == 0) else x


def loads(text):
    rd = _Reader(text)
    if rd.next() != MAGIC:
        raise ParseError("not a polyprec polynomial file", rd.i)
    kind = rd.header("kind", 1)[0]
    try:
        if kind == "chebyshev":
            a, b = (float(t) for t in rd.header("interval", 2))
            n = int(rd.header("coeffs", 1)[0])
            return ChebyshevPoly((a, b), rd.values(n, cplx=False))
        if kind == "ritz_newton":
            nodes = rd.values(int(rd.header("nodes", 1)[0]))
            dd = rd.values(int(rd.header("divided_diffs", 1)[0]))
            if np.all(nodes.imag == 0):
                nodes, dd = nodes.real.copy(), _maybe_real(dd)
            return NewtonPoly(nodes, dd)
        if kind == "contour_ls":
            real = bool(int(rd.header("real", 1)[0]))
            nodes = rd.values(int(rd.header("nodes", 1)[0]))
            r, c = (int(t) for t in rd.header("H_small", 2))
            H = rd.values(r * c).reshape(r, c)
            alpha = rd.values(int(rd.header("alpha", 1)[0]))
            return ContourLSPoly(nodes, H, alpha, real=real)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), rd.i) from None
    raise ParseError(f"unknown polynomial kind {kind!r}", 2)


def save_poly(q, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(q))


def load_poly(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
