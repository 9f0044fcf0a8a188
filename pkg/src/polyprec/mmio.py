"""Matrix Market coordinate-format reader and writer.

Only the ``matrix coordinate`` object is supported, with ``real``,
``complex``, ``integer`` or ``pattern`` fields and ``general``, ``symmetric``,
``skew-symmetric`` or ``hermitian`` symmetry. Indices are 1-based on disk and
0-based in memory.
"""

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, UnsupportedField
from .operators import as_csr

__all__ = ["read_matrix_market", "write_matrix_market"]

_FIELDS = ("real", "complex", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


def read_matrix_market(path):
    """Read a square coordinate Matrix Market file into a CSR matrix.

    Symmetric storage is expanded and pattern entries become 1.

    Raises
    ------
    ParseError
        On malformed content; the message carries the 1-based line number.
    UnsupportedField
        For ``array`` format or an unknown field/symmetry.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)

    banner = lines[0].split()
    if len(banner) < 5 or banner[0].lower() != "%%matrixmarket":
        raise ParseError("missing %%MatrixMarket banner", 1)
    obj, fmt, fld, sym = (t.lower() for t in banner[1:5])
    if obj != "matrix":
        raise UnsupportedField(f"object {obj!r} is not supported")
    if fmt != "coordinate":
        raise UnsupportedField(f"format {fmt!r} is not supported (coordinate only)")
    if fld not in _FIELDS:
        raise UnsupportedField(f"field {fld!r} is not supported")
    if sym not in _SYMMETRIES:
        raise UnsupportedField(f"symmetry {sym!r} is not supported")

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        s = lines[lineno - 1].strip()
        if s and not s.startswith("%"):
            size = s.split()
            break
    if size is None:
        raise ParseError("missing size line", lineno)
    try:
        nrows, ncols, nnz = (int(t) for t in size[:3])
        if len(size) != 3:
            raise ValueError
    except ValueError:
        raise ParseError(f"bad size line {lines[lineno - 1]!r}", lineno) from None
    if nrows != ncols:
        raise ParseError(f"matrix is not square ({nrows} x {ncols})", lineno)

    ntok = {"pattern": 2, "complex": 4}.get(fld, 3)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=complex if fld == "complex" else float)
    k = 0
    for i in range(lineno + 1, len(lines) + 1):
        s = lines[i - 1].strip()
        if not s or s.startswith("%"):
            continue
        if k >= nnz:
            raise ParseError(f"more than the declared {nnz} entries", i)
        tok = s.split()
        if len(tok) != ntok:
            raise ParseError(f"expected {ntok} tokens, got {len(tok)}", i)
        try:
            r, c = int(tok[0]), int(tok[1])
            if fld == "pattern":
                v = 1.0
            elif fld == "complex":
                v = complex(float(tok[2]), float(tok[3]))
            elif fld == "integer":
                v = float(int(tok[2]))
            else:
                v = float(tok[2])
        except ValueError:
            raise ParseError(f"cannot parse entry {s!r}", i) from None
        if not (1 <= r <= nrows and 1 <= c <= ncols):
            raise ParseError(f"index ({r}, {c}) out of range", i)
        rows[k], cols[k], vals[k] = r - 1, c - 1, v
        k += 1
    if k != nnz:
        raise ParseError(f"expected {nnz} entries, found {k}", len(lines))

    if sym != "general":
        off = rows != cols
        if sym == "symmetric":
            mirror = vals[off]
        elif sym == "skew-symmetric":
            mirror = -vals[off]
        else:
            mirror = np.conj(vals[off])
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, mirror]))
    return as_csr(sp.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols)))


def write_matrix_market(path, A, comment=None):
    """Write ``A`` in general coordinate format with 17 significant digits."""
    A = sp.coo_matrix(as_csr(A))
    cplx = np.iscomplexobj(A.data)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {'complex' if cplx else 'real'} general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        order = np.lexsort((A.col, A.row))
        for r, c, v in zip(A.row[order], A.col[order], A.data[order]):
            if cplx:
                fh.write(f"{r + 1} {c + 1} {v.real:.17g} {v.imag:.17g}\n")
            else:
                fh.write(f"{r + 1} {c + 1} {v:.17g}\n")
