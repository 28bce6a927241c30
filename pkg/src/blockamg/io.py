"""MatrixMarket matrices, plain-text node coordinates and vectors."""

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, UnsupportedField
from .sparse import SparseMatrix, to_scalar

HEADER = "%%MatrixMarket"
_FORMATS = ("coordinate", "array")
_SYMMETRIES = ("general", "symmetric")


def _parse_header(line, lineno=1):
    parts = line.split()
    if len(parts) != 5 or parts[0] != HEADER:
        raise ParseError(f"not a MatrixMarket header: {line.strip()!r}", lineno)
    obj, fmt, field, symmetry = (p.lower() for p in parts[1:])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}", lineno)
    if fmt not in _FORMATS:
        raise ParseError(f"unsupported format {fmt!r}", lineno)
    if field != "real":
        raise UnsupportedField(f"unsupported field {field!r}; only real matrices are read", lineno)
    if symmetry not in _SYMMETRIES:
        raise ParseError(f"unsupported symmetry {symmetry!r}", lineno)
    return fmt, symmetry


def _data_lines(fh, start):
    for lineno, line in enumerate(fh, start=start):
        s = line.strip()
        if s and not s.startswith("%"):
            yield lineno, s


def _ints(tokens, lineno, count):
    if len(tokens) != count:
        raise ParseError(f"expected {count} values, got {len(tokens)}", lineno)
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"malformed integers {' '.join(tokens)!r}", lineno) from None


def _float(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"malformed value {token!r}", lineno) from None


def _read_body(fh, fmt, symmetry):
    lines = _data_lines(fh, start=2)
    try:
        lineno, size = next(lines)
    except StopIteration:
        raise ParseError("missing size line") from None
    if fmt == "array":
        m, n = _ints(size.split(), lineno, 2)
        values = []
        for lineno, s in lines:
            values.append(_float(s.split()[0], lineno))
        if symmetry == "symmetric":
            if m != n:
                raise ParseError("symmetric array matrix must be square", lineno)
            expected = n * (n + 1) // 2
        else:
            expected = m * n
        if len(values) != expected:
            raise ParseError(f"expected {expected} array values, found {len(values)}", lineno)
        dense = np.zeros((m, n))
        if symmetry == "symmetric":
            it = iter(values)
            for j in range(n):
                for i in range(j, n):
                    dense[i, j] = dense[j, i] = next(it)
        else:
            dense[:] = np.asarray(values).reshape(n, m).T
        return dense, None

    m, n, nnz = _ints(size.split(), lineno, 3)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    k = 0
    for lineno, s in lines:
        tokens = s.split()
        if len(tokens) != 3:
            raise ParseError(f"expected 'row col value', got {s!r}", lineno)
        if k == nnz:
            raise ParseError(f"more than the declared {nnz} entries", lineno)
        i, j = _ints(tokens[:2], lineno, 2)
        if i < 1 or j < 1:
            raise ParseError(f"index ({i}, {j}) is not 1-based", lineno)
        if i > m or j > n:
            raise ParseError(f"index ({i}, {j}) outside a {m}x{n} matrix", lineno)
        rows[k], cols[k], vals[k] = i - 1, j - 1, _float(tokens[2], lineno)
        k += 1
    if k != nnz:
        raise ParseError(f"declared {nnz} entries but found {k}")
    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    return None, sp.coo_matrix((vals, (rows, cols)), shape=(m, n))


def read_matrix_market(path):
    """Read a real MatrixMarket file into scalar CSR (duplicates summed)."""
    with open(path) as fh:
        first = fh.readline()
        fmt, symmetry = _parse_header(first)
        dense, coo = _read_body(fh, fmt, symmetry)
    if dense is not None:
        return SparseMatrix.from_dense(dense)
    return SparseMatrix.from_scipy(coo)


def write_matrix_market(A, path, comment=None):
    """Write A (blocks are expanded) as coordinate real general, 17 digits."""
    A = to_scalar(A)
    rows = A.row_indices()
    with open(path, "w") as fh:
        fh.write(f"{HEADER} matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.nrows} {A.ncols} {A.nnz}\n")
        for i, j, v in zip(rows + 1, A.col + 1, A.val):
            fh.write(f"{i} {j} {v:.17g}\n")


def read_coordinates(path):
    """Read node coordinates, three whitespace-separated reals per line."""
    pts = []
    with open(path) as fh:
        for lineno, s in _data_lines(fh, start=1):
            tokens = s.split()
            if len(tokens) != 3:
                raise ParseError(f"expected 3 coordinates, got {len(tokens)}", lineno)
            pts.append([_float(t, lineno) for t in tokens])
    coords = np.array(pts, dtype=np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(coords)):
        raise ParseError("coordinates must be finite")
    return coords


def write_coordinates(coords, path):
    np.savetxt(path, np.asarray(coords), fmt="%.17g")


def read_vector(path):
    """Read a MatrixMarket array (n x 1) or a plain one-value-per-line file."""
    with open(path) as fh:
        first = fh.readline()
        if first.startswith(HEADER):
            fmt, symmetry = _parse_header(first)
            dense, coo = _read_body(fh, fmt, symmetry)
            arr = dense if dense is not None else coo.toarray()
            if arr.ndim != 2 or 1 not in arr.shape:
                raise ParseError(f"vector file holds a {arr.shape[0]}x{arr.shape[1]} matrix")
            return arr.ravel()
        fh.seek(0)
        values = []
        for lineno, s in _data_lines(fh, start=1):
            values.extend(_float(t, lineno) for t in s.split())
    return np.array(values, dtype=np.float64)


def write_vector(x, path):
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write(f"{HEADER} matrix array real general\n{len(x)} 1\n")
        for v in x:
            fh.write(f"{v:.17g}\n")
