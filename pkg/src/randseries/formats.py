"""Text formats and the named-source catalog used by the command line.

``trimat v1``
    Header ``trimat v1 N=<n>``, then ``n`` data lines; line ``i`` holds
    exactly ``i`` whitespace-separated numbers ``a[i,1] .. a[i,i]``.  A
    complex entry is written ``re,im``.  ``#`` starts a comment; blank and
    comment-only lines are skipped.
``covmat v1``
    Header ``covmat v1 N=<n>``, then ``n`` rows of ``n`` numbers.
``vecs v1``
    Header ``vecs v1 N=<n> d=<d>``, then ``n`` rows of ``d`` numbers: the
    weight vectors ``u_1 .. u_n``.
"""

from __future__ import annotations

import math
import os
import re

import numpy as np

from .adaptive import clamp_rule, constant_rule, sign_rule, zero_rule
from .coeffs import (LAWS, CoefficientMatrix, VectorWeights, collinear_matrix,
                     diagonal_matrix, ones_matrix, power_decay_matrix, zero_matrix)
from .covfactor import CovarianceSpec, cholesky_lower, fgn0_coefficients
from .innovations import generator

_HEADER = re.compile(r"^(trimat|covmat|vecs)\s+v1\s+N=(\d+)(?:\s+d=(\d+))?\s*$")


class FormatError(ValueError):
    """Malformed input file; ``lineno`` is 1-based (0 when the file is empty)."""

    def __init__(self, message, lineno=0, source="<text>"):
        self.lineno = lineno
        self.source = source
        super().__init__(f"{source}:{lineno}: {message}" if lineno else f"{source}: {message}")


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _number(token, lineno, source, allow_complex):
    try:
        if "," in token:
            if not allow_complex:
                raise ValueError
            re_part, im_part = token.split(",")
            return complex(float(re_part), float(im_part))
        return float(token)
    except ValueError:
        raise FormatError(f"cannot parse number {token!r}", lineno, source) from None


def _parse(text, kind, source, allow_complex, width):
    lines = _data_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError(f"empty input, expected '{kind} v1 N=<n>' header",
                          source=source) from None
    match = _HEADER.match(header)
    if not match or match.group(1) != kind:
        raise FormatError(f"expected '{kind} v1 N=<n>' header, got {header!r}", lineno, source)
    n = int(match.group(2))
    d = int(match.group(3)) if match.group(3) else None
    if n < 1:
        raise FormatError("N must be at least 1", lineno, source)
    if kind == "vecs" and d is None:
        raise FormatError("vecs header needs d=<d>", lineno, source)
    rows = []
    for lineno, line in lines:
        if len(rows) == n:
            raise FormatError(f"extra data line beyond N={n}", lineno, source)
        expected = width(len(rows) + 1, n, d)
        tokens = line.split()
        if len(tokens) != expected:
            raise FormatError(f"row {len(rows) + 1} needs {expected} numbers, got {len(tokens)}",
                              lineno, source)
        rows.append([_number(t, lineno, source, allow_complex) for t in tokens])
    if len(rows) != n:
        raise FormatError(f"expected {n} data rows, got {len(rows)}", lineno, source)
    return n, rows


def parse_trimat(text, source="<text>"):
    """Lower-triangular table (``(n, n)`` array) from ``trimat v1`` text.

    >>> parse_trimat("trimat v1 N=2\\n1\\n0.5 2  # row two\\n").tolist()
    [[1.0, 0.0], [0.5, 2.0]]
    """
    n, rows = _parse(text, "trimat", source, True, lambda i, n, d: i)
    is_complex = any(isinstance(v, complex) for row in rows for v in row)
    table = np.zeros((n, n), dtype=np.complex128 if is_complex else np.float64)
    for i, row in enumerate(rows):
        table[i, :i + 1] = row
    return table


def parse_covmat(text, source="<text>"):
    n, rows = _parse(text, "covmat", source, False, lambda i, n, d: n)
    return np.array(rows, dtype=np.float64)


def parse_vecs(text, source="<text>"):
    _, rows = _parse(text, "vecs", source, False, lambda i, n, d: d)
    return np.array(rows, dtype=np.float64)


def _fmt(x):
    if isinstance(x, complex) or np.iscomplexobj(x):
        x = complex(x)
        return f"{x.real:.17g},{x.imag:.17g}"
    return f"{float(x):.17g}"


def format_trimat(table):
    """``trimat v1`` text of a lower-triangular table (17 significant digits)."""
    table = np.asarray(table)
    n = table.shape[0]
    cplx = np.iscomplexobj(table)
    lines = [f"trimat v1 N={n}"]
    for i in range(n):
        row = table[i, :i + 1]
        lines.append(" ".join(_fmt(complex(v) if cplx else v) for v in row))
    return "\n".join(lines) + "\n"


def format_covmat(matrix):
    matrix = np.asarray(matrix, dtype=np.float64)
    lines = [f"covmat v1 N={matrix.shape[0]}"]
    lines += [" ".join(_fmt(v) for v in row) for row in matrix]
    return "\n".join(lines) + "\n"


def format_vecs(vectors):
    vectors = np.asarray(vectors, dtype=np.float64)
    lines = [f"vecs v1 N={vectors.shape[0]} d={vectors.shape[1]}"]
    lines += [" ".join(_fmt(v) for v in row) for row in vectors]
    return "\n".join(lines) + "\n"


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _params(text, source):
    out = {}
    for part in filter(None, text.split(",")):
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"expected key=value in {source!r}, got {part!r}")
        out[key.strip()] = value.strip()
    return out


def _float_param(params, key, source):
    if key not in params:
        raise ValueError(f"{source!r} needs parameter {key}=<value>")
    return float(params[key])


def random_matrix(N, seed=0, low=-1.0, high=1.0):
    """Lower-triangular matrix with i.i.d. ``U[low, high]`` entries from ``(seed, 0)``."""
    rng = generator(seed, 0)
    return CoefficientMatrix.from_table(np.tril(rng.uniform(low, high, size=(N, N))),
                                        name=f"random:seed={seed}")


MATRIX_RULES = ("fgn0", "fgn:H=<h>", "power:alpha=<a>", "diag:<law>", "collinear:<law>",
                "diag-<law>", "collinear-<law>", "zero", "ones", "identity",
                "random:seed=<s>")


def load_matrix(source, N=None):
    """Coefficient matrix from a ``trimat`` file path or a named rule.

    ``N`` sizes rules that need a finite order (``fgn:H=..``, ``random``).
    """
    if os.path.isfile(source):
        return CoefficientMatrix.from_table(parse_trimat(_read(source), source),
                                            name=os.path.basename(source))
    name, _, arg = source.partition(":")
    if "-" in name and not arg and name.split("-", 1)[0] in ("diag", "collinear"):
        name, arg = name.split("-", 1)
    if name == "fgn0" and not arg:
        return fgn0_coefficients()
    if name == "fgn":
        if N is None:
            raise ValueError("fgn:H=<h> needs --N")
        H = _float_param(_params(arg, source), "H", source)
        return cholesky_lower(CovarianceSpec.fgn(H, N))
    if name == "power":
        return power_decay_matrix(_float_param(_params(arg, source), "alpha", source))
    if name == "diag" and arg:
        return diagonal_matrix(arg)
    if name == "collinear" and arg:
        return collinear_matrix(arg)
    if name == "identity" and not arg:
        return diagonal_matrix("ones")
    if name == "zero" and not arg:
        return zero_matrix()
    if name == "ones" and not arg:
        return ones_matrix()
    if name == "random":
        if N is None:
            raise ValueError("random:seed=<s> needs --N")
        return random_matrix(N, int(_params(arg, source).get("seed", 0)))
    raise ValueError(f"unknown matrix source {source!r}: not a file and not one of "
                     f"{', '.join(MATRIX_RULES)}")


def load_weights(source):
    """Weights from a ``vecs`` file, ``unit``, a law name or ``trig:<lawA>,<lawB>``.

    A law name sets the squared norms ``||u_n||^2 = law(n)``; ``trig`` builds
    two-dimensional vectors ``(A_n, B_n)`` with the two laws as coordinates.
    """
    if source is None:
        return None
    if os.path.isfile(source):
        return VectorWeights(vectors=parse_vecs(_read(source), source), name=os.path.basename(source))
    if source == "unit":
        return VectorWeights.from_sq_norms(LAWS["ones"], name="unit")
    if source in LAWS:
        return VectorWeights.from_sq_norms(LAWS[source], name=source)
    if source.startswith("trig:"):
        laws = source[5:].split(",")
        if len(laws) != 2 or any(l not in LAWS for l in laws):
            raise ValueError(f"trig weights need two laws from {sorted(LAWS)}, got {source!r}")
        return VectorWeights.from_trig(LAWS[laws[0]], LAWS[laws[1]], name=source)
    raise ValueError(f"unknown weights source {source!r}: not a file, 'unit', "
                     f"'trig:<a>,<b>' or one of {sorted(LAWS)}")


def load_covariance(source, N=None):
    """Covariance spec from a ``covmat`` file or ``fgn:H=<h>`` (needs ``N``)."""
    if os.path.isfile(source):
        return CovarianceSpec.explicit(parse_covmat(_read(source), source))
    name, _, arg = source.partition(":")
    if name == "fgn":
        if N is None:
            raise ValueError("fgn:H=<h> needs --N")
        return CovarianceSpec.fgn(_float_param(_params(arg, source), "H", source), N)
    if name == "identity":
        if N is None:
            raise ValueError("identity covariance needs --N")
        return CovarianceSpec.explicit(np.eye(N))
    raise ValueError(f"unknown covariance source {source!r}: not a file, 'identity' "
                     f"or fgn:H=<h>")


def load_rule(source, matrix=None):
    """Predictable rule: ``constant`` (uses ``matrix``), ``sign:<law>``,
    ``clamp:<law>``, ``zero`` or ``table:<trimat path>``."""
    name, _, arg = source.partition(":")
    if name == "constant" and not arg:
        if matrix is None:
            raise ValueError("rule 'constant' needs --matrix")
        return constant_rule(matrix)
    if name == "table":
        return constant_rule(load_matrix(arg))
    if name == "sign":
        return sign_rule(arg or "inv2")
    if name == "clamp":
        return clamp_rule(arg or "geometric")
    if name == "zero" and not arg:
        return zero_rule()
    raise ValueError(f"unknown rule {source!r}; choose constant, sign:<law>, clamp:<law>, "
                     f"zero or table:<path>")


def parse_grid(text):
    """``lo:hi:count`` as an evenly spaced grid (``count`` points, both ends).

    >>> parse_grid("0.5:3:6").tolist()
    [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like lo:hi:count, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"bad grid {text!r}")
    return np.linspace(lo, hi, count)


def parse_int_range(text):
    """``lo:hi`` (inclusive) or a comma list of integers."""
    if ":" in text:
        lo, hi = (int(p) for p in text.split(":"))
        return list(range(lo, hi + 1))
    return [int(p) for p in text.split(",") if p]
