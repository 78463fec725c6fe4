"""Real-coefficient polynomials and polynomial matrices.

Coefficients are stored in ascending degree order (``coeffs[i]`` multiplies
``s**i``).  The zero polynomial is canonically the empty coefficient tuple;
nonzero polynomials never carry trailing (highest-degree) zeros.  Everything
here is an immutable value type, safe for concurrent reads.
"""

import numpy as np

__all__ = ["Poly", "PolyMatrix", "S", "matrix_rank"]

# Trim/zero threshold, relative to the participating coefficient scale.
TRIM_REL = 1e-12


def _trim(coeffs, scale=0.0):
    """Drop trailing coefficients indistinguishable from zero."""
    scale = max(scale, max((abs(c) for c in coeffs), default=0.0))
    tol = TRIM_REL * (1.0 + scale)
    coeffs = list(coeffs)
    while coeffs and abs(coeffs[-1]) <= tol:
        coeffs.pop()
    return tuple(float(c) for c in coeffs)


class Poly:
    """Polynomial in one indeterminate with real coefficients.

    Parameters
    ----------
    coeffs : sequence of float
        Ascending-degree coefficients.  Trailing near-zeros are trimmed so
        the stored form is canonical.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(), _scale=0.0):
        object.__setattr__(self, "coeffs", _trim(coeffs, _scale))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    @property
    def degree(self):
        """Degree of the polynomial; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return not self.coeffs

    def __call__(self, s):
        """Evaluate by Horner's rule.  Accepts scalars or ndarrays."""
        acc = 0.0 * np.asarray(s) if isinstance(s, np.ndarray) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * s + c
        return acc

    def _scale_of(self, other=None):
        m = max((abs(c) for c in self.coeffs), default=0.0)
        if other is not None:
            m = max(m, max((abs(c) for c in other.coeffs), default=0.0))
        return m

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0.0] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0.0] * (n - len(other.coeffs))
        return Poly([x + y for x, y in zip(a, b)], _scale=self._scale_of(other))

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self.__add__(-_as_poly(other))

    def __rsub__(self, other):
        return (-self).__add__(_as_poly(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Poly([other * c for c in self.coeffs], _scale=self._scale_of())
        other = _as_poly(other)
        if self.is_zero or other.is_zero:
            return Poly()
        out = [0.0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out, _scale=self._scale_of(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def divmod(self, other):
        """Euclidean division ``self = q*other + r`` with ``deg r < deg other``."""
        other = _as_poly(other)
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(), self
        quo = [0.0] * (dq + 1)
        lead = other.coeffs[-1]
        for k in range(dq, -1, -1):
            c = rem[k + len(other.coeffs) - 1] / lead
            quo[k] = c
            for j, b in enumerate(other.coeffs):
                rem[k + j] -= c * b
        return Poly(quo), Poly(rem, _scale=self._scale_of(other))

    def exact_div(self, other, rel_tol=1e-9):
        """Division known to be exact; raises if the remainder is not tiny."""
        q, r = self.divmod(other)
        scale = 1.0 + self._scale_of(_as_poly(other))
        if any(abs(c) > rel_tol * scale for c in r.coeffs):
            raise ArithmeticError("polynomial division left a nonzero remainder")
        return q

    def derivative(self):
        return Poly([i * c for i, c in enumerate(self.coeffs)][1:])

    def monic(self):
        """Return ``(p/lead, lead)``; the zero polynomial is returned as-is."""
        if self.is_zero:
            return self, 1.0
        lead = self.coeffs[-1]
        return Poly([c / lead for c in self.coeffs]), lead

    def coeff(self, k):
        """Coefficient of ``s**k`` (0.0 beyond the stored degree)."""
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0.0

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        if self.is_zero:
            return "Poly(0)"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0.0:
                continue
            if i == 0:
                terms.append(f"{c:g}")
            elif i == 1:
                terms.append(f"{c:g}*s")
            else:
                terms.append(f"{c:g}*s^{i}")
        return "Poly(" + " + ".join(terms) + ")"


def _as_poly(x):
    if isinstance(x, Poly):
        return x
    if isinstance(x, (int, float)):
        return Poly([float(x)])
    return Poly(x)


#: The indeterminate itself, handy for building polynomials as expressions.
S = Poly((0.0, 1.0))


def matrix_rank(m):
    """Numerical rank via singular values with the package-wide threshold."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > sv[0] * max(m.shape) * 1e-10))


class PolyMatrix:
    """Matrix whose entries are `Poly` values, stored row-major."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows, cols, entries):
        entries = tuple(_as_poly(e) for e in entries)
        if len(entries) != rows * cols:
            raise ValueError("entry count does not match rows*cols")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("PolyMatrix is immutable")

    @classmethod
    def from_rows(cls, rows):
        r = len(rows)
        c = len(rows[0]) if r else 0
        if any(len(row) != c for row in rows):
            raise ValueError("ragged rows")
        return cls(r, c, [e for row in rows for e in row])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def __call__(self, s):
        """Evaluate the matrix entrywise at a (possibly complex) point."""
        out = np.empty((self.rows, self.cols), dtype=complex)
        for i in range(self.rows):
            for j in range(self.cols):
                out[i, j] = self[i, j](s)
        return out

    def transpose(self):
        ent = [self[i, j] for j in range(self.cols) for i in range(self.rows)]
        return PolyMatrix(self.cols, self.rows, ent)

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("dimension mismatch in polynomial matrix product")
        ent = []
        for i in range(self.rows):
            for j in range(other.cols):
                acc = Poly()
                for k in range(self.cols):
                    acc = acc + self[i, k] * other[k, j]
                ent.append(acc)
        return PolyMatrix(self.rows, other.cols, ent)

    def det(self):
        """Determinant as a polynomial.

        Cofactor expansion for orders up to 3; fraction-free (Bareiss)
        elimination above that, which keeps intermediate degrees under
        control and only performs exact polynomial divisions.
        """
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square polynomial matrix")
        n = self.rows
        if n == 0:
            return Poly([1.0])
        if n <= 3:
            return self._det_cofactor([[self[i, j] for j in range(n)] for i in range(n)])
        return self._det_bareiss()

    @staticmethod
    def _det_cofactor(a):
        n = len(a)
        if n == 1:
            return a[0][0]
        if n == 2:
            return a[0][0] * a[1][1] - a[0][1] * a[1][0]
        acc = Poly()
        for j in range(n):
            minor = [[a[i][k] for k in range(n) if k != j] for i in range(1, n)]
            term = a[0][j] * PolyMatrix._det_cofactor(minor)
            acc = acc + (term if j % 2 == 0 else -term)
        return acc

    def _det_bareiss(self):
        n = self.rows
        a = [[self[i, j] for j in range(n)] for i in range(n)]
        prev = Poly([1.0])
        sign = 1.0
        for k in range(n - 1):
            if a[k][k].is_zero:
                for r in range(k + 1, n):
                    if not a[r][k].is_zero:
                        a[k], a[r] = a[r], a[k]
                        sign = -sign
                        break
                else:
                    return Poly()
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    num = a[k][k] * a[i][j] - a[i][k] * a[k][j]
                    a[i][j] = num.exact_div(prev)
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def column_structure(self):
        """Column degrees and the highest-column-degree coefficient matrix.

        Returns
        -------
        degrees : tuple
            ``degrees[j]`` is the maximum entry degree in column j, or
            ``None`` for an identically zero column (explicit marker rather
            than a silent 0).
        leading : ndarray
            ``leading[i, j]`` is the coefficient of ``s**degrees[j]`` in
            entry (i, j); zero where the entry's degree is lower.  Columns
            with undefined degree are all-zero.
        """
        degrees = []
        leading = np.zeros((self.rows, self.cols))
        for j in range(self.cols):
            dj = max(self[i, j].degree for i in range(self.rows))
            if dj < 0:
                degrees.append(None)
                continue
            degrees.append(dj)
            for i in range(self.rows):
                leading[i, j] = self[i, j].coeff(dj)
        return tuple(degrees), leading

    def is_column_reduced(self):
        """True iff the leading column-coefficient matrix has full column rank."""
        degrees, leading = self.column_structure()
        if any(d is None for d in degrees):
            raise ValueError("column degree undefined: matrix has a zero column")
        return matrix_rank(leading) == self.cols

    def __repr__(self):
        return f"PolyMatrix({self.rows}x{self.cols})"
