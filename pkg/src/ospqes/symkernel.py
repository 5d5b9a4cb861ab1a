"""Exact polynomial and differential-operator arithmetic.

Coefficients are :class:`fractions.Fraction` values. Polynomials live in the
fixed variable set ``x, n, beta, x0, b, c``; ``x`` is the only variable that
differential operators differentiate. Everything here is immutable.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Union

Rational = Fraction

VARS: tuple[str, ...] = ("x", "n", "beta", "x0", "b", "c")
_INDEX = {name: i for i, name in enumerate(VARS)}
_NV = len(VARS)
_ZERO_EXP = (0,) * _NV

Scalar = Union[int, Fraction]


def as_rational(value) -> Fraction:
    """Convert ints, Fractions, decimal strings or floats (exactly) to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


class MultiPoly:
    """Sparse multivariate polynomial with rational coefficients.

    Terms are stored as ``{exponent tuple: Fraction}`` with zero coefficients
    dropped, so equal polynomials have identical term maps.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple[int, ...], Scalar] | None = None):
        clean: dict[tuple[int, ...], Fraction] = {}
        if terms:
            for exp, coef in terms.items():
                if len(exp) != _NV or any(e < 0 for e in exp):
                    raise ValueError(f"bad exponent vector {exp!r}")
                q = as_rational(coef)
                if q:
                    clean[tuple(exp)] = q
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "MultiPoly":
        # caller guarantees canonical form
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, value: Scalar) -> "MultiPoly":
        return cls({_ZERO_EXP: value})

    @classmethod
    def var(cls, name: str, power: int = 1) -> "MultiPoly":
        if name not in _INDEX:
            raise KeyError(f"unknown variable {name!r}")
        exp = [0] * _NV
        exp[_INDEX[name]] = power
        return cls({tuple(exp): 1})

    @classmethod
    def from_x_coeffs(cls, coeffs: Iterable[Scalar]) -> "MultiPoly":
        """Univariate polynomial in x from ascending coefficients."""
        terms = {}
        for k, a in enumerate(coeffs):
            exp = [0] * _NV
            exp[0] = k
            terms[tuple(exp)] = a
        return cls(terms)

    @staticmethod
    def lift(value) -> "MultiPoly":
        if isinstance(value, MultiPoly):
            return value
        return MultiPoly.const(as_rational(value))

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def degree(self, name: str = "x") -> int:
        """Degree in one variable; -1 for the zero polynomial."""
        i = _INDEX[name]
        return max((e[i] for e in self._terms), default=-1)

    def free_vars(self) -> set[str]:
        return {VARS[i] for exp in self._terms for i, e in enumerate(exp) if e}

    def coeff_x(self, k: int) -> "MultiPoly":
        """Coefficient of x**k as a polynomial in the remaining variables."""
        out = {}
        for exp, q in self._terms.items():
            if exp[0] == k:
                out[(0,) + exp[1:]] = q
        return MultiPoly._raw(out)

    def x_coeffs(self) -> list["MultiPoly"]:
        return [self.coeff_x(k) for k in range(self.degree("x") + 1)]

    def constant_value(self) -> Fraction:
        """The value of a constant polynomial; raises if variables remain."""
        if any(exp != _ZERO_EXP for exp in self._terms):
            raise ValueError(f"polynomial is not constant: {self}")
        return self._terms.get(_ZERO_EXP, Fraction(0))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "MultiPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for exp, q in other._terms.items():
            s = out.get(exp, 0) + q
            if s:
                out[exp] = s
            else:
                out.pop(exp, None)
        return MultiPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw({e: -q for e, q in self._terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, q1 in self._terms.items():
            for e2, q2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + q1 * q2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return MultiPoly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative power")
        out = MultiPoly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def dx(self) -> "MultiPoly":
        out = {}
        for exp, q in self._terms.items():
            if exp[0]:
                out[(exp[0] - 1,) + exp[1:]] = q * exp[0]
        return MultiPoly._raw(out)

    def dx_n(self, k: int) -> "MultiPoly":
        p = self
        for _ in range(k):
            if not p:
                break
            p = p.dx()
        return p

    def subst(self, **values) -> "MultiPoly":
        """Substitute rational values or polynomials for variables."""
        for name in values:
            if name not in _INDEX:
                raise KeyError(f"unknown variable {name!r}")
        repl = {_INDEX[k]: MultiPoly.lift(v) for k, v in values.items()}
        out = MultiPoly()
        for exp, q in self._terms.items():
            kept = list(exp)
            factor = MultiPoly.const(q)
            for i, p in repl.items():
                if exp[i]:
                    factor = factor * p ** exp[i]
                    kept[i] = 0
            out = out + factor * MultiPoly._raw({tuple(kept): Fraction(1)})
        return out

    def eval(self, **values) -> Fraction | "MultiPoly":
        """Substitute and return a Fraction once no variables remain."""
        p = self.subst(**values)
        if p.free_vars():
            return p
        return p.constant_value()

    def divmod_x(self, divisor: "MultiPoly") -> tuple["MultiPoly", "MultiPoly"]:
        """Long division in x by a divisor whose leading x-coefficient is 1."""
        dd = divisor.degree("x")
        if dd < 0:
            raise ZeroDivisionError("division by zero polynomial")
        lead = divisor.coeff_x(dd)
        if lead != MultiPoly.const(1):
            raise ValueError("divisor must be monic in x")
        quotient = MultiPoly()
        rem = self
        xpow = MultiPoly.var("x")
        while rem.degree("x") >= dd:
            k = rem.degree("x")
            step = rem.coeff_x(k) * xpow ** (k - dd)
            quotient = quotient + step
            rem = rem - step * divisor
        return quotient, rem

    # -- comparison & rendering ------------------------------------------
    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        # total degree descending, then lexicographic descending
        return sorted(self._terms.items(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for exp, q in self.sorted_terms():
            mono = "*".join(
                VARS[i] if e == 1 else f"{VARS[i]}^{e}" for i, e in enumerate(exp) if e
            )
            mag = abs(q)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            parts.append(("-" if q < 0 else "+", body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"MultiPoly({self})"


def _coerce(value):
    if isinstance(value, MultiPoly):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return MultiPoly.const(value)
    return NotImplemented


def poly_arith(a: MultiPoly, b=None, kind: str = "add", **values):
    """Functional entry point mirroring the operator methods."""
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "dx":
        return a.dx()
    if kind == "subst":
        return a.subst(**values)
    if kind == "eval":
        return a.eval(**values)
    raise ValueError(f"unknown kind {kind!r}")


X = MultiPoly.var("x")
N = MultiPoly.var("n")
BETA = MultiPoly.var("beta")
X0 = MultiPoly.var("x0")
B = MultiPoly.var("b")
C = MultiPoly.var("c")


class DiffOp:
    """Sum of ``p_k(x; params) * D^k`` with D = d/dx."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[int, MultiPoly | Scalar] | None = None):
        clean = {}
        for k, p in (coeffs or {}).items():
            if k < 0:
                raise ValueError("negative derivative order")
            p = MultiPoly.lift(p)
            if p:
                clean[int(k)] = p
        self._coeffs = clean

    @classmethod
    def mul(cls, p) -> "DiffOp":
        """Multiplication operator by ``p``."""
        return cls({0: p})

    @classmethod
    def d(cls, order: int = 1) -> "DiffOp":
        return cls({order: 1})

    @property
    def coeffs(self) -> dict[int, MultiPoly]:
        return dict(self._coeffs)

    def coeff(self, k: int) -> MultiPoly:
        return self._coeffs.get(k, MultiPoly())

    def order(self) -> int:
        return max(self._coeffs, default=-1)

    def is_zero(self) -> bool:
        return not self._coeffs

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __add__(self, other) -> "DiffOp":
        other = _coerce_op(other)
        if other is NotImplemented:
            return other
        keys = set(self._coeffs) | set(other._coeffs)
        return DiffOp({k: self.coeff(k) + other.coeff(k) for k in keys})

    __radd__ = __add__

    def __neg__(self) -> "DiffOp":
        return DiffOp({k: -p for k, p in self._coeffs.items()})

    def __sub__(self, other) -> "DiffOp":
        other = _coerce_op(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "DiffOp":
        return (-self) + other

    def __mul__(self, other) -> "DiffOp":
        """Composition ``self ∘ other``; scalars and polynomials act by multiplication."""
        if isinstance(other, DiffOp):
            return compose(self, other)
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return compose(self, DiffOp.mul(other))

    def __rmul__(self, other) -> "DiffOp":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return DiffOp({k: other * p for k, p in self._coeffs.items()})

    def apply(self, v: MultiPoly) -> MultiPoly:
        out = MultiPoly()
        for k, p in self._coeffs.items():
            out = out + p * v.dx_n(k)
        return out

    def subst(self, **values) -> "DiffOp":
        return DiffOp({k: p.subst(**values) for k, p in self._coeffs.items()})

    def __eq__(self, other) -> bool:
        other = _coerce_op(other)
        if other is NotImplemented:
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(frozenset(self._coeffs.items()))

    def __str__(self) -> str:
        if not self._coeffs:
            return "0"
        parts = []
        for k in sorted(self._coeffs, reverse=True):
            p = self._coeffs[k]
            if k == 0:
                parts.append(f"({p})")
            else:
                dk = "D" if k == 1 else f"D^{k}"
                parts.append(dk if p == MultiPoly.const(1) else f"({p})*{dk}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"DiffOp({self})"


def _coerce_op(value):
    if isinstance(value, DiffOp):
        return value
    p = _coerce(value)
    if p is NotImplemented:
        return p
    return DiffOp.mul(p)


def compose(a: DiffOp, b: DiffOp) -> DiffOp:
    """``a ∘ b`` normalised with D^i q = sum_k C(i,k) q^(k) D^(i-k)."""
    out: dict[int, MultiPoly] = {}
    for i, p in a._coeffs.items():
        for j, q in b._coeffs.items():
            qk = q
            for k in range(i + 1):
                if not qk:
                    break
                order = i - k + j
                out[order] = out.get(order, MultiPoly()) + p * qk * comb(i, k)
                qk = qk.dx()
    return DiffOp(out)


def op_compose(a: DiffOp, b: DiffOp) -> DiffOp:
    return compose(a, b)


def op_bracket(a: DiffOp, b: DiffOp, kind: str = "commutator") -> DiffOp:
    if kind == "commutator":
        return a * b - b * a
    if kind == "anticommutator":
        return a * b + b * a
    raise ValueError(f"unknown bracket kind {kind!r}")


class MatOp:
    """2x2 matrix of :class:`DiffOp`; products act right factor first."""

    __slots__ = ("_e",)

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("MatOp needs a 2x2 grid")
        self._e = tuple(tuple(_as_op(v) for v in r) for r in rows)

    @classmethod
    def zero(cls) -> "MatOp":
        return cls([[0, 0], [0, 0]])

    @classmethod
    def identity(cls) -> "MatOp":
        return cls([[1, 0], [0, 1]])

    @classmethod
    def diag(cls, a, b) -> "MatOp":
        return cls([[a, 0], [0, b]])

    @classmethod
    def lower(cls, op) -> "MatOp":
        """Only the (2,1) entry set, the shape of every T_Q-type operator."""
        return cls([[0, 0], [op, 0]])

    @classmethod
    def upper(cls, op) -> "MatOp":
        return cls([[0, op], [0, 0]])

    def __getitem__(self, ij: tuple[int, int]) -> DiffOp:
        i, j = ij
        return self._e[i][j]

    @property
    def entries(self) -> tuple[tuple[DiffOp, DiffOp], tuple[DiffOp, DiffOp]]:
        return self._e

    def is_zero(self) -> bool:
        return all(op.is_zero() for r in self._e for op in r)

    def __add__(self, other: "MatOp") -> "MatOp":
        if not isinstance(other, MatOp):
            return NotImplemented
        return MatOp([[self._e[i][j] + other._e[i][j] for j in range(2)] for i in range(2)])

    def __neg__(self) -> "MatOp":
        return MatOp([[-op for op in r] for r in self._e])

    def __sub__(self, other: "MatOp") -> "MatOp":
        if not isinstance(other, MatOp):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other) -> "MatOp":
        if isinstance(other, MatOp):
            return MatOp(
                [
                    [self._e[i][0] * other._e[0][j] + self._e[i][1] * other._e[1][j] for j in range(2)]
                    for i in range(2)
                ]
            )
        return NotImplemented

    def __rmul__(self, other) -> "MatOp":
        p = _coerce(other)
        if p is NotImplemented:
            return p
        return MatOp([[p * op for op in r] for r in self._e])

    def scale(self, p) -> "MatOp":
        return MultiPoly.lift(p) * self

    def apply(self, v: tuple[MultiPoly, MultiPoly]) -> tuple[MultiPoly, MultiPoly]:
        top, bot = (MultiPoly.lift(c) for c in v)
        return (
            self._e[0][0].apply(top) + self._e[0][1].apply(bot),
            self._e[1][0].apply(top) + self._e[1][1].apply(bot),
        )

    def subst(self, **values) -> "MatOp":
        return MatOp([[op.subst(**values) for op in r] for r in self._e])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatOp):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self) -> int:
        return hash(self._e)

    def __str__(self) -> str:
        return "[[{}, {}], [{}, {}]]".format(*(str(op) for r in self._e for op in r))

    def __repr__(self) -> str:
        return f"MatOp({self})"


def _as_op(value) -> DiffOp:
    if isinstance(value, DiffOp):
        return value
    return DiffOp.mul(MultiPoly.lift(value))


def mat_arith(a: MatOp, b, kind: str = "add") -> MatOp:
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "scale":
        return a.scale(b)
    raise ValueError(f"unknown kind {kind!r}")


def mat_bracket(a: MatOp, b: MatOp, kind: str = "commutator") -> MatOp:
    if kind == "commutator":
        return a * b - b * a
    if kind == "anticommutator":
        return a * b + b * a
    raise ValueError(f"unknown bracket kind {kind!r}")


def mat_apply(a: MatOp, v) -> tuple[MultiPoly, MultiPoly]:
    return a.apply(v)


def mat_equal(a: MatOp, b: MatOp) -> bool:
    return (a - b).is_zero()
