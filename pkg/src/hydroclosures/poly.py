"""Exact sparse multivariate polynomial arithmetic over the rationals.

A polynomial is a map from exponent tuples (one non-negative int per
variable) to Fraction coefficients.  Zero coefficients are never stored,
so equality of dictionaries is equality of polynomials, and an identity
check is just "subtract and test for the empty map".  The zero polynomial
is the empty map.

Terms are ordered graded-lexicographically (total degree first, then
lexicographic on the exponent tuple, both descending) wherever an order
matters: serialization, golden-file comparison and CLI output.

`RatFunc` is a thin exact rational-function layer (numerator/denominator
pair) used for change-of-variables computations whose Jacobians are not
polynomial.  It performs no GCD simplification; equality is decided by
cross-multiplication, which only needs polynomial identity.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence


class _AnyDegree:
    """Sentinel returned by homogeneous_degree() for the zero polynomial."""

    def __repr__(self) -> str:
        return "<any degree>"


ANY_DEGREE = _AnyDegree()


def _grlex_key(exps: tuple[int, ...]) -> tuple:
    return (sum(exps), exps)


class MultiPoly:
    """Immutable sparse polynomial in `nvars` variables over Fraction."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], Rational] | None = None):
        object.__setattr__(self, "nvars", int(nvars))
        clean: dict[tuple[int, ...], Fraction] = {}
        if terms:
            for exps, coef in terms.items():
                exps = tuple(int(e) for e in exps)
                if len(exps) != self.nvars:
                    raise ValueError(f"exponent tuple {exps} does not match nvars={self.nvars}")
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative exponent in {exps}")
                c = clean.get(exps, Fraction(0)) + Fraction(coef)
                if c:
                    clean[exps] = c
                elif exps in clean:
                    del clean[exps]
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("MultiPoly is immutable")

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, value) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: Fraction(value)})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "MultiPoly":
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for nvars={nvars}")
        exps = tuple(1 if i == index else 0 for i in range(nvars))
        return cls(nvars, {exps: Fraction(1)})

    @classmethod
    def monomial(cls, nvars: int, exps: Sequence[int], coef=1) -> "MultiPoly":
        return cls(nvars, {tuple(exps): Fraction(coef)})

    # -- predicates -----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def total_degree(self):
        """Max total degree of a term, or None for the zero polynomial."""
        if not self.terms:
            return None
        return max(sum(e) for e in self.terms)

    def homogeneous_degree(self):
        """Common total degree of all terms, None if mixed, ANY_DEGREE if zero."""
        if not self.terms:
            return ANY_DEGREE
        degrees = {sum(e) for e in self.terms}
        if len(degrees) == 1:
            return degrees.pop()
        return None

    # -- arithmetic -----------------------------------------------------

    def _coerce(self, other) -> "MultiPoly | None":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError(f"variable-count mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, Fraction)):
            return MultiPoly.const(self.nvars, other)
        return None

    def __add__(self, other):
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        out = dict(self.terms)
        for exps, c in q.terms.items():
            out[exps] = out.get(exps, Fraction(0)) + c
        return MultiPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        return self + (-q)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in q.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return MultiPoly(self.nvars, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division of polynomial by zero scalar")
            return MultiPoly(self.nvars, {e: c / Fraction(other) for e, c in self.terms.items()})
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = MultiPoly.const(self.nvars, 1)
        base = self
        k = n
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.const(self.nvars, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    # -- calculus and evaluation ---------------------------------------

    def diff(self, var: int) -> "MultiPoly":
        """Exact partial derivative with respect to variable `var`."""
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable index {var} out of range for nvars={self.nvars}")
        out: dict[tuple[int, ...], Fraction] = {}
        for exps, c in self.terms.items():
            e = exps[var]
            if e:
                de = tuple(x - 1 if i == var else x for i, x in enumerate(exps))
                out[de] = out.get(de, Fraction(0)) + c * e
        return MultiPoly(self.nvars, out)

    def eval(self, values: Sequence):
        """Evaluate at `values` (Fractions, floats, MultiPoly, RatFunc...).

        The result lives in whatever ring the values live in; with all-Fraction
        input it is an exact Fraction.
        """
        if len(values) != self.nvars:
            raise ValueError(f"expected {self.nvars} values, got {len(values)}")
        acc = None
        for exps, coef in self.terms.items():
            term = coef
            for v, e in zip(values, exps):
                if e:
                    term = term * v ** e
            acc = term if acc is None else acc + term
        return Fraction(0) if acc is None else acc

    def substitute(self, replacements: Sequence["MultiPoly"]) -> "MultiPoly":
        """Compose: substitute replacements[i] for variable i.

        All replacement polynomials must share one target variable count.
        """
        if len(replacements) != self.nvars:
            raise ValueError(f"expected {self.nvars} replacement polynomials")
        if self.nvars == 0:
            return MultiPoly(0, dict(self.terms))
        target = {p.nvars for p in replacements}
        if len(target) != 1:
            raise ValueError("replacement polynomials disagree on variable count")
        nv = target.pop()
        result = self.eval(replacements)
        if not isinstance(result, MultiPoly):
            result = MultiPoly.const(nv, result)
        return result

    def compile_float(self):
        """Return a fast float evaluator f(values) usable with numpy arrays."""
        compiled = [(float(c), exps) for exps, c in sorted(self.terms.items(),
                                                          key=lambda kv: _grlex_key(kv[0]),
                                                          reverse=True)]

        def evaluate(values):
            acc = 0.0
            for c, exps in compiled:
                term = c
                for v, e in zip(values, exps):
                    if e == 1:
                        term = term * v
                    elif e:
                        term = term * v ** e
                acc = acc + term
            return acc

        return evaluate

    # -- serialization --------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    def to_text(self, varnames: Sequence[str] | None = None) -> str:
        """Canonical text form: `coef * v1^e1*v2^e2` terms joined by ` + `."""
        if varnames is None:
            varnames = [f"v{i + 1}" for i in range(self.nvars)]
        if len(varnames) != self.nvars:
            raise ValueError("varnames length mismatch")
        if not self.terms:
            return "0"
        parts = []
        for exps, coef in self.sorted_terms():
            factors = []
            for name, e in zip(varnames, exps):
                if e == 1:
                    factors.append(name)
                elif e:
                    factors.append(f"{name}^{e}")
            if factors:
                parts.append(f"{coef} * " + "*".join(factors))
            else:
                parts.append(str(coef))
        return " + ".join(parts)

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {self.to_text()!r})"

    @classmethod
    def parse(cls, text: str, nvars: int | None = None,
              varnames: Sequence[str] | None = None) -> "MultiPoly":
        """Parse the to_text() format (tolerant about spacing and '-' signs)."""
        name_to_idx = None
        if varnames is not None:
            name_to_idx = {n: i for i, n in enumerate(varnames)}
        s = text.strip().replace("-", "+-")
        raw_terms = [t.strip() for t in s.split("+")]
        raw_terms = [t for t in raw_terms if t]
        parsed = []  # (coef, {idx_or_name: exp})
        max_index = 0
        for raw in raw_terms:
            coef = Fraction(1)
            if raw.startswith("-"):
                coef = -coef
                raw = raw[1:].strip()
            factors = [f.strip() for f in raw.replace("*", " ").split()]
            powers: dict[object, int] = {}
            for f in factors:
                m = re.fullmatch(r"(-?\d+)(?:/(\d+))?", f)
                if m:
                    coef *= Fraction(int(m.group(1)), int(m.group(2) or 1))
                    continue
                m = re.fullmatch(r"([A-Za-z_]+\d*)(?:\^(\d+))?", f)
                if not m:
                    raise ValueError(f"cannot parse factor {f!r} in {text!r}")
                name, exp = m.group(1), int(m.group(2) or 1)
                if name_to_idx is not None:
                    if name not in name_to_idx:
                        raise ValueError(f"unknown variable {name!r}")
                    key: object = name_to_idx[name]
                else:
                    m2 = re.fullmatch(r"[A-Za-z_]+(\d+)", name)
                    if not m2:
                        raise ValueError(f"variable {name!r} has no index; pass varnames")
                    key = int(m2.group(1)) - 1
                    max_index = max(max_index, key + 1)
                powers[key] = powers.get(key, 0) + exp
            parsed.append((coef, powers))
        if nvars is None:
            nvars = len(varnames) if varnames is not None else max_index
        terms: dict[tuple[int, ...], Fraction] = {}
        for coef, powers in parsed:
            exps = [0] * nvars
            for key, e in powers.items():
                if not 0 <= key < nvars:
                    raise ValueError(f"variable index {key + 1} out of range for nvars={nvars}")
                exps[key] = e
            e = tuple(exps)
            terms[e] = terms.get(e, Fraction(0)) + coef
        return cls(nvars, terms)


def poly_vars(nvars: int) -> list[MultiPoly]:
    """The list [x_0, ..., x_{nvars-1}] as polynomials."""
    return [MultiPoly.variable(nvars, i) for i in range(nvars)]


class RatFunc:
    """Exact rational function num/den with MultiPoly num and den.

    No GCD reduction is performed; a constant denominator is folded into
    the numerator, and equality/zero tests go through cross-multiplication.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: MultiPoly, den: MultiPoly | None = None):
        if den is None:
            den = MultiPoly.const(num.nvars, 1)
        if den.is_zero:
            raise ZeroDivisionError("zero denominator")
        if den.nvars != num.nvars:
            raise ValueError("num/den variable-count mismatch")
        # fold a constant denominator into the numerator
        if den.total_degree() == 0:
            c = den.constant_term()
            num = num / c
            den = MultiPoly.const(num.nvars, 1)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RatFunc is immutable")

    @property
    def nvars(self) -> int:
        return self.num.nvars

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @classmethod
    def of(cls, x, nvars: int) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, MultiPoly):
            return cls(x)
        return cls(MultiPoly.const(nvars, x))

    def _coerce(self, other) -> "RatFunc | None":
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, (MultiPoly, int, Fraction)):
            return RatFunc.of(other, self.nvars)
        return None

    def __add__(self, other):
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        return RatFunc(self.num * q.den + q.num * self.den, self.den * q.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den)

    def __sub__(self, other):
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        return self + (-q)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        return RatFunc(self.num * q.num, self.den * q.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        if q.is_zero:
            raise ZeroDivisionError("division by zero rational function")
        return RatFunc(self.num * q.den, self.den * q.num)

    def __rtruediv__(self, other):
        q = self._coerce(other)
        return q / self

    def __pow__(self, n: int):
        if n < 0:
            return RatFunc(self.den, self.num) ** (-n)
        return RatFunc(self.num ** n, self.den ** n)

    def __eq__(self, other):
        q = self._coerce(other)
        if q is None:
            return NotImplemented
        return (self.num * q.den - q.num * self.den).is_zero

    def __hash__(self):
        raise TypeError("RatFunc is not hashable (no canonical form)")

    def diff(self, var: int) -> "RatFunc":
        return RatFunc(self.num.diff(var) * self.den - self.num * self.den.diff(var),
                       self.den * self.den)

    def compose(self, values: Sequence["RatFunc | MultiPoly"]) -> "RatFunc":
        """Substitute values (in some other variable set) for the variables."""
        nv = {v.nvars for v in values}
        if len(nv) != 1:
            raise ValueError("composition values disagree on variable count")
        nvars = nv.pop()
        vals = [RatFunc.of(v, nvars) for v in values]
        num = RatFunc.of(self.num.eval(vals) if self.num.terms else 0, nvars)
        den = RatFunc.of(self.den.eval(vals), nvars)
        return num / den

    def eval(self, values: Sequence):
        return self.num.eval(values) / self.den.eval(values)

    def to_text(self, varnames: Sequence[str] | None = None) -> str:
        if self.den.total_degree() == 0:
            return self.num.to_text(varnames)
        return f"({self.num.to_text(varnames)}) / ({self.den.to_text(varnames)})"

    def __repr__(self):
        return f"RatFunc({self.to_text()!r})"
