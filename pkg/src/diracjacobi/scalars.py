"""Exact scalars and multivariate rational functions.

Scalars are arbitrary-precision rationals (stdlib Fraction already has the
exact canonical-form contract we need, so it is used directly under the alias
Scalar). On top of them this module builds multivariate polynomials as
dictionaries mapping exponent tuples to nonzero Fraction coefficients, and
rational functions (PolyFn) as reduced fractions of two such polynomials over
a fixed ordered tuple of coordinate names.

Canonical forms everywhere:

- polynomials never store zero coefficients; the zero polynomial is the empty
  dict; monomials are ordered graded-lexicographically when an order matters;
- a PolyFn is reduced (num and den share no polynomial factor, via a primitive
  polynomial-remainder-sequence gcd) and the denominator is monic in the
  graded-lex leading coefficient.

Because the forms are canonical, equality of values is equality of
representations, which the rest of the package relies on for exact
subspace and report comparisons. No floating point appears anywhere.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import PoleAtPoint

Scalar = Fraction

# A monomial is a tuple of exponents, one per variable; a polynomial maps
# monomials to nonzero Fraction coefficients.
Monomial = tuple
Poly = dict

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# polynomial layer (plain functions on dicts)
# ---------------------------------------------------------------------------

def grlex_key(mono):
    """Sort key for graded lexicographic order: total degree first, then lex."""
    return (sum(mono), mono)


def poly_zero():
    return {}


def poly_const(value, nvars):
    value = Fraction(value)
    if value == 0:
        return {}
    return {(0,) * nvars: value}


def poly_var(index, nvars):
    mono = tuple(1 if i == index else 0 for i in range(nvars))
    return {mono: ONE}


def poly_is_zero(p):
    return not p


def poly_is_const(p):
    return len(p) == 0 or (len(p) == 1 and sum(next(iter(p))) == 0)


def poly_const_value(p):
    """The Fraction value of a constant polynomial."""
    if not p:
        return ZERO
    ((mono, coeff),) = p.items()
    if sum(mono) != 0:
        raise ValueError("polynomial is not constant")
    return coeff


def poly_add(a, b):
    out = dict(a)
    for mono, coeff in b.items():
        s = out.get(mono, ZERO) + coeff
        if s:
            out[mono] = s
        else:
            out.pop(mono, None)
    return out


def poly_neg(a):
    return {mono: -coeff for mono, coeff in a.items()}


def poly_sub(a, b):
    return poly_add(a, poly_neg(b))


def poly_scale(a, c):
    c = Fraction(c)
    if c == 0:
        return {}
    return {mono: coeff * c for mono, coeff in a.items()}


def poly_mul(a, b):
    if not a or not b:
        return {}
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            mono = tuple(x + y for x, y in zip(ma, mb))
            s = out.get(mono, ZERO) + ca * cb
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
    return out


def poly_pow(a, n):
    if n < 0:
        raise ValueError("negative power of a polynomial")
    nvars = _poly_nvars_hint(a)
    out = poly_const(1, nvars)
    base = a
    while n:
        if n & 1:
            out = poly_mul(out, base)
        base = poly_mul(base, base)
        n >>= 1
    return out


def _poly_nvars_hint(p):
    for mono in p:
        return len(mono)
    return 0


def poly_diff(p, index):
    """Formal partial derivative with respect to the variable at index."""
    out = {}
    for mono, coeff in p.items():
        e = mono[index]
        if e == 0:
            continue
        new = list(mono)
        new[index] = e - 1
        mono2 = tuple(new)
        s = out.get(mono2, ZERO) + coeff * e
        if s:
            out[mono2] = s
        else:
            out.pop(mono2, None)
    return out


def poly_eval(p, values):
    """Evaluate at a full tuple of Fraction values, one per variable."""
    total = ZERO
    for mono, coeff in p.items():
        term = coeff
        for value, e in zip(values, mono):
            if e:
                term *= value ** e
        total += term
    return total


def poly_leading(p):
    """(monomial, coefficient) of the graded-lex leading term."""
    mono = max(p, key=grlex_key)
    return mono, p[mono]


def poly_total_degree(p):
    if not p:
        return -1
    return max(sum(mono) for mono in p)


def poly_divexact(f, g):
    """Divide f by a known exact factor g; raises ValueError if not exact."""
    if not g:
        raise ZeroDivisionError("division by the zero polynomial")
    if not f:
        return {}
    gm, gc = poly_leading(g)
    quot = {}
    rem = dict(f)
    while rem:
        fm, fc = poly_leading(rem)
        qm = tuple(a - b for a, b in zip(fm, gm))
        if any(e < 0 for e in qm):
            raise ValueError("polynomial division is not exact")
        qc = fc / gc
        quot[qm] = quot.get(qm, ZERO) + qc
        rem = poly_sub(rem, poly_mul({qm: qc}, g))
    return {m: c for m, c in quot.items() if c}


def _frac_gcd(a, b):
    """gcd of two Fractions: gcd of numerators over lcm of denominators."""
    num = math.gcd(a.numerator, b.numerator)
    den = (a.denominator * b.denominator) // math.gcd(a.denominator, b.denominator)
    return Fraction(num, den)


def poly_content(p):
    """Positive Fraction content (gcd of coefficients, sign normalized)."""
    c = ZERO
    for coeff in p.values():
        c = _frac_gcd(c, coeff)
        if c == 1:
            break
    return c


def _degree_in(p, v):
    return max((mono[v] for mono in p), default=-1)


def _as_univariate(p, v):
    """View p as univariate in variable v: exponent -> coefficient polynomial."""
    out = {}
    for mono, coeff in p.items():
        e = mono[v]
        inner = list(mono)
        inner[v] = 0
        key = tuple(inner)
        bucket = out.setdefault(e, {})
        bucket[key] = bucket.get(key, ZERO) + coeff
    return {e: {m: c for m, c in bucket.items() if c} for e, bucket in out.items() if bucket}


def _from_univariate(d, v):
    out = {}
    for e, coeff_poly in d.items():
        for mono, coeff in coeff_poly.items():
            new = list(mono)
            new[v] = e
            out[tuple(new)] = coeff
    return out


def _univ_degree(d):
    return max(d, default=-1)


def _univ_lc(d):
    return d[max(d)]


def _univ_scale_poly(d, p):
    return {e: poly_mul(c, p) for e, c in d.items() if poly_mul(c, p)}


def _univ_sub(a, b):
    out = dict(a)
    for e, c in b.items():
        s = poly_sub(out.get(e, {}), c)
        if s:
            out[e] = s
        else:
            out.pop(e, None)
    return out


def _univ_shift_mul(d, k, p):
    """Multiply by p * v^k in the univariate view."""
    out = {}
    for e, c in d.items():
        prod = poly_mul(c, p)
        if prod:
            out[e + k] = prod
    return out


def _pseudo_rem(a, b):
    """Pseudo-remainder of univariate-view a by b (both dicts exp -> poly)."""
    lc_b = _univ_lc(b)
    deg_b = _univ_degree(b)
    rem = a
    while rem and _univ_degree(rem) >= deg_b:
        lc_r = _univ_lc(rem)
        shift = _univ_degree(rem) - deg_b
        rem = _univ_sub(_univ_scale_poly(rem, lc_b), _univ_shift_mul(b, shift, lc_r))
    return rem


def poly_gcd(a, b):
    """A gcd of two polynomials via the primitive remainder sequence.

    The result is primitive up to a constant; constant inputs are treated as
    units (gcd 1) since the coefficient field absorbs them.
    """
    if not a:
        return _gcd_normalize(b)
    if not b:
        return _gcd_normalize(a)
    if poly_is_const(a) or poly_is_const(b):
        nvars = _poly_nvars_hint(a) or _poly_nvars_hint(b)
        return poly_const(1, nvars)
    v = max(
        i
        for i in range(_poly_nvars_hint(a))
        if _degree_in(a, i) > 0 or _degree_in(b, i) > 0
    )
    ua, ub = _as_univariate(a, v), _as_univariate(b, v)
    cont_a = _coeff_gcd(list(ua.values()))
    cont_b = _coeff_gcd(list(ub.values()))
    c = poly_gcd(cont_a, cont_b)
    ua = {e: poly_divexact(p, cont_a) for e, p in ua.items()}
    ub = {e: poly_divexact(p, cont_b) for e, p in ub.items()}
    if _univ_degree(ua) < _univ_degree(ub):
        ua, ub = ub, ua
    while ub:
        rem = _pseudo_rem(ua, ub)
        ua = ub
        if rem:
            cont = _coeff_gcd(list(rem.values()))
            rem = {e: poly_divexact(p, cont) for e, p in rem.items()}
        ub = rem
    return _gcd_normalize(poly_mul(c, _from_univariate(ua, v)))


def _gcd_normalize(p):
    """Scale a nonzero polynomial to content 1 and positive leading coefficient."""
    if not p:
        return {}
    content = poly_content(p)
    lead = poly_leading(p)[1]
    scale = 1 / content if lead > 0 else -1 / content
    return poly_scale(p, scale)


def _coeff_gcd(polys):
    g = {}
    for p in polys:
        g = poly_gcd(g, p)
        if poly_is_const(g) and g:
            break
    return g


def poly_render(p, names):
    """Human-readable rendering, monomials in descending graded-lex order."""
    if not p:
        return "0"
    parts = []
    for mono in sorted(p, key=grlex_key, reverse=True):
        coeff = p[mono]
        factors = []
        for name, e in zip(names, mono):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        if not factors:
            body = str(coeff)
        elif coeff == 1:
            body = "*".join(factors)
        elif coeff == -1:
            body = "-" + "*".join(factors)
        else:
            body = str(coeff) + "*" + "*".join(factors)
        parts.append(body)
    text = parts[0]
    for part in parts[1:]:
        text += " - " + part[1:] if part.startswith("-") else " + " + part
    return text


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------

class PolyFn:
    """A multivariate rational function over a fixed tuple of variable names.

    Instances are immutable and canonical: the fraction is reduced and the
    denominator is monic (graded-lex leading coefficient 1), so == and hash
    compare values. Arithmetic accepts ints and Fractions on either side.
    """

    __slots__ = ("variables", "num", "den", "_hash")

    def __init__(self, variables, num, den=None):
        variables = tuple(variables)
        if den is None:
            den = poly_const(1, len(variables))
        if poly_is_zero(den):
            raise ZeroDivisionError("rational function with zero denominator")
        num, den = _reduce(num, den)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("PolyFn is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, value, variables):
        return cls(variables, poly_const(Fraction(value), len(tuple(variables))))

    @classmethod
    def coordinate(cls, name, variables):
        variables = tuple(variables)
        try:
            index = variables.index(name)
        except ValueError:
            raise ValueError(f"unknown coordinate {name!r} in {variables}") from None
        return cls(variables, poly_var(index, len(variables)))

    @classmethod
    def zero(cls, variables):
        return cls.constant(0, variables)

    @classmethod
    def one(cls, variables):
        return cls.constant(1, variables)

    # -- predicates and conversions ----------------------------------------

    def is_zero(self):
        return poly_is_zero(self.num)

    def is_constant(self):
        return poly_is_const(self.num) and poly_is_const(self.den)

    def constant_value(self):
        """The Fraction value of a constant function."""
        return poly_const_value(self.num) / poly_const_value(self.den)

    def is_polynomial(self):
        return poly_is_const(self.den)

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, PolyFn):
            if other.variables != self.variables:
                raise ValueError(
                    f"variable mismatch: {self.variables} vs {other.variables}"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return PolyFn.constant(other, self.variables)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.den == other.den:
            return PolyFn(self.variables, poly_add(self.num, other.num), self.den)
        num = poly_add(poly_mul(self.num, other.den), poly_mul(other.num, self.den))
        return PolyFn(self.variables, num, poly_mul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return PolyFn(self.variables, poly_neg(self.num), self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return PolyFn(
            self.variables,
            poly_mul(self.num, other.num),
            poly_mul(self.den, other.den),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by the zero function")
        return PolyFn(
            self.variables,
            poly_mul(self.num, other.den),
            poly_mul(self.den, other.num),
        )

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return PolyFn.one(self.variables) / (self ** (-n))
        return PolyFn(self.variables, poly_pow(self.num, n), poly_pow(self.den, n))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PolyFn.constant(other, self.variables)
        if not isinstance(other, PolyFn):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        if self._hash is None:
            frozen = (
                self.variables,
                tuple(sorted(self.num.items())),
                tuple(sorted(self.den.items())),
            )
            object.__setattr__(self, "_hash", hash(frozen))
        return self._hash

    def __repr__(self):
        text = poly_render(self.num, self.variables)
        if not self.is_polynomial():
            text = f"({text})/({poly_render(self.den, self.variables)})"
        return f"PolyFn({text})"


def _reduce(num, den):
    """Cancel common factors and make the denominator grlex-monic."""
    if poly_is_zero(num):
        nvars = _poly_nvars_hint(den)
        return {}, poly_const(1, nvars)
    if not poly_is_const(den):
        g = poly_gcd(num, den)
        if not poly_is_const(g):
            num = poly_divexact(num, g)
            den = poly_divexact(den, g)
    lc = poly_leading(den)[1]
    if lc != 1:
        num = poly_scale(num, 1 / lc)
        den = poly_scale(den, 1 / lc)
    return num, den


# ---------------------------------------------------------------------------
# the two spec-level operations, plus substitution used by pullbacks
# ---------------------------------------------------------------------------

def differentiate(f, coordinate):
    """Formal partial derivative of a rational function (quotient rule)."""
    try:
        index = f.variables.index(coordinate)
    except ValueError:
        raise ValueError(
            f"unknown coordinate {coordinate!r} in {f.variables}"
        ) from None
    dnum = poly_diff(f.num, index)
    if f.is_polynomial():
        return PolyFn(f.variables, poly_scale(dnum, poly_const_value(f.den) ** -1))
    dden = poly_diff(f.den, index)
    top = poly_sub(poly_mul(dnum, f.den), poly_mul(f.num, dden))
    return PolyFn(f.variables, top, poly_mul(f.den, f.den))


def evaluate(f, point):
    """Evaluate at a point given as a mapping from coordinate name to value.

    Raises PoleAtPoint when the (reduced) denominator vanishes there.
    """
    values = []
    for name in f.variables:
        if name not in point:
            raise ValueError(f"point does not assign coordinate {name!r}")
        values.append(Fraction(point[name]))
    den_value = poly_eval(f.den, values)
    if den_value == 0:
        raise PoleAtPoint(f"denominator vanishes at {dict(point)!r}")
    return poly_eval(f.num, values) / den_value


def substitute(f, images):
    """Compose f with a polynomial/rational map, coordinate by coordinate.

    images maps every variable name of f to a PolyFn over one common variable
    tuple (the source chart of the map). Used to pull functions back along
    base maps. Raises PoleAtPoint if the substituted denominator is
    identically zero.
    """
    new_vars = None
    for name in f.variables:
        if name not in images:
            raise ValueError(f"substitution does not cover coordinate {name!r}")
        img = images[name]
        if new_vars is None:
            new_vars = img.variables
        elif img.variables != new_vars:
            raise ValueError("substitution images disagree on variables")
    if new_vars is None:
        new_vars = ()
    args = [images[name] for name in f.variables]
    num = _poly_substitute(f.num, args, new_vars)
    den = _poly_substitute(f.den, args, new_vars)
    if den.is_zero():
        raise PoleAtPoint("denominator vanishes identically after substitution")
    return num / den


def _poly_substitute(p, args, new_vars):
    total = PolyFn.zero(new_vars)
    powers = [{} for _ in args]

    def arg_power(i, e):
        cache = powers[i]
        if e not in cache:
            cache[e] = args[i] ** e
        return cache[e]

    for mono, coeff in p.items():
        term = PolyFn.constant(coeff, new_vars)
        for i, e in enumerate(mono):
            if e:
                term = term * arg_power(i, e)
        total = total + term
    return total
