"""Sparse multivariate polynomials with exact rational coefficients.

A polynomial is stored as a mapping from an exponent signature (a sorted
tuple of ``(variable, exponent)`` pairs) to a nonzero coefficient.  Species
and parameters are both ordinary variables here; the network decides which
is which.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

Signature = Tuple[Tuple[str, int], ...]


def _sig_mul(a: Signature, b: Signature) -> Signature:
    if not a:
        return b
    if not b:
        return a
    out: Dict[str, int] = dict(a)
    for name, e in b:
        out[name] = out.get(name, 0) + e
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class Monomial:
    """One term ``coefficient * prod(var**exp)``."""

    coefficient: Fraction
    powers: Signature

    def split(self, species) -> Tuple[Dict[str, int], Dict[str, int]]:
        """Return ``(param_powers, species_powers)`` given the species names."""
        sp = set(species)
        params = {n: e for n, e in self.powers if n not in sp}
        spec = {n: e for n, e in self.powers if n in sp}
        return params, spec


class Polynomial:
    """Immutable canonical polynomial.

    Coefficients are ``Fraction`` for exact work; float coefficients are
    allowed after numeric substitution (see :meth:`subs`).
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Signature, Number] | None = None):
        clean: Dict[Signature, Number] = {}
        for sig, c in (terms or {}).items():
            if c != 0:
                clean[sig] = c
        self._terms = dict(sorted(clean.items()))
        self._hash = None

    # construction helpers
    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls({(): Fraction(c) if isinstance(c, (int, str)) else c})

    @classmethod
    def var(cls, name: str, power: int = 1) -> "Polynomial":
        return cls({((name, power),): Fraction(1)})

    @property
    def terms(self) -> Dict[Signature, Number]:
        return dict(self._terms)

    def monomials(self) -> list:
        return [Monomial(c, s) for s, c in self._terms.items()]

    def is_zero(self) -> bool:
        return not self._terms

    def variables(self) -> set:
        return {n for sig in self._terms for n, _ in sig}

    # arithmetic
    def __add__(self, other) -> "Polynomial":
        other = _coerce(other)
        out = dict(self._terms)
        for sig, c in other._terms.items():
            out[sig] = out.get(sig, 0) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({s: -c for s, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return _coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        other = _coerce(other)
        out: Dict[Signature, Number] = {}
        for s1, c1 in self._terms.items():
            for s2, c2 in other._terms.items():
                s = _sig_mul(s1, s2)
                out[s] = out.get(s, 0) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = Polynomial.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def diff(self, name: str) -> "Polynomial":
        """Partial derivative with respect to ``name``."""
        out: Dict[Signature, Number] = {}
        for sig, c in self._terms.items():
            powers = dict(sig)
            e = powers.get(name, 0)
            if e == 0:
                continue
            if e == 1:
                del powers[name]
            else:
                powers[name] = e - 1
            s = tuple(sorted(powers.items()))
            out[s] = out.get(s, 0) + c * e
        return Polynomial(out)

    def subs(self, values: Mapping[str, Number]) -> "Polynomial":
        """Substitute numbers for some variables, keeping the rest symbolic."""
        out: Dict[Signature, Number] = {}
        for sig, c in self._terms.items():
            keep = []
            for name, e in sig:
                if name in values:
                    c = c * values[name] ** e
                else:
                    keep.append((name, e))
            s = tuple(keep)
            out[s] = out.get(s, 0) + c
        return Polynomial(out)

    def evaluate(self, values: Mapping[str, Number]):
        """Evaluate at a full assignment; exact if all inputs are rational."""
        total = 0
        for sig, c in self._terms.items():
            term = c
            for name, e in sig:
                try:
                    term = term * values[name] ** e
                except KeyError:
                    raise KeyError(f"no value for variable {name!r}") from None
            total = total + term
        return total

    def constant_term(self):
        return self._terms.get((), 0)

    def __repr__(self) -> str:
        return f"Polynomial({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for sig, c in self._terms.items():
            neg = c < 0
            mag = -c if neg else c
            body = "*".join(n if e == 1 else f"{n}^{e}" for n, e in sig)
            if not body:
                txt = _fmt_number(mag)
            elif mag == 1:
                txt = body
            else:
                txt = f"{_fmt_number(mag)}*{body}"
            parts.append(("-" if neg else "+", txt))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, txt in parts[1:]:
            out += f" {sign} {txt}"
        return out


def _fmt_number(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    if isinstance(c, int):
        return str(c)
    return repr(float(c))


def _coerce(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, (int, Fraction)):
        return Polynomial.const(Fraction(x))
    if isinstance(x, float):
        return Polynomial({(): x})
    raise TypeError(f"cannot combine Polynomial with {type(x).__name__}")


class CompiledPolys:
    """Vectorized float evaluation of a list of polynomials in fixed variables.

    Parameters are substituted up front; the remaining variables must all be
    in ``variables``.  ``__call__`` maps an array ``(..., n)`` to ``(..., k)``.
    """

    def __init__(self, polys: Iterable[Polynomial], variables, params: Mapping[str, float] | None = None):
        polys = list(polys)
        self.variables = list(variables)
        index = {v: i for i, v in enumerate(self.variables)}
        params = {k: float(v) for k, v in (params or {}).items()}
        sigs: Dict[Signature, int] = {}
        rows = []
        for p in polys:
            q = p.subs(params) if params else p
            row = {}
            for sig, c in q.terms.items():
                for name, _ in sig:
                    if name not in index:
                        raise KeyError(f"variable {name!r} has no value")
                j = sigs.setdefault(sig, len(sigs))
                row[j] = row.get(j, 0.0) + float(c)
            rows.append(row)
        n = len(self.variables)
        self.exponents = np.zeros((len(sigs), n), dtype=float)
        for sig, j in sigs.items():
            for name, e in sig:
                self.exponents[j, index[name]] = e
        self.coef = np.zeros((len(polys), len(sigs)))
        for i, row in enumerate(rows):
            for j, c in row.items():
                self.coef[i, j] = c
        self.n_out = len(polys)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.exponents.shape[0] == 0:
            return np.zeros(x.shape[:-1] + (self.n_out,))
        mono = np.prod(x[..., None, :] ** self.exponents, axis=-1)
        return mono @ self.coef.T
