"""Reaction-network model, text format, stoichiometry and the ODE right-hand side.

File format::

    # comment
    species: S, I, R          (optional; fixes the species order)
    params: be, gi            (optional; enables undeclared-symbol checks)
    reactions:
    S + I -> 2 I @ be*S*I
    I -> R @ gi*I
    0 -> S @ 1/2

Stoichiometric terms may be written ``2 I``, ``2*I`` or ``2"I"``.  A
``rates:`` block may supply the rates instead of ``@``, one per line in
reaction order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .polynomial import Polynomial

Complex = Tuple[Tuple[str, int], ...]


class ParseError(ValueError):
    """Raised for malformed model text; carries 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Reaction:
    reactants: Complex
    products: Complex
    rate: Polynomial

    def reactant_set(self) -> frozenset:
        return frozenset(n for n, _ in self.reactants)

    def product_set(self) -> frozenset:
        return frozenset(n for n, _ in self.products)

    def __str__(self) -> str:
        return f"{format_complex(self.reactants)} -> {format_complex(self.products)}"


@dataclass(frozen=True)
class ReactionNetwork:
    species: Tuple[str, ...]
    parameters: Tuple[str, ...]
    reactions: Tuple[Reaction, ...]

    def __post_init__(self):
        if len(set(self.species)) != len(self.species):
            raise ValueError("duplicate species names")
        if len(set(self.parameters)) != len(self.parameters):
            raise ValueError("duplicate parameter names")
        clash = set(self.species) & set(self.parameters)
        if clash:
            raise ValueError(f"names used as both species and parameter: {sorted(clash)}")
        known = set(self.species) | set(self.parameters)
        sp = set(self.species)
        for r in self.reactions:
            for name, _ in r.reactants + r.products:
                if name not in sp:
                    raise ValueError(f"undeclared species {name!r}")
            for name in r.rate.variables():
                if name not in known:
                    raise ValueError(f"undeclared symbol {name!r}")

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    def index(self, name: str) -> int:
        return self.species.index(name)

    def species_set(self, names) -> Tuple[int, ...]:
        """Normalize species names or indices to a sorted index tuple."""
        out = set()
        for n in names:
            if isinstance(n, (int, np.integer)):
                if not 0 <= n < self.n_species:
                    raise IndexError(f"species index {n} out of range")
                out.add(int(n))
            else:
                out.add(self.index(n))
        return tuple(sorted(out))

    def names(self, indices) -> List[str]:
        return [self.species[i] for i in indices]

    def reaction_labels(self) -> List[str]:
        return [f"R{k}: {r}" for k, r in enumerate(self.reactions)]


@dataclass(frozen=True)
class StoichStructure:
    """Integer matrices with row labels ``species`` and column labels ``reactions``."""

    species: Tuple[str, ...]
    reactions: Tuple[str, ...]
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


# ---------------------------------------------------------------------------
# rate expressions

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|\"(?P<qname>[A-Za-z_][A-Za-z0-9_]*)\""
    r"|(?P<op>\*\*|[-+*/^()]))"
)


class _ExprParser:
    def __init__(self, text: str, line: int, col0: int):
        self.text = text
        self.line = line
        self.col0 = col0
        self.toks: List[Tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                self.fail("unexpected character", pos + len(text[pos:]) - len(text[pos:].lstrip()))
            kind = m.lastgroup
            val = m.group(kind)
            start = m.start(kind)
            self.toks.append(("name" if kind == "qname" else kind, val, start))
            pos = m.end()
        self.i = 0

    def fail(self, msg, pos=None):
        if pos is None:
            pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        raise ParseError(msg, self.line, self.col0 + pos + 1)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def parse(self) -> Polynomial:
        if not self.toks:
            self.fail("empty rate expression")
        p = self.expr()
        if self.i != len(self.toks):
            self.fail("unexpected token")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.unary()
        while self.peek()[1] in ("*", "/"):
            op, pos = self.take()[1], self.peek()[2]
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if q.variables() or q.is_zero():
                    self.fail("division is only allowed by a nonzero constant", pos)
                p = p * Polynomial.const(1 / Fraction(q.constant_term()))
        return p

    def unary(self) -> Polynomial:
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                self.fail("exponent must be a nonnegative integer", pos)
            base = base ** int(val)
        return base

    def atom(self) -> Polynomial:
        kind, val, pos = self.take()
        if kind == "num":
            return Polynomial.const(Fraction(val))
        if kind == "name":
            return Polynomial.var(val)
        if val == "(":
            p = self.expr()
            if self.take()[1] != ")":
                self.fail("missing ')'")
            return p
        self.i -= 1
        self.fail("expected a number, name or '('")


def parse_rate(text: str, line: int = 0, col0: int = 0) -> Polynomial:
    """Parse a polynomial rate expression."""
    return _ExprParser(text, line, col0).parse()


# ---------------------------------------------------------------------------
# complexes

_TERM = re.compile(
    r"^\s*(?P<coef>[-+]?[0-9./]+(?:[eE][-+]?\d+)?)?\s*\*?\s*"
    r"(?P<q>\"?)(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?P=q)\s*$"
)


def _parse_complex(text: str, line: int, col0: int) -> Complex:
    if text.strip() == "":
        raise ParseError("empty complex (use 0 for the empty complex)", line, col0 + 1)
    if text.strip() == "0":
        return ()
    counts: Dict[str, int] = {}
    order: List[str] = []
    offset = 0
    for piece in text.split("+"):
        col = col0 + offset + (len(piece) - len(piece.lstrip())) + 1
        offset += len(piece) + 1
        m = _TERM.match(piece)
        if not m:
            raise ParseError(f"malformed stoichiometric term {piece.strip()!r}", line, col)
        coef = m.group("coef")
        if coef is None:
            k = 1
        else:
            try:
                value = Fraction(coef)
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"bad coefficient {coef!r}", line, col) from None
            if value < 0 or value.denominator != 1:
                raise ParseError(
                    f"stoichiometric coefficient must be a nonnegative integer, got {coef!r}", line, col
                )
            k = int(value)
        name = m.group("name")
        if k == 0:
            continue
        if name not in counts:
            order.append(name)
            counts[name] = 0
        counts[name] += k
    return tuple((n, counts[n]) for n in order)


def format_complex(c: Complex) -> str:
    if not c:
        return "0"
    return " + ".join(n if k == 1 else f"{k} {n}" for n, k in c)


# ---------------------------------------------------------------------------
# file format

_HEADER = re.compile(r"^\s*(species|params|parameters|reactions|rates)\s*:(.*)$")


def _split_names(text: str, line: int, col0: int) -> List[Tuple[str, int]]:
    out = []
    for m in re.finditer(r"[^\s,]+", text):
        tok = m.group(0).strip('"')
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            raise ParseError(f"invalid name {tok!r}", line, col0 + m.start() + 1)
        out.append((tok, col0 + m.start() + 1))
    return out


def parse_network(text: str) -> ReactionNetwork:
    """Parse model text into a :class:`ReactionNetwork`.

    Raises:
        ParseError: on syntax errors, undeclared names, bad coefficients or a
            rate list whose length does not match the reactions.
    """
    declared_species: Optional[List[str]] = None
    declared_params: Optional[List[str]] = None
    rxn_lines: List[Tuple[int, str]] = []
    rate_lines: List[Tuple[int, str]] = []
    block = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _HEADER.match(line)
        if m:
            key, rest = m.group(1), m.group(2)
            col0 = m.start(2)
            if key == "species":
                if declared_species is not None:
                    raise ParseError("duplicate species header", lineno, 1)
                declared_species = [n for n, _ in _split_names(rest, lineno, col0)]
                block = None
            elif key in ("params", "parameters"):
                if declared_params is not None:
                    raise ParseError("duplicate params header", lineno, 1)
                declared_params = [n for n, _ in _split_names(rest, lineno, col0)]
                block = None
            else:
                block = key
                if rest.strip():
                    (rxn_lines if key == "reactions" else rate_lines).append((lineno, " " * col0 + rest))
            continue
        if block == "reactions":
            rxn_lines.append((lineno, line))
        elif block == "rates":
            rate_lines.append((lineno, line))
        else:
            raise ParseError("text outside a reactions: or rates: block", lineno,
                             len(line) - len(line.lstrip()) + 1)

    parsed = []
    for lineno, line in rxn_lines:
        if line.count("->") != 1:
            raise ParseError("expected exactly one '->'", lineno, len(line) - len(line.lstrip()) + 1)
        arrow = line.index("->")
        lhs = line[:arrow]
        rest = line[arrow + 2:]
        rate = None
        if "@" in rest:
            at = rest.index("@")
            rate_text = rest[at + 1:]
            rhs = rest[:at]
            rate = (rate_text, arrow + 2 + at + 1)
        else:
            rhs = rest
        reac = _parse_complex(lhs, lineno, 0)
        prod = _parse_complex(rhs, lineno, arrow + 2)
        parsed.append((lineno, reac, prod, rate))

    if rate_lines:
        if any(p[3] is not None for p in parsed):
            raise ParseError("rates given both inline and in a rates: block", rate_lines[0][0], 1)
        if len(rate_lines) != len(parsed):
            raise ParseError(
                f"rate list length mismatch: {len(parsed)} reactions but {len(rate_lines)} rates",
                rate_lines[0][0], 1,
            )
        parsed = [(ln, a, b, (rl[1], 0)) for (ln, a, b, _), rl in zip(parsed, rate_lines)]
        rate_line_numbers = [ln for ln, _ in rate_lines]
    else:
        rate_line_numbers = [p[0] for p in parsed]
        for ln, _, _, rate in parsed:
            if rate is None:
                raise ParseError("missing '@ rate'", ln, 1)

    # species
    if declared_species is not None:
        species = list(declared_species)
        if len(set(species)) != len(species):
            raise ParseError("duplicate species in header", 1, 1)
    else:
        species = []
    sp = set(species)
    for ln, reac, prod, _ in parsed:
        for name, _ in reac + prod:
            if name not in sp:
                if declared_species is not None:
                    raise ParseError(f"undeclared species {name!r}", ln, 1)
                species.append(name)
                sp.add(name)

    params = list(declared_params) if declared_params is not None else []
    if len(set(params)) != len(params):
        raise ParseError("duplicate parameter in header", 1, 1)
    clash = sp & set(params)
    if clash:
        raise ParseError(f"names declared as both species and parameter: {sorted(clash)}", 1, 1)
    pset = set(params)
    reactions = []
    for (ln, reac, prod, (rate_text, col0)), rate_ln in zip(parsed, rate_line_numbers):
        ep = _ExprParser(rate_text, rate_ln, col0)
        poly = ep.parse()
        for kind, name, pos in ep.toks:
            if kind != "name" or name in sp or name in pset:
                continue
            if declared_params is not None:
                raise ParseError(f"undeclared symbol {name!r}", rate_ln, col0 + pos + 1)
            params.append(name)
            pset.add(name)
        reactions.append(Reaction(reac, prod, poly))
    return ReactionNetwork(tuple(species), tuple(params), tuple(reactions))


def serialize_network(net: ReactionNetwork) -> str:
    """Inverse of :func:`parse_network` up to formatting."""
    lines = [f"species: {', '.join(net.species)}"]
    if net.parameters:
        lines.append(f"params: {', '.join(net.parameters)}")
    else:
        lines.append("params:")
    lines.append("reactions:")
    for r in net.reactions:
        lines.append(f"{r} @ {r.rate}")
    return "\n".join(lines) + "\n"


def load_network(path) -> ReactionNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


# ---------------------------------------------------------------------------
# derived structure

def stoich(net: ReactionNetwork) -> StoichStructure:
    n, m = net.n_species, net.n_reactions
    alpha = np.zeros((n, m), dtype=np.int64)
    beta = np.zeros((n, m), dtype=np.int64)
    idx = {s: i for i, s in enumerate(net.species)}
    for r, rx in enumerate(net.reactions):
        for name, k in rx.reactants:
            alpha[idx[name], r] += k
        for name, k in rx.products:
            beta[idx[name], r] += k
    return StoichStructure(net.species, tuple(net.reaction_labels()), alpha, beta, beta - alpha)


def build_rhs(net: ReactionNetwork) -> List[Polynomial]:
    """Right-hand side ``Gamma @ rates`` as one polynomial per species."""
    gamma = stoich(net).gamma
    rhs = []
    for i in range(net.n_species):
        p = Polynomial()
        for r, rx in enumerate(net.reactions):
            g = int(gamma[i, r])
            if g:
                p = p + rx.rate * g
        rhs.append(p)
    return rhs


@dataclass(frozen=True)
class MassActionEntry:
    index: int
    reaction: str
    mass_action: bool
    reason: str = ""


def validate_mass_action(net: ReactionNetwork) -> List[MassActionEntry]:
    """Flag each reaction whose rate is ``k * prod x_i^alpha_i`` for one positive parameter monomial k."""
    sp = set(net.species)
    out = []
    for k, rx in enumerate(net.reactions):
        mons = rx.rate.monomials()
        reason = ""
        if len(mons) != 1:
            reason = f"rate has {len(mons)} terms"
        else:
            mono = mons[0]
            if mono.coefficient <= 0:
                reason = "coefficient is not positive"
            else:
                spow = {n: e for n, e in mono.powers if n in sp}
                if spow != dict(rx.reactants):
                    reason = "species exponents differ from reactant stoichiometry"
        out.append(MassActionEntry(k, str(rx), not reason, reason))
    return out


@dataclass(frozen=True)
class RateFlag:
    index: int
    reaction: str
    value: float
    point: Dict[str, float] = field(default_factory=dict)


def validate_rates(net: ReactionNetwork, assignment: Mapping[str, float], n_points: int = 256,
                   seed: Optional[int] = None) -> List[RateFlag]:
    """Sample ``[0, 10]^n`` at Halton points (origin included) and flag negative rates.

    With ``seed`` the Halton sequence is scrambled; the origin stays the first point.
    """
    from scipy.stats import qmc

    missing = [p for p in net.parameters if p not in assignment]
    if missing:
        raise KeyError(f"missing parameter values: {missing}")
    n = net.n_species
    if n == 0:
        pts = np.zeros((1, 0))
    else:
        pts = 10.0 * qmc.Halton(d=n, scramble=seed is not None, seed=seed).random(n_points)
        pts[0] = 0.0
    from .polynomial import CompiledPolys

    rates = CompiledPolys([r.rate for r in net.reactions], net.species, assignment)(pts)
    flags = []
    for k in range(net.n_reactions):
        bad = np.nonzero(rates[:, k] < 0)[0]
        if bad.size:
            j = bad[0]
            flags.append(RateFlag(k, str(net.reactions[k]), float(rates[j, k]),
                                  dict(zip(net.species, map(float, pts[j])))))
    return flags


def network_to_dict(net: ReactionNetwork) -> dict:
    st = stoich(net)
    return {
        "species": list(net.species),
        "parameters": list(net.parameters),
        "reactions": [
            {"reactants": dict(r.reactants), "products": dict(r.products), "rate": str(r.rate), "label": str(r)}
            for r in net.reactions
        ],
        "rhs": {s: str(p) for s, p in zip(net.species, build_rhs(net))},
        "alpha": st.alpha.tolist(),
        "beta": st.beta.tolist(),
        "gamma": st.gamma.tolist(),
        "row_labels": list(st.species),
        "column_labels": list(st.reactions),
    }
