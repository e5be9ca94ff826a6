"""Jacobian blocks, the algorithmic F - V splitting and next-generation matrices.

Symbolic objects (``PolyMatrix``) are exact; everything evaluated at a point
is a float matrix.  Tolerances: nonnegativity gates use ``NONNEG_TOL``
absolute, eigenvalue comparisons ``EIG_RTOL`` relative.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .igms import amsd_check
from .netio import ReactionNetwork, stoich
from .numeric import check_params, spectral_abscissa, spectral_radius, symbolic_jacobian
from .polynomial import Polynomial
from .siphons import total_siphon

NONNEG_TOL = 1e-12
EIG_RTOL = 1e-9
COND_LIMIT = 1e12


class SplittingError(ValueError):
    """The splitting is singular or not regular at the requested point."""


@dataclass(frozen=True)
class VariableSplit:
    x_vars: Tuple[str, ...]
    y_vars: Tuple[str, ...]

    def to_dict(self) -> dict:
        return {"x_vars": list(self.x_vars), "y_vars": list(self.y_vars)}


def default_split(net: ReactionNetwork) -> VariableSplit:
    """x = total siphon (block order when the partition is acyclic), y = the rest."""
    ts = total_siphon(net)
    verdict = amsd_check(net)
    if verdict.species_order is not None and set(verdict.species_order) == set(ts):
        order = verdict.species_order
    else:
        order = ts
    x = tuple(net.species[i] for i in order)
    y = tuple(s for s in net.species if s not in x)
    return VariableSplit(x, y)


def default_blocks(net: ReactionNetwork, split: VariableSplit) -> List[Tuple[int, ...]]:
    """Blocks of x-indices from the siphon partition, else a single block."""
    verdict = amsd_check(net)
    pos = {s: k for k, s in enumerate(split.x_vars)}
    blocks = verdict.blocks()
    if blocks and all(net.species[i] in pos for W in blocks for i in W):
        out = [tuple(sorted(pos[net.species[i]] for i in W)) for W in blocks]
        if sorted(k for b in out for k in b) == list(range(len(split.x_vars))):
            return out
    return [tuple(range(len(split.x_vars)))] if split.x_vars else []


@dataclass(frozen=True)
class PolyMatrix:
    rows: Tuple[str, ...]
    cols: Tuple[str, ...]
    entries: Tuple[Tuple[Polynomial, ...], ...]

    @property
    def shape(self):
        return (len(self.rows), len(self.cols))

    def evaluate(self, point: Mapping[str, float]) -> np.ndarray:
        out = np.zeros(self.shape)
        for i, row in enumerate(self.entries):
            for j, p in enumerate(row):
                if not p.is_zero():
                    out[i, j] = float(p.evaluate(point))
        return out

    def evaluate_exact(self, point: Mapping) -> list:
        return [[p.evaluate(point) for p in row] for row in self.entries]

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix(self.rows, self.cols, tuple(
            tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)))

    def to_strings(self) -> List[List[str]]:
        return [[str(p) for p in row] for row in self.entries]


@dataclass(frozen=True)
class JacobianBlocks:
    Jx: PolyMatrix
    Jy: PolyMatrix
    Jxy: PolyMatrix
    Jyx: PolyMatrix


def _block(net, rows, cols) -> PolyMatrix:
    J = symbolic_jacobian(net)
    idx = {s: i for i, s in enumerate(net.species)}
    return PolyMatrix(tuple(rows), tuple(cols),
                      tuple(tuple(J[idx[r]][idx[c]] for c in cols) for r in rows))


def jacobian_blocks(net: ReactionNetwork, split: VariableSplit) -> JacobianBlocks:
    x, y = split.x_vars, split.y_vars
    return JacobianBlocks(_block(net, x, x), _block(net, y, y), _block(net, x, y), _block(net, y, x))


@dataclass(frozen=True)
class Splitting:
    F: PolyMatrix
    V: PolyMatrix


def algorithmic_FV(net: ReactionNetwork, split: VariableSplit) -> Splitting:
    """New-infection terms F and transitions V = F - Jx.

    Row i of F collects the positive terms of ``gamma[x_i, r] * rate_r`` over
    reactions r that net-produce x_i and either consume some y species or
    consume no x species at all; these are then differentiated in x.
    """
    if not split.x_vars:
        raise ValueError("no infected variables")
    G = stoich(net).gamma
    xs, ys = set(split.x_vars), set(split.y_vars)
    rows = []
    for xi in split.x_vars:
        i = net.index(xi)
        acc = Polynomial()
        for r, rx in enumerate(net.reactions):
            g = int(G[i, r])
            if g <= 0:
                continue
            reac = rx.reactant_set()
            if reac & ys or not reac & xs:
                acc = acc + rx.rate * g
        positive = Polynomial({s: c for s, c in acc.terms.items() if c > 0})
        rows.append(tuple(positive.diff(xj) for xj in split.x_vars))
    F = PolyMatrix(split.x_vars, split.x_vars, tuple(rows))
    Jx = jacobian_blocks(net, split).Jx
    return Splitting(F, F - Jx)


@dataclass(frozen=True)
class RegularityCheck:
    regular: bool
    violations: Tuple[str, ...]
    F: np.ndarray
    V: np.ndarray
    V_inv: np.ndarray


def regular_splitting_check(splitting: Splitting, point: Mapping[str, float]) -> RegularityCheck:
    """F >= 0 and V^{-1} >= 0 entrywise at ``point``.

    Raises:
        SplittingError: if V is singular or badly conditioned.
    """
    F = splitting.F.evaluate(point)
    V = splitting.V.evaluate(point)
    if V.size and (not np.all(np.isfinite(V)) or np.linalg.cond(V) > COND_LIMIT):
        raise SplittingError("V is singular at this point")
    Vinv = np.linalg.inv(V) if V.size else V
    labels = splitting.F.rows
    bad = []
    for i, j in zip(*np.nonzero(F < -NONNEG_TOL)):
        bad.append(f"F[{labels[i]},{labels[j]}] = {float(F[i, j])!r} < 0")
    for i, j in zip(*np.nonzero(Vinv < -NONNEG_TOL)):
        bad.append(f"inv(V)[{labels[i]},{labels[j]}] = {float(Vinv[i, j])!r} < 0")
    return RegularityCheck(not bad, tuple(bad), F, V, Vinv)


@dataclass(frozen=True)
class NgmResult:
    point: Dict[str, float]
    x_vars: Tuple[str, ...]
    F: np.ndarray
    V: np.ndarray
    K: np.ndarray
    blocks: Tuple[Tuple[int, ...], ...]
    rho_per_block: Tuple[float, ...]
    R0: float
    is_block_lower_triangular: bool
    splitting_regular: bool
    similarity_ok: bool
    multiple_dominant: Tuple[bool, ...]
    K_d: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        d = {
            "point": dict(self.point),
            "x_vars": list(self.x_vars),
            "F": self.F.tolist(),
            "V": self.V.tolist(),
            "K": self.K.tolist(),
            "blocks": [[self.x_vars[k] for k in b] for b in self.blocks],
            "rho_per_block": list(self.rho_per_block),
            "R0": self.R0,
            "is_block_lower_triangular": self.is_block_lower_triangular,
            "splitting_regular": self.splitting_regular,
            "similarity_ok": self.similarity_ok,
            "multiple_dominant": list(self.multiple_dominant),
        }
        if self.K_d is not None:
            d["K_d"] = self.K_d.tolist()
        return d


def block_lower_triangular(K: np.ndarray, blocks: Sequence[Sequence[int]], tol: float = NONNEG_TOL) -> bool:
    owner = {}
    for b, members in enumerate(blocks):
        for k in members:
            owner[k] = b
    n = K.shape[0]
    for i in range(n):
        for j in range(n):
            if i in owner and j in owner and owner[i] < owner[j] and abs(K[i, j]) >= tol:
                return False
    return True


def _dominant_count(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    mods = np.abs(np.linalg.eigvals(M))
    rho = mods.max()
    if rho == 0:
        return 0
    return int(np.sum(mods >= rho * (1 - EIG_RTOL)))


def ngm_at(net: ReactionNetwork, split: VariableSplit, point: Mapping[str, float],
           blocks: Optional[Sequence[Sequence[int]]] = None, kd: bool = False,
           splitting: Optional[Splitting] = None) -> NgmResult:
    """K = F V^{-1} at ``point`` with per-block spectral radii.

    Raises:
        SplittingError: if V is singular or the splitting is not regular.
    """
    if splitting is None:
        splitting = algorithmic_FV(net, split)
    chk = regular_splitting_check(splitting, point)
    if not chk.regular:
        raise SplittingError("splitting is not regular: " + "; ".join(chk.violations))
    F, V, Vinv = chk.F, chk.V, chk.V_inv
    K = F @ Vinv
    if blocks is None:
        blocks = default_blocks(net, split)
    blocks = tuple(tuple(b) for b in blocks)
    rhos = tuple(spectral_radius(K[np.ix_(b, b)]) for b in blocks)
    R0 = spectral_radius(K)
    Kd = Vinv @ F
    r_d = spectral_radius(Kd)
    similar = abs(R0 - r_d) <= EIG_RTOL * max(1.0, R0)
    return NgmResult(
        dict(point), tuple(split.x_vars), F, V, K, blocks, rhos, R0,
        block_lower_triangular(K, blocks), True, similar,
        tuple(_dominant_count(K[np.ix_(b, b)]) > 1 for b in blocks),
        Kd if kd else None,
    )


def reproduction_eval(net: ReactionNetwork, split: VariableSplit, block: Sequence[int],
                      y_values: Mapping[str, float], params: Mapping[str, float],
                      splitting: Optional[Splitting] = None) -> float:
    """Spectral radius of the diagonal block of K at x = 0 and the given y."""
    point = dict(check_params(net, params))
    point.update({x: 0.0 for x in split.x_vars})
    for y in split.y_vars:
        point[y] = float(y_values[y])
    if splitting is None:
        splitting = algorithmic_FV(net, split)
    chk = regular_splitting_check(splitting, point)
    if not chk.regular:
        raise SplittingError("splitting is not regular: " + "; ".join(chk.violations))
    K = chk.F @ chk.V_inv
    b = list(block)
    return spectral_radius(K[np.ix_(b, b)])


def metzler_check(M: np.ndarray, tol: float = NONNEG_TOL) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("Metzler check needs a square matrix")
    off = M - np.diag(np.diag(M))
    return bool(np.all(off >= -tol))


def hidden_inflows(net: ReactionNetwork) -> List[int]:
    """Reactions with nonempty reactants whose net change is nonnegative and nonzero."""
    G = stoich(net).gamma
    out = []
    for r, rx in enumerate(net.reactions):
        col = G[:, r]
        if rx.reactants and np.all(col >= 0) and np.any(col != 0):
            out.append(r)
    return out


@dataclass(frozen=True)
class ChecklistItem:
    name: str
    passed: bool
    detail: str = ""


def me_model_check(net: ReactionNetwork, params: Mapping[str, float]) -> List[ChecklistItem]:
    """Six-item screening of the epidemic-model structure (report only)."""
    from .boundary import BoundaryError, find_dfe

    items = []
    ts = total_siphon(net)
    items.append(ChecklistItem("total_siphon_nonempty", bool(ts), ", ".join(net.names(ts))))
    dfe = None
    if ts:
        try:
            dfe = find_dfe(net, params)
            items.append(ChecklistItem("dfe_exists", True, ""))
        except BoundaryError as exc:
            items.append(ChecklistItem("dfe_exists", False, str(exc)))
    else:
        items.append(ChecklistItem("dfe_exists", False, "total siphon is empty"))
    if dfe is not None:
        split = default_split(net)
        point = dict(check_params(net, params))
        point.update(zip(net.species, dfe.values))
        jb = jacobian_blocks(net, split)
        Jy = jb.Jy.evaluate(point)
        s = spectral_abscissa(np.linalg.eigvals(Jy)) if Jy.size else float("-inf")
        items.append(ChecklistItem("jy_hurwitz", s < -1e-9, f"spectral abscissa {s!r}"))
        Jx = jb.Jx.evaluate(point)
        items.append(ChecklistItem("jx_metzler", metzler_check(Jx), ""))
        try:
            chk = regular_splitting_check(algorithmic_FV(net, split), point)
            items.append(ChecklistItem("splitting_regular", chk.regular, "; ".join(chk.violations)))
        except SplittingError as exc:
            items.append(ChecklistItem("splitting_regular", False, str(exc)))
    else:
        for name in ("jy_hurwitz", "jx_metzler", "splitting_regular"):
            items.append(ChecklistItem(name, False, "no DFE"))
    hir = hidden_inflows(net)
    items.append(ChecklistItem("no_hidden_inflows", not hir,
                               ", ".join(str(net.reactions[r]) for r in hir)))
    return items
