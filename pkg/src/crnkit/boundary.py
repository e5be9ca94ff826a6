"""Boundary equilibria on siphon faces, invasion numbers and the invasion graph."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from .netio import ReactionNetwork
from .ngm import VariableSplit, algorithmic_FV, default_blocks, default_split, reproduction_eval
from .numeric import NumericModel, spectral_abscissa
from .siphons import SpeciesSet, critical_siphons, is_siphon, total_siphon

SOLVE_TOL = 1e-11
VERIFY_TOL = 1e-9
DEDUP_TOL = 1e-6
MARGINAL_TOL = 1e-9
POSITIVE_TOL = 1e-9
NEG_CLIP = 1e-9
MAX_ITER = 200
MAX_SIPHONS = 20


class BoundaryError(ValueError):
    """No usable equilibrium, or an ambiguous one where uniqueness is required."""


@dataclass(frozen=True)
class BoundaryEquilibrium:
    face: SpeciesSet
    values: Tuple[float, ...]
    residual: float
    eigenvalues: Tuple[complex, ...]
    classification: str
    source: str = "newton"

    def value(self, net: ReactionNetwork, name: str) -> float:
        return self.values[net.index(name)]

    def as_dict_of_values(self, net: ReactionNetwork) -> Dict[str, float]:
        return dict(zip(net.species, self.values))

    def to_dict(self, net: ReactionNetwork) -> dict:
        return {
            "face": net.names(self.face),
            "values": self.as_dict_of_values(net),
            "residual": self.residual,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "spectral_abscissa": spectral_abscissa(self.eigenvalues),
            "classification": self.classification,
            "source": self.source,
        }


@dataclass(frozen=True)
class FaceSearch:
    face: SpeciesSet
    equilibria: Tuple[BoundaryEquilibrium, ...]
    negative_discarded: int
    failed_starts: int


def classify(eigs, tol: Optional[float] = None) -> str:
    tol = MARGINAL_TOL if tol is None else tol
    s = spectral_abscissa(eigs)
    if s < -tol:
        return "stable"
    if s > tol:
        return "unstable"
    return "marginal"


def halton_starts(k: int, n: int, low: float = 0.01, high: float = 10.0) -> np.ndarray:
    """``n`` deterministic points in ``[low, high]^k`` (the Halton origin is skipped)."""
    if k == 0:
        return np.zeros((n, 0))
    pts = qmc.Halton(d=k, scramble=False).random(n + 1)[1:]
    return low + (high - low) * pts


def _damped_newton(f, jac, X, tol=None, max_iter=None):
    """Vectorized damped Newton with backtracking on the max-norm of f."""
    tol = SOLVE_TOL if tol is None else tol
    max_iter = MAX_ITER if max_iter is None else max_iter
    X = X.copy()
    Fx = f(X)
    norm = np.max(np.abs(Fx), axis=1)
    alive = np.isfinite(norm)
    for _ in range(max_iter):
        todo = alive & (norm >= tol)
        if not todo.any():
            break
        idx = np.nonzero(todo)[0]
        J = jac(X[idx])
        with np.errstate(all="ignore"):
            step = -np.einsum("bij,bj->bi", np.linalg.pinv(J), Fx[idx])
        lam = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        newX = X[idx].copy()
        newF = Fx[idx].copy()
        newN = norm[idx].copy()
        for _ in range(30):
            pending = ~accepted
            if not pending.any():
                break
            p = np.nonzero(pending)[0]
            with np.errstate(all="ignore"):
                trial = X[idx[p]] + lam[p, None] * step[p]
                Ft = f(trial)
                Nt = np.max(np.abs(Ft), axis=1)
            ok = np.isfinite(Nt) & (Nt < (1 - 1e-4 * lam[p]) * norm[idx[p]])
            q = p[ok]
            newX[q], newF[q], newN[q] = trial[ok], Ft[ok], Nt[ok]
            accepted[q] = True
            lam[p[~ok]] *= 0.5
        # a start that cannot decrease its residual is abandoned
        stuck = idx[~accepted]
        alive[stuck] = False
        X[idx], Fx[idx], norm[idx] = newX, newF, newN
    return X, norm, alive & (norm < tol)


def _polish(f, jac, z, steps=3):
    """A few full Newton steps, kept only while the residual keeps falling."""
    best = z
    best_norm = np.max(np.abs(f(z[None])[0]), initial=0.0)
    for _ in range(steps):
        if best_norm == 0.0:
            break
        with np.errstate(all="ignore"):
            trial = best - np.linalg.lstsq(jac(best[None])[0], f(best[None])[0], rcond=None)[0]
            norm = np.max(np.abs(f(trial[None])[0]))
        if not np.isfinite(norm) or norm >= best_norm:
            break
        best, best_norm = trial, norm
    return best


def search_face(net: ReactionNetwork, params: Mapping[str, float], face, n_starts: int = 64,
                model: Optional[NumericModel] = None) -> FaceSearch:
    """Equilibria with ``x_face = 0`` from a Halton multistart on the remaining coordinates."""
    face = net.species_set(face)
    if face and not is_siphon(net, face):
        raise ValueError(f"{net.names(face)} is not a siphon")
    model = model or NumericModel(net, params)
    n = net.n_species
    free = [i for i in range(n) if i not in set(face)]

    def embed(Z):
        X = np.zeros(Z.shape[:-1] + (n,))
        X[..., free] = Z
        return X

    def f(Z):
        return model.rhs(embed(Z))[..., free]

    def jac(Z):
        return model.jac(embed(Z))[..., free, :][..., free]

    if free:
        Z, norms, ok = _damped_newton(f, jac, halton_starts(len(free), n_starts))
    else:
        Z = np.zeros((1, 0))
        ok = np.array([True])
    failed = int(np.sum(~ok))
    sols = Z[ok]
    negative = 0
    kept = []
    for z in sols:
        if np.any(z < -NEG_CLIP):
            negative += 1
            continue
        z = _polish(f, jac, np.where(z < 0, 0.0, z))
        # coordinates this small are boundary zeros, not tiny populations
        kept.append(np.where(z <= NEG_CLIP, 0.0, z))
    unique: List[np.ndarray] = []
    for z in sorted(kept, key=lambda v: tuple(np.round(v, 6))):
        if all(np.max(np.abs(z - u)) > DEDUP_TOL for u in unique):
            unique.append(z)
    out = []
    for z in unique:
        x = embed(z)
        res = float(np.max(np.abs(model.rhs(x)))) if n else 0.0
        if res >= VERIFY_TOL:
            continue
        eigs = np.linalg.eigvals(model.jac(x)) if n else np.array([])
        eigs = tuple(complex(e) for e in sorted(eigs, key=lambda e: (-e.real, e.imag)))
        out.append(BoundaryEquilibrium(face, tuple(float(v) for v in x), res, eigs, classify(eigs)))
    return FaceSearch(face, tuple(out), negative, failed)


def find_boundary_equilibria(net: ReactionNetwork, params: Mapping[str, float], face,
                             n_starts: int = 64) -> List[BoundaryEquilibrium]:
    return list(search_face(net, params, face, n_starts).equilibria)


def find_dfe(net: ReactionNetwork, params: Mapping[str, float], n_starts: int = 16) -> BoundaryEquilibrium:
    """The unique nonnegative equilibrium with every total-siphon species absent.

    Raises:
        BoundaryError: if the total siphon is empty, no start converges to a
            nonnegative point, or several distinct points are found.
    """
    ts = total_siphon(net)
    if not ts:
        raise BoundaryError("total siphon is empty; there is no disease-free face")
    fs = search_face(net, params, ts, n_starts)
    if not fs.equilibria:
        if fs.negative_discarded:
            raise BoundaryError("only negative solutions on the disease-free face")
        raise BoundaryError("no Newton start converged on the disease-free face")
    if len(fs.equilibria) > 1:
        raise BoundaryError(f"{len(fs.equilibria)} distinct disease-free equilibria found")
    return fs.equilibria[0]


def invasion_abscissa(net: ReactionNetwork, params: Mapping[str, float], eq: BoundaryEquilibrium, W) -> float:
    """Spectral abscissa of the Jacobian block on W at ``eq``."""
    W = net.species_set(W)
    if not set(W) <= set(eq.face):
        raise ValueError("W must lie inside the equilibrium's face")
    J = NumericModel(net, params).jac(np.array(eq.values))
    return spectral_abscissa(np.linalg.eigvals(J[np.ix_(W, W)]))


def _blocks_by_name(net, split, blocks):
    if blocks is None:
        return [tuple(split.x_vars[k] for k in b) for b in default_blocks(net, split)]
    return [tuple(net.species[i] if isinstance(i, (int, np.integer)) else i for i in b) for b in blocks]


def invasion_numbers(net: ReactionNetwork, params: Mapping[str, float], eq: BoundaryEquilibrium,
                     blocks=None, split: Optional[VariableSplit] = None) -> Dict[int, float]:
    """Reproduction numbers of the blocks absent at ``eq``, evaluated at its y-values."""
    split = split or default_split(net)
    named = _blocks_by_name(net, split, blocks)
    face_names = set(net.names(eq.face))
    pos = {s: k for k, s in enumerate(split.x_vars)}
    y = eq.as_dict_of_values(net)
    splitting = algorithmic_FV(net, split)
    out = {}
    for j, b in enumerate(named):
        if not set(b) <= face_names:
            continue
        out[j] = reproduction_eval(net, split, [pos[s] for s in b], y, params, splitting=splitting)
    return out


@dataclass(frozen=True)
class InvasionEdge:
    source: SpeciesSet
    block: int
    value: float
    target: SpeciesSet


@dataclass(frozen=True)
class InvasionGraph:
    nodes: Tuple[Tuple[SpeciesSet, BoundaryEquilibrium], ...]
    edges: Tuple[InvasionEdge, ...]
    blocks: Tuple[Tuple[str, ...], ...]

    def node_sets(self) -> List[SpeciesSet]:
        return [S for S, _ in self.nodes]

    def to_dict(self, net: ReactionNetwork) -> dict:
        return {
            "blocks": [list(b) for b in self.blocks],
            "nodes": [{"siphon": net.names(S), "equilibrium": eq.to_dict(net)} for S, eq in self.nodes],
            "edges": [{"source": net.names(e.source), "block": e.block, "value": e.value,
                       "target": net.names(e.target)} for e in self.edges],
        }

    def to_dot(self, net: ReactionNetwork) -> str:
        def label(S):
            return "{" + ", ".join(net.names(S)) + "}"

        lines = ["digraph invasion {"]
        ids = {S: f"N{k}" for k, (S, _) in enumerate(self.nodes)}
        for S, eq in self.nodes:
            lines.append(f'  {ids[S]} [label="{label(S)}\\n{eq.classification}"];')
        for e in self.edges:
            tgt = ids.get(e.target)
            if tgt is None:
                tgt = "X" + "_".join(map(str, e.target))
                lines.append(f'  {tgt} [label="{label(e.target)}", style=dashed];')
            lines.append(f'  {ids[e.source]} -> {tgt} [label="block {e.block}: {e.value:.6g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def siphons_within(net: ReactionNetwork, universe: Sequence[int]) -> List[SpeciesSet]:
    """All siphons contained in ``universe``, plus the empty set, by size then index."""
    out = [()]
    universe = sorted(universe)
    if len(universe) > 16:
        raise BoundaryError("too many candidate species for siphon enumeration")
    for k in range(1, len(universe) + 1):
        for S in itertools.combinations(universe, k):
            if is_siphon(net, S):
                out.append(S)
    return out


def build_invasion_graph(net: ReactionNetwork, params: Mapping[str, float], blocks=None,
                         siphons: Optional[Sequence[SpeciesSet]] = None) -> InvasionGraph:
    """Invasion graph over the siphons contained in the total siphon.

    S is a node when its face carries an equilibrium on which every critical
    minimal siphon not inside S has a positive coordinate.  Edges go from S
    for each block inside S whose invasion number exceeds one.
    """
    ts = total_siphon(net)
    crit = critical_siphons(net)
    split = default_split(net)
    named = _blocks_by_name(net, split, blocks)
    if siphons is None:
        siphons = siphons_within(net, ts)
        if len(siphons) > MAX_SIPHONS:
            raise BoundaryError(f"{len(siphons)} siphons exceed the limit of {MAX_SIPHONS}; pass them explicitly")
    model = NumericModel(net, params)
    nodes = []
    edges = []
    for S in siphons:
        S = tuple(sorted(S))
        resident = [T for T in crit if not set(T) <= set(S)]
        fs = search_face(net, params, S, model=model)
        eqs = [e for e in fs.equilibria if all(max(e.values[i] for i in T) > POSITIVE_TOL for T in resident)]
        if not eqs:
            continue
        eq = eqs[0]
        nodes.append((S, eq))
        nums = invasion_numbers(net, params, eq, [tuple(b) for b in named], split)
        for j, val in sorted(nums.items()):
            if val > 1:
                block_idx = set(net.species_set(named[j]))
                edges.append(InvasionEdge(S, j, val, tuple(i for i in S if i not in block_idx)))
    return InvasionGraph(tuple(nodes), tuple(edges), tuple(named))


@dataclass(frozen=True)
class LcpResult:
    label: str
    values: Dict[str, Optional[float]]

    def to_dict(self) -> dict:
        return {"label": self.label, "values": dict(self.values)}


REGIONS = ("DFE stable", "E1 stable", "E2 stable", "E* stable")


def is_two_block_kolmogorov(net: ReactionNetwork, split: VariableSplit, blocks) -> bool:
    from .numeric import symbolic_rhs

    if len(blocks) != 2:
        return False
    rhs = symbolic_rhs(net)
    for x in split.x_vars:
        for sig in rhs[net.index(x)].terms:
            if x not in dict(sig):
                return False
    return True


def lcp_classify(net: ReactionNetwork, params: Mapping[str, float]) -> LcpResult:
    """Region of a two-strain model from R1, R2 and the two mutual invasion numbers.

    Raises:
        BoundaryError: if the model is not a two-block Kolmogorov system or a
            needed single-strain equilibrium cannot be located.
    """
    split = default_split(net)
    blocks = default_blocks(net, split)
    if not is_two_block_kolmogorov(net, split, blocks):
        raise BoundaryError("classification needs two blocks in Kolmogorov form")
    splitting = algorithmic_FV(net, split)
    model = NumericModel(net, params)
    dfe = find_dfe(net, params)
    y0 = dfe.as_dict_of_values(net)
    R = [reproduction_eval(net, split, b, y0, params, splitting) for b in blocks]
    bspecies = [net.species_set([split.x_vars[k] for k in b]) for b in blocks]
    tilde: List[Optional[float]] = [None, None]
    for j in (0, 1):
        other = 1 - j
        if R[j] <= 1:
            continue
        fs = search_face(net, params, bspecies[other], model=model)
        eqs = [e for e in fs.equilibria if max(e.values[i] for i in bspecies[j]) > POSITIVE_TOL]
        if not eqs:
            raise BoundaryError(f"no single-strain equilibrium for block {j} although R{j + 1} > 1")
        y = eqs[0].as_dict_of_values(net)
        tilde[other] = reproduction_eval(net, split, blocks[other], y, params, splitting)
    values = {"R1": R[0], "R2": R[1], "R2_at_E1": tilde[1], "R1_at_E2": tilde[0]}
    if any(v is not None and abs(v - 1) <= 1e-9 for v in values.values()):
        return LcpResult("boundary", values)
    r1, r2, t21, t12 = R[0], R[1], tilde[1], tilde[0]
    matches = []
    if r1 < 1 and r2 < 1:
        matches.append(REGIONS[0])
    if r1 > 1 and t21 < 1:
        matches.append(REGIONS[1])
    if r2 > 1 and t12 < 1:
        matches.append(REGIONS[2])
    if r1 > 1 and r2 > 1 and t21 > 1 and t12 > 1:
        matches.append(REGIONS[3])
    return LcpResult(" + ".join(matches) if matches else "unclassified", values)
