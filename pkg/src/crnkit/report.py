"""One-shot analysis bundle: structure, siphons, DFE, NGM, IGMS and boundary points."""
from __future__ import annotations

from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from . import boundary as _boundary
from .boundary import MAX_SIPHONS, find_dfe, search_face, siphons_within
from .igms import amsd_check, build_igms, cycles
from .netio import ReactionNetwork, build_rhs, stoich
from .ngm import default_blocks, default_split, jacobian_blocks, me_model_check, ngm_at, reproduction_eval
from .numeric import NumericModel, check_params
from .siphons import minimal_siphons, siphon_reports, total_siphon


def _section(out: dict, errors: dict, name: str, fn: Callable[[], object]) -> None:
    try:
        out[name] = fn()
    except Exception as exc:  # one failed section must not sink the bundle
        out[name] = None
        errors[name] = f"{type(exc).__name__}: {exc}"


def _boundary_faces(net: ReactionNetwork) -> list:
    ts = total_siphon(net)
    faces = [W for W in siphons_within(net, ts) if W]
    if len(faces) > MAX_SIPHONS:
        faces = [W for W in minimal_siphons(net) if set(W) <= set(ts)] + [ts]
    return faces


def boundary_equilibria(net: ReactionNetwork, params: Mapping[str, float], n_starts: int = 64) -> List:
    """Equilibria on every nonempty siphon face inside the total siphon, each reported once.

    A point is attributed to the largest face it lies on, so an equilibrium
    found from several faces appears a single time.
    """
    model = NumericModel(net, params)
    found = []
    for face in _boundary_faces(net):
        for eq in search_face(net, params, face, n_starts, model=model).equilibria:
            dup = [k for k, e in enumerate(found)
                   if np.max(np.abs(np.subtract(e.values, eq.values)), initial=0.0) <= _boundary.DEDUP_TOL]
            if not dup:
                found.append(eq)
            elif len(eq.face) > len(found[dup[0]].face):
                found[dup[0]] = eq
    return sorted(found, key=lambda e: (len(e.face), e.face, e.values))


def report(net: ReactionNetwork, params: Optional[Mapping[str, float]] = None) -> dict:
    """Full analysis bundle; sections that fail carry an entry in ``errors``."""
    out: dict = {}
    errors: Dict[str, str] = {}
    st = stoich(net)
    out["variables"] = list(net.species)
    out["parameters"] = list(net.parameters)
    out["rhs"] = {s: str(p) for s, p in zip(net.species, build_rhs(net))}
    out["gamma"] = st.gamma.tolist()
    # equilibria are not isolated when conservation laws exist
    out["conserved_quantities"] = int(net.n_species - np.linalg.matrix_rank(st.gamma)) if net.n_species else 0
    _section(out, errors, "minimal_siphons", lambda: [r.to_dict(net) for r in siphon_reports(net)])
    _section(out, errors, "total_siphon", lambda: net.names(total_siphon(net)))
    _section(out, errors, "amsd", lambda: amsd_check(net).to_dict(net))

    def igms():
        g = build_igms(net)
        return {"graph": g.to_dict(net), "cycles": [list(c) for c in cycles(g)]}

    _section(out, errors, "igms", igms)
    split = None
    try:
        split = default_split(net)
        out["split"] = split.to_dict()
    except Exception as exc:
        out["split"] = None
        errors["split"] = f"{type(exc).__name__}: {exc}"

    point = None
    try:
        if params is None and net.parameters:
            raise KeyError("parameter values are required for the numeric sections")
        p = check_params(net, params or {})
        out["params"] = p
    except Exception as exc:
        p = None
        errors["params"] = f"{type(exc).__name__}: {exc}"

    dfe = None
    if p is not None and total_siphon(net):
        try:
            dfe = find_dfe(net, p)
            out["dfe"] = dfe.to_dict(net)
            point = dict(p)
            point.update(zip(net.species, dfe.values))
        except Exception as exc:
            out["dfe"] = None
            errors["dfe"] = f"{type(exc).__name__}: {exc}"
    else:
        out["dfe"] = None

    if point is not None and split is not None:
        def jac():
            jb = jacobian_blocks(net, split)
            return {"Jx": jb.Jx.to_strings(), "Jy": jb.Jy.to_strings(),
                    "Jx_at_dfe": jb.Jx.evaluate(point).tolist(), "Jy_at_dfe": jb.Jy.evaluate(point).tolist()}

        _section(out, errors, "jacobian", jac)
        _section(out, errors, "ngm", lambda: ngm_at(net, split, point).to_dict())

        def repro():
            y = {s: point[s] for s in split.y_vars}
            return [{"block": [split.x_vars[k] for k in b],
                     "value": reproduction_eval(net, split, b, y, p)} for b in default_blocks(net, split)]

        _section(out, errors, "reproduction_numbers", repro)
    else:
        for name in ("jacobian", "ngm", "reproduction_numbers"):
            out[name] = None

    if p is not None:
        _section(out, errors, "me_checklist",
                 lambda: [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in me_model_check(net, p)])
        _section(out, errors, "boundary",
                 lambda: [e.to_dict(net) for e in boundary_equilibria(net, p)] if total_siphon(net) else [])
    else:
        out["me_checklist"] = None
        out["boundary"] = None
    if not net.parameters and not net.species:
        errors.pop("params", None)
    out["errors"] = errors
    return out
