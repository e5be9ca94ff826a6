"""Command-line driver: ``crnkit <subcommand> FILE [options]``.

Exit codes: 0 success, 1 analysis refused (non-regular splitting, missing
DFE, integrator breakdown), 2 usage, parse or input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import boundary, dynamics, fixtures
from .netio import ParseError, ReactionNetwork, load_network, network_to_dict, validate_mass_action, \
    validate_rates
from .schema import SCHEMA_VERSION

FIXTURE_PREFIX = "fixture:"

# --tol-NAME -> (module, attribute)
TOLERANCES = {
    "solve": (boundary, "SOLVE_TOL"),
    "verify": (boundary, "VERIFY_TOL"),
    "dedup": (boundary, "DEDUP_TOL"),
    "marginal": (boundary, "MARGINAL_TOL"),
    "positive": (boundary, "POSITIVE_TOL"),
    "slope": (dynamics, "SLOPE_TOL"),
    "extinct": (dynamics, "EXTINCT_LEVEL"),
    "persist": (dynamics, "PERSIST_LEVEL"),
    "rtol": (dynamics, "RTOL"),
    "atol": (dynamics, "ATOL"),
}


class UsageError(Exception):
    """Bad input supplied on the command line (exit code 2)."""


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(doc: dict) -> str:
    """Canonical JSON: sorted keys, shortest round-trip floats, non-finite as null."""
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2)


def _text(obj, indent: int = 0) -> List[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(f"{pad}-")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(pad + _scalar(obj))
    return lines


def _flat(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _scalar(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{}"
    if v is None:
        return "-"
    return str(v)


def _emit(args, command: str, payload: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, **payload}
    if getattr(args, "json", False):
        print(dumps(doc))
    elif "dot" in payload:
        sys.stdout.write(payload["dot"])
    else:
        print("\n".join(_text(_jsonable(payload))))


# input helpers

def _read_network(spec: str) -> ReactionNetwork:
    if spec.startswith(FIXTURE_PREFIX):
        name = spec[len(FIXTURE_PREFIX):]
        try:
            return fixtures.load(name)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"no such file: {spec}")
    return load_network(path)


def _read_json(value: str, what: str):
    text = value
    if not value.lstrip().startswith(("{", "[")):
        path = Path(value)
        if not path.is_file():
            raise UsageError(f"{what}: no such file: {value}")
        text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what}: invalid JSON ({exc})") from None


def _params(args, net: ReactionNetwork, required: bool = True) -> Optional[Dict[str, float]]:
    if getattr(args, "params", None):
        raw = _read_json(args.params, "--params")
        if not isinstance(raw, dict):
            raise UsageError("--params must be a JSON object")
        p = {}
        if args.file.startswith(FIXTURE_PREFIX):
            p.update(fixtures.params(args.file[len(FIXTURE_PREFIX):]))
        p.update({str(k): float(v) for k, v in raw.items()})
    elif args.file.startswith(FIXTURE_PREFIX):
        p = fixtures.params(args.file[len(FIXTURE_PREFIX):])
    elif not net.parameters:
        p = {}
    elif required:
        raise UsageError("--params is required for this network")
    else:
        return None
    missing = [k for k in net.parameters if k not in p]
    if missing:
        raise UsageError(f"missing parameter values: {', '.join(missing)}")
    return p


def _axis(text: str):
    try:
        name, lo, hi, n = text.split(":")
        n = int(n)
        lo, hi = float(lo), float(hi)
    except ValueError:
        raise UsageError(f"axis must look like NAME:LOW:HIGH:COUNT, got {text!r}") from None
    if n < 1:
        raise UsageError("axis COUNT must be positive")
    return name, tuple(np.linspace(lo, hi, n)) if n > 1 else (lo,)


def _x0(value: str, net: ReactionNetwork) -> np.ndarray:
    if "," in value and not value.lstrip().startswith(("{", "[")) and not Path(value).is_file():
        raw = [float(v) for v in value.split(",")]
    else:
        raw = _read_json(value, "--x0")
    if isinstance(raw, dict):
        missing = [s for s in net.species if s not in raw]
        if missing:
            raise UsageError(f"--x0 is missing {', '.join(missing)}")
        raw = [raw[s] for s in net.species]
    x0 = np.asarray(raw, dtype=float)
    if x0.shape != (net.n_species,):
        raise UsageError(f"--x0 needs {net.n_species} values")
    return x0


# subcommands

def cmd_parse(args) -> dict:
    net = _read_network(args.file)
    out = {
        "network": network_to_dict(net),
        "mass_action": [{"index": e.index, "reaction": e.reaction, "mass_action": e.mass_action, "reason": e.reason}
                        for e in validate_mass_action(net)],
    }
    p = _params(args, net, required=False)
    if p is not None:
        out["negative_rates"] = [{"index": f.index, "reaction": f.reaction, "value": f.value, "point": f.point}
                                 for f in validate_rates(net, p, seed=args.seed)]
    if args.dot:
        out["dot"] = _network_dot(net)
    return out


def _network_dot(net: ReactionNetwork) -> str:
    lines = ["digraph network {", "  rankdir=LR;"]
    for s in net.species:
        lines.append(f'  "{s}" [shape=ellipse];')
    for r, rx in enumerate(net.reactions):
        lines.append(f'  R{r} [shape=box, label="R{r}: {rx.rate}"];')
        for n, k in rx.reactants:
            lines.append(f'  "{n}" -> R{r}' + (f' [label="{k}"]' if k != 1 else "") + ";")
        for n, k in rx.products:
            lines.append(f'  R{r} -> "{n}"' + (f' [label="{k}"]' if k != 1 else "") + ";")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_siphons(args) -> dict:
    from .siphons import autocatalytic_cores, critical_siphons, siphon_reports, total_siphon

    net = _read_network(args.file)
    out = {
        "minimal_siphons": [r.to_dict(net, with_certificates=not args.no_certificates) for r in siphon_reports(net)],
        "critical_siphons": [net.names(W) for W in critical_siphons(net)],
        "total_siphon": net.names(total_siphon(net)),
    }
    if args.cores is not None:
        out["autocatalytic_cores"] = autocatalytic_cores(net, args.cores).to_dict(net)
    return out


def cmd_igms(args) -> dict:
    from .igms import amsd_check, build_igms, cycles
    from .siphons import critical_siphons, minimal_siphons

    net = _read_network(args.file)
    nodes = critical_siphons(net) if args.critical else minimal_siphons(net)
    g = build_igms(net, nodes, args.rule)
    out = {"graph": g.to_dict(net), "cycles": [list(c) for c in cycles(g)],
           "amsd": amsd_check(net, args.rule).to_dict(net)}
    if args.dot:
        out["dot"] = g.to_dot(net)
    return out


def cmd_ngm(args) -> dict:
    from .ngm import algorithmic_FV, default_split, jacobian_blocks, me_model_check, ngm_at

    net = _read_network(args.file)
    p = _params(args, net)
    split = default_split(net)
    if not split.x_vars:
        raise boundary.BoundaryError("total siphon is empty; there is nothing to split")
    if args.at:
        raw = _read_json(args.at, "--at")
        point = dict(p)
        point.update({k: float(v) for k, v in raw.items()})
        missing = [s for s in net.species if s not in point]
        if missing:
            raise UsageError(f"--at is missing {', '.join(missing)}")
    else:
        dfe = boundary.find_dfe(net, p)
        point = dict(p)
        point.update(zip(net.species, dfe.values))
    fv = algorithmic_FV(net, split)
    jb = jacobian_blocks(net, split)
    out = {
        "split": split.to_dict(),
        "symbolic": {"F": fv.F.to_strings(), "V": fv.V.to_strings(), "Jx": jb.Jx.to_strings()},
        "ngm": ngm_at(net, split, point, kd=args.kd, splitting=fv).to_dict(),
    }
    if args.checklist:
        out["me_checklist"] = [{"name": c.name, "passed": c.passed, "detail": c.detail}
                               for c in me_model_check(net, p)]
    return out


def cmd_boundary(args) -> dict:
    from .report import boundary_equilibria

    net = _read_network(args.file)
    p = _params(args, net)
    if args.face is not None:
        face = [s for s in args.face.split(",") if s]
        unknown = [s for s in face if s not in net.species]
        if unknown:
            raise UsageError(f"unknown species in --face: {', '.join(unknown)}")
        fs = boundary.search_face(net, p, face, args.starts)
        eqs = fs.equilibria
        extra = {"negative_discarded": fs.negative_discarded, "failed_starts": fs.failed_starts}
    else:
        eqs = boundary_equilibria(net, p, args.starts)
        extra = {}
    out = {"equilibria": [e.to_dict(net) for e in eqs], **extra}
    if args.dfe:
        out["dfe"] = boundary.find_dfe(net, p).to_dict(net)
    return out


def cmd_invade(args) -> dict:
    net = _read_network(args.file)
    p = _params(args, net)
    g = boundary.build_invasion_graph(net, p)
    out = {"graph": g.to_dict(net)}
    try:
        out["lcp"] = boundary.lcp_classify(net, p).to_dict()
    except boundary.BoundaryError as exc:
        out["lcp"] = None
        out["lcp_note"] = str(exc)
    if args.dot:
        out["dot"] = g.to_dot(net)
    return out


def cmd_simulate(args) -> dict:
    net = _read_network(args.file)
    p = _params(args, net)
    x0 = _x0(args.x0, net)
    t_eval = np.linspace(0.0, args.t, args.points) if args.points else None
    traj = dynamics.simulate(net, p, x0, args.t, rtol=dynamics.RTOL, atol=dynamics.ATOL, t_eval=t_eval)
    out = {"steps": traj.steps, "rejected": traj.rejected, "samples": len(traj.times),
           "final_time": float(traj.times[-1]), "final_state": dict(zip(net.species, traj.states[-1]))}
    if np.all(x0 > 0):
        out["persistence"] = dynamics.persistence_diagnostic(
            traj, args.window, dynamics.SLOPE_TOL, dynamics.EXTINCT_LEVEL, dynamics.PERSIST_LEVEL).to_dict()
    else:
        out["persistence"] = {"tail_slope": None, "verdict": "inconclusive",
                              "note": "initial state lies on the boundary"}
    if args.out:
        Path(args.out).write_text(traj.to_csv(), encoding="utf-8")
        out["csv"] = args.out
    return out


def cmd_scan(args) -> dict:
    net = _read_network(args.file)
    p = _params(args, net)
    a1, a2 = _axis(args.axis1), _axis(args.axis2)
    for name, _ in (a1, a2):
        if name not in net.parameters:
            raise UsageError(f"{name!r} is not a parameter of the network")
    res = dynamics.scan(net, p, a1, a2, args.classifier)
    out = {"scan": res.to_dict()}
    if args.out:
        Path(args.out).write_text(res.to_csv(), encoding="utf-8")
        out["csv"] = args.out
    return out


def cmd_report(args) -> dict:
    from .report import report

    net = _read_network(args.file)
    p = _params(args, net, required=False)
    return {"report": report(net, p)}


def cmd_fixtures(args) -> dict:
    if args.name is None:
        out = []
        for name in fixtures.NAMES:
            net = fixtures.load(name)
            out.append({"name": name, "species": net.n_species, "reactions": net.n_reactions,
                        "params": fixtures.params(name)})
        return {"fixtures": out}
    try:
        src = fixtures.source(args.name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    return {"fixtures": [{"name": args.name, "source": src, "params": fixtures.params(args.name)}]}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="emit a JSON document instead of text")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for sampled diagnostics (scrambles the rate-sign sample)")
    for name, (mod, attr) in TOLERANCES.items():
        common.add_argument(f"--tol-{name}", type=float, default=argparse.SUPPRESS, metavar="X",
                            help=f"override {attr} (default {getattr(mod, attr)!r})")

    parser = argparse.ArgumentParser(prog="crnkit", parents=[common], allow_abbrev=False,
                                     description="Structural and dynamical analysis of reaction networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, file=True, params=False):
        sp = sub.add_parser(name, parents=[common], help=help_text, allow_abbrev=False)
        if file:
            sp.add_argument("file", help="network file, or fixture:NAME")
        if params:
            sp.add_argument("--params", help="JSON object of parameter values (file or inline)")
        sp.set_defaults(func=func)
        return sp

    sp = add("parse", cmd_parse, "parse a network and show its stoichiometry", params=True)
    sp.add_argument("--dot", action="store_true", help="include a Graphviz rendering")
    sp = add("siphons", cmd_siphons, "minimal siphons with certificates")
    sp.add_argument("--cores", type=int, metavar="K", help="also search autocatalytic cores up to size K")
    sp.add_argument("--no-certificates", action="store_true")
    sp = add("igms", cmd_igms, "interaction graph on minimal siphons")
    sp.add_argument("--rule", choices=["net", "touch"], default="net")
    sp.add_argument("--critical", action="store_true", help="build the graph on critical siphons only")
    sp.add_argument("--dot", action="store_true")
    sp = add("ngm", cmd_ngm, "next-generation matrix at the DFE (or --at)", params=True)
    sp.add_argument("--at", help="JSON object of species values to evaluate at")
    sp.add_argument("--kd", action="store_true", help="also report V^-1 F")
    sp.add_argument("--checklist", action="store_true", help="include the epidemic-model checklist")
    sp = add("boundary", cmd_boundary, "boundary equilibria on siphon faces", params=True)
    sp.add_argument("--face", help="comma-separated species set to zero (empty string for the interior)")
    sp.add_argument("--starts", type=int, default=64)
    sp.add_argument("--dfe", action="store_true", help="also report the disease-free equilibrium")
    sp = add("invade", cmd_invade, "invasion graph and two-strain classification", params=True)
    sp.add_argument("--dot", action="store_true")
    sp = add("simulate", cmd_simulate, "integrate the ODE and diagnose persistence", params=True)
    sp.add_argument("--x0", required=True, help="initial state: JSON list/object, file, or a,b,c")
    sp.add_argument("--t", type=float, required=True, help="final time")
    sp.add_argument("--points", type=int, default=0, help="sample on an even grid of this many points")
    sp.add_argument("--window", type=float, default=0.25, help="final fraction used for the slope")
    sp.add_argument("--out", help="write the trajectory CSV here")
    sp = add("scan", cmd_scan, "two-parameter stability scan", params=True)
    sp.add_argument("--axis1", required=True, metavar="NAME:LOW:HIGH:COUNT")
    sp.add_argument("--axis2", required=True, metavar="NAME:LOW:HIGH:COUNT")
    sp.add_argument("--classifier", choices=["lcp", "generic"], default="lcp")
    sp.add_argument("--out", help="write the scan CSV here")
    sp = add("report", cmd_report, "full analysis bundle", params=True)
    sp = add("fixtures", cmd_fixtures, "list bundled fixtures or print one", file=False)
    sp.add_argument("name", nargs="?")
    return parser


@contextmanager
def _tolerances(args):
    saved = []
    try:
        for name, (mod, attr) in TOLERANCES.items():
            value = getattr(args, f"tol_{name}", None)
            if value is not None:
                saved.append((mod, attr, getattr(mod, attr)))
                setattr(mod, attr, value)
        yield
    finally:
        for mod, attr, value in reversed(saved):
            setattr(mod, attr, value)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.seed = getattr(args, "seed", None)
    try:
        with _tolerances(args):
            payload = args.func(args)
    except (UsageError, ParseError, OSError) as exc:
        return _fail(args, exc, 2)
    except (boundary.BoundaryError, dynamics.StepSizeError) as exc:
        return _fail(args, exc, 1)
    except ValueError as exc:
        # SplittingError is a ValueError; other ValueErrors come from bad input
        from .ngm import SplittingError

        return _fail(args, exc, 1 if isinstance(exc, SplittingError) else 2)
    _emit(args, args.command, payload)
    return 0


def _fail(args, exc: Exception, code: int) -> int:
    msg = str(exc)
    if isinstance(exc, ParseError) and exc.line:
        msg = f"line {exc.line}, column {exc.column}: {exc.message}"
    print(f"crnkit {args.command}: error: {msg}", file=sys.stderr)
    if getattr(args, "json", False):
        print(dumps({"schema_version": SCHEMA_VERSION, "command": "error", "error": msg, "exit_code": code}))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
