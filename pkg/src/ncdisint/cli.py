"""Command-line front end.

Every command reads one problem file ``{"version": "1", "kind": ..., "payload": ...}``
and writes a JSON document to stdout.  Exit codes: 0 when the analysis ran
(whatever the verdicts), 2 for unreadable or invalid input, 3 when the
problem is ill-posed (the given target state is not induced by the source).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable, Optional, Sequence

import jsonschema

from . import serialize as ser
from .algebra import density_state
from .classical import FinProb, classical_disintegration, embed_function, embed_stoch, embed_to_algebra, pushforward
from .disintegration import (
    disintegrate,
    disintegrate_matrix_case,
    disintegrate_matrix_unitary_case,
    make_problem,
)
from .errors import IllPosedProblem, NcDisintError
from .linalg import DEFAULT_TOL, Tolerance, max_abs
from .maps import (
    ae_defects,
    bratteli_to_blockmap,
    choi_residual,
    compose,
    cp_residual,
    hom_residual,
    is_cp,
    is_unital,
    unitality_residual,
)
from .measurement import (
    component_states,
    luders,
    measurement_disintegration,
    observable,
    outcome_distribution,
    spectral_hom,
)

ENV_TOLERANCE = "NCDISINT_TOLERANCE"


def run_check_map(payload: dict, tol: Tolerance) -> dict:
    f = ser.decode_blockmap(payload["map"]) if "map" in payload else bratteli_to_blockmap(ser.decode_hom(payload["hom"]))
    res = {"cp": cp_residual(f), "unitality": unitality_residual(f), "hom": hom_residual(f)}
    return {
        "cp": is_cp(f, tol),
        "unital": is_unital(f, tol),
        "hom": bool(res["hom"] <= 10 * tol.eps_eq),
        "residuals": ser.encode_residuals(res),
    }


def run_ae_equal(payload: dict, tol: Tolerance) -> dict:
    f = ser.decode_blockmap(payload["f"])
    g = ser.decode_blockmap(payload["g"])
    xi = ser.decode_state(payload["xi"], f.target).validate(tol)
    threshold = 10 * tol.eps_eq
    bad = [d for d in ae_defects(f, g, xi) if d.residual > threshold]
    witness = None
    if bad:
        w = bad[0]
        witness = {"block": w.block + 1, "row": w.row + 1, "col": w.col + 1, "residual": ser.real(w.residual)}
    return {
        "ae_equal": not bad,
        "equal": bool(choi_residual(f, g) <= threshold),
        "witness": witness,
    }


def run_disintegrate(payload: dict, tol: Tolerance) -> dict:
    if "rho" in payload:
        rho = ser.decode_matrix(payload["rho"])
        sigma = ser.decode_matrix(payload["sigma"])
        if "unitary" in payload:
            result = disintegrate_matrix_unitary_case(rho, sigma, payload["p"], ser.decode_matrix(payload["unitary"]), tol)
        else:
            result = disintegrate_matrix_case(rho, sigma, payload["p"], tol)
        return ser.encode_result(result, [])
    hom = ser.decode_hom(payload["hom"])
    omega = ser.decode_state(payload["omega"], hom.target)
    xi = ser.decode_state(payload["xi"], hom.source) if "xi" in payload else None
    problem = make_problem(hom, omega, xi, tol)
    return ser.encode_result(disintegrate(problem, tol), sorted(problem.xi.null_blocks(tol)))


def run_classical(payload: dict, tol: Tolerance) -> dict:
    f = [y - 1 for y in payload["map"]]
    size_y = payload.get("size_y", max(f) + 1)
    if "q" in payload:
        size_y = len(payload["q"])
    p = FinProb(payload["p"]).validate(tol)
    q = FinProb(payload["q"]) if "q" in payload else pushforward(f, p, size_y)
    r = classical_disintegration(f, p, q, tol)

    hom = embed_function(f, size_y)
    _, omega = embed_to_algebra(p, tol)
    _, xi = embed_to_algebra(q, tol)
    problem = make_problem(hom, omega, xi, tol)
    engine = disintegrate(problem, tol)
    null = problem.xi.null_blocks(tol)
    residual = 0.0
    if engine.exists:
        expected = embed_stoch(r)
        for y in range(size_y):
            if y not in null:
                residual = max(residual, max(max_abs(a - b) for a, b in zip(engine.map.choi[y], expected.choi[y])))
    return {
        "q": [ser.real(v) for v in q.weights],
        "null_points": [y + 1 for y in sorted(null)],
        "r": ser.encode_real_matrix(r.matrix),
        "engine": {
            "exists": engine.exists,
            "agrees": bool(engine.exists and residual <= 10 * tol.eps_eq),
            "residual": ser.real(residual),
        },
    }


def run_measure(payload: dict, tol: Tolerance) -> dict:
    obs = observable(ser.decode_matrix(payload["observable"]), tol)
    rho = ser.decode_matrix(payload["rho"])
    q = outcome_distribution(obs, rho, tol)
    result = measurement_disintegration(obs, rho, tol)
    engine = disintegrate(make_problem(spectral_hom(obs), density_state(rho, tol), tol=tol), tol)
    components = None
    if result.exists:
        components = [
            None if q.weights[k] <= tol.eps_rank else ser.encode_matrix(c)
            for k, c in enumerate(component_states(result))
        ]
    doc = ser.encode_result(result, [k for k, w in enumerate(q.weights) if w <= tol.eps_rank])
    doc.update(
        {
            "spectrum": [ser.real(v) for v in obs.spectrum],
            "ranks": obs.ranks,
            "q": [ser.real(v) for v in q.weights],
            "luders": ser.encode_matrix(luders(obs, rho, tol)),
            "components": components,
            "engine_exists": engine.exists,
        }
    )
    return doc


def run_compose(payload: dict, tol: Tolerance) -> dict:
    f = ser.decode_blockmap(payload["f"])
    g = ser.decode_blockmap(payload["g"])
    h = compose(g, f)
    return {"map": ser.encode_blockmap(h), "cp": is_cp(h, tol), "unital": is_unital(h, tol)}


RUNNERS: dict[str, Callable[[dict, Tolerance], dict]] = {
    "check-map": run_check_map,
    "ae-equal": run_ae_equal,
    "disintegrate": run_disintegrate,
    "classical": run_classical,
    "measure": run_measure,
    "compose": run_compose,
}

# kinds each command will accept; disintegrate also runs the specialised solvers
ACCEPTS = {name: {name} for name in RUNNERS}
ACCEPTS["disintegrate"] = {"disintegrate", "classical", "measure"}


def _tolerance(flag: Optional[float]) -> Tolerance:
    factor = flag
    if factor is None:
        env = os.environ.get(ENV_TOLERANCE)
        factor = float(env) if env else 1.0
    return DEFAULT_TOL.scaled(factor)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncdisint", description="Disintegrations of states on finite-dimensional C*-algebras.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("file", help="problem file (JSON)")
        p.add_argument(
            "--tolerance",
            type=float,
            default=None,
            help=f"multiply all numerical tolerances by this factor (default: ${ENV_TOLERANCE} or 1)",
        )
    return parser


def run(command: str, doc: object, tol: Tolerance) -> dict:
    kind, payload = ser.validate_problem(doc)
    if kind not in ACCEPTS[command]:
        raise ValueError(f"command {command!r} cannot handle problems of kind {kind!r}")
    return RUNNERS[kind](payload, tol)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        tol = _tolerance(args.tolerance)
        with open(args.file, encoding="utf-8") as fh:
            doc = json.load(fh)
        out = run(args.command, doc, tol)
    except IllPosedProblem as exc:
        print(f"ncdisint: ill-posed problem: {exc}", file=sys.stderr)
        return 3
    except jsonschema.ValidationError as exc:
        print(f"ncdisint: schema error: {exc.message}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, NcDisintError, ValueError, TypeError, KeyError) as exc:
        print(f"ncdisint: invalid input: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(ser.dumps(out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
