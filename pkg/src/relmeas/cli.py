"""Command-line entry point and scenario runner.

``relmeas run <scenario>`` executes the scenario's program against one
perspective ledger and prints a report; ``validate`` only loads it;
``demo <name>`` runs a bundled scenario.  Exit status is 0 on success,
2 on validation failure and 3 on a runtime error.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from importlib import resources

import numpy as np

from . import __version__, correl, lattice, linalg
from .errors import DirectiveError, InputError, RelmeasError
from .linalg import Tolerances
from .qstructs import ReadingScale, coarse_grain, distribution
from .report import complex_matrix, render
from .rqm import (
    CollapseSampler,
    CollapseSemantics,
    PerspectiveLedger,
    apply_interaction,
    cpl_match_probability,
    cpl_terms,
    joint_value_spectrum,
    relative_state,
    sequential_perspectives_run,
)
from .scenario import Scenario, load_scenario, parse_scenario
from .schemes import (
    induced_observable,
    is_d_ideal,
    is_first_kind,
    is_nondegenerate,
    is_repeatable,
    has_strong_value_correlation,
    mixture_residuals,
)

DEMOS = ("bell", "lueders-repeat", "cpl", "lattice")
EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3

CHAIN_NOTE = (
    "finite truncation of an increasing chain; in finite dimension the orthomodular law always holds, "
    "so this does not reproduce the infinite-dimensional failure"
)


class _Run:
    """Mutable state of one scenario execution."""

    def __init__(self, sc: Scenario, seed, semantics, tol: Tolerances):
        self.sc = sc
        self.seed = seed
        self.semantics = semantics
        self.tol = tol
        self.ledger = PerspectiveLedger()
        self._sampler = None

    @property
    def sampler(self):
        if self._sampler is None:
            self._sampler = CollapseSampler(self.seed)
        return self._sampler

    def scheme(self, name):
        return self.sc.schemes[name].scheme

    def scale(self, d, key, m):
        name = d.get(key)
        return self.sc.scales[name] if name is not None else ReadingScale.singletons(m.Z)

    def state(self, name):
        return self.sc.states[name].state

    def directive_semantics(self, d):
        return CollapseSemantics.parse(d["semantics"]) if "semantics" in d else self.semantics

    def relative_states(self, d):
        return [
            {"system": s, "perspective": p, "state": complex_matrix(relative_state(self.ledger, s, p).rho)}
            for s, p in d.get("relative_states", [])
        ]


def _dist(names, values):
    return {n: float(v) for n, v in zip(names, values)}


def _do_interact(r: _Run, d):
    m = r.scheme(d["scheme"])
    scale = r.scale(d, "scale", m)
    target, observer = d["target"], d["observer"]
    rho = r.state(d["state"]) if "state" in d else None
    if rho is not None and target not in r.ledger.initial:
        r.ledger = r.ledger.with_system(target, rho)
    if observer not in r.ledger.initial:
        r.ledger = r.ledger.with_system(observer, m.sigma)
    semantics = r.directive_semantics(d)
    name, r.ledger = apply_interaction(
        r.ledger,
        m,
        scale,
        target,
        observer,
        rho=rho,
        rng=r.sampler,
        semantics=semantics,
        collapse_pointer=d.get("collapse_pointer"),
        tol=r.tol,
    )
    ev = r.ledger.events[-1]
    return {
        "interaction": ev.interaction_id,
        "scheme": d["scheme"],
        "target": target,
        "observer": observer,
        "semantics": semantics.value,
        "bin": name,
        "probability": ev.probability,
        "distribution": _dist(ev.bin_names, ev.probabilities),
        "state_relative_to_observer": complex_matrix(ev.partner_state.rho),
        "target_state_for_third_parties": complex_matrix(ev.third_party_state.rho),
        "observer_state_for_third_parties": complex_matrix(ev.observer_state.rho),
        "relative_states": r.relative_states(d),
    }


def _do_sequential(r: _Run, d):
    stages = []
    for st in d["stages"]:
        m = r.scheme(st["scheme"])
        stages.append((m, r.scale(st, "scale", m), st["observer"]))
    target = d.get("target", "S")
    semantics = r.directive_semantics(d)
    trace = sequential_perspectives_run(r.ledger, stages, r.state(d["state"]), r.sampler, target, semantics, r.tol)
    r.ledger = trace.ledger
    out_stages = []
    for rec, st in zip(trace.stages, d["stages"]):
        ev = rec.event
        out_stages.append(
            {
                "stage": rec.stage,
                "scheme": st["scheme"],
                "observer": rec.observer,
                "bin": ev.bin,
                "probability": ev.probability,
                "distribution": _dist(ev.bin_names, ev.probabilities),
                "previous_partner_view": None if rec.partner_view is None else _dist(ev.bin_names, rec.partner_view),
                "state_relative_to_observer": complex_matrix(ev.partner_state.rho),
            }
        )
    tables = [
        {"rows": list(rows), "cols": list(cols), "table": table} for rows, cols, table in trace.biobservable_tables
    ]
    return {
        "target": target,
        "semantics": semantics.value,
        "stages": out_stages,
        "biobservable_tables": tables,
        "relative_states": r.relative_states(d),
    }


def _do_joint_spectrum(r: _Run, d):
    m = r.scheme(d["scheme"])
    scale = r.scale(d, "scale", m)
    rho = r.state(d["state"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        spec = joint_value_spectrum(m, scale, rho, r.tol)
    table = spec.table
    off = table - np.diag(np.diag(table))
    born = distribution(coarse_grain(induced_observable(m), scale), rho)
    return {
        "scheme": d["scheme"],
        "repeatable": is_repeatable(m, scale, r.tol),
        "bins": list(spec.names),
        "table": table,
        "off_diagonal_mass": float(np.abs(off).sum()),
        "diagonal_minus_born": float(np.max(np.abs(np.diag(table) - born))),
    }


def _do_cpl(r: _Run, d):
    m = r.scheme(d["scheme"])
    scale = r.scale(d, "scale", m)
    rho = r.state(d["state"])
    bob = r.scheme(d["bob"]) if d.get("bob") else None
    bob_scale = r.sc.scales[d["bob_scale"]] if d.get("bob_scale") else None
    terms = cpl_terms(m, scale, rho, bob, bob_scale, r.tol)
    return {
        "scheme": d["scheme"],
        "bins": list(terms.names),
        "alice": _dist(terms.names, terms.alice),
        "bob_on_uncollapsed_pointer": _dist(terms.names, terms.bob_unconditioned),
        "bob_on_collapsed_pointer": _dist(terms.names, terms.bob_given_alice),
        "match_probability": {
            sem.value: cpl_match_probability(m, scale, rho, sem, bob, bob_scale, r.tol) for sem in CollapseSemantics
        },
    }


def _do_correlate(r: _Run, d):
    st = r.sc.states[d["state"]].state
    obs = [r.sc.observables[n].observable for n in d["observables"]]
    scale_names = d.get("scales") or [None, None]
    scales = [
        r.sc.scales[n] if n is not None else ReadingScale.singletons(o) for n, o in zip(scale_names, obs)
    ]
    ea = [obs[0].effect_of(b) for b in scales[0].bins]
    eb = [obs[1].effect_of(b) for b in scales[1].bins]
    table = np.array([[np.real(np.trace(st.rho @ np.kron(x, y))) for y in eb] for x in ea])
    strong = [[correl.strongly_correlated_effects(st, x, y, r.tol) for y in eb] for x in ea]
    pairing = correl.strongly_correlated_observables(st, obs[0], scales[0], obs[1], scales[1], r.tol)
    out = {
        "observables": list(d["observables"]),
        "rows": list(scales[0].names),
        "cols": list(scales[1].names),
        "table": table,
        "strongly_correlated": strong,
        "pairing": pairing,
    }
    if d.get("values") is not None:
        coupling = correl.Coupling(scales[0].names, scales[1].names, table)
        corr = correl.correlation_coefficient(coupling, d["values"][0], d["values"][1], r.tol)
        out["correlation"] = {"coefficient": corr.coefficient, "covariance": corr.covariance}
    return out


def _do_schmidt(r: _Run, d):
    named = r.sc.states[d["state"]]
    dims = tuple(r.sc.spaces[n] for n in named.space)
    sd = correl.schmidt(named.vector, dims, r.tol)
    v = named.vector
    rho = np.outer(v, v.conj())
    rho_a = linalg.partial_trace(rho, dims, over="B")
    rho_b = linalg.partial_trace(rho, dims, over="A")
    groups = []
    for lam, n, p, q in zip(sd.lambdas, sd.multiplicities, sd.P, sd.R):
        groups.append(
            {
                "lambda": lam,
                "multiplicity": n,
                "P": complex_matrix(p),
                "R": complex_matrix(q),
                "strongly_correlated": correl.strongly_correlated_effects(rho, p, q, r.tol),
            }
        )
    return {
        "state": d["state"],
        "dims": list(dims),
        "groups": groups,
        "reconstruction_residual": float(np.linalg.norm(sd.vector() - v)),
        "reduced_A_residual": linalg.op_distance(rho_a, sum(l * l * p for l, p in zip(sd.lambdas, sd.P))),
        "reduced_B_residual": linalg.op_distance(rho_b, sum(l * l * q for l, q in zip(sd.lambdas, sd.R))),
    }


def _do_lattice(r: _Run, d):
    dim = d["dim"]
    w = lattice.boolean_failure_witness(dim, r.tol)
    out = {
        "dim": dim,
        "witness": {
            "dim_a": w.a.dim,
            "dim_b": w.b.dim,
            "disjoint": w.disjoint,
            "orthogonal": w.orthogonal,
            "incompatible": w.incompatible,
            "b_relevant_to_a": w.b_relevant,
            "ortho_b_relevant_to_a": w.b_perp_relevant,
            "certified": w.certified,
        },
    }
    n = d.get("random_pairs", 0)
    if n:
        seed = d.get("seed", r.seed if r.seed is not None else 0)
        rng = np.random.default_rng(seed)
        pairs = [lattice.random_nested_pair(dim, rng) for _ in range(n)]
        verdict = lattice.check_orthomodularity(pairs, r.tol)
        monotone = all(lattice.is_relevant(a, b, r.tol) for a, b in pairs)
        out["orthomodular"] = {
            "pairs": n,
            "holds": verdict.holds,
            "max_residual": verdict.max_residual,
            "failures": len(verdict.counterexamples),
        }
        out["relevance_monotone"] = monotone
    if d.get("truncated_chain", False):
        _, residuals = lattice.truncated_chain(dim, r.tol)
        out["truncated_chain"] = {"length": dim, "max_residual": max(residuals), "note": CHAIN_NOTE}
    return out


def _do_properties(r: _Run, d):
    m = r.scheme(d["scheme"])
    scale = r.scale(d, "scale", m)
    e = coarse_grain(induced_observable(m), scale)
    out = {
        "scheme": d["scheme"],
        "bins": list(scale.names),
        "induced_effects": {n: complex_matrix(e.effect(n)) for n in e.outcomes},
        "first_kind": is_first_kind(m, scale, r.tol),
        "repeatable": is_repeatable(m, scale, r.tol),
        "strong_value_correlation": has_strong_value_correlation(m, scale, tol=r.tol),
        "nondegenerate": is_nondegenerate(m),
        "d_ideal": is_d_ideal(m, scale, r.tol),
    }
    if "state" in d:
        res = mixture_residuals(m, r.state(d["state"]), scale, r.tol)
        out["mixture"] = {
            "system_residual": res["system"],
            "apparatus_residual": res["apparatus"],
            "component_overlap": res["overlap"],
            "system_decomposes": res["system"] <= r.tol.eq_tol,
            "apparatus_decomposes": res["apparatus"] <= r.tol.eq_tol,
            "components_orthogonal": res["overlap"] <= r.tol.eq_tol,
        }
    return out


HANDLERS = {
    "interact": _do_interact,
    "sequential": _do_sequential,
    "joint-spectrum": _do_joint_spectrum,
    "cpl-check": _do_cpl,
    "correlate": _do_correlate,
    "schmidt": _do_schmidt,
    "lattice-check": _do_lattice,
    "properties": _do_properties,
}


def run(sc: Scenario, seed=None, semantics=None, tol: Tolerances | None = None) -> dict:
    """Execute the program and return the report as a plain dict.

    ``seed`` and ``semantics`` override the scenario's values.  A failing
    directive raises :class:`DirectiveError` carrying its index.
    """
    tol = tol or linalg.load_tolerances()
    seed = sc.seed if seed is None else int(seed)
    semantics = sc.semantics if semantics is None else CollapseSemantics.parse(semantics)
    r = _Run(sc, seed, semantics, tol)
    results = []
    for i, d in enumerate(sc.program):
        op = d["op"]
        try:
            body = HANDLERS[op](r, d)
        except RelmeasError as exc:
            raise DirectiveError(i, op, exc) from exc
        results.append({"index": i, "op": op, **body})
    return {
        "tool": "relmeas",
        "version": __version__,
        "scenario_version": sc.version,
        "seed": seed,
        "semantics": semantics.value,
        "sampler": CollapseSampler.ALGORITHM,
        "tolerances": tol.as_dict(),
        "results": results,
    }


def demo_text(name: str) -> str:
    if name not in DEMOS:
        raise ValueError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return resources.files("relmeas").joinpath("demos", f"{name}.json").read_text(encoding="utf-8")


def _parser():
    p = argparse.ArgumentParser(prog="relmeas", description="Run measurement-scheme scenarios.")
    p.add_argument("--version", action="version", version=f"relmeas {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def output_options(sp):
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--semantics", choices=["local", "global"], default=None)
        sp.add_argument("--out", default=None, help="write the report here instead of stdout")
        sp.add_argument("--format", choices=["json", "tsv"], default="json")

    run_p = sub.add_parser("run", help="run a scenario file")
    run_p.add_argument("scenario")
    output_options(run_p)
    val_p = sub.add_parser("validate", help="load and validate a scenario file")
    val_p.add_argument("scenario")
    demo_p = sub.add_parser("demo", help="run a bundled demo scenario")
    demo_p.add_argument("name", choices=DEMOS)
    output_options(demo_p)
    return p


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        tol = linalg.load_tolerances()
        if args.command == "demo":
            sc = parse_scenario(demo_text(args.name), tol)
        else:
            sc = load_scenario(args.scenario, tol)
        if args.command == "validate":
            print(f"ok: {len(sc.program)} directives")
            return EXIT_OK
        report = run(sc, args.seed, args.semantics, tol)
        _emit(render(report, args.format), args.out)
        return EXIT_OK
    except DirectiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION if isinstance(exc.cause, InputError) else EXIT_RUNTIME
    except InputError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RelmeasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
