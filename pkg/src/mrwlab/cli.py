"""Command-line front end: config ingestion, dispatch, deterministic reports.

Every run writes a ReportBundle: ``report.json`` (validated against the
shipped schema), CSV tables, and ``summary.txt``.  Identical configs
reproduce byte-identical JSON; there are no timestamps and all randomness
flows from the single top-level seed.

Exit codes: 0 all assertions pass, 1 identity failure, 2 configuration
error, 3 numerical non-convergence.
"""

import argparse
import csv
import importlib.resources
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    build_dual,
    model_zoo,
    stationary_distribution,
    stationary_drift,
    validate_spec,
)
from .errors import ConfigError, ModelValidationError, NonConvergenceError
from .factorization import check_substochastic, escape_probabilities, verify_factorization
from .measure import total_mass_matrix
from .simulate import (
    audit_flower_path,
    estimate_ladder_occupation,
    extract_strict_ascending,
    extract_weak_descending,
    flower_min_tail_mc,
    flower_min_tail_probability,
    simulate_flower,
    simulate_path,
)
from .theory import cross_validate, expected_ladder_epoch, joint_law_nu, ladder_stationary_exact

EXIT_OK = 0
EXIT_IDENTITY = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3

STOCHASTIC_COMMANDS = {"verify", "simulate", "counterexample"}


def _schema(name):
    ref = importlib.resources.files("mrwlab.schemas").joinpath(name)
    return json.loads(ref.read_text())


def load_config(path):
    """Read and schema-validate a run configuration."""
    import jsonschema

    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, _schema("config.schema.json"))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config does not match schema: {exc.message}") from exc
    return raw


def build_model(model_cfg):
    if "zoo" in model_cfg:
        try:
            return model_zoo(model_cfg["zoo"], **model_cfg.get("params", {}))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"unknown zoo model or bad params: {exc}") from exc
    if "inline" in model_cfg:
        return validate_spec(model_cfg["inline"])
    try:
        raw = json.loads(Path(model_cfg["path"]).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load model file: {exc}") from exc
    return validate_spec(raw)


def _to_plain(obj):
    """Recursively convert numpy scalars/arrays so json emits plain types."""
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


class ReportBundle:
    """Deterministic run artefacts: JSON report, CSV tables, text summary."""

    def __init__(self, command, config, seed):
        self.command = command
        self.config = config
        self.seed = seed
        self.results = {}
        self.checks = []
        self.tables = {}  # name -> (header, rows)
        self.summary = []

    def add_check(self, check_id, passed, observed, bound, note=""):
        self.checks.append(
            {
                "id": check_id,
                "passed": bool(passed),
                "observed": float(observed),
                "bound": float(bound),
                "note": note,
            }
        )

    @property
    def ok(self):
        return all(c["passed"] for c in self.checks)

    def report_dict(self):
        return _to_plain(
            {
                "command": self.command,
                "ok": self.ok,
                "seed": self.seed,
                "version": __version__,
                "config": self.config,
                "results": self.results,
                "checks": self.checks,
            }
        )

    def write(self, out_dir):
        import jsonschema

        report = self.report_dict()
        jsonschema.validate(report, _schema("report.schema.json"))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
        for name, (header, rows) in sorted(self.tables.items()):
            with open(out / f"{name}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows([_to_plain(list(r)) for r in rows])
        status = "PASS" if self.ok else "FAIL"
        lines = [f"mrwlab {self.command}: {status}"] + self.summary
        for c in self.checks:
            lines.append(
                f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['id']}: "
                f"observed={c['observed']:.6g} bound={c['bound']:.6g} {c['note']}".rstrip()
            )
        (out / "summary.txt").write_text("\n".join(lines) + "\n")


def cmd_validate(spec, options, seed, bundle):
    pi = stationary_distribution(spec)
    drift = stationary_drift(spec, pi)
    dual = build_dual(spec, pi)
    bundle.results = {
        "states": list(spec.states),
        "lattice_span": spec.span,
        "stationary": pi.as_dict(),
        "drift": drift.mu,
        "drift_positive": drift.positive,
        "dual_transition": dual.transition,
        "model": spec.to_json_dict(),
    }
    bundle.add_check("model_valid", True, 0.0, 1.0)
    bundle.tables["stationary"] = (
        ["state", "pi", "row_drift"],
        [
            [s, pi.pi[i], float(np.sum(spec.transition[i] * drift.per_transition[i]))]
            for i, s in enumerate(spec.states)
        ],
    )
    bundle.summary.append(f"states={spec.m} drift={drift.mu:.6g} positive={drift.positive}")
    return EXIT_OK if bundle.ok else EXIT_IDENTITY


def cmd_factorize(spec, options, seed, bundle):
    tol = float(options.get("tol", 1e-10))
    residual_tol = float(options.get("residual_tol", 1e-9))
    k0 = options.get("K")
    k_max = int(options.get("K_max", 2 ** 14))
    override = bool(options.get("override", False))
    pi = stationary_distribution(spec)
    rep = verify_factorization(
        spec, pi=pi, tol=residual_tol, solver_tol=tol, k_max=k_max, override=override
    )
    if k0 is not None:
        # Explicit K re-runs the ascending side at that band for inspection.
        from .factorization import strict_ascending_kernel

        rep_k = strict_ascending_kernel(spec, tol=tol, k0=int(k0), k_max=k_max, override=override)
        bundle.results["ascending_at_K"] = {
            "K": rep_k.K,
            "row_defect": rep_k.row_defect,
        }
    esc = escape_probabilities(spec, pi=pi, tol=tol, k_max=k_max, override=override)
    sub_asc = check_substochastic(rep.ascending.kernel)
    sub_desc = check_substochastic(rep.dual_descending.kernel)
    bundle.results.update(
        {
            "residual": rep.residual,
            "mass_residual": rep.mass_residual,
            "column_mass_residual": rep.column_mass_residual,
            "solver_defect": rep.solver_defect,
            "ascending": {
                "K": rep.ascending.K,
                "row_defect": rep.ascending.row_defect,
                "kernel": rep.ascending.kernel.as_json_dict(),
            },
            "dual_descending": {
                "K": rep.dual_descending.K,
                "row_defect": rep.dual_descending.row_defect,
                "kernel": rep.dual_descending.kernel.as_json_dict(),
            },
            "star": rep.star.as_json_dict(),
            "escape": {
                "lower": esc.lower,
                "upper": esc.upper,
                "c": esc.c,
                "support": list(esc.support()),
            },
        }
    )
    bundle.add_check("factorization_identity", rep.residual <= residual_tol, rep.residual, residual_tol)
    bundle.add_check("mass_matrix_identity", rep.mass_residual <= residual_tol, rep.mass_residual, residual_tol)
    bundle.add_check(
        "stationary_column_mass",
        rep.column_mass_residual <= residual_tol,
        rep.column_mass_residual,
        residual_tol,
    )
    bundle.add_check(
        "kernels_substochastic",
        sub_asc.ok and sub_desc.ok,
        max(sub_asc.max_row_mass, sub_desc.max_row_mass) - 1.0,
        1e-12,
    )
    masses_a = total_mass_matrix(rep.ascending.kernel)
    masses_s = total_mass_matrix(rep.star)
    bundle.tables["kernel_masses"] = (
        ["from", "to", "ascending_mass", "star_mass"],
        [
            [spec.states[i], spec.states[j], masses_a[i, j], masses_s[i, j]]
            for i in range(spec.m)
            for j in range(spec.m)
        ],
    )
    bundle.summary.append(
        f"residual={rep.residual:.3e} defect={rep.solver_defect:.3e} "
        f"K=({rep.ascending.K},{rep.dual_descending.K})"
    )
    return EXIT_OK if bundle.ok else EXIT_IDENTITY


def cmd_verify(spec, options, seed, bundle):
    report = cross_validate(
        spec,
        seed=seed,
        exact_tol=float(options.get("exact_tol", 1e-8)),
        solver_tol=float(options.get("solver_tol", 1e-10)),
        mc=bool(options.get("mc", True)),
        n_ladder=int(options.get("n_ladder", 2000)),
        reps=int(options.get("reps", 8)),
        sigma_reps=int(options.get("sigma_reps", 20000)),
        n_max=int(options.get("n_max", 24)),
        k_max=int(options.get("K_max", 2 ** 14)),
        override=bool(options.get("override", False)),
    )
    override = bool(options.get("override", False))
    lad = ladder_stationary_exact(spec, override=override)
    mean = expected_ladder_epoch(spec, override=override)
    nu = joint_law_nu(spec, n_max=int(options.get("n_max", 24)), ladder=lad, override=override)
    bundle.results = {
        "pi_ladder": lad.as_dict(),
        "c": lad.c,
        "c_bracket": list(lad.c_bracket),
        "support": list(lad.support),
        "mean_epoch": {s: float(v) for s, v in zip(spec.states, mean.value)},
        "nu_gap_marginal": nu.gap_marginal,
    }
    for c in report.checks:
        bundle.add_check(c.check_id, c.passed, c.observed, c.bound, c.note)
    bundle.tables["checks"] = (
        ["id", "passed", "observed", "bound", "note"],
        [[c.check_id, c.passed, c.observed, c.bound, c.note] for c in report.checks],
    )
    bundle.summary.append(
        f"{sum(c.passed for c in report.checks)}/{len(report.checks)} identities pass; "
        f"c={lad.c:.6g} support={lad.support}"
    )
    return EXIT_OK if bundle.ok else EXIT_IDENTITY


def cmd_simulate(spec, options, seed, bundle):
    initial = options.get("initial_state", spec.states[0])
    if initial not in spec.states:
        raise ConfigError(f"initial_state {initial!r} is not a state of the model")
    n_steps = int(options.get("n_steps", 10_000))
    path = simulate_path(spec, initial, n_steps, seed)
    asc = extract_strict_ascending(path)
    desc = extract_weak_descending(path)
    bundle.results = {
        "initial_state": initial,
        "n_steps": n_steps,
        "final_sum": path.partial_sums[-1],
        "n_ascending_epochs": asc.count - 1,
        "n_weak_descending_epochs": desc.count - 1,
        "ascending_states": np.asarray(spec.states, dtype=object)[asc.states].tolist(),
        "ascending_heights": asc.heights,
    }
    rows = [
        ["strict_ascending", int(k), int(e), spec.states[s], float(h)]
        for k, (e, s, h) in enumerate(zip(asc.epochs, asc.states, asc.heights))
    ] + [
        ["weak_descending", int(k), int(e), spec.states[s], float(h)]
        for k, (e, s, h) in enumerate(zip(desc.epochs, desc.states, desc.heights))
    ]
    bundle.tables["ladder"] = (["kind", "index", "epoch", "state", "height"], rows)
    bundle.add_check("path_simulated", True, 0.0, 1.0)
    if "occupation" in options:
        occ_opt = options["occupation"]
        occ = estimate_ladder_occupation(
            spec,
            initial,
            n_ladder=int(occ_opt.get("n_ladder", 2000)),
            burn_in=int(occ_opt.get("burn_in", 1)),
            seed=seed,
            reps=int(occ_opt.get("reps", 8)),
            horizon_cap=occ_opt.get("horizon_cap"),
            override=bool(options.get("override", False)),
        )
        bundle.results["occupation"] = {
            s: {"estimate": e.value, "std_error": e.standard_error}
            for s, e in occ.estimates.items()
        }
        bundle.results["occupation_complete"] = occ.complete
        bundle.tables["occupation"] = (
            ["state", "estimate", "std_error", "replicates", "params"],
            [
                [s, e.value, e.standard_error, e.replicates, json.dumps(e.params, sort_keys=True)]
                for s, e in occ.estimates.items()
            ],
        )
    bundle.summary.append(
        f"{n_steps} steps from {initial!r}: {asc.count - 1} ascents, final sum "
        f"{path.partial_sums[-1]:.6g}"
    )
    return EXIT_OK if bundle.ok else EXIT_IDENTITY


def cmd_counterexample(spec, options, seed, bundle):
    """Hub-and-petals audit: the model needs no spec (infinite state space)."""
    n_steps = int(options.get("n_steps", 100_000))
    N = int(options.get("N", 10_000))
    B = float(options.get("B", 100.0))
    reps = int(options.get("reps", 4000))
    primal = simulate_flower(n_steps, seed)
    audit_p = audit_flower_path(primal)
    dual = simulate_flower(n_steps, seed + 1, dual=True)
    audit_d = audit_flower_path(dual, dual=True)
    exact = flower_min_tail_probability(N, B)
    mc = flower_min_tail_mc(N, B, seed + 2, reps=reps)
    spread = max(mc.standard_error, 1e-12)
    bundle.results = {
        "n_steps": n_steps,
        "formula_failures_forward": audit_p.failures,
        "formula_failures_reversed": audit_d.failures,
        "reversed_min_over_n_minus_1": audit_d.min_shifted,
        "min_tail": {
            "N": N,
            "B": B,
            "exact": exact,
            "mc": mc.value,
            "mc_std_error": mc.standard_error,
            "replicates": reps,
        },
    }
    bundle.add_check("forward_formula_audit", audit_p.ok, audit_p.failures, 0.5)
    bundle.add_check("reversed_formula_audit", audit_d.ok, audit_d.failures, 0.5)
    bundle.add_check(
        "reversed_divergence_floor",
        audit_d.min_shifted >= 0.0,
        -audit_d.min_shifted,
        0.0,
        note="reversed sums never drop below n - 1",
    )
    bundle.add_check(
        "min_tail_mc_vs_exact",
        abs(mc.value - exact) <= 3.0 * spread,
        abs(mc.value - exact),
        3.0 * spread,
    )
    bundle.tables["min_tail"] = (
        ["N", "B", "exact", "estimate", "std_error", "replicates"],
        [[N, B, exact, mc.value, mc.standard_error, reps]],
    )
    bundle.summary.append(
        f"audited {n_steps} steps both directions; min-tail exact={exact:.6g} "
        f"mc={mc.value:.6g} (se={mc.standard_error:.2g})"
    )
    return EXIT_OK if bundle.ok else EXIT_IDENTITY


COMMANDS = {
    "validate": cmd_validate,
    "factorize": cmd_factorize,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "counterexample": cmd_counterexample,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="mrwlab",
        description="Ladder-variable toolkit for Markov-modulated lattice walks.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--out", default="mrwlab_out", help="report directory")
    parser.add_argument("--K", type=int, default=None, help="initial truncation band")
    parser.add_argument("--tol", type=float, default=None, help="solver tolerance")
    parser.add_argument("--K-max", dest="k_max", type=int, default=None, help="band ceiling")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        options = dict(config.get("options", {}))
        if args.K is not None:
            options["K"] = args.K
        if args.tol is not None:
            options["tol"] = args.tol
        if args.k_max is not None:
            options["K_max"] = args.k_max
        seed = args.seed if args.seed is not None else config.get("seed")
        if seed is None and args.command in STOCHASTIC_COMMANDS:
            raise ConfigError(f"command {args.command!r} is stochastic: a seed is required")
        if args.command == "counterexample":
            spec = None  # runs on the infinite hub-and-petals model directly
        else:
            if "model" not in config:
                raise ConfigError(f"command {args.command!r} requires a model entry")
            spec = build_model(config["model"])
        resolved = {"model": config.get("model"), "options": options, "seed": seed}
        bundle = ReportBundle(args.command, resolved, seed)
        code = COMMANDS[args.command](spec, options, seed, bundle)
        bundle.write(args.out)
        print((Path(args.out) / "summary.txt").read_text(), end="")
        return code
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelValidationError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
