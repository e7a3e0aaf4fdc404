"""Command-line interface.

Subcommands expose the library: graph enumeration dumps, series coefficient
tables, virial and free-energy tables, convergence certificates, and the
validation suites.  A config file (INI sections per module) supplies model
parameters; flags override file values.  All outputs are plain text (CSV or
key=value records) and are byte-reproducible for a fixed seed.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import sys

from .expansion import (
    ExpansionParams,
    block_cancellation_residuals,
    convergence_certificate,
    free_energy_density,
    log_Z_canonical,
    thermo_limit_sweep,
    virial_pressure,
)
from .graphs import (
    enumerate_connected,
    enumerate_graphs,
    enumerate_trees,
    enumerate_two_connected,
    graph_to_text,
    is_connected,
    is_two_connected,
)
from .integrals import ZetaEvaluator, beta_n
from .potentials import BoxGeometry, make_potential


class UsageError(SystemExit):
    def __init__(self, message):
        print("error: %s" % message, file=sys.stderr)
        super().__init__(2)


_DEFAULTS = {
    "potential": {"kind": "hard_core", "sigma": "0.1"},
    "box": {"dimension": "1", "side": "10.0"},
    "expansion": {"N": "4", "beta": "1.0", "n_max": "3", "M": "8", "a": "1.0", "c": "0.25"},
    "run": {"seed": "0", "method": "auto", "samples": "200000", "batches": "32", "budget": "1e-3"},
    "virial": {"m_max": "2", "rho_grid": "0.1,0.2,0.3,0.4,0.5", "domain_radius": "12.0"},
}


def load_config(path=None):
    cfg = configparser.ConfigParser()
    cfg.read_dict(_DEFAULTS)
    if path:
        read = cfg.read(path)
        if not read:
            raise UsageError("config file not found: %s" % path)
    return cfg


def build_potential(cfg):
    sect = cfg["potential"]
    kind = sect.get("kind")
    params = {k: float(v) for k, v in sect.items() if k != "kind"}
    try:
        return make_potential(kind, params)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError("potential: %s" % exc)


def build_box(cfg):
    sect = cfg["box"]
    try:
        return BoxGeometry(dimension=sect.getint("dimension"), side=sect.getfloat("side"))
    except ValueError as exc:
        raise UsageError("box: %s" % exc)


def build_params(cfg):
    sect = cfg["expansion"]
    try:
        return ExpansionParams(
            N=sect.getint("N"),
            box=build_box(cfg),
            beta=sect.getfloat("beta"),
            n_max=sect.getint("n_max"),
            M=sect.getint("M"),
            a=sect.getfloat("a"),
            c=sect.getfloat("c"),
        )
    except ValueError as exc:
        raise UsageError("expansion: %s" % exc)


def build_evaluator(cfg, args):
    run = cfg["run"]
    seed = args.seed if args.seed is not None else run.getint("seed")
    return ZetaEvaluator(
        build_box(cfg),
        build_potential(cfg),
        cfg["expansion"].getfloat("beta"),
        method=run.get("method"),
        mc_samples=run.getint("samples"),
        mc_batches=run.getint("batches"),
        seed=seed,
    )


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _records(pairs_list):
    buf = io.StringIO()
    for pairs in pairs_list:
        buf.write(" ".join("%s=%s" % (k, v) for k, v in pairs))
        buf.write("\n")
    return buf.getvalue()


def _csv_table(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(str(x) for x in row) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands

def cmd_enumerate(args, cfg):
    kinds = {
        "graphs": enumerate_graphs,
        "connected": enumerate_connected,
        "two-connected": enumerate_two_connected,
        "trees": enumerate_trees,
    }
    if args.kind not in kinds:
        raise UsageError("unknown kind %r" % args.kind)
    lines = [graph_to_text(g) for g in kinds[args.kind](args.n)]
    text = "".join(line + "\n" for line in lines) + "count=%d\n" % len(lines)
    _emit(args, text)
    return 0


def cmd_coeffs(args, cfg):
    params = build_params(cfg)
    potential = build_potential(cfg)
    ze = build_evaluator(cfg, args)
    report = log_Z_canonical(params, potential, ze)
    if args.format == "records":
        head, rows = report.to_records()
        pairs = [sorted(head.items())] + [sorted(r.items()) for r in rows]
        _emit(args, _records(pairs))
    else:
        _emit(args, report.to_csv())
    return 0


def _virial_coefficients(cfg, args):
    potential = build_potential(cfg)
    box = build_box(cfg)
    run = cfg["run"]
    vir = cfg["virial"]
    beta = cfg["expansion"].getfloat("beta")
    m_max = vir.getint("m_max")
    seed = args.seed if args.seed is not None else run.getint("seed")
    radius = vir.getfloat("domain_radius") if math.isinf(potential.interaction_range) else None
    coeffs = {}
    results = {}
    for m in range(1, m_max + 1):
        r = beta_n(
            m,
            potential,
            beta,
            box.dimension,
            domain_radius=radius,
            mc_samples=run.getint("samples"),
            mc_batches=run.getint("batches"),
            seed=seed,
        )
        coeffs[m] = r.value
        results[m] = r
    return coeffs, results


def cmd_virial(args, cfg):
    coeffs, results = _virial_coefficients(cfg, args)
    vir = cfg["virial"]
    rows = []
    for m in sorted(coeffs):
        # the (m+1)-th pressure coefficient in the density series
        B_next = -m / (m + 1) * coeffs[m]
        rows.append((m, repr(coeffs[m]), repr(B_next), results[m].method, repr(results[m].statistical_error)))
    table = _csv_table(("m", "beta_m", "B_m_plus_1", "method", "error"), rows)
    grid = [float(x) for x in vir.get("rho_grid").split(",")]
    prows = [(repr(r), repr(virial_pressure(r, coeffs, max(coeffs)))) for r in grid]
    table += _csv_table(("rho", "beta_p"), prows)
    _emit(args, table)
    return 0


def cmd_free_energy(args, cfg):
    coeffs, _ = _virial_coefficients(cfg, args)
    grid = [float(x) for x in cfg["virial"].get("rho_grid").split(",")]
    rows = [(repr(r), repr(free_energy_density(r, coeffs, max(coeffs)))) for r in grid]
    _emit(args, _csv_table(("rho", "beta_f"), rows))
    return 0


def cmd_kp_check(args, cfg):
    params = build_params(cfg)
    potential = build_potential(cfg)
    cert = convergence_certificate(params, potential)
    pairs = [
        [
            ("certificate", "smallness"),
            ("holds", cert.holds),
            ("delta_prime", repr(cert.delta_prime)),
            ("delta", repr(cert.delta)),
            ("rate_L", repr(cert.rate_L)),
            ("a", repr(cert.a)),
            ("c", repr(cert.c)),
            ("rho", repr(cert.rho)),
            ("C_beta", repr(cert.c_beta_value)),
            ("status", "PASS" if cert.holds else "FAIL"),
        ]
    ]
    _emit(args, _records(pairs))
    return 0 if cert.holds else 1


def _suite_cancellation():
    from .graphs import enumerate_graphs as eg

    failures = []
    for k in (3, 4):
        for g in eg(k):
            if g.n_edges == 0 or not is_connected(g) or is_two_connected(g):
                continue
            res = block_cancellation_residuals(g, 6)
            for mono, coeff in res.items():
                if coeff != 0:
                    failures.append((graph_to_text(g), mono))
    return ("cancellation", not failures, "residuals=0" if not failures else "%d nonzero" % len(failures))


def _suite_oracle(cfg, args):
    from .oracles import compare_expansion_vs_oracle

    params = build_params(cfg)
    potential = build_potential(cfg)
    budget = cfg["run"].getfloat("budget")
    audit = compare_expansion_vs_oracle(params, potential, budget=budget)
    return (
        "oracle",
        audit.passed,
        "discrepancy=%r declared=%r budget=%r" % (audit.discrepancy, audit.declared_budget, budget),
    )


def _suite_kp(cfg, args):
    params = build_params(cfg)
    cert = convergence_certificate(params, build_potential(cfg))
    return ("kp", cert.holds, "delta_prime=%r" % cert.delta_prime)


def _suite_limits(cfg, args):
    potential = build_potential(cfg)
    beta = cfg["expansion"].getfloat("beta")
    sweep = thermo_limit_sweep(1, [5, 10, 20, 40], potential, beta, cfg["expansion"].getint("M"))
    ratios = [r["error_ratio"] for r in sweep["rows"][1:]]
    ok = all(1.5 <= r <= 2.5 for r in ratios)
    return ("limits", ok, "ratios=%s" % ",".join("%.3f" % r for r in ratios))


def cmd_validate(args, cfg):
    suites = {
        "cancellation": lambda: _suite_cancellation(),
        "oracle": lambda: _suite_oracle(cfg, args),
        "kp": lambda: _suite_kp(cfg, args),
        "limits": lambda: _suite_limits(cfg, args),
    }
    if args.suite == "all":
        selected = list(suites)
    elif args.suite in suites:
        selected = [args.suite]
    else:
        raise UsageError("unknown suite %r" % args.suite)
    lines = []
    all_ok = True
    for name in selected:
        label, ok, detail = suites[name]()
        all_ok &= ok
        lines.append([("suite", label), ("status", "PASS" if ok else "FAIL"), ("detail", detail)])
    lines.append([("overall", "PASS" if all_ok else "FAIL")])
    _emit(args, _records(lines))
    return 0 if all_ok else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="canonexp",
        description="Cluster-expansion tools for the fixed-density ensemble.",
    )
    parser.add_argument("--config", help="INI config file with model parameters")
    parser.add_argument("--seed", type=int, help="seed for any sampling-backed computation")
    parser.add_argument("--workers", type=int, default=1, help="worker-count knob (recorded)")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("csv", "records"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="dump labeled graph families in text form")
    p.add_argument("kind", choices=("graphs", "connected", "two-connected", "trees"))
    p.add_argument("n", type=int)
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("coeffs", help="per-order series coefficient table")
    p.set_defaults(fn=cmd_coeffs)

    p = sub.add_parser("virial", help="virial coefficients and pressure table")
    p.set_defaults(fn=cmd_virial)

    p = sub.add_parser("free-energy", help="free-energy density table")
    p.set_defaults(fn=cmd_free_energy)

    p = sub.add_parser("kp-check", help="convergence certificate for the configured model")
    p.set_defaults(fn=cmd_kp_check)

    p = sub.add_parser("validate", help="run a validation suite")
    p.add_argument("suite", choices=("all", "cancellation", "oracle", "kp", "limits"))
    p.set_defaults(fn=cmd_validate)

    args = parser.parse_args(argv)
    cfg = load_config(args.config)
    return args.fn(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
