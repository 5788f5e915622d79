"""Command-line driver: verify, minimize, degree, residual.

Every run is specified by one YAML configuration file; the only positional
arguments are the subcommand and that path.  Outputs land in the config's
``output_dir``: CSV tables for machine reading, structured-text summaries
for humans, and Wavefront-style meshes for viewers.  All files carry the
configuration hash in a leading comment line, and repeated runs with the
same file are byte-identical except for recorded wall time in summaries.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .config import parse_config_file
from .diagnostics import (
    brouwer_degree,
    first_variation_residual,
    injectivity_check,
)
from .discretization import Configuration, oriented_area_ratios
from .errors import (
    ConfigError,
    InfeasibleStartError,
    LineSearchStallError,
    MemsurfError,
)
from .mesh import save_mesh
from .minimizer import minimize
from .verification import run_all_checks

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_MAX_ITER = 3
EXIT_INFEASIBLE = 4
EXIT_RUNTIME = 5


def _write_csv(path, config_hash, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    repr(float(x)) if isinstance(x, (float, np.floating)) else x
                    for x in row
                ]
            )


def _write_text(path, config_hash, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(text)


def _cmd_verify(config, out):
    model = config.model()
    params = config.verify_params()
    reports = run_all_checks(
        model,
        seed=config.seed,
        convexity_samples=params["convexity_samples"],
        rotation_samples=params["rotation_samples"],
        stress_growth_samples=params["stress_growth_samples"],
        perturbation_samples=params["perturbation_samples"],
        perturbation_delta=params["perturbation_delta"],
        growth_samples=params["growth_samples"],
    )
    rows = [
        (r.check_name, r.samples, r.worst_violation, str(r.passed).lower())
        for r in reports
    ]
    _write_csv(
        os.path.join(out, "verify_summary.csv"),
        config.config_hash,
        ["check_name", "samples", "worst_violation", "passed"],
        rows,
    )
    for r in reports:
        _write_text(
            os.path.join(out, f"verify_{r.check_name}.txt"),
            config.config_hash,
            r.to_text(),
        )
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"{status}  {r.check_name}  worst_violation={r.worst_violation!r}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def _sample_degree_targets(mesh, config_obj, n, seed):
    """Deterministic interior target points: random barycentric draws."""
    rng = np.random.default_rng(seed)
    P = config_obj.positions[mesh.triangles]
    areas = np.abs(oriented_area_ratios(mesh, config_obj)) * mesh.ref_area
    prob = areas / areas.sum()
    idx = rng.choice(len(prob), size=n, p=prob)
    # Barycentric weights kept away from edges so targets are regular.
    w = rng.uniform(0.2, 0.6, size=(n, 3))
    w /= w.sum(axis=1, keepdims=True)
    return np.einsum("nv,nvi->ni", w, P[idx])


def _run_diagnostics(config, surface, mesh, config_obj, out, grad_tol):
    diag = config.diagnostics_params()
    model = config.model()
    lines = []
    if diag["injectivity"]:
        rep = injectivity_check(surface, mesh, config_obj)
        lines.append(f"injectivity_checked_pairs: {rep.checked_pairs}")
        lines.append(f"injectivity_overlapping_pairs: {rep.overlapping_pairs}")
        lines.append(f"injectivity_overlap_area: {rep.total_overlap_area!r}")
        lines.append(f"injective: {str(rep.injective).lower()}")
    if diag["degree_points"] > 0:
        targets = _sample_degree_targets(
            mesh, config_obj, diag["degree_points"], config.seed
        )
        rows = []
        agree = 0
        for t in targets:
            y = surface.project(t)
            res = brouwer_degree(surface, mesh, config_obj, y)
            agree += int(res.methods_agree)
            rows.append(
                (
                    float(y[0]),
                    float(y[1]),
                    float(y[2]),
                    res.degree,
                    res.mollified_integral,
                    str(res.methods_agree).lower(),
                )
            )
        _write_csv(
            os.path.join(out, "degree.csv"),
            config.config_hash,
            ["x", "y", "z", "degree", "mollified_integral", "methods_agree"],
            rows,
        )
        lines.append(f"degree_points: {len(rows)}")
        lines.append(f"degree_method_agreement: {agree}/{len(rows)}")
    if diag["residual_fields"] > 0:
        results = first_variation_residual(
            model,
            surface,
            mesh,
            config_obj,
            family_size=diag["residual_fields"],
            seed=config.seed,
        )
        rows = [
            (
                r.test_field_id,
                r.lagrangian_residual,
                r.eulerian_residual,
                r.normalization,
                str(r.admissible).lower(),
            )
            for r in results
        ]
        _write_csv(
            os.path.join(out, "residuals.csv"),
            config.config_hash,
            [
                "test_field_id",
                "lagrangian_residual",
                "eulerian_residual",
                "normalization",
                "admissible",
            ],
            rows,
        )
        worst = max(
            abs(r.lagrangian_residual) / max(r.normalization, 1e-300) for r in results
        )
        lines.append(f"residual_fields: {len(results)}")
        lines.append(f"max_normalized_residual: {worst!r}")
        lines.append(f"residual_within_10_grad_tol: {str(worst <= 10 * grad_tol).lower()}")
    return lines


def _cmd_minimize(config, out):
    surface = config.surface()
    model = config.model()
    mesh = config.mesh()
    f0 = config.initial_map(surface)
    options = config.minimize_options()
    try:
        final, report = minimize(model, surface, mesh, f0, options)
    except InfeasibleStartError as exc:
        print(f"infeasible start: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except LineSearchStallError as exc:
        print(f"line search stall: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    n_hist = len(report.energy_history)
    rows = []
    for k in range(n_hist):
        rows.append(
            (
                k,
                report.energy_history[k],
                report.grad_history[k] if k < len(report.grad_history) else float("nan"),
                report.min_j_history[k],
                report.step_history[k - 1] if 1 <= k <= len(report.step_history) else 0.0,
            )
        )
    _write_csv(
        os.path.join(out, "energy_history.csv"),
        config.config_hash,
        ["iteration", "energy", "grad_norm", "min_J", "step"],
        rows,
    )
    save_mesh(
        os.path.join(out, "reference_mesh.obj"),
        mesh.vertices,
        mesh.triangles,
        comments=[f"config_hash={config.config_hash}", "reference domain (z = 0)"],
    )
    save_mesh(
        os.path.join(out, "final_config.obj"),
        final.positions,
        mesh.triangles,
        comments=[f"config_hash={config.config_hash}", "deformed configuration"],
    )

    grad_tol = options.resolved_grad_tol(mesh)
    lines = [
        f"status: {report.status}",
        f"iterations: {report.iterations}",
        f"energy: {report.energy_history[-1]!r}",
        f"final_grad_norm: {report.final_grad_norm!r}",
        f"grad_tol: {grad_tol!r}",
        f"min_element_J: {report.min_element_j!r}",
        f"vertices: {mesh.num_vertices}",
        f"triangles: {mesh.num_triangles}",
        f"wall_time_s: {report.wall_time:.3f}",
    ]
    if report.status == "converged":
        lines += _run_diagnostics(config, surface, mesh, final, out, grad_tol)
    _write_text(
        os.path.join(out, "summary.txt"), config.config_hash, "\n".join(lines) + "\n"
    )
    for line in lines:
        print(line)
    return EXIT_OK if report.status == "converged" else EXIT_MAX_ITER


def _cmd_degree(config, out, point):
    surface = config.surface()
    mesh = config.mesh()
    f0 = config.initial_map(surface)
    config_obj = Configuration.from_map(surface, mesh, f0)
    y = surface.project(np.asarray(point, dtype=float))
    res = brouwer_degree(surface, mesh, config_obj, y)
    _write_csv(
        os.path.join(out, "degree.csv"),
        config.config_hash,
        ["x", "y", "z", "degree", "mollified_integral", "methods_agree"],
        [
            (
                float(y[0]),
                float(y[1]),
                float(y[2]),
                res.degree,
                res.mollified_integral,
                str(res.methods_agree).lower(),
            )
        ],
    )
    print(f"degree: {res.degree}")
    print(f"mollified_integral: {res.mollified_integral!r}")
    print(f"methods_agree: {str(res.methods_agree).lower()}")
    return EXIT_OK


def _cmd_residual(config, out):
    surface = config.surface()
    model = config.model()
    mesh = config.mesh()
    f0 = config.initial_map(surface)
    config_obj = Configuration.from_map(surface, mesh, f0)
    diag = config.diagnostics_params()
    results = first_variation_residual(
        model,
        surface,
        mesh,
        config_obj,
        family_size=max(1, diag["residual_fields"]),
        seed=config.seed,
    )
    rows = [
        (
            r.test_field_id,
            r.lagrangian_residual,
            r.eulerian_residual,
            r.normalization,
            str(r.admissible).lower(),
        )
        for r in results
    ]
    _write_csv(
        os.path.join(out, "residuals.csv"),
        config.config_hash,
        [
            "test_field_id",
            "lagrangian_residual",
            "eulerian_residual",
            "normalization",
            "admissible",
        ],
        rows,
    )
    worst = max(abs(r.lagrangian_residual) / max(r.normalization, 1e-300) for r in results)
    print(f"test_fields: {len(results)}")
    print(f"max_normalized_residual: {worst!r}")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="memsurf",
        description="Surface-constrained membrane energies: verification, "
        "minimization, and diagnostics.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap worker threads (results are independent of this value)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify", "minimize", "residual"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the YAML run configuration")
    p = sub.add_parser("degree")
    p.add_argument("config", help="path to the YAML run configuration")
    p.add_argument(
        "--point",
        nargs=3,
        type=float,
        required=True,
        metavar=("X", "Y", "Z"),
        help="ambient target point (projected onto the surface)",
    )
    args = parser.parse_args(argv)

    try:
        config = parse_config_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = config.output_dir
    os.makedirs(out, exist_ok=True)

    try:
        if args.command == "verify":
            return _cmd_verify(config, out)
        if args.command == "minimize":
            return _cmd_minimize(config, out)
        if args.command == "degree":
            return _cmd_degree(config, out, args.point)
        if args.command == "residual":
            return _cmd_residual(config, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleStartError as exc:
        print(f"infeasible start: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except MemsurfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    parser.error(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
