"""Experiment runner: seeded, config-driven checks with CSV reports.

Usage:

    bsq <command> --config FILE [--out DIR] [--seed N] [--tol X]

Commands:

    bracket-check    three-way bracket comparison over (field pair, loop,
                     weight) instances; exits 0 iff every relative spread is
                     within tolerance
    identity-check   restricted-bracket identity and split-compatibility
                     residuals versus sample count
    flow             classical (implicit midpoint) or moduli (RK4) flow;
                     writes a trajectory table and optional state snapshots
    bs-scan          holonomy action and integer-level defect over a scaled
                     family of loops, locating the level-crossing radii
    qm-check         finite-dimensional quantum reference suite
    convergence      error-versus-N tables for derivatives, quadrature and
                     holonomy

Exit codes: 0 pass, 1 usage error, 2 config error, 3 numeric failure.
The environment variable BSQ_THREADS caps the number of worker threads used
for independent instances (default 1); outputs are written in instance
order, so results are byte-identical for a given config and seed.

Scalar fields in configs are expression strings over the grammar:
identifiers ``x``, ``y``; numeric literals and ``pi``; operators
``+ - * /`` and ``^`` with integer exponents; ``sin``/``cos`` of linear
forms ``a*x + b*y + c``.

Loop specs: ``{"type": "circle", "radius": r, "center": [x, y]}``,
``{"type": "ellipse", "a": ..., "b": ..., "center": ..., "angle": ...}``,
``{"type": "perturbed_circle", "radius": ..., "center": ...,
"harmonics": [[k, cos_amp, sin_amp], ...]}``; all accept ``"project": true``
to rescale onto the nearest integer level and ``"id"`` for report labels.
Weight specs: ``{"type": "uniform"}`` or ``{"type": "cosine",
"amplitude": a, "harmonic": k}``.  Surface specs: ``{"kind": "plane"}`` or
``{"kind": "torus", "periods": [Lx, Ly]}``, with optional
``"omega_density"`` expression (a matching ``"potential"`` pair of
expressions is then required for holonomy work).
"""

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .dynamics import flow_classical, flow_moduli
from .errors import ExpressionError, GeometryError
from .loops import (
    HalfDensity,
    Loop,
    action_integral,
    bs_defect,
    grid,
    integrate_density,
    loop_derivative,
    project_to_bs,
    sample_diagnostics,
)
from .moduli import ModuliPoint, omega_matrix
from .observables import (
    BRACKET_SIGN,
    bracket_report,
    compatibility_residuals,
    restriction_identity_residual,
)
from .quantum import (
    KAPPA_QM,
    HermitianObservable,
    StateVector,
    exact_flow,
    expectation,
    measure_kappa,
    projective_critical_check,
    schrodinger_flow_rk4,
)
from .surfaces import ScalarField, SymplecticSurface

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    """Raised for malformed or inconsistent config files."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def max_workers():
    raw = os.environ.get("BSQ_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _format(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows, header):
    """Write a CSV with a '#'-comment convention block, atomically."""
    lines = [f"# {key} = {_format(val)}" for key, val in header.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format(row[c]) for c in columns))
    payload = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _conventions(command, seed, tolerance):
    return {
        "package": f"bsmoduli {__version__}",
        "command": command,
        "sigma": BRACKET_SIGN,
        "kappa_qm": KAPPA_QM,
        "tolerance": tolerance,
        "seed": seed,
    }


def load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def build_field(text):
    if not isinstance(text, str):
        raise ConfigError(f"field spec must be an expression string, got {text!r}")
    try:
        return ScalarField.from_expression(text)
    except ExpressionError as exc:
        raise ConfigError(f"bad field expression {text!r}: {exc}") from exc


def build_surface(spec):
    if spec is None:
        return SymplecticSurface.plane()
    kind = spec.get("kind", "plane")
    density = None
    if "omega_density" in spec:
        density = build_field(spec["omega_density"])
    potential = None
    if "potential" in spec:
        pot = spec["potential"]
        if not isinstance(pot, (list, tuple)) or len(pot) != 2:
            raise ConfigError("potential must be a pair of expressions [a_x, a_y]")
        potential = (build_field(pot[0]), build_field(pot[1]))
    try:
        if kind == "plane":
            return SymplecticSurface.plane(omega_density=density, potential=potential)
        if kind == "torus":
            periods = spec.get("periods")
            if periods is None:
                raise ConfigError("torus surface requires periods [Lx, Ly]")
            return SymplecticSurface.torus(
                periods[0], periods[1], omega_density=density, potential=potential
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown surface kind {kind!r}")


def build_loop(spec, n, surface):
    kind = spec.get("type")
    center = tuple(spec.get("center", (0.0, 0.0)))
    try:
        if kind == "circle":
            loop = Loop.circle(spec["radius"], center=center, n=n,
                               orientation=spec.get("orientation", 1))
        elif kind == "ellipse":
            loop = Loop.ellipse(spec["a"], spec["b"], center=center, n=n,
                                angle=spec.get("angle", 0.0))
        elif kind == "perturbed_circle":
            harmonics = [tuple(h) for h in spec.get("harmonics", [])]
            loop = Loop.perturbed_circle(spec["radius"], center=center, n=n,
                                         harmonics=harmonics)
        else:
            raise ConfigError(f"unknown loop type {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"loop spec missing key {exc}") from exc
    if spec.get("project", False):
        loop = project_to_bs(loop, surface)
    return loop


def loop_label(spec, index):
    return str(spec.get("id", f"loop{index}"))


def build_density(spec, n):
    kind = spec.get("type", "uniform")
    if kind == "uniform":
        return HalfDensity.uniform(n)
    if kind == "cosine":
        return HalfDensity.cosine_profile(
            n, amplitude=spec.get("amplitude", 0.3), harmonic=spec.get("harmonic", 1)
        )
    raise ConfigError(f"unknown density type {kind!r}")


def density_label(spec, index):
    return str(spec.get("id", f"{spec.get('type', 'uniform')}{index}"))


def cmd_bracket_check(config, out_dir, seed, tolerance):
    tol = tolerance if tolerance is not None else config.get("tolerance", 1e-6)
    counts = [int(n) for n in config.get("sample_counts", [config.get("n_samples", 512)])]
    surface = build_surface(config.get("surface"))
    pairs = config.get("pairs", [])
    loop_specs = config.get("loops", [])
    density_specs = config.get("densities", [{"type": "uniform"}])
    scale = float(config.get("scale", 1.0))

    instances = []
    for n in counts:
        for li, lspec in enumerate(loop_specs):
            loop = build_loop(lspec, n, surface)
            for di, dspec in enumerate(density_specs):
                theta = build_density(dspec, n)
                point = ModuliPoint(surface, loop, theta)
                instances.append((loop_label(lspec, li), density_label(dspec, di), point))

    def run_instance(item):
        label_l, label_d, point = item
        n = point.n
        om = omega_matrix(point)
        singular = []
        if config.get("dump_singular_values", False):
            for idx, value in enumerate(np.sort(om.singular_values())[::-1]):
                singular.append(
                    {"loop": label_l, "density": label_d, "index": idx, "sigma_k": float(value)}
                )
        out = []
        for fs, gs in pairs:
            f = build_field(fs)
            g = build_field(gs)
            rep = bracket_report(f, g, point, om=om)
            for key in ("matrix", "closed_form", "target"):
                rep[key] *= scale * scale
            out.append(
                {
                    "f": fs,
                    "g": gs,
                    "loop": label_l,
                    "density": label_d,
                    "n": n,
                    "matrix": rep["matrix"],
                    "closed_form": rep["closed_form"],
                    "target": rep["target"],
                    "sigma": BRACKET_SIGN,
                    "rel_spread": rep["rel_spread"],
                    "status": "pass" if rep["rel_spread"] <= tol else "fail",
                }
            )
        return out, singular

    workers = min(max_workers(), max(1, len(instances)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_instance, instances))
    else:
        chunks = [run_instance(item) for item in instances]
    rows = [row for chunk, _ in chunks for row in chunk]
    singular_rows = [row for _, singular in chunks for row in singular]

    columns = ["f", "g", "loop", "density", "n", "matrix", "closed_form",
               "target", "sigma", "rel_spread", "status"]
    write_csv(
        os.path.join(out_dir, "bracket_check.csv"), columns, rows,
        _conventions("bracket-check", seed, tol),
    )
    if singular_rows:
        write_csv(
            os.path.join(out_dir, "omega_singular_values.csv"),
            ["loop", "density", "index", "sigma_k"], singular_rows,
            _conventions("bracket-check", seed, tol),
        )
    if any(not np.isfinite(row["rel_spread"]) for row in rows):
        return EXIT_NUMERIC
    return EXIT_OK if all(row["status"] == "pass" for row in rows) else EXIT_NUMERIC


def cmd_identity_check(config, out_dir, seed, tolerance):
    tol_point = tolerance if tolerance is not None else config.get("tolerance", 1e-8)
    tol_compat = float(config.get("tolerance_compat", 1e-12))
    surface = build_surface(config.get("surface"))
    counts = config.get("sample_counts", [config.get("n_samples", 256)])
    pairs = config.get("pairs", [])
    loop_specs = config.get("loops", [])

    rows = []
    for n in counts:
        n = int(n)
        for li, lspec in enumerate(loop_specs):
            loop = build_loop(lspec, n, surface)
            for fs, gs in pairs:
                f = build_field(fs)
                g = build_field(gs)
                res = np.max(np.abs(restriction_identity_residual(f, g, loop, surface)))
                c1, c2 = compatibility_residuals(f, g, loop, surface)
                m1 = float(np.max(np.abs(c1)))
                m2 = float(np.max(np.abs(c2)))
                ok = res <= tol_point and m1 <= tol_compat and m2 <= tol_compat
                rows.append(
                    {
                        "f": fs,
                        "g": gs,
                        "loop": loop_label(lspec, li),
                        "n": n,
                        "restriction_residual": float(res),
                        "compat_residual_1": m1,
                        "compat_residual_2": m2,
                        "status": "pass" if ok else "fail",
                    }
                )
    columns = ["f", "g", "loop", "n", "restriction_residual",
               "compat_residual_1", "compat_residual_2", "status"]
    write_csv(
        os.path.join(out_dir, "identity_check.csv"), columns, rows,
        _conventions("identity-check", seed, tol_point),
    )
    if config.get("dump_loop_diagnostics", False):
        diag_rows = []
        n = int(counts[-1])
        for li, lspec in enumerate(loop_specs):
            loop = build_loop(lspec, n, surface)
            table = sample_diagnostics(loop)
            for i in range(loop.n):
                diag_rows.append({
                    "loop": loop_label(lspec, li),
                    "i": i,
                    "s": table["s"][i],
                    "x": table["x"][i],
                    "y": table["y"][i],
                    "dxds": table["dxds"][i],
                    "dyds": table["dyds"][i],
                    "speed": table["speed"][i],
                })
        write_csv(
            os.path.join(out_dir, "loop_diagnostics.csv"),
            ["loop", "i", "s", "x", "y", "dxds", "dyds", "speed"], diag_rows,
            _conventions("identity-check", seed, tol_point),
        )
    return EXIT_OK if all(r["status"] == "pass" for r in rows) else EXIT_NUMERIC


def cmd_flow(config, out_dir, seed, tolerance):
    mode = config.get("mode", "classical")
    surface = build_surface(config.get("surface"))
    f = build_field(config["field"])
    t_final = float(config.get("t_final", 1.0))
    step = float(config.get("step", 1e-3))
    if mode == "classical":
        p0 = config.get("initial", [1.0, 0.0])
        traj = flow_classical(f, surface, p0, t_final, step)
        rows = [
            {"t": float(t), "x": float(p[0]), "y": float(p[1]), "f": float(v)}
            for t, p, v in zip(traj.times, traj.points, traj.values)
        ]
        write_csv(
            os.path.join(out_dir, "flow_classical.csv"),
            ["t", "x", "y", "f"], rows,
            _conventions("flow", seed, tolerance if tolerance is not None else 0.0),
        )
        return EXIT_OK
    if mode == "moduli":
        n = int(config.get("n_samples", 128))
        loop = build_loop(config["loop"], n, surface)
        theta = build_density(config.get("density", {"type": "uniform"}), n)
        p0 = ModuliPoint(surface, loop, theta)
        snapshot_every = int(config.get("snapshot_every", 0))
        traj = flow_moduli(f, p0, t_final, step, snapshot_every=snapshot_every)
        rows = [
            {
                "t": float(t),
                "F_f": float(v),
                "volume_defect": float(vd),
                "bs_defect": float(bd),
                "loop_checksum": int(cs),
            }
            for t, v, vd, bd, cs in zip(
                traj.times, traj.observable_values, traj.volume_defects,
                traj.bs_defects, traj.checksums,
            )
        ]
        write_csv(
            os.path.join(out_dir, "flow_moduli.csv"),
            ["t", "F_f", "volume_defect", "bs_defect", "loop_checksum"], rows,
            _conventions("flow", seed, tolerance if tolerance is not None else 0.0),
        )
        if snapshot_every > 0:
            snaps = [
                {"t": float(t), "state": point.to_dict()} for t, point in traj.snapshots
            ]
            path = os.path.join(out_dir, "flow_moduli_snapshots.json")
            payload = json.dumps(snaps, indent=1, sort_keys=True)
            with open(path, "w", newline="\n") as fh:
                fh.write(payload + "\n")
        return EXIT_OK
    raise ConfigError(f"unknown flow mode {mode!r}")


def cmd_bs_scan(config, out_dir, seed, tolerance):
    tol = tolerance if tolerance is not None else config.get("tolerance", 1e-9)
    surface = build_surface(config.get("surface"))
    n = int(config.get("n_samples", 256))
    spec = config.get("loop", {"type": "circle", "radius": 1.0})
    sweep = config.get("radii", {"start": 0.3, "stop": 1.5, "count": 61})
    values = np.linspace(float(sweep["start"]), float(sweep["stop"]), int(sweep["count"]))
    rows = []
    for r in values:
        if spec.get("type") == "circle":
            loop = Loop.circle(r, center=tuple(spec.get("center", (0.0, 0.0))), n=n)
        else:
            base = build_loop(spec, n, surface)
            center = base.points.mean(axis=0)
            loop = Loop(center + r * (base.points - center), winding=base.winding)
        action = action_integral(loop, surface)
        defect = bs_defect(loop, surface)
        rows.append(
            {
                "radius": float(r),
                "action": float(action),
                "defect": float(defect),
                "bs_hit": int(abs(defect) <= tol),
            }
        )
    write_csv(
        os.path.join(out_dir, "bs_scan.csv"),
        ["radius", "action", "defect", "bs_hit"], rows,
        _conventions("bs-scan", seed, tol),
    )
    return EXIT_OK


def cmd_qm_check(config, out_dir, seed, tolerance):
    tol = tolerance if tolerance is not None else config.get("tolerance", 1e-8)
    n = int(config.get("dimension", 4))
    instances = int(config.get("instances", 100))
    hbar = float(config.get("hbar", 1.0))
    t_final = float(config.get("t_final", 1.0))
    step = float(config.get("step", 1e-3))
    rng = np.random.default_rng(seed)

    rows = []

    def record(check, value, threshold):
        rows.append(
            {
                "check": check,
                "value": float(value),
                "threshold": float(threshold),
                "status": "pass" if value <= threshold else "fail",
            }
        )

    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    ham = HermitianObservable((raw + raw.conj().T) / 2)
    vec = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    psi = StateVector(vec / np.linalg.norm(vec), hbar=hbar)
    approx = schrodinger_flow_rk4(ham, psi, t_final, step)
    exact = exact_flow(ham, psi, t_final)
    record("flow_vs_exponential", np.max(np.abs(approx.amplitudes - exact.amplitudes)), tol)
    record("norm_drift", abs(approx.norm() - 1.0), 1e-9)
    record("energy_drift", abs(expectation(ham, approx) - expectation(ham, psi)), 1e-9)

    worst_residual = 0.0
    worst_value = 0.0
    eigvals, eigvecs = np.linalg.eigh(ham.matrix)
    for k in range(n):
        res, verr = projective_critical_check(ham, eigvecs[:, k], eigvals[k])
        worst_residual = max(worst_residual, res)
        worst_value = max(worst_value, verr)
    record("eigen_critical_residual", worst_residual, 1e-10)
    record("eigen_value_error", worst_value, 1e-10)

    kappa_mean, kappa_dev = measure_kappa(n=n, instances=instances, seed=seed, hbar=hbar)
    record("kappa_deviation", kappa_dev / abs(kappa_mean), 1e-10)
    rows.append(
        {"check": "kappa_mean", "value": float(kappa_mean), "threshold": float(KAPPA_QM),
         "status": "pass" if abs(kappa_mean - KAPPA_QM) <= 1e-10 else "fail"}
    )

    write_csv(
        os.path.join(out_dir, "qm_check.csv"),
        ["check", "value", "threshold", "status"], rows,
        _conventions("qm-check", seed, tol),
    )
    return EXIT_OK if all(r["status"] == "pass" for r in rows) else EXIT_NUMERIC


def _convergence_case(case, n):
    s = grid(n)
    if case == "derivative_bandlimited":
        u = np.sin(2 * np.pi * s)
        exact = 2 * np.pi * np.cos(2 * np.pi * s)
        return float(np.max(np.abs(loop_derivative(u) - exact)))
    if case == "derivative_analytic":
        u = 1.0 / (1.3 + np.sin(2 * np.pi * s))
        exact = -2 * np.pi * np.cos(2 * np.pi * s) / (1.3 + np.sin(2 * np.pi * s)) ** 2
        return float(np.max(np.abs(loop_derivative(u) - exact)))
    if case == "quadrature_analytic":
        u = 1.0 / (1.3 + np.sin(2 * np.pi * s))
        exact = 1.0 / np.sqrt(1.3**2 - 1.0)
        return float(abs(integrate_density(u) - exact))
    if case == "action_circle":
        surface = SymplecticSurface.plane()
        loop = Loop.circle(0.75, center=(0.2, -0.1), n=max(n, 16))
        return float(abs(action_integral(loop, surface) - np.pi * 0.75**2))
    if case == "bracket_spread":
        surface = SymplecticSurface.plane()
        m = max(n, 16)
        point = ModuliPoint(
            surface,
            Loop.circle(np.sqrt(1 / np.pi), center=(0.3, -0.2), n=m),
            HalfDensity.cosine_profile(m),
        )
        rep = bracket_report(build_field("x^2"), build_field("y"), point)
        return float(rep["rel_spread"])
    if case == "restriction_identity":
        surface = SymplecticSurface.plane()
        loop = Loop.ellipse(1.4, 0.7, center=(0.2, -0.1), n=max(n, 16))
        residual = restriction_identity_residual(
            build_field("sin(x)"), build_field("x*y"), loop, surface
        )
        return float(np.max(np.abs(residual)))
    raise ConfigError(f"unknown convergence case {case!r}")


def cmd_convergence(config, out_dir, seed, tolerance):
    cases = config.get(
        "cases",
        ["derivative_bandlimited", "derivative_analytic", "quadrature_analytic", "action_circle"],
    )
    counts = config.get("sample_counts", [16, 32, 64, 128, 256])
    rows = []
    for case in cases:
        for n in counts:
            rows.append({"case": case, "n": int(n), "error": _convergence_case(case, int(n))})
    write_csv(
        os.path.join(out_dir, "convergence.csv"),
        ["case", "n", "error"], rows,
        _conventions("convergence", seed, tolerance if tolerance is not None else 0.0),
    )
    return EXIT_OK


COMMANDS = {
    "bracket-check": cmd_bracket_check,
    "identity-check": cmd_identity_check,
    "flow": cmd_flow,
    "bs-scan": cmd_bs_scan,
    "qm-check": cmd_qm_check,
    "convergence": cmd_convergence,
}


def build_parser():
    parser = _Parser(prog="bsq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        config = load_config(args.config)
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object")
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        runner = COMMANDS[args.command]
        return runner(config, args.out, seed, args.tol)
    except ConfigError as exc:
        print(f"bsq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, TypeError, ValueError) as exc:
        print(f"bsq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"bsq: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"bsq: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
