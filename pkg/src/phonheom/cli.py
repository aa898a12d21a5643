"""Batch front-end: config parsing, subcommand dispatch and CSV emission.

Subcommands: run, bath-table, lambda-t, oracle-moments, oracle-discrete,
compare. All physical parameters come from a flat JSON config file; every
missing key falls back to the benchmark defaults, unknown keys are
rejected. The effective config is echoed next to each output so runs are
reproducible from the artifacts alone.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import bath, hierarchy, oracle, propagator, system

DEFAULTS = {
    # bath density: "ohmic_circular" (strength, cutoff) or "discrete"
    "density": "ohmic_circular",
    "coupling_strength": 1.0,       # V_I (eV)
    "bath_cutoff": 4.0,             # hbar*Omega (eV)
    "mode_freqs": [],               # discrete density only (eV)
    "mode_couplings": [],           # discrete density only (eV)
    "beta": "zero",                 # inverse temperature (1/eV) or "zero"
    "basis": "bessel",              # expansion basis: "bessel" or "discrete"
    "basis_size": 10,               # K (bessel basis)
    "n_max": 5,                     # hierarchy truncation
    "omega_s": 2.0,                 # hbar*omega_S (eV)
    "q_min": -5.5,                  # grid bounds (units of q_S)
    "q_max": 5.5,
    "dq": 0.25,
    "q0": -1.0,                     # initial Gaussian (q_S units)
    "sigma0": 0.7071067811865476,
    "p0": 0.0,
    "dt": 0.003125,                 # integrator step (1/eV)
    "steps": 1280,
    "stride": 16,                   # output every `stride` steps
    "quad_nodes": 256,
    "oracle_modes": 2048,           # bath discretization for oracle-moments
    "oracle_cutoffs": [10, 10],     # per-mode occupations for oracle-discrete
}

CSV_FLOAT = "{:.17g}"


class ConfigError(Exception):
    pass


def parse_config(path):
    """Load a flat JSON config, fill defaults, reject unknown keys."""
    cfg = dict(DEFAULTS)
    if path is not None:
        with open(path) as f:
            text = f.read().strip()
        user = json.loads(text) if text else {}
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(user) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(user)
    _validate(cfg)
    return cfg


def _validate(cfg):
    def positive(key):
        if not (isinstance(cfg[key], (int, float)) and cfg[key] > 0):
            raise ConfigError(f"{key} must be positive, got {cfg[key]!r}")

    for key in ("coupling_strength", "bath_cutoff", "omega_s", "dq", "dt",
                "sigma0", "quad_nodes", "oracle_modes"):
        positive(key)
    if cfg["density"] not in ("ohmic_circular", "discrete"):
        raise ConfigError(f"density must be ohmic_circular or discrete, got {cfg['density']!r}")
    if cfg["basis"] not in ("bessel", "discrete"):
        raise ConfigError(f"basis must be bessel or discrete, got {cfg['basis']!r}")
    if cfg["beta"] != "zero" and not (isinstance(cfg["beta"], (int, float)) and cfg["beta"] > 0):
        raise ConfigError(f'beta must be positive or "zero", got {cfg["beta"]!r}')
    if cfg["n_max"] < 0 or cfg["steps"] < 0 or cfg["stride"] < 1 or cfg["basis_size"] < 1:
        raise ConfigError("n_max/steps must be >= 0, stride/basis_size >= 1")
    if cfg["q_max"] <= cfg["q_min"]:
        raise ConfigError("q_max must exceed q_min")
    if len(cfg["mode_freqs"]) != len(cfg["mode_couplings"]):
        raise ConfigError("mode_freqs and mode_couplings must pair up")


def _density(cfg):
    if cfg["density"] == "discrete":
        if not cfg["mode_freqs"]:
            raise ConfigError("discrete density needs mode_freqs/mode_couplings")
        return bath.SpectralDensity(
            kind="discrete",
            mode_freqs=tuple(cfg["mode_freqs"]),
            mode_couplings=tuple(cfg["mode_couplings"]),
        )
    return bath.SpectralDensity(
        kind="ohmic_circular",
        strength=cfg["coupling_strength"],
        cutoff=cfg["bath_cutoff"],
    )


def _beta(cfg):
    return math.inf if cfg["beta"] == "zero" else float(cfg["beta"])


def _basis(cfg):
    if cfg["basis"] == "discrete":
        if not cfg["mode_freqs"]:
            raise ConfigError("discrete basis needs mode_freqs/mode_couplings")
        return bath.discrete_exponential_basis(
            tuple(cfg["mode_freqs"]), tuple(cfg["mode_couplings"]))
    return bath.bessel_basis(cfg["basis_size"], cfg["bath_cutoff"])


def _grid(cfg):
    return system.Grid(cfg["q_min"], cfg["q_max"], cfg["dq"])


def _system_spec(cfg, density):
    kappa = system.counter_term_coefficient(density, cfg["quad_nodes"])
    return system.SystemSpec(omega_s=cfg["omega_s"], counter=kappa)


def _output_times(cfg):
    """The time stamps the propagator records: t=0, every stride, the end."""
    dt, steps, stride = cfg["dt"], cfg["steps"], cfg["stride"]
    stamps = [0.0]
    stamps += [s * dt for s in range(1, steps + 1) if s % stride == 0 or s == steps]
    return np.asarray(stamps)


def trajectory_header(n_max):
    return (["t_eVinv", "wSt", "xi_q", "xi_p", "xi_qq", "xi_pp", "norm"]
            + [f"w{n}" for n in range(n_max + 1)]
            + ["n_mean", "raw_xi_q", "raw_xi_p", "raw_xi_qq", "raw_xi_pp"])


def write_csv(path, header, rows):
    """Comma-separated, one header row, LF endings, 17 significant digits."""
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(CSV_FLOAT.format(float(x)) for x in row) + "\n")


def read_csv(path):
    """Trajectory CSV back into {column: array}; 'nan' round-trips."""
    with open(path) as f:
        header = f.readline().rstrip("\n").split(",")
        data = [[float(x) for x in line.rstrip("\n").split(",")]
                for line in f if line.strip()]
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise ValueError(f"{path}: ragged CSV")
    return {name: arr[:, i] for i, name in enumerate(header)}


def _echo_config(cfg, out_path):
    with open(out_path + ".config.json", "w") as f:
        json.dump(cfg, f, indent=2, sort_keys=True)
        f.write("\n")


def _trajectory_rows(cfg, a):
    """Assemble CSV rows from trajectory arrays (dict from as_arrays)."""
    rows = []
    for i, t in enumerate(a["times"]):
        row = [t, cfg["omega_s"] * t, a["xi_q"][i], a["xi_p"][i],
               a["xi_qq"][i], a["xi_pp"][i], a["norm"][i]]
        row += list(a["weights"][i])
        row += [a["n_mean"][i], a["raw_xi_q"][i], a["raw_xi_p"][i],
                a["raw_xi_qq"][i], a["raw_xi_pp"][i]]
        rows.append(row)
    return rows


def _maybe_plot(args, out, data, phonons=True):
    if not getattr(args, "plot", False):
        return
    from . import plotting

    base = out[:-4] if out.endswith(".csv") else out
    plot_files = [base + "_moments.png"]
    plotting.plot_moments(data, plot_files[0])
    if phonons and plotting.plot_phonons(data, base + "_phonons.png"):
        plot_files.append(base + "_phonons.png")
    print("plots: " + ", ".join(plot_files))


def cmd_run(args):
    cfg = parse_config(args.config)
    density = _density(cfg)
    beta = _beta(cfg)
    basis = _basis(cfg)
    spec_b = bath.BathSpec(density=density, beta=beta)
    coeffs = bath.bath_coefficients(spec_b, basis, cfg["quad_nodes"])
    grid = _grid(cfg)
    sysspec = _system_spec(cfg, density)
    space = hierarchy.enumerate_space(basis.size, cfg["n_max"])
    mem = propagator.memory_estimate(space.size, grid.size)
    print(f"hierarchy: {space.size} states x {grid.size} grid points, "
          f"~{mem / 1e6:.1f} MB propagation buffers")
    phi = system.initial_gaussian(cfg["q0"], cfg["sigma0"], cfg["p0"], grid)
    op = propagator.HeomOperator(space, coeffs, sysspec, grid)
    pcfg = propagator.PropagationConfig(cfg["dt"], cfg["steps"], cfg["stride"])
    traj, _ = propagator.propagate(pcfg, op, phi)
    a = traj.as_arrays()
    out = args.out or "run.csv"
    write_csv(out, trajectory_header(cfg["n_max"]), _trajectory_rows(cfg, a))
    _echo_config(cfg, out)
    print(f"wrote {out}")
    _maybe_plot(args, out, read_csv(out))
    return 0


def cmd_bath_table(args):
    cfg = parse_config(args.config)
    spec_b = bath.BathSpec(density=_density(cfg), beta=_beta(cfg))
    coeffs = bath.bath_coefficients(spec_b, _basis(cfg), cfg["quad_nodes"])
    out = args.out or "bath_table.csv"
    write_csv(out, ["k", "lambda_k"],
              [[k + 1, lam] for k, lam in enumerate(coeffs.lam)])
    _echo_config(cfg, out)
    print(f"wrote {out}")
    return 0


def cmd_lambda_t(args):
    cfg = parse_config(args.config)
    density = _density(cfg)
    spec_b = bath.BathSpec(density=density, beta=_beta(cfg))
    coeffs = bath.bath_coefficients(spec_b, _basis(cfg), cfg["quad_nodes"])
    rows = []
    for t in _output_times(cfg):
        lam = bath.lambda_cross(t, coeffs, spec_b, cfg["quad_nodes"])
        for k in range(coeffs.size):
            for kp in range(coeffs.size):
                rows.append([t, k + 1, kp + 1, lam[k, kp].real, lam[k, kp].imag])
    out = args.out or "lambda_t.csv"
    write_csv(out, ["t_eVinv", "k", "kp", "re", "im"], rows)
    _echo_config(cfg, out)
    print(f"wrote {out}")
    return 0


def cmd_oracle_moments(args):
    cfg = parse_config(args.config)
    density = _density(cfg)
    if density.kind == "ohmic_circular":
        density = oracle.discretize_bath(density, cfg["oracle_modes"])
    times = _output_times(cfg)
    tr = oracle.moments_oracle(density, cfg["omega_s"], cfg["q0"], cfg["sigma0"],
                               cfg["p0"], times, beta=_beta(cfg))
    nan = math.nan
    a = {
        "times": times, "xi_q": tr.xi_q, "xi_p": tr.xi_p,
        "xi_qq": tr.xi_qq, "xi_pp": tr.xi_pp,
        "norm": np.ones_like(times),
        "weights": np.full((len(times), cfg["n_max"] + 1), nan),
        "n_mean": np.full_like(times, nan),
        "raw_xi_q": tr.xi_q, "raw_xi_p": tr.xi_p,
        "raw_xi_qq": tr.xi_qq + tr.xi_q ** 2, "raw_xi_pp": tr.xi_pp + tr.xi_p ** 2,
    }
    out = args.out or "oracle_moments.csv"
    write_csv(out, trajectory_header(cfg["n_max"]), _trajectory_rows(cfg, a))
    _echo_config(cfg, out)
    print(f"wrote {out}")
    _maybe_plot(args, out, read_csv(out), phonons=False)
    return 0


def cmd_oracle_discrete(args):
    cfg = parse_config(args.config)
    density = _density(cfg)
    if density.kind != "discrete":
        raise ConfigError("oracle-discrete needs the discrete density")
    if _beta(cfg) != math.inf:
        raise ConfigError('oracle-discrete runs at zero temperature (beta = "zero")')
    grid = _grid(cfg)
    tr, norm, _ = oracle.coupled_channels_oracle(
        density, cfg["omega_s"], cfg["q0"], cfg["sigma0"], cfg["p0"], grid,
        cfg["dt"], cfg["steps"], tuple(cfg["oracle_cutoffs"]), stride=cfg["stride"])
    nan = math.nan
    a = {
        "times": tr.times, "xi_q": tr.xi_q, "xi_p": tr.xi_p,
        "xi_qq": tr.xi_qq, "xi_pp": tr.xi_pp, "norm": norm,
        "weights": np.full((len(tr.times), cfg["n_max"] + 1), nan),
        "n_mean": np.full_like(tr.times, nan),
        "raw_xi_q": tr.xi_q * norm, "raw_xi_p": tr.xi_p * norm,
        "raw_xi_qq": (tr.xi_qq + tr.xi_q ** 2) * norm,
        "raw_xi_pp": (tr.xi_pp + tr.xi_p ** 2) * norm,
    }
    out = args.out or "oracle_discrete.csv"
    write_csv(out, trajectory_header(cfg["n_max"]), _trajectory_rows(cfg, a))
    _echo_config(cfg, out)
    print(f"wrote {out}")
    _maybe_plot(args, out, read_csv(out), phonons=False)
    return 0


def _parse_window(text):
    try:
        lo, hi = text.split(":")
        lo, hi = float(lo), float(hi)
    except ValueError:
        raise ConfigError(f"bad --window {text!r}, expected t0:t1") from None
    if hi < lo:
        raise ConfigError("--window upper bound below lower bound")
    return lo, hi


def _parse_thresholds(text):
    out = {}
    if not text:
        return out
    for part in text.split(","):
        if "=" not in part:
            raise ConfigError(f"bad --threshold entry {part!r}, expected col=val")
        col, val = part.split("=", 1)
        out[col.strip()] = float(val)
    return out


def cmd_compare(args):
    a = read_csv(args.file_a)
    b = read_csv(args.file_b)
    if list(a) != list(b):
        print("schema mismatch: column sets differ", file=sys.stderr)
        return 2
    ta, tb = a["wSt"], b["wSt"]
    if len(ta) != len(tb) or np.abs(ta - tb).max() > 1e-9:
        print("schema mismatch: time grids differ", file=sys.stderr)
        return 2
    mask = np.ones(len(ta), dtype=bool)
    if args.window:
        lo, hi = _parse_window(args.window)
        mask = (ta >= lo - 1e-12) & (ta <= hi + 1e-12)
        if not mask.any():
            print("window selects no rows", file=sys.stderr)
            return 2
    thresholds = _parse_thresholds(args.threshold)
    unknown = sorted(set(thresholds) - set(a))
    if unknown:
        print(f"threshold on unknown column(s): {', '.join(unknown)}", file=sys.stderr)
        return 2

    rows = []
    failed = []
    for name in a:
        if name in ("t_eVinv", "wSt"):
            continue
        xa, xb = a[name][mask], b[name][mask]
        both = np.isfinite(xa) & np.isfinite(xb)
        if both.any():
            diff = np.abs(xa[both] - xb[both])
            dmax = float(diff.max())
            drms = float(np.sqrt(np.mean(diff ** 2)))
        else:
            dmax = drms = 0.0
        rows.append([name, dmax, drms])
        if name in thresholds and dmax > thresholds[name]:
            failed.append(f"{name}: max {dmax:.6g} > {thresholds[name]:.6g}")

    lines = ["column,max_abs,rms"]
    lines += [f"{n},{CSV_FLOAT.format(mx)},{CSV_FLOAT.format(rm)}" for n, mx, rm in rows]
    report = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as f:
            f.write(report)
    print(report, end="")
    if getattr(args, "plot", False):
        from . import plotting

        base = (args.out[:-4] if args.out and args.out.endswith(".csv")
                else (args.out or "compare"))
        plotting.plot_overlay(a, b, (args.file_a, args.file_b), base + "_overlay.png")
        print(f"plots: {base}_overlay.png")
    for line in failed:
        print("threshold exceeded, " + line, file=sys.stderr)
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phonheom",
        description="Phonon-number hierarchy solver for a damped quantum oscillator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON config file (missing keys use benchmark defaults)")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--threads", type=int, default=1,
                       help="compute thread budget (results are identical for any value)")
        p.set_defaults(func=func)
        return p

    p = add("run", cmd_run, "propagate the hierarchy and emit the trajectory CSV")
    p.add_argument("--plot", action="store_true", help="render figures next to the CSV")
    add("bath-table", cmd_bath_table, "emit the expansion weights lambda_k")
    add("lambda-t", cmd_lambda_t, "emit the cross-weight table lambda_kk'(t)")
    p = add("oracle-moments", cmd_oracle_moments,
            "exact Gaussian-moment reference for a discretized bath")
    p.add_argument("--plot", action="store_true", help="render figures next to the CSV")
    p = add("oracle-discrete", cmd_oracle_discrete,
            "coupled-channels reference for a small discrete bath")
    p.add_argument("--plot", action="store_true", help="render figures next to the CSV")

    p = sub.add_parser("compare", help="diff two trajectory CSVs column by column")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--out", help="write the report CSV here as well")
    p.add_argument("--window", help="restrict to wSt in t0:t1")
    p.add_argument("--threshold", help="fail (exit 1) if max_abs exceeds col=val,...")
    p.add_argument("--plot", action="store_true", help="render an overlay figure")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    # --threads is accepted for interface stability; the compute kernel is
    # sequential, so results never depend on it.
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
