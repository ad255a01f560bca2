"""Experiment runner behind the ``dgbo`` command.

Every subcommand maps a flat key = value configuration onto one module
pipeline and writes its artifacts under an output directory: report.json
(schema-versioned, deterministic for a fixed config and seed), CSV tables
with a stable column order, and two-column plain-text plot data.  Wall time
and toolchain metadata live in meta.json, outside the determinism contract.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical
divergence, 4 an estimate check reported violations.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .blocks import CutoffFamily, blocks_for_grid
from .estimates import (
    BILINEAR_CAPS,
    MULTIPLICATION_CAPS,
    check_bilinear,
    check_commutator,
    check_multiplication,
    check_trilinear,
    duality_permutation_check,
    resonance_bound_check,
    trilinear_saturation,
    triple_commutator,
)
from .gauge import make_gauge_data, reconstruct, renormalize, rhs_Rk, rhs_Rk_split
from .norms import linear_estimate_check
from .reporting import loglog_slope
from .solver import (
    DivergenceError,
    SolverConfig,
    conservation_report,
    difference_experiment,
    nonuniform_continuity_demo,
    scaling_check,
    solve_ivp,
    wave_packet,
)
from .spectral import SpatialGrid, SpectralField, from_spectral, l2_norm

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_VIOLATION = 4


class ConfigError(ValueError):
    """Bad key, bad value, or a value outside a module precondition."""


def _int(text) -> int:
    return int(str(text), 10)


def _floats(text) -> tuple:
    vals = tuple(float(p) for p in str(text).split(",") if p.strip())
    if not vals:
        raise ValueError("expected a comma-separated list of numbers")
    return vals


def _words(text) -> tuple:
    vals = tuple(p.strip() for p in str(text).split(",") if p.strip())
    if not vals:
        raise ValueError("expected a comma-separated list of names")
    return vals


_SOLVE_KEYS = {
    "alpha": (float, 1.5),
    "n_points": (_int, 256),
    "length": (float, 64.0),
    "dt": (float, 1e-3),
    "t_end": (float, 1.0),
    "datum": (str, "band"),
    "band": (float, 8.0),
    "scale": (float, 0.01),
    "integrator": (str, "IFRK4"),
    "snapshot_stride": (_int, 8),
    "seed": (_int, 0),
}

SPECS: dict[str, dict] = {
    "solve": dict(_SOLVE_KEYS),
    "conserve": dict(
        _SOLVE_KEYS,
        l2_tol=(float, 1e-8),
        mean_tol=(float, 1e-12),
        hamiltonian_tol=(float, 1e-6),
    ),
    "renorm": {
        "alpha": (float, 1.5),
        "n_points": (_int, 512),
        "length": (float, 64.0),
        "band": (float, 8.0),
        "scale": (float, 0.01),
        "eps0": (float, 0.01),
        "k_list": (_words, ("1", "2", "3")),
        "tol": (float, 1e-10),
        "seed": (_int, 0),
    },
    "norms": {
        "alpha": (float, 1.5),
        "sigma": (float, 1.0),
        "families": (_words, ("free_evolution", "duhamel", "embedding")),
        "n_x": (_int, 1024),
        "x_length": (float, 64.0),
        "n_t": (_int, 512),
        "t_length": (float, 32.0),
        "seed": (_int, 0),
    },
    "verify-estimates": {
        "alpha": (float, 1.5),
        "part": (_words, ("all",)),
        "samples": (_int, 10**6),
        "n_triples": (_int, 200),
        "n_samples": (_int, 40),
        "seed": (_int, 0),
    },
    "verify-commutators": {
        "alpha": (float, 1.5),
        "sigma": (float, 1.0),
        "spaces": (_words, ("N", "F")),
        "combos": (_words, ("1:1.5",)),
        "k_center": (_int, 3),
        "mu_span": (_int, 3),
        "nu_spread": (_int, 2),
        "n_draws": (_int, 3),
        "n_x": (_int, 512),
        "n_t": (_int, 4096),
        "seed": (_int, 0),
    },
    # the sweep must straddle the decorrelation threshold c* = pi/(T*carrier)
    # while keeping c*sqrt(L) well under the 2*norm plateau, so T*carrier
    # needs to be large; t_end = 100 with the default carrier gives c* ~ 3e-3
    "demo-illposed": {
        "alpha": (float, 1.5),
        "n_points": (_int, 512),
        "length": (float, 64.0),
        "dt": (float, 1e-2),
        "t_end": (float, 100.0),
        "norm": (float, 0.05),
        "carrier": (float, 0.0),
        "c_values": (_floats, (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)),
        "seed": (_int, 0),
    },
    "scaling": {
        "alpha": (float, 1.5),
        "n_points": (_int, 256),
        "length": (float, 64.0),
        "dt": (float, 5e-4),
        "t_end": (float, 0.5),
        "band": (float, 8.0),
        "scale": (float, 0.01),
        "lam_values": (_floats, (0.5, 0.25)),
        "tol": (float, 1e-8),
        "seed": (_int, 0),
    },
    "difference": {
        "alpha": (float, 1.5),
        "n_points": (_int, 512),
        "length": (float, 64.0),
        "dt": (float, 1e-3),
        "t_end": (float, 0.5),
        "band": (float, 16.0),
        "scale": (float, 0.01),
        "n_cut": (float, 8.0),
        "seed": (_int, 0),
    },
}


def _read_config_file(path: str) -> dict:
    pairs = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key = value, got {raw!r}")
        key, val = line.split("=", 1)
        pairs[key.strip()] = val.strip()
    return pairs


def resolve_config(
    subcommand: str, file_pairs: dict, override_pairs: dict, seed_flag=None
) -> dict:
    """Defaults, then the config file, then --seed, then key=value overrides."""
    spec = SPECS[subcommand]
    cfg = {k: default for k, (_, default) in spec.items()}

    def apply(pairs):
        for key, value in pairs.items():
            if key not in spec:
                raise ConfigError(
                    f"unknown config key {key!r} for {subcommand}; "
                    f"allowed: {', '.join(sorted(spec))}"
                )
            parser = spec[key][0]
            try:
                cfg[key] = parser(value)
            except ValueError as e:
                raise ConfigError(f"bad value for {key}: {value!r} ({e})") from e

    apply(file_pairs)
    if seed_flag is not None and "seed" in spec:
        cfg["seed"] = int(seed_flag)
    apply(override_pairs)
    _validate(subcommand, cfg)
    return cfg


def _validate(subcommand: str, cfg: dict) -> None:
    a = cfg.get("alpha")
    if a is not None and not (1.0 < a < 2.0):
        raise ConfigError(f"alpha must lie in (1, 2), got {a}")
    for key in ("dt", "t_end", "length", "scale", "x_length", "t_length"):
        if key in cfg and cfg[key] is not None and cfg[key] <= 0 and key != "t_end":
            raise ConfigError(f"{key} must be positive, got {cfg[key]}")
    if "t_end" in cfg and cfg["t_end"] < 0:
        raise ConfigError(f"t_end must be nonnegative, got {cfg['t_end']}")
    for key in ("n_points", "n_x", "n_t", "samples", "n_triples", "n_samples", "k_center", "n_draws"):
        if key in cfg and cfg[key] < 1:
            raise ConfigError(f"{key} must be at least 1, got {cfg[key]}")
    if "datum" in cfg and cfg["datum"] not in ("band", "packet", "zero"):
        raise ConfigError(
            f"datum must be band, packet, or zero, got {cfg['datum']!r}"
        )
    if "sigma" in cfg and subcommand == "verify-commutators":
        if not 0.0 <= cfg["sigma"] <= 2.0:
            raise ConfigError(f"sigma must lie in [0, 2], got {cfg['sigma']}")


# ---------------------------------------------------------------------------
# artifact serialization


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_artifacts(out_dir, subcommand, cfg, results, tables, plots) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "config": _jsonable(cfg),
        "results": _jsonable(results),
    }
    (out / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n"
    )
    for name, (header, rows) in tables.items():
        lines = [",".join(header)]
        lines.extend(",".join(_fmt(c) for c in row) for row in rows)
        (out / name).write_text("\n".join(lines) + "\n")
    for name, rows in plots.items():
        lines = [" ".join(_fmt(c) for c in row) for row in rows]
        (out / name).write_text("\n".join(lines) + "\n")
    return out


def _write_meta(out: Path, wall: float, argv) -> None:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "wall_time_s": wall,
        "argv": list(argv),
    }
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# data builders


def band_datum(grid: SpatialGrid, band: float, scale: float, seed: int) -> SpectralField:
    """Random real mean-zero field with modes inside |xi| <= band, L2 = scale."""
    rng = np.random.default_rng(seed)
    pos = (grid.modes > 0) & (np.abs(grid.frequencies) <= band)
    idx = np.flatnonzero(pos)
    if idx.size == 0:
        raise ConfigError(f"band {band} admits no positive mode on this grid")
    z = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    c = np.zeros(grid.n_points, dtype=np.complex128)
    c[idx] = z
    c[(-grid.modes[idx]) % grid.n_points] = np.conj(z)
    f = SpectralField(grid, c, is_real=True)
    norm = l2_norm(f)
    return SpectralField(grid, f.coeffs * (scale / norm), is_real=True)


def _make_datum(grid: SpatialGrid, cfg: dict) -> SpectralField:
    kind = cfg["datum"]
    if kind == "zero":
        return SpectralField(grid, np.zeros(grid.n_points, dtype=np.complex128), is_real=True)
    if kind == "packet":
        return wave_packet(grid, norm=cfg["scale"])
    return band_datum(grid, cfg["band"], cfg["scale"], cfg["seed"])


def _solver_config(cfg: dict, grid: SpatialGrid) -> SolverConfig:
    return SolverConfig(
        alpha=cfg["alpha"],
        grid=grid,
        dt=cfg["dt"],
        t_end=cfg["t_end"],
        integrator=cfg["integrator"],
        snapshot_stride=cfg["snapshot_stride"],
    )


# ---------------------------------------------------------------------------
# subcommand runners: each returns (results, tables, plots, n_violations)


def _series_table(traj):
    header = ["t", "l2", "mean", "hamiltonian", "h2"]
    d = traj.diagnostics
    rows = list(zip(traj.times, d["l2"], d["mean"], d["hamiltonian"], d["h2"]))
    return header, rows


def _run_solve(cfg, jobs, quiet):
    grid = SpatialGrid(cfg["n_points"], cfg["length"])
    traj = solve_ivp(_make_datum(grid, cfg), _solver_config(cfg, grid))
    drifts = conservation_report(traj)
    final = from_spectral(traj.states[-1]).real
    results = {
        "drifts": drifts,
        "snapshots": len(traj.times),
        "final_time": traj.times[-1],
    }
    tables = {"series.csv": _series_table(traj)}
    plots = {"final_state.dat": list(zip(grid.x.tolist(), final.tolist()))}
    return results, tables, plots, 0


def _run_conserve(cfg, jobs, quiet):
    grid = SpatialGrid(cfg["n_points"], cfg["length"])
    traj = solve_ivp(_make_datum(grid, cfg), _solver_config(cfg, grid))
    drifts = conservation_report(traj)
    tols = {
        "l2": cfg["l2_tol"],
        "mean": cfg["mean_tol"],
        "hamiltonian": cfg["hamiltonian_tol"],
    }
    violations = [
        {"invariant": key, "drift": drifts[key], "tolerance": tols[key]}
        for key in sorted(tols)
        if drifts[key] > tols[key]
    ]
    results = {"drifts": drifts, "tolerances": tols, "violations": violations}
    return results, {"series.csv": _series_table(traj)}, {}, len(violations)


def _run_renorm(cfg, jobs, quiet):
    grid = SpatialGrid(cfg["n_points"], cfg["length"])
    bs = blocks_for_grid(cfg["alpha"], grid)
    cf = CutoffFamily(bs)
    phi = band_datum(grid, cfg["band"], cfg["scale"], cfg["seed"])
    gd = make_gauge_data(phi, bs, cfg["eps0"])
    rb = renormalize(phi, gd, bs, cf)
    rec = reconstruct(rb, gd)
    denom = max(l2_norm(phi), 1e-300)
    roundtrip = l2_norm(SpectralField(grid, rec.coeffs - phi.coeffs, is_real=False)) / denom

    lo, hi = bs.coverage()
    xi = np.linspace(lo, hi, 20001)
    total = np.zeros_like(xi)
    for k in range(-bs.k_max, bs.k_max + 1):
        total += cf.chi(k, xi)
    partition_error = float(np.max(np.abs(total - 1.0)))

    cut = (2.0 / 3.0) * grid.max_frequency
    split_gap = 0.0
    split_ks = []
    for token in cfg["k_list"]:
        k = int(token)
        if k == 0 or not bs.in_range(k):
            raise ConfigError(f"k_list entry {k} is not a usable block index")
        s = bs.chi_support(k)
        if max(abs(s[0]), abs(s[1])) + 1.0 >= cut:
            continue
        whole = rhs_Rk(k, rb, gd, bs, cf, cfg["alpha"])
        parts = rhs_Rk_split(k, rb, gd, bs, cf, cfg["alpha"])
        acc = np.zeros_like(whole.coeffs)
        for piece in parts:
            acc += piece.coeffs
        scale = max(l2_norm(whole), 1e-300)
        split_gap = max(
            split_gap,
            l2_norm(SpectralField(grid, acc - whole.coeffs, is_real=False)) / scale,
        )
        split_ks.append(k)

    rows = []
    for k in sorted(rb.v_k):
        rows.append((k, bs.n_of(k), l2_norm(rb.v_k[k])))
    psi = from_spectral(gd.psi).real
    violations = []
    if roundtrip > cfg["tol"]:
        violations.append({"check": "roundtrip", "value": roundtrip, "tolerance": cfg["tol"]})
    results = {
        "roundtrip_error": roundtrip,
        "partition_error": partition_error,
        "split_gap": split_gap,
        "split_blocks": split_ks,
        "violations": violations,
    }
    tables = {"blocks.csv": (["k", "n_k", "vk_l2"], rows)}
    plots = {"psi.dat": list(zip(grid.x.tolist(), psi.tolist()))}
    return results, tables, plots, len(violations)


def _run_norms(cfg, jobs, quiet):
    bs = blocks_for_grid(cfg["alpha"], SpatialGrid(cfg["n_x"], cfg["x_length"]))
    cf = CutoffFamily(bs)
    results = {}
    rows = []
    n_viol = 0
    for family in cfg["families"]:
        rep = linear_estimate_check(
            family,
            cfg["sigma"],
            cfg["alpha"],
            bs,
            cf,
            n_x=cfg["n_x"],
            x_length=cfg["x_length"],
            n_t=cfg["n_t"],
            t_length=cfg["t_length"],
            seed=cfg["seed"],
        )
        d = rep.to_dict()
        results[family] = d
        n_viol += len(rep.violations)
        rows.append(
            (family, rep.samples, d["ratios"].get("max", 0.0), d["ratios"].get("median", 0.0))
        )
    tables = {"ratios.csv": (["family", "samples", "max_ratio", "median_ratio"], rows)}
    return results, tables, {}, n_viol


_VERIFY_PARTS = (
    "resonance",
    "duality",
    "trilinear",
    "saturation",
    "bilinear",
    "multiplication",
    "linear",
)


def _check_specs(cfg) -> list:
    alpha, seed = cfg["alpha"], cfg["seed"]
    parts = cfg["part"]
    if "all" in parts:
        parts = _VERIFY_PARTS
    unknown = [p for p in parts if p not in _VERIFY_PARTS]
    if unknown:
        raise ConfigError(
            f"unknown part {unknown[0]!r}; allowed: all, {', '.join(_VERIFY_PARTS)}"
        )
    specs = []
    for part in parts:
        if part == "resonance":
            specs.append(
                ("resonance", "resonance", dict(alpha=alpha, sample_count=cfg["samples"], seed=seed))
            )
        elif part == "duality":
            specs.append(
                ("duality", "duality", dict(alpha=alpha, n_triples=cfg["n_triples"], seed=seed))
            )
        elif part == "trilinear":
            for p in ("a", "b", "c"):
                specs.append(
                    (f"trilinear_{p}", "trilinear", dict(part=p, alpha=alpha, n_samples=cfg["n_samples"], seed=seed))
                )
        elif part == "saturation":
            specs.append(("saturation", "saturation", dict(alpha=alpha)))
        elif part == "bilinear":
            for regime in sorted(BILINEAR_CAPS):
                specs.append(
                    (f"bilinear_{regime}", "bilinear", dict(regime=regime, alpha=alpha, n_samples=cfg["n_samples"], seed=seed))
                )
        elif part == "multiplication":
            for variant in sorted(MULTIPLICATION_CAPS):
                specs.append(
                    (f"multiplication_{variant}", "multiplication", dict(variant=variant, alpha=alpha, seed=seed))
                )
        else:
            for family in ("free_evolution", "duhamel", "embedding"):
                specs.append(
                    (f"linear_{family}", "linear", dict(family=family, alpha=alpha, seed=seed))
                )
    return specs


def _run_named_check(spec):
    """Worker for one verification check; top level so pools can import it."""
    name, kind, kw = spec
    if kind == "resonance":
        rep = resonance_bound_check(kw["alpha"], sample_count=kw["sample_count"], seed=kw["seed"])
    elif kind == "duality":
        rep = duality_permutation_check(kw["alpha"], n_triples=kw["n_triples"], seed=kw["seed"])
    elif kind == "trilinear":
        rep = check_trilinear(kw["part"], kw["alpha"], n_samples=kw["n_samples"], seed=kw["seed"])
    elif kind == "saturation":
        rep = trilinear_saturation(kw["alpha"])
    elif kind == "bilinear":
        rep = check_bilinear(kw["regime"], kw["alpha"], n_samples=kw["n_samples"], seed=kw["seed"])
    elif kind == "multiplication":
        rep = check_multiplication(kw["variant"], kw["alpha"], seed=kw["seed"])
    elif kind == "linear":
        bs = blocks_for_grid(kw["alpha"], SpatialGrid(1024, 64.0))
        rep = linear_estimate_check(kw["family"], 1.0, kw["alpha"], bs, CutoffFamily(bs), seed=kw["seed"])
    else:
        raise ValueError(f"unknown check kind {kind!r}")
    return name, rep.to_dict()


def _collect_checks(specs, jobs, quiet):
    results = {}
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            collected = list(pool.map(_run_named_check, specs))
    else:
        collected = []
        for spec in specs:
            if not quiet:
                print(f"  running {spec[0]}", flush=True)
            collected.append(_run_named_check(spec))
    rows = []
    n_viol = 0
    for name, d in collected:
        results[name] = d
        n_viol += len(d["violations"])
        rows.append((name, d["samples"], d["ratios"].get("max", 0.0), len(d["violations"])))
    return results, rows, n_viol


def _run_verify_estimates(cfg, jobs, quiet):
    specs = _check_specs(cfg)
    results, rows, n_viol = _collect_checks(specs, jobs, quiet)
    tables = {"summary.csv": (["check", "samples", "max_ratio", "violations"], rows)}
    return results, tables, {}, n_viol


def _commutator_oracles(alpha: float) -> dict:
    grid = SpatialGrid(256, 32.0)
    p = 2.0 * np.pi * 8 / 32.0
    q = 2.0 * np.pi * 3 / 32.0
    w = np.exp(1j * p * grid.x)
    out_const = triple_commutator(np.ones(256, dtype=complex), w, grid, alpha)
    scale = float(np.max(np.abs(grid.frequencies) ** (alpha + 1.0)))
    const_gap = float(np.max(np.abs(out_const))) / scale

    mp = np.exp(1j * q * grid.x)
    out = triple_commutator(mp, w, grid, alpha)

    def s(z):
        return 1j * z * abs(z) ** alpha

    sp = 1j * (alpha + 1.0) * abs(p) ** alpha
    spp = 1j * alpha * (alpha + 1.0) * p * abs(p) ** (alpha - 2.0)
    expected = np.exp(1j * (p + q) * grid.x) * (s(p + q) - s(p) - q * sp - 0.5 * q * q * spp)
    two_mode_gap = float(np.max(np.abs(out - expected))) / float(np.max(np.abs(expected)))
    return {"constant_factor_gap": const_gap, "two_mode_gap": two_mode_gap}


def _run_verify_commutators(cfg, jobs, quiet):
    combos = []
    for token in cfg["combos"]:
        try:
            s1_text, s2_text = token.split(":")
            combos.append((int(s1_text), float(s2_text)))
        except ValueError as e:
            raise ConfigError(
                f"bad combo {token!r}; expected sigma1:sigma2 like 1:1.5"
            ) from e
    for space in cfg["spaces"]:
        if space not in ("N", "F"):
            raise ConfigError(f"spaces entries must be N or F, got {space!r}")
    results = {"oracles": _commutator_oracles(cfg["alpha"])}
    rows = []
    n_viol = 0
    for space in cfg["spaces"]:
        for s1, s2 in combos:
            if not quiet:
                print(f"  running commutator {space} sigma1={s1} sigma2={s2}", flush=True)
            rep = check_commutator(
                s1,
                s2,
                cfg["alpha"],
                sigma=cfg["sigma"],
                space=space,
                seed=cfg["seed"],
                k_center=cfg["k_center"],
                mu_values=tuple(range(-cfg["mu_span"], cfg["mu_span"] + 1)),
                nu_spread=cfg["nu_spread"],
                n_draws=cfg["n_draws"],
                n_x=cfg["n_x"],
                n_t=cfg["n_t"],
            )
            d = rep.to_dict()
            results[f"{space}_s{s1}_{s2}"] = d
            n_viol += len(d["violations"])
            rows.append((space, s1, s2, d["ratios"].get("max", 0.0), len(d["violations"])))
    tables = {
        "summary.csv": (["space", "sigma1", "sigma2", "max_ratio", "violations"], rows)
    }
    return results, tables, {}, n_viol


def _run_demo_illposed(cfg, jobs, quiet):
    grid = SpatialGrid(cfg["n_points"], cfg["length"])
    sc = SolverConfig(
        alpha=cfg["alpha"], grid=grid, dt=cfg["dt"], t_end=cfg["t_end"], snapshot_stride=8
    )
    carrier = cfg["carrier"] if cfg["carrier"] > 0 else None
    packet = wave_packet(grid, carrier=carrier, norm=cfg["norm"])
    rows = nonuniform_continuity_demo(cfg["c_values"], sc, packet)
    cs = np.array([r["c"] for r in rows])
    d_in = np.array([r["d_in"] for r in rows])
    d_out = np.array([r["d_out"] for r in rows])
    fit = loglog_slope(cs, d_in)
    results = {
        "input_slope": fit["slope"],
        "input_slope_stderr": fit["stderr"],
        "saturation_factor": float(np.max(d_out) / np.min(d_in)),
        "packet_l2": l2_norm(packet),
    }
    table_rows = list(zip(cs.tolist(), d_in.tolist(), d_out.tolist()))
    tables = {"demo.csv": (["c", "d_in", "d_out"], table_rows)}
    plots = {"distances.dat": table_rows}
    return results, tables, plots, 0


def _run_scaling(cfg, jobs, quiet):
    grid = SpatialGrid(cfg["n_points"], cfg["length"])
    sc = SolverConfig(
        alpha=cfg["alpha"], grid=grid, dt=cfg["dt"], t_end=cfg["t_end"], snapshot_stride=8
    )
    phi = band_datum(grid, cfg["band"], cfg["scale"], cfg["seed"])
    rows = []
    violations = []
    for lam in cfg["lam_values"]:
        mismatch = scaling_check(phi, lam, sc)
        rows.append((lam, mismatch))
        if mismatch > cfg["tol"]:
            violations.append({"lam": lam, "mismatch": mismatch, "tolerance": cfg["tol"]})
    results = {
        "mismatches": {str(lam): m for lam, m in rows},
        "max_mismatch": max(m for _, m in rows),
        "violations": violations,
    }
    tables = {"scaling.csv": (["lam", "mismatch"], rows)}
    return results, tables, {}, len(violations)


def _run_difference(cfg, jobs, quiet):
    grid = SpatialGrid(cfg["n_points"], cfg["length"])
    sc = SolverConfig(
        alpha=cfg["alpha"], grid=grid, dt=cfg["dt"], t_end=cfg["t_end"], snapshot_stride=8
    )
    phi = band_datum(grid, cfg["band"], cfg["scale"], cfg["seed"])
    ratio = difference_experiment(phi, cfg["n_cut"], sc)
    results = {"stability_ratio": ratio, "n_cut": cfg["n_cut"]}
    tables = {"difference.csv": (["n_cut", "ratio"], [(cfg["n_cut"], ratio)])}
    return results, tables, {}, 0


RUNNERS = {
    "solve": _run_solve,
    "conserve": _run_conserve,
    "renorm": _run_renorm,
    "norms": _run_norms,
    "verify-estimates": _run_verify_estimates,
    "verify-commutators": _run_verify_commutators,
    "demo-illposed": _run_demo_illposed,
    "scaling": _run_scaling,
    "difference": _run_difference,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dgbo",
        description="Experiment runner for the dispersive solver and its estimate checks.",
    )
    parser.add_argument("subcommand", choices=sorted(RUNNERS))
    parser.add_argument(
        "overrides", nargs="*", metavar="key=value", help="config overrides"
    )
    parser.add_argument("--config", metavar="PATH", help="key = value config file")
    parser.add_argument("--out", metavar="DIR", help="artifact directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--quiet", action="store_true")
    try:
        args = parser.parse_intermixed_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    started = time.monotonic()
    try:
        file_pairs = _read_config_file(args.config) if args.config else {}
        pairs = {}
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, val = item.split("=", 1)
            pairs[key.strip()] = val.strip()
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be at least 1, got {args.jobs}")
        cfg = resolve_config(args.subcommand, file_pairs, pairs, seed_flag=args.seed)
        results, tables, plots, n_viol = RUNNERS[args.subcommand](
            cfg, args.jobs, args.quiet
        )
    except ConfigError as e:
        print(f"dgbo: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"dgbo: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as e:
        print(f"dgbo: diverged: {e} (last good t = {e.last_good_time})", file=sys.stderr)
        return EXIT_DIVERGED

    out_dir = args.out or str(Path("runs") / args.subcommand)
    out = write_artifacts(out_dir, args.subcommand, cfg, results, tables, plots)
    _write_meta(out, time.monotonic() - started, argv if argv is not None else sys.argv[1:])
    if not args.quiet:
        print(f"wrote {out / 'report.json'}")
        if n_viol:
            print(f"violations: {n_viol}")
        else:
            print("ok")
    return EXIT_VIOLATION if n_viol else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
