"""Command line front end.

Every subcommand accepts --config FILE plus flags that override single
keys; results land in --out as deterministic CSV or JSON data files plus
a manifest.json describing what was actually computed (the manifest's
wall time is the one field allowed to differ between identical reruns).
"""

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BoxGeometry, HierarchyBasis, partner_potential, Superpotential
from .config import EXPERIMENTS, RunConfig, load_config
from .dynamics import (QuenchSpec, default_time_grid, evolution_matrix,
                       phase_diagnostics, quench_overlaps, revival_time,
                       survival_sweep, thermal_state)
from .errors import SusyQuenchError
from .kernels import tail_weight_constant
from .overlaps import OverlapMatrix
from .talbot import ExpansionSpec, talbot_quench
from .work import enumerate_final_states, work_scan, wpd_finite_T

__all__ = ["main", "run"]


def _fmt(x):
    """17 significant digits: enough to round-trip a double exactly."""
    return f"{float(x):.17g}"


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(r) for r in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_json(path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")


def _manifest(cfg, extras, t0, out_dir, files):
    payload = {
        "tool": "susyquench",
        "version": __version__,
        "experiment": cfg.experiment,
        "config": asdict(cfg),
        "outputs": sorted(files),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    payload.update(extras)
    _write_json(out_dir / "manifest.json", payload)


# ----------------------------------------------------------------- cache layer

def _cache_lookup(cfg, out_dir, key_parts):
    """Returns (matrix_dict_or_None, save_callback). Keyed by the geometry,
    level pair, block shape, quadrature order and package version."""
    if not cfg.cache:
        return None, lambda U: None
    cache_dir = out_dir / ".cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    tag = hashlib.sha256(repr(key_parts).encode()).hexdigest()[:20]
    path = cache_dir / f"overlaps_{tag}.npz"
    if path.exists():
        with np.load(path, allow_pickle=False) as z:
            stored = {k: z[k] for k in z.files}
        return stored, lambda U: None

    def save(U):
        np.savez_compressed(
            path, entries=U.entries, defect=U.completeness_defect,
            meta=np.array([U.from_level, U.to_level, U.K, U.M, U.rule_order]),
        )
    return None, save


def _overlaps_for(cfg, geom, thermal, M_override=0):
    """Overlap matrix plus energy vectors, through the cache when enabled."""
    out_dir = Path(cfg.out)
    if cfg.L_initial > 0:
        spec = ExpansionSpec(cfg.L_initial, cfg.L, cfg.N, K=cfg.K, M=M_override or cfg.M)
        key = ("expansion", repr(cfg.L_initial), repr(cfg.L), spec.rows,
               M_override or cfg.M, repr(cfg.defect_tolerance),
               repr(cfg.mass_tolerance) if thermal else "T0", __version__)
        stored, save = _cache_lookup(cfg, out_dir, key)
        if stored is not None:
            U = OverlapMatrix(
                from_level=1, to_level=1, K=int(stored["meta"][2]), M=int(stored["meta"][3]),
                entries=stored["entries"], completeness_defect=stored["defect"],
                geom=BoxGeometry(cfg.L), rule_order=0,
                defect_tolerance=cfg.defect_tolerance,
            )
            gi = BoxGeometry(cfg.L_initial)
            E_from = np.arange(1, U.K + 1, dtype=float) ** 2 * gi.energy_unit
            E_to = np.arange(1, U.M + 1, dtype=float) ** 2 * geom.energy_unit
            return spec, U, E_from, E_to
        U, E_from, E_to = talbot_quench(
            spec, M=M_override or cfg.M, defect_tolerance=cfg.defect_tolerance,
            m_cap=cfg.m_cap, thermal=thermal,
            mass_tolerance=cfg.mass_tolerance if thermal else None,
        )
        save(U)
        return spec, U, E_from, E_to

    spec = QuenchSpec(geom=geom, to_level=cfg.to_level, N=cfg.N,
                      from_level=cfg.from_level, K=cfg.K, M=M_override or cfg.M)
    key = ("hierarchy", repr(cfg.L), cfg.from_level, cfg.to_level, spec.rows,
           M_override or cfg.M, repr(cfg.defect_tolerance),
           repr(cfg.mass_tolerance) if thermal else "T0", __version__)
    stored, save = _cache_lookup(cfg, out_dir, key)
    if stored is not None:
        U = OverlapMatrix(
            from_level=cfg.from_level, to_level=cfg.to_level,
            K=int(stored["meta"][2]), M=int(stored["meta"][3]),
            entries=stored["entries"], completeness_defect=stored["defect"],
            geom=geom, rule_order=int(stored["meta"][4]),
            defect_tolerance=cfg.defect_tolerance,
        )
        basis = HierarchyBasis(geom)
        E_from = basis.energies(cfg.from_level, U.K)
        E_to = basis.energies(cfg.to_level, U.M)
        return spec, U, E_from, E_to
    U, E_from, E_to = quench_overlaps(
        spec, defect_tolerance=cfg.defect_tolerance, m_cap=cfg.m_cap,
        thermal=thermal, mass_tolerance=cfg.mass_tolerance if thermal else None,
    )
    save(U)
    return spec, U, E_from, E_to


def _truncation_entry(T, U):
    return {
        "T_over_TF": T,
        "K": U.K,
        "M": U.M,
        "max_defect": float(np.max(U.completeness_defect)),
        "rule_order": U.rule_order,
    }


# -------------------------------------------------------------------- runners

def _run_survival(cfg, out_dir):
    geom = BoxGeometry(cfg.L)
    grid = default_time_grid(geom, cfg.t_max, cfg.t_points, cfg.include_quarters)
    tr = revival_time(geom)
    files, trunc = [], []
    for T in cfg.temperatures:
        thermal = None
        if T > 0:
            tgeom = BoxGeometry(cfg.L_initial) if cfg.L_initial > 0 else geom
            thermal = thermal_state(cfg.N, T, tgeom)
        spec, U, E_from, E_to = _overlaps_for(cfg, geom, thermal)
        snaps = survival_sweep(spec, grid, thermal=thermal, U=U,
                               E_from=E_from, E_to=E_to)
        trunc.append(_truncation_entry(T, U))
        name = f"survival_T{T:g}.{('csv' if cfg.format == 'csv' else 'json')}"
        if cfg.format == "csv":
            rows = [(_fmt(s.t), _fmt(s.t / tr), _fmt(s.F), _fmt(s.log_F), s.classification)
                    for s in snaps]
            _write_csv(out_dir / name, ("t", "t_over_tr", "F", "logF", "classification"), rows)
        else:
            _write_json(out_dir / name, {
                "T_over_TF": T,
                "samples": [
                    {"t": s.t, "t_over_tr": s.t / tr, "F": s.F, "logF": s.log_F,
                     "classification": s.classification, "max_offdiag": s.max_offdiag}
                    for s in snaps
                ],
            })
        files.append(name)
    return {"truncation": trunc,
            "tolerances": {"defect_tolerance": cfg.defect_tolerance,
                           "mass_tolerance": cfg.mass_tolerance}}, files


def _auto_wpd_M(cfg):
    """Column count sized so the first-moment deficit from the cut final
    basis stays well under the half-percent the spectra are held to."""
    if cfg.M:
        return cfg.M
    if cfg.L_initial > 0:
        return 0    # expansion spectra fall back to the completeness criterion
    alpha = cfg.to_level
    sum_k2 = cfg.N * (cfg.N + 1) * (2 * cfg.N + 1) // 6
    w_tot = cfg.N * (cfg.N + 1) * (alpha * alpha - alpha)
    target = 3.24 * tail_weight_constant(alpha) * sum_k2 / (0.0013 * w_tot)
    M = int(min(max(4000, 40 * math.ceil(target / 40)), cfg.m_cap))
    return M


def _run_wpd(cfg, out_dir):
    geom = BoxGeometry(cfg.L)
    M_use = _auto_wpd_M(cfg)
    files, trunc = [], []
    for T in cfg.temperatures:
        thermal = thermal_state(cfg.N, T, geom) if T > 0 else None
        spec, U, E_from, E_to = _overlaps_for(cfg, geom, thermal, M_override=M_use)
        if thermal is None:
            spectrum = enumerate_final_states(
                cfg.N, U.M, cfg.max_order, U,
                threshold=cfg.threshold, candidate_cap=cfg.candidate_cap,
                E_from=E_from if cfg.L_initial > 0 else None,
                E_to=E_to if cfg.L_initial > 0 else None,
            )
        else:
            spectrum = wpd_finite_T(
                cfg.N, U.M, cfg.max_order_initial, cfg.max_order_final,
                thermal, U, threshold=cfg.threshold, candidate_cap=cfg.candidate_cap,
            )
        info = spectrum.truncation
        trunc.append({
            "T_over_TF": T, "K": U.K, "M": info.M,
            "max_defect": float(np.max(U.completeness_defect)),
            "max_order": info.max_order, "threshold": info.threshold,
            "records": len(spectrum.records),
            "total_probability": spectrum.total_probability,
            "first_moment": spectrum.first_moment,
            "order_mass_exact": list(info.order_mass_exact),
            "dropped_below_threshold": info.dropped_below_threshold,
            "dropped_beyond_order": info.dropped_beyond_order,
        })
        name = f"wpd_T{T:g}.{('csv' if cfg.format == 'csv' else 'json')}"
        recs = spectrum.records
        if cfg.format == "csv":
            rows = [
                (_fmt(r.W), str(r.w_over_E1), _fmt(r.P), str(r.order),
                 ";".join(str(i) for i in r.final_occupation))
                for r in recs
            ]
            _write_csv(out_dir / name,
                       ("W", "W_over_E1", "P", "order", "final_occupation"), rows)
        else:
            _write_json(out_dir / name, {
                "T_over_TF": T,
                "total_probability": spectrum.total_probability,
                "first_moment": spectrum.first_moment,
                "records": [
                    {"W": r.W, "W_over_E1": r.w_over_E1, "P": r.P, "order": r.order,
                     "final_occupation": list(r.final_occupation)}
                    for r in recs
                ],
            })
        files.append(name)
    return {"truncation": trunc,
            "tolerances": {"threshold": cfg.threshold,
                           "defect_tolerance": cfg.defect_tolerance}}, files


def _run_work_scan(cfg, out_dir):
    geom = BoxGeometry(cfg.L)
    rows = work_scan(cfg.alpha_list, range(cfg.N_min, cfg.N_max + 1), geom)
    name = f"work_scan.{cfg.format}"
    if cfg.format == "csv":
        _write_csv(out_dir / name,
                   ("N", "alpha", "average_work", "irreversible_work"),
                   [(str(r["N"]), str(r["alpha"]), _fmt(r["average_work"]),
                     _fmt(r["irreversible_work"])) for r in rows])
    else:
        _write_json(out_dir / name, {"rows": rows})
    return {"tolerances": {}}, [name]


def _run_phases(cfg, out_dir):
    geom = BoxGeometry(cfg.L)
    spec, U, E_from, E_to = _overlaps_for(cfg, geom, None)
    tr = revival_time(geom)
    rows, summary = [], []
    for x in cfg.t_over_tr:
        O = evolution_matrix(U, E_from, E_to, x * tr)
        diag, max_off, label = phase_diagnostics(O, cfg.N)
        summary.append({"t_over_tr": x, "classification": label,
                        "max_offdiag": max_off})
        for k in range(1, cfg.N + 1):
            z = diag[k - 1]
            rows.append((_fmt(x), str(k), _fmt(z.real), _fmt(z.imag),
                         _fmt(np.angle(z)), label))
    name = f"phases.{cfg.format}"
    if cfg.format == "csv":
        _write_csv(out_dir / name,
                   ("t_over_tr", "k", "re", "im", "phase_rad", "classification"), rows)
    else:
        _write_json(out_dir / name, {"summary": summary, "rows": [
            {"t_over_tr": float(r[0]), "k": int(r[1]), "re": float(r[2]),
             "im": float(r[3]), "phase_rad": float(r[4]), "classification": r[5]}
            for r in rows
        ]})
    return {"truncation": [_truncation_entry(0.0, U)],
            "phase_summary": summary,
            "tolerances": {"defect_tolerance": cfg.defect_tolerance}}, [name]


def _run_basis_dump(cfg, out_dir):
    geom = BoxGeometry(cfg.L)
    basis = HierarchyBasis(geom, alpha_max=max(cfg.level, 4))
    states = [basis.state(cfg.level, m) for m in range(1, cfg.n_states + 1)]
    st_name = f"basis_states.{cfg.format}"
    table = [(str(s.m), str(s.m + cfg.level - 1), _fmt(s.energy),
              _fmt(s.energy / geom.energy_unit), s.parity) for s in states]
    if cfg.format == "csv":
        _write_csv(out_dir / st_name, ("m", "n", "energy", "energy_over_E1", "parity"), table)
    else:
        _write_json(out_dir / st_name, {"states": [
            {"m": int(r[0]), "n": int(r[1]), "energy": float(r[2]),
             "energy_over_E1": float(r[3]), "parity": r[4]} for r in table
        ]})
    # profiles sampled at interior points (potentials diverge on the walls)
    h = geom.L / cfg.x_points
    x = -geom.half + (np.arange(cfg.x_points) + 0.5) * h
    V = partner_potential(cfg.level, geom)
    cols = [("x", x)]
    if cfg.level > 1:
        W = Superpotential(cfg.level, geom)
        cols.append(("superpotential", W(x)))
    cols.append(("potential", V(x)))
    for s in states:
        cols.append((f"psi_{s.m}", s(x)))
    pr_name = f"basis_profiles.{cfg.format}"
    if cfg.format == "csv":
        header = tuple(c[0] for c in cols)
        rows = [tuple(_fmt(c[1][i]) for c in cols) for i in range(cfg.x_points)]
        _write_csv(out_dir / pr_name, header, rows)
    else:
        _write_json(out_dir / pr_name, {c[0]: [float(v) for v in c[1]] for c in cols})
    return {"tolerances": {}}, [st_name, pr_name]


_RUNNERS = {
    "survival": _run_survival,
    "wpd": _run_wpd,
    "work-scan": _run_work_scan,
    "phases": _run_phases,
    "basis-dump": _run_basis_dump,
}


def run(cfg):
    """Execute one validated configuration; returns the CLI exit code."""
    t0 = time.perf_counter()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    extras, files = _RUNNERS[cfg.experiment](cfg, out_dir)
    _manifest(cfg, extras, t0, out_dir, files)
    return 0


# ------------------------------------------------------------------ arg parsing

_FLAG_HELP = {
    "L": "box size",
    "L_initial": "initial box size (switches to the sudden expansion)",
    "from_level": "hierarchy level before the quench",
    "to_level": "hierarchy level after the quench",
    "N": "particle number",
    "K": "retained rows (0 = automatic)",
    "M": "final-basis columns (0 = adaptive)",
    "temperatures": "comma separated T/T_F values",
    "t_max": "grid end in units of the revival time",
    "t_points": "number of grid points",
    "include_quarters": "force exact quarter-revival instants onto the grid",
    "t_over_tr": "comma separated sample times in units of the revival time",
    "max_order": "highest excitation order enumerated",
    "max_order_initial": "initial-configuration excitation cap (thermal)",
    "max_order_final": "final-configuration excitation cap (thermal)",
    "threshold": "probability below which records are dropped",
    "defect_tolerance": "per-row completeness target",
    "mass_tolerance": "occupation-weighted completeness target (thermal)",
    "m_cap": "hard cap on final-basis columns",
    "candidate_cap": "hard cap on enumeration determinant evaluations",
    "alpha_list": "comma separated target levels for the scan",
    "N_min": "smallest particle number in the scan",
    "N_max": "largest particle number in the scan",
    "level": "hierarchy level to dump",
    "n_states": "number of states to dump",
    "x_points": "sample points across the box",
    "format": "csv or json",
    "cache": "reuse overlap matrices across runs (stored under OUT/.cache)",
}

_SUBCOMMAND_KEYS = {
    "survival": ("L", "L_initial", "from_level", "to_level", "N", "K", "M",
                 "temperatures", "t_max", "t_points", "include_quarters",
                 "defect_tolerance", "mass_tolerance", "m_cap", "format", "cache"),
    "wpd": ("L", "L_initial", "from_level", "to_level", "N", "K", "M",
            "temperatures", "max_order", "max_order_initial", "max_order_final",
            "threshold", "defect_tolerance", "mass_tolerance", "m_cap",
            "candidate_cap", "format", "cache"),
    "work-scan": ("L", "alpha_list", "N_min", "N_max", "format"),
    "phases": ("L", "from_level", "to_level", "N", "K", "M", "t_over_tr",
               "defect_tolerance", "m_cap", "format", "cache"),
    "basis-dump": ("L", "level", "n_states", "x_points", "format"),
}

_LIST_KEYS = {"temperatures", "t_over_tr", "alpha_list"}
_INT_KEYS = {"from_level", "to_level", "N", "K", "M", "t_points", "max_order",
             "max_order_initial", "max_order_final", "m_cap", "candidate_cap",
             "N_min", "N_max", "level", "n_states", "x_points"}
_BOOL_KEYS = {"include_quarters", "cache"}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="susyquench",
        description="Quench dynamics of an ideal Fermi gas between partner potentials",
    )
    parser.add_argument("--version", action="version", version=f"susyquench {__version__}")
    subs = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = subs.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", metavar="PATH", help="key = value configuration file")
        sp.add_argument("--out", metavar="DIR", help="output directory (default: .)")
        for key in _SUBCOMMAND_KEYS[name]:
            flag = "--" + key.replace("_", "-")
            if key in _BOOL_KEYS:
                sp.add_argument(flag, dest=key, action="store_true", default=None,
                                help=_FLAG_HELP[key])
                sp.add_argument("--no-" + key.replace("_", "-"), dest=key,
                                action="store_false", default=None,
                                help="disable " + _FLAG_HELP[key])
            else:
                sp.add_argument(flag, dest=key, default=None, help=_FLAG_HELP[key])
    return parser


def _config_from_args(args):
    overrides = {}
    for key in _SUBCOMMAND_KEYS[args.experiment]:
        val = getattr(args, key, None)
        if val is None:
            continue
        if key in _BOOL_KEYS:
            overrides[key] = val
        elif key in _LIST_KEYS:
            toks = str(val).replace(",", " ").split()
            overrides[key] = tuple(int(t) for t in toks) if key == "alpha_list" \
                else tuple(float(t) for t in toks)
        elif key in _INT_KEYS:
            overrides[key] = int(float(val))
        elif key in ("L", "L_initial", "t_max", "threshold", "defect_tolerance",
                     "mass_tolerance"):
            overrides[key] = float(val)
        else:
            overrides[key] = val
    if args.out is not None:
        overrides["out"] = args.out
    overrides["experiment"] = args.experiment
    if args.config:
        return load_config(args.config, overrides=overrides)
    cfg = RunConfig(**overrides)
    return cfg.validate()


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return run(cfg)
    except SusyQuenchError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
