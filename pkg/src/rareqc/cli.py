"""Config-driven command line for every experiment family.

Subcommands: readout | cnot | tomo | ghz | chain | calibrate. Each runs one
experiment from the (optional) configuration file, seeds every random stream
from the master seed, and writes CSV/JSON artifacts that embed the config
hash and seed. Identical (config, seed) pairs produce byte-identical outputs.

Exit codes: 0 success, 2 configuration error, 3 infeasible experiment.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import chain as chain_mod
from . import gates, readout, scaling, tomography
from .config import ConfigError, ExperimentConfig, default_config
from .core import fidelity
from .readout import derive_seed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _provenance(cfg: ExperimentConfig, seed: int) -> dict:
    return {"config_hash": cfg.config_hash(), "seed": int(seed)}


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _csv_comment(cfg: ExperimentConfig, seed: int) -> str:
    return f"# config_hash={cfg.config_hash()} seed={seed}"


def cmd_readout(cfg: ExperimentConfig, out: Path, seed: int, trials: int) -> int:
    """Direct and buffered histograms, thresholds, and the detection-time scan."""
    r = cfg.readout
    panels = {
        "direct": (cfg.readout_params(), readout.simulate_direct),
        "buffered": (cfg.readout_params(), readout.simulate_buffered),
        "buffered_alt": (cfg.readout_params(alt=True), readout.simulate_buffered),
    }
    summary = dict(_provenance(cfg, seed))
    summary["trials"] = trials
    summary["panels"] = {}
    for tag_index, (name, (params, simulate)) in enumerate(panels.items()):
        h0 = simulate(params, 0, trials, derive_seed(seed, tag_index, 0))
        h1 = simulate(params, 1, trials, derive_seed(seed, tag_index, 1))
        policy, dist = readout.optimal_threshold(h0, h1)
        readout.histograms_to_csv([h0, h1], out / f"histogram_{name}.csv")
        _write_json(out / f"histogram_{name}.json", {
            **_provenance(cfg, seed),
            "prepared_0": readout.histogram_to_json_dict(h0, params, seed),
            "prepared_1": readout.histogram_to_json_dict(h1, params, seed),
        })
        summary["panels"][name] = {
            "eta": params.eta,
            "n_reps": params.n_reps,
            "t_det": params.t_det,
            "distinguishability": dist,
            "threshold": policy.threshold,
            "p_read1_given0": h0.prob_at_least(policy.threshold),
            "p_read0_given1": h1.prob_below(policy.threshold),
            "total_duration": params.total_duration(),
        }
    grid = list(np.geomspace(r.scan_t_min_frac, r.scan_t_max_frac, r.scan_points) * r.t1_qubit)
    summary["detection_time_scan"] = {}
    for tag, params in (("eta", cfg.readout_params()), ("eta_alt", cfg.readout_params(alt=True))):
        best, curve = readout.optimize_detection_time(
            params, grid, r.scan_trials, derive_seed(seed, 90 + len(tag)))
        summary["detection_time_scan"][tag] = {
            "eta": params.eta, "best_t_det": best, "curve": curve,
        }
    _write_json(out / "readout_summary.json", summary)
    direct = summary["panels"]["direct"]["distinguishability"]
    buffered = summary["panels"]["buffered"]["distinguishability"]
    print(f"direct: {direct:.4f}  buffered: {buffered:.4f}  "
          f"buffered_alt: {summary['panels']['buffered_alt']['distinguishability']:.4f}")
    return EXIT_OK


def cmd_cnot(cfg: ExperimentConfig, out: Path, seed: int, trials: int) -> int:
    """Final two-qubit density matrix, per-channel trace, and fidelity."""
    params = cfg.gate_params()
    rho_f, trace = gates.run_cnot_sequence(params)
    target = gates.ideal_target(params)
    f = fidelity(rho_f, target)
    lines = [_csv_comment(cfg, seed), "row,col,real,imag"]
    for i in range(rho_f.dim):
        for j in range(rho_f.dim):
            v = rho_f.matrix[i, j]
            lines.append(f"{i},{j},{v.real!r},{v.imag!r}")
    (out / "rho_f.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "cnot_trace.json", {
        **_provenance(cfg, seed),
        **trace.to_json_dict(),
        "fidelity_no_readout": f,
    })
    print(f"fidelity without readout: {f:.6f} (error {1 - f:.3e})")
    return EXIT_OK


def cmd_tomo(cfg: ExperimentConfig, out: Path, seed: int, trials: int) -> int:
    """Gate sequence plus simulated tomography through the noisy readout."""
    params = cfg.gate_params()
    rho_f, _ = gates.run_cnot_sequence(params)
    target = gates.ideal_target(params)
    shots = cfg.tomography.shots if cfg.tomography.shots > 0 else None
    result = tomography.simulate_tomography(
        rho_f, target, rot_err=cfg.tomography.rot_err,
        confusion=cfg.confusion(), shots=shots, seed=seed)
    payload = {
        **_provenance(cfg, seed),
        **result.to_json_dict(),
        "fidelity_no_readout": fidelity(rho_f, target),
    }
    _write_json(out / "tomography.json", payload)
    print(f"fidelity with readout: {result.fidelity_with_readout:.6f} "
          f"(error {1 - result.fidelity_with_readout:.3e})")
    return EXIT_OK


def cmd_ghz(cfg: ExperimentConfig, out: Path, seed: int, trials: int) -> int:
    """GHZ fidelity scaling table."""
    rows = scaling.ghz_fidelity_curve(cfg.scaling_params())
    scaling.curve_to_csv(rows, out / "ghz_scaling.csv",
                         provenance=f"config_hash={cfg.config_hash()} seed={seed}")
    n, f_no, f_with = rows[-1]
    print(f"n={n}: F_no_readout={f_no:.4f}  F_with_readout={f_with:.4f}")
    return EXIT_OK


def cmd_chain(cfg: ExperimentConfig, out: Path, seed: int, trials: int) -> int:
    """Grow a crystal, build the blockade graph, and run chain discovery."""
    c = cfg.crystal
    sites = chain_mod.generate_crystal(cfg.crystal_region(), c.site_density, c.doping,
                                       c.trace_readout_density, derive_seed(seed, 0))
    graph = chain_mod.build_graph(sites, c.c_dipole, c.blockade_cutoff)
    chain_mod.graph_to_json(graph, out / "interaction_graph.json", extra=_provenance(cfg, seed))
    degrees = {
        **_provenance(cfg, seed),
        "n_ions": len(sites),
        "n_qubit": len(graph.qubit_ids()),
        "n_readout": len(graph.readout_ids()),
        "mean_qubit_degree": graph.mean_qubit_degree(),
        "ensemble_mean_degree": chain_mod.ensemble_mean_degree(
            cfg.crystal_region(), c.site_density, c.doping, c.trace_readout_density,
            c.c_dipole, c.blockade_cutoff, c.degree_seeds, derive_seed(seed, 1)),
    }
    _write_json(out / "degree_stats.json", degrees)
    plan = chain_mod.discover_chain(graph, c.target_chain_length, derive_seed(seed, 2))
    if plan is None:
        print(f"no chain of length {c.target_chain_length} found", file=sys.stderr)
        return EXIT_INFEASIBLE
    _write_json(out / "chain_plan.json", {**_provenance(cfg, seed), **plan.to_json_dict()})
    print(f"chain found: readout={plan.readout} buffer={plan.buffer} "
          f"qubits={list(plan.qubits)} layers={plan.layers} pulses={plan.pulse_count}")
    return EXIT_OK


def cmd_calibrate(cfg: ExperimentConfig, out: Path, seed: int, trials: int) -> int:
    """Re-run the two calibrations and emit a frozen configuration file."""
    params = cfg.readout_params()
    rate = readout.calibrate_background_rate(
        params, target=cfg.readout.calibration_target, n_trials=max(trials, 200_000),
        seed=derive_seed(seed, 0))
    c = cfg.crystal
    cutoff = chain_mod.calibrate_blockade_cutoff(
        region=cfg.crystal_region(), site_density=c.site_density, doping=c.doping,
        trace_readout_density=c.trace_readout_density, c_dipole=c.c_dipole,
        target_degree=c.target_degree, n_seeds=c.degree_seeds, seed=derive_seed(seed, 1))
    frozen = cfg.replace_values("readout", background_rate=rate)
    frozen = frozen.replace_values("crystal", blockade_cutoff=cutoff)
    frozen.to_file(out / "frozen_config.ini")
    print(f"background_rate={rate!r} blockade_cutoff={cutoff!r} -> frozen_config.ini")
    return EXIT_OK


_COMMANDS = {
    "readout": cmd_readout,
    "cnot": cmd_cnot,
    "tomo": cmd_tomo,
    "ghz": cmd_ghz,
    "chain": cmd_chain,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rareqc",
        description="Simulations of buffered single-ion readout, gate fidelity, "
                    "GHZ scaling, and ion-chain discovery.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", type=Path, default=None,
                        help="configuration file (defaults to built-in frozen values)")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--trials", type=int, default=None, help="override the trial count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else default_config()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else cfg.run.seed
    trials = args.trials if args.trials is not None else cfg.run.trials
    if trials < 1:
        print("config error: trials must be positive", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out if args.out is not None else Path(cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _COMMANDS[args.command](cfg, out, seed, trials)


if __name__ == "__main__":
    sys.exit(main())
