"""Command-line front end.

Every run writes into ``--out`` (or ``$NOSIGNAL_OUT``) a set of files prefixed
with ``<command>_<hash>``, where ``<hash>`` identifies the run manifest
(command, config content, seed and overrides). Re-running an identical
manifest reproduces the CSV and summary JSON byte for byte; only
``*_manifest.json`` carries a timestamp.

Exit codes: 0 expected verdict, 1 verdict mismatch, 2 config or validation
error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, dense
from .errors import NoSignalError, ResourceError
from .experiments import (
    NO_SIGNAL_TOL,
    ScenarioSpec,
    run_counterexample,
    run_no_signaling,
    run_two_qubit_baseline,
    sweep_cell,
    symbolic_check,
)
from .model import (
    ChainConfig,
    RunConfig,
    channel_from_spec,
    grid_from_spec,
    load_config,
    random_channel,
    random_initial_spec,
)

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3
OUT_ENV = "NOSIGNAL_OUT"


class Run:
    """Output bookkeeping for one command invocation."""

    def __init__(self, command: str, args, config_text: str = ""):
        self.command = command
        self.out = Path(args.out or os.environ.get(OUT_ENV) or "nosignal-out")
        self.config_hash = hashlib.sha256(config_text.encode()).hexdigest()
        manifest = {
            "command": command,
            "config_hash": self.config_hash,
            "seed": args.seed,
            "grid": args.grid,
            "depth": getattr(args, "depth", None),
            "version": __version__,
        }
        self.hash = hashlib.sha256(json.dumps(manifest, sort_keys=True).encode()).hexdigest()[:16]
        self.manifest = {
            **manifest,
            "config_path": args.config,
            "out_dir": str(self.out),
            "manifest_hash": self.hash,
            "timestamp": int(os.environ.get("SOURCE_DATE_EPOCH", time.time())),
        }

    def path(self, suffix: str) -> Path:
        return self.out / f"{self.command}_{self.hash}_{suffix}"

    def write(self, suffix: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.path(suffix)
        p.write_text(text, encoding="utf-8")
        return p

    def write_json(self, suffix: str, data: dict) -> Path:
        data = {"manifest_hash": self.hash, **data}
        return self.write(suffix, json.dumps(data, indent=2, default=_json_default) + "\n")

    def finish(self) -> None:
        self.write("manifest.json", json.dumps(self.manifest, indent=2) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _load(args) -> tuple[RunConfig, str]:
    if not args.config:
        raise NoSignalError("--config is required for this command")
    text = Path(args.config).read_text(encoding="utf-8")
    rc = load_config(args.config)
    chain = rc.chain
    dense.check_dense_size(chain.n_sites)
    if args.grid:
        chain = ChainConfig(chain.n_sites, chain.cut, chain.couplings, chain.fields, grid_from_spec(args.grid))
    seed = rc.seed if args.seed is None else args.seed
    depth = rc.depth if getattr(args, "depth", None) is None else args.depth
    rc = RunConfig(chain, seed, rc.bloch, rc.channel, rc.state_mix, depth, rc.scenario, rc.sweep, rc.raw)
    return rc, text


def _setup(rc: RunConfig):
    rng = np.random.default_rng(rc.seed)
    spec = random_initial_spec(rc.chain, rng, mix=rc.state_mix, bloch=rc.bloch)
    return spec, channel_from_spec(rc.channel)


def _say(msg: str) -> None:
    print(msg, flush=True)


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    rc, text = _load(args)
    rc.chain.check_theorem_scope()
    run = Run("verify", args, text)
    spec, channel = _setup(rc)
    dense_rep = run_no_signaling(rc.chain, spec, channel, seed=rc.seed, enforce=False)
    series_rep = symbolic_check(rc.chain, spec, channel, rc.depth)
    run.write("distances.csv", dense_rep.to_csv())
    run.write_json("summary.json", dense_rep.summary())
    run.write("series.txt", series_rep.to_text())
    run.write_json("series.json", series_rep.to_dict())
    run.finish()
    dense_ok = dense_rep.verdict == "no-signal"
    series_ok = series_rep.all_traceless and series_rep.lemma2_flags_hold
    _say(f"dense: {dense_rep.verdict} (max distance {dense_rep.max_distance:.3e})")
    _say(f"series: traceless through k={series_rep.depth}: {series_rep.all_traceless}, "
         f"lemma flags: {series_rep.lemma2_flags_hold}")
    if not spec.conforming:
        _say(f"verdict mismatch: r_z = {spec.r_z} violates the xy-plane hypothesis; "
             "verify only certifies conforming configurations")
        return EXIT_MISMATCH
    if dense_ok and series_ok:
        return EXIT_OK
    _say("verdict mismatch: expected no-signal and an exactly traceless series")
    return EXIT_MISMATCH


def cmd_series(args) -> int:
    rc, text = _load(args)
    run = Run("series", args, text)
    spec, channel = _setup(rc)
    rep = symbolic_check(rc.chain, spec, channel, rc.depth)
    run.write("series.txt", rep.to_text())
    run.write_json("series.json", rep.to_dict())
    run.finish()
    sys.stdout.write(rep.to_text())
    if rep.all_traceless and rep.lemma2_flags_hold:
        return EXIT_OK
    _say(f"series not traceless: first failing order {rep.first_failure}")
    return EXIT_MISMATCH


def cmd_counterexample(args) -> int:
    rc, text = _load(args)
    run = Run("counterexample", args, text)
    sc = dict(rc.scenario)
    expect = sc.pop("expect", "signal")
    variant = sc.pop("variant", "rz_violation")
    known = {"b_field", "field_site", "delta", "channel_site", "state_mix"}
    extra = set(sc) - known
    if extra:
        raise NoSignalError(f"unknown scenario field(s): {', '.join(sorted(extra))}")
    scenario = ScenarioSpec(
        variant, rc.chain.n_sites, rc.chain.cut, bloch=rc.bloch, channel=rc.channel,
        seed=rc.seed, time_grid=rc.chain.time_grid, **sc,
    )
    rep = run_counterexample(scenario)
    run.write("distances.csv", rep.to_csv())
    run.write_json("summary.json", rep.summary())
    run.finish()
    _say(f"{variant}: {rep.verdict} (max distance {rep.max_distance:.3e}, "
         f"first signal time {rep.first_signal_time})")
    if rep.verdict == expect:
        return EXIT_OK
    _say(f"verdict mismatch: expected {expect}, observed {rep.verdict}")
    return EXIT_MISMATCH


def cmd_baseline(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    rc = load_config(args.config) if args.config else None
    seed = args.seed if args.seed is not None else (rc.seed if rc else 0)
    draws = int((rc.raw.get("sweep") or {}).get("draws", 10)) if rc else 10
    run = Run("baseline", args, text)
    rng = np.random.default_rng(seed)

    phi = np.zeros(4, dtype=complex)
    phi[[0, 3]] = 1 / np.sqrt(2)
    cases = [(np.outer(phi, phi.conj()), channel_from_spec("projective_z"))]
    for _ in range(draws):
        rho = dense.random_density_matrix(2, rng, mix=rng.uniform())
        cases.append((rho, random_channel(int(rng.integers(2 ** 32)), int(rng.choice([2, 4])))))
    rows, worst = ["draw,distance,channel"], 0.0
    for i, (rho, ch) in enumerate(cases):
        rep = run_two_qubit_baseline(rho, ch, seed=seed)
        worst = max(worst, rep.max_distance)
        rows.append(f"{i},{rep.max_distance:.17g},{ch.label}")
    run.write("distances.csv", "\n".join(rows) + "\n")
    ok = worst <= 1e-12
    run.write_json("summary.json", {"verdict": "no-signal" if ok else "signal",
                                    "max_distance": worst, "draws": len(cases), "seed": seed})
    run.finish()
    _say(f"baseline: {len(cases)} cases, max distance {worst:.3e}")
    return EXIT_OK if ok else EXIT_MISMATCH


def _cell_seed(base: int, n_sites: int, cut: int, i: int) -> int:
    return int(np.random.SeedSequence([base, n_sites, cut, i]).generate_state(1)[0])


def cmd_sweep(args) -> int:
    rc, text = _load(args)
    run = Run("sweep", args, text)
    sw = rc.sweep or {}
    sizes = [int(v) for v in sw.get("N", [rc.chain.n_sites])]
    seeds = int(sw.get("seeds", 25))
    cells = []
    for n_sites in sizes:
        dense.check_dense_size(n_sites)
        cuts = sw.get("cuts") or list(range(2, n_sites))
        for cut in cuts:
            ChainConfig(n_sites, cut).check_theorem_scope()
            for i in range(seeds):
                cells.append((n_sites, int(cut), _cell_seed(rc.seed, n_sites, int(cut), i)))
    grid = rc.chain.time_grid
    jobs = max(1, args.jobs or 1)
    if jobs == 1:
        results = [sweep_cell(n, c, s, grid) for n, c, s in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(sweep_cell, n, c, s, grid) for n, c, s in cells]
            results = [f.result() for f in futs]
    results.sort(key=lambda r: (r["N"], r["n"], r["seed"]))
    rows = ["N,n,seed,channel,max_distance,verdict"]
    rows += [f"{r['N']},{r['n']},{r['seed']},{r['channel']},{r['max_distance']:.17g},{r['verdict']}"
             for r in results]
    run.write("cells.csv", "\n".join(rows) + "\n")
    passed = sum(r["verdict"] == "no-signal" for r in results)
    table = {}
    for r in results:
        key = f"N={r['N']},n={r['n']}"
        t = table.setdefault(key, {"cells": 0, "no_signal": 0, "max_distance": 0.0})
        t["cells"] += 1
        t["no_signal"] += r["verdict"] == "no-signal"
        t["max_distance"] = max(t["max_distance"], r["max_distance"])
    run.write_json("summary.json", {"cells": len(results), "no_signal": passed,
                                    "tolerance": NO_SIGNAL_TOL, "table": table})
    run.finish()
    for key, t in table.items():
        _say(f"{key}: {t['no_signal']}/{t['cells']} no-signal, max distance {t['max_distance']:.3e}")
    return EXIT_OK if passed == len(results) else EXIT_MISMATCH


COMMANDS = {
    "verify": (cmd_verify, "no-signalling run plus exact series check"),
    "counterexample": (cmd_counterexample, "run a scenario with one hypothesis broken"),
    "baseline": (cmd_baseline, "two isolated qubits, channel on the second"),
    "series": (cmd_series, "nested-commutator series report"),
    "sweep": (cmd_sweep, "Monte-Carlo lattice of conforming runs"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nosignal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML/JSON run configuration")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./nosignal-out)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--grid", help="time grid START:STOP:STEPS")
        p.add_argument("--depth", type=int, help="series depth K")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        return func(args)
    except ResourceError as exc:
        print(f"error: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NoSignalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
