"""Command-line front end.

Every subcommand writes CSV (12 significant digits) to stdout, or into the
``--out`` directory, behind a ``#`` header line holding the resolved
configuration and seed.  Exit codes: 0 success, 1 invalid input, 2
numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .crossing import NoCrossingError
from .ising_exact import CriticalPointError, IsingParams, NonConvergenceError, even_row_correlation
from .ising_mc import McSchedule, estimate_tc, exchange_mc

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 1, 2


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# value parsers


def parse_range(text) -> list[float]:
    """``start:stop:step`` (stop included within half a step), a comma list, or one number."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    s = str(text).strip()
    try:
        if ":" in s:
            parts = s.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, step = map(float, parts)
            if step <= 0 or stop < start:
                raise UsageError(f"bad range {s!r}: need step > 0 and stop >= start")
            n = int(math.floor((stop - start) / step + 0.5))
            return [round(start + k * step, 12) for k in range(n + 1)]
        return [float(v) for v in s.split(",") if v.strip()]
    except UsageError:
        raise
    except ValueError:
        raise UsageError(f"cannot parse {s!r} as start:stop:step or a comma list") from None


def parse_ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {text!r} as a comma list of integers") from None


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def _betas(temps) -> list[float]:
    return [math.inf if t == 0 else 1.0 / t for t in temps]


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (64-bit, default 0)")
    p.add_argument("--out", default=None, help="output directory (default: CSV to stdout)")
    p.add_argument("--config", default=None, help="JSON file of flag values; explicit flags win")
    p.add_argument("--workers", type=int, default=None, help="parallel workers (default: available cores)")


def _schedule_flags(p, equilibration, measurements, thinning=1) -> None:
    p.add_argument("--equilibration", type=int, default=equilibration, help=f"sweeps before measuring (default {equilibration})")
    p.add_argument("--measurements", type=int, default=measurements, help=f"measured samples (default {measurements})")
    p.add_argument("--thinning", type=int, default=thinning, help=f"sweeps between samples (default {thinning})")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="thermal-mbqc", description="Thermal cluster-state MBQC: fidelities, Ising Monte Carlo and RHG thresholds.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, metavar="SUBCOMMAND")
    sub.required = True

    p = sub.add_parser("exact-corr", help="exact 2D Ising row correlator (even number of spins)")
    p.add_argument("--positions", required=True, help="comma list of row positions, even count")
    p.add_argument("--temp", "--temps", dest="temps", required=True, help="temperature or start:stop:step")
    _common(p)

    p = sub.add_parser("ising-mc", help="replica-exchange Ising Monte Carlo")
    p.add_argument("--lattice", choices=["square", "rhg", "cubic"], default="square")
    p.add_argument("--size", type=int, required=True, help="linear size (RHG: cells per axis)")
    p.add_argument("--temps", required=True, help="temperature ladder, start:stop:step or list")
    _schedule_flags(p, 1000, 10_000)
    _common(p)

    p = sub.add_parser("tc-estimate", help="critical temperature from Binder-cumulant crossings")
    p.add_argument("--lattice", choices=["square", "rhg", "cubic"], default="rhg")
    p.add_argument("--sizes", required=True, help="comma list of sizes")
    p.add_argument("--temps", required=True, help="temperature ladder")
    p.add_argument("--bootstrap", type=int, default=200, help="bootstrap replicas (default 200)")
    _schedule_flags(p, 2000, 20_000)
    _common(p)

    p = sub.add_parser("fidelity", help="identity/Hadamard gate fidelity vs temperature")
    p.add_argument("--gate", choices=["identity", "hadamard"], required=True)
    p.add_argument("--model", choices=["fch", "ich"], required=True)
    p.add_argument("--l", dest="l", required=True, help="chain parameter l, or a comma list")
    p.add_argument("--temps", required=True, help="temperature grid")
    p.add_argument("--mc-size", type=int, default=150, help="square lattice size for odd correlators (default 150)")
    p.add_argument("--literal", action="store_true", help="use the printed K_2i projector sets")
    _schedule_flags(p, 1500, 100_000)
    _common(p)

    p = sub.add_parser("tqec-sample", help="sample thermal error chains on the RHG lattice")
    p.add_argument("--model", choices=["fch", "ich", "sc-reduced"], required=True)
    p.add_argument("--N", dest="N", type=int, required=True)
    p.add_argument("--temp", type=float, required=True)
    p.add_argument("--count", type=int, default=1)
    _schedule_flags(p, 200, 1, 5)
    _common(p)

    p = sub.add_parser("decode", help="decode a syndrome or chain fixture")
    p.add_argument("--in", dest="infile", required=True, help="rhg-syndrome or rhg-chain fixture")
    p.add_argument("--decoder", choices=["mwpm", "free-energy"], default="mwpm")
    p.add_argument("--temp", type=float, default=None, help="decoder temperature (free-energy only)")
    _schedule_flags(p, 200, 500)
    _common(p)

    p = sub.add_parser("threshold", help="logical-error sweep with MWPM and threshold crossing")
    p.add_argument("--model", choices=["fch", "ich", "sc-reduced"], default=None)
    p.add_argument("--sizes", default=None, help="comma list of RHG sizes (default 6,8,10,12)")
    p.add_argument("--temps", default=None, help="temperature grid (default per model)")
    p.add_argument("--trials", type=int, default=None, help="trials per point (default 10000)")
    p.add_argument("--block-size", type=int, default=None, help="trials per random-stream block (default 500)")
    p.add_argument("--equilibration", type=int, default=None)
    p.add_argument("--thinning", type=int, default=None)
    p.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identical output)")
    p.add_argument("--bootstrap", type=int, default=500)
    _common(p)

    p = sub.add_parser("nishimori-check", help="cRPGM vs pure Ising internal energy on the Nishimori line")
    p.add_argument("--N", dest="N", type=int, default=4)
    p.add_argument("--betas", required=True, help="comma list or start:stop:step of inverse temperatures")
    p.add_argument("--samples", type=int, default=32, help="disorder samples per beta")
    _schedule_flags(p, 500, 2000)
    _common(p)
    return ap


def _load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: expected a JSON object of flag values")
    return cfg


def _parse(argv) -> argparse.Namespace:
    ap = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if not a.startswith("-")), None)
    subparsers = ap._subparsers._group_actions[0].choices
    if known.config and command in subparsers:
        sub = subparsers[command]
        # keys may be dest names or flag spellings without the dashes
        actions = {a.dest: a for a in sub._actions}
        for a in sub._actions:
            for opt in a.option_strings:
                actions.setdefault(opt.lstrip("-").replace("-", "_"), a)
        defaults = {}
        for k, v in _load_config(known.config).items():
            a = actions.get(k.lstrip("-").replace("-", "_"))
            if a is None or a.dest in ("config", "help"):
                raise UsageError(f"{known.config}: unknown key {k!r} for {command}")
            a.required = False
            defaults[a.dest] = v
        sub.set_defaults(**defaults)
    return ap.parse_args(argv)


# --------------------------------------------------------------------------
# output


class _Output:
    def __init__(self, args, resolved: dict):
        self.args = args
        self.header = {"command": args.command, "seed": args.seed, **resolved}
        self.dir = Path(args.out) if args.out else None

    def header_line(self) -> str:
        return "# " + json.dumps(self.header, sort_keys=True, default=_jsonable) + "\n"

    def csv(self, columns, rows, name: str | None = None) -> None:
        buf = io.StringIO()
        buf.write(self.header_line())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        self.text(buf.getvalue(), name or f"{self.args.command}.csv")

    def text(self, text: str, name: str) -> None:
        if self.dir is None:
            sys.stdout.write(text)
            return
        path = self.dir / name
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        print(f"wrote {path}", file=sys.stderr)

    def path(self, name: str) -> Path | None:
        return None if self.dir is None else self.dir / name


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Path):
        return str(o)
    return str(o)


def _positive(name, v, minimum=1):
    if v is None or v < minimum:
        raise UsageError(f"--{name.replace('_', '-')} must be >= {minimum}, got {v}")


def _check_temps(temps, allow_zero=False) -> None:
    if not temps:
        raise UsageError("empty temperature grid")
    if any((t < 0) if allow_zero else (t <= 0) for t in temps):
        raise UsageError(f"temperatures must be {'>= 0' if allow_zero else '> 0'}: {temps}")


def _schedule(args, seed=None) -> McSchedule:
    for k in ("equilibration", "measurements", "thinning"):
        if getattr(args, k, None) is not None:
            _positive(k, getattr(args, k), 0 if k == "equilibration" else 1)
    return McSchedule(args.equilibration, args.measurements, args.thinning, args.seed if seed is None else seed)


def _workers(args) -> int:
    import os

    if args.workers is None:
        return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    _positive("workers", args.workers)
    return args.workers


def _graph_for(lattice: str):
    from .lattice import build_cubic, build_rhg, build_square

    if lattice == "square":
        return lambda L: build_square(L, L).graph
    if lattice == "rhg":
        return lambda L: build_rhg(L).graph
    return lambda L: build_cubic(L).graph


# --------------------------------------------------------------------------
# subcommands


def cmd_exact_corr(args) -> int:
    pos = parse_ints(args.positions)
    temps = parse_range(args.temps)
    _check_temps(temps)
    if len(pos) % 2 or not pos:
        raise UsageError(f"--positions needs an even, nonzero number of sites, got {pos}")
    if any(b <= a for a, b in zip(pos, pos[1:])):
        raise UsageError(f"--positions must be strictly increasing: {pos}")
    out = _Output(args, {"positions": pos, "temps": temps})
    rows = [(T, " ".join(map(str, pos)), even_row_correlation(pos, IsingParams.from_temperature(T))) for T in temps]
    out.csv(("T", "positions", "correlation"), rows)
    return EXIT_OK


def cmd_ising_mc(args) -> int:
    temps = sorted(parse_range(args.temps))
    _check_temps(temps)
    _positive("size", args.size, 2)
    sched = _schedule(args)
    out = _Output(args, {"lattice": args.lattice, "size": args.size, "temps": temps, "schedule": vars(sched)})
    g = _graph_for(args.lattice)(args.size)
    res = exchange_mc(g, temps, sched)
    n = g.n_sites
    rows = [
        (T, res.energy[k] / n, res.energy_err[k] / n, res.abs_m[k], res.abs_m_err[k], res.binder[k], res.binder_err[k])
        for k, T in enumerate(res.temperatures)
    ]
    out.csv(("T", "energy_per_site", "energy_err", "abs_m", "abs_m_err", "binder", "binder_err"), rows)
    return EXIT_OK


def cmd_tc_estimate(args) -> int:
    sizes = parse_ints(args.sizes)
    temps = sorted(parse_range(args.temps))
    _check_temps(temps)
    if len(sizes) < 2:
        raise UsageError("--sizes needs at least two sizes")
    if args.lattice == "cubic" and any(L % 2 or L < 4 for L in sizes):
        raise UsageError("cubic sizes must be even and >= 4")
    sched = _schedule(args)
    out = _Output(args, {"lattice": args.lattice, "sizes": sizes, "temps": temps, "schedule": vars(sched), "bootstrap": args.bootstrap})
    est = estimate_tc(_graph_for(args.lattice), sizes, temps, sched, n_boot=args.bootstrap)
    rows = [("mean", "", est.tc, est.ci[0], est.ci[1])]
    rows += [("pair", f"{a}-{b}", c, "", "") for (a, b), c in sorted(est.pair_crossings.items())]
    out.csv(("kind", "sizes", "tc", "ci_low", "ci_high"), rows)
    return EXIT_OK


def cmd_fidelity(args) -> int:
    from .experiments import FIDELITY_COLUMNS, fidelity_rows, plot_fidelity_curves
    from .gate_fidelity import GateSpec, MonteCarloOptions, fidelity_curve

    ls = parse_ints(args.l)
    temps = sorted(parse_range(args.temps))
    _check_temps(temps)
    for l in ls:
        _positive("l", l)
    _positive("mc_size", args.mc_size, 2)
    sched = _schedule(args)
    mc = MonteCarloOptions(size=args.mc_size, schedule=sched)
    out = _Output(args, {"gate": args.gate, "model": args.model, "l": ls, "temps": temps, "literal": args.literal, "mc_size": args.mc_size, "schedule": vars(sched)})
    curves = {}
    for l in ls:
        spec = GateSpec.from_name(args.gate, l, literal=args.literal)
        curves[f"{args.gate} l={l}"] = fidelity_curve(spec, temps, args.model, mc)
    rows = [tuple(r[c] for c in FIDELITY_COLUMNS) for pts in curves.values() for r in fidelity_rows(pts)]
    out.csv(FIDELITY_COLUMNS, rows)
    if out.dir is not None:
        plot_fidelity_curves(curves, out.dir / "fidelity.svg")
    return EXIT_OK


def cmd_tqec_sample(args) -> int:
    from ._rng import make_rng
    from .lattice import build_cubic, build_rhg
    from .rhg_tqec.chains import extract_syndrome, write_chain
    from .rhg_tqec.noise import IchErrorSampler, ScReducedErrorSampler, sample_fch_errors

    _positive("N", args.N, 2)
    _positive("count", args.count)
    _check_temps([args.temp], allow_zero=True)
    sched = _schedule(args)
    out = _Output(args, {"model": args.model, "N": args.N, "temp": args.temp, "count": args.count, "schedule": vars(sched)})
    beta = _betas([args.temp])[0]
    if args.model == "fch":
        cx = build_rhg(args.N)
        rng = make_rng(args.seed, "tqec-sample", "fch")
        draw = lambda: sample_fch_errors(cx, beta, rng)  # noqa: E731
    elif args.model == "ich":
        cx = build_rhg(args.N)
        draw = IchErrorSampler(cx, beta, sched, make_rng(args.seed, "tqec-sample", "ich")).draw
    else:
        cubic = build_cubic(2 * args.N)
        cx = cubic.rhg
        draw = ScReducedErrorSampler(cubic, beta, sched, make_rng(args.seed, "tqec-sample", "sc")).draw
    if out.dir is not None:
        out.dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(args.count):
        chain = draw()
        syn = extract_syndrome(cx, chain)
        p_def, d_def = syn.defects()
        name = f"sample_{k:04d}.chain"
        if out.dir is not None:
            write_chain(out.dir / name, cx, chain)
        rows.append((k, int(chain.primal.sum()), int(chain.dual.sum()), len(p_def), len(d_def), name if out.dir else ""))
    out.csv(("sample", "primal_weight", "dual_weight", "primal_defects", "dual_defects", "file"), rows)
    return EXIT_OK


def cmd_decode(args) -> int:
    from .rhg_tqec.chains import extract_syndrome, read_chain, read_syndrome, write_chain
    from .rhg_tqec.crpgm import class_label, free_energy_decode
    from .rhg_tqec.decoding import decode_verdict, mwpm_decode

    path = Path(args.infile)
    try:
        first = next((ln.split("#", 1)[0].split() for ln in path.read_text().splitlines() if ln.split("#", 1)[0].strip()), [""])[0]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if first == "rhg-chain":
        cx, actual = read_chain(path)
        syn = extract_syndrome(cx, actual)
    elif first == "rhg-syndrome":
        cx, syn = read_syndrome(path)
        actual = None
    else:
        raise UsageError(f"{path}: not an rhg-syndrome or rhg-chain fixture")
    if args.decoder == "free-energy":
        if args.temp is None or args.temp <= 0:
            raise UsageError("--decoder free-energy needs --temp > 0")
    sched = _schedule(args)
    out = _Output(args, {"infile": str(path), "decoder": args.decoder, "temp": args.temp, "schedule": vars(sched) if args.decoder == "free-energy" else None})
    p_def, d_def = syn.defects()
    correction = mwpm_decode(cx, syn)
    rows = [
        ("N", cx.N),
        ("primal_defects", len(p_def)),
        ("dual_defects", len(d_def)),
        ("correction_primal", " ".join(map(str, np.flatnonzero(correction.primal)))),
        ("correction_dual", " ".join(map(str, np.flatnonzero(correction.dual)))),
        ("correction_weight", correction.weight),
    ]
    if actual is not None:
        rows.append(("mwpm_success", decode_verdict(cx, actual, correction)))
    if args.decoder == "free-energy":
        res = free_energy_decode(cx, syn, correction, 1.0 / args.temp, sched)
        rows.append(("free_energy_class", class_label(res.best_class)))
        rows.append(("free_energy_inconclusive", res.inconclusive))
        for c, p in zip(res.classes, res.probabilities):
            rows.append((f"p[{class_label(c)}]", p))
        if actual is not None:
            rows.append(("free_energy_success", _class_success(cx, actual, correction, res.best_class)))
    out.csv(("key", "value"), rows)
    if out.dir is not None:
        write_chain(out.dir / "correction.chain", cx, correction)
    return EXIT_OK


def _class_success(cx, actual, correction, cls) -> bool:
    from .rhg_tqec.crpgm import logical_representative
    from .rhg_tqec.decoding import decode_verdict

    return decode_verdict(cx, actual, correction ^ logical_representative(cx, cls))


def cmd_threshold(args) -> int:
    from .experiments import ConfigError, ExperimentConfig, emit_results, estimate_threshold, run_logical_error_experiment

    d = {"model": args.model or "fch", "seed": args.seed}
    if args.sizes is not None:
        d["sizes"] = parse_ints(args.sizes)
    if args.temps is not None:
        d["temperatures"] = parse_range(args.temps)
    if args.trials is not None:
        d["trials"] = args.trials
    if args.block_size is not None:
        d["block_size"] = args.block_size
    sched = {k: getattr(args, k) for k in ("equilibration", "thinning") if getattr(args, k) is not None}
    if sched:
        d["schedule"] = sched
    try:
        cfg = ExperimentConfig.from_dict(d)
        cfg.validate(threshold=True)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    workers = _workers(args)
    out = _Output(args, {"experiment": cfg.to_dict()})
    table = run_logical_error_experiment(cfg, workers=workers, timing=args.timing)
    header = out.header
    if out.dir is None:
        sys.stdout.write(_table_csv(table, header))
    else:
        emit_results(table, "csv", out.dir / "threshold.csv", header=header)
        emit_results(table, "json", out.dir / "threshold.json", header=header)
        emit_results(table, "svg", out.dir / "threshold.svg", critical_temperature=cfg.critical_temperature)
    if len(cfg.sizes) >= 2 and len(cfg.temperatures) >= 4:
        est = estimate_threshold(table, n_boot=args.bootstrap, seed=args.seed)
        msg = f"# threshold T = {est.threshold:.12g}  CI [{est.ci[0]:.12g}, {est.ci[1]:.12g}]"
        print(msg, file=sys.stderr)
        if out.dir is not None:
            out.text(json.dumps({"threshold": est.threshold, "ci": list(est.ci), "pairs": {f"{a}-{b}": c for (a, b), c in est.pair_crossings.items()}}, indent=2, sort_keys=True) + "\n", "threshold_estimate.json")
    return EXIT_OK


def _table_csv(table, header) -> str:
    from .experiments import table_to_csv

    return table_to_csv(table, header)


def cmd_nishimori(args) -> int:
    from .experiments import nishimori_check

    betas = parse_range(args.betas)
    if not betas or any(b < 0 for b in betas):
        raise UsageError(f"--betas must be nonempty and >= 0: {betas}")
    _positive("N", args.N, 2)
    _positive("samples", args.samples, 2)
    sched = _schedule(args)
    out = _Output(args, {"N": args.N, "betas": betas, "samples": args.samples, "schedule": vars(sched)})
    rep = nishimori_check(args.N, betas, args.samples, sched)
    rows = [(r.beta, r.crpgm_energy, r.crpgm_err, r.ising_energy, r.ising_err, r.z, abs(r.z) <= 3) for r in rep.rows]
    out.csv(("beta", "crpgm_energy", "crpgm_err", "ising_energy", "ising_err", "z", "pass"), rows)
    print(f"# nishimori identity {'PASS' if rep.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "exact-corr": cmd_exact_corr,
    "ising-mc": cmd_ising_mc,
    "tc-estimate": cmd_tc_estimate,
    "fidelity": cmd_fidelity,
    "tqec-sample": cmd_tqec_sample,
    "decode": cmd_decode,
    "threshold": cmd_threshold,
    "nishimori-check": cmd_nishimori,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (NonConvergenceError, CriticalPointError, NoCrossingError) as exc:
        print(f"error: did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
