"""Experiment harness: logical-error sweeps, thresholds, the Nishimori check, result files.

Work is split into units of ``(N, T index, block)``.  Every unit draws from
its own random stream keyed by ``(seed, model, N, T index, block)`` (fCH
goes further and keys each trial), so results do not depend on how many
workers run the units or in which order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from ._rng import child_seed, make_rng
from .crossing import NoCrossingError, mean_pair_crossing
from .ising_exact import critical_temperature_2d
from .ising_mc import McSchedule, McWarning, MetropolisChain, binning_error
from .lattice import build_cubic, build_rhg
from .rhg_tqec.chains import ErrorChain, extract_syndrome
from .rhg_tqec.crpgm import QuenchedDisorder, crpgm_internal_energy
from .rhg_tqec.decoding import decode_verdict, mwpm_decode
from .rhg_tqec.noise import IchErrorSampler, ScReducedErrorSampler, sample_fch_errors

MODELS = ("fch", "ich", "sc-reduced")
CSV_COLUMNS = ("model", "N", "T", "p_fail", "stderr", "trials", "seconds")
FIDELITY_COLUMNS = ("model", "gate", "l", "T", "fidelity", "stderr", "provenance")

# default grids (temperature in units of J/k_B)
DEFAULT_GRIDS = {
    "fch": [round(0.45 + 0.025 * k, 10) for k in range(11)],
    "ich": [round(1.5 + 0.1 * k, 10) for k in range(10)],
    "sc-reduced": [round(1.5 + 0.1 * k, 10) for k in range(10)],
}
DEFAULT_SIZES = [6, 8, 10, 12]
# critical temperatures of the underlying Ising models, for plot markers
ISING_TC = {"fch": None, "ich": 2.8, "sc-reduced": 4.5}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {"type": "string", "enum": list(MODELS)},
        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "temperatures": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "equilibration": {"type": "integer", "minimum": 0},
                "measurements": {"type": "integer", "minimum": 1},
                "thinning": {"type": "integer", "minimum": 1},
                "init": {"type": "string", "enum": ["up", "random"]},
            },
        },
        "block_size": {"type": "integer", "minimum": 1},
        "max_warning_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "critical_temperature": {"type": ["number", "null"]},
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": ["string", "null"]} for k in ("csv", "json", "svg")},
        },
    },
    "required": ["model"],
}


class ConfigError(ValueError):
    pass


def normalize_model(name: str) -> str:
    m = str(name).strip().lower().replace("_", "-")
    if m in ("sc", "screduced"):
        m = "sc-reduced"
    if m not in MODELS:
        raise ConfigError(f"unknown model {name!r}; expected one of {MODELS}")
    return m


@dataclass
class ExperimentConfig:
    model: str
    sizes: list = field(default_factory=lambda: list(DEFAULT_SIZES))
    temperatures: list | None = None
    trials: int = 10_000
    seed: int = 0
    # chain protocol for correlated samplers: equilibration per block, thinning between draws
    schedule: McSchedule = field(default_factory=lambda: McSchedule(equilibration=200, measurements=1, thinning=5))
    block_size: int = 500
    max_warning_fraction: float = 0.1
    critical_temperature: float | None = None
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.model = normalize_model(self.model)
        if self.temperatures is None:
            self.temperatures = list(DEFAULT_GRIDS[self.model])
        if self.critical_temperature is None:
            self.critical_temperature = ISING_TC[self.model]
        self.sizes = [int(n) for n in self.sizes]
        self.temperatures = [float(t) for t in self.temperatures]
        self.validate()

    def validate(self, threshold: bool = False) -> None:
        if not self.sizes or not self.temperatures:
            raise ConfigError("size and temperature grids must be nonempty")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError(f"sizes must be strictly increasing: {self.sizes}")
        if any(b <= a for a, b in zip(self.temperatures, self.temperatures[1:])):
            raise ConfigError(f"temperatures must be strictly increasing: {self.temperatures}")
        if any(t < 0 for t in self.temperatures):
            raise ConfigError("temperatures must be >= 0")
        if min(self.sizes) < 2:
            raise ConfigError("RHG size must be >= 2")
        if self.trials < 1 or self.block_size < 1:
            raise ConfigError("trials and block_size must be positive")
        if threshold and self.trials < 100:
            raise ConfigError(f"threshold runs need >= 100 trials per point, got {self.trials}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(d, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(map(str, exc.absolute_path)) or "<root>"
            raise ConfigError(f"config {path}: {exc.message}") from None
        d = dict(d)
        if "schedule" in d:
            base = asdict(cls.__dataclass_fields__["schedule"].default_factory())
            base.update(d["schedule"])
            d["schedule"] = McSchedule(**base)
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = {k: v for k, v in d["schedule"].items() if k != "seed"}
        return d


# --------------------------------------------------------------------------
# result table


@dataclass(frozen=True)
class ResultRow:
    model: str
    N: int
    T: float
    p_fail: float
    stderr: float
    trials: int
    seconds: float = 0.0


def _r12(x) -> float:
    return float(format(float(x), ".12g"))


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    aborted: list = field(default_factory=list)

    def add(self, model: str, N: int, T: float, failures: int, trials: int, seconds: float = 0.0) -> ResultRow:
        # values are held at the 12 significant digits written to disk, so tables round-trip exactly
        p = failures / trials
        row = ResultRow(model, int(N), _r12(T), _r12(p), _r12(binomial_stderr(p, trials)), int(trials), _r12(seconds))
        self.rows.append(row)
        return row

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, ResultTable) and self.rows == other.rows

    def models(self) -> list[str]:
        return sorted({r.model for r in self.rows})

    def sizes(self, model: str | None = None) -> list[int]:
        return sorted({r.N for r in self.rows if model is None or r.model == model})

    def curve(self, N: int, model: str | None = None):
        """(T, p_fail, stderr, trials) arrays for one size, sorted by T."""
        rs = sorted((r for r in self.rows if r.N == N and (model is None or r.model == model)), key=lambda r: r.T)
        return (
            np.array([r.T for r in rs]),
            np.array([r.p_fail for r in rs]),
            np.array([r.stderr for r in rs]),
            np.array([r.trials for r in rs]),
        )


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def table_to_csv(table: ResultTable, header: dict | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write("# " + json.dumps(header, sort_keys=True, default=_json_default) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in table.rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def table_from_csv(text: str) -> ResultTable:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV columns {reader.fieldnames}")
    t = ResultTable()
    for d in reader:
        t.rows.append(
            ResultRow(d["model"], int(d["N"]), float(d["T"]), float(d["p_fail"]), float(d["stderr"]), int(d["trials"]), float(d["seconds"]))
        )
    return t


def read_csv(path) -> ResultTable:
    return table_from_csv(Path(path).read_text())


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, McSchedule):
        return asdict(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_results(table: ResultTable, fmt: str, path, *, header: dict | None = None, critical_temperature: float | None = None) -> Path:
    """Write ``table`` as csv, json or svg to ``path``."""
    if not len(table):
        raise ValueError("nothing to emit: empty table")
    if fmt == "csv":
        return _write_text(path, table_to_csv(table, header))
    if fmt == "json":
        doc = {"config": header or {}, "columns": list(CSV_COLUMNS), "rows": [asdict(r) for r in table.rows]}
        return _write_text(path, json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    if fmt == "svg":
        return _plot_table(table, path, critical_temperature)
    raise ValueError(f"unknown format {fmt!r}; expected csv, json or svg")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "thermal-mbqc"
    return plt


def _save(fig, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _plot_table(table: ResultTable, path, tc) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for model in table.models():
        for N in table.sizes(model):
            T, p, e, _ = table.curve(N, model)
            label = f"N={N}" if len(table.models()) == 1 else f"{model} N={N}"
            ax.errorbar(T, p, yerr=e, marker="o", ms=3, capsize=2, label=label)
    if tc is not None:
        ax.axvline(tc, ls="--", color="k", lw=0.8)
    ax.set_xlabel("T")
    ax.set_ylabel("logical error probability")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def fidelity_rows(points) -> list[dict]:
    return [
        {"model": p.model, "gate": p.spec.gate, "l": p.spec.l, "T": p.temperature, "fidelity": p.fidelity, "stderr": p.stderr, "provenance": "+".join(sorted(set(p.provenance)))}
        for p in points
    ]


def fidelity_to_csv(points, header: dict | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write("# " + json.dumps(header, sort_keys=True, default=_json_default) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIDELITY_COLUMNS)
    for r in fidelity_rows(points):
        w.writerow([_fmt(r[c]) for c in FIDELITY_COLUMNS])
    return buf.getvalue()


def plot_fidelity_curves(curves: dict, path, critical_temperature: float | None = None) -> Path:
    """Fidelity vs T per labelled curve, with the 1/4 floor and a Tc marker."""
    plt = _pyplot()
    tc = critical_temperature_2d() if critical_temperature is None else critical_temperature
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for label, pts in curves.items():
        T = [p.temperature for p in pts]
        ax.errorbar(T, [p.fidelity for p in pts], yerr=[p.stderr for p in pts], ms=3, marker="o", capsize=2, label=str(label))
    ax.axhline(0.25, ls="--", color="gray", lw=0.8)
    ax.axvline(tc, ls="--", color="k", lw=0.8)
    ax.set_xlabel("T")
    ax.set_ylabel("gate fidelity")
    ax.set_ylim(0.2, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


# --------------------------------------------------------------------------
# logical error sweeps


class PointAborted(RuntimeError):
    pass


def _beta(T: float) -> float:
    return math.inf if T == 0 else 1.0 / T


def _run_unit(model: str, N: int, t_idx: int, T: float, block: int, start: int, count: int, seed: int, schedule: McSchedule):
    """Failures among trials ``start .. start+count-1`` of one (N, T) point."""
    beta = _beta(T)
    failures = 0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", McWarning)
        if model == "fch":
            cx = build_rhg(N)
            for trial in range(start, start + count):
                chain = sample_fch_errors(cx, beta, make_rng(seed, model, N, t_idx, "trial", trial))
                failures += _fails(cx, chain)
        else:
            rng = make_rng(seed, model, N, t_idx, "block", block)
            if model == "ich":
                cx = build_rhg(N)
                sampler = IchErrorSampler(cx, beta, schedule, rng)
            else:
                cubic = build_cubic(2 * N)
                cx = cubic.rhg
                sampler = ScReducedErrorSampler(cubic, beta, schedule, rng)
            for _ in range(count):
                failures += _fails(cx, sampler.draw())
    n_warn = sum(1 for w in caught if issubclass(w.category, McWarning))
    return failures, n_warn


def _fails(cx, chain: ErrorChain) -> int:
    if not chain.primal.any() and not chain.dual.any():
        return 0
    correction = mwpm_decode(cx, extract_syndrome(cx, chain))
    return int(not decode_verdict(cx, chain, correction))


def _units(config: ExperimentConfig):
    for N in config.sizes:
        for t_idx, T in enumerate(config.temperatures):
            for block, start in enumerate(range(0, config.trials, config.block_size)):
                count = min(config.block_size, config.trials - start)
                yield (config.model, N, t_idx, T, block, start, count, config.seed, config.schedule)


def run_logical_error_experiment(config: ExperimentConfig, workers: int = 1, timing: bool = False, progress=None) -> ResultTable:
    """Failure fraction of sample/syndrome/MWPM/verdict trials at every (N, T).

    ``seconds`` is the summed wall time of the point's units when ``timing``
    is set and 0 otherwise, which keeps the CSV byte-identical across runs.
    Points whose McWarning count exceeds ``max_warning_fraction`` of the
    trials are dropped and listed in ``table.aborted``.
    """
    units = list(_units(config))
    results = {}

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_timed_unit, u) for u in units]
            for u, f in zip(units, futs):
                results[u[:6]] = f.result()
                if progress:
                    progress(u)
    else:
        for u in units:
            results[u[:6]] = _timed_unit(u)
            if progress:
                progress(u)

    table = ResultTable()
    for N in config.sizes:
        for t_idx, T in enumerate(config.temperatures):
            keys = [k for k in results if k[1] == N and k[2] == t_idx]
            fails = sum(results[k][0][0] for k in keys)
            warns = sum(results[k][0][1] for k in keys)
            secs = sum(results[k][1] for k in keys) if timing else 0.0
            if warns > config.max_warning_fraction * config.trials:
                table.aborted.append((config.model, N, T, warns))
                warnings.warn(f"point N={N}, T={T} aborted: {warns} MC warnings in {config.trials} trials", McWarning, stacklevel=2)
                continue
            table.add(config.model, N, T, fails, config.trials, secs)
    return table


def _timed_unit(u):
    t0 = time.perf_counter()
    r = _run_unit(*u)
    return r, time.perf_counter() - t0


def chance_level(N: int, trials: int = 2000, seed: int = 0) -> ResultRow:
    """Measured MWPM failure rate against uniformly random errors (p = 1/2 per qubit)."""
    cx = build_rhg(N)
    fails = 0
    for trial in range(trials):
        rng = make_rng(seed, "chance", N, trial)
        chain = ErrorChain(rng.random(cx.n_faces) < 0.5, rng.random(cx.n_edges) < 0.5)
        fails += _fails(cx, chain)
    p = fails / trials
    return ResultRow("chance", N, math.inf, p, binomial_stderr(p, trials), trials)


# --------------------------------------------------------------------------
# threshold


@dataclass
class ThresholdEstimate:
    threshold: float
    ci: tuple[float, float]
    pair_crossings: dict
    n_boot_ok: int


def estimate_threshold(table: ResultTable, model: str | None = None, *, n_boot: int = 500, confidence: float = 0.95, seed: int = 0, window: int = 2) -> ThresholdEstimate:
    """Mean pairwise crossing of the failure curves with a parametric bootstrap CI.

    The bootstrap redraws every point as Binomial(trials, p_fail)/trials and
    recomputes the mean crossing; replicas without a crossing are skipped.
    Raises NoCrossingError if the measured curves do not cross.
    """
    models = table.models()
    if model is None:
        if len(models) != 1:
            raise ValueError(f"table holds several models {models}; choose one")
        model = models[0]
    sizes = table.sizes(model)
    if len(sizes) < 2:
        raise ValueError("need at least two sizes for a crossing")
    curves = {N: table.curve(N, model) for N in sizes}
    T = curves[sizes[0]][0]
    for N in sizes:
        if not np.array_equal(curves[N][0], T):
            raise ValueError("all sizes must share one temperature grid")
    if len(T) < 4:
        raise ValueError("need at least 4 temperatures around the crossing")
    est, pairs = mean_pair_crossing(T, {N: curves[N][1] for N in sizes}, window)
    rng = make_rng(seed, "threshold-bootstrap")
    boot = []
    for _ in range(n_boot):
        bc = {N: rng.binomial(curves[N][3], curves[N][1]) / curves[N][3] for N in sizes}
        try:
            boot.append(mean_pair_crossing(T, bc, window)[0])
        except NoCrossingError:
            continue
    a = (1 - confidence) / 2
    ci = (float(np.quantile(boot, a)), float(np.quantile(boot, 1 - a))) if boot else (math.nan, math.nan)
    return ThresholdEstimate(est, ci, pairs, len(boot))


# --------------------------------------------------------------------------
# Nishimori identity


@dataclass
class NishimoriRow:
    beta: float
    crpgm_energy: float
    crpgm_err: float
    ising_energy: float
    ising_err: float

    @property
    def z(self) -> float:
        d = self.crpgm_energy - self.ising_energy
        s = math.hypot(self.crpgm_err, self.ising_err)
        if s == 0:
            return 0.0 if d == 0 else math.copysign(math.inf, d)
        return d / s


@dataclass
class NishimoriReport:
    N: int
    rows: list

    @property
    def passed(self) -> bool:
        return all(abs(r.z) <= 3 for r in self.rows)


def ising_internal_energy(graph, beta: float, schedule: McSchedule, rng) -> tuple[float, float]:
    chain = MetropolisChain(graph, beta, rng, schedule.init)
    if schedule.equilibration:
        chain.sweep(schedule.equilibration)
    E = np.empty(schedule.measurements)
    for t in range(schedule.measurements):
        chain.sweep(schedule.thinning)
        E[t] = chain.config.energy
    mean, err, _ = binning_error(E)
    return mean, err


def nishimori_check(
    N: int,
    betas,
    samples: int,
    schedule: McSchedule,
    *,
    disorder_schedule: McSchedule | None = None,
    ising_schedule: McSchedule | None = None,
) -> NishimoriReport:
    """Compare the disorder-averaged cRPGM energy with the pure Ising energy.

    Disorder is drawn on the Nishimori line: iCH error chains at the same
    beta, taken ``disorder_schedule.thinning`` sweeps apart from one chain.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if samples < 2:
        raise ValueError("need at least 2 disorder samples")
    cx = build_rhg(N)
    dsched = disorder_schedule or McSchedule(equilibration=1000, measurements=1, thinning=20, seed=schedule.seed)
    isched = ising_schedule or McSchedule(equilibration=1000, measurements=20_000, seed=schedule.seed)
    rows = []
    for k, beta in enumerate(betas):
        beta = float(beta)
        sampler = IchErrorSampler(cx, beta, dsched, make_rng(schedule.seed, "nishimori-disorder", k))
        dis = [QuenchedDisorder.from_chain(sampler.draw()) for _ in range(samples)]
        gsched = McSchedule(schedule.equilibration, schedule.measurements, schedule.thinning, child_seed(schedule.seed, "nishimori-gauge", k), schedule.init)
        ce = crpgm_internal_energy(cx, beta, dis, gsched)
        ie, ie_err = ising_internal_energy(cx.graph, beta, isched, make_rng(schedule.seed, "nishimori-ising", k))
        rows.append(NishimoriRow(beta, ce.mean, ce.stderr, ie, ie_err))
    return NishimoriReport(N, rows)
