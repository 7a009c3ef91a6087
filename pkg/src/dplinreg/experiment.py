"""Experiment configuration, the algorithm registry and the Monte Carlo runner."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .core import BudgetLedger, Dataset, PredictionPair, PrivacyBudget, RandomSeed
from .datagen import (
    SyntheticSpec,
    default_tract_specs,
    gen_oi_family,
    gen_synthetic,
    read_dataset_csv,
    write_dataset_csv,
)
from .dp_median import SmoothSensParams
from .dp_regression import (
    DEFAULT_DELTA,
    GradDescentParams,
    MedianVariant,
    Release,
    TractFamily,
    dp_grad_descent,
    dp_theilsen,
    mos_eligible,
    mos_release,
    noisy_intercept,
    noisy_stats,
)
from .errors import ConfigError, NoValidPairs, TooFewPoints
from .estimators import matching_schedule, ols_fit, ols_standard_error, sufficient_stats, theilsen
from .metrics import TrialReport, error_bound, metric_rows, prediction_errors, ratio_cdf

SCHEMA_VERSION = 1

# -- algorithm registry --

_RANGE_KEYS = {"r_l", "r_u"}


@dataclass(frozen=True)
class Algorithm:
    """A named, fully configured estimator.

    ``run(dataset, epsilon, seed)`` returns a :class:`Release`; ``budget``
    gives the total a single run may spend.
    """

    name: str
    family: str
    params: dict = field(default_factory=dict)

    @property
    def private(self) -> bool:
        return self.family not in ("ols", "theilsen")

    def budget(self, epsilon: float, delta: float = DEFAULT_DELTA) -> PrivacyBudget | None:
        if self.family in ("ols", "theilsen"):
            return None
        if self.family == "dpgd":
            flavor = self.params["flavor"]
            if flavor == "approx":
                return PrivacyBudget.approx(epsilon, self.params.get("delta", delta))
            if flavor == "zcdp":
                return PrivacyBudget.zcdp(epsilon * epsilon / 2)
        return PrivacyBudget.pure(epsilon)

    def run(self, d: Dataset, epsilon: float, seed, delta: float = DEFAULT_DELTA) -> Release:
        p = self.params
        if self.family == "ols":
            return Release(ols_fit(d).predictions)
        if self.family == "theilsen":
            k = p.get("k")
            if k is not None:
                k = min(k, len(matching_schedule(d.n)))
            return Release(theilsen(d, k, seed))
        if self.family == "noisy_stats":
            return noisy_stats(d, epsilon, seed)
        if self.family == "noisy_intercept":
            return noisy_intercept(d, epsilon, seed)
        if self.family == "dp_theilsen":
            k = p.get("k")
            if k is not None:
                k = min(k, len(matching_schedule(d.n)))
            kind = p["variant"]
            if kind == "exp":
                variant = MedianVariant.exp()
            elif kind == "wide":
                variant = MedianVariant.wide(p.get("theta", 0.01))
            else:
                variant = MedianVariant.ss(p.get("d", 3), p.get("beta", 0.5))
            return dp_theilsen(d, epsilon, k, variant, p.get("r_l", -0.5), p.get("r_u", 1.5), seed)
        if self.family == "dpgd":
            gd = GradDescentParams(
                T=p.get("T", 80),
                tau=p.get("tau", 1.0),
                init=PredictionPair(*p.get("init", (0.5, 0.5))),
            )
            return dp_grad_descent(d, self.budget(epsilon, delta), gd, seed, p.get("step", "coordinate"))
        raise ConfigError(f"{self.name} runs on a tract family, not a single dataset")


_REGISTRY: list[tuple[re.Pattern, Callable[[re.Match], tuple[str, dict, set]]]] = [
    (re.compile(r"OLS"), lambda m: ("ols", {}, set())),
    (re.compile(r"TheilSen(?:(\d+)Match|(Match))?"),
     lambda m: ("theilsen", {"k": _k_of(m)}, set())),
    (re.compile(r"NoisyStats"), lambda m: ("noisy_stats", {}, set())),
    (re.compile(r"NoisyIntercept"), lambda m: ("noisy_intercept", {}, set())),
    (re.compile(r"DP(Exp|Wide|SS)TheilSen(?:(\d+)Match|(Match))?"),
     lambda m: ("dp_theilsen", {"variant": m.group(1).lower(), "k": _k_of(m, 2)},
                _RANGE_KEYS | {"wide": {"theta"}, "ss": {"d", "beta"}}.get(m.group(1).lower(), set()))),
    (re.compile(r"DPGD(Pure|Approx|zCDP)"),
     lambda m: ("dpgd", {"flavor": m.group(1).lower()},
                {"T", "tau", "init", "step"} | ({"delta"} if m.group(1) == "Approx" else set()))),
    (re.compile(r"OI|MOS"), lambda m: ("mos", {}, set())),
]


def _k_of(m: re.Match, start: int = 1):
    digits, single = m.group(start), m.group(start + 1)
    if digits is not None:
        k = int(digits)
        if k < 1:
            raise ConfigError(f"{m.group(0)}: k must be at least 1")
        return k
    return 1 if single else None


def parse_algorithm(spec) -> Algorithm:
    """Build an :class:`Algorithm` from a name or ``{"name": ..., **hyperparameters}``.

    Names follow the patterns ``OLS``, ``TheilSen[kMatch]``, ``NoisyStats``,
    ``NoisyIntercept``, ``DP{Exp,Wide,SS}TheilSen[Match|kMatch]``,
    ``DPGD{Pure,Approx,zCDP}`` and ``OI``.
    """
    if isinstance(spec, str):
        name, overrides = spec, {}
    elif isinstance(spec, dict) and isinstance(spec.get("name"), str):
        overrides = {k: v for k, v in spec.items() if k != "name"}
        name = spec["name"]
    else:
        raise ConfigError(f"algorithm entry must be a name or an object with 'name', got {spec!r}")
    for pattern, build in _REGISTRY:
        m = pattern.fullmatch(name)
        if m:
            family, params, allowed = build(m)
            unknown = set(overrides) - allowed
            if unknown:
                raise ConfigError(f"{name}: unknown hyperparameter(s) {sorted(unknown)}")
            params.update(overrides)
            _validate_params(name, family, params)
            return Algorithm(name, family, params)
    raise ConfigError(f"unknown algorithm {name!r}")


def _validate_params(name, family, p):
    try:
        if family == "dp_theilsen":
            if not p.get("r_l", -0.5) < p.get("r_u", 1.5):
                raise ConfigError(f"{name}: need r_l < r_u")
            variant = MedianVariant(p["variant"], p.get("theta", 0.01), p.get("d", 3), p.get("beta", 0.5))
            if variant.kind == "wide" and not variant.theta > 0:
                raise ConfigError(f"{name}: theta must be positive")
            if variant.kind == "ss":
                SmoothSensParams(1.0, d=variant.d, beta=variant.beta)
        elif family == "dpgd":
            GradDescentParams(T=p.get("T", 80), tau=p.get("tau", 1.0))
            if p.get("step", "coordinate") not in ("coordinate", "norm"):
                raise ConfigError(f"{name}: step must be 'coordinate' or 'norm'")
            if "delta" in p and not 0 < p["delta"] < 1:
                raise ConfigError(f"{name}: delta must lie in (0, 1)")
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{name}: {e}") from None


# -- configuration --

_TOP_KEYS = {
    "input", "algorithms", "epsilon", "delta", "trials", "q", "seed", "out",
    "workers", "strict_csv", "header_timestamp", "sweep",
}
_INPUT_KEYS = {
    "csv": {"type", "path"},
    "synthetic": {"type", "n", "sigma_x2", "sigma_e2", "alpha", "beta", "xbar", "datasets"},
    "oi_family": {"type", "tracts", "state_id"},
}
_SWEEP_KEYS = {"parameter", "values", "datasets", "trials", "x_new"}
SWEEP_PARAMETERS = ("n", "sigma_x2", "sigma_e2", "epsilon", "x_new")

DEFAULT_SYNTHETIC = {"type": "synthetic", "n": 1000, "sigma_x2": 0.02, "sigma_e2": 0.005, "datasets": 1}


@dataclass
class ExperimentConfig:
    input: dict = field(default_factory=lambda: dict(DEFAULT_SYNTHETIC))
    algorithms: list = field(default_factory=lambda: ["NoisyStats", "DPExpTheilSen"])
    epsilon: list = field(default_factory=lambda: [1.0])
    delta: float = DEFAULT_DELTA
    trials: int = 100
    q: list = field(default_factory=lambda: [68])
    seed: int = 0
    out: str = "results"
    workers: int = 1
    strict_csv: bool = False
    header_timestamp: bool = True
    sweep: dict | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(read_config_json(path))

    def validate(self) -> None:
        if isinstance(self.epsilon, (int, float)):
            self.epsilon = [self.epsilon]
        if isinstance(self.q, (int, float)):
            self.q = [self.q]
        if not self.epsilon or any(not _num(e) or not e > 0 for e in self.epsilon):
            raise ConfigError(f"every epsilon must be a positive number, got {self.epsilon}")
        if not _num(self.delta) or not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials}")
        if not self.q or any(not _num(q) or not 0 <= q <= 100 for q in self.q):
            raise ConfigError(f"every q must lie in [0, 100], got {self.q}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers}")
        if not isinstance(self.algorithms, list) or not self.algorithms:
            raise ConfigError("algorithms must be a non-empty list")
        self.parsed_algorithms()
        self._validate_input()
        if self.sweep is not None:
            self._validate_sweep()

    def _validate_input(self):
        inp = self.input
        if not isinstance(inp, dict) or inp.get("type") not in _INPUT_KEYS:
            raise ConfigError(f"input.type must be one of {sorted(_INPUT_KEYS)}")
        unknown = set(inp) - _INPUT_KEYS[inp["type"]]
        if unknown:
            raise ConfigError(f"unknown input key(s) {sorted(unknown)}")
        if inp["type"] == "csv" and not isinstance(inp.get("path"), str):
            raise ConfigError("csv input needs a 'path'")
        if inp["type"] == "synthetic":
            try:
                self.synthetic_spec()
            except (ValueError, TypeError) as e:
                raise ConfigError(f"input: {e}") from None
            if int(inp.get("datasets", 1)) < 1:
                raise ConfigError("input.datasets must be at least 1")
        if inp["type"] == "oi_family" and int(inp.get("tracts", 100)) < 1:
            raise ConfigError("input.tracts must be at least 1")
        if inp["type"] != "oi_family" and any(a.family == "mos" for a in self.parsed_algorithms()):
            raise ConfigError("OI needs an oi_family input")

    def _validate_sweep(self):
        sw = self.sweep
        if not isinstance(sw, dict):
            raise ConfigError("sweep must be an object")
        unknown = set(sw) - _SWEEP_KEYS
        if unknown:
            raise ConfigError(f"unknown sweep key(s) {sorted(unknown)}")
        if sw.get("parameter") not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {list(SWEEP_PARAMETERS)}")
        values = sw.get("values")
        if not isinstance(values, list) or not values or not all(_num(v) for v in values):
            raise ConfigError("sweep.values must be a non-empty list of numbers")
        if self.input.get("type") != "synthetic":
            raise ConfigError("sweeps need a synthetic input")
        for key in ("datasets", "trials"):
            if key in sw and (not isinstance(sw[key], int) or sw[key] < 1):
                raise ConfigError(f"sweep.{key} must be a positive integer")

    def parsed_algorithms(self) -> list[Algorithm]:
        algos = [parse_algorithm(a) for a in self.algorithms]
        names = [a.name for a in algos]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate algorithm names in {names}")
        return algos

    def synthetic_spec(self, **overrides) -> SyntheticSpec:
        inp = {k: v for k, v in self.input.items() if k not in ("type", "datasets")}
        inp.update(overrides)
        return SyntheticSpec(**inp)

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "algorithms": self.algorithms,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "trials": self.trials,
            "q": self.q,
            "seed": self.seed,
            "sweep": self.sweep,
        }


def read_config_json(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


# -- datasets --

@dataclass(frozen=True, eq=False)
class DatasetItem:
    dataset_id: str
    dataset: Dataset
    truth: PredictionPair | None = None


@dataclass(frozen=True, eq=False)
class Inputs:
    items: tuple[DatasetItem, ...]
    family: TractFamily | None = None
    meta: dict = field(default_factory=dict)


def load_inputs(cfg: ExperimentConfig) -> Inputs:
    inp = cfg.input
    root = RandomSeed(cfg.seed)
    if inp["type"] == "csv":
        d = read_dataset_csv(inp["path"], strict=cfg.strict_csv)
        return Inputs((DatasetItem(Path(inp["path"]).stem, d),), meta={"source": "csv"})
    if inp["type"] == "synthetic":
        spec = cfg.synthetic_spec()
        items = []
        clipped = []
        for i in range(int(inp.get("datasets", 1))):
            s = gen_synthetic(spec, root.spawn("dataset", i))
            items.append(DatasetItem(f"synthetic-{i:04d}", s.dataset, s.truth))
            clipped.append(s.clipped_fraction)
        return Inputs(tuple(items), meta={"source": "synthetic", "clipped_fraction": clipped})
    state = inp.get("state_id", "state")
    specs = default_tract_specs(int(inp.get("tracts", 100)), root.spawn("tract-specs"))
    family = gen_oi_family(specs, root.spawn("family"), state)
    state_median = float(np.median(np.concatenate([d.x for _, d in family.tracts])))
    items = tuple(DatasetItem(tid, d) for tid, d in family.tracts if mos_eligible(d, state_median))
    meta = {
        "source": "oi_family",
        "rank_scope": "state",
        "tracts": len(family),
        "eligible_tracts": len(items),
    }
    return Inputs(items, family, meta)


# -- running --

@dataclass(frozen=True)
class TrialRow:
    dataset_id: str
    algorithm: str
    epsilon: float
    trial: int
    pair: PredictionPair | None
    wall_time: float


def trial_seed(root: RandomSeed, dataset_id: str, algorithm: str, epsilon: float, trial: int) -> RandomSeed:
    return root.spawn(dataset_id, algorithm, repr(float(epsilon)), trial)


def _check_ledger(algo: Algorithm, release: Release, epsilon: float, delta: float) -> BudgetLedger | None:
    budget = algo.budget(epsilon, delta)
    if budget is None:
        return None
    return BudgetLedger(budget).record(release.spent)


def _run_one(algo: Algorithm, d: Dataset, epsilon: float, seed, delta: float):
    start = time.perf_counter()
    try:
        release = algo.run(d, epsilon, seed, delta)
    except NoValidPairs:
        release = Release(None)
    elapsed = time.perf_counter() - start
    ledger = _check_ledger(algo, release, epsilon, delta)
    return release.pair, elapsed, ledger


def _dataset_job(args):
    item, algos, epsilons, trials, seed, delta = args
    root = RandomSeed(seed)
    rows, ledgers = [], {}
    for algo in algos:
        if algo.family == "mos":
            continue
        for eps in (epsilons if algo.private else [None]):
            for t in range(trials):
                s = trial_seed(root, item.dataset_id, algo.name, eps or 0.0, t)
                pair, wall, ledger = _run_one(algo, item.dataset, eps or 0.0, s, delta)
                rows.append(TrialRow(item.dataset_id, algo.name, eps, t, pair, wall))
                if ledger is not None and (algo.name, eps) not in ledgers:
                    ledgers[(algo.name, eps)] = ledger.to_dict()
    return rows, ledgers


def _mos_rows(family, items, algo, epsilons, trials, seed):
    root = RandomSeed(seed)
    keep = {it.dataset_id for it in items}
    rows, ledgers = [], {}
    for eps in epsilons:
        for t in range(trials):
            start = time.perf_counter()
            rel = mos_release(family, eps, trial_seed(root, family.state_id, algo.name, eps, t))
            wall = (time.perf_counter() - start) / max(len(family), 1)
            for tr in rel.tracts:
                if tr.tract_id in keep:
                    rows.append(TrialRow(tr.tract_id, algo.name, eps, t, tr.pair, wall))
            if (algo.name, eps) not in ledgers:
                ledgers[(algo.name, eps)] = BudgetLedger(PrivacyBudget.pure(eps)).record(rel.spent).to_dict()
    return rows, ledgers


def run_trials(cfg: ExperimentConfig, inputs: Inputs, trials: int | None = None):
    """Every (dataset, algorithm, epsilon, trial) run, in a deterministic order."""
    algos = cfg.parsed_algorithms()
    trials = trials or cfg.trials
    jobs = [(it, algos, cfg.epsilon, trials, cfg.seed, cfg.delta) for it in inputs.items]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_dataset_job, jobs))
    else:
        results = [_dataset_job(j) for j in jobs]
    rows, ledgers = [], {}
    for r, led in results:
        rows.extend(r)
        for key, v in led.items():
            ledgers.setdefault(key, v)
    for algo in algos:
        if algo.family == "mos":
            r, led = _mos_rows(inputs.family, inputs.items, algo, cfg.epsilon, trials, cfg.seed)
            rows.extend(r)
            ledgers.update(led)
    order = {a.name: i for i, a in enumerate(algos)}
    ids = {it.dataset_id: i for i, it in enumerate(inputs.items)}
    rows.sort(key=lambda r: (ids[r.dataset_id], order[r.algorithm], r.epsilon or 0.0, r.trial))
    return rows, ledgers


def build_reports(inputs: Inputs, rows: list[TrialRow]) -> list[TrialReport]:
    grouped: dict[tuple, list[TrialRow]] = {}
    for r in rows:
        grouped.setdefault((r.dataset_id, r.algorithm, r.epsilon), []).append(r)
    by_id = {it.dataset_id: it for it in inputs.items}
    baselines = {}
    reports = []
    for (did, algo, eps), rs in grouped.items():
        if did not in baselines:
            baselines[did] = _baseline(by_id[did].dataset)
        ols, sigma = baselines[did]
        reports.append(TrialReport(did, algo, [r.pair for r in rs], ols, sigma, by_id[did].truth, eps))
    return reports


def _baseline(d: Dataset):
    fit = ols_fit(d)
    stats = sufficient_stats(d)
    try:
        sigma = (ols_standard_error(fit, stats, 0.25), ols_standard_error(fit, stats, 0.75))
    except TooFewPoints:
        sigma = (0.0, 0.0)
    return fit.predictions, sigma


# -- output --

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


class OutputWriter:
    def __init__(self, out: Path, timestamp: bool):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if timestamp else None
        self.written: list[Path] = []

    def csv(self, name: str, header: list[str], rows) -> Path:
        buf = io.StringIO()
        if self.stamp:
            buf.write(f"# generated {self.stamp}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])
        return self._write(name, buf.getvalue())

    def json(self, name: str, payload: dict) -> Path:
        if self.stamp:
            payload = {"generated_at": self.stamp, **payload}
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
        return self._write(name, text)

    def _write(self, name, text):
        path = self.out / name
        path.write_text(text)
        self.written.append(path)
        return path


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    return v


TRIAL_COLUMNS = ["dataset_id", "algorithm", "epsilon", "trial", "p25", "p75", "failed"]
TIMING_COLUMNS = ["dataset_id", "algorithm", "epsilon", "trial", "wall_time_s"]
METRIC_COLUMNS = ["dataset_id", "algorithm", "epsilon", "q", "which", "vs", "c_hat", "sigma_hat", "ratio", "failure_rate"]
CDF_COLUMNS = ["epsilon", "q", "which", "ratio", "cdf"]
SWEEP_COLUMNS = ["parameter", "value", "algorithm", "epsilon", "x_new", "mean_ratio", "datasets", "trials", "failure_rate", "excluded"]


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def run_fit(cfg: ExperimentConfig) -> dict:
    """Run every configured trial and write the result files into ``cfg.out``.

    Returns the summary dictionary that is also written to ``summary.json``.
    """
    inputs = load_inputs(cfg)
    if not inputs.items:
        raise ConfigError("no datasets to run on (every tract was ineligible)")
    rows, ledgers = run_trials(cfg, inputs)
    reports = build_reports(inputs, rows)
    w = OutputWriter(Path(cfg.out), cfg.header_timestamp)

    w.csv("trials.csv", TRIAL_COLUMNS, (
        {"dataset_id": r.dataset_id, "algorithm": r.algorithm, "epsilon": r.epsilon, "trial": r.trial,
         "p25": r.pair.p25 if r.pair else None, "p75": r.pair.p75 if r.pair else None,
         "failed": r.pair is None}
        for r in rows
    ))
    w.csv("timing.csv", TIMING_COLUMNS, (
        {"dataset_id": r.dataset_id, "algorithm": r.algorithm, "epsilon": r.epsilon,
         "trial": r.trial, "wall_time_s": round(r.wall_time, 6)}
        for r in rows
    ))
    vs_list = ("ols", "truth") if any(it.truth is not None for it in inputs.items) else ("ols",)
    metric = [m for rep in reports for m in metric_rows(rep, cfg.q, vs_list)]
    w.csv("metrics.csv", METRIC_COLUMNS, metric)

    summary_algos = []
    for algo in cfg.parsed_algorithms():
        cdf_rows = []
        for eps in (cfg.epsilon if algo.private else [None]):
            reps = [r for r in reports if r.algorithm == algo.name and r.epsilon == eps]
            entry = {"algorithm": algo.name, "epsilon": eps, "private": algo.private,
                     "failure_rate": float(np.mean([r.failure_rate for r in reps])), "ratio": {}}
            for q in cfg.q:
                for which in ("p25", "p75"):
                    cdf = ratio_cdf(reps, q, which, "ols")
                    cdf_rows.extend({"epsilon": eps, "q": q, "which": which, "ratio": x, "cdf": y}
                                    for x, y in cdf.points)
                    entry["ratio"][f"q{_fmt(q)}_{which}"] = {
                        "median": cdf.median(),
                        "fraction_below_1": cdf.fraction_below(1.0),
                        "excluded_zero_se": cdf.excluded_count,
                    }
            entry["ledger"] = ledgers.get((algo.name, eps))
            summary_algos.append(entry)
        w.csv(f"ratio_cdf_{_safe(algo.name)}.csv", CDF_COLUMNS, cdf_rows)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "config": cfg.to_dict(),
        "inputs": {"datasets": [it.dataset_id for it in inputs.items], **inputs.meta},
        "algorithms": summary_algos,
        "files": sorted(p.name for p in w.written) + ["summary.json"],
    }
    w.json("summary.json", summary)
    return summary


def run_sweep(cfg: ExperimentConfig) -> dict:
    """Mean Ĉ_true(q)/σ(p̂) per algorithm at each grid point of one synthetic parameter.

    σ is the model's sampling standard deviation of the OLS prediction, so the
    reference is the ground truth.
    """
    if cfg.sweep is None:
        raise ConfigError("run_sweep needs a 'sweep' section")
    sw = cfg.sweep
    param = sw["parameter"]
    n_datasets = sw.get("datasets", int(cfg.input.get("datasets", 1)))
    trials = sw.get("trials", cfg.trials)
    base_x = sw.get("x_new", 0.25)
    q = cfg.q[0]
    algos = cfg.parsed_algorithms()
    out_rows = []
    for value in sw["values"]:
        overrides = {}
        epsilons = cfg.epsilon
        x_new = base_x
        if param == "epsilon":
            epsilons = [value]
        elif param == "x_new":
            x_new = value
        else:
            overrides[param] = int(value) if param == "n" else value
        try:
            spec = cfg.synthetic_spec(**overrides)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"sweep value {param}={value}: {e}") from None
        sd = spec.prediction_sd(x_new)
        # sweeps over epsilon or x_new reuse one set of datasets across the grid
        if param in ("epsilon", "x_new"):
            point_seed = cfg.seed
        else:
            point_seed = RandomSeed(cfg.seed).spawn("sweep", param, repr(float(value))).stream_index
        point_cfg = ExperimentConfig(
            input={**cfg.input, **overrides, "datasets": n_datasets},
            algorithms=cfg.algorithms, epsilon=epsilons, delta=cfg.delta, trials=trials,
            q=cfg.q, seed=point_seed,
            out=cfg.out, workers=cfg.workers, header_timestamp=cfg.header_timestamp,
        )
        inputs = load_inputs(point_cfg)
        rows, _ = run_trials(point_cfg, inputs, trials)
        reports = build_reports(inputs, rows)
        for algo in algos:
            for eps in (epsilons if algo.private else [None]):
                reps = [r for r in reports if r.algorithm == algo.name and r.epsilon == eps]
                ratios = []
                if sd > 0:
                    for r in reps:
                        ratios.append(error_bound(prediction_errors(r, x_new, "truth"), q) / sd)
                out_rows.append({
                    "parameter": param, "value": value, "algorithm": algo.name, "epsilon": eps,
                    "x_new": x_new, "mean_ratio": float(np.mean(ratios)) if ratios else math.nan,
                    "datasets": len(reps), "trials": trials,
                    "failure_rate": float(np.mean([r.failure_rate for r in reps])),
                    "excluded": 0 if sd > 0 else len(reps),
                })
    w = OutputWriter(Path(cfg.out), cfg.header_timestamp)
    w.csv("sweep.csv", SWEEP_COLUMNS, out_rows)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": "sweep",
        "config": cfg.to_dict(),
        "q": q,
        "rows": out_rows,
        "files": ["summary.json", "sweep.csv"],
    }
    w.json("summary.json", summary)
    return summary


def generate_datasets(cfg: ExperimentConfig) -> list[Path]:
    """Write the configured synthetic or tract datasets as ``x,y`` CSV files."""
    if cfg.input["type"] == "csv":
        raise ConfigError("datagen needs a synthetic or oi_family input")
    inputs = load_inputs(cfg)
    if inputs.family is not None:
        items = [DatasetItem(tid, d) for tid, d in inputs.family.tracts]
    else:
        items = list(inputs.items)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    manifest = []
    for it in items:
        p = out / f"{_safe(it.dataset_id)}.csv"
        write_dataset_csv(it.dataset, p)
        paths.append(p)
        manifest.append({
            "dataset_id": it.dataset_id, "file": p.name, "n": it.dataset.n,
            "truth": list(it.truth.as_tuple()) if it.truth else None,
        })
    w = OutputWriter(out, cfg.header_timestamp)
    w.json("datasets.json", {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(),
                             "meta": inputs.meta, "datasets": manifest})
    return paths + [out / "datasets.json"]


def apply_overrides(cfg_dict: dict, **flags: Any) -> dict:
    """Merge non-None CLI flag values into a raw config dictionary."""
    merged = dict(cfg_dict)
    for k, v in flags.items():
        if v is not None:
            merged[k] = v
    return merged


__all__ = [
    "Algorithm",
    "ExperimentConfig",
    "parse_algorithm",
    "load_inputs",
    "run_trials",
    "build_reports",
    "run_fit",
    "run_sweep",
    "generate_datasets",
    "apply_overrides",
    "read_config_json",
]
