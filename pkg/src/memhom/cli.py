"""Config-driven command line: analytic predictions, Fock-space oracle, Monte Carlo sweeps.

Config file format: ``[section]`` headers and ``key = value`` lines; ``#``
or ``;`` start a comment. Unknown sections or keys, duplicates and bad values
are rejected with the offending line number.

::

    [run]
    mode = compare          # analytic | fock | montecarlo | compare
    seed = 1
    cutoff = 6
    n_trials = 1000000
    output = out
    workers = 1
    dark_count = 0

    [experiment]
    reflectance = 0.5
    delta_t = 100e-9
    cos2_eta = 91/122

    [site_a]                # [site_b] takes the same keys
    chi = 0.2
    epsilon = 0.06
    retrieval_efficiency = 0.5
    idler_epsilon = 0.06
    tau_c = 30e-6
    wavepacket = gaussian   # gaussian | square
    width = 50e-9
    center = 0
    mode_amplitude = 1

    [sweep]
    parameter = p1          # p1 | chi | s2, applied to both sites
    min = 0.002
    max = 0.02
    points = 5
    scale = linear          # linear | log

Without a ``[sweep]`` section the single point given by the two ``chi``
values is run.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import analytic_rates, trial_sampler
from .analytic_rates import QuadratureError, WavepacketMismatchError
from .fock_engine import FockEngineError, TruncationWarning, experiment_click_distribution
from .params import (
    DEFAULT_COS2_ETA,
    DEFAULT_DELTA_T,
    DEFAULT_EPSILON,
    DEFAULT_IDLER_EPSILON,
    DEFAULT_RETRIEVAL,
    DEFAULT_TAU_C,
    DEFAULT_WIDTH,
    EnsembleParams,
    ExperimentConfig,
    ParameterError,
    Wavepacket,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

MODES = ("analytic", "fock", "montecarlo", "compare")
TWO_FOLD_COLUMNS = ("p1", "ratio_parallel_over_perp", "err", "analytic_ratio", "fock_ratio", "p1_hat")
FOUR_FOLD_COLUMNS = ("p1", "R_par_over_Wperp", "err_par", "R_perp_over_Wperp", "err_perp",
                     "analytic_par", "analytic_perp", "fock_par", "fock_perp", "p1_hat")


class ConfigError(ValueError):
    pass


# --- value parsers ------------------------------------------------------------------

def _number(text: str) -> float:
    if "/" in text:
        return float(Fraction(text.replace(" ", "")))
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _integer(text: str) -> int:
    v = _number(text)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _in_range(lo: float, hi: float, lo_open=False, hi_open=False) -> Callable[[float], Optional[str]]:
    def check(v):
        below = v <= lo if lo_open else v < lo
        above = v >= hi if hi_open else v > hi
        if below or above:
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            return f"must lie in {lb}{lo:g}, {hi:g}{rb}"
        return None
    return check


def _positive(v):
    return None if v > 0 else "must be > 0"


def _non_negative(v):
    return None if v >= 0 else "must be >= 0"


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable
    default: object = None
    check: Optional[Callable] = None
    doc: str = ""


_SITE_KEYS = {
    "chi": Key(_number, None, _non_negative, "parametric coupling"),
    "epsilon": Key(_number, DEFAULT_EPSILON, _in_range(0, 1), "signal detection efficiency"),
    "retrieval_efficiency": Key(_number, DEFAULT_RETRIEVAL, _in_range(0, 1), "spin-wave readout efficiency"),
    "idler_epsilon": Key(_number, DEFAULT_IDLER_EPSILON, _in_range(0, 1), "idler detection efficiency"),
    "tau_c": Key(_number, DEFAULT_TAU_C, _positive, "memory coherence time [s]"),
    "wavepacket": Key(_choice("gaussian", "square"), "gaussian", None, "temporal mode shape"),
    "width": Key(_number, DEFAULT_WIDTH, _positive, "wavepacket width [s]"),
    "center": Key(_number, 0.0, None, "wavepacket centre [s]"),
    "mode_amplitude": Key(_number, 1.0, _positive, "mode amplitude in the two-fold correlation"),
}

SCHEMA: dict[str, dict[str, Key]] = {
    "run": {
        "mode": Key(_choice(*MODES), "analytic"),
        "seed": Key(_integer, 0, _in_range(0, 2 ** 64 - 1)),
        "cutoff": Key(_integer, 6, _in_range(2, 30)),
        "n_trials": Key(_integer, 1_000_000, _in_range(1, 1e12)),
        "output": Key(str, "out"),
        "workers": Key(_integer, 1, _in_range(1, 256)),
        "dark_count": Key(_number, 0.0, _in_range(0, 1)),
    },
    "experiment": {
        "reflectance": Key(_number, 0.5, _in_range(0, 1)),
        "delta_t": Key(_number, DEFAULT_DELTA_T, _non_negative),
        "cos2_eta": Key(lambda t: Fraction(t.replace(" ", "")) if "/" in t else Fraction(_number(t)),
                        DEFAULT_COS2_ETA, lambda v: _in_range(0, 1, lo_open=True)(float(v))),
    },
    "site_a": _SITE_KEYS,
    "site_b": _SITE_KEYS,
    "sweep": {
        "parameter": Key(_choice("p1", "chi", "s2"), None),
        "min": Key(_number, None, _non_negative),
        "max": Key(_number, None, _non_negative),
        "points": Key(_integer, None, _in_range(1, 10_000)),
        "scale": Key(_choice("linear", "log"), "linear"),
    },
}
REQUIRED_SWEEP = ("parameter", "min", "max", "points")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    min: float
    max: float
    points: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.min])
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    seed: int
    cutoff: int
    n_trials: int
    output_path: str
    workers: int
    dark_count: float
    reflectance: float
    delta_t: float
    cos2_eta: Fraction
    sites: tuple
    sweep: Optional[SweepSpec] = None
    explicit: frozenset = field(default_factory=frozenset)

    @property
    def cos_eta(self) -> float:
        return math.sqrt(self.cos2_eta)

    def site_params(self, index: int, s2: Optional[float] = None, chi: Optional[float] = None) -> EnsembleParams:
        s = self.sites[index]
        if s2 is not None:
            chi = math.asinh(math.sqrt(s2)) / self.cos_eta
        elif chi is None:
            chi = s["chi"]
        wp = Wavepacket(s["wavepacket"], s["center"], s["width"])
        return EnsembleParams(
            chi=chi, cos_eta=self.cos_eta, epsilon=s["epsilon"],
            retrieval_efficiency=s["retrieval_efficiency"], idler_epsilon=s["idler_epsilon"],
            tau_c=s["tau_c"], wavepacket=wp, mode_amplitude=s["mode_amplitude"],
        )

    def experiment_configs(self) -> list[ExperimentConfig]:
        """One configuration per sweep point (or the single configured point)."""
        out = []
        if self.sweep is None:
            pairs = [(self.site_params(0), self.site_params(1))]
        else:
            pairs = []
            for v in self.sweep.values():
                v = float(v)
                if self.sweep.parameter == "chi":
                    pairs.append((self.site_params(0, chi=v), self.site_params(1, chi=v)))
                    continue
                if self.sweep.parameter == "s2":
                    s2 = v
                else:
                    eps = self.sites[0]["epsilon"] + self.sites[1]["epsilon"]
                    if eps == 0:
                        raise ConfigError("sweep over p1 needs a non-zero signal efficiency")
                    s2 = v / eps
                pairs.append((self.site_params(0, s2=s2), self.site_params(1, s2=s2)))
        for a, b in pairs:
            out.append(ExperimentConfig((a, b), self.reflectance, "parallel", self.delta_t))
        return out


def _strip_comment(line: str) -> str:
    for i, ch in enumerate(line):
        if ch in "#;" and (i == 0 or line[i - 1].isspace()):
            return line[:i]
    return line


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, dict[str, object]] = {s: {} for s in SCHEMA}
    lines: dict[tuple[str, str], int] = {}
    section = None
    seen_sections = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"{where}: unknown section [{section}]; expected one of "
                                  + ", ".join(f"[{s}]" for s in SCHEMA))
            if section in seen_sections:
                raise ConfigError(f"{where}: duplicate section [{section}]")
            seen_sections.add(section)
            continue
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"{where}: key outside of any section")
        key, _, val = (part.strip() for part in line.partition("="))
        spec = SCHEMA[section].get(key)
        if spec is None:
            raise ConfigError(f"{where}: unknown key {key!r} in [{section}]; allowed: "
                              + ", ".join(SCHEMA[section]))
        if key in values[section]:
            raise ConfigError(f"{where}: duplicate key {key!r} (first set on line {lines[section, key]})")
        if not val:
            raise ConfigError(f"{where}: empty value for {section}.{key}")
        try:
            parsed = spec.parse(val)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: {section}.{key} = {val!r}: {exc}") from None
        if spec.check is not None:
            problem = spec.check(parsed)
            if problem:
                raise ConfigError(f"{where}: {section}.{key} = {val} {problem}")
        values[section][key] = parsed
        lines[section, key] = lineno

    def get(sec, key):
        v = values[sec].get(key)
        return SCHEMA[sec][key].default if v is None else v

    sweep = None
    if "sweep" in seen_sections:
        missing = [k for k in REQUIRED_SWEEP if k not in values["sweep"]]
        if missing:
            raise ConfigError(f"{source}: [sweep] is missing required key(s): {', '.join(missing)}")
        sweep = SweepSpec(*(get("sweep", k) for k in ("parameter", "min", "max", "points", "scale")))
        if sweep.max < sweep.min:
            raise ConfigError(f"{source}:{lines['sweep', 'max']}: sweep.max is below sweep.min")
        if sweep.scale == "log" and sweep.min <= 0:
            raise ConfigError(f"{source}:{lines['sweep', 'min']}: log sweep needs sweep.min > 0")
    else:
        for site in ("site_a", "site_b"):
            if "chi" not in values[site]:
                raise ConfigError(f"{source}: [{site}] chi is required when no [sweep] section is given")

    sites = tuple({k: get(s, k) for k in _SITE_KEYS} for s in ("site_a", "site_b"))
    explicit = frozenset(f"{s}.{k}" for s, k in lines)
    cfg = RunConfig(
        mode=get("run", "mode"), seed=get("run", "seed"), cutoff=get("run", "cutoff"),
        n_trials=get("run", "n_trials"), output_path=get("run", "output"),
        workers=get("run", "workers"), dark_count=get("run", "dark_count"),
        reflectance=get("experiment", "reflectance"), delta_t=get("experiment", "delta_t"),
        cos2_eta=get("experiment", "cos2_eta"), sites=sites, sweep=sweep, explicit=explicit,
    )
    try:
        cfg.experiment_configs()
    except ParameterError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config_text(text, path)


# --- computation --------------------------------------------------------------------

@dataclass
class PointResult:
    p1: float
    analytic_ratio: float
    analytic_par: float
    analytic_perp: float
    fock_ratio: Optional[float] = None
    fock_par: Optional[float] = None
    fock_perp: Optional[float] = None
    mc: Optional[trial_sampler.SweepRow] = None


def _analytic(cfg: ExperimentConfig) -> tuple[float, float, float]:
    # ideal detectors: the analytic columns carry no dark counts
    a, b = cfg.site_params
    if a.wavepacket.same_mode(b.wavepacket):
        ratio = analytic_rates.closed_form_two_fold_ratio(cfg)
    else:
        ratio = analytic_rates.integrated_two_fold_ratio(cfg)
    w = analytic_rates.w_perp_benchmark(cfg, analytic_rates.blocked_site_statistics(cfg))
    try:
        par = analytic_rates.four_fold_parallel(cfg) / w if w else math.nan
        perp = analytic_rates.four_fold_perpendicular(cfg) / w if w else math.nan
    except WavepacketMismatchError:
        par = perp = math.nan
    return ratio, par, perp


def _fock(cfg: ExperimentConfig, cutoff: int, dark_count: float) -> tuple[float, float, float]:
    dists = {}
    for sc in trial_sampler.SCENARIOS:
        d = experiment_click_distribution(trial_sampler.scenario_config(cfg, sc), cutoff)
        if d.leakage > trial_sampler.MAX_LEAKAGE:
            raise trial_sampler.TruncationError(
                f"truncation leakage {d.leakage:.3g} at cutoff {cutoff} exceeds {trial_sampler.MAX_LEAKAGE:g}"
            )
        dists[sc] = analytic_rates.apply_dark_counts(d.probs, dark_count)
    pair = {sc: dists[sc][3] + dists[sc][7] + dists[sc][11] + dists[sc][15] for sc in ("parallel", "perpendicular")}
    w = analytic_rates.or_combine(dists["blocked_A"], dists["blocked_B"])[15]
    ratio = pair["parallel"] / pair["perpendicular"] if pair["perpendicular"] else math.nan
    par = dists["parallel"][15] / w if w else math.nan
    perp = dists["perpendicular"][15] / w if w else math.nan
    return ratio, par, perp


def compute(run: RunConfig) -> list[PointResult]:
    results = []
    configs = run.experiment_configs()
    for cfg in configs:
        ratio, par, perp = _analytic(cfg)
        results.append(PointResult(analytic_rates.p1(cfg), ratio, par, perp))
    if run.mode in ("fock", "montecarlo", "compare"):
        for res, cfg in zip(results, configs):
            res.fock_ratio, res.fock_par, res.fock_perp = _fock(cfg, run.cutoff, run.dark_count)
    if run.mode in ("montecarlo", "compare"):
        rows = trial_sampler.sweep(configs, run.n_trials, run.seed, run.cutoff, run.dark_count, run.workers)
        by_p1 = sorted(results, key=lambda r: r.p1)
        for res, row in zip(by_p1, rows):
            res.mc = row
    return sorted(results, key=lambda r: r.p1)


# --- output -------------------------------------------------------------------------

def fmt(x: Optional[float]) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{x:.10g}"


def table_rows(results: list[PointResult]) -> tuple[list[list[str]], list[list[str]]]:
    two, four = [], []
    for r in results:
        mc_ratio = mc_err = par = par_err = perp = perp_err = p1_hat = None
        if r.mc is not None:
            mc_ratio, mc_err = r.mc.two_fold_ratio
            par, par_err = r.mc.four_fold_ratio("parallel")
            perp, perp_err = r.mc.four_fold_ratio("perpendicular")
            p1_hat = r.mc.p1_hat
        two.append([fmt(v) for v in (r.p1, mc_ratio, mc_err, r.analytic_ratio, r.fock_ratio, p1_hat)])
        four.append([fmt(v) for v in (r.p1, par, par_err, perp, perp_err, r.analytic_par, r.analytic_perp,
                                      r.fock_par, r.fock_perp, p1_hat)])
    return two, four


def csv_text(header, rows) -> str:
    return "".join(",".join(row) + "\n" for row in [list(header)] + rows)


def _echo(run: RunConfig) -> list[str]:
    def tag(key):
        return "" if key in run.explicit else "  (default)"

    out = ["[run]"]
    for k, v in (("mode", run.mode), ("seed", run.seed), ("cutoff", run.cutoff), ("n_trials", run.n_trials),
                 ("output", run.output_path), ("workers", run.workers), ("dark_count", fmt(float(run.dark_count)))):
        out.append(f"  {k} = {v}{tag('run.' + k)}")
    out.append("[experiment]")
    out.append(f"  reflectance = {fmt(float(run.reflectance))}{tag('experiment.reflectance')}")
    out.append(f"  delta_t = {fmt(float(run.delta_t))}{tag('experiment.delta_t')}")
    c = run.cos2_eta
    out.append(f"  cos2_eta = {c.numerator}/{c.denominator} = {float(c):.6f}{tag('experiment.cos2_eta')}")
    for name, s in zip(("site_a", "site_b"), run.sites):
        out.append(f"[{name}]")
        for k in _SITE_KEYS:
            v = s[k]
            if k == "chi" and run.sweep is not None:
                continue
            v = fmt(float(v)) if isinstance(v, (int, float)) and v is not None else v
            out.append(f"  {k} = {v}{tag(name + '.' + k)}")
    if run.sweep is not None:
        sw = run.sweep
        out.append("[sweep]")
        out.append(f"  parameter = {sw.parameter}, min = {fmt(float(sw.min))}, max = {fmt(float(sw.max))}, "
                   f"points = {sw.points}, scale = {sw.scale}")
    return out


def report_text(run: RunConfig, header2, two, header4, four) -> str:
    lines = ["Two-source HOM interference run", "", "Configuration", "-------------"]
    lines += _echo(run)
    lines += ["", "two_fold.csv", "------------", "  " + "  ".join(header2)]
    lines += ["  " + "  ".join(c or "-" for c in row) for row in two]
    lines += ["", "four_fold.csv", "-------------", "  " + "  ".join(header4)]
    lines += ["  " + "  ".join(c or "-" for c in row) for row in four]

    lines += ["", "Visibilities (V = 1 - ratio; ratios are the CSV cells named)", "------------"]
    for row2, row4 in zip(two, four):
        p1 = row2[0]
        parts = [f"V2(analytic_ratio) = {fmt(1 - float(row2[3]))}"]
        if row2[1]:
            parts.append(f"V2(ratio_parallel_over_perp) = {fmt(1 - float(row2[1]))}")
        if row4[5]:
            parts.append(f"V4(analytic_par) = {fmt(1 - float(row4[5]))}")
        if row4[1]:
            parts.append(f"V4(R_par_over_Wperp) = {fmt(1 - float(row4[1]))}")
        lines.append(f"  p1 = {p1}: " + "; ".join(parts))

    lines += ["", "Oracle agreement", "----------------"]
    if run.mode == "analytic":
        lines.append("  analytic mode: no oracle columns")
    for row2, row4 in zip(two, four):
        p1 = row2[0]
        if row2[4]:
            rel = abs(float(row2[4]) - float(row2[3])) / float(row2[3])
            lines.append(f"  p1 = {p1}: |fock_ratio - analytic_ratio| / analytic_ratio = {fmt(rel)}")
        if row2[1]:
            err = float(row2[2])
            if math.isfinite(err) and err > 0 and row2[1] != "nan":
                z = (float(row2[1]) - float(row2[3])) / err
                verdict = "within" if abs(z) <= 5 else "OUTSIDE"
                lines.append(f"  p1 = {p1}: (ratio_parallel_over_perp - analytic_ratio) / err = {fmt(z)} "
                             f"({verdict} 5 sigma)")
            else:
                lines.append(f"  p1 = {p1}: Monte Carlo two-fold ratio undefined (too few coincidences)")
        if row4[1] in ("nan",) or (row4[2] == "inf"):
            lines.append(f"  p1 = {p1}: Monte Carlo four-fold ratio undefined (no benchmark four-folds); "
                         "increase n_trials or efficiencies")
    return "\n".join(lines) + "\n"


def write_outputs(run: RunConfig, results: list[PointResult]) -> list[str]:
    two, four = table_rows(results)
    files = {
        "two_fold.csv": csv_text(TWO_FOLD_COLUMNS, two),
        "four_fold.csv": csv_text(FOUR_FOLD_COLUMNS, four),
        "report.txt": report_text(run, TWO_FOLD_COLUMNS, two, FOUR_FOLD_COLUMNS, four),
    }
    written = []
    try:
        os.makedirs(run.output_path, exist_ok=True)
        for name, content in files.items():
            path = os.path.join(run.output_path, name)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                written.append(path)
                fh.write(content)
    except BaseException:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise
    return written


def run(config: RunConfig) -> int:
    """Compute everything, then write the three output files. Returns an exit status."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", TruncationWarning)
            results = compute(config)
    except (TruncationWarning, trial_sampler.TruncationError) as exc:
        print(f"error: {exc}\nhint: raise [run] cutoff (or --cutoff) or reduce the coupling chi", file=sys.stderr)
        return EXIT_NUMERIC
    except QuadratureError as exc:
        print(f"error: {exc}\nhint: check the wavepacket widths and centres", file=sys.stderr)
        return EXIT_NUMERIC
    except (FockEngineError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"error: numerical refusal: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        written = write_outputs(config, results)
    except OSError as exc:
        print(f"error: cannot write outputs to {config.output_path!r}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memhom", description=__doc__.split("\n")[0])
    p.add_argument("--config", required=True, help="path to the run configuration file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--cutoff", type=int, help="Fock cutoff per mode")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per scenario and point")
    p.add_argument("--workers", type=int, help="threads for Monte Carlo sampling")
    return p


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    upd = {}
    if args.mode is not None:
        upd["mode"] = args.mode
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        upd["seed"] = args.seed
    if args.out is not None:
        upd["output_path"] = args.out
    if args.cutoff is not None:
        if not 2 <= args.cutoff <= 30:
            raise ConfigError("--cutoff must lie in [2, 30]")
        upd["cutoff"] = args.cutoff
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        upd["n_trials"] = args.trials
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        upd["workers"] = args.workers
    flag_keys = {"mode": "run.mode", "seed": "run.seed", "output_path": "run.output", "cutoff": "run.cutoff",
                 "n_trials": "run.n_trials", "workers": "run.workers"}
    return replace(cfg, **upd, explicit=cfg.explicit | {flag_keys[k] for k in upd})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(parse_config(args.config), args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
