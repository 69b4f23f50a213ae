"""Command-line experiments: analytic curves, simulations, sweeps, comparisons.

Config files are flat ``key = value`` text (``#`` starts a comment) using the
field names of :class:`ExperimentConfig`; command-line flags override them.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analytic import (
    find_optimum,
    power_graph,
    power_X,
    power_X_gaussian,
    power_Z,
    scaling_fit,
)
from .evolve import AveragedTrace, ChargingSpec, disorder_average, realization_graph
from .graph import (
    GraphError,
    MajoranaGraph,
    connectivity_profile,
    ensemble_connectivity,
    make_graph,
)
from .disorder import derive_seed

log = logging.getLogger("sykbattery")

CSV_HEADER = "t,E_mean,E_stderr,P_mean,P_stderr"
X_TAU_SCALE = 3.679
DEFAULT_MAX_N = 30
ADVANTAGE_RATIO = 1.5

_CHARGERS = ("complete", "ws", "ring", "star", "dense")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: str = "x"
    charger: str = "complete"
    n: int = 16
    kappa: Optional[int] = None
    p: Optional[float] = None
    q: Optional[int] = None
    t_max: Optional[float] = None
    n_t: int = 200
    tol: float = 1e-10
    realizations: int = 10
    root_seed: int = 0
    output_dir: str = "out"
    n_list: Optional[list[int]] = None
    max_n: int = DEFAULT_MAX_N
    workers: int = 1
    deterministic: bool = False

    def validate(self) -> "ExperimentConfig":
        self.model = self.model.lower()
        if self.model not in ("x", "z"):
            raise ConfigError(f"model must be x or z, got {self.model!r}")
        if self.charger not in _CHARGERS:
            raise ConfigError(f"charger must be one of {_CHARGERS}, got {self.charger!r}")
        if self.charger == "ws":
            if self.kappa is None or self.p is None:
                raise ConfigError("charger=ws needs kappa and p")
        elif self.charger == "ring":
            if self.kappa is None:
                raise ConfigError("charger=ring needs kappa")
            if self.p is not None:
                raise ConfigError("p is only valid with charger=ws")
        elif self.kappa is not None or self.p is not None:
            raise ConfigError("kappa/p are only valid with charger=ws (kappa also with ring)")
        if self.charger == "dense":
            if self.q is None:
                self.q = 2
            if self.q < 2 or self.q % 2:
                raise ConfigError(f"q must be even and >= 2, got {self.q}")
        elif self.q is not None:
            raise ConfigError("q is only valid with charger=dense")
        for n in [self.n] + list(self.n_list or []):
            if n < 2 or n % 2:
                raise ConfigError(f"N must be even and >= 2, got {n}")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.n_t < 1:
            raise ConfigError("n_t must be >= 1")
        if self.deterministic:
            self.workers = 1
        return self

    def for_size(self, n: int) -> "ExperimentConfig":
        return replace(self, n=n, t_max=None if self.n_list else self.t_max)

    def spec(self) -> ChargingSpec:
        return ChargingSpec(
            model=self.model.upper(),
            charger=self.charger,
            n=self.n,
            t_max=self.resolved_t_max(),
            n_t=self.n_t,
            tol=self.tol,
            kappa=self.kappa if self.kappa is not None else 4,
            p=self.p if self.p is not None else 0.0,
            q=self.q if self.q is not None else 2,
        )

    def resolved_t_max(self) -> float:
        """Twice the analytically predicted optimal time unless set explicitly."""
        if self.t_max is not None:
            return float(self.t_max)
        if self.model == "z":
            return 4.0
        if self.charger in ("complete", "dense"):
            return 2 * X_TAU_SCALE / math.sqrt(self.n)
        if self.charger in ("ws", "ring"):
            g = self.graph(derive_seed(self.root_seed, 0))
            prof = connectivity_profile(g)
            opt = find_optimum(lambda t: power_graph(t, prof, self.n), None, (1e-6, 10.0))
            return 2 * opt.tau
        return 4.0

    def graph(self, seed: int) -> MajoranaGraph:
        return make_graph(self.charger, self.n, kappa=self.kappa or 4, p=self.p or 0.0, seed=seed)

    def hash(self) -> str:
        d = asdict(self)
        for k in ("output_dir", "workers", "deterministic"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    if name == "n_list":
        return [int(x) for x in raw.replace(",", " ").split()]
    if name == "deterministic":
        return raw.lower() in ("1", "true", "yes", "on")
    if name in ("n", "kappa", "q", "n_t", "realizations", "root_seed", "max_n", "workers"):
        return int(raw)
    if name in ("p", "t_max", "tol"):
        return float(raw)
    return raw


def load_config(path) -> dict:
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, value)
    return out


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _meta_lines(cfg: ExperimentConfig, extra: Optional[dict] = None) -> list[str]:
    meta = {"version": __version__, "config_hash": cfg.hash(), "root_seed": cfg.root_seed}
    meta.update(extra or {})
    return [f"# {k}={v}" for k, v in meta.items()]


def write_trace_csv(path, times, e_mean, e_stderr, p_mean, p_stderr, meta_lines=()) -> None:
    rows = list(meta_lines) + [CSV_HEADER]
    for row in zip(times, e_mean, e_stderr, p_mean, p_stderr):
        rows.append(",".join(_fmt(float(v)) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def read_trace_csv(path) -> dict[str, np.ndarray]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: unexpected CSV header {lines[0]!r}")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return dict(zip(CSV_HEADER.split(","), data.T))


def write_json(path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def interpolate_peak(times: np.ndarray, values: np.ndarray) -> tuple[float, float, int]:
    """Grid argmax refined by a 3-point parabola; returns (t_peak, value, grid index)."""
    i = int(np.argmax(values))
    if 0 < i < len(values) - 1:
        y0, y1, y2 = values[i - 1 : i + 2]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            h = times[i + 1] - times[i]
            delta = 0.5 * (y0 - y2) / denom
            return float(times[i] + delta * h), float(y1 - 0.25 * (y0 - y2) * delta), i
    return float(times[i]), float(values[i]), i


def analytic_power(cfg: ExperimentConfig, times, n_graphs: Optional[int] = None) -> np.ndarray:
    """Analytic P(t) matching the configured charger.

    For random graphs the curve is the mean over the same graph draws used by
    ``simulate`` (realization r uses the graph seed of r).
    """
    times = np.asarray(times, dtype=float)
    n = cfg.n
    if cfg.model == "z":
        if cfg.charger not in ("complete", "dense") or (cfg.q or 2) != 2:
            raise ConfigError("analytic Z-model power exists only for the complete SYK_2 charger")
        return power_Z(times, n)
    if cfg.charger == "complete" or (cfg.charger == "dense" and (cfg.q or 2) == 2):
        return power_X(times, n)
    if cfg.charger in ("ws", "ring"):
        spec = ChargingSpec("X", cfg.charger, n, 1.0, kappa=cfg.kappa or 4, p=cfg.p or 0.0)
        count = n_graphs or (cfg.realizations if cfg.charger == "ws" and cfg.p else 1)
        curves = [
            power_graph(times, connectivity_profile(realization_graph(spec, cfg.root_seed, r)), n)
            for r in range(count)
        ]
        return np.mean(curves, axis=0)
    raise ConfigError(f"no analytic power for charger={cfg.charger} q={cfg.q}")


def _optimum_for(cfg: ExperimentConfig, fn) -> dict:
    hi = 20 / math.sqrt(cfg.n) if (cfg.model == "x" and cfg.charger == "complete") else 10.0
    opt = find_optimum(fn, None, (1e-6, hi))
    return {
        "tau": opt.tau,
        "p_max": opt.p_max,
        "p_max_over_n": opt.p_max / cfg.n,
        "bracket": list(opt.bracket),
        "grid_fallback": opt.grid_fallback,
    }


def cmd_analytic(cfg: ExperimentConfig) -> dict:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t_max = cfg.resolved_t_max()
    times = np.linspace(0.0, t_max, cfg.n_t)
    curves = {}
    if cfg.model == "x" and cfg.charger in ("complete", "dense"):
        curves["X"] = lambda t: power_X(t, cfg.n)
        curves["X_gaussian"] = lambda t: power_X_gaussian(t, cfg.n)
    elif cfg.model == "x" and cfg.charger in ("ws", "ring"):
        curves["graph"] = lambda t: analytic_power(cfg, t)
    else:
        curves[cfg.model.upper()] = lambda t: analytic_power(cfg, t)

    summary = {"model": cfg.model, "charger": cfg.charger, "n": cfg.n, "curves": {}}
    for tag, fn in curves.items():
        p = np.asarray(fn(times), dtype=float)
        e = -cfg.n / 2 + times * p
        zeros = np.zeros_like(times)
        write_trace_csv(out / f"analytic_{tag}.csv", times, e, zeros, p, zeros, _meta_lines(cfg, {"curve": tag}))
        summary["curves"][tag] = _optimum_for(cfg, fn)
    first = next(iter(summary["curves"].values()))
    summary["tau"], summary["p_max"] = first["tau"], first["p_max"]
    if cfg.model == "x" and cfg.charger in ("ws", "ring"):
        summary["advantage_check"] = _graph_power_scaling(cfg)
    summary.update({"version": __version__, "config_hash": cfg.hash(), "seeds": {"root_seed": cfg.root_seed}})
    write_json(out / "analytic.json", summary)
    return summary


def _graph_power_scaling(cfg: ExperimentConfig) -> dict:
    """Optimal P/N of the graph formula at N and 2N."""
    vals = {}
    for n in (cfg.n, 2 * cfg.n):
        c = replace(cfg, n=n, t_max=1.0)
        opt = find_optimum(lambda t: analytic_power(c, t), None, (1e-6, 10.0))
        vals[n] = opt.p_max / n
    ratio = vals[2 * cfg.n] / vals[cfg.n]
    return {
        "p_over_n": {str(k): v for k, v in vals.items()},
        "ratio": ratio,
        "flat": abs(ratio - 1) < 0.1,
    }


def simulate(cfg: ExperimentConfig) -> AveragedTrace:
    if cfg.n > cfg.max_n:
        raise ConfigError(
            f"N={cfg.n} exceeds the resource ceiling of {cfg.max_n} Majoranas "
            f"({cfg.max_n // 2} qubits); raise --max-n to override"
        )
    return disorder_average(cfg.spec(), cfg.realizations, cfg.root_seed, workers=cfg.workers)


def _trace_summary(cfg: ExperimentConfig, av: AveragedTrace) -> dict:
    t_pk, p_pk, i = interpolate_peak(av.times, av.p_mean)
    return {
        "n": cfg.n,
        "tau": t_pk,
        "p_max": p_pk,
        "p_max_stderr": float(av.p_stderr[i]),
        "realizations": av.n_realizations,
        "max_norm_drift": av.max_norm_drift,
        "max_h1_drift": av.max_h1_drift,
    }


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    av = simulate(cfg)
    elapsed = time.perf_counter() - start
    write_trace_csv(
        out / "trace.csv", av.times, av.e_mean, av.e_stderr, av.p_mean, av.p_stderr, _meta_lines(cfg)
    )
    meta = _trace_summary(cfg, av)
    meta.update(
        {
            "version": __version__,
            "config": asdict(cfg),
            "config_hash": cfg.hash(),
            "seeds": {
                "root_seed": cfg.root_seed,
                "realization_seeds": [derive_seed(cfg.root_seed, r) for r in range(cfg.realizations)],
            },
            "numpy": np.__version__,
        }
    )
    if not cfg.deterministic:
        meta["elapsed_s"] = elapsed
    write_json(out / "run.json", meta)
    return meta


def cmd_sweep(cfg: ExperimentConfig, analytic: bool = False) -> dict:
    sizes = cfg.n_list or []
    if len(sizes) < 3:
        raise ConfigError("sweep needs n_list with at least 3 sizes")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in sizes:
        c = cfg.for_size(n)
        if analytic:
            fn = (lambda t, c=c: power_X_gaussian(t, c.n)) if c.model == "x" else (lambda t, c=c: power_Z(t, c.n))
            if c.model == "x" and c.charger in ("ws", "ring"):
                fn = lambda t, c=c: analytic_power(replace(c, t_max=1.0), t)
            hi = 20 / math.sqrt(n) if c.model == "x" else 10.0
            opt = find_optimum(fn, None, (1e-9, hi))
            rows.append({"n": n, "tau": opt.tau, "p_max": opt.p_max, "stderr": 0.0})
        else:
            s = _trace_summary(c, simulate(c))
            rows.append({"n": n, "tau": s["tau"], "p_max": s["p_max"], "stderr": s["p_max_stderr"]})
        log.info("N=%d tau=%.6g P=%.6g", n, rows[-1]["tau"], rows[-1]["p_max"])
    fit_tau = scaling_fit([(r["n"], r["tau"]) for r in rows])
    fit_p = scaling_fit([(r["n"], r["p_max"]) for r in rows])
    report = {
        "rows": rows,
        "exponent_tau": fit_tau.exponent,
        "exponent_p": fit_p.exponent,
        "prefactor_tau": fit_tau.prefactor,
        "prefactor_p": fit_p.prefactor,
        "residuals": {"tau": fit_tau.residual, "p": fit_p.residual},
        "mode": "analytic" if analytic else "numeric",
        "seeds": {"root_seed": cfg.root_seed},
        "version": __version__,
        "config_hash": cfg.hash(),
    }
    with open(out / "sweep.csv", "w", newline="\n") as fh:
        fh.write("\n".join(_meta_lines(cfg)) + "\nn,tau,p_max,stderr\n")
        for r in rows:
            fh.write(f"{r['n']},{_fmt(r['tau'])},{_fmt(r['p_max'])},{_fmt(r['stderr'])}\n")
    write_json(out / "sweep.json", report)
    return report


def deviation_report(times, numeric, analytic, n: int, stderr=None) -> dict:
    """Sup-norm and peak-region deviations between two power curves on one grid."""
    numeric = np.asarray(numeric, dtype=float)
    analytic = np.asarray(analytic, dtype=float)
    diff = numeric - analytic
    t_a, p_a, i_a = interpolate_peak(times, analytic)
    t_n, p_n, i_n = interpolate_peak(times, numeric)
    region = (times >= 0.5 * t_a) & (times <= 1.5 * t_a)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(diff[region]) / np.abs(analytic[region])
    rep = {
        "sup_abs": float(np.abs(diff).max()),
        "sup_per_n": float(np.abs(diff).max() / n),
        "peak_region_max_rel": float(np.nanmax(rel)) if rel.size else float("nan"),
        "peak_rel": float(abs(p_n - p_a) / abs(p_a)) if p_a else float("nan"),
        "peak_numeric": p_n,
        "peak_analytic": p_a,
        "tau_numeric": t_n,
        "tau_analytic": t_a,
    }
    if stderr is not None:
        rep["stderr_at_peak"] = float(np.asarray(stderr)[i_n])
    return rep


def cmd_compare(cfg: ExperimentConfig, trace_path: Optional[str] = None) -> dict:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if trace_path:
        data = read_trace_csv(trace_path)
        times, p_num, p_err = data["t"], data["P_mean"], data["P_stderr"]
    else:
        av = simulate(cfg)
        times, p_num, p_err = av.times, av.p_mean, av.p_stderr
    ana_cfg = cfg if cfg.t_max is not None else replace(cfg, t_max=float(times[-1]))
    p_ana = analytic_power(ana_cfg, times)
    report = {"model": cfg.model, "charger": cfg.charger, "n": cfg.n}
    report["numeric_vs_analytic"] = deviation_report(times, p_num, p_ana, cfg.n, p_err)
    if cfg.model == "x" and cfg.charger == "complete":
        report["sum_vs_gaussian"] = deviation_report(times, power_X(times, cfg.n), power_X_gaussian(times, cfg.n), cfg.n)
    report.update({"version": __version__, "config_hash": cfg.hash(), "seeds": {"root_seed": cfg.root_seed}})
    write_json(out / "compare.json", report)
    return report


def advantage_verdict(make, n: int, n_samples: int, seed: int) -> dict:
    """Compare mean g_{N/2} at N and 2N; a ratio above 1.5 counts as scaling with N."""
    g1, e1 = ensemble_connectivity(lambda s: make(n, s), n // 2, n_samples, seed)
    g2, e2 = ensemble_connectivity(lambda s: make(2 * n, s), n, n_samples, seed)
    ratio = g2 / g1 if g1 else float("inf")
    return {
        "g_half_by_n": {str(n): [g1, e1], str(2 * n): [g2, e2]},
        "ratio": ratio,
        "verdict": "advantage" if ratio > ADVANTAGE_RATIO else "no advantage",
    }


def cmd_graph_stats(cfg: ExperimentConfig, graph_file: Optional[str] = None, n_samples: int = 20) -> dict:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if graph_file:
        try:
            g = MajoranaGraph.load(graph_file)
        except (OSError, GraphError, ValueError) as exc:
            raise ConfigError(f"cannot read graph file {graph_file}: {exc}") from exc
    else:
        g = cfg.graph(derive_seed(cfg.root_seed, 0))
    prof = connectivity_profile(g)
    with open(out / "connectivity.csv", "w", newline="\n") as fh:
        fh.write("\n".join(_meta_lines(cfg)) + "\nk,g_k\n")
        for k in range(1, g.n_vertices + 1):
            fh.write(f"{k},{_fmt(float(prof.g[k]))}\n")
    report = {
        "n": g.n_vertices,
        "n_edges": g.n_edges,
        "d": float(prof.d),
        "g_half": float(prof.g[g.n_vertices // 2]),
        "connected": g.is_connected(),
    }
    if graph_file:
        report["verdict"] = "undetermined (single graph file)"
    elif cfg.charger == "star":
        report["verdict"] = "undetermined (hub-dominated graph)"
    else:
        make = lambda n, s: replace(cfg, n=n).graph(s)
        samples = n_samples if (cfg.charger == "ws" and cfg.p) else 1
        report.update(advantage_verdict(make, g.n_vertices, samples, cfg.root_seed))
    report.update({"version": __version__, "config_hash": cfg.hash(), "seeds": {"root_seed": cfg.root_seed}})
    write_json(out / "graph_stats.json", report)
    return report


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, dest="root_seed", help="root seed (u64)")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--deterministic", action="store_true", default=None,
                        help="single worker, no wall-clock fields in outputs")
    common.add_argument("--model", choices=["x", "z", "X", "Z"])
    common.add_argument("--charger", choices=_CHARGERS)
    common.add_argument("--n", type=int)
    common.add_argument("--kappa", type=int)
    common.add_argument("--p", type=float)
    common.add_argument("--q", type=int)
    common.add_argument("--t-max", type=float, dest="t_max")
    common.add_argument("--n-t", type=int, dest="n_t")
    common.add_argument("--tol", type=float)
    common.add_argument("--realizations", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--max-n", type=int, dest="max_n")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sykbattery", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="closed-form power curves and optimum")
    sub.add_parser("simulate", parents=[common], help="disorder-averaged exact dynamics")
    sw = sub.add_parser("sweep", parents=[common], help="optimal power over several N and scaling fit")
    sw.add_argument("--n-list", dest="n_list", type=lambda s: [int(x) for x in s.split(",")])
    sw.add_argument("--analytic", action="store_true", help="use the analytic optimum instead of simulation")
    cmp = sub.add_parser("compare", parents=[common], help="numeric vs analytic deviations")
    cmp.add_argument("--trace", help="existing trace CSV instead of a new simulation")
    gs = sub.add_parser("graph-stats", parents=[common], help="connectivity profile and advantage verdict")
    gs.add_argument("--graph", help="edge-list file: header 'N n_E', then 'i j' lines")
    gs.add_argument("--samples", type=int, default=20, help="graph draws for the verdict")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config(args.config) if args.config else {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return ExperimentConfig(**values).validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "analytic":
            res = cmd_analytic(cfg)
        elif args.command == "simulate":
            res = cmd_simulate(cfg)
        elif args.command == "sweep":
            res = cmd_sweep(cfg, analytic=args.analytic)
        elif args.command == "compare":
            res = cmd_compare(cfg, args.trace)
        else:
            res = cmd_graph_stats(cfg, args.graph, args.samples)
    except (ConfigError, GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(res, indent=2, sort_keys=True, default=str))
    return 0
