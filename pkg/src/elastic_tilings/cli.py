"""Command-line front end.

Subcommands ``exact``, ``sweep``, ``bounds``, ``conditions`` and ``check``.
Settings come from defaults, then a YAML file (``--config``), then flags.
Tabular results go to ``--out`` as CSV with a JSON sidecar (``<out>.json``);
``conditions`` and ``check`` write JSON only. Without ``--out`` the JSON
report is printed.

Exit codes: 0 ok, 2 bad configuration or infeasible instance, 3 a computed
result contradicts a proven inequality.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .conditions import ConditionsError, conditions_params, verify_conditions
from .exact import (
    BudgetExceeded,
    DivisibilityError,
    exact_partition,
    lemma2_gap_bound,
    log_z0_hat,
    tiling_count,
    universal_bound,
    z0_hat,
)
from .ladder import (
    LadderError,
    MassSpectrum,
    Supertype,
    alpha_contract,
    choose_alpha,
    closed_form_report,
    ladder_check,
    mass_spectrum,
)
from .lattice import Dissection, Lattice, LatticeError
from .numerics import root_estimate_check, stirling_sandwich
from .weighting import (
    WeightingError,
    WeightingFamily,
    build_weighting,
    coarse_average,
    decay_radius,
    lemma3_check,
    normalization_residual,
    placement_mass,
    smoothness,
    tilt_weighting,
)

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3

DEFAULTS: dict[str, Any] = {
    "d": 1,
    "L": 8,
    "n": 2,
    "ell_bar": None,
    "family": "constant",
    "scale": None,
    "norm": "euclidean",
    "mode": "float",
    "budget": 10**8,
    "seed": 0,
    "workers": 1,
    "eps": 0.1,
    "scales": [1.0, 2.0, 4.0, 8.0, 16.0],
    "sizes": None,
    "closed_form": None,
    "s": 0.1,
    "eps_bar": None,
}

CONFIG_KEYS = frozenset(DEFAULTS)

EXACT_COLUMNS = ["d", "L", "n", "family", "scale", "mode", "log_Z", "p", "p0_hat", "gap", "sm", "R"]
SWEEP_COLUMNS = ["L", "ell", "sm", "R", "sm_R", "p", "p0_hat", "gap"]
BOUNDS_COLUMNS = [
    "N", "n", "n_box", "log_z_plus", "log_z_prime", "log_z_minus_lower", "log_z_fbar",
    "log_z_f", "log_z0_hat", "gap_b_hat", "gap_b_limit", "gap_a", "gap_c", "ordering_holds",
]


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


# -- configuration ---------------------------------------------------------


def _list_of_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _list_of_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _pairs(text: str) -> list[list[int]]:
    out = []
    for item in text.split(","):
        a, _, b = item.partition(":")
        out.append([int(a), int(b)])
    return out


def load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge defaults, file and flags (later wins)."""
    cfg = dict(DEFAULTS)
    cfg.update(load_config(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def _family(cfg: dict[str, Any], scale: float | None = None) -> WeightingFamily:
    s = cfg["scale"] if scale is None else scale
    return WeightingFamily(cfg["family"], None if s is None else float(s), cfg["norm"])


def _validate(cfg: dict[str, Any]) -> Lattice:
    """Check divisibility before any computation."""
    for key in ("d", "L", "n"):
        if not isinstance(cfg[key], int) or cfg[key] < 1:
            raise ConfigError(f"{key} must be a positive integer")
    lat = Lattice(cfg["d"], cfg["L"])
    if lat.N % cfg["n"]:
        raise ConfigError(f"tile size n={cfg['n']} does not divide N={lat.N}")
    if cfg["ell_bar"] is not None:
        eb = cfg["ell_bar"]
        if cfg["L"] % eb:
            raise ConfigError(f"box edge {eb} does not divide L={cfg['L']}")
        if eb ** cfg["d"] % cfg["n"]:
            raise ConfigError(f"tile size n={cfg['n']} does not divide box volume {eb ** cfg['d']}")
    if cfg["mode"] not in ("float", "rational"):
        raise ConfigError(f"unknown mode {cfg['mode']!r}")
    if cfg["family"] == "user-table":
        raise ConfigError("user-table families are available from the Python API only")
    return lat


# -- output ----------------------------------------------------------------


def _plain(v: Any) -> Any:
    """JSON-safe value: non-finite floats become strings, Fractions stay exact."""
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return str(v)


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(columns: list[str], rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def json_text(report: dict[str, Any]) -> str:
    return json.dumps(_plain(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def emit(out: str | None, report: dict[str, Any], columns: list[str] | None = None) -> None:
    if out is None:
        sys.stdout.write(json_text(report))
        return
    path = Path(out)
    if columns is None:
        path.write_text(json_text(report), encoding="utf-8")
        return
    path.write_text(csv_text(columns, report["rows"]), encoding="utf-8")
    Path(str(path) + ".json").write_text(json_text(report), encoding="utf-8")


def _report(command: str, cfg: dict[str, Any], rows: list, summary: dict | None = None) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "rows": rows,
        "summary": summary or {},
    }


# -- commands --------------------------------------------------------------


def _exact_row(cfg: dict[str, Any], lat: Lattice, scale: float | None = None) -> dict[str, Any]:
    fam = _family(cfg, scale)
    f = build_weighting(fam, lat, cfg["n"])
    res = exact_partition(f, mode=cfg["mode"], budget=cfg["budget"], workers=cfg["workers"])
    p0 = log_z0_hat(lat.N, cfg["n"]) / lat.N
    sm, R = smoothness(f), decay_radius(f)
    return {
        "d": lat.d, "L": lat.L, "n": cfg["n"], "family": fam.kind, "scale": fam.scale,
        "mode": res.mode, "log_Z": res.log_Z, "Z_exact": res.Z_exact,
        "p": res.pressure, "p0_hat": p0, "gap": abs(res.pressure - p0), "sm": sm, "R": R,
    }


def cmd_exact(cfg: dict[str, Any]) -> tuple[dict, list[str]]:
    lat = _validate(cfg)
    return _report("exact", cfg, [_exact_row(cfg, lat)]), EXACT_COLUMNS


def _strictly_decreasing(xs: list[float]) -> bool:
    return all(a > b for a, b in zip(xs, xs[1:]))


def cmd_sweep(cfg: dict[str, Any]) -> tuple[dict, list[str]]:
    if cfg["family"] != "pair-exponential":
        cfg = dict(cfg, family="pair-exponential")
    scales = [float(s) for s in cfg["scales"]]
    if not scales:
        raise ConfigError("sweep grid is empty")
    sizes = cfg["sizes"] or [cfg["L"]]
    lats = [_validate(dict(cfg, L=L)) for L in sizes]
    for lat in lats:
        if tiling_count(lat.N, cfg["n"]) > cfg["budget"]:
            raise BudgetExceeded(tiling_count(lat.N, cfg["n"]), cfg["budget"])
    jobs = [(lat, s) for lat in lats for s in scales]
    point_cfg = dict(cfg, workers=1)

    def run(job):
        lat, s = job
        r = _exact_row(point_cfg, lat, s)
        return {"L": lat.L, "ell": s, "sm": r["sm"], "R": r["R"], "sm_R": r["sm"] * r["R"],
                "p": r["p"], "p0_hat": r["p0_hat"], "gap": r["gap"]}

    with ThreadPoolExecutor(max_workers=max(1, cfg["workers"])) as pool:
        rows = list(pool.map(run, jobs))
    summary: dict[str, Any] = {"per_size": {}}
    by_size: dict[int, list[dict]] = {}
    for r in rows:
        by_size.setdefault(r["L"], []).append(r)
    for L, rs in by_size.items():
        summary["per_size"][str(L)] = {
            "gap_strictly_decreasing": _strictly_decreasing([r["gap"] for r in rs]),
            "sm_strictly_decreasing": _strictly_decreasing([r["sm"] for r in rs]),
            "final_gap": rs[-1]["gap"],
        }
    if len(by_size) > 1:
        # same scale gives the same sm on any lattice at least twice the scale's reach
        ref, *others = list(by_size.values())
        ratios = []
        for rs in others:
            for a, b in zip(ref, rs):
                lo, hi = sorted([a["gap"], b["gap"]])
                ratios.append(hi / lo if lo > 0 else (1.0 if hi == 0 else math.inf))
        summary["uniformity_max_ratio"] = max(ratios)
    return _report("sweep", cfg, rows, summary), SWEEP_COLUMNS


def _bounds_row(rep) -> dict[str, Any]:
    d = rep.as_dict()
    return {c: d.get(c) for c in BOUNDS_COLUMNS} | {"detail": d}


def cmd_bounds(cfg: dict[str, Any], corrupt_alpha: bool = False) -> tuple[dict, list[str]]:
    if cfg["closed_form"]:
        rows = []
        for N, nb in cfg["closed_form"]:
            if N % cfg["n"] or N % nb:
                raise ConfigError(f"n={cfg['n']} and n̄={nb} must divide N={N}")
            rows.append(_bounds_row(closed_form_report(N, cfg["n"], nb, cfg["eps"])))
        gaps = [r["gap_b_hat"] for r in rows]
        summary = {"gap_b_hat_strictly_decreasing": _strictly_decreasing(gaps)}
        return _report("bounds", cfg, rows, summary), BOUNDS_COLUMNS
    lat = _validate(cfg)
    if cfg["ell_bar"] is None:
        raise ConfigError("bounds needs ell_bar (or closed_form)")
    dis = Dissection(lat, cfg["ell_bar"])
    f = build_weighting(_family(cfg), lat, cfg["n"])
    rep = ladder_check(f, dis, cfg["eps"], budget=cfg["budget"], corrupt_alpha=corrupt_alpha)
    report = _report("bounds", cfg, [_bounds_row(rep)], {"ordering_holds": rep.ordering_holds})
    if not rep.ordering_holds:
        raise InvariantViolation(report)
    return report, BOUNDS_COLUMNS


def cmd_conditions(cfg: dict[str, Any]) -> dict:
    p = conditions_params(cfg["eps"], cfg["s"], cfg["d"], cfg["n"], eps_bar=cfg["eps_bar"])
    return _report("conditions", cfg, [verify_conditions(p).as_dict()])


def _checks(seed: int) -> list[dict[str, Any]]:
    rng = np.random.default_rng(seed)
    out = []

    def record(name: str, holds: bool, detail: Any) -> None:
        out.append({"name": name, "holds": bool(holds), "detail": detail})

    instances = [(1, 4, 2), (1, 6, 2), (1, 6, 3), (1, 8, 2)]
    for d, L, n in instances:
        lat = Lattice(d, L)
        N = lat.N
        res = exact_partition(build_weighting(WeightingFamily(), lat, n))
        ref = z0_hat(N, n).log_Z
        record(f"constant_closed_form[{d},{L},{n}]", abs(res.log_Z - ref) <= 1e-10 * max(1, abs(ref)),
               {"log_Z": res.log_Z, "closed_form": ref})
        scale = float(rng.uniform(0.5, 8.0))
        f = build_weighting(WeightingFamily("pair-exponential", scale), lat, n)
        record(f"normalization[{d},{L},{n}]", normalization_residual(f) <= 1e-12, {"scale": scale})
        pm = placement_mass(f)
        record(f"placement_mass[{d},{L},{n}]", abs(pm - N / n) <= 1e-9 * N / n, {"mass": pm})
        root = exact_partition(f).root
        record(f"universal_bound[{d},{L},{n}]", root <= universal_bound(N, n) * (1 + 1e-12),
               {"root": root, "bound": universal_bound(N, n)})
        g = tilt_weighting(f, 0.05, rng)
        gb = lemma2_gap_bound(f, g, 0.05)
        record(f"lemma2[{d},{L},{n}]", gb.holds, {"gap": gb.gap, "bound": gb.bound})
    fails = 0
    for _ in range(100):
        rows, cols = rng.integers(1, 9, size=2)
        a = rng.uniform(0, 2, size=(rows, cols))
        delta = rng.uniform(-1, 1, size=(rows, cols))
        fails += not root_estimate_check(a, delta).holds
    record("root_estimate", fails == 0, {"trials": 100, "failures": fails})
    bad = [r for r in range(1, 201) if not stirling_sandwich(r).strict]
    record("stirling_sandwich", not bad, {"failures": bad})
    lat = Lattice(1, 8)
    for fam in (WeightingFamily(), WeightingFamily("pair-exponential", 4.0)):
        f = build_weighting(fam, lat, 2)
        for eb in (2, 4):
            dis = Dissection(lat, eb)
            l3 = lemma3_check(f, dis)
            record(f"lemma3[{fam.kind},{eb}]", l3.holds, {"alpha": l3.alpha, "worst": l3.worst_ratio})
            rep = ladder_check(f, dis, 0.1)
            record(f"ladder_ordering[{fam.kind},{eb}]", rep.ordering_holds,
                   {"log_z_plus": rep.log_z_plus, "log_z_prime": rep.log_z_prime,
                    "log_z_minus_lower": rep.log_z_minus_lower})
            spectrum = mass_spectrum(coarse_average(f, dis), 0.1)
            record(f"mass_completeness[{fam.kind},{eb}]", abs(spectrum.total - 1) <= 1e-9,
                   {"total": spectrum.total})
    fails = 0
    for _ in range(20):
        spectrum = _random_spectrum(rng, 0.1)
        nb = _feasible_box(spectrum.M_bar, 2, 0.1)
        c = alpha_contract(choose_alpha(spectrum, nb, 2, 0.1), spectrum, 0.1)
        fails += not (c.on_grid and c.sums_to_one and c.close)
    record("alpha_contract", fails == 0, {"trials": 20, "failures": fails})
    return out


def _random_spectrum(rng, eps: float, size: int | None = None) -> MassSpectrum:
    """Normalized random masses sorted decreasingly, on placeholder supertypes."""
    from .ladder import truncation_counts

    k = int(size or rng.integers(1, 12))
    raw = np.sort(rng.exponential(size=k))[::-1]
    masses = [float(x) for x in raw / raw.sum()]
    spectrum = MassSpectrum([(Supertype((i,)), a) for i, a in enumerate(masses)], eps)
    spectrum.M_bar, spectrum.M = truncation_counts(masses, eps)
    return spectrum


def _feasible_box(M_bar: int, n: int, eps: float) -> int:
    """Smallest multiple of n above ``200 M̄ n / ε²``."""
    need = Fraction(200 * M_bar * n) / Fraction(eps) ** 2
    nb = (int(need) // n + 1) * n
    return nb


def cmd_check(cfg: dict[str, Any]) -> dict:
    rows = _checks(int(cfg["seed"]))
    report = _report("check", cfg, rows, {"all_hold": all(r["holds"] for r in rows)})
    if not report["summary"]["all_hold"]:
        raise InvariantViolation(report)
    return report


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with settings")
    common.add_argument("--out", help="output path (CSV, plus <out>.json)")
    common.add_argument("--budget", type=int, help="maximum number of tilings to enumerate")
    common.add_argument("--mode", choices=["float", "rational"])
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--d", type=int, help="lattice dimension")
    common.add_argument("--L", type=int, help="lattice edge")
    common.add_argument("--n", type=int, help="tile size")
    common.add_argument("--ell-bar", dest="ell_bar", type=int, help="box edge of the dissection")
    common.add_argument("--family", choices=["constant", "pair-exponential"])
    common.add_argument("--scale", type=float, help="pair-exponential length")
    common.add_argument("--norm", choices=["euclidean", "linf"])
    common.add_argument("--eps", type=float)

    parser = argparse.ArgumentParser(prog="elastic-tilings", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("exact", parents=[common], help="exact partition function of one instance")
    p = sub.add_parser("sweep", parents=[common], help="pressure gap over a grid of scales")
    p.add_argument("--scales", type=_list_of_floats, help="comma-separated scales")
    p.add_argument("--sizes", type=_list_of_ints, help="comma-separated lattice edges")
    p = sub.add_parser("bounds", parents=[common], help="Z+ >= Z' >= Z- ladder")
    p.add_argument("--closed-form", dest="closed_form", type=_pairs,
                   help="closed forms only, for N:n_box pairs, e.g. 100:10,1000:50")
    p.add_argument("--corrupt-alpha", action="store_true", help=argparse.SUPPRESS)
    p = sub.add_parser("conditions", parents=[common], help="parameter schedule and inequalities")
    p.add_argument("--s", type=float, help="slack exponent")
    p.add_argument("--eps-bar", dest="eps_bar", type=float, help="working epsilon")
    sub.add_parser("check", parents=[common], help="run built-in invariant checks")
    return parser


@dataclass
class Outcome:
    code: int
    message: str = ""


def run(argv: list[str] | None = None) -> Outcome:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        columns = None
        if args.command == "exact":
            report, columns = cmd_exact(cfg)
        elif args.command == "sweep":
            report, columns = cmd_sweep(cfg)
        elif args.command == "bounds":
            report, columns = cmd_bounds(cfg, corrupt_alpha=args.corrupt_alpha)
        elif args.command == "conditions":
            report = cmd_conditions(cfg)
        else:
            report = cmd_check(cfg)
    except BudgetExceeded as exc:
        return Outcome(EXIT_CONFIG, f"infeasible: {exc} (estimated count {exc.count})")
    except (ConfigError, ConditionsError, DivisibilityError, LatticeError, WeightingError,
            LadderError) as exc:
        return Outcome(EXIT_CONFIG, f"error: {exc}")
    except InvariantViolation as exc:
        report = exc.args[0]
        emit(args.out, report, None if args.out is None else
             (BOUNDS_COLUMNS if report["command"] == "bounds" else None))
        return Outcome(EXIT_INVARIANT, f"invariant violated in {report['command']}")
    emit(args.out, report, columns)
    return Outcome(EXIT_OK)


def main(argv: list[str] | None = None) -> int:
    outcome = run(argv)
    if outcome.message:
        print(outcome.message, file=sys.stderr)
    return outcome.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
