"""Command-line front end.

Subcommands compute key-rate curves, tolerable-noise curves,
transmittance optima, success-probability profiles, Monte Carlo
equivalence reports and maximum distances, emitting deterministic CSV
or JSON (fixed 10-significant-digit formatting, LF line endings, a
``# schema=1`` comment on CSV).

Configuration precedence: command-line flags > TOML config file
(``--config``) > built-in defaults.  ``CVMDI_THREADS`` caps sweep
parallelism (unset/1 = serial, 0 = one worker per CPU).

Exit codes: 0 success, 2 invalid configuration, 3 domain outcomes such
as "no positive rate anywhere" (a report stating the outcome is still
written).
"""

from __future__ import annotations

import argparse
import functools
import json
import math
import os
import sys

from .errors import DomainError, InsufficientAcceptance, NoPositiveRate
from .montecarlo import McConfig, run_equivalence_check
from .optimize import (
    Geometry,
    Scenario,
    Scheme,
    max_distance,
    optimal_tps,
    sweep_distances,
    tolerable_excess_noise,
)
from .protocol import AttackKind, AttackModel, CE_AS_PRINTED, CE_SINGLE_FACTOR
from .subtraction import MAX_SUBTRACTED_PHOTONS, SourceParams, success_probability

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_RATE = 3

CSV_SCHEMA_LINE = "# schema=1"
CURVE_HEADER = "distance_km,key_rate,raw_rate,i_ab,chi_be,p_success,t_ps,mu,plob_bound"

_SCENARIO_DEFAULTS = {
    "scheme": "none",
    "k": 1,
    "tps": "optimal",
    "va": None,  # geometry-dependent: 40 extreme-asymmetric, 10000 symmetric
    "vb": None,
    "eps": 0.002,
    "beta": 0.95,
    "loss_db_per_km": 0.2,
    "attack": "independent",
    "geometry": "extreme-asymmetric",
    "ce_convention": "as-printed",
}
_RANGE_DEFAULTS = {"dmin": 0.0, "dmax": 300.0, "step": 1.0}
_OUTPUT_DEFAULTS = {"format": "csv", "out": "-"}


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x + 0.0, ".10g")


def _jnum(x):
    """JSON-safe number: 10 significant digits, null for non-finite."""
    if isinstance(x, int):
        return x
    if not math.isfinite(x):
        return None
    return float(format(x + 0.0, ".10g"))


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _grid(lo: float, hi: float, step: float):
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


def _worker_count() -> int:
    raw = os.environ.get("CVMDI_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def _pmap(fn, items):
    workers = _worker_count()
    if workers <= 1 or len(items) < 4:
        return [fn(item) for item in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(items) // (4 * workers))
        return list(pool.map(fn, items, chunksize=chunk))


def _load_config_file(path: str, parser: argparse.ArgumentParser) -> dict:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        parser.error(f"--config: cannot read {path!r}: {exc}")
    except tomllib.TOMLDecodeError as exc:
        parser.error(f"--config: invalid TOML in {path!r}: {exc}")
    if not isinstance(data, dict):
        parser.error(f"--config: top level of {path!r} must be a table")
    return {key.replace("-", "_"): value for key, value in data.items()}


# ---------------------------------------------------------------------------
# argument declaration


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=["none", "alice", "bob", "both"], default=None,
                   help="which party applies non-Gaussian post-selection")
    p.add_argument("--k", type=int, default=None, help="subtracted photon number")
    p.add_argument("--tps", default=None,
                   help="beam-splitter transmittance in (0,1], or 'optimal'")
    p.add_argument("--va", type=float, default=None, help="Alice source variance (SNU)")
    p.add_argument("--vb", type=float, default=None, help="Bob source variance (SNU)")
    p.add_argument("--eps", type=float, default=None,
                   help="excess noise per link (SNU, channel input)")
    p.add_argument("--beta", type=float, default=None, help="reconciliation efficiency")
    p.add_argument("--loss-db-per-km", type=float, default=None, dest="loss_db_per_km",
                   help="fibre loss coefficient")
    p.add_argument("--attack", choices=["independent", "negative-epr"], default=None)
    p.add_argument("--geometry", choices=["extreme-asymmetric", "symmetric"], default=None)
    p.add_argument("--ce-convention", choices=[CE_AS_PRINTED, CE_SINGLE_FACTOR],
                   default=None, dest="ce_convention",
                   help="normalisation of the correlated-attack noise term")


def _add_range_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dmin", type=float, default=None, help="first distance (km)")
    p.add_argument("--dmax", type=float, default=None, help="last distance (km)")
    p.add_argument("--step", type=float, default=None, help="distance step (km)")


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--out", default=None, help="output path, or - for stdout")
    p.add_argument("--config", default=None, help="TOML config file (flags override it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvmdi-ps",
        description="Key rates and post-selection optimisation for relay-based "
                    "coherent-state CV QKD with virtual photon subtraction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyrate-curve", help="key rate vs distance")
    _add_scenario_args(p)
    _add_range_args(p)
    _add_output_args(p)

    p = sub.add_parser("noise-curve", help="tolerable excess noise vs distance")
    _add_scenario_args(p)
    _add_range_args(p)
    _add_output_args(p)
    p.add_argument("--reoptimize", action=argparse.BooleanOptionalAction, default=None,
                   help="re-optimise t_ps at every probed noise value")

    p = sub.add_parser("optimal-tps", help="transmittance search at one distance")
    _add_scenario_args(p)
    _add_output_args(p)
    p.add_argument("--distance", type=float, default=None, required=False,
                   help="distance (km) at which to optimise")
    p.add_argument("--party", choices=["alice", "bob"], default=None)

    p = sub.add_parser("success-prob", help="subtraction success probability vs t_ps")
    p.add_argument("--va", type=float, default=None, help="source variance (SNU)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tps-min", type=float, default=None, dest="tps_min")
    p.add_argument("--tps-max", type=float, default=None, dest="tps_max")
    p.add_argument("--tps-step", type=float, default=None, dest="tps_step")
    _add_output_args(p)

    p = sub.add_parser("mc-verify", help="Monte Carlo equivalence report")
    p.add_argument("--va", type=float, default=None, help="source variance (SNU)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tps", default=None, help="beam-splitter transmittance in (0,1]")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_output_args(p)

    p = sub.add_parser("max-distance", help="largest distance with key rate >= 1e-8")
    _add_scenario_args(p)
    _add_output_args(p)

    return parser


def _merge_config(args: argparse.Namespace, defaults: dict,
                  parser: argparse.ArgumentParser) -> dict:
    merged = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config, parser)
        unknown = set(file_cfg) - set(merged)
        if unknown:
            parser.error(f"--config: unknown keys {sorted(unknown)}")
        merged.update(file_cfg)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


# ---------------------------------------------------------------------------
# validation and scenario assembly


def _parse_tps(value, parser) -> float | None:
    if value is None or value == "optimal":
        return None
    try:
        tps = float(value)
    except (TypeError, ValueError):
        parser.error(f"--tps must be a number in (0, 1] or 'optimal', got {value!r}")
    if not 0.0 < tps <= 1.0:
        parser.error(f"--tps must lie in (0, 1], got {tps}")
    return tps


def _validate_common(cfg: dict, parser) -> None:
    if not 0.0 < cfg["beta"] <= 1.0:
        parser.error(f"--beta must be in (0, 1], got {cfg['beta']}")
    if cfg["eps"] < 0.0:
        parser.error(f"--eps must be >= 0, got {cfg['eps']}")
    if cfg["loss_db_per_km"] <= 0.0:
        parser.error(f"--loss-db-per-km must be > 0, got {cfg['loss_db_per_km']}")
    if not isinstance(cfg["k"], int) or not 0 <= cfg["k"] <= MAX_SUBTRACTED_PHOTONS:
        parser.error(f"--k must be an integer in [0, {MAX_SUBTRACTED_PHOTONS}], got {cfg['k']}")
    for name in ("va", "vb"):
        if cfg[name] is not None and cfg[name] <= 1.0:
            parser.error(f"--{name} must be > 1 SNU, got {cfg[name]}")
    if cfg["scheme"] not in ("none", "alice", "bob", "both"):
        parser.error(f"--scheme must be one of none/alice/bob/both, got {cfg['scheme']}")
    if cfg["attack"] not in ("independent", "negative-epr"):
        parser.error(f"--attack must be independent or negative-epr, got {cfg['attack']}")
    if cfg["geometry"] not in ("extreme-asymmetric", "symmetric"):
        parser.error(f"--geometry must be extreme-asymmetric or symmetric, got {cfg['geometry']}")
    if cfg["ce_convention"] not in (CE_AS_PRINTED, CE_SINGLE_FACTOR):
        parser.error(f"--ce-convention must be {CE_AS_PRINTED} or {CE_SINGLE_FACTOR}")


def _scenario_from(cfg: dict, parser) -> Scenario:
    _validate_common(cfg, parser)
    geometry = Geometry(cfg["geometry"])
    default_v = 10000.0 if geometry is Geometry.SYMMETRIC else 40.0
    v_a = cfg["va"] if cfg["va"] is not None else default_v
    v_b = cfg["vb"] if cfg["vb"] is not None else default_v
    tps = _parse_tps(cfg["tps"], parser)
    scheme = Scheme(cfg["scheme"])
    if scheme is not Scheme.NONE and cfg["k"] < 1:
        parser.error(f"--k must be >= 1 when --scheme is {scheme.value}")
    attack = AttackModel(
        kind=AttackKind(cfg["attack"]), ce_convention=cfg["ce_convention"]
    )
    return Scenario(
        scheme=scheme,
        k=max(cfg["k"], 1),
        v_a=v_a,
        v_b=v_b,
        tps_a=tps,
        tps_b=tps,
        eps=cfg["eps"],
        beta=cfg["beta"],
        loss_db_per_km=cfg["loss_db_per_km"],
        geometry=geometry,
        attack=attack,
    )


def _validate_range(cfg: dict, parser) -> None:
    if cfg["step"] <= 0.0:
        parser.error(f"--step must be > 0, got {cfg['step']}")
    if cfg["dmax"] < cfg["dmin"]:
        parser.error(f"--dmax ({cfg['dmax']}) must be >= --dmin ({cfg['dmin']})")
    if cfg["dmin"] < 0.0:
        parser.error(f"--dmin must be >= 0, got {cfg['dmin']}")


# ---------------------------------------------------------------------------
# emission helpers


def _point_row(point) -> dict:
    # t_ps column reports the subtracting party's tap (Alice's when both do).
    if point.tps_a != 1.0:
        subtr_tps = point.tps_a
    elif point.tps_b != 1.0:
        subtr_tps = point.tps_b
    else:
        subtr_tps = 1.0
    return {
        "distance_km": point.distance_km,
        "key_rate": point.rate.key_rate,
        "raw_rate": point.rate.raw_rate,
        "i_ab": point.rate.i_ab,
        "chi_be": point.rate.chi_be,
        "p_success": point.rate.p_success,
        "t_ps": subtr_tps,
        "mu": point.rate.mu,
        "plob_bound": point.plob,
    }


def _csv_text(header: str, rows, comments=()) -> str:
    lines = [CSV_SCHEMA_LINE]
    lines.extend(comments)
    lines.append(header)
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _emit_outcome(message: str, cfg: dict) -> None:
    if cfg["format"] == "json":
        _emit(_json_text({"schema": 1, "outcome": message}), cfg["out"])
    else:
        _emit(f"{CSV_SCHEMA_LINE}\n# outcome={message}\n", cfg["out"])


# ---------------------------------------------------------------------------
# noise-curve worker (module level so process pools can pickle it)


def _noise_point(scn: Scenario, reoptimize: bool, distance_km: float) -> float:
    try:
        return tolerable_excess_noise(scn, distance_km, reoptimize=reoptimize)
    except NoPositiveRate:
        return math.nan


# ---------------------------------------------------------------------------
# subcommands


def _cmd_keyrate_curve(args, parser) -> int:
    cfg = _merge_config(args, {**_SCENARIO_DEFAULTS, **_RANGE_DEFAULTS, **_OUTPUT_DEFAULTS}, parser)
    scn = _scenario_from(cfg, parser)
    _validate_range(cfg, parser)
    distances = _grid(cfg["dmin"], cfg["dmax"], cfg["step"])
    sweep = sweep_distances(scn, distances, map_fn=_pmap)
    rows = [_point_row(p) for p in sweep.rows]
    if cfg["format"] == "json":
        payload = {
            "schema": 1,
            "command": "keyrate-curve",
            "config": _scenario_json(scn),
            "rows": [{k: _jnum(v) for k, v in row.items()} for row in rows],
        }
        _emit(_json_text(payload), cfg["out"])
    else:
        _emit(_csv_text(CURVE_HEADER, ([row[k] for k in CURVE_HEADER.split(",")] for row in rows)),
              cfg["out"])
    return EXIT_OK


def _cmd_noise_curve(args, parser) -> int:
    defaults = {**_SCENARIO_DEFAULTS, **_RANGE_DEFAULTS, **_OUTPUT_DEFAULTS, "reoptimize": True}
    cfg = _merge_config(args, defaults, parser)
    scn = _scenario_from(cfg, parser)
    _validate_range(cfg, parser)
    distances = _grid(cfg["dmin"], cfg["dmax"], cfg["step"])
    noises = _pmap(functools.partial(_noise_point, scn, bool(cfg["reoptimize"])), distances)
    if cfg["format"] == "json":
        payload = {
            "schema": 1,
            "command": "noise-curve",
            "config": _scenario_json(scn),
            "rows": [
                {"distance_km": _jnum(d), "tolerable_excess_noise": _jnum(e)}
                for d, e in zip(distances, noises)
            ],
        }
        _emit(_json_text(payload), cfg["out"])
    else:
        _emit(_csv_text("distance_km,tolerable_excess_noise", zip(distances, noises)), cfg["out"])
    if all(math.isnan(e) for e in noises):
        return EXIT_NO_RATE
    return EXIT_OK


def _cmd_optimal_tps(args, parser) -> int:
    defaults = {**_SCENARIO_DEFAULTS, **_OUTPUT_DEFAULTS, "distance": 0.0, "party": "alice"}
    cfg = _merge_config(args, defaults, parser)
    if cfg["scheme"] == "none":
        cfg["scheme"] = cfg["party"]
    scn = _scenario_from(cfg, parser)
    if cfg["distance"] < 0.0:
        parser.error(f"--distance must be >= 0, got {cfg['distance']}")
    if cfg["k"] < 1:
        parser.error(f"--k must be >= 1 for optimal-tps, got {cfg['k']}")
    report = optimal_tps(scn, cfg["distance"], cfg["k"], cfg["party"])

    def scan_row(row):
        frac = row.rate.beta * row.rate.i_ab - row.rate.chi_be
        return (row.t_ps, row.rate.key_rate, row.rate.raw_rate, frac,
                row.rate.p_success, row.rate.i_ab, row.rate.chi_be)

    if cfg["format"] == "json":
        payload = {
            "schema": 1,
            "command": "optimal-tps",
            "config": _scenario_json(scn),
            "distance_km": _jnum(cfg["distance"]),
            "party": cfg["party"],
            "argmax": _jnum(report.argmax) if report.argmax is not None else None,
            "value": _jnum(report.value),
            "positive": report.positive,
            "scan": [
                dict(zip(("t_ps", "key_rate", "raw_rate", "secret_fraction",
                          "p_success", "i_ab", "chi_be"),
                         (_jnum(v) for v in scan_row(row))))
                for row in report.scan
            ],
        }
        _emit(_json_text(payload), cfg["out"])
    else:
        comments = [
            f"# argmax={_fmt(report.argmax) if report.argmax is not None else 'none'}",
            f"# value={_fmt(report.value)}",
            f"# positive={str(report.positive).lower()}",
        ]
        header = "t_ps,key_rate,raw_rate,secret_fraction,p_success,i_ab,chi_be"
        _emit(_csv_text(header, (scan_row(r) for r in report.scan), comments), cfg["out"])
    return EXIT_OK if report.positive else EXIT_NO_RATE


def _cmd_success_prob(args, parser) -> int:
    defaults = {
        "va": 40.0, "k": 1,
        "tps_min": 0.005, "tps_max": 1.0, "tps_step": 0.005,
        **_OUTPUT_DEFAULTS,
    }
    cfg = _merge_config(args, defaults, parser)
    if cfg["va"] <= 1.0:
        parser.error(f"--va must be > 1 SNU, got {cfg['va']}")
    if not isinstance(cfg["k"], int) or not 0 <= cfg["k"] <= MAX_SUBTRACTED_PHOTONS:
        parser.error(f"--k must be an integer in [0, {MAX_SUBTRACTED_PHOTONS}], got {cfg['k']}")
    if not 0.0 < cfg["tps_min"] <= cfg["tps_max"] <= 1.0 or cfg["tps_step"] <= 0.0:
        parser.error("--tps-min/--tps-max/--tps-step must satisfy 0 < min <= max <= 1, step > 0")
    grid = _grid(cfg["tps_min"], cfg["tps_max"], cfg["tps_step"])
    rows = [(t, success_probability(SourceParams(v=cfg["va"], k=cfg["k"], t_ps=t)))
            for t in grid]
    if cfg["format"] == "json":
        payload = {
            "schema": 1,
            "command": "success-prob",
            "config": {"va": _jnum(cfg["va"]), "k": cfg["k"]},
            "rows": [{"t_ps": _jnum(t), "p_success": _jnum(p)} for t, p in rows],
        }
        _emit(_json_text(payload), cfg["out"])
    else:
        _emit(_csv_text("t_ps,p_success", rows), cfg["out"])
    return EXIT_OK


def _cmd_mc_verify(args, parser) -> int:
    defaults = {"va": 40.0, "k": 1, "tps": 0.9, "samples": 1_000_000, "seed": 0,
                **_OUTPUT_DEFAULTS, "format": "json"}
    cfg = _merge_config(args, defaults, parser)
    if cfg["format"] == "csv":
        parser.error("mc-verify emits a JSON report; use --format json")
    tps = _parse_tps(cfg["tps"], parser)
    if tps is None:
        parser.error("--tps must be numeric for mc-verify")
    if cfg["va"] <= 1.0:
        parser.error(f"--va must be > 1 SNU, got {cfg['va']}")
    try:
        mc_cfg = McConfig(
            src=SourceParams(v=cfg["va"], k=cfg["k"], t_ps=tps),
            n_samples=cfg["samples"],
            seed=cfg["seed"],
        )
    except DomainError as exc:
        parser.error(str(exc))
    try:
        report = run_equivalence_check(mc_cfg)
    except InsufficientAcceptance as exc:
        _emit(_json_text({"schema": 1, "outcome": f"insufficient-acceptance: {exc}"}),
              cfg["out"])
        return EXIT_NO_RATE
    payload = report.to_json_dict()
    payload["schema"] = 1
    for section in ("empirical", "closed_form", "z_scores"):
        payload[section] = {
            key: (_jnum(v) if isinstance(v, float) else v)
            for key, v in payload[section].items()
        }
    _emit(_json_text(payload), cfg["out"])
    return EXIT_OK


def _cmd_max_distance(args, parser) -> int:
    cfg = _merge_config(args, {**_SCENARIO_DEFAULTS, **_OUTPUT_DEFAULTS}, parser)
    scn = _scenario_from(cfg, parser)
    try:
        distance = max_distance(scn)
    except NoPositiveRate as exc:
        _emit_outcome(f"no-positive-rate: {exc}", cfg)
        return EXIT_NO_RATE
    if cfg["format"] == "json":
        payload = {
            "schema": 1,
            "command": "max-distance",
            "config": _scenario_json(scn),
            "max_distance_km": _jnum(distance),
        }
        _emit(_json_text(payload), cfg["out"])
    else:
        _emit(_csv_text("max_distance_km", [(distance,)]), cfg["out"])
    return EXIT_OK


def _scenario_json(scn: Scenario) -> dict:
    return {
        "scheme": scn.scheme.value,
        "k": scn.k,
        "v_a": _jnum(scn.v_a),
        "v_b": _jnum(scn.v_b),
        "tps_a": _jnum(scn.tps_a) if scn.tps_a is not None else "optimal",
        "tps_b": _jnum(scn.tps_b) if scn.tps_b is not None else "optimal",
        "eps": _jnum(scn.eps),
        "beta": _jnum(scn.beta),
        "loss_db_per_km": _jnum(scn.loss_db_per_km),
        "geometry": scn.geometry.value,
        "attack": scn.attack.kind.value,
        "ce_convention": scn.attack.ce_convention,
    }


_COMMANDS = {
    "keyrate-curve": _cmd_keyrate_curve,
    "noise-curve": _cmd_noise_curve,
    "optimal-tps": _cmd_optimal_tps,
    "success-prob": _cmd_success_prob,
    "mc-verify": _cmd_mc_verify,
    "max-distance": _cmd_max_distance,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except DomainError as exc:
        parser.error(str(exc))
        return EXIT_USAGE  # unreachable; parser.error raises SystemExit(2)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
