"""Batch command-line interface.

Commands: simulate, validate, price, calibrate. Configuration is a flat
``key = value`` file with dotted sections (or JSON with the same nesting);
command-line flags override config keys. All times are ACT/365 year
fractions, dates ISO-8601. Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import hashlib
import os
import json
import sys
from dataclasses import dataclass, field

import click
import numpy as np

from tsou import process
from tsou.kernels import BACKEND
from tsou.models import ForwardCurve, OneFactorModel, TwoFactorModel, spot_paths
from tsou.process import (NtsParams, NumericalError, OuNtsParams, PathGrid,
                          err_pct, ou_cumulant, sample_increments,
                          transition_lch, transition_lch_oracle)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def _flatten(prefix: str, obj, out: dict):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}{k}." if isinstance(v, dict) else f"{prefix}{k}", v, out)
    else:
        out[prefix] = obj


def load_config(path: str | None) -> dict:
    """Flat dotted key-value text or JSON; returns {key: scalar}."""
    if path is None:
        return {}
    cfg: dict = {}
    try:
        text = open(path).read()
    except OSError as e:
        raise ConfigError(f"config: {e}") from None
    if path.endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path}: {e}") from None
        flat: dict = {}
        _flatten("", data, flat)
        return flat
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config {path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        cfg[key.strip()] = value.strip()
    return cfg


def _get(cfg: dict, key: str, default=None, cast=str, required=False):
    if key not in cfg or cfg[key] in (None, ""):
        if required:
            raise ConfigError(f"config: missing required key {key!r}")
        return default
    try:
        raw = cfg[key]
        if cast is bool and isinstance(raw, str):
            return raw.lower() in ("1", "true", "yes", "y")
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config: bad value for {key!r}: {cfg[key]!r}") from None


def build_model(cfg: dict):
    """Construct the spot model described by the model.* section."""
    factors = _get(cfg, "model.factors", 1, int)
    ou = OuNtsParams(
        nts=NtsParams(alpha=_get(cfg, "model.alpha", 0.5, float),
                      sigma=_get(cfg, "model.sigma", None, float, required=True),
                      theta=0.0,
                      nu=_get(cfg, "model.nu", None, float, required=True)),
        b=_get(cfg, "model.b", None, float, required=True),
        n0=_get(cfg, "model.n0", 0.0, float))
    curve_spec = str(_get(cfg, "model.curve", "flat:20.0"))
    if curve_spec.startswith("flat:"):
        curve = ForwardCurve.flat(float(curve_spec[5:]))
    else:
        curve = ForwardCurve.from_csv(curve_spec)
    rate = _get(cfg, "model.rate", 0.0, float)
    if factors == 1:
        return OneFactorModel(curve=curve, ou=ou, rate=rate)
    if factors == 2:
        levy = NtsParams(alpha=_get(cfg, "model.alpha2", 0.5, float),
                         sigma=_get(cfg, "model.sigma2", None, float, required=True),
                         theta=_get(cfg, "model.theta2", 0.0, float),
                         nu=_get(cfg, "model.nu2", None, float, required=True))
        return TwoFactorModel(curve=curve, ou=ou, levy=levy, rate=rate)
    raise ConfigError(f"config: model.factors must be 1 or 2, got {factors}")


def _run_keys(cfg: dict, seed, paths, scheme, threads):
    seed = seed if seed is not None else _get(cfg, "run.seed", 0, int)
    paths = paths if paths is not None else _get(cfg, "run.paths", 1000, int)
    scheme = scheme if scheme is not None else _get(cfg, "run.scheme", "exact")
    if threads is None:
        # per-path substreams make results independent of the thread count
        threads = _get(cfg, "run.threads", os.cpu_count() or 1, int)
    if scheme not in process.SCHEMES:
        raise ConfigError(f"config: unknown scheme {scheme!r}")
    if paths < 1:
        raise ConfigError(f"config: run.paths must be >= 1, got {paths}")
    if threads < 1:
        raise ConfigError(f"config: run.threads must be >= 1, got {threads}")
    return int(seed) & (2 ** 64 - 1), paths, scheme, threads


def params_digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_output(text: str, out: str | None):
    if out is None:
        click.echo(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


@click.group()
@click.version_option(package_name="tsou", message="%(version)s")
def main():
    """Tempered-stable OU simulation, validation, pricing and calibration."""


@main.command()
@click.option("--config", "config_path", type=str, default=None, help="Config file (key=value or JSON).")
@click.option("--seed", type=int, default=None, help="Base RNG seed.")
@click.option("--paths", type=int, default=None, help="Number of paths.")
@click.option("--scheme", type=click.Choice(process.SCHEMES), default=None)
@click.option("--out", type=str, default=None, help="Output path (default stdout).")
@click.option("--threads", type=int, default=None)
def simulate(config_path, seed, paths, scheme, out, threads):
    """Simulate process or spot paths to CSV (path_id, t, N or S)."""
    try:
        cfg = load_config(config_path)
        seed, paths, scheme, threads = _run_keys(cfg, seed, paths, scheme, threads)
        t_end = _get(cfg, "grid.t_end", 1.0, float)
        steps = _get(cfg, "grid.steps", 12, int)
        if t_end <= 0 or steps < 1:
            raise ConfigError("config: grid.t_end > 0 and grid.steps >= 1 required")
        has_model = "model.sigma" in cfg
        spot = _get(cfg, "grid.spot", has_model, bool)
        if spot and not has_model:
            raise ConfigError("config: grid.spot requires a model.* section")
        grid = PathGrid.regular(t_end, steps)
        if spot:
            model = build_model(cfg)
            values = spot_paths(seed, grid, model, scheme, paths, threads)
            label = "S"
        else:
            ou = OuNtsParams(
                nts=NtsParams(alpha=_get(cfg, "ou.alpha", 0.5, float),
                              sigma=_get(cfg, "ou.sigma", 0.3, float),
                              theta=0.0,
                              nu=_get(cfg, "ou.nu", 2.5, float)),
                b=_get(cfg, "ou.b", 5.0, float),
                n0=_get(cfg, "ou.n0", 0.0, float))
            values = process.simulate_paths(seed, grid, ou, scheme, paths,
                                            threads=threads)
            label = "N"
    except (ConfigError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        lines = [f"path_id,t,{label}"]
        for i in range(paths):
            for j, t in enumerate(grid.times):
                lines.append(f"{i},{float(t)!r},{float(values[i, j])!r}")
        _write_output("\n".join(lines) + "\n", out)
        click.echo(f"simulate: seed={seed} scheme={scheme} paths={paths} "
                   f"backend={BACKEND}", err=True)
    except NumericalError as e:
        click.echo(f"numerical failure: {e}", err=True)
        sys.exit(EXIT_NUMERICAL)


@main.command()
@click.option("--config", "config_path", type=str, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--paths", type=int, default=None,
              help="Largest path count in the cumulant sweep.")
@click.option("--out", type=str, default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--threads", type=int, default=None)
def validate(config_path, seed, paths, out, fmt, threads):
    """Cumulant suite (per scheme and path count) plus the chf-oracle grid."""
    try:
        cfg = load_config(config_path)
        seed, _, _, threads = _run_keys(cfg, seed, None, None, threads)
        if paths is None:
            paths = _get(cfg, "run.paths", 10 ** 6, int)
        if paths < 1000:
            raise ConfigError("config: validate needs at least 1000 paths")
        ou = OuNtsParams(
            nts=NtsParams(alpha=_get(cfg, "ou.alpha", 0.5, float),
                          sigma=_get(cfg, "ou.sigma", 0.3, float),
                          theta=0.0, nu=_get(cfg, "ou.nu", 2.5, float)),
            b=_get(cfg, "ou.b", 5.0, float))
        dts = [1.0 / 365.0, 1.0 / 12.0]
    except ConfigError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        rows = []
        counts = [n for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6) if n <= paths]
        for dt in dts:
            c2_true = ou_cumulant(2, dt, ou)
            c4_true = ou_cumulant(4, dt, ou)
            for scheme in process.SCHEMES:
                z = sample_increments(seed, dt, ou, scheme, counts[-1],
                                      threads=threads)
                for n in counts:
                    zn = z[:n] - z[:n].mean()
                    c2 = float((zn ** 2).mean())
                    c4 = float((zn ** 4).mean() - 3.0 * c2 * c2)
                    e2, e4 = err_pct(c2_true, c2), err_pct(c4_true, c4)
                    rows.append({
                        "dt": dt, "scheme": scheme, "n_paths": n,
                        "c2": c2, "c2_true": c2_true, "c2_err_pct": e2,
                        "c4": c4, "c4_true": c4_true, "c4_err_pct": e4,
                        "flag": "BIASED" if (scheme != "exact" and n >= 10 ** 5
                                             and abs(e2) > 0.10) else "",
                    })
        # chf grid vs quadrature oracle
        worst = 0.0
        for t in (1.0 / 365.0, 1.0 / 12.0, 1.0):
            for u in np.linspace(-50.0, 50.0, 33):
                if u == 0.0:
                    continue
                closed = transition_lch(float(u), t, ou)
                oracle = transition_lch_oracle(float(u), t, ou)
                worst = max(worst, abs(closed - oracle) / max(abs(oracle), 1e-30))
        chf = {"max_rel_dev": worst, "status": "PASS" if worst <= 1e-8 else "FAIL"}
        report = {"seed": seed, "params": {
            "alpha": ou.alpha, "b": ou.b, "sigma": ou.sigma, "nu": ou.nu},
            "cumulants": rows, "chf_grid": chf}
        if fmt == "json":
            _write_output(json.dumps(report, indent=2, sort_keys=True) + "\n", out)
        else:
            lines = ["dt,scheme,n_paths,c2,c2_true,c2_err_pct,c4,c4_true,c4_err_pct,flag"]
            for r in rows:
                lines.append(",".join(repr(r[k]) if not isinstance(r[k], str)
                                      else r[k] for k in
                                      ("dt", "scheme", "n_paths", "c2", "c2_true",
                                       "c2_err_pct", "c4", "c4_true",
                                       "c4_err_pct", "flag")))
            lines.append(f"# chf grid max rel dev {worst!r} -> {chf['status']}")
            _write_output("\n".join(lines) + "\n", out)
        click.echo(f"validate: chf grid {chf['status']}", err=True)
    except NumericalError as e:
        click.echo(f"numerical failure: {e}", err=True)
        sys.exit(EXIT_NUMERICAL)


def _contract_spec(cfg: dict):
    from tsou.pricing import AsianSpec, CallStripSpec, SwingSpec

    kind = _get(cfg, "contract.type", None, str, required=True)
    strike = _get(cfg, "contract.strike", None, float, required=True)
    start = _get(cfg, "contract.start", 1.0 / 365.0, float)
    fixings = _get(cfg, "contract.fixings", 30, int)
    if fixings < 1:
        raise ConfigError("config: contract.fixings must be >= 1")
    dates = start + np.arange(fixings) / 365.0
    if kind == "call_strip":
        return CallStripSpec(fixing_dates=dates, strike=strike)
    if kind == "asian":
        return AsianSpec(fixing_dates=dates, strike=strike)
    if kind == "swing":
        rights = _get(cfg, "contract.rights", None, int, required=True)
        return SwingSpec(exercise_dates=dates, n_rights=rights, strike=strike)
    raise ConfigError(f"config: unknown contract.type {kind!r}")


@main.command()
@click.option("--config", "config_path", type=str, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--paths", type=int, default=None)
@click.option("--scheme", type=click.Choice(process.SCHEMES), default=None)
@click.option("--out", type=str, default=None)
@click.option("--threads", type=int, default=None)
def price(config_path, seed, paths, scheme, out, threads):
    """Price the configured contract; call strips report FFT and MC."""
    from tsou.pricing import (AsianSpec, CallStripSpec, DampingError,
                              SwingSpec, price_asian_mc, price_call_strip_fft,
                              price_call_strip_mc, price_swing_lsmc)

    try:
        cfg = load_config(config_path)
        seed, paths, scheme, threads = _run_keys(cfg, seed, paths, scheme, threads)
        model = build_model(cfg)
        spec = _contract_spec(cfg)
        rate = model.rate
    except (ConfigError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        digest = params_digest({"config": {k: str(v) for k, v in sorted(cfg.items())},
                                "seed": seed, "paths": paths, "scheme": scheme})
        record: dict = {"seed": seed, "params_digest": digest}
        if isinstance(spec, CallStripSpec):
            record["contract"] = "call_strip"
            fft = price_call_strip_fft(model, spec, rate,
                                       damping=_get(cfg, "fft.damping", 0.75, float))
            mc = price_call_strip_mc(seed, model, spec, rate, paths, scheme, threads)
            record["fft"] = fft.estimate.as_dict()
            record["fft"]["per_fixing"] = list(fft.per_fixing)
            record["mc"] = mc.as_dict()
            record["method"] = "fft+mc"
            record["value"] = fft.estimate.value
            record["stderr"] = 0.0
            record["n_paths"] = mc.n_paths
        elif isinstance(spec, AsianSpec):
            record["contract"] = "asian"
            res = price_asian_mc(seed, model, spec, rate, paths, scheme, threads)
            record["call"] = res.call.as_dict()
            record["put"] = res.put.as_dict()
            record["parity_gap"] = res.parity_gap
            record["method"] = res.call.method
            record["value"] = res.call.value
            record["stderr"] = res.call.stderr
            record["n_paths"] = res.call.n_paths
        else:
            record["contract"] = "swing"
            est = price_swing_lsmc(seed, model, spec, rate, paths, scheme, threads)
            record["method"] = est.method
            record["value"] = est.value
            record["stderr"] = est.stderr
            record["n_paths"] = est.n_paths
        _write_output(json.dumps(record, indent=2, sort_keys=True) + "\n", out)
    except DampingError as e:
        click.echo(f"numerical failure: {e}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except NumericalError as e:
        click.echo(f"numerical failure: {e}", err=True)
        sys.exit(EXIT_NUMERICAL)


@main.command()
@click.option("--config", "config_path", type=str, default=None)
@click.option("--day-ahead", "day_ahead_path", type=str, default=None,
              help="Day-ahead CSV (date,price[,trading_day]).")
@click.option("--month-ahead", "month_ahead_path", type=str, default=None,
              help="Month-ahead CSV.")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=str, default=None)
@click.option("--synthetic", is_flag=True, default=False,
              help="Run the synthetic round-trip self-test instead of fitting files.")
def calibrate(config_path, day_ahead_path, month_ahead_path, seed, out, synthetic):
    """Two-factor calibration pipeline; emits fitted parameters as JSON."""
    from tsou.calibration import (CalibrationError, calibrate_two_factor,
                                  load_market_csv, synthetic_market)

    try:
        cfg = load_config(config_path)
        seed = seed if seed is not None else _get(cfg, "run.seed", 0, int)
        if not synthetic:
            day_ahead_path = day_ahead_path or _get(cfg, "calibrate.day_ahead_csv", None)
            month_ahead_path = month_ahead_path or _get(cfg, "calibrate.month_ahead_csv", None)
            if day_ahead_path is None:
                raise ConfigError("calibrate: day-ahead CSV not provided")
            if month_ahead_path is None:
                raise ConfigError("calibrate: month-ahead CSV not provided")
    except ConfigError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        if synthetic:
            da, ma, truth = synthetic_market(seed)
            result = calibrate_two_factor(da, ma, seed=seed)
            payload = result.as_dict()
            payload["synthetic_truth"] = truth.as_dict()["model"]
            payload["synthetic_errors"] = {
                "b_rel": result.ou.b / truth.ou.b - 1.0,
                "sigma1_rel": result.ou.sigma / truth.ou.sigma - 1.0,
                "nu1_rel": result.ou.nu / truth.ou.nu - 1.0,
                "sigma2_rel": result.levy.sigma / truth.levy.sigma - 1.0,
                "nu2_rel": result.levy.nu / truth.levy.nu - 1.0,
                "theta2_abs": result.levy.theta - truth.levy.theta,
            }
        else:
            da = load_market_csv(day_ahead_path)
            ma = load_market_csv(month_ahead_path)
            result = calibrate_two_factor(da, ma, seed=seed)
            payload = result.as_dict()
        payload["seed"] = seed
        payload["params_digest"] = params_digest(payload["model"])
        _write_output(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)
    except CalibrationError as e:
        click.echo(f"calibration failure: {e}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except FileNotFoundError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)


if __name__ == "__main__":
    main()
