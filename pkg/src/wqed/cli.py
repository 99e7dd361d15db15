"""Command-line front end: spectra, scattering runs, fluorescence traces,
oracle comparisons, with deterministic CSV/JSON output.

Every run is a RunConfig (from flags or a JSON file via --config) that is
fully validated before any computation starts.  Outputs are byte-stable:
floats are written with 17 significant digits, newline is always "\\n",
and JSON keys are sorted.  Exit codes: 0 success, 2 configuration error,
3 numerical guard tripped; both failure modes print one machine-parsable
line to stderr of the form ``wqed: error=<Kind> message="..."``.

The environment variable WQED_THREADS caps internal parallelism; results
are independent of it by the library's determinism contracts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import __version__, chiral, fluorescence, oracle, twomode
from .errors import ConfigError, WqedError
from .model import (
    FrequencyGrid,
    Mode,
    SystemParams,
    TwoPhotonAmplitude,
    make_gaussian_packet,
    norm2_one,
)

_COMMANDS = ("spectrum", "scatter1", "scatter2", "two-mode", "fluorescence", "oracle-compare")


@dataclass(frozen=True)
class RunConfig:
    """Validated description of one CLI run."""

    command: str
    options: dict[str, Any]

    def hash(self) -> str:
        """Digest of the computational parameters (destination excluded)."""
        payload = json.dumps(
            {
                "command": self.command,
                "options": {k: v for k, v in self.options.items() if k != "output"},
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path: str, meta: list[tuple[str, Any]], columns: list[str], rows) -> None:
    with open(path, "w", newline="\n") as f:
        for key, value in meta:
            f.write(f"# {key}: {value}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(x) for x in row) + "\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def _provenance(config: RunConfig, params: SystemParams, tau_prime: float | None) -> dict:
    return {
        "version": __version__,
        "config_hash": config.hash(),
        "tau": params.tau,
        "omega_atom": params.omega_atom,
        "tau_prime": tau_prime,
        "units": "frequencies in 1/tau time units; tau sets the time unit",
    }


def _meta(config: RunConfig, params: SystemParams, tau_prime: float | None) -> list[tuple[str, Any]]:
    prov = _provenance(config, params, tau_prime)
    return [(k, prov[k]) for k in ("version", "config_hash", "tau", "omega_atom", "tau_prime", "units")]


def _emit(
    config: RunConfig,
    params: SystemParams,
    tau_prime: float | None,
    extra: list[tuple[str, Any]],
    columns: list[str],
    rows,
) -> None:
    """Write a tabular result as CSV (default) or a JSON document."""
    if config.options.get("format", "csv") == "csv":
        meta = _meta(config, params, tau_prime) + [
            (k, v if isinstance(v, str) else _fmt(v)) for k, v in extra
        ]
        _write_csv(config.options["output"], meta, columns, rows)
    else:
        payload = {
            "provenance": _provenance(config, params, tau_prime),
            "meta": {k: v for k, v in extra},
            "columns": columns,
            "rows": [[float(x) for x in row] for row in rows],
        }
        _write_json(config.options["output"], payload)


def _require(options: dict, key: str, cast, default=None):
    if key not in options or options[key] is None:
        if default is not None:
            return default
        raise ConfigError(f"missing required option '{key}'")
    try:
        return cast(options[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"option '{key}' is not a valid {cast.__name__}: {options[key]}") from exc


def _positive(value: float, key: str) -> float:
    if not (value > 0) or not math.isfinite(value):
        raise ConfigError(f"option '{key}' must be a positive finite number, got {value}")
    return value


def _system(options: dict, mode: Mode = Mode.CHIRAL) -> SystemParams:
    omega = _require(options, "omega", float, 0.0)
    tau = _positive(_require(options, "tau", float, 1.0), "tau")
    if not math.isfinite(omega):
        raise ConfigError("option 'omega' must be finite")
    return SystemParams(omega, tau, mode)


def _axis(options: dict, params: SystemParams) -> FrequencyGrid:
    kmin = _require(options, "kmin", float, params.omega_atom - 5.0 / params.tau)
    kmax = _require(options, "kmax", float, params.omega_atom + 5.0 / params.tau)
    n = _require(options, "n", int, 1001)
    if kmax <= kmin:
        raise ConfigError(f"kmax={kmax} must exceed kmin={kmin}")
    if n < 2:
        raise ConfigError(f"n={n} must be at least 2")
    return FrequencyGrid(kmin, (kmax - kmin) / (n - 1), n)


def _run_spectrum(config: RunConfig) -> None:
    params = _system(config.options)
    grid = _axis(config.options, params)
    k = grid.points()
    t = chiral.transmission(k, params)
    prob = chiral.excitation_probability(k, params)
    rows = zip(k, t.real, t.imag, np.abs(t) ** 2, prob)
    _emit(config, params, None, [], ["k", "t_re", "t_im", "t_abs2", "excitation_probability"], rows)


def _run_two_mode(config: RunConfig) -> None:
    params = _system(config.options, Mode.TWO_MODE)
    grid = _axis(config.options, params)
    k = grid.points()
    rbar = twomode.reflection(k, params)
    tbar = twomode.transmission(k, params)
    rows = zip(
        k,
        rbar.real,
        rbar.imag,
        np.abs(rbar) ** 2,
        tbar.real,
        tbar.imag,
        np.abs(tbar) ** 2,
        np.abs(rbar) ** 2 + np.abs(tbar) ** 2,
    )
    _emit(
        config,
        params,
        params.tau / 2.0,
        [],
        ["k", "rbar_re", "rbar_im", "rbar_abs2", "tbar_re", "tbar_im", "tbar_abs2", "flux_sum"],
        rows,
    )


def _input_packet(options: dict, params: SystemParams):
    grid = _axis(options, params)
    center = _require(options, "center", float, params.omega_atom)
    width = _positive(_require(options, "width", float, 1.0 / params.tau), "width")
    return make_gaussian_packet(grid, center, width)


def _run_scatter1(config: RunConfig) -> None:
    params = _system(config.options)
    packet = _input_packet(config.options, params)
    out = chiral.scatter_one_photon(packet, params)
    rows = zip(
        packet.grid.points(),
        packet.amplitude.real,
        packet.amplitude.imag,
        out.amplitude.real,
        out.amplitude.imag,
    )
    _emit(
        config,
        params,
        None,
        [("input_norm2", norm2_one(packet))],
        ["k", "in_re", "in_im", "out_re", "out_im"],
        rows,
    )


def _run_scatter2(config: RunConfig) -> None:
    params = _system(config.options)
    packet = _input_packet(config.options, params)
    f = TwoPhotonAmplitude(
        packet.grid, np.outer(packet.amplitude, packet.amplitude)
    ).normalize()
    out, report = chiral.scatter_two_photon(f, params)
    k = packet.grid.points()
    extra = [
        ("input_norm", report.input_norm),
        ("output_norm", report.output_norm),
        ("bound_term_norm", report.bound_term_norm),
        ("energy_check", report.energy_check),
    ]
    n = packet.grid.count
    idx1, idx2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rows = zip(
        k[idx1.ravel()],
        k[idx2.ravel()],
        out.amplitude.real.ravel(),
        out.amplitude.imag.ravel(),
    )
    _emit(config, params, None, extra, ["k1", "k2", "out_re", "out_im"], rows)


def _run_fluorescence(config: RunConfig) -> None:
    params = _system(config.options)
    alpha = complex(
        _require(config.options, "alpha_re", float, 0.2),
        _require(config.options, "alpha_im", float, 0.0),
    )
    drive = fluorescence.DriveParams(alpha, _require(config.options, "k_drive", float, params.omega_atom))
    t_end = _positive(_require(config.options, "t_end", float, 20.0 * params.tau), "t_end")
    dt = _positive(_require(config.options, "dt", float, params.tau / 100.0), "dt")
    tprime = config.options.get("g1_tprime")

    if tprime is None:
        trajectory = fluorescence.evolve_bloch(
            fluorescence.BlochState.ground(), drive, params, t_end, dt
        )
        rows = (
            (
                s.t,
                s.sm.real,
                s.sm.imag,
                s.sz,
                fluorescence.output_photon_flux(s, drive, params),
            )
            for s in trajectory
        )
        columns = ["t", "sigma_minus_re", "sigma_minus_im", "sigma_z", "output_flux"]
    else:
        tprime = float(tprime)
        if tprime < 0 or tprime > t_end:
            raise ConfigError(f"g1_tprime={tprime} must lie in [0, t_end]")
        ts = np.arange(tprime, t_end + dt / 2.0, dt)
        trace = fluorescence.regression_g1(drive, params, tprime, ts, dt)
        rows = zip(trace.ts, trace.g1.real, trace.g1.imag)
        columns = ["t", "g1_re", "g1_im"]
    extra = [
        ("alpha", _fmt(alpha.real) + ("+" if alpha.imag >= 0 else "") + _fmt(alpha.imag) + "j"),
        ("k_drive", drive.k_drive),
    ]
    if tprime is not None:
        extra.append(("t_prime", tprime))
    _emit(config, params, None, extra, columns, rows)


def _oracle_scatter1(params: SystemParams, options: dict) -> dict:
    tau = params.tau
    n = _require(options, "n_modes", int, 400)
    span = _positive(_require(options, "span", float, 160.0 / tau), "span")
    width = _positive(_require(options, "width", float, 2.0 / tau), "width")
    grid = FrequencyGrid.centered(params.omega_atom, span, n)
    model = oracle.DiscreteModel.from_params(params, grid)
    packet = make_gaussian_packet(grid, params.omega_atom, width)
    out = oracle.extract_one_photon_smatrix(model, packet, settle=8.0 * tau)
    expected = chiral.scatter_one_photon(packet, params)

    mass = np.cumsum(np.abs(packet.amplitude) ** 2 * grid.step)
    band = (mass >= 0.005) & (mass <= 0.995)
    diff = out.amplitude[band] - expected.amplitude[band]
    sup = float(np.max(np.abs(out.amplitude[band] / packet.amplitude[band]
                              - chiral.transmission(grid.points()[band], params))))
    l2 = float(
        np.sqrt(np.sum(np.abs(diff) ** 2) / np.sum(np.abs(expected.amplitude[band]) ** 2))
    )
    return {"l2_error": l2, "sup_error": sup, "n_modes": n, "converged": sup <= 1e-2}


def _oracle_scatter2(params: SystemParams, options: dict) -> dict:
    tau = params.tau
    n = _require(options, "n_modes", int, 160)
    span = _positive(_require(options, "span", float, 80.0 / tau), "span")
    width = _positive(_require(options, "width", float, 2.0 / tau), "width")
    grid = FrequencyGrid.centered(params.omega_atom, span, n)
    model = oracle.DiscreteModel.from_params(params, grid)
    packet = make_gaussian_packet(grid, params.omega_atom, width)
    f = TwoPhotonAmplitude(grid, np.outer(packet.amplitude, packet.amplitude)).normalize()
    analytic, _ = chiral.scatter_two_photon(f, params)
    numeric = oracle.extract_two_photon_smatrix(model, f, settle=7.5 * tau)
    diff = numeric.amplitude - analytic.amplitude
    l2 = float(np.sqrt(np.sum(np.abs(diff) ** 2) / np.sum(np.abs(analytic.amplitude) ** 2)))
    sup = float(np.max(np.abs(diff)) / np.max(np.abs(analytic.amplitude)))
    return {"l2_error": l2, "sup_error": sup, "n_modes": n, "converged": l2 <= 2e-2}


def _oracle_two_mode(params: SystemParams, options: dict) -> dict:
    tau = params.tau
    n = _require(options, "n_modes", int, 120)
    span = _positive(_require(options, "span", float, 96.0 / tau), "span")
    width = _positive(_require(options, "width", float, 2.5 / tau), "width")
    grid = FrequencyGrid.centered(params.omega_atom, span, n)
    model = oracle.DiscreteModel.from_params(params, grid)
    packet = make_gaussian_packet(grid, params.omega_atom, width)
    f = TwoPhotonAmplitude(grid, np.outer(packet.amplitude, packet.amplitude)).normalize()
    analytic = twomode.scatter_two_photon_two_mode(f, params)
    numeric = oracle.extract_two_photon_smatrix(model, f, settle=4.0 * tau)
    na, no = analytic.channel_norms(), numeric.channel_norms()
    sup = max(abs(na[ch] - no[ch]) for ch in na)
    num = sum(
        float(np.sum(np.abs(getattr(numeric, ch).amplitude - getattr(analytic, ch).amplitude) ** 2))
        for ch in ("rr", "rl", "ll")
    )
    den = sum(float(np.sum(np.abs(getattr(analytic, ch).amplitude) ** 2)) for ch in ("rr", "rl", "ll"))
    l2 = math.sqrt(num / den)
    return {"l2_error": l2, "sup_error": sup, "n_modes": n, "converged": sup <= 1e-2}


def _run_oracle_compare(config: RunConfig) -> None:
    case = config.options.get("case")
    if case not in ("scatter1", "scatter2", "two-mode"):
        raise ConfigError(f"oracle-compare case must be scatter1|scatter2|two-mode, got {case}")
    mode = Mode.TWO_MODE if case == "two-mode" else Mode.CHIRAL
    params = _system(config.options, mode)
    runner = {
        "scatter1": _oracle_scatter1,
        "scatter2": _oracle_scatter2,
        "two-mode": _oracle_two_mode,
    }[case]
    report = runner(params, config.options)
    tau_prime = params.tau / 2.0 if case == "two-mode" else None
    report["case"] = case
    report["provenance"] = _provenance(config, params, tau_prime)
    _write_json(config.options["output"], report)


_RUNNERS = {
    "spectrum": _run_spectrum,
    "two-mode": _run_two_mode,
    "scatter1": _run_scatter1,
    "scatter2": _run_scatter2,
    "fluorescence": _run_fluorescence,
    "oracle-compare": _run_oracle_compare,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wqed",
        description="Few-photon waveguide-QED spectra, scattering and fluorescence runs.",
    )
    parser.add_argument("--config", help="JSON file holding a RunConfig (overrides subcommand)")
    sub = parser.add_subparsers(dest="command")

    def common(p: argparse.ArgumentParser, axis: bool = True) -> None:
        p.add_argument("--omega", type=float, default=0.0, help="atom detuning")
        p.add_argument("--tau", type=float, default=1.0, help="decay parameter (time unit)")
        p.add_argument("--output", required=True, help="output file path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if axis:
            p.add_argument("--kmin", type=float, default=None)
            p.add_argument("--kmax", type=float, default=None)
            p.add_argument("--n", type=int, default=1001)

    common(sub.add_parser("spectrum", help="transmission and excitation spectra"))
    common(sub.add_parser("two-mode", help="reflection/transmission spectra"))
    for name in ("scatter1", "scatter2"):
        p = sub.add_parser(name, help=f"{name} Gaussian-packet scattering run")
        common(p)
        p.add_argument("--center", type=float, default=None, help="packet center (default omega)")
        p.add_argument("--width", type=float, default=None, help="packet amplitude width")
    p = sub.add_parser("fluorescence", help="coherent-drive expectation traces or G1")
    common(p, axis=False)
    p.add_argument("--alpha-re", type=float, default=0.2)
    p.add_argument("--alpha-im", type=float, default=0.0)
    p.add_argument("--k-drive", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--g1-tprime", type=float, default=None, help="emit G1(t, t') instead of traces")
    p = sub.add_parser("oracle-compare", help="closed forms vs discretized-mode verifier")
    common(p, axis=False)
    p.add_argument("case", choices=("scatter1", "scatter2", "two-mode"))
    p.add_argument("--n-modes", type=int, default=None)
    p.add_argument("--span", type=float, default=None)
    p.add_argument("--width", type=float, default=None)
    return parser


def _config_from_namespace(ns: argparse.Namespace) -> RunConfig:
    options = {k: v for k, v in vars(ns).items() if k not in ("command", "config") and v is not None}
    return RunConfig(ns.command, options)


def _config_from_file(path: str) -> RunConfig:
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    command = raw.get("command")
    if command not in _COMMANDS:
        raise ConfigError(f"config 'command' must be one of {_COMMANDS}, got {command}")
    options = raw.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("config 'options' must be an object")
    return RunConfig(command, options)


def _validate(config: RunConfig) -> RunConfig:
    if config.command not in _COMMANDS:
        raise ConfigError(f"unknown command {config.command}")
    if not config.options.get("output"):
        raise ConfigError("missing required option 'output'")
    # Fail fast on the shared numeric fields; command runners validate the rest.
    _system(config.options)
    return config


def run(config: RunConfig) -> int:
    """Validate and execute one run; returns the process exit status.

    0 on success, 2 on configuration errors, 3 when a numerical guard
    (GridTooNarrow, StepTooLarge, BudgetExceeded, ...) trips.
    """
    try:
        _validate(config)
        _RUNNERS[config.command](config)
    except ConfigError as exc:
        print(f'wqed: error=ConfigError message="{exc}"', file=sys.stderr)
        return 2
    except WqedError as exc:
        print(f'wqed: error={type(exc).__name__} message="{exc}"', file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.config:
            config = _config_from_file(ns.config)
        elif ns.command:
            config = _config_from_namespace(ns)
        else:
            parser.print_usage(sys.stderr)
            print('wqed: error=ConfigError message="no command given"', file=sys.stderr)
            return 2
    except ConfigError as exc:
        print(f'wqed: error=ConfigError message="{exc}"', file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
