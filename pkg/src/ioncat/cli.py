"""Command-line scenario runner.

Each command writes one CSV data file (``#`` header comments, then a
comma-separated table) plus a ``<output>.config`` sidecar holding the full
effective configuration. Parameters come from an optional flat
``key = value`` file and are overridden by command-line flags.

Exit codes: 0 success, 2 invalid configuration, 3 oracle verification
failed, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, carrier, conditional, lamb_dicke, oracle, stats, trajectories
from .exceptions import DegenerateStateError, ParameterError
from .hilbert import GROUND, SystemParams, sum_sq

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4
VERIFY_TOL = 1e-6

COMMANDS = ("ld-grid", "carrier-cat", "jump-prob", "fano-scan", "phonon-dist", "trajectories")


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _complex(text) -> complex:
    return complex(str(text).replace(" ", ""))


# key -> (parser, default); None means "command default" (see _COMMAND_DEFAULTS)
SCHEMA = {
    "g": (float, 1.0),
    "eta": (float, 0.05),
    "gamma": (float, 1.0),
    "alpha": (_complex, 2.0),
    "M": (int, 40),
    "truncation": (str, "raise"),
    "tau": (float, 3.29),
    "tau_min": (float, None),
    "tau_max": (float, None),
    "tau_step": (float, None),
    "eta_min": (float, 0.01),
    "eta_max": (float, 0.5),
    "eta_step": (float, 0.01),
    "m_min": (int, 0),
    "m_max": (int, 30),
    "window_lo": (int, 0),
    "window_hi": (int, 12),
    "floor": (float, 1e-4),
    "n_traj": (int, 10000),
    "n_checkpoints": (int, 20),
    "method": (str, "waiting_time"),
    "dt": (float, 1e-3),
    "seed": (int, 0),
    "verify": (_bool, False),
}

_COMMAND_DEFAULTS = {
    "carrier-cat": {"tau_min": 0.0, "tau_max": 10.0, "tau_step": 0.01},
    "jump-prob": {"tau_min": 0.0, "tau_max": 30.0, "tau_step": 0.01},
    "fano-scan": {"tau_min": 0.0, "tau_max": 10.0, "tau_step": 0.01},
    "trajectories": {"tau_min": 0.0, "tau_max": 10.0},
}

PARAM_KEYS = ("g", "eta", "gamma", "alpha", "M", "truncation")

# settings each command actually reads
COMMAND_KEYS = {
    "ld-grid": ("eta_min", "eta_max", "eta_step", "m_min", "m_max"),
    "carrier-cat": ("tau_min", "tau_max", "tau_step", "dt"),
    "jump-prob": ("tau_min", "tau_max", "tau_step", "dt"),
    "fano-scan": ("tau_min", "tau_max", "tau_step", "dt"),
    "phonon-dist": ("tau", "window_lo", "window_hi", "floor", "dt"),
    "trajectories": ("tau_min", "tau_max", "n_checkpoints", "n_traj", "method", "dt"),
}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: SystemParams
    settings: dict = field(default_factory=dict)
    output: Path = Path("out.csv")
    verify: bool = False
    seed: int = 0

    def effective(self) -> dict:
        """Every key with its effective value, for the sidecar and the header."""
        out = {k: self.settings[k] for k in COMMAND_KEYS[self.command]}
        out.update(self.params.as_dict())
        out["seed"] = self.seed
        out["verify"] = self.verify
        return out


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: key {key!r} given twice")
        values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ioncat",
        description="Trapped ion in a cavity: cat states, conditional evolution and quantum jumps.",
    )
    parser.add_argument("--version", action="version", version=f"ioncat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat key = value parameter file")
        p.add_argument("-o", "--output", type=Path, help="data file (default: <command>.csv)")
        p.add_argument("--verify", action="store_const", const=True, default=None,
                       help="diff every closed-form result against the RK4 oracle")
        for key in SCHEMA:
            if key == "verify":
                continue
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, metavar=key.upper())
        if name == "phonon-dist":
            p.add_argument("--amplitudes-json", type=Path, help="also dump (a_m, b_m) as JSON")
        if name == "trajectories":
            p.add_argument("--jsonl", type=Path, help="also dump (seed, jump_time) per trajectory")
    return parser


def parse_config(argv=None) -> tuple[RunConfig, argparse.Namespace]:
    """Merge defaults, config file and flags (in that order) into a RunConfig."""
    ns = build_parser().parse_args(argv)
    raw = {k: default for k, (_, default) in SCHEMA.items()}
    raw.update(_COMMAND_DEFAULTS.get(ns.command, {}))
    if ns.config is not None:
        raw.update(read_config_file(ns.config))
    for key in SCHEMA:
        value = getattr(ns, key, None)
        if value is not None:
            raw[key] = value
    values = {}
    for key, (conv, _) in SCHEMA.items():
        if raw[key] is None:
            values[key] = None
            continue
        try:
            values[key] = conv(raw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw[key]!r} ({exc})") from exc
    try:
        params = SystemParams(**{k: values[k] for k in PARAM_KEYS})
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    settings = {k: v for k, v in values.items() if k not in PARAM_KEYS and k not in ("seed", "verify")}
    output = ns.output if ns.output is not None else Path(f"{ns.command}.csv")
    return RunConfig(ns.command, params, settings, output, values["verify"], values["seed"]), ns


def _grid(settings) -> np.ndarray:
    lo, hi, step = settings["tau_min"], settings["tau_max"], settings["tau_step"]
    if step is None or not step > 0 or hi < lo or lo < 0:
        raise ConfigError(f"bad time grid: tau_min={lo}, tau_max={hi}, tau_step={step}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _oracle_config(cfg: RunConfig, gamma=None):
    params = cfg.params
    dt = cfg.settings["dt"]
    return oracle.IntegratorConfig(
        dt, lamb_dicke.CouplingProfile(lamb_dicke.CouplingKind.LAMB_DICKE, params.eta),
        params.gamma if gamma is None else gamma,
    )


def _oracle_states(cfg: RunConfig, taus):
    return oracle.integrate_series(cfg.params, _oracle_config(cfg), taus)


# Each runner returns (csv body, max oracle deviation or None, extra files).

def _run_ld_grid(cfg: RunConfig):
    s = cfg.settings
    grid = lamb_dicke.validity_grid((s["eta_min"], s["eta_max"], s["eta_step"]), (s["m_min"], s["m_max"]))
    dev = None
    if cfg.verify:
        dev = 0.0
        for eta in grid.etas:
            for m in grid.ms:
                ref = math.exp(-eta * eta / 2) * lamb_dicke.laguerre_series(int(m), float(eta * eta))
                got = lamb_dicke.coupling_exact(float(eta), int(m))
                dev = max(dev, abs(got - ref) / max(abs(ref), 1e-300))
    return grid.to_csv(), dev, {}


def _run_carrier(cfg: RunConfig):
    times = _grid(cfg.settings)
    samples = carrier.carrier_timeseries(cfg.params, times)
    dev = None
    if cfg.verify:
        states = oracle.integrate_series(cfg.params, _oracle_config(cfg, gamma=0.0), times)
        dev = max(
            float(np.max(np.abs(carrier.evolve_ideal(cfg.params, float(t)).amplitudes - st.amplitudes)))
            for t, st in zip(times, states)
        )
    return carrier.timeseries_csv(samples), dev, {}


def _run_jump_prob(cfg: RunConfig):
    taus = _grid(cfg.settings)
    samples = conditional.jump_timeseries(cfg.params, taus)
    dev = None
    if cfg.verify:
        states = _oracle_states(cfg, taus)
        dev = max(abs(s.p_jump - (1.0 - sum_sq(st.amplitudes))) for s, st in zip(samples, states))
    return conditional.jump_csv(samples), dev, {}


def _oracle_fano(state) -> float:
    b = state.sector(1, GROUND)
    p = np.abs(b) ** 2
    return stats.distribution_from_probabilities(p).fano


def _run_fano(cfg: RunConfig):
    taus = _grid(cfg.settings)
    series = stats.fano_timeseries(cfg.params, taus)
    if series.skipped:
        log.info("skipped %d grid points without a detectable photon: %s", len(series.skipped), series.skipped)
    dev = None
    if cfg.verify and series.tau.size:
        states = _oracle_states(cfg, series.tau)
        dev = max(abs(f - _oracle_fano(st)) for f, st in zip(series.fano, states))
    return series.to_csv(), dev, {}


def _run_phonon(cfg: RunConfig, ns):
    tau = cfg.settings["tau"]
    state = conditional.post_jump_state(cfg.params, tau)
    dist = stats.phonon_distribution(state)
    s = cfg.settings
    window = (s["window_lo"], s["window_hi"])
    n_max = stats.count_interior_maxima(dist, window, s["floor"])
    print(f"fano = {dist.fano:.6f} ({stats.classify(dist.fano)}); "
          f"interior maxima in m={list(window)} above {s['floor']:g}: {n_max}")
    dev = None
    if cfg.verify:
        ref = oracle.integrate(cfg.params, _oracle_config(cfg), tau).sector(1, GROUND)
        p_ref = np.abs(ref) ** 2
        dev = float(np.max(np.abs(dist.p - p_ref / math.fsum(p_ref.tolist()))))
    extra = {}
    if getattr(ns, "amplitudes_json", None) is not None:
        extra[ns.amplitudes_json] = conditional.amplitudes(cfg.params, tau).to_json() + "\n"
    return dist.to_csv(), dev, extra


def _run_trajectories(cfg: RunConfig, ns):
    s = cfg.settings
    if s["n_checkpoints"] < 2 or not s["tau_max"] > 0:
        raise ConfigError("trajectories need n_checkpoints >= 2 and tau_max > 0")
    if s["n_traj"] < 100:
        raise ConfigError(f"n_traj must be >= 100, got {s['n_traj']}")
    checkpoints = np.linspace(s["tau_min"], s["tau_max"], s["n_checkpoints"])
    records = trajectories.run_ensemble(
        cfg.params, float(checkpoints.max()), s["n_traj"], cfg.seed, s["method"], s["dt"]
    )
    table = trajectories.ensemble_table(records, cfg.params, checkpoints)
    dev = None
    if cfg.verify:
        states = _oracle_states(cfg, checkpoints)
        dev = max(abs(p - (1.0 - sum_sq(st.amplitudes))) for p, st in zip(table.analytic, states))
    extra = {}
    if getattr(ns, "jsonl", None) is not None:
        extra[ns.jsonl] = trajectories.records_jsonl(records)
    return table.to_csv(), dev, extra


def header(cfg: RunConfig) -> str:
    lines = [f"# ioncat {__version__}", f"# command = {cfg.command}"]
    lines += [f"# {k} = {_fmt(v)}" for k, v in sorted(cfg.effective().items())]
    lines.append(f"# truncation_tail = {cfg.params.tail!r}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, complex):
        return repr(v.real) if v.imag == 0 else repr(v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "none"
    return str(v).lower() if isinstance(v, bool) else str(v)


def sidecar(cfg: RunConfig) -> str:
    body = [f"# effective configuration for: ioncat {cfg.command}"]
    body += [f"{k} = {_fmt(v)}" for k, v in sorted(cfg.effective().items()) if v is not None]
    return "\n".join(body) + "\n"


def run(cfg: RunConfig, ns=None) -> int:
    """Execute one command; returns the process exit code."""
    runners = {
        "ld-grid": lambda: _run_ld_grid(cfg),
        "carrier-cat": lambda: _run_carrier(cfg),
        "jump-prob": lambda: _run_jump_prob(cfg),
        "fano-scan": lambda: _run_fano(cfg),
        "phonon-dist": lambda: _run_phonon(cfg, ns),
        "trajectories": lambda: _run_trajectories(cfg, ns),
    }
    try:
        body, dev, extra = runners[cfg.command]()
    except (ParameterError, DegenerateStateError) as exc:
        raise ConfigError(str(exc)) from exc
    try:
        _write(cfg.output, header(cfg) + body)
        _write(cfg.output.with_name(cfg.output.name + ".config"), sidecar(cfg))
        for path, text in extra.items():
            _write(path, text)
    except OSError as exc:
        print(f"ioncat: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    if dev is not None:
        print(f"verify: max deviation from oracle = {dev:.3e} (tolerance {VERIFY_TOL:g})")
        if not dev <= VERIFY_TOL:
            print("verify: FAILED", file=sys.stderr)
            return EXIT_VERIFY
    return EXIT_OK


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg, ns = parse_config(argv)
        return run(cfg, ns)
    except ConfigError as exc:
        print(f"ioncat: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
