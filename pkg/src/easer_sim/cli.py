"""Command-line scenario runner.

Usage::

    easer-sim <scenario> [--config run.ini] [--tau F] [--theta F] [--cutoff N]
              [--seed N] [--out PATH] [--format csv|json]

The config file is INI-style (``[section]`` + ``key = value``); each key is
addressed as ``section.key`` in error messages.  Command-line flags win over
the file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import double_pass as dp
from .detection import (
    CoincidencePattern,
    DetectionConfig,
    click_pattern_probability,
    entanglement_entropy,
    monte_carlo_counts,
    project_and_renormalize,
    schmidt_coefficients,
)
from .errors import ConfigError, SimulationError
from .pdc import PdcParams, pair_distribution, singlet_term, state_analytic
from .polarization import PolarizationUnitary

SCENARIOS = ("distribution", "delay-scan", "fringe-scan", "amplify", "project", "montecarlo")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "pdc": {"tau": "0.1", "pump_phase": "0.0", "cutoff": "12", "mean_pairs": "", "tolerance": "1e-5"},
    "double_pass": {
        "tau1": "0.05",
        "tau2": "0.05",
        "theta": "0.0",
        "overlap": "1.0",
        "pump_wavelength_um": repr(dp.PUMP_WAVELENGTH_UM),
        "coherence_length_um": repr(dp.COHERENCE_LENGTH_UM),
        "cutoff": "8",
    },
    "detection": {"basis": "hv", "efficiency": "1.0"},
    "scan": {"start": "", "stop": "", "steps": "", "term": "", "order": "2"},
    "project": {"pairs": "2", "mode": "a", "outcome": "H", "rule": "unit"},
    "montecarlo": {"pulses": "1000000"},
    "output": {"path": "", "format": "csv", "seed": "0"},
}

HELP_EPILOG = """\
scenarios:
  distribution  pair-number distribution P(n) of the single-pass state
  delay-scan    term probability vs optical path delay (micrometres, not
                translation-stage position) with fringe envelope
  fringe-scan   term probability vs relative pump phase, order 2 or 4
  amplify       ideal amplification ratios and second-pass gains vs measured
  project       single-photon projection of a singlet term with Schmidt report
  montecarlo    sampled coincidence counts vs analytic probabilities

--tau sets the single-pass tau and both double-pass strengths; --cutoff sets
both truncations.
"""


@dataclass
class ScenarioConfig:
    scenario: str
    pdc: PdcParams
    double_pass: dp.DoublePassConfig
    detection: DetectionConfig
    basis: str
    grid: dict = field(default_factory=dict)
    project: dict = field(default_factory=dict)
    pulses: int = 1_000_000
    seed: int = 0
    out: Path | None = None
    fmt: str = "csv"


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser

    def raw(self, key: str) -> str:
        section, name = key.split(".")
        return self.parser.get(section, name, fallback=DEFAULTS[section][name]).strip()

    def get(self, key: str, kind, default=None):
        text = self.raw(key)
        if text == "":
            return default
        try:
            return kind(text)
        except ValueError:
            raise ConfigError(f"{key}: cannot read {text!r} as {kind.__name__}") from None


def _parse_basis(text: str) -> PolarizationUnitary:
    if text == "hv":
        return PolarizationUnitary.identity()
    if text == "diag":
        return PolarizationUnitary.diagonal()
    try:
        return PolarizationUnitary.rotation(math.radians(float(text)))
    except ValueError:
        raise ConfigError(f"detection.basis: expected 'hv', 'diag' or an angle in degrees, got {text!r}") from None


def build_config(args: argparse.Namespace) -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"--config: no such file {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"--config: {exc}") from None
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"{section}: unknown section")
        for key in parser[section]:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
    r = _Reader(parser)

    tau = args.tau if args.tau is not None else r.get("pdc.tau", float)
    cutoff = args.cutoff if args.cutoff is not None else r.get("pdc.cutoff", int)
    dp_cutoff = args.cutoff if args.cutoff is not None else r.get("double_pass.cutoff", int)
    theta = args.theta if args.theta is not None else r.get("double_pass.theta", float)
    tau1 = args.tau if args.tau is not None else r.get("double_pass.tau1", float)
    tau2 = args.tau if args.tau is not None else r.get("double_pass.tau2", float)
    mean_pairs = r.get("pdc.mean_pairs", float)

    try:
        pdc_kwargs = dict(
            pump_phase=r.get("pdc.pump_phase", float),
            cutoff=cutoff,
            tolerance=r.get("pdc.tolerance", float),
        )
        if mean_pairs is not None and args.tau is None:
            if mean_pairs < 0:
                raise ConfigError("pdc.mean_pairs: must be >= 0")
            pdc = PdcParams.from_mean_pairs(mean_pairs, **pdc_kwargs)
        else:
            pdc = PdcParams(tau=tau, **pdc_kwargs)
    except ConfigError:
        raise
    except (ValueError, SimulationError) as exc:
        raise ConfigError(f"pdc: {exc}") from None
    try:
        dpc = dp.DoublePassConfig(
            tau1=tau1,
            tau2=tau2,
            theta=theta,
            overlap=r.get("double_pass.overlap", float),
            pump_wavelength_um=r.get("double_pass.pump_wavelength_um", float),
            coherence_length_um=r.get("double_pass.coherence_length_um", float),
            cutoff=dp_cutoff,
        )
    except ValueError as exc:
        raise ConfigError(f"double_pass: {exc}") from None

    basis_text = r.raw("detection.basis") or "hv"
    basis_u = _parse_basis(basis_text)
    try:
        det = DetectionConfig(basis_a=basis_u, basis_b=basis_u, efficiency=r.get("detection.efficiency", float))
    except ValueError as exc:
        raise ConfigError(f"detection.efficiency: {exc}") from None

    grid = {
        "start": r.get("scan.start", float),
        "stop": r.get("scan.stop", float),
        "steps": r.get("scan.steps", int),
        "term": r.raw("scan.term") or None,
        "order": r.get("scan.order", int),
    }
    if grid["steps"] is not None and grid["steps"] < 2:
        raise ConfigError("scan.steps: must be >= 2")
    if grid["start"] is not None and grid["stop"] is not None and not grid["stop"] > grid["start"]:
        raise ConfigError("scan.stop: must exceed scan.start")
    if grid["order"] not in (2, 4):
        raise ConfigError("scan.order: must be 2 or 4")
    if grid["term"] is not None and grid["term"] not in dp.TERMS:
        raise ConfigError(f"scan.term: unknown term {grid['term']!r}; expected one of {dp.TERMS}")

    project = {
        "pairs": r.get("project.pairs", int),
        "mode": r.raw("project.mode"),
        "outcome": r.raw("project.outcome"),
        "rule": r.raw("project.rule"),
    }
    if project["mode"] not in ("a", "b"):
        raise ConfigError("project.mode: must be 'a' or 'b'")
    if project["outcome"] not in ("H", "V"):
        raise ConfigError("project.outcome: must be 'H' or 'V'")
    if project["rule"] not in ("unit", "bosonic"):
        raise ConfigError("project.rule: must be 'unit' or 'bosonic'")
    if project["pairs"] < 0:
        raise ConfigError("project.pairs: must be >= 0")

    pulses = r.get("montecarlo.pulses", int)
    if pulses < 0:
        raise ConfigError("montecarlo.pulses: must be >= 0")
    seed = args.seed if args.seed is not None else r.get("output.seed", int)
    fmt = args.format or r.raw("output.format") or "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format: must be csv or json, got {fmt!r}")
    out_text = args.out or r.raw("output.path")
    out = Path(out_text) if out_text else None
    if out is not None and not out.parent.exists():
        raise ConfigError(f"output.path: directory {out.parent} does not exist")

    return ScenarioConfig(
        scenario=args.scenario,
        pdc=pdc,
        double_pass=dpc,
        detection=det,
        basis=basis_text,
        grid=grid,
        project=project,
        pulses=pulses,
        seed=seed,
        out=out,
        fmt=fmt,
    )


def _grid(cfg: ScenarioConfig, start: float, stop: float, steps: int) -> np.ndarray:
    g = cfg.grid
    return np.linspace(
        g["start"] if g["start"] is not None else start,
        g["stop"] if g["stop"] is not None else stop,
        g["steps"] if g["steps"] is not None else steps,
    )


def _basis_arg(cfg: ScenarioConfig):
    return cfg.detection.basis_a


# Each scenario returns (description, columns, rows).

def _distribution(cfg: ScenarioConfig):
    dist = pair_distribution(state_analytic(cfg.pdc))
    while len(dist) > 1 and dist[-1][1] == 0:
        dist.pop()
    desc = f"photon-pair number distribution; n in pairs, P per pulse; tau={cfg.pdc.tau!r}"
    return desc, ["n", "P"], [[n, p] for n, p in dist]


def _delay_scan(cfg: ScenarioConfig):
    dpc = cfg.double_pass
    term = cfg.grid["term"] or "|2,0;0,2>"
    half = 5 * dpc.coherence_length_um
    delays = _grid(cfg, -half, half, 1001)
    scan = dp.delay_scan(dpc, delays, term, basis=_basis_arg(cfg))
    desc = (
        f"term {term} vs optical path delay; delay in micrometres, rates are probabilities "
        f"per pulse; basis={cfg.basis}; envelope max/min over pump phase"
    )
    rows = [list(r) for r in zip(scan.x, scan.rate_max, scan.rate_min, scan.value)]
    return desc, ["delay_um", "rate_max", "rate_min", "rate_at_theta"], rows


def _fringe_scan(cfg: ScenarioConfig):
    dpc = cfg.double_pass
    if dpc.overlap != 1.0:
        raise ConfigError("double_pass.overlap: fringe-scan needs overlap = 1")
    order = cfg.grid["order"]
    thetas = _grid(cfg, 0.0, 2 * math.pi, 201)
    scan = dp.fringe_scan(dpc, thetas, order, term=cfg.grid["term"], basis=_basis_arg(cfg))
    desc = (
        f"{order}-photon term {scan.term} vs relative pump phase; theta in radians, "
        f"value is probability per pulse; basis={cfg.basis}"
    )
    return desc, ["theta_rad", "value"], [[t, v] for t, v in zip(scan.x, scan.value)]


def _amplify(cfg: ScenarioConfig):
    dpc = cfg.double_pass
    if dpc.tau1 != dpc.tau2:
        raise ConfigError("double_pass.tau2: amplify needs tau1 = tau2")
    ratios = dp.amplification_ratios(dpc, _basis_arg(cfg))
    g2, g4 = dp.second_pass_gain(dp.DoublePassConfig(tau1=dpc.tau1, tau2=dpc.tau2, cutoff=dpc.cutoff))
    rows = []
    for term in dp.TERMS:
        ref, err = dp.MEASURED_RATIOS.get(term, (math.nan, math.nan))
        rows.append([term, ratios[term], ref, err])
    for order, gain in ((2, g2), (4, g4)):
        ref, err = dp.MEASURED_SECOND_PASS_GAIN[order]
        rows.append([f"second_pass_{order}fold", gain, ref, err])
    desc = (
        "stimulated/distinguishable amplification per term and second-pass gains; "
        f"dimensionless; basis={cfg.basis}; measured columns are reference values (nan: none)"
    )
    return desc, ["term", "ideal_ratio", "measured_ref", "measured_err"], rows


def _project(cfg: ScenarioConfig):
    p = cfg.project
    state = singlet_term(p["pairs"])
    prob, rem = project_and_renormalize(state, p["mode"], p["outcome"], _basis_arg(cfg), rule=p["rule"])
    rows = [[ket.label(), amp.real, amp.imag] for ket, amp in sorted(rem.items())]
    rows.append(["probability", prob, 0.0])
    for i, s in enumerate(schmidt_coefficients(rem)):
        rows.append([f"schmidt_{i}", s, 0.0])
    rows.append(["entropy_bits", entanglement_entropy(rem), 0.0])
    desc = (
        f"remainder after detecting {p['outcome']} in mode {p['mode']} on the {p['pairs']}-pair singlet "
        f"(rule={p['rule']}); amplitudes dimensionless; schmidt rows across the a|b cut"
    )
    return desc, ["component", "amplitude_re", "amplitude_im"], rows


def montecarlo_patterns(basis_diag: PolarizationUnitary, efficiency: float):
    """The three post-selection set-ups: (name, DetectionConfig, CoincidencePattern)."""
    hv = PolarizationUnitary.identity()
    return [
        (
            "2fold_|1,0;0,1>_diag",
            DetectionConfig(basis_a=basis_diag, basis_b=basis_diag, efficiency=efficiency),
            CoincidencePattern(required={"aH", "bV"}),
        ),
        (
            "4fold_|1,1;1,1>_hv",
            DetectionConfig(basis_a=hv, basis_b=hv, efficiency=efficiency),
            CoincidencePattern(required={"aH", "aV", "bH", "bV"}),
        ),
        (
            "4fold_|2,0;0,2>_diag",
            DetectionConfig(
                basis_a=basis_diag, basis_b=basis_diag, splitter_modes={"aH", "bV"}, efficiency=efficiency
            ),
            CoincidencePattern(required={"aH1", "aH2", "bV1", "bV2"}),
        ),
    ]


def _montecarlo(cfg: ScenarioConfig):
    state = state_analytic(cfg.pdc)
    analytic = {
        name: click_pattern_probability(state, det, pattern)
        for name, det, pattern in montecarlo_patterns(PolarizationUnitary.diagonal(), cfg.detection.efficiency)
    }
    counts = monte_carlo_counts(analytic, cfg.pulses, cfg.seed)
    rows = [[name, analytic[name], counts[name], cfg.pulses] for name in analytic]
    desc = (
        f"sampled click counts vs analytic probability per pulse; single pass tau={cfg.pdc.tau!r}, "
        f"seed={cfg.seed}, efficiency={cfg.detection.efficiency!r}"
    )
    return desc, ["pattern", "analytic_p", "sampled_count", "pulses"], rows


RUNNERS = {
    "distribution": _distribution,
    "delay-scan": _delay_scan,
    "fringe-scan": _fringe_scan,
    "amplify": _amplify,
    "project": _project,
    "montecarlo": _montecarlo,
}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render(scenario: str, desc: str, columns: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        payload = {
            "scenario": scenario,
            "description": desc,
            "columns": columns,
            "rows": [[_json_value(v) for v in row] for row in rows],
        }
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# {scenario}: {desc}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) else v
    return v


def run_scenario(cfg: ScenarioConfig) -> str:
    """Run the configured scenario, write its output, and return the rendered text."""
    desc, columns, rows = RUNNERS[cfg.scenario](cfg)
    text = render(cfg.scenario, desc, columns, rows, cfg.fmt)
    if cfg.out is not None:
        with open(cfg.out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="easer-sim",
        description="Stimulated emission of polarization-entangled photon pairs: scenario runner.",
        epilog=HELP_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", help="INI config file")
    p.add_argument("--tau", type=float, help="interaction parameter (single pass and both passes)")
    p.add_argument("--theta", type=float, help="relative pump phase between passes, radians")
    p.add_argument("--cutoff", type=int, help="Fock truncation in photon pairs")
    p.add_argument("--seed", type=int, help="Monte-Carlo seed")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    return p


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = build_config(args)
        text = run_scenario(cfg)
    except ConfigError as exc:
        print(f"easer-sim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, ValueError, ArithmeticError) as exc:
        print(f"easer-sim {args.scenario}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg.out is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
