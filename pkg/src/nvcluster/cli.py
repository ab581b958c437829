"""Command-line front end.

Usage::

    nvcluster <command> [--config FILE] [--out PATH] [--format csv|json] [--set key=value ...]

The configuration is TOML. Every key carries its unit as a suffix
(``bz_gauss``, ``linewidth_khz``, ``azimuth_deg``); unknown keys are rejected.
Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import math
import sys
from dataclasses import replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .dynamics import (
    DecayParams, EseemAnalysis, TimeTrace, WeakBath, eseem_spectrum, fft_spectrum, simulate_hahn_echo,
    simulate_hahn_echo_ensemble, simulate_ramsey,
)
from .effective import NV0_LABELS, extract_nv0_tensor
from .hamiltonian import Electron, FieldConfig, NucleusSpec, Species, SpinSystemSpec, build_hamiltonian
from .hyperfine import DEFAULT_CONSTANTS, HyperfineScalars, PhysicalConstants, catalog_lookup, default_catalog
from .spectroscopy import (
    all_family_pairs, family_lines, merge_degenerate, odmr_electronic_lines, pair_gT_frequencies,
    synthesize_spectrum, two_tone_matrix,
)
from .spin import ConvergenceError, hermitian_eig
from .stats import OccupancyModel, contrast_ratios, occupancy_probability

COMMANDS = ("levels", "spectrum", "odmr", "pairs", "eseem", "ramsey", "extract", "stats", "twotone")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    """Invalid configuration or command line."""


DEFAULTS = {
    "constants": {},
    "field": {"bz_gauss": 486.8, "bx_gauss": 0.0, "azimuth_deg": 0.0},
    "catalog": {"d_ani_mhz": 0.5, "phi0_deg": 0.0},
    "system": {"electron": "NV_minus", "nuclei": [{"family": "A", "phi_deg": 0.0}]},
    "spectrum": {"start_mhz": 0.44, "stop_mhz": 0.54, "points": 2001, "linewidth_khz": 3.0,
                 "model": "quadratic", "drive": "physical", "manifolds": ["0_e"]},
    "odmr": {"families": ["A", "B", "C", "D"]},
    "pairs": {"phi1_deg": 0.0, "phi2_deg": 0.0, "drive": "physical"},
    "eseem": {"source": "single", "tau_max_us": 10.0, "tau_step_us": 0.01, "t2_us": 7.0,
              "envelope_power": 1.0, "output": "trace", "detrend_order": 6, "window": "hann",
              "zero_pad_factor": 64, "bath_nuclei": 4, "bath_configs": 8, "bath_seed": 0,
              "bath_min_khz": 5.0, "bath_max_khz": 30.0},
    "ramsey": {"drive_khz": 460.0, "families": ["A", "B"], "weights": [1.0, 1.0], "t2_star_us": 203.0,
               "t_max_us": 1000.0, "t_step_us": 1.0, "output": "trace", "window": "none",
               "zero_pad_factor": 16, "centers_khz": {"A": 469.79, "B": 480.27, "C": 499.29, "D": 516.58}},
    "extract": {"bz_gauss": 486.8,
                "frequencies_mhz": {"+1N-1/2": 7.828, "-1N-1/2": 1.472, "+1N+1/2": 1.782, "-1N+1/2": 7.540}},
    "stats": {"n_sites": 18, "p": 0.0107, "compat_abundance": True, "k_max": 3, "model": "quadratic"},
    "twotone": {"families": ["A", "B", "C", "D"]},
    "output": {"path": "", "format": "csv"},
}

# keys whose values are free-form tables rather than fixed schemas
OPEN_TABLES = {("constants",), ("ramsey", "centers_khz"), ("extract", "frequencies_mhz")}
NUCLEUS_KEYS = {"family", "species", "phi_deg", "a_par_mhz", "a_perp_mhz", "a_ani_mhz", "a_perp_prime_mhz",
                "quadrupole_mhz", "gamma_n_mhz_per_gauss"}


def _merge(base: dict, over: dict, path=()) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        here = path + (k,)
        if path + (k,) not in OPEN_TABLES and path not in OPEN_TABLES and k not in base:
            raise ConfigError(f"unknown config key {'.'.join(here)!r}")
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            if here in OPEN_TABLES:
                out[k] = {**out[k], **v} if k != "frequencies_mhz" else dict(v)
            else:
                out[k] = _merge(base[k], v, here)
        else:
            out[k] = v
    return out


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _apply_set(cfg: dict, assignment: str) -> dict:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, value = assignment.split("=", 1)
    parts = key.strip().split(".")
    over: dict = {}
    node = over
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = _parse_value(value.strip())
    return _merge(cfg, over)


def load_config(path: str | None = None, sets=()) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
        cfg = _merge(cfg, user)
    for s in sets:
        cfg = _apply_set(cfg, s)
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    for nuc in cfg["system"]["nuclei"]:
        if not isinstance(nuc, dict):
            raise ConfigError("system.nuclei entries must be tables")
        unknown = set(nuc) - NUCLEUS_KEYS
        if unknown:
            raise ConfigError(f"unknown nucleus key(s) {sorted(unknown)}")
    try:
        PhysicalConstants().override(**cfg["constants"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg["output"]["format"] not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# context helpers ------------------------------------------------------------

def _constants(cfg) -> PhysicalConstants:
    return DEFAULT_CONSTANTS.override(**cfg["constants"])


def _field(cfg) -> FieldConfig:
    f = cfg["field"]
    return FieldConfig(float(f["bz_gauss"]), float(f["bx_gauss"]), math.radians(float(f["azimuth_deg"])))


def _catalog(cfg):
    c = cfg["catalog"]
    return default_catalog(d_ani=float(c["d_ani_mhz"]), phi0=math.radians(float(c["phi0_deg"])))


def _nucleus(entry: dict, constants: PhysicalConstants, catalog) -> NucleusSpec:
    phi = math.radians(float(entry.get("phi_deg", 0.0)))
    gamma = entry.get("gamma_n_mhz_per_gauss")
    gamma = None if gamma is None else float(gamma)
    if "family" in entry:
        if set(entry) - {"family", "phi_deg", "gamma_n_mhz_per_gauss"}:
            raise ConfigError("a family nucleus only accepts phi_deg and gamma_n_mhz_per_gauss")
        try:
            sc = replace(catalog_lookup(entry["family"], catalog).scalars, phi=phi)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        return NucleusSpec(Species.C13, sc, gamma_n=gamma)
    try:
        species = Species(entry.get("species", "C13"))
    except ValueError:
        raise ConfigError(f"unknown species {entry.get('species')!r}") from None
    if species is Species.N14:
        a_par = float(entry.get("a_par_mhz", constants.A_par_n14_nvm))
        a_perp = float(entry.get("a_perp_mhz", constants.A_perp_n14_nvm))
        q = float(entry.get("quadrupole_mhz", constants.Q_n14_nvm))
    else:
        a_par = float(entry.get("a_par_mhz", 0.0))
        a_perp = float(entry.get("a_perp_mhz", 0.0))
        q = None
    sc = HyperfineScalars(a_par, a_perp, float(entry.get("a_ani_mhz", 0.0)), phi,
                          float(entry.get("a_perp_prime_mhz", 0.0)))
    return NucleusSpec(species, sc, quadrupole=q, gamma_n=gamma)


def _system(cfg) -> SpinSystemSpec:
    c = _constants(cfg)
    catalog = _catalog(cfg)
    try:
        electron = Electron(cfg["system"]["electron"])
    except ValueError:
        raise ConfigError(f"unknown electron {cfg['system']['electron']!r}") from None
    nuclei = tuple(_nucleus(n, c, catalog) for n in cfg["system"]["nuclei"])
    try:
        return SpinSystemSpec(electron, nuclei, _field(cfg), c,
                              include_double_quantum=any(n.get("a_perp_prime_mhz") for n in cfg["system"]["nuclei"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# commands -------------------------------------------------------------------

def _levels(cfg):
    system = _system(cfg)
    eig = hermitian_eig(build_hamiltonian(system), system.basis_labels())
    cols = ["index", "label", "energy_mhz"]
    return cols, [[i, lab, e] for i, (lab, e) in enumerate(zip(eig.labels, eig.energies))]


def _spectrum(cfg):
    s = cfg["spectrum"]
    lines = merge_degenerate(family_lines(_field(cfg), _constants(cfg), _catalog(cfg), tuple(s["manifolds"]),
                                          model=s["model"], drive=s["drive"]))
    grid = np.linspace(float(s["start_mhz"]), float(s["stop_mhz"]), int(s["points"]))
    sp = synthesize_spectrum(lines, grid, float(s["linewidth_khz"]) * 1e-3)
    return ["frequency_mhz", "signal"], [[f, y] for f, y in zip(sp.freq_grid, sp.signal)]


def _odmr(cfg):
    f = _field(cfg)
    lines = odmr_electronic_lines(cfg["odmr"]["families"], FieldConfig(f.bz, 0.0, f.field_azimuth),
                                  _constants(cfg), _catalog(cfg))
    cols = ["family", "from_label", "to_label", "frequency_mhz", "amplitude"]
    return cols, [[ln.family, ln.from_label, ln.to_label, ln.f, ln.amplitude] for ln in lines]


def _pairs(cfg):
    p = cfg["pairs"]
    rows = []
    for a, b in all_family_pairs(_catalog(cfg)):
        for ln in pair_gT_frequencies(a, b, _field(cfg), _constants(cfg), _catalog(cfg),
                                      math.radians(p["phi1_deg"]), math.radians(p["phi2_deg"]), p["drive"]):
            rows.append([a + b, ln.to_label, ln.f * 1e3, ln.f, ln.amplitude])
    return ["pair", "label", "frequency_khz", "frequency_mhz", "amplitude"], rows


def _trace_or_fft(trace: TimeTrace, block: dict, spectrum_fn):
    if block["output"] == "trace":
        return ["t_us", "signal"], [[t, y] for t, y in zip(trace.t, trace.y)]
    if block["output"] == "fft":
        sp = spectrum_fn(trace)
        return ["frequency_mhz", "signal"], [[f, y] for f, y in zip(sp.freq_grid, sp.signal)]
    raise ConfigError("output must be 'trace' or 'fft'")


def _eseem(cfg):
    e = cfg["eseem"]
    tau = np.arange(0.0, float(e["tau_max_us"]) + 0.5 * float(e["tau_step_us"]), float(e["tau_step_us"]))
    decay = DecayParams(t2_electron=float(e["t2_us"]))
    if e["source"] == "single":
        system = _system(cfg)
        trace = simulate_hahn_echo(system, tau, decay, float(e["envelope_power"]))
    elif e["source"] == "bath":
        bath = WeakBath(int(e["bath_nuclei"]), int(e["bath_configs"]),
                        (float(e["bath_min_khz"]) * 1e-3, float(e["bath_max_khz"]) * 1e-3), int(e["bath_seed"]))
        trace = simulate_hahn_echo_ensemble(bath.systems(_field(cfg), _constants(cfg)), tau, decay,
                                            float(e["envelope_power"]))
    else:
        raise ConfigError("eseem.source must be 'single' or 'bath'")
    analysis = EseemAnalysis(int(e["detrend_order"]), e["window"], int(e["zero_pad_factor"]))
    return _trace_or_fft(trace, e, lambda tr: eseem_spectrum(tr, analysis))


def _ramsey(cfg):
    r = cfg["ramsey"]
    if len(r["families"]) != len(r["weights"]):
        raise ConfigError("ramsey.families and ramsey.weights differ in length")
    try:
        comps = [(abs(float(r["centers_khz"][f]) - float(r["drive_khz"])), float(w))
                 for f, w in zip(r["families"], r["weights"])]
    except KeyError as exc:
        raise ConfigError(f"no center for family {exc}") from None
    t = np.arange(0.0, float(r["t_max_us"]) + 0.5 * float(r["t_step_us"]), float(r["t_step_us"]))
    trace = simulate_ramsey(comps, float(r["t2_star_us"]), t)
    # FFT output is reported in kHz-friendly MHz units like every other spectrum
    return _trace_or_fft(trace, r, lambda tr: fft_spectrum(tr, r["window"], int(r["zero_pad_factor"])))


def _extract(cfg):
    x = cfg["extract"]
    try:
        res = extract_nv0_tensor(x["frequencies_mhz"], float(x["bz_gauss"]), _constants(cfg))
    except KeyError as exc:
        raise ConfigError(f"extract.frequencies_mhz needs labels {list(NV0_LABELS)}: {exc}") from None
    rows = [
        ["q0_abs", res.q0_abs, ""],
        ["a0_par", res.a0_par, res.diagnostics["a0_par_formula_sign"]],
        ["a0_par_magnitude", res.a0_par_magnitude, ""],
        ["a0_perp", res.a0_perp, "radicand negative" if res.radicand_negative else ""],
        ["radicand_mhz2", res.radicand, ""],
    ]
    return ["quantity", "value_mhz", "note"], rows


def _stats(cfg):
    s = cfg["stats"]
    model = OccupancyModel(int(s["n_sites"]), float(s["p"]), bool(s["compat_abundance"]))
    rows = [["occupancy", str(k), occupancy_probability(model, k)] for k in range(int(s["k_max"]) + 1)]
    ratios = contrast_ratios(_catalog(cfg), _field(cfg), s["model"], _constants(cfg))
    rows += [["contrast_ratio", name, r] for name, r in ratios.items()]
    return ["quantity", "key", "value"], rows


def _twotone(cfg):
    fams = list(cfg["twotone"]["families"])
    m = two_tone_matrix(fams)
    return ["pump"] + fams, [[a] + [float(v) for v in row] for a, row in zip(fams, m)]


HANDLERS = {"levels": _levels, "spectrum": _spectrum, "odmr": _odmr, "pairs": _pairs, "eseem": _eseem,
            "ramsey": _ramsey, "extract": _extract, "stats": _stats, "twotone": _twotone}


# output ---------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def render(command: str, cfg: dict, cols, rows, fmt: str) -> str:
    digest = config_hash(cfg)
    if fmt == "json":
        doc = {"command": command, "version": __version__, "config_sha256": digest,
               "columns": cols, "rows": [[float(v) if isinstance(v, (float, np.floating)) else v for v in r]
                                         for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# nvcluster {__version__} {command}\n# config_sha256 {digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def run(command: str, cfg: dict, out: str | None = None, fmt: str | None = None) -> str:
    """Execute ``command`` and return the rendered table (also written to ``out``)."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    fmt = fmt or cfg["output"]["format"]
    if fmt not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    cols, rows = HANDLERS[command](cfg)
    text = render(command, cfg, cols, rows, fmt)
    out = out or cfg["output"]["path"]
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nvcluster", description="NV-center spin-cluster simulations")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="TOML configuration file")
    ap.add_argument("--out", help="output file (default: standard output)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config value by dotted path, e.g. field.bz_gauss=487")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, args.set)
        text = run(args.command, cfg, args.out, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not (args.out or cfg["output"]["path"]):
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:  # reader closed early, e.g. piped into head
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
