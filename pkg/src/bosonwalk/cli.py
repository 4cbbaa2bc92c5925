"""Command-line entry point.

Each subcommand reads one JSON config document::

    bosonwalk fig1 config.json --out profile.csv
    bosonwalk sample config.json --seed 3 --format json
    bosonwalk grape config.json
    bosonwalk scan config.json
    bosonwalk closure config.json

Exit codes: 0 success, 1 usage or parse error, 2 optimiser did not converge,
3 budget ran out (partial results written).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .control import (
    ControlWaveform,
    GrapeConfig,
    channel_names,
    grape_optimize,
    infidelity_scan,
    make_model,
    propagate,
    target_seed,
)
from .controllability import (
    identity_report,
    lie_closure_dimension,
    sample_generators,
    verify_appendix_identities,
)
from .lattice import UniformRing, band_truncate, ring_profile, ring_propagator
from .linalg import check_unitary, haar_unitary
from .permanent import FockState, fiducial_input
from .sampling import exact_distribution, sample_counts, sample, truncated_distribution

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_BUDGET = 0, 1, 2, 3
COMMANDS = ("fig1", "sample", "grape", "scan", "closure")
COMMON_KEYS = {"subcommand", "seed", "out", "format"}


class ConfigError(ValueError):
    pass


# -- config handling ------------------------------------------------------------

def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")
    return d


def load_config(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def config_hash(cfg):
    """Short SHA-256 of the config, ignoring where and how output is written."""
    core = {k: v for k, v in cfg.items() if k not in ("out", "format")}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def matrix_to_json(a):
    a = np.asarray(a, dtype=complex)
    return {"real": a.real.tolist(), "imag": a.imag.tolist()}


def matrix_from_json(obj, where="matrix"):
    _check_keys(obj, {"real", "imag", "kind"}, where)
    try:
        re = np.asarray(obj["real"], dtype=float)
        im = np.asarray(obj.get("imag", np.zeros_like(re)), dtype=float)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: needs numeric 'real' (and optional 'imag') arrays") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise ConfigError(f"{where}: 'real' and 'imag' must be equal-shape 2-D arrays")
    return re + 1j * im


# -- output helpers -----------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.16e}"
    return str(x)


def write_csv(path, header, rows, cfg, extra=""):
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash(cfg)} seed={cfg.get('seed', 0)}{extra}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def write_json(path, payload, cfg):
    doc = {"config_hash": config_hash(cfg), "seed": cfg.get("seed", 0), **_jsonable(payload)}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _sibling(path, suffix, ext=".csv"):
    p = Path(path)
    return p.with_name(p.stem + suffix + ext)


def _out_path(cfg, command):
    fmt = cfg.get("format", "csv")
    return Path(cfg.get("out") or f"{command}.{fmt}")


# -- fig1 ------------------------------------------------------------------------------

def cmd_fig1(cfg):
    """Single-particle profile on a uniform ring plus the band widths after truncation."""
    _check_keys(cfg, COMMON_KEYS | {"M", "J", "T", "epsilons", "norm"}, "fig1 config")
    M, J, T = int(cfg.get("M", 500)), float(cfg.get("J", 1.0)), float(cfg.get("T", 80.0))
    if T < 0:
        raise ConfigError("T must be non-negative")
    eps = [float(e) for e in cfg.get("epsilons", [1e-2, 1e-3, 1e-4])]
    norm = cfg.get("norm", "max")
    model = UniformRing(M, J)
    t = T / J
    offsets, prob = ring_profile(model, t)
    lam = ring_propagator(model, t)
    bands = []
    for e in eps:
        _, spec = band_truncate(lam, e, norm=norm)
        bands.append({"epsilon": e, "band": spec.band, "lower": spec.lower, "upper": spec.upper,
                      "cyclic": spec.cyclic, "dropped": spec.dropped})
    out = _out_path(cfg, "fig1")
    if cfg.get("format", "csv") == "json":
        write_json(out, {"M": M, "J": J, "T": T,
                         "profile": {"offset": offsets, "probability": prob}, "bands": bands}, cfg)
    else:
        write_csv(out, ["offset", "probability"], zip(offsets, prob), cfg)
        cols = ["epsilon", "band", "lower", "upper", "cyclic", "dropped"]
        write_csv(_sibling(out, "_bands"), cols, ([b[c] for c in cols] for b in bands), cfg)
    return EXIT_OK


# -- sample ------------------------------------------------------------------------------

def read_waveform_csv(path):
    """Read a waveform written by :func:`write_waveform_csv`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    dt = None
    if lines and lines[0].startswith("#"):
        for tok in lines[0][1:].split():
            if tok.startswith("dt="):
                dt = float(tok[3:])
        lines = lines[1:]
    if dt is None:
        raise ConfigError(f"{path}: waveform CSV lacks a dt= entry in its comment line")
    rows = list(csv.reader(lines))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "step":
        raise ConfigError(f"{path}: waveform CSV must start with a 'step' column")
    values = np.array([[float(x) for x in r[1:]] for r in body]).T
    return ControlWaveform.from_array(header[1:], values, dt)


def write_waveform_csv(path, wf, cfg):
    arr = wf.as_array()
    rows = ([k + 1, *arr[:, k]] for k in range(wf.K))
    write_csv(path, ["step", *wf.names], rows, cfg, extra=f" dt={wf.dt:.16e}")


MODEL_PARAM_KEYS = {"spinor": {"Omega0", "eta", "V0", "shift_per_radian"},
                    "microscope": {"h0", "hx_bounds", "hz_bounds"}}


def _family_model(family, dim, params, where):
    if family not in MODEL_PARAM_KEYS:
        raise ConfigError(f"{where}: unknown family {family!r}; use 'spinor' or 'microscope'")
    _check_keys(params, MODEL_PARAM_KEYS[family], f"{where} model")
    try:
        return make_model(family, int(dim), **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_transition_matrix(spec, seed):
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind == "ring":
        _check_keys(spec, {"kind", "M", "J", "t"}, "model")
        return ring_propagator(UniformRing(int(spec["M"]), float(spec.get("J", 1.0))), float(spec.get("t", 0.0)))
    if kind == "beamsplitter":
        _check_keys(spec, {"kind"}, "model")
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    if kind == "haar":
        _check_keys(spec, {"kind", "M"}, "model")
        return haar_unitary(int(spec["M"]), np.random.default_rng(seed))
    if kind == "matrix":
        return check_unitary(matrix_from_json(spec, "model"), tol=1e-9, name="model matrix")
    if kind == "waveform":
        _check_keys(spec, {"kind", "family", "dim", "params", "waveform"}, "model")
        model = _family_model(spec.get("family"), spec.get("dim", 0), spec.get("params", {}), "model")
        return propagate(model, read_waveform_csv(spec["waveform"]))
    raise ConfigError(f"model.kind must be one of ring, beamsplitter, haar, matrix, waveform; got {kind!r}")


def cmd_sample(cfg):
    """Output distribution, and optionally samples, for one input Fock state."""
    _check_keys(cfg, COMMON_KEYS | {"model", "n_in", "N", "k", "epsilon", "norm"}, "sample config")
    if "model" not in cfg:
        raise ConfigError("sample config needs a 'model' object")
    seed = int(cfg.get("seed", 0))
    rng = np.random.default_rng(seed)
    lam = build_transition_matrix(cfg["model"], rng)
    M = lam.shape[0]
    if "n_in" in cfg:
        n_in = FockState(cfg["n_in"])
    else:
        n_in = fiducial_input(M, int(cfg.get("N", min(M, 2))))
    if n_in.M != M:
        raise ConfigError(f"n_in has {n_in.M} modes, transition matrix has {M}")
    k = int(cfg.get("k", 0))
    if k < 0:
        raise ConfigError("k must be non-negative")
    if "epsilon" in cfg:
        lam_p, _ = band_truncate(lam, float(cfg["epsilon"]), norm=cfg.get("norm", "max"))
        dist = truncated_distribution(lam_p, n_in)
    else:
        dist = exact_distribution(lam, n_in)
    labels = [s.label() for s in dist.states]
    out = _out_path(cfg, "sample")
    if cfg.get("format", "csv") == "json":
        payload = {"M": M, "N": n_in.N, "n_in": list(n_in), "mass": dist.mass,
                   "states": labels, "probabilities": dist.probabilities}
        if k:
            payload["samples"] = [s.label() for s in sample(dist, k, rng)]
        write_json(out, payload, cfg)
    elif k:
        counts = sample_counts(dist, k, rng)
        write_csv(out, ["state", "probability", "count"], zip(labels, dist.probabilities, counts), cfg)
    else:
        write_csv(out, ["state", "probability"], zip(labels, dist.probabilities), cfg)
    return EXIT_OK


# -- grape -------------------------------------------------------------------------------

GRAPE_FIELDS = set(GrapeConfig.__dataclass_fields__)


def _grape_config(opts, seed):
    _check_keys(opts, GRAPE_FIELDS, "optimizer")
    opts = dict(opts)
    opts.setdefault("seed", seed)
    try:
        return GrapeConfig(**opts)
    except ValueError as exc:
        raise ConfigError(f"optimizer: {exc}") from exc


def _target(spec, family_dim, seed):
    spec = spec or {"kind": "haar", "index": 0}
    kind = spec.get("kind")
    if kind == "haar":
        _check_keys(spec, {"kind", "index"}, "target")
        return haar_unitary(family_dim, np.random.default_rng(target_seed(seed, family_dim, int(spec.get("index", 0)))))
    if kind == "matrix":
        return matrix_from_json(spec, "target")
    raise ConfigError(f"target.kind must be 'haar' or 'matrix', got {kind!r}")


def cmd_grape(cfg):
    """Optimise one waveform; writes the result JSON and a waveform CSV."""
    _check_keys(cfg, COMMON_KEYS | {"family", "dim", "params", "target", "optimizer", "resume"}, "grape config")
    seed = int(cfg.get("seed", 0))
    model = _family_model(cfg.get("family"), cfg.get("dim", 0), cfg.get("params", {}), "grape")
    config = _grape_config(cfg.get("optimizer", {}), seed)
    target = _target(cfg.get("target"), model.dim, seed)
    initial = read_waveform_csv(cfg["resume"]) if cfg.get("resume") else None
    if initial is not None and initial.names != channel_names(model):
        raise ConfigError(f"resume waveform channels {initial.names} do not match the model")
    res = grape_optimize(model, target, config, initial=initial)
    out = _out_path(cfg, "grape")
    json_path = out if out.suffix == ".json" else out.with_suffix(".json")
    wf_path = _sibling(json_path, "_waveform")
    write_json(json_path, {
        "family": cfg["family"], "dim": model.dim, "converged": res.converged, "reason": res.reason,
        "iterations": res.iterations, "infidelity": res.infidelity, "dt": res.waveform.dt,
        "steps": res.waveform.K, "fidelity_trace": res.fidelity_trace,
        "unitary": matrix_to_json(res.unitary), "waveform_csv": wf_path.name,
    }, cfg)
    write_waveform_csv(wf_path, res.waveform, cfg)
    if not res.converged:
        print(f"grape: stopped ({res.reason}) at infidelity {res.infidelity:.3e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# -- scan / closure ----------------------------------------------------------------------

def cmd_scan(cfg):
    """Final GRAPE infidelity against Haar targets, per dimension."""
    _check_keys(cfg, COMMON_KEYS | {"family", "dims", "targets_per_dim", "params", "optimizer", "budget"},
                "scan config")
    seed = int(cfg.get("seed", 0))
    family = cfg.get("family")
    dims = [int(d) for d in cfg.get("dims", [])]
    if not dims:
        raise ConfigError("scan needs a non-empty 'dims' list")
    params = cfg.get("params", {})
    for d in dims:
        _family_model(family, d, params, "scan")
    config = _grape_config(cfg.get("optimizer", {}), seed)
    runs, summary, complete = infidelity_scan(
        family, dims, int(cfg.get("targets_per_dim", 1)), config, seed=seed,
        model_params=params, budget=cfg.get("budget"))
    out = _out_path(cfg, "scan")
    if cfg.get("format", "csv") == "json":
        write_json(out, {"family": family, "complete": complete, "runs": runs, "summary": summary}, cfg)
    else:
        cols = ["dim", "target", "infidelity", "iterations", "converged"]
        write_csv(out, cols, ([r[c] for c in cols] for r in runs), cfg)
        scols = ["dim", "targets", "mean", "median", "std", "min", "max"]
        write_csv(_sibling(out, "_summary"), scols, ([s[c] for c in scols] for s in summary), cfg)
    if not complete:
        print(f"scan: budget of {cfg.get('budget')} s exhausted, results are partial", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_closure(cfg):
    """Lie-closure dimension of a model's control Hamiltonians, plus identity checks."""
    _check_keys(cfg, COMMON_KEYS | {"family", "M", "params", "max_dim", "identities"}, "closure config")
    family = cfg.get("family")
    M = int(cfg.get("M", 0))
    dim = 2 * M if family == "spinor" else M
    model = _family_model(family, dim, cfg.get("params", {}), "closure")
    gens = sample_generators(model)
    res = lie_closure_dimension(gens, max_dim=cfg.get("max_dim"))
    d = model.dim
    report = {"family": family, "M": M, "d": d, "generators": len(gens), "dimension": res.dimension,
              "saturated": res.saturated, "contains_identity": res.contains_identity,
              "growth": res.growth}
    checks = []
    if cfg.get("identities", family == "spinor"):
        checks = verify_appendix_identities(M)
        report["identities"] = identity_report(checks)
    out = _out_path(cfg, "closure")
    if cfg.get("format", "csv") == "json":
        write_json(out, report, cfg)
    else:
        cols = ["family", "M", "d", "generators", "dimension", "saturated", "contains_identity"]
        write_csv(out, cols, [[report[c] for c in cols]], cfg)
        if checks:
            write_csv(_sibling(out, "_identities"), ["name", "residual", "passed"],
                      ([c.name, c.residual, c.passed] for c in checks), cfg)
    if not res.saturated and res.dimension >= min(cfg.get("max_dim") or d * d, d * d):
        print(f"closure: max_dim={cfg.get('max_dim')} reached before saturation", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


HANDLERS = {"fig1": cmd_fig1, "sample": cmd_sample, "grape": cmd_grape, "scan": cmd_scan,
            "closure": cmd_closure}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser():
    p = _Parser(prog="bosonwalk", description="Boson sampling with 1D quantum walkers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", help="path to the JSON config document")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="override the output path")
    p.add_argument("--format", choices=("csv", "json"), help="override the output format")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        for key in ("seed", "out", "format"):
            val = getattr(args, key)
            if val is not None:
                cfg[key] = val
        if cfg.get("subcommand", args.command) != args.command:
            raise ConfigError(f"config is for {cfg['subcommand']!r}, not {args.command!r}")
        if cfg.get("format", "csv") not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")
        return HANDLERS[args.command](cfg)
    except (ConfigError, OSError) as exc:
        print(f"bosonwalk {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError, KeyError) as exc:
        # library guards (basis size, bounds, unitarity, ...) land here
        print(f"bosonwalk {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
