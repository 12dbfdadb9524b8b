"""Batch experiment driver.

Reads an INI config, runs one command, writes artifacts into the output
directory.  Commands: fit (build + save a model), sample (draw from a model),
w1 (distance between two sample files), analyze-rank (primary-mapping
covariance rank), analyze-fourier (output Fourier spectrum), check
(feasibility report).

Exit codes: 0 the command ran (an infeasible verdict still exits 0), 1 the
config or inputs failed validation, 2 runtime failure.  Validation collects
every problem, not just the first, each tagged with its dotted key path.
Every artifact embeds the sha256 of the config file bytes.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    check_feasibility,
    circuit_output_function,
    fourier_coefficients,
    primary_covariance,
    random_encoding,
)
from .circuits import SpectralSummary
from .errors import ValidationError
from .families import TARGET_FAMILIES
from .generators import (
    PREP_MODES,
    build_dense_encoder,
    build_product_encoder,
    build_simplex_encoder,
    load_model,
    save_model,
)
from .metrics import w1_1d, w1_exact, w1_sliced, MetricReport, W1_EXACT_CAP
from .reuploading import FLIPPED_Z, FitConfig, build_reuploading
from .rng import keyed_generator
from .samplers import (
    ShotConfig,
    _atomic_write,
    load_samples,
    sample_exact,
    sample_with_shots,
    save_samples,
)
from .target_maps import load_grid_density

COMMANDS = ("fit", "sample", "w1", "analyze-rank", "analyze-fourier", "check")

ENCODER_KINDS = ("product", "dense", "simplex")
W1_METHODS = ("auto", "exact", "sliced", "1d")


class ConfigError(ValidationError):
    """Validation failure carrying the full list of problems."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# ---------------------------------------------------------------------------
# schema

# value kinds: int, uint, float, floats (comma list), str, choice:<options>
_FAMILY_PARAMS = {
    "uniform1d": {},
    "bimodal1d": {"centers": "floats", "widths": "floats", "mix": "floats"},
    "step1d": {"split": "float", "low": "float", "high": "float"},
    "gaussian_nd": {"dims": "int", "rho": "float", "radius": "float"},
    "gaussian2d": {"rho": "float", "radius": "float"},
    "product_gaussians2d": {"sigmas": "floats"},
    "dirichlet": {"alphas": "floats"},
    "laplace1d": {"rate": "float", "k": "int", "k0": "int"},
}

_SCHEMA = {
    "run": {"seed": "uint", "out_dir": "str"},
    "target": {"family": f"choice:{','.join(sorted(TARGET_FAMILIES))}",
               "file": "str", "resolution": "int"},
    "encoder": {"kind": f"choice:{','.join(ENCODER_KINDS)}", "layers": "int",
                "prep": f"choice:{','.join(PREP_MODES)}"},
    "fit": {"grid_points_per_dim": "int", "max_iters": "int", "step_size": "float",
            "gradient_mode": "choice:central,parameter_shift",
            "tolerance": "float", "restarts": "int"},
    "sample": {"n": "int", "shots": "int", "model_file": "str"},
    "w1": {"a": "str", "b": "str",
           "method": f"choice:{','.join(W1_METHODS)}", "n_projections": "int"},
    "rank": {"model_file": "str", "n_qubits": "int", "data_dim": "int",
             "n_gates": "int", "n_samples": "int"},
    "fourier": {"model_file": "str", "layers": "int", "dims": "int",
                "cutoff": "int", "points_per_dim": "int"},
    "check": {"n_qubits": "int", "output_dim": "int", "epsilon": "float",
              "spectra": "str"},
}


def _parse_value(kind: str, raw: str, path: str, problems: list):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "uint":
            v = int(raw)
            if v < 0:
                problems.append(f"{path}: must be >= 0, got {v}")
                return None
            return v
        if kind == "float":
            return float(raw)
        if kind == "floats":
            return tuple(float(p) for p in raw.split(",") if p.strip() != "")
        if kind.startswith("choice:"):
            options = kind.split(":", 1)[1].split(",")
            if raw not in options:
                problems.append(
                    f"{path}: {raw!r} is not one of {{{', '.join(options)}}}"
                )
                return None
            return raw
        return raw  # str
    except ValueError:
        problems.append(f"{path}: cannot parse {raw!r} as {kind}")
        return None


@dataclass
class ExperimentConfig:
    path: str
    sha256: str
    sections: dict = field(default_factory=dict)

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    @property
    def seed(self) -> int:
        return self.sections["run"]["seed"]

    @property
    def out_dir(self) -> str:
        return self.sections.get("run", {}).get("out_dir", ".")


def parse_config(path: str) -> ExperimentConfig:
    """Parse and validate an INI config; collects every problem before failing."""
    if not os.path.isfile(path):
        raise ConfigError([f"config file not found: {path}"])
    with open(path, "rb") as fh:
        raw_bytes = fh.read()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(raw_bytes.decode("utf-8"))
    except (UnicodeDecodeError, configparser.Error) as err:
        raise ConfigError([f"config parse failure: {err}"]) from err

    problems: list[str] = []
    sections: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            problems.append(
                f"{section}: unknown section (known: {', '.join(sorted(_SCHEMA))})"
            )
            continue
        schema = dict(_SCHEMA[section])
        if section == "target" and parser.has_option("target", "family"):
            fam = parser.get("target", "family").strip()
            schema.update(_FAMILY_PARAMS.get(fam, {}))
        parsed = {}
        for key, raw in parser.items(section):
            if key not in schema:
                problems.append(
                    f"{section}.{key}: unknown key (known: {', '.join(sorted(schema))})"
                )
                continue
            value = _parse_value(schema[key], raw, f"{section}.{key}", problems)
            if value is not None:
                parsed[key] = value
        sections[section] = parsed

    if "run" not in sections:
        problems.append("run: section is required")
    elif "seed" not in sections["run"]:
        problems.append("run.seed: required key is missing")

    if "target" in sections:
        t = sections["target"]
        if ("family" in t) == ("file" in t):
            problems.append("target: exactly one of `family` or `file` is required")
        if "file" in t and not os.path.isfile(t["file"] + ".json"):
            problems.append(f"target.file: density file {t['file']}.json not found")
    if "sample" in sections and "model_file" in sections["sample"]:
        if not os.path.isfile(sections["sample"]["model_file"]):
            problems.append(
                f"sample.model_file: {sections['sample']['model_file']} not found"
            )
    if "check" in sections and "spectra" in sections["check"]:
        _parse_spectra(sections["check"]["spectra"], problems)

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(path=path, sha256=hashlib.sha256(raw_bytes).hexdigest(),
                            sections=sections)


def _parse_spectra(raw: str, problems: list) -> list[SpectralSummary]:
    out = []
    for i, part in enumerate(p for p in raw.split(";") if p.strip()):
        bits = part.split(",")
        try:
            lo, hi = (float(b) for b in bits)
        except ValueError:
            problems.append(
                f"check.spectra[{i}]: expected `lambda_min,lambda_max`, got {part.strip()!r}"
            )
            continue
        if lo > hi:
            problems.append(f"check.spectra[{i}]: lambda_min {lo} exceeds lambda_max {hi}")
            continue
        out.append(SpectralSummary(lambda_min=lo, lambda_max=hi,
                                   spectral_norm=max(abs(lo), abs(hi)),
                                   capital_lambda=-lo * hi))
    return out


def _require(cfg: ExperimentConfig, requirements: dict[str, tuple[str, ...]]):
    problems = []
    for section, keys in requirements.items():
        if section not in cfg.sections:
            problems.append(f"{section}: section is required for this command")
            continue
        for key in keys:
            if key not in cfg.sections[section]:
                problems.append(f"{section}.{key}: required key is missing")
    if problems:
        raise ConfigError(problems)


# ---------------------------------------------------------------------------
# command implementations


def _build_target(cfg: ExperimentConfig):
    t = cfg.sections["target"]
    if "file" in t:
        return load_grid_density(t["file"])
    family = t["family"]
    kwargs = {k: v for k, v in t.items() if k not in ("family", "file")}
    if "resolution" in t:
        kwargs["resolution"] = t["resolution"]
    if family == "gaussian_nd" and "dims" in kwargs:
        kwargs["dims"] = int(kwargs["dims"])
    return TARGET_FAMILIES[family](**kwargs)


def _fit_config(cfg: ExperimentConfig, density) -> FitConfig | None:
    if "fit" not in cfg.sections:
        return None
    from .generators import default_fit_config

    overrides = dict(cfg.sections["fit"])
    return default_fit_config(density.dims, seed=cfg.seed, **overrides)


def _build_model(cfg: ExperimentConfig):
    _require(cfg, {"encoder": ("kind",), "target": ()})
    density = _build_target(cfg)
    kind = cfg.get("encoder", "kind")
    prep = cfg.get("encoder", "prep", "exact_injection")
    if kind == "product":
        layers = cfg.get("encoder", "layers", 4)
        return build_product_encoder(density, layers,
                                     fit_cfg=_fit_config(cfg, density),
                                     seed=cfg.seed)
    if kind == "dense":
        return build_dense_encoder(density, prep_mode=prep)
    return build_simplex_encoder(density, prep_mode=prep)


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_fit(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    model = _build_model(cfg)
    path = os.path.join(out_dir, "model.json")
    save_model(model, path, extra_meta={"config_sha256": cfg.sha256})
    return [path]


def cmd_sample(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    _require(cfg, {"sample": ("n",)})
    if cfg.has("sample", "model_file"):
        model = load_model(cfg.get("sample", "model_file"))
    else:
        model = _build_model(cfg)
    n = cfg.get("sample", "n")
    shots = cfg.get("sample", "shots", 0)
    if shots < 0:
        raise ConfigError(["sample.shots: must be >= 0"])
    if shots == 0:
        samples = sample_exact(model, n, cfg.seed)
    else:
        samples = sample_with_shots(model, n, ShotConfig(shots), cfg.seed)
    path = os.path.join(out_dir, "samples.csv")
    save_samples(samples, path, extra_meta={"config_sha256": cfg.sha256})
    return [path, path + ".meta.json"]


def cmd_w1(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    _require(cfg, {"w1": ("a", "b")})
    a = load_samples(cfg.get("w1", "a")).values
    b = load_samples(cfg.get("w1", "b")).values
    method = cfg.get("w1", "method", "auto")
    n_proj = cfg.get("w1", "n_projections", 256)
    if method == "auto":
        if a.shape[1] == 1:
            method = "1d"
        elif a.shape[0] == b.shape[0] and a.shape[0] <= W1_EXACT_CAP:
            method = "exact"
        else:
            method = "sliced"
    params = {}
    if method == "1d":
        value = w1_1d(a[:, 0], b[:, 0])
    elif method == "exact":
        value = w1_exact(a, b)
    else:
        value = w1_sliced(a, b, n_projections=n_proj, seed=cfg.seed)
        params = {"n_projections": n_proj, "seed": cfg.seed}
    report = MetricReport(metric=f"w1_{method}", value=value,
                          n_a=a.shape[0], n_b=b.shape[0], params=params)
    payload = report.to_dict()
    payload["config_sha256"] = cfg.sha256
    payload["inputs"] = {"a": cfg.get("w1", "a"), "b": cfg.get("w1", "b")}
    path = os.path.join(out_dir, "w1.json")
    _write_json(path, payload)
    return [path]


def cmd_analyze_rank(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    _require(cfg, {"rank": ()})
    if cfg.has("rank", "model_file"):
        model = load_model(cfg.get("rank", "model_file"))
        if model.circuit is None:
            raise ConfigError(["rank.model_file: model has no circuit to analyze"])
        circuit, weights = model.circuit, model.weights
    else:
        missing = [k for k in ("n_qubits", "data_dim", "n_gates")
                   if not cfg.has("rank", k)]
        if missing:
            raise ConfigError([f"rank.{k}: required key is missing (no model_file)"
                               for k in missing])
        circuit, weights = random_encoding(
            cfg.get("rank", "n_qubits"), cfg.get("rank", "data_dim"),
            cfg.get("rank", "n_gates"), seed=cfg.seed,
        )
    report = primary_covariance(circuit, weights,
                                n_samples=cfg.get("rank", "n_samples", 4096),
                                seed=cfg.seed)
    payload = report.to_dict()
    payload["config_sha256"] = cfg.sha256
    path = os.path.join(out_dir, "rank.json")
    _write_json(path, payload)
    return [path]


def cmd_analyze_fourier(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    _require(cfg, {"fourier": ()})
    if cfg.has("fourier", "model_file"):
        model = load_model(cfg.get("fourier", "model_file"))
        if model.circuit is None:
            raise ConfigError(["fourier.model_file: model has no circuit to analyze"])
        circuit, weights = model.circuit, model.weights
        obs = model.observables[0]
        dims = circuit.data_dim
        layers = cfg.get("fourier", "layers", 3)
    else:
        layers = cfg.get("fourier", "layers", 3)
        dims = cfg.get("fourier", "dims", 1)
        rc = build_reuploading(dims, layers)
        rng = keyed_generator(cfg.seed, 5)
        weights = rng.uniform(-math.pi, math.pi, size=rc.n_weights)
        weights[list(rc.data_weight_indices())] = 1.0  # integer frequencies
        circuit, obs = rc.circuit, FLIPPED_Z
    cutoff = cfg.get("fourier", "cutoff", layers + 2)
    spectrum = fourier_coefficients(
        circuit_output_function(circuit, weights, obs), dims, cutoff,
        points_per_dim=cfg.get("fourier", "points_per_dim"),
    )
    path = os.path.join(out_dir, "fourier.csv")
    spectrum.to_csv(path, comments=[
        f"# config_sha256={cfg.sha256}",
        f"# dims={spectrum.dims} cutoff={spectrum.cutoff} "
        f"points_per_dim={spectrum.points_per_dim}",
    ])
    return [path]


def cmd_check(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    _require(cfg, {"check": ("n_qubits", "output_dim", "epsilon")})
    m = cfg.get("check", "output_dim")
    if cfg.has("check", "spectra"):
        problems: list[str] = []
        spectra = _parse_spectra(cfg.get("check", "spectra"), problems)
        if problems:
            raise ConfigError(problems)
        if len(spectra) == 1 and m > 1:
            spectra = spectra * m
    else:
        spectra = [SpectralSummary(-1.0, 1.0, 1.0, 1.0)] * m
    report = check_feasibility(cfg.get("check", "n_qubits"), m,
                               cfg.get("check", "epsilon"), spectra)
    payload = report.to_dict()
    payload["config_sha256"] = cfg.sha256
    path = os.path.join(out_dir, "check.json")
    _write_json(path, payload)
    return [path]


_RUNNERS = {
    "fit": cmd_fit,
    "sample": cmd_sample,
    "w1": cmd_w1,
    "analyze-rank": cmd_analyze_rank,
    "analyze-fourier": cmd_analyze_fourier,
    "check": cmd_check,
}


def execute(cfg: ExperimentConfig, command: str, out_dir: str | None = None) -> list[str]:
    """Run one command; returns the artifact paths it wrote."""
    if command not in _RUNNERS:
        raise ConfigError([f"command: {command!r} is not one of {{{', '.join(COMMANDS)}}}"])
    target_dir = out_dir if out_dir is not None else cfg.out_dir
    os.makedirs(target_dir, exist_ok=True)
    return _RUNNERS[command](cfg, target_dir)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="evsampler",
        description="Expectation-value sampler experiments: fit, sample, measure, analyze.",
    )
    ap.add_argument("--config", required=True, help="INI config file")
    ap.add_argument("--command", required=True, choices=COMMANDS)
    ap.add_argument("--out", default=None, help="output directory (overrides config)")
    ap.add_argument("--seed", type=int, default=None, help="seed override (u64)")
    args = ap.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed: must be >= 0"])
            cfg.sections.setdefault("run", {})["seed"] = args.seed
        artifacts = execute(cfg, args.command, args.out)
    except ConfigError as err:
        for problem in err.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1
    except ValidationError as err:
        print(f"validation error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # runtime failure contract
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    for path in artifacts:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
