"""Config-driven experiments and plot-data emission.

A run is described by one JSON object: the experiment kind, a master
seed, a parameter block, an output directory, and a thread count.
Parsing is strict (unknown keys rejected, errors name the offending
field path) and fills every default, so a parsed config echoes back
identically and its digest is stable.  Artifacts embed that digest plus
the master seed, and equal digests always mean byte-identical files:
nothing here records wall-clock time or hostnames.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Any

import numpy as np

from . import special
from ._util import (
    BudgetError,
    ValidationError,
    atomic_write_json,
    atomic_write_text,
    config_digest,
    rng_for,
)
from .chebyshev import MomentRequest, mixed_chebyshev_moment
from .comparison import comparison_report, lclt_residual
from .diagrams import (
    SpikeOperator,
    diagram_function,
    limiting_diagram_function,
    load_diagram,
)
from .ensembles import (
    ENTRY_LAWS,
    EdgeSampleSet,
    EnsembleSpec,
    ensemble_sampler,
    entry_moment_theta,
    gaussian_reference,
    gumbel_reference,
    ks_distance,
    matrix_from_seed,
    run_edge_samples,
    top_eigenpair,
    tracy_widom_reference,
)
from .kernels import (
    DENSE_CAP,
    ProfileSpec,
    cached_chain,
    hankel_step,
    n_step_fft,
    wegner_block_kernel,
)

CONFIG_KINDS = (
    "edge-sim",
    "sweep",
    "compare",
    "lclt",
    "diagram",
    "wegner",
    "hankel",
    "profile",
    "special",
)

EMIT_KINDS = ("histogram", "cdf", "ipr-profile", "phase-table")

# Nominal unit operations (trials * states^3 per grid point) a sweep may
# schedule without an explicit params.budget raise.
DEFAULT_SWEEP_BUDGET = 1.0e12

_SPECIAL_FUNCTIONS = ("theta", "stable-density", "skellam", "reference-cdf")
_SWEEPABLE_KINDS = ("alpha-stable", "power-law", "truncated-gaussian")


# ---------------------------------------------------------------------------
# profile blocks
# ---------------------------------------------------------------------------

# Config profiles use the constructor spellings: required keys first,
# optional ones get the constructor defaults filled on canonicalization.
_PROFILE_KEYS = {
    "alpha-stable": ({"alpha", "L", "W"}, {"scale", "d"}),
    "power-law": ({"T", "L", "W"}, {"scale", "d"}),
    "truncated-gaussian": ({"sigma", "L", "W"}, {"d"}),
    "flat": ({"L"}, {"d"}),
    "tabulated": ({"values", "L"}, {"W", "d"}),
    "wegner": ({"D", "M", "lam"}, {"d"}),
    "hankel": ({"base", "x0"}, set()),
    "interpolated": ({"base", "lam"}, set()),
}


def profile_from_config(block: dict) -> ProfileSpec:
    """Build the kernel spec named by a canonical (or raw) profile block."""
    kind = block["kind"]
    if kind == "alpha-stable":
        return ProfileSpec.alpha_stable(block["alpha"], block["L"], block["W"],
                                        scale=block.get("scale"),
                                        d=block.get("d", 1))
    if kind == "power-law":
        return ProfileSpec.power_law(block["T"], block["L"], block["W"],
                                     scale=block.get("scale", 1.0),
                                     d=block.get("d", 1))
    if kind == "truncated-gaussian":
        return ProfileSpec.truncated_gaussian(block["sigma"], block["L"],
                                              block["W"], d=block.get("d", 1))
    if kind == "flat":
        return ProfileSpec.flat(block["L"], d=block.get("d", 1))
    if kind == "tabulated":
        return ProfileSpec.tabulated(block["values"], block["L"],
                                     W=block.get("W"), d=block.get("d", 1))
    if kind == "wegner":
        return ProfileSpec.wegner(block["D"], block.get("d", 1), block["M"],
                                  block["lam"])
    if kind == "hankel":
        return ProfileSpec.hankel(profile_from_config(block["base"]),
                                  block["x0"])
    if kind == "interpolated":
        return ProfileSpec.interpolated(profile_from_config(block["base"]),
                                        block["lam"])
    raise ValidationError(
        f"unknown profile kind {kind!r}; expected one of {sorted(_PROFILE_KEYS)}"
    )


def _canonical_profile(spec: ProfileSpec) -> dict:
    if spec.kind == "AlphaStable":
        return {"kind": "alpha-stable", "d": spec.d, "L": spec.L, "W": spec.W,
                "alpha": spec.param("alpha"), "scale": spec.param("scale")}
    if spec.kind == "PowerLawTail":
        return {"kind": "power-law", "d": spec.d, "L": spec.L, "W": spec.W,
                "T": spec.param("T"), "scale": spec.param("scale")}
    if spec.kind == "TruncatedGaussian":
        return {"kind": "truncated-gaussian", "d": spec.d, "L": spec.L,
                "W": spec.W, "sigma": spec.param("sigma")}
    if spec.kind == "Tabulated":
        return {"kind": "tabulated", "d": spec.d, "L": spec.L, "W": spec.W,
                "values": spec.param("values")}
    if spec.kind == "WegnerBlock":
        return {"kind": "wegner", "d": spec.d, "D": spec.param("D"),
                "M": spec.param("M"), "lam": spec.param("lam")}
    if spec.kind == "Hankel":
        base = _canonical_profile(ProfileSpec.from_jsonable(spec.param("base")))
        return {"kind": "hankel", "base": base, "x0": spec.param("x0")}
    base = _canonical_profile(ProfileSpec.from_jsonable(spec.param("base")))
    return {"kind": "interpolated", "base": base, "lam": spec.param("lam")}


# ---------------------------------------------------------------------------
# field coercion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Field:
    kind: str
    required: bool = False
    default: Any = None
    choices: tuple | None = None
    minimum: float | None = None


def _as_int(value, path, minimum=None, choices=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{path}: must be at least {int(minimum)}, got {value}")
    if choices is not None and value not in choices:
        raise ValidationError(f"{path}: must be one of {list(choices)}, got {value}")
    return int(value)


def _as_num(value, path, minimum=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}: expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ValidationError(f"{path}: must be finite, got {value!r}")
    if minimum is not None and out < minimum:
        raise ValidationError(f"{path}: must be at least {minimum:g}, got {out:g}")
    return out


def _as_str(value, path, choices=None) -> str:
    if not isinstance(value, str):
        raise ValidationError(f"{path}: expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ValidationError(f"{path}: must be one of {list(choices)}, got {value!r}")
    return value


def _as_int_list(value, path) -> list:
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{path}: expected a non-empty list of integers")
    return [_as_int(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _as_num_list(value, path) -> list:
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{path}: expected a non-empty list of numbers")
    return [_as_num(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _as_profile(value, path) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(f"{path}: expected a profile object")
    kind = value.get("kind")
    if kind not in _PROFILE_KEYS:
        raise ValidationError(
            f"{path}.kind: unknown profile kind {kind!r}; expected one of "
            f"{sorted(_PROFILE_KEYS)}"
        )
    required, optional = _PROFILE_KEYS[kind]
    unknown = set(value) - required - optional - {"kind"}
    if unknown:
        raise ValidationError(f"{path}.{sorted(unknown)[0]}: unknown profile key")
    missing = required - set(value)
    if missing:
        raise ValidationError(
            f"{path}.{sorted(missing)[0]}: required profile key is missing"
        )
    if "base" in value:
        value = {**value, "base": _as_profile(value["base"], f"{path}.base")}
    try:
        spec = profile_from_config(value)
        cached_chain(spec)  # surfaces out-of-range kernel parameters early
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return _canonical_profile(spec)


def _as_spike(value, path) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(f"{path}: expected a spike object")
    try:
        return SpikeOperator.from_jsonable(value).to_jsonable()
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _as_grid(value, path) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(f"{path}: expected an object with keys W and a")
    unknown = set(value) - {"W", "a"}
    if unknown:
        raise ValidationError(f"{path}.{sorted(unknown)[0]}: unknown grid key")
    if "W" not in value:
        raise ValidationError(f"{path}.W: required parameter is missing")
    out = {"W": _as_int_list(value["W"], f"{path}.W"), "a": None}
    if value.get("a") is not None:
        out["a"] = _as_num_list(value["a"], f"{path}.a")
    return out


_COERCERS = {
    "int": lambda v, p, f: _as_int(v, p, minimum=f.minimum, choices=f.choices),
    "num": lambda v, p, f: _as_num(v, p, minimum=f.minimum),
    "str": lambda v, p, f: _as_str(v, p, choices=f.choices),
    "list-int": lambda v, p, f: _as_int_list(v, p),
    "list-num": lambda v, p, f: _as_num_list(v, p),
    "profile": lambda v, p, f: _as_profile(v, p),
    "spike": lambda v, p, f: _as_spike(v, p),
    "grid": lambda v, p, f: _as_grid(v, p),
}


# ---------------------------------------------------------------------------
# per-kind parameter schemas
# ---------------------------------------------------------------------------


_SCHEMAS: dict = {
    "edge-sim": {
        "profile": _Field("profile", required=True),
        "trials": _Field("int", required=True, minimum=1),
        "beta": _Field("int", default=1, choices=(1, 2)),
        "entry_law": _Field("str", default="gaussian", choices=ENTRY_LAWS),
        "spike": _Field("spike"),
        "s_N": _Field("num"),
    },
    "sweep": {
        "profile": _Field("profile", required=True),
        "trials": _Field("int", required=True, minimum=2),
        "beta": _Field("int", default=1, choices=(1, 2)),
        "entry_law": _Field("str", default="gaussian", choices=ENTRY_LAWS),
        "grid": _Field("grid", required=True),
        "spike_position": _Field("int", default=0, minimum=0),
        "budget": _Field("num", default=DEFAULT_SWEEP_BUDGET, minimum=1.0),
    },
    "compare": {
        "profile_a": _Field("profile", required=True),
        "profile_b": _Field("profile", required=True),
        "n": _Field("int", required=True, minimum=1),
        "trials": _Field("int", required=True, minimum=2),
        "orders": _Field("list-int"),
        "beta": _Field("int", default=1, choices=(1, 2)),
        "entry_law": _Field("str", default="gaussian", choices=ENTRY_LAWS),
    },
    "lclt": {
        "profile": _Field("profile", required=True),
        "n": _Field("int", required=True, minimum=1),
        "alpha": _Field("num"),
        "scale": _Field("num"),
    },
    "diagram": {
        "diagram": _Field("str", required=True),
        "mode": _Field("str", default="finite", choices=("finite", "limit")),
        "profile": _Field("profile"),
        "orders": _Field("list-int"),
        "spike": _Field("spike"),
        "regime": _Field("str", choices=("super", "sub", "critical")),
        "ts": _Field("list-num"),
        "alpha": _Field("num", default=2.0),
        "gamma": _Field("num"),
        "scale": _Field("num"),
        "mc_samples": _Field("int", default=200_000, minimum=1000),
    },
    "wegner": {
        "D": _Field("int", required=True, minimum=2),
        "d": _Field("int", default=1, minimum=1),
        "lam": _Field("num", required=True),
        "n": _Field("int", required=True, minimum=1),
        "tau": _Field("num", default=1.0, minimum=0.0),
    },
    "hankel": {
        "profile": _Field("profile", required=True),
        "n": _Field("int", required=True, minimum=0),
        "x": _Field("int", default=0, minimum=0),
    },
    "profile": {
        "profile": _Field("profile", required=True),
        "power": _Field("int", default=1, minimum=1),
    },
    "special": {
        "function": _Field("str", required=True, choices=_SPECIAL_FUNCTIONS),
        "alpha": _Field("num"),
        "tau": _Field("num", minimum=0.0),
        "scale": _Field("num"),
        "law": _Field("str", choices=("Gumbel", "TW1", "TW2")),
        "D": _Field("int", minimum=2),
        "d": _Field("int", default=1, minimum=1),
        "lo": _Field("num", default=-10.0),
        "hi": _Field("num", default=10.0),
        "points": _Field("int", default=512, minimum=2),
    },
}


def _post_edge_sim(p: dict) -> None:
    if p["s_N"] is not None and p["s_N"] <= 0.0:
        raise ValidationError("params.s_N: rescaling width must be positive")
    _probe_ensemble(p, "params")


def _probe_ensemble(p: dict, path: str, profile_key: str = "profile") -> None:
    # builds the spec once so index errors surface at parse time
    spike = None if p.get("spike") is None else SpikeOperator.from_jsonable(p["spike"])
    try:
        EnsembleSpec(
            beta=p["beta"],
            entry_law=p["entry_law"],
            profile=profile_from_config(p[profile_key]),
            spike=spike,
            master_seed=0,
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _post_sweep(p: dict) -> None:
    block = p["profile"]
    if block["kind"] not in _SWEEPABLE_KINDS:
        raise ValidationError(
            "params.profile: a sweep varies the bandwidth, so the profile kind "
            f"must be one of {list(_SWEEPABLE_KINDS)}, got {block['kind']!r}"
        )
    for i, w in enumerate(p["grid"]["W"]):
        try:
            profile_from_config({**block, "W": w})
        except ValidationError as exc:
            raise ValidationError(f"params.grid.W[{i}]: {exc}") from None
    n_states = block["L"] ** block["d"]
    if p["spike_position"] >= n_states:
        raise ValidationError(
            f"params.spike_position: index {p['spike_position']} is outside the "
            f"{n_states}-state torus"
        )


def _post_compare(p: dict) -> None:
    if p["orders"] is None:
        p["orders"] = [p["n"], p["n"]]
    if any(o < 1 for o in p["orders"]):
        raise ValidationError("params.orders: polynomial orders must be positive")


def _post_lclt(p: dict) -> None:
    prof = profile_from_config(p["profile"])
    if cached_chain(prof).structure != "translation_invariant":
        raise ValidationError(
            "params.profile: the local limit comparison needs a "
            "translation-invariant profile"
        )
    if p["alpha"] is None:
        from .ensembles import stable_index

        p["alpha"] = float(stable_index(prof))
    if not 1.0 < p["alpha"] <= 2.0:
        raise ValidationError(
            f"params.alpha: stable exponent must lie in (1, 2], got {p['alpha']:g}"
        )


def _post_diagram(p: dict) -> None:
    try:
        load_diagram(p["diagram"])
    except (ValidationError, OSError) as exc:
        raise ValidationError(f"params.diagram: {exc}") from None
    if p["mode"] == "finite":
        for key in ("profile", "orders"):
            if p[key] is None:
                raise ValidationError(
                    f"params.{key}: required when params.mode is 'finite'"
                )
    else:
        for key in ("regime", "ts"):
            if p[key] is None:
                raise ValidationError(
                    f"params.{key}: required when params.mode is 'limit'"
                )
        if any(t <= 0 for t in p["ts"]):
            raise ValidationError("params.ts: face budgets must be positive")
        if p["regime"] == "critical" and p["gamma"] is None:
            raise ValidationError(
                "params.gamma: required when params.regime is 'critical'"
            )


def _post_wegner(p: dict) -> None:
    if not 0.0 <= p["lam"] < 1.0:
        raise ValidationError(
            f"params.lam: coupling must lie in [0, 1), got {p['lam']:g}"
        )


def _post_hankel(p: dict) -> None:
    if p["profile"]["kind"] != "hankel":
        raise ValidationError(
            f"params.profile: frequency stepping needs a hankel profile, "
            f"got kind {p['profile']['kind']!r}"
        )
    base = p["profile"]["base"]
    n_states = base["L"] ** base["d"]
    if p["x"] >= n_states:
        raise ValidationError(
            f"params.x: start site {p['x']} is outside the {n_states}-state torus"
        )


def _post_special(p: dict) -> None:
    needed = {
        "theta": ("alpha", "tau"),
        "stable-density": ("alpha", "tau"),
        "skellam": ("D", "tau"),
        "reference-cdf": ("law",),
    }[p["function"]]
    for key in needed:
        if p[key] is None:
            raise ValidationError(
                f"params.{key}: required for function {p['function']!r}"
            )
    if p["function"] in ("theta", "stable-density") and not 0.0 < p["alpha"] <= 2.0:
        raise ValidationError(
            f"params.alpha: stable exponent must lie in (0, 2], got {p['alpha']:g}"
        )
    if p["hi"] <= p["lo"]:
        raise ValidationError("params.hi: grid upper end must exceed params.lo")


_POST = {
    "edge-sim": _post_edge_sim,
    "sweep": _post_sweep,
    "compare": _post_compare,
    "lclt": _post_lclt,
    "diagram": _post_diagram,
    "wegner": _post_wegner,
    "hankel": _post_hankel,
    "special": _post_special,
}


def _canon_params(kind: str, raw: dict) -> dict:
    schema = _SCHEMAS[kind]
    unknown = set(raw) - set(schema)
    if unknown:
        raise ValidationError(f"params.{sorted(unknown)[0]}: unknown parameter")
    out: dict = {}
    for name, field in schema.items():
        path = f"params.{name}"
        if name in raw and raw[name] is not None:
            out[name] = _COERCERS[field.kind](raw[name], path, field)
        elif field.required:
            raise ValidationError(f"{path}: required parameter is missing")
        else:
            out[name] = field.default
    post = _POST.get(kind)
    if post is not None:
        post(out)
    return out


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------


_TOP_KEYS = {"kind", "seed", "params", "out", "threads"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run description; params are canonical JSON values."""

    kind: str
    seed: int
    params: dict
    out: str | None = None
    threads: int = 1

    def to_jsonable(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "out": self.out,
            "threads": self.threads,
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return config_digest(self.to_jsonable())


def parse_config(source) -> ExperimentConfig:
    """Validate a JSON text or mapping into an ExperimentConfig.

    Unknown keys anywhere are rejected and every error message starts
    with the dotted path of the offending field.  All defaults are
    filled, so parse(serialize(parse(text))) is the identity.
    """
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, (str, bytes)):
        try:
            obj = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from None
    elif isinstance(source, dict):
        obj = source
    else:
        raise ValidationError(
            f"config must be JSON text or an object, got {type(source).__name__}"
        )
    if not isinstance(obj, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ValidationError(f"{sorted(unknown)[0]}: unknown config key")
    if "kind" not in obj:
        raise ValidationError("kind: required field is missing")
    kind = obj["kind"]
    if kind not in _SCHEMAS:
        raise ValidationError(
            f"kind: unknown experiment kind {kind!r}; expected one of "
            f"{list(CONFIG_KINDS)}"
        )
    if "seed" not in obj:
        raise ValidationError("seed: required field is missing")
    seed = obj["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ValidationError(
            f"seed: expected an unsigned 64-bit integer, got {seed!r}"
        )
    out = obj.get("out")
    if out is not None and not isinstance(out, str):
        raise ValidationError(f"out: expected a directory path, got {out!r}")
    threads = _as_int(obj.get("threads", 1), "threads", minimum=1)
    raw = obj.get("params", {})
    if not isinstance(raw, dict):
        raise ValidationError("params: expected an object")
    params = _canon_params(kind, raw)
    return ExperimentConfig(kind=kind, seed=seed, params=params, out=out,
                            threads=threads)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# runner plumbing
# ---------------------------------------------------------------------------


def _out_dir(config: ExperimentConfig) -> str:
    path = config.out if config.out else "."
    os.makedirs(path, exist_ok=True)
    return path


def _stamp(config: ExperimentConfig) -> tuple:
    return (f"config_digest={config.digest()}", f"master_seed={config.seed}")


def _write_table(path: str, comments, header: str, rows) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(header)
    lines.extend(rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def _write_report(config: ExperimentConfig, name: str, payload: dict) -> str:
    path = os.path.join(_out_dir(config), name)
    atomic_write_json(
        path,
        {
            "config_digest": config.digest(),
            "master_seed": config.seed,
            "kind": config.kind,
            **payload,
        },
    )
    return path


def _derived_seed(master: int, *path) -> int:
    return int(rng_for(master, *path).integers(0, 2**63 - 1))


def _spike_of(p: dict):
    return None if p.get("spike") is None else SpikeOperator.from_jsonable(p["spike"])


def _distribution_summary(sample_set: EdgeSampleSet, beta: int) -> dict:
    x = sample_set.rescaled
    out = {
        "mean_lambda_max": float(np.mean(sample_set.lambda_max)),
        "mean_rescaled": float(np.mean(x)),
        "sd_rescaled": float(np.std(x, ddof=1)) if x.size > 1 else None,
        "mean_ipr": float(np.mean(sample_set.ipr)),
    }
    if x.size > 1 and np.std(x) > 0.0:
        out["ks_gumbel"] = ks_distance(x, gumbel_reference(), normalize=True)
        out["ks_tw"] = ks_distance(x, tracy_widom_reference(beta), normalize=True)
        out["ks_gaussian"] = ks_distance(x, gaussian_reference(), normalize=True)
    else:
        out["ks_gumbel"] = out["ks_tw"] = out["ks_gaussian"] = None
    return out


# Phase labels keyed by which reference the standardized rescaled maxima
# sit closest to; ties break toward the earlier entry.
_PHASE_REFS = (("ks_gumbel", "poisson-edge"), ("ks_tw", "airy-edge"),
               ("ks_gaussian", "outlier-gaussian"))


def _phase_label(summary: dict) -> str:
    best = min(_PHASE_REFS, key=lambda item: (summary[item[0]], item[1]))
    return best[1]


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def run_edge_sim(config: ExperimentConfig) -> dict:
    p = config.params
    spec = EnsembleSpec(
        beta=p["beta"],
        entry_law=p["entry_law"],
        profile=profile_from_config(p["profile"]),
        spike=_spike_of(p),
        master_seed=config.seed,
    )
    sample_set = run_edge_samples(spec, p["trials"], s_n=p["s_N"],
                                  threads=config.threads)
    sample_set = EdgeSampleSet(
        records=sample_set.records,
        metadata={**sample_set.metadata, "config_digest": config.digest()},
    )
    path = os.path.join(_out_dir(config), f"edge_{config.digest()[:12]}.csv")
    sample_set.to_csv(path, comments=_stamp(config))
    return {
        "kind": "edge-sim",
        "artifact": path,
        "spec_digest": spec.digest(),
        "trials": p["trials"],
        "regime": sample_set.metadata["regime"],
        "s_N": sample_set.metadata["s_N"],
        **_distribution_summary(sample_set, p["beta"]),
    }


def _load_if_current(path: str, spec: EnsembleSpec, trials: int):
    """Reuse a persisted sample set when it matches the planned point."""
    try:
        sample_set = EdgeSampleSet.from_csv(path)
    except (OSError, ValidationError, ValueError, KeyError):
        return None
    md = sample_set.metadata
    if md.get("spec_digest") != spec.digest() or md.get("trials") != trials:
        return None
    return sample_set


def run_sweep(config: ExperimentConfig) -> dict:
    """Edge statistics over a bandwidth grid, optionally crossed with a
    rank-one perturbation strength.

    The nominal cost trials * states^3 per point is checked against the
    configured budget before any sampling starts.  Finished grid points
    are recognized by their sample-spec digest and trial count and are
    never recomputed, so an interrupted sweep resumes where it stopped
    and a finished one is free to re-run.
    """
    p = config.params
    block = p["profile"]
    n_states = block["L"] ** block["d"]
    a_values = p["grid"]["a"] if p["grid"]["a"] is not None else [None]
    points = [(w, a) for w in p["grid"]["W"] for a in a_values]
    cost = float(p["trials"]) * float(n_states) ** 3 * len(points)
    if cost > p["budget"]:
        raise BudgetError(
            f"sweep plans about {cost:.3g} unit operations, over the configured "
            f"budget {p['budget']:.3g}; raise params.budget or shrink the grid"
        )
    out = _out_dir(config)

    def one_point(point):
        w, a = point
        spike = (
            None
            if a is None
            else SpikeOperator(vectors=((1.0,),), eigenvalues=(float(a),),
                               positions=(p["spike_position"],))
        )
        spec = EnsembleSpec(
            beta=p["beta"],
            entry_law=p["entry_law"],
            profile=profile_from_config({**block, "W": int(w)}),
            spike=spike,
            master_seed=_derived_seed(
                config.seed, "sweep-point", int(w),
                "none" if a is None else repr(float(a)),
            ),
        )
        name = f"edge_W{int(w)}" + ("" if a is None else f"_a{float(a):g}") + ".csv"
        path = os.path.join(out, name)
        sample_set = _load_if_current(path, spec, p["trials"])
        resumed = sample_set is not None
        if not resumed:
            sample_set = run_edge_samples(spec, p["trials"], threads=1)
            sample_set = EdgeSampleSet(
                records=sample_set.records,
                metadata={**sample_set.metadata,
                          "config_digest": config.digest()},
            )
            sample_set.to_csv(path, comments=_stamp(config))
        return point, name, spec, sample_set, resumed

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one_point, points))
    else:
        results = [one_point(pt) for pt in points]

    header = ("W,a,trials,regime,s_N,gamma_N,mean_lambda_max,mean_rescaled,"
              "sd_rescaled,mean_ipr,ks_gumbel,ks_tw,ks_gaussian,label,"
              "artifact,spec_digest")
    rows = []
    lines = []
    for (w, a), name, spec, sample_set, resumed in results:
        md = sample_set.metadata
        summary = _distribution_summary(sample_set, p["beta"])
        row = {
            "W": int(w),
            "a": None if a is None else float(a),
            "trials": p["trials"],
            "regime": md["regime"],
            "s_N": float(md["s_N"]),
            "gamma_N": float(md["gamma_N"]),
            **summary,
            "label": _phase_label(summary),
            "artifact": name,
            "spec_digest": spec.digest(),
            "resumed": resumed,
        }
        rows.append(row)
        lines.append(
            ",".join(
                [
                    str(row["W"]),
                    "" if a is None else repr(float(a)),
                    str(row["trials"]),
                    row["regime"],
                    repr(row["s_N"]),
                    repr(row["gamma_N"]),
                    repr(row["mean_lambda_max"]),
                    repr(row["mean_rescaled"]),
                    repr(row["sd_rescaled"]),
                    repr(row["mean_ipr"]),
                    repr(row["ks_gumbel"]),
                    repr(row["ks_tw"]),
                    repr(row["ks_gaussian"]),
                    row["label"],
                    name,
                    row["spec_digest"],
                ]
            )
        )
    summary_path = os.path.join(out, "sweep_summary.csv")
    _write_table(summary_path, _stamp(config), header, lines)
    return {
        "kind": "sweep",
        "summary": summary_path,
        "rows": rows,
        "cost": cost,
        "budget": p["budget"],
    }


def run_compare(config: ExperimentConfig) -> dict:
    """Mixed trace moments plus the kernel-level hypothesis report for a
    pair of variance profiles sharing one entry law."""
    p = config.params
    prof_a = profile_from_config(p["profile_a"])
    prof_b = profile_from_config(p["profile_b"])
    chain_a, chain_b = cached_chain(prof_a), cached_chain(prof_b)
    estimates = {}
    for tag, prof in (("a", prof_a), ("b", prof_b)):
        spec = EnsembleSpec(beta=p["beta"], entry_law=p["entry_law"],
                            profile=prof, master_seed=config.seed)
        request = MomentRequest(
            orders=tuple(p["orders"]),
            trials=p["trials"],
            seed=_derived_seed(config.seed, "compare", tag),
            ensemble=ensemble_sampler(spec),
        )
        estimates[tag] = mixed_chebyshev_moment(request)
    est_a, est_b = estimates["a"], estimates["b"]
    spread = math.hypot(est_a.stderr, est_b.stderr)
    gap = abs(est_a.value - est_b.value)
    z = gap / spread if spread > 0.0 else (0.0 if gap == 0.0 else math.inf)
    # the fourth-moment hypothesis only constrains non-Gaussian entries,
    # so Gaussian runs leave it out instead of reporting a vacuous failure
    theta = None
    if p["entry_law"] != "gaussian":
        theta = entry_moment_theta(p["entry_law"], p["beta"])
    report = comparison_report(chain_a, chain_b, p["n"], theta=theta)
    payload = {
        "orders": list(p["orders"]),
        "trials": p["trials"],
        "moment_a": {"value": est_a.value, "stderr": est_a.stderr},
        "moment_b": {"value": est_b.value, "stderr": est_b.stderr},
        "moment_z": z,
        "comparison": report.to_jsonable(),
    }
    path = _write_report(config, f"compare_{config.digest()[:12]}.json", payload)
    return {"kind": "compare", "report": path, "moment_z": z,
            "verdicts": report.verdicts}


def run_lclt(config: ExperimentConfig) -> dict:
    p = config.params
    prof = profile_from_config(p["profile"])
    chain = cached_chain(prof)
    result = lclt_residual(chain, p["alpha"], p["n"], scale=p["scale"])
    scale = p["scale"]
    if scale is None:
        if prof.kind == "AlphaStable" and prof.param("alpha") == p["alpha"]:
            scale = prof.param("scale")
        else:
            scale = special.default_scale(p["alpha"])
    walk = n_step_fft(chain, p["n"])
    xs = np.arange(prof.L) / prof.L
    ref = special.theta_alpha(
        p["alpha"], xs, p["n"] * (prof.W / prof.L) ** p["alpha"], scale=scale
    ) / prof.L
    digest12 = config.digest()[:12]
    table_path = os.path.join(_out_dir(config), f"lclt_{digest12}.csv")
    _write_table(
        table_path,
        _stamp(config),
        "x,probability,reference,abs_error",
        (
            f"{i},{float(walk[i])!r},{float(ref[i])!r},"
            f"{float(abs(walk[i] - ref[i]))!r}"
            for i in range(prof.L)
        ),
    )
    payload = {
        "n": p["n"],
        "alpha": p["alpha"],
        "scale": float(scale),
        "residual": result.residual,
        "reference_bound": result.reference_bound,
        "table": os.path.basename(table_path),
    }
    path = _write_report(config, f"lclt_{digest12}.json", payload)
    return {"kind": "lclt", "report": path, "table": table_path,
            "residual": result.residual,
            "reference_bound": result.reference_bound}


def run_diagram(config: ExperimentConfig) -> dict:
    p = config.params
    diagram = load_diagram(p["diagram"])
    spike = _spike_of(p)
    if p["mode"] == "finite":
        chain = cached_chain(profile_from_config(p["profile"]))
        value = diagram_function(diagram, chain, tuple(p["orders"]), spike=spike)
        payload = {
            "diagram": p["diagram"],
            "mode": "finite",
            "orders": list(p["orders"]),
            "value": float(value),
        }
    else:
        estimate = limiting_diagram_function(
            diagram,
            p["regime"],
            tuple(p["ts"]),
            alpha=p["alpha"],
            gamma=p["gamma"],
            spike=spike,
            scale=p["scale"],
            mc_samples=p["mc_samples"],
            seed=config.seed,
        )
        payload = {
            "diagram": p["diagram"],
            "mode": "limit",
            "regime": p["regime"],
            "ts": list(p["ts"]),
            "mc_samples": p["mc_samples"],
            "value": float(estimate.value),
            "stderr": float(estimate.stderr),
            "lattice_constant": float(estimate.lattice_constant),
            "resample_recommended": bool(estimate.resample_recommended),
        }
    path = _write_report(config, f"diagram_{config.digest()[:12]}.json", payload)
    return {"kind": "diagram", "report": path, **payload}


def run_wegner(config: ExperimentConfig) -> dict:
    """Block-walk kernel after n steps against the periodic Skellam law."""
    p = config.params
    table = wegner_block_kernel(p["D"], p["d"], p["lam"], p["n"])
    ref = np.empty_like(table)
    for idx in np.ndindex(table.shape):
        ref[idx] = special.skellam_kernel(p["d"], p["D"], idx, p["tau"])
    sup = float(np.max(np.abs(table - ref)))
    digest12 = config.digest()[:12]
    header = ",".join(f"k{j}" for j in range(p["d"])) + ",probability,reference,abs_error"
    table_path = os.path.join(_out_dir(config), f"wegner_{digest12}.csv")
    _write_table(
        table_path,
        _stamp(config),
        header,
        (
            ",".join(str(c) for c in idx)
            + f",{float(table[idx])!r},{float(ref[idx])!r},"
            + repr(float(abs(table[idx] - ref[idx])))
            for idx in np.ndindex(table.shape)
        ),
    )
    payload = {
        "D": p["D"],
        "d": p["d"],
        "lam": p["lam"],
        "n": p["n"],
        "tau": p["tau"],
        "sup_distance": sup,
        "table": os.path.basename(table_path),
    }
    path = _write_report(config, f"wegner_{digest12}.json", payload)
    return {"kind": "wegner", "report": path, "table": table_path,
            "sup_distance": sup}


def run_hankel(config: ExperimentConfig) -> dict:
    p = config.params
    chain = cached_chain(profile_from_config(p["profile"]))
    result = hankel_step(chain, p["n"], p["x"])
    digest12 = config.digest()[:12]
    table_path = os.path.join(_out_dir(config), f"hankel_{digest12}.csv")
    _write_table(
        table_path,
        _stamp(config),
        "y,probability",
        (f"{y},{float(result.row[y])!r}" for y in range(result.row.size)),
    )
    payload = {
        "n": p["n"],
        "x": p["x"],
        "center": int(result.center),
        "center_mass": float(result.row[result.center]),
        "table": os.path.basename(table_path),
    }
    path = _write_report(config, f"hankel_{digest12}.json", payload)
    return {"kind": "hankel", "report": path, "table": table_path,
            "center": int(result.center)}


def run_profile(config: ExperimentConfig) -> dict:
    """Export a transition kernel, or a power of it, as a flat table."""
    p = config.params
    chain = cached_chain(profile_from_config(p["profile"]))
    digest12 = config.digest()[:12]
    table_path = os.path.join(_out_dir(config), f"kernel_{digest12}.csv")
    if chain.structure == "translation_invariant":
        row = chain.row if p["power"] == 1 else n_step_fft(chain, p["power"])
        header = "offset,probability"
        lines = (f"{x},{float(row[x])!r}" for x in range(row.size))
        shape = "row"
    else:
        dense = chain.matrix(cap=DENSE_CAP)
        if p["power"] > 1:
            dense = np.linalg.matrix_power(dense, p["power"])
        header = "x,y,probability"
        lines = (
            f"{x},{y},{float(dense[x, y])!r}"
            for x in range(dense.shape[0])
            for y in range(dense.shape[1])
        )
        shape = "dense"
    _write_table(table_path, _stamp(config), header, lines)
    payload = {
        "states": chain.n_states,
        "structure": chain.structure,
        "power": p["power"],
        "shape": shape,
        "table": os.path.basename(table_path),
    }
    path = _write_report(config, f"kernel_{digest12}.json", payload)
    return {"kind": "profile", "report": path, "table": table_path}


def run_special(config: ExperimentConfig) -> dict:
    """Tabulate one of the closed-form reference functions."""
    p = config.params
    fn = p["function"]
    if fn == "theta":
        xs = np.arange(p["points"]) / p["points"]
        ys = special.theta_alpha(p["alpha"], xs, p["tau"], scale=p["scale"])
        header, rows = "x,theta", (
            f"{float(x)!r},{float(y)!r}" for x, y in zip(xs, ys)
        )
    elif fn == "stable-density":
        xs = np.linspace(p["lo"], p["hi"], p["points"])
        ys = special.stable_density(p["alpha"], xs, p["tau"], scale=p["scale"])
        header, rows = "x,density", (
            f"{float(x)!r},{float(y)!r}" for x, y in zip(xs, ys)
        )
    elif fn == "skellam":
        cells = list(product(range(p["D"]), repeat=p["d"]))
        header = ",".join(f"k{j}" for j in range(p["d"])) + ",probability"
        rows = (
            ",".join(str(c) for c in cell)
            + f",{special.skellam_kernel(p['d'], p['D'], cell, p['tau'])!r}"
            for cell in cells
        )
    else:
        xs = np.linspace(p["lo"], p["hi"], p["points"])
        values = [special.reference_cdf(p["law"], float(x)).value for x in xs]
        header, rows = "x,cdf", (
            f"{float(x)!r},{float(v)!r}" for x, v in zip(xs, values)
        )
    digest12 = config.digest()[:12]
    table_path = os.path.join(_out_dir(config), f"special_{fn}_{digest12}.csv")
    _write_table(table_path, _stamp(config), header, rows)
    return {"kind": "special", "function": fn, "table": table_path}


_RUNNERS = {
    "edge-sim": run_edge_sim,
    "sweep": run_sweep,
    "compare": run_compare,
    "lclt": run_lclt,
    "diagram": run_diagram,
    "wegner": run_wegner,
    "hankel": run_hankel,
    "profile": run_profile,
    "special": run_special,
}


def run_experiment(config) -> dict:
    config = parse_config(config)
    return _RUNNERS[config.kind](config)


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------


def _fd_edges(x: np.ndarray) -> np.ndarray:
    """Freedman-Diaconis bin edges; depends on the data only."""
    lo, hi = float(np.min(x)), float(np.max(x))
    if lo == hi:
        return np.array([lo - 0.5, hi + 0.5])
    q1, q3 = np.percentile(x, [25.0, 75.0])
    width = 2.0 * (q3 - q1) / x.size ** (1.0 / 3.0)
    if width <= 0.0:
        n_bins = max(1, int(math.ceil(math.sqrt(x.size))))
    else:
        n_bins = max(1, min(10_000, int(math.ceil((hi - lo) / width))))
    return np.linspace(lo, hi, n_bins + 1)


def _load_checked_samples(artifact: str) -> EdgeSampleSet:
    sample_set = EdgeSampleSet.from_csv(artifact)
    md = sample_set.metadata
    if "spec" not in md or config_digest(md["spec"]) != md.get("spec_digest"):
        raise ValidationError(
            f"artifact {artifact}: stored digest does not match its sample spec"
        )
    return sample_set


def _artifact_stamp(md: dict) -> tuple:
    digest = md.get("config_digest", md["spec_digest"])
    return (f"config_digest={digest}", f"master_seed={md['master_seed']}")


def emit_plot_data(artifact: str, kind: str, out_dir: str | None = None) -> str:
    """Derive a plotting table from a persisted artifact.

    histogram and cdf summarize the rescaled maxima of an edge sample
    set, ipr-profile rebuilds the first trial's top eigenvector from its
    stored seed, and phase-table pivots a sweep summary into a bandwidth
    by spike-strength grid of edge-statistics labels.
    """
    if kind not in EMIT_KINDS:
        raise ValidationError(
            f"unknown plot kind {kind!r}; expected one of {list(EMIT_KINDS)}"
        )
    if out_dir is None:
        out_dir = os.path.dirname(artifact) or "."
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(artifact))[0]
    if kind == "phase-table":
        return _emit_phase_table(artifact, out_dir, stem)
    sample_set = _load_checked_samples(artifact)
    stamp = _artifact_stamp(sample_set.metadata)
    x = sample_set.rescaled
    if kind == "histogram":
        edges = _fd_edges(x)
        counts, edges = np.histogram(x, bins=edges)
        total = float(x.size)
        path = os.path.join(out_dir, f"{stem}_hist.csv")
        _write_table(
            path,
            stamp,
            "bin_left,bin_right,count,density",
            (
                f"{float(edges[i])!r},{float(edges[i + 1])!r},{int(counts[i])},"
                + repr(float(counts[i] / (total * (edges[i + 1] - edges[i]))))
                for i in range(counts.size)
            ),
        )
        return path
    if kind == "cdf":
        xs = np.sort(x)
        n = xs.size
        path = os.path.join(out_dir, f"{stem}_cdf.csv")
        _write_table(
            path,
            stamp,
            "x,empirical_cdf",
            (f"{float(xs[i])!r},{(i + 1) / n!r}" for i in range(n)),
        )
        return path
    # ipr-profile: the stored per-trial seed rebuilds the exact matrix
    spec = EnsembleSpec.from_jsonable(sample_set.metadata["spec"])
    record = sample_set.records[0]
    _, vector = top_eigenpair(matrix_from_seed(spec, record.seed))
    amplitude = np.abs(vector) ** 2
    if abs(float(np.sum(amplitude**2)) - record.ipr) > 1e-9:
        raise ValidationError(
            f"artifact {artifact}: stored seed does not reproduce the "
            "recorded participation ratio"
        )
    path = os.path.join(out_dir, f"{stem}_ipr.csv")
    _write_table(
        path,
        stamp,
        "coordinate,amplitude_sq",
        (f"{i},{float(amplitude[i])!r}" for i in range(amplitude.size)),
    )
    return path


def _emit_phase_table(artifact: str, out_dir: str, stem: str) -> str:
    try:
        with open(artifact) as fh:
            raw_lines = fh.read().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read sweep summary {artifact}: {exc}") from None
    comments = [ln[2:] for ln in raw_lines if ln.startswith("# ")]
    body = [ln for ln in raw_lines if ln and not ln.startswith("#")]
    if not body or not body[0].startswith("W,a,"):
        raise ValidationError(
            f"artifact {artifact}: not a sweep summary (header {body[:1]})"
        )
    columns = body[0].split(",")
    idx = {name: i for i, name in enumerate(columns)}
    cells: dict = {}
    regimes: dict = {}
    a_labels: set = set()
    for line in body[1:]:
        parts = line.split(",")
        w = int(parts[idx["W"]])
        a = parts[idx["a"]]
        a_labels.add(a)
        cells[(w, a)] = parts[idx["label"]]
        regimes[w] = parts[idx["regime"]]
    ws = sorted(regimes)
    a_sorted = sorted(a_labels, key=lambda s: (s != "", float(s) if s else 0.0))
    header = "W,regime," + ",".join(
        "a=none" if a == "" else f"a={a}" for a in a_sorted
    )
    base = stem[: -len("_summary")] if stem.endswith("_summary") else stem
    path = os.path.join(out_dir, f"{base}_phase.csv")
    _write_table(
        path,
        tuple(comments),
        header,
        (
            f"{w},{regimes[w]}," + ",".join(cells[(w, a)] for a in a_sorted)
            for w in ws
        ),
    )
    return path
