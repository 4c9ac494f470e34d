"""Random matrix sampling, edge observables, reference laws, deviation bounds.

A matrix is assembled as X = S * W + A: an entrywise product of the
profile's standard deviation table S with a symmetric (or Hermitian)
noise matrix W of unit-variance entries, plus an optional finite-rank
deformation A.  Largest-eigenvalue samples are collected per trial with
derived seeds, so a sample set is reproducible from its CSV alone.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import ndtr

from ._util import (
    ValidationError,
    atomic_write_json,
    atomic_write_text,
    config_digest,
    rng_for,
)
from .diagrams import SpikeOperator
from .kernels import ProfileSpec, cached_chain

ENTRY_LAWS = ("gaussian", "rademacher", "symmetric-uniform")

DESK_CAP = 4096  # full eigensolver scale; larger sizes are out of scope

EULER_GAMMA = float(np.euler_gamma)

_UNIFORM_HALF_WIDTH = math.sqrt(3.0)  # unit-variance symmetric uniform

_FOURTH_ROOTS = np.array([1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j])


# ---------------------------------------------------------------------------
# entry laws


def _double_factorial_odd(k: int) -> float:
    # (2k - 1)!! for k >= 0
    return float(np.prod(np.arange(1, 2 * k, 2, dtype=float))) if k else 1.0


def _real_abs_moment_2k(law: str, k: int) -> float:
    """E|u|^(2k) for the unit-variance real draw of the law."""
    if law == "gaussian":
        return _double_factorial_odd(k)
    if law == "rademacher":
        return 1.0
    return 3.0**k / (2 * k + 1)


def _offdiag_abs_moment_2k(law: str, beta: int, k: int) -> float:
    """E|W_xy|^(2k) for an off-diagonal entry."""
    if beta == 1:
        return _real_abs_moment_2k(law, k)
    if law == "gaussian":
        return float(math.factorial(k))
    if law == "rademacher":
        return 1.0
    total = sum(
        math.comb(k, j) / ((2 * j + 1) * (2 * (k - j) + 1)) for j in range(k + 1)
    )
    return 1.5**k * total


def entry_moment_theta(law: str, beta: int, k_max: int = 32) -> float:
    """Smallest theta >= 1 with E|W|^(2k) <= theta^(k-1) (2k-1)!! for all
    entries of the noise matrix, diagonal scaling included."""
    _check_law(law, beta)
    diag_var = 2.0 / beta
    theta = 1.0
    for k in range(2, k_max + 1):
        dfac = _double_factorial_odd(k)
        off = (_offdiag_abs_moment_2k(law, beta, k) / dfac) ** (1.0 / (k - 1))
        diag = (diag_var**k * _real_abs_moment_2k(law, k) / dfac) ** (1.0 / (k - 1))
        theta = max(theta, off, diag)
    return theta


def _check_law(law: str, beta: int) -> None:
    if law not in ENTRY_LAWS:
        raise ValidationError(f"unknown entry law {law!r}")
    if beta not in (1, 2):
        raise ValidationError("beta must be 1 (symmetric) or 2 (Hermitian)")


def _draw_real_unit(rng: np.random.Generator, law: str, size: int) -> np.ndarray:
    if law == "gaussian":
        return rng.standard_normal(size)
    if law == "rademacher":
        return rng.integers(0, 2, size).astype(float) * 2.0 - 1.0
    return rng.uniform(-_UNIFORM_HALF_WIDTH, _UNIFORM_HALF_WIDTH, size)


def _draw_offdiag(rng: np.random.Generator, law: str, beta: int, size: int):
    if beta == 1:
        return _draw_real_unit(rng, law, size)
    if law == "rademacher":
        # fourth roots of unity: unit modulus, zero pseudo-variance
        return _FOURTH_ROOTS[rng.integers(0, 4, size)]
    re = _draw_real_unit(rng, law, size)
    im = _draw_real_unit(rng, law, size)
    return (re + 1j * im) / math.sqrt(2.0)


def _draw_diag(rng: np.random.Generator, law: str, beta: int, n: int) -> np.ndarray:
    # diagonal entries are real with variance 2/beta
    return math.sqrt(2.0 / beta) * _draw_real_unit(rng, law, n)


# ---------------------------------------------------------------------------
# ensemble specification


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Everything needed to reproduce a matrix ensemble bitwise.

    `N` defaults to the profile's state count and must agree with it; the
    optional spike must carry finite-form eigenvalues and embedding
    positions inside [0, N).
    """

    beta: int
    entry_law: str
    profile: ProfileSpec
    spike: SpikeOperator | None = None
    N: int | None = None
    master_seed: int = 0

    def __post_init__(self):
        _check_law(self.entry_law, self.beta)
        states = self.profile.L ** self.profile.d
        n = states if self.N is None else int(self.N)
        if n != states:
            raise ValidationError(
                f"matrix size {n} does not match the profile state count {states}"
            )
        object.__setattr__(self, "N", n)
        object.__setattr__(self, "beta", int(self.beta))
        object.__setattr__(self, "master_seed", int(self.master_seed))
        if not 0 <= self.master_seed < 2**64:
            raise ValidationError("master seed must fit in an unsigned 64-bit int")
        if self.spike is not None:
            if self.spike.eigenvalues is None or self.spike.positions is None:
                raise ValidationError(
                    "ensemble spike needs eigenvalues and embedding positions"
                )
            if any(p >= n for p in self.spike.positions):
                raise ValidationError("spike position outside the matrix index range")

    def to_jsonable(self) -> dict:
        return {
            "beta": self.beta,
            "entry_law": self.entry_law,
            "profile": self.profile.to_jsonable(),
            "spike": None if self.spike is None else self.spike.to_jsonable(),
            "N": self.N,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "EnsembleSpec":
        keys = {"beta", "entry_law", "profile", "spike", "N", "master_seed"}
        extra = set(obj) - keys
        if extra:
            raise ValidationError(f"unknown ensemble keys {sorted(extra)}")
        missing = {"beta", "entry_law", "profile"} - set(obj)
        if missing:
            raise ValidationError(f"missing ensemble keys {sorted(missing)}")
        spike = obj.get("spike")
        return cls(
            beta=int(obj["beta"]),
            entry_law=str(obj["entry_law"]),
            profile=ProfileSpec.from_jsonable(obj["profile"]),
            spike=None if spike is None else SpikeOperator.from_jsonable(spike),
            N=obj.get("N"),
            master_seed=int(obj.get("master_seed", 0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EnsembleSpec":
        return cls.from_jsonable(json.loads(text))

    def digest(self) -> str:
        return config_digest(self.to_jsonable())


@lru_cache(maxsize=8)
def _sigma_table(profile: ProfileSpec) -> np.ndarray:
    """Entrywise standard deviations: the square root of the kernel table."""
    table = np.sqrt(cached_chain(profile).matrix(cap=DESK_CAP))
    table.setflags(write=False)
    return table


# ---------------------------------------------------------------------------
# sampling


def trial_seed(spec: EnsembleSpec, trial: int) -> int:
    """Derived 63-bit seed for one trial; the CSV stores it so any single
    matrix can be rebuilt without replaying earlier trials."""
    rng = rng_for(spec.master_seed, "edge-trial", int(trial))
    return int(rng.integers(0, 2**63 - 1))


def matrix_from_rng(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.N
    sigma = _sigma_table(spec.profile)
    dtype = complex if spec.beta == 2 else float
    w = np.zeros((n, n), dtype=dtype)
    iu = np.triu_indices(n, 1)
    w[iu] = _draw_offdiag(rng, spec.entry_law, spec.beta, iu[0].size)
    w = w + np.conj(w.T)
    np.fill_diagonal(w, _draw_diag(rng, spec.entry_law, spec.beta, n))
    x = sigma * w
    if spec.spike is not None:
        x = x + spec.spike.full_power(n, 1)
    return x


def matrix_from_seed(spec: EnsembleSpec, seed: int) -> np.ndarray:
    return matrix_from_rng(spec, np.random.default_rng(int(seed)))


def sample_matrix(spec: EnsembleSpec, trial: int) -> np.ndarray:
    """One draw of X = S * W + A with the trial's derived seed."""
    return matrix_from_seed(spec, trial_seed(spec, trial))


def ensemble_sampler(spec: EnsembleSpec):
    """Closure rng -> matrix, for estimators that manage their own seeding."""
    return lambda rng: matrix_from_rng(spec, rng)


# ---------------------------------------------------------------------------
# scaling regime


class ScalingInfo(NamedTuple):
    s_N: float
    gamma_N: float
    regime: str
    alpha: float
    bandwidth_ratio: float


def stable_index(profile: ProfileSpec) -> float:
    """Stability exponent of the profile's domain of attraction.

    Power-law tails u^(-T) land in the alpha = T - 1 domain when that is
    below two; every finite-variance profile maps to two.
    """
    if profile.kind == "AlphaStable":
        return float(profile.param("alpha"))
    if profile.kind == "PowerLawTail":
        return min(2.0, float(profile.param("T")) - 1.0)
    if profile.kind in ("Hankel", "Interpolated"):
        return stable_index(ProfileSpec.from_jsonable(profile.param("base")))
    return 2.0


def scaling_parameters(profile: ProfileSpec, alpha: float | None = None) -> ScalingInfo:
    """Edge scale s_N, intensity gamma_N, and the bandwidth regime.

    The dividing line is W = N^(1 - 1/(3 alpha)); at or above it the edge
    fluctuates on the N^(-2/3) scale, below it on W^(-2a/(3a-1)).
    """
    a = stable_index(profile) if alpha is None else float(alpha)
    if not 1.0 < a <= 2.0:
        raise ValidationError("stability exponent must lie in (1, 2]")
    n_states = profile.L ** profile.d
    w = float(profile.W)
    ratio = w / n_states ** (1.0 - 1.0 / (3.0 * a))
    if ratio >= 1.0:
        regime = "supercritical"
        s_n = n_states ** (-2.0 / 3.0)
    else:
        regime = "subcritical"
        s_n = w ** (-2.0 * a / (3.0 * a - 1.0))
    gamma_n = n_states * w ** (-3.0 * a / (3.0 * a - 1.0))
    return ScalingInfo(s_n, gamma_n, regime, a, ratio)


# ---------------------------------------------------------------------------
# edge observables


class EdgeObservables(NamedTuple):
    lambda_max: float
    rescaled: float
    ipr: float


def _matrix_digest(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x).tobytes()).hexdigest()[:16]


def top_eigenpair(x: np.ndarray) -> tuple[float, np.ndarray]:
    try:
        vals, vecs = np.linalg.eigh(x)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigensolver did not converge (matrix sha256 {_matrix_digest(x)})"
        ) from exc
    return float(vals[-1]), vecs[:, -1]


def edge_observables(x: np.ndarray, s_n: float) -> EdgeObservables:
    """Largest eigenvalue, its rescaling (lambda - 2) / s_N, and the inverse
    participation ratio of the top eigenvector."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValidationError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(x))))
    if np.max(np.abs(x - np.conj(x.T))) > 1e-12 * scale:
        raise ValidationError("matrix must be symmetric or Hermitian")
    if not s_n > 0:
        raise ValidationError("edge scale must be positive")
    lam, psi = top_eigenpair(x)
    ipr = float(np.sum(np.abs(psi) ** 4))
    return EdgeObservables(lam, (lam - 2.0) / s_n, ipr)


# ---------------------------------------------------------------------------
# sample sets


class EdgeRecord(NamedTuple):
    trial: int
    seed: int
    lambda_max: float
    rescaled: float
    ipr: float


_REQUIRED_META = ("spec_digest", "master_seed", "trials", "s_N", "gamma_N", "regime")

_CSV_HEADER = "trial,seed,lambda_max,rescaled,ipr"


def _sidecar_path(path: str) -> str:
    base = str(path)
    if base.endswith(".csv"):
        base = base[:-4]
    return base + ".meta.json"


@dataclass(frozen=True, eq=False)
class EdgeSampleSet:
    """Per-trial edge records plus the metadata needed to interpret them."""

    records: tuple
    metadata: dict

    def __post_init__(self):
        recs = tuple(EdgeRecord(*r) for r in self.records)
        object.__setattr__(self, "records", recs)
        missing = [k for k in _REQUIRED_META if k not in self.metadata]
        if missing:
            raise ValidationError(f"sample set metadata lacks {missing}")
        if len(recs) != int(self.metadata["trials"]):
            raise ValidationError(
                f"record count {len(recs)} does not match the requested "
                f"trials {self.metadata['trials']}"
            )
        s_n = float(self.metadata["s_N"])
        for r in recs:
            if abs(r.lambda_max - 2.0 - r.rescaled * s_n) > 1e-9 * (
                abs(r.lambda_max - 2.0) + s_n
            ):
                raise ValidationError(
                    f"trial {r.trial}: rescaled value inconsistent with s_N"
                )

    @property
    def lambda_max(self) -> np.ndarray:
        return np.array([r.lambda_max for r in self.records])

    @property
    def rescaled(self) -> np.ndarray:
        return np.array([r.rescaled for r in self.records])

    @property
    def ipr(self) -> np.ndarray:
        return np.array([r.ipr for r in self.records])

    def to_csv(self, path: str, comments: tuple = ()) -> None:
        lines = [f"# {c}" for c in comments]
        lines.append(_CSV_HEADER)
        for r in self.records:
            lines.append(
                f"{r.trial},{r.seed},{r.lambda_max!r},{r.rescaled!r},{r.ipr!r}"
            )
        atomic_write_text(str(path), "\n".join(lines) + "\n")
        atomic_write_json(_sidecar_path(path), self.metadata)

    @classmethod
    def from_csv(cls, path: str) -> "EdgeSampleSet":
        with open(_sidecar_path(path)) as fh:
            metadata = json.load(fh)
        records = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            while header and header[0].startswith("#"):
                header = next(reader, None)
            if header != _CSV_HEADER.split(","):
                raise ValidationError(f"unexpected edge sample header {header}")
            for row in reader:
                records.append(
                    EdgeRecord(
                        int(row[0]),
                        int(row[1]),
                        float(row[2]),
                        float(row[3]),
                        float(row[4]),
                    )
                )
        return cls(records=tuple(records), metadata=metadata)


def run_edge_samples(
    spec: EnsembleSpec,
    trials: int,
    s_n: float | None = None,
    threads: int = 1,
) -> EdgeSampleSet:
    """Collect per-trial edge observables.

    Trials use independent derived seeds and results are assembled in
    trial order, so the output is identical for any thread count.
    """
    trials = int(trials)
    if trials < 1:
        raise ValidationError("need at least one trial")
    scaling = scaling_parameters(spec.profile)
    scale = scaling.s_N if s_n is None else float(s_n)
    if not scale > 0:
        raise ValidationError("edge scale must be positive")

    def one(t: int) -> EdgeRecord:
        seed = trial_seed(spec, t)
        obs = edge_observables(matrix_from_seed(spec, seed), scale)
        return EdgeRecord(t, seed, obs.lambda_max, obs.rescaled, obs.ipr)

    if threads <= 1:
        records = [one(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            records = list(pool.map(one, range(trials)))

    metadata = {
        "format": "edge-samples/1",
        "spec_digest": spec.digest(),
        "spec": spec.to_jsonable(),
        "master_seed": spec.master_seed,
        "trials": trials,
        "s_N": scale,
        "s_N_source": "regime" if s_n is None else "explicit",
        "gamma_N": scaling.gamma_N,
        "regime": scaling.regime,
        "alpha": scaling.alpha,
        "bandwidth_ratio": scaling.bandwidth_ratio,
        "entry_theta": entry_moment_theta(spec.entry_law, spec.beta),
    }
    return EdgeSampleSet(records=tuple(records), metadata=metadata)


# ---------------------------------------------------------------------------
# audits


def power_iteration_lambda_max(
    x: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 50_000,
    seed: int = 0,
) -> float:
    """Largest eigenvalue by shifted power iteration, for cross-checking the
    dense eigensolver.  The shift by the max absolute row sum makes the top
    of the spectrum dominant."""
    x = np.asarray(x)
    n = x.shape[0]
    shift = float(np.max(np.sum(np.abs(x), axis=1)))
    v = rng_for(int(seed), "power-iteration").standard_normal(n)
    v /= np.linalg.norm(v)
    prev = math.inf
    for _ in range(int(max_iter)):
        u = x @ v + shift * v
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return -shift
        v = u / norm
        ray = float(np.real(np.vdot(v, x @ v)))
        if abs(ray - prev) <= tol * max(1.0, abs(ray)):
            return ray
        prev = ray
    return prev


class AuditResult(NamedTuple):
    n_audited: int
    max_z: float
    n_exceeding: int


def entry_variance_audit(
    spec: EnsembleSpec,
    trials: int = 200,
    fraction: float = 0.01,
    z_limit: float = 4.0,
) -> AuditResult:
    """Compare empirical entry variances against the profile table.

    A random 1 percent of index pairs (by default) is followed across
    trials; each audited entry's mean squared modulus is z-scored against
    its prescribed variance using the law's exact fourth moment.
    """
    if not 0 < fraction <= 1:
        raise ValidationError("audit fraction must lie in (0, 1]")
    n = spec.N
    trials = int(trials)
    if trials < 2:
        raise ValidationError("variance audit needs at least two trials")
    rng = rng_for(spec.master_seed, "variance-audit")
    m = max(1, round(fraction * n * n))
    ii = rng.integers(0, n, m)
    jj = rng.integers(0, n, m)
    acc = np.zeros(m)
    for t in range(trials):
        x = sample_matrix(spec, t)
        if spec.spike is not None:
            x = x - spec.spike.full_power(n, 1)
        acc += np.abs(x[ii, jj]) ** 2
    mean_sq = acc / trials

    p = _sigma_table(spec.profile) ** 2
    var = p[ii, jj].copy()
    diag = ii == jj
    var[diag] *= 2.0 / spec.beta
    m4_off = _offdiag_abs_moment_2k(spec.entry_law, spec.beta, 2)
    m4_diag = (2.0 / spec.beta) ** 2 * _real_abs_moment_2k(spec.entry_law, 2)
    noise_var = np.where(diag, m4_diag - (2.0 / spec.beta) ** 2, m4_off - 1.0)
    se = p[ii, jj] * np.sqrt(noise_var / trials)
    z = np.empty(m)
    exact = se == 0.0
    z[exact] = np.where(np.abs(mean_sq - var)[exact] <= 1e-12, 0.0, np.inf)
    z[~exact] = np.abs(mean_sq - var)[~exact] / se[~exact]
    return AuditResult(m, float(np.max(z)), int(np.sum(z > z_limit)))


# ---------------------------------------------------------------------------
# reference laws and distribution distance


@dataclass(frozen=True)
class ReferenceLaw:
    """A distribution with a vectorized CDF and known location and scale."""

    name: str
    cdf: Callable
    mean: float
    std: float


def gumbel_reference() -> ReferenceLaw:
    return ReferenceLaw(
        name="gumbel",
        cdf=lambda x: np.exp(-np.exp(-np.asarray(x, dtype=float))),
        mean=EULER_GAMMA,
        std=math.pi / math.sqrt(6.0),
    )


def uniform_reference() -> ReferenceLaw:
    return ReferenceLaw(
        name="uniform",
        cdf=lambda x: np.clip(np.asarray(x, dtype=float), 0.0, 1.0),
        mean=0.5,
        std=1.0 / math.sqrt(12.0),
    )


def gaussian_reference() -> ReferenceLaw:
    return ReferenceLaw(
        name="gaussian",
        cdf=lambda x: ndtr(np.asarray(x, dtype=float)),
        mean=0.0,
        std=1.0,
    )


@lru_cache(maxsize=2)
def tracy_widom_reference(beta: int) -> ReferenceLaw:
    """Table-backed largest-eigenvalue law for the invariant ensembles.

    The quantile table ships with the package; its sidecar records the
    moments of the generating sample.  Outside the tabulated range the
    CDF clamps to the end values.
    """
    if beta not in (1, 2):
        raise ValidationError("tabulated edge laws exist for beta 1 and 2")
    root = resources.files("markovband").joinpath("data")
    rows = np.loadtxt(
        str(root.joinpath(f"tw{beta}_quantiles.csv")), delimiter=",", skiprows=1
    )
    meta = json.loads(root.joinpath(f"tw{beta}_quantiles.meta.json").read_text())
    xs = np.ascontiguousarray(rows[:, 0])
    ps = np.ascontiguousarray(rows[:, 1])

    def cdf(x, xs=xs, ps=ps):
        return np.interp(np.asarray(x, dtype=float), xs, ps)

    return ReferenceLaw(
        name=f"tracy-widom-{beta}",
        cdf=cdf,
        mean=float(meta["mean"]),
        std=float(meta["std"]),
    )


def empirical_cdf(samples) -> Callable:
    """Right-continuous empirical distribution function."""
    data = np.sort(np.asarray(samples, dtype=float).ravel())
    if data.size == 0:
        raise ValidationError("empirical CDF needs at least one sample")

    def cdf(x, data=data):
        return np.searchsorted(data, np.asarray(x, dtype=float), side="right") / len(
            data
        )

    return cdf


def _ks_against_cdf(x: np.ndarray, cdf: Callable) -> float:
    # evaluate at the jump points and just below them, so a reference with
    # jumps (another empirical CDF) is compared exactly
    uniq, counts = np.unique(x, return_counts=True)
    cum = np.cumsum(counts)
    hi = cum / x.size
    lo = (cum - counts) / x.size
    f_hi = np.asarray(cdf(uniq), dtype=float)
    f_lo = np.asarray(cdf(np.nextafter(uniq, -np.inf)), dtype=float)
    return float(max(np.max(np.abs(hi - f_hi)), np.max(np.abs(lo - f_lo))))


def ks_distance(samples, reference, normalize: bool = False) -> float:
    """Kolmogorov distance between the sample ECDF and a reference law.

    With `normalize`, samples are standardized to mean zero and unit
    variance and compared against the standardized reference, which then
    must be a ReferenceLaw (a bare CDF has no location or scale).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValidationError("distribution distance needs at least two samples")
    if normalize:
        if not isinstance(reference, ReferenceLaw):
            raise ValidationError("normalized comparison needs a ReferenceLaw")
        sd = float(np.std(x, ddof=1))
        if sd == 0.0:
            raise ValidationError("cannot standardize zero-variance samples")
        z = (x - float(np.mean(x))) / sd
        ref = reference

        def cdf(y):
            return ref.cdf(ref.mean + ref.std * np.asarray(y, dtype=float))

        return _ks_against_cdf(z, cdf)
    cdf = reference.cdf if isinstance(reference, ReferenceLaw) else reference
    return _ks_against_cdf(x, cdf)


def cdf_sup_distance(
    law_a: ReferenceLaw,
    law_b: ReferenceLaw,
    lo: float = -10.0,
    hi: float = 10.0,
    points: int = 40_001,
) -> float:
    """Sup distance between two reference laws after standardizing both."""
    z = np.linspace(lo, hi, int(points))
    fa = np.asarray(law_a.cdf(law_a.mean + law_a.std * z), dtype=float)
    fb = np.asarray(law_b.cdf(law_b.mean + law_b.std * z), dtype=float)
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------------------
# deviation bounds


def deviation_bound_curve(n: int, n_states: int, b_n: float, ts, C: float, c: float):
    """Tail bound C n N b_n exp(C n^2 b_n - c n sqrt(t)) on P(|X| >= 2 + t)."""
    t = np.asarray(ts, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("deviation grid must be strictly positive")
    if n < 1 or n_states < 1 or b_n <= 0:
        raise ValidationError("need n >= 1, N >= 1 and b_n > 0")
    return C * n * n_states * b_n * np.exp(C * n * n * b_n - c * n * np.sqrt(t))


def deviation_exponents(alpha: float) -> tuple[float, float]:
    """Stretched exponents in t = W^(-2a/(3a-1)) y units: the proved decay
    exponent (3a-1)/(4a-2) and the conjectured sharp one (3a-1)/(2a)."""
    a = float(alpha)
    if not 1.0 < a <= 2.0:
        raise ValidationError("stability exponent must lie in (1, 2]")
    return (3 * a - 1) / (4 * a - 2), (3 * a - 1) / (2 * a)


def calibrate_deviation_bound(
    n: int,
    n_states: int,
    b_n: float,
    t_anchor: float,
    p_anchor: float,
    C: float = 1.0,
) -> tuple[float, float]:
    """Fix C and solve for the rate c that makes the bound pass through one
    empirical exceedance point (t_anchor, p_anchor)."""
    if not t_anchor > 0:
        raise ValidationError("anchor threshold must be positive")
    if not 0 < p_anchor <= 1:
        raise ValidationError("anchor probability must lie in (0, 1]")
    c = (C * n * n * b_n + math.log(C * n * n_states * b_n) - math.log(p_anchor)) / (
        n * math.sqrt(t_anchor)
    )
    return C, c
