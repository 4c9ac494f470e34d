"""Variance-profile transition kernels on the discrete torus.

A ProfileSpec names a one-step variance profile (band shapes, block
couplings, reflected bands, convex mixes with the flat kernel); building
it yields a TorusChain, a symmetric stochastic kernel stored through its
structure (first row, reflected row, reduced block kernel, or a dense
table) with n-step evaluation by FFT plus a dense-power oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ._util import FeasibilityError, ValidationError
from . import special

_BAND_KINDS = ("AlphaStable", "PowerLawTail", "TruncatedGaussian", "Tabulated")
_ALL_KINDS = _BAND_KINDS + ("Hankel", "WegnerBlock", "Interpolated")

TRUNCATED_GAUSSIAN_RADIUS = 6.0  # support radius in units of sigma
DENSE_CAP = 4096


def _freeze(obj):
    if isinstance(obj, dict):
        return tuple(sorted((str(k), _freeze(v)) for k, v in obj.items()))
    if isinstance(obj, (list, tuple, np.ndarray)):
        return tuple(_freeze(v) for v in obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _thaw(obj):
    if isinstance(obj, tuple) and all(
        isinstance(e, tuple) and len(e) == 2 and isinstance(e[0], str) for e in obj
    ):
        return {k: _thaw(v) for k, v in obj}
    if isinstance(obj, tuple):
        return [_thaw(v) for v in obj]
    return obj


@dataclass(frozen=True)
class ProfileSpec:
    """Declarative description of a variance profile.

    ``params`` is stored in a frozen canonical form so specs are hashable
    (cache keys) and JSON round-trips are exact.
    """

    kind: str
    d: int
    L: int
    W: int
    params: tuple

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise ValidationError(f"unknown profile kind {self.kind!r}")
        if int(self.d) < 1:
            raise ValidationError("dimension must be >= 1")
        if int(self.L) < 2:
            raise ValidationError("torus side must be >= 2")
        if not 1 <= int(self.W) or 2 * int(self.W) > int(self.L):
            raise ValidationError(
                f"bandwidth must be an integer in [1, L/2], got W={self.W}, L={self.L}"
            )

    @property
    def param_dict(self) -> dict:
        return _thaw(self.params)

    def param(self, name):
        return self.param_dict[name]

    # -- constructors ----------------------------------------------------

    @classmethod
    def alpha_stable(cls, alpha: float, L: int, W: int, scale: float | None = None,
                     d: int = 1) -> "ProfileSpec":
        alpha = float(alpha)
        if not 0.0 < alpha <= 2.0:
            raise ValidationError("stability exponent must lie in (0, 2]")
        c = special.default_scale(alpha) if scale is None else float(scale)
        if c <= 0:
            raise ValidationError("scale must be positive")
        return cls("AlphaStable", d, int(L), int(W),
                   _freeze({"alpha": alpha, "scale": c}))

    @classmethod
    def power_law(cls, T: float, L: int, W: int, scale: float = 1.0,
                  d: int = 1) -> "ProfileSpec":
        if float(T) <= d:
            raise ValidationError("tail exponent must exceed the dimension")
        if float(scale) <= 0:
            raise ValidationError("scale must be positive")
        return cls("PowerLawTail", d, int(L), int(W),
                   _freeze({"T": float(T), "scale": float(scale)}))

    @classmethod
    def truncated_gaussian(cls, sigma: float, L: int, W: int, d: int = 1
                           ) -> "ProfileSpec":
        if float(sigma) <= 0:
            raise ValidationError("sigma must be positive")
        return cls("TruncatedGaussian", d, int(L), int(W),
                   _freeze({"sigma": float(sigma)}))

    @classmethod
    def tabulated(cls, values, L: int, W: int | None = None, d: int = 1
                  ) -> "ProfileSpec":
        vals = [float(v) for v in values]
        if len(vals) != int(L):
            raise ValidationError("tabulated profile must list one value per state")
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise ValidationError("tabulated profile values must be finite and >= 0")
        if sum(vals) <= 0:
            raise ValidationError("tabulated profile must carry positive mass")
        W = max(1, int(L) // 2) if W is None else int(W)
        return cls("Tabulated", d, int(L), W, _freeze({"values": vals}))

    @classmethod
    def flat(cls, L: int, d: int = 1) -> "ProfileSpec":
        return cls.tabulated([1.0] * int(L), L, d=d)

    @classmethod
    def hankel(cls, base: "ProfileSpec", x0: int) -> "ProfileSpec":
        if base.kind not in _BAND_KINDS:
            raise ValidationError("reflected profiles need a banded base")
        return cls("Hankel", base.d, base.L, base.W,
                   _freeze({"base": base.to_jsonable(), "x0": int(x0) % base.L}))

    @classmethod
    def wegner(cls, D: int, d: int, M: int, lam: float) -> "ProfileSpec":
        if int(D) < 2:
            raise ValidationError("block torus side must be >= 2")
        if int(M) < 1:
            raise ValidationError("block size must be >= 1")
        if not 0.0 <= float(lam) < 1.0:
            raise ValidationError("coupling must lie in [0, 1)")
        return cls("WegnerBlock", int(d), int(D), 1,
                   _freeze({"D": int(D), "M": int(M), "lam": float(lam)}))

    @classmethod
    def interpolated(cls, base: "ProfileSpec", lam: float) -> "ProfileSpec":
        if not 0.0 <= float(lam) <= 1.0:
            raise ValidationError("interpolation weight must lie in [0, 1]")
        return cls("Interpolated", base.d, base.L, base.W,
                   _freeze({"base": base.to_jsonable(), "lam": float(lam)}))

    # -- serialization ---------------------------------------------------

    def to_jsonable(self) -> dict:
        return {"kind": self.kind, "d": self.d, "L": self.L, "W": self.W,
                "params": self.param_dict}

    @classmethod
    def from_jsonable(cls, obj: dict) -> "ProfileSpec":
        if set(obj) != {"kind", "d", "L", "W", "params"}:
            raise ValidationError(f"profile object must have keys kind/d/L/W/params, "
                                  f"got {sorted(obj)}")
        return cls(str(obj["kind"]), int(obj["d"]), int(obj["L"]), int(obj["W"]),
                   _freeze(obj["params"]))

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProfileSpec":
        return cls.from_jsonable(json.loads(text))


class TorusChain(NamedTuple):
    """Symmetric stochastic kernel with structure-aware storage.

    structure is one of "translation_invariant" (row = first row),
    "reflective" (row = displacement table, x0 = reflection center),
    "block" (reduced = kernel on the cell torus, block_size = M), and
    "dense" (dense = full table). Stored arrays are read-only.
    """

    spec: ProfileSpec | None
    structure: str
    n_states: int
    row: np.ndarray | None = None
    x0: int | None = None
    reduced: "TorusChain | None" = None
    block_size: int | None = None
    dense: np.ndarray | None = None

    def row_of(self, x: int) -> np.ndarray:
        x = int(x) % self.n_states
        if self.structure == "translation_invariant":
            return np.roll(self.row, x)
        if self.structure == "reflective":
            idx = (x + np.arange(self.n_states) - self.x0) % self.n_states
            return self.row[idx]
        if self.structure == "block":
            M = self.block_size
            cell_row = self.reduced.row_of(x // M)
            return np.repeat(cell_row / M, M)
        return self.dense[x].copy()

    def matrix(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.n_states > cap:
            raise FeasibilityError(
                f"dense kernel for N={self.n_states} exceeds the cap {cap}",
                cost=float(self.n_states) ** 2,
            )
        if self.structure == "dense":
            return self.dense.copy()
        return np.stack([self.row_of(x) for x in range(self.n_states)])


def _lock(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _validate_chain(chain: TorusChain) -> TorusChain:
    if chain.structure in ("translation_invariant", "reflective"):
        r = chain.row
        if r.ndim != 1 or r.size != chain.n_states:
            raise ValidationError("row table must have one entry per state")
        if np.any(r < 0):
            raise ValidationError("kernel entries must be nonnegative")
        if abs(float(r.sum()) - 1.0) > 1e-12:
            raise ValidationError("row mass must equal 1 within 1e-12")
        mirror = np.roll(r[::-1], 1)  # index m -> (N - m) mod N
        if not np.array_equal(r, mirror):
            raise ValidationError("displacement table must be exactly symmetric")
    elif chain.structure == "block":
        if chain.block_size < 1:
            raise ValidationError("block size must be >= 1")
        _validate_chain(chain.reduced)
    elif chain.structure == "dense":
        m = chain.dense
        if m.shape != (chain.n_states, chain.n_states):
            raise ValidationError("dense kernel must be square")
        if np.any(m < 0):
            raise ValidationError("kernel entries must be nonnegative")
        if not np.array_equal(m, m.T):
            raise ValidationError("dense kernel must be exactly symmetric")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-12:
            raise ValidationError("row mass must equal 1 within 1e-12")
    else:
        raise ValidationError(f"unknown structure {chain.structure!r}")
    return chain


def chain_from_dense(matrix, spec: ProfileSpec | None = None) -> TorusChain:
    """Wrap an explicit symmetric stochastic table as a Dense chain."""
    m = np.asarray(matrix, dtype=float)
    m = 0.5 * (m + m.T)  # exact symmetrization of roundoff
    m = m / m.sum(axis=1, keepdims=True)
    m = 0.5 * (m + m.T)
    return _validate_chain(
        TorusChain(spec, "dense", m.shape[0], dense=_lock(m))
    )


# ---------------------------------------------------------------------------
# Band tables
# ---------------------------------------------------------------------------


class _PowerTailProfile:
    """f(u) = 1 / (1 + |u/s|^T) with series tail calculus for |u|/s >= 2."""

    def __init__(self, T: float, s: float):
        self.T = T
        self.s = s
        self.jj = np.arange(1, 61, dtype=float)

    def density(self, u):
        y = np.abs(np.asarray(u, dtype=float)) / self.s
        return 1.0 / (1.0 + y**self.T)

    def _series(self, y, expo_shift, factor_fn):
        sign = np.where(self.jj % 2 == 1, 1.0, -1.0)
        out = np.zeros_like(y)
        for j, sg in zip(self.jj, sign):
            out += sg * factor_fn(j) * y ** (-self.T * j + expo_shift)
        return out

    def density_deriv(self, u, order: int):
        # valid for |u|/s >= 2 only; termwise derivative of sum (-1)^(j+1) y^(-Tj)
        y = np.abs(np.asarray(u, dtype=float)) / self.s
        T = self.T

        def fac(j):
            f = 1.0
            for i in range(order):
                f *= -(T * j + i)
            return f

        return self._series(y, -order, fac) / self.s**order

    def survival(self, u):
        y = np.abs(np.asarray(u, dtype=float)) / self.s
        return self.s * self._series(y, 1.0, lambda j: 1.0 / (self.T * j - 1.0))


def _periodized_band_table(spec: ProfileSpec) -> np.ndarray:
    """Displacement table t[m] = sum_k f((m + kL) / W), exactly mirrored."""
    L, W = spec.L, spec.W
    half = np.arange(L // 2 + 1, dtype=float)

    if spec.kind == "AlphaStable":
        alpha = spec.param("alpha")
        c = spec.param("scale")
        # the periodization of the unit stable density over step L/W is the
        # theta function at tau = (W/L)^alpha, up to one global factor
        tau = (W / L) ** alpha
        vals = special.theta_alpha(alpha, half / L, tau, scale=c, route="spatial")
    elif spec.kind == "TruncatedGaussian":
        sigma = spec.param("sigma")
        radius = TRUNCATED_GAUSSIAN_RADIUS * sigma
        kmax = int(math.ceil((radius * W + L / 2) / L)) + 1
        ks = np.arange(-kmax, kmax + 1, dtype=float)
        args = np.abs(half[:, None] + ks[None, :] * L) / W
        f = np.where(args <= radius, np.exp(-(args**2) / (2 * sigma**2)), 0.0)
        vals = f.sum(axis=1)
    elif spec.kind == "PowerLawTail":
        T = spec.param("T")
        s = spec.param("scale")
        prof = _PowerTailProfile(T, s)
        u = L / (s * W)  # lattice step in units of the profile scale
        c3 = T * (T + 1) * (T + 2)
        K = max(
            int(math.ceil((c3 * u**3 / (720.0 * 1e-16)) ** (1.0 / (T + 3)) / u)),
            int(math.ceil(2.0 / u)) + 1,
            4,
        )
        ks = np.arange(-K, K + 1, dtype=float)
        args = (half[:, None] + ks[None, :] * L) / W
        vals = prof.density(args).sum(axis=1)
        for x in (half / L, -half / L):
            a = float(K + 1)
            v = (x + a) * L / W
            vals += (
                prof.survival(v) * W / L
                + 0.5 * prof.density(v)
                - (L / W) * prof.density_deriv(v, 1) / 12.0
                + (L / W) ** 3 * prof.density_deriv(v, 3) / 720.0
            )
    elif spec.kind == "Tabulated":
        vals = np.asarray(spec.param("values"), dtype=float)
        full = vals.copy()
        if not np.array_equal(full, np.roll(full[::-1], 1)):
            raise ValidationError("tabulated profile must be symmetric on the torus")
        return full
    else:  # pragma: no cover
        raise ValidationError(spec.kind)

    full = np.empty(L)
    full[: L // 2 + 1] = vals
    full[L // 2 + 1 :] = vals[1 : (L + 1) // 2][::-1]  # exact mirror t[L-m] = t[m]
    return full


def _lazy_walk_row(D: int, d: int, lam: float) -> np.ndarray:
    """One-step table of the lazy nearest-neighbor walk on (Z/D)^d."""
    row = np.zeros((D,) * d)
    row[(0,) * d] = 1.0 - lam
    for axis in range(d):
        for step in (+1, -1):
            idx = [0] * d
            idx[axis] = step % D
            row[tuple(idx)] += lam / (2 * d)
    return row.ravel()


def build_variance_profile(spec: ProfileSpec) -> TorusChain:
    """Realize a ProfileSpec as a TorusChain.

    Band kinds produce a translation-invariant chain from the wrapped
    profile table; Hankel reflects its base table around x0; WegnerBlock
    yields the reduced lazy walk tensored with the uniform block average;
    Interpolated mixes the base with the flat kernel (every structure tag
    is closed under that mix). Rows are renormalized exactly.
    """
    if spec.kind in _BAND_KINDS:
        if spec.d != 1:
            raise ValidationError("banded profiles are implemented for d = 1")
        t = _periodized_band_table(spec)
        t = t / t.sum()
        return _validate_chain(
            TorusChain(spec, "translation_invariant", spec.L, row=_lock(t))
        )
    if spec.kind == "Hankel":
        base = ProfileSpec.from_jsonable(spec.param("base"))
        inner = build_variance_profile(base)
        return _validate_chain(
            TorusChain(spec, "reflective", spec.L, row=inner.row,
                       x0=int(spec.param("x0")))
        )
    if spec.kind == "WegnerBlock":
        D, M, lam = spec.param("D"), spec.param("M"), spec.param("lam")
        row = _lazy_walk_row(D, spec.d, lam)
        reduced = _validate_chain(
            TorusChain(None, "translation_invariant", D**spec.d, row=_lock(row))
        )
        return _validate_chain(
            TorusChain(spec, "block", M * D**spec.d, reduced=reduced, block_size=M)
        )
    if spec.kind == "Interpolated":
        base = ProfileSpec.from_jsonable(spec.param("base"))
        lam = spec.param("lam")
        inner = build_variance_profile(base)
        return _mix_with_flat(inner, lam, spec)
    raise ValidationError(f"unknown profile kind {spec.kind!r}")  # pragma: no cover


def _mix_with_flat(chain: TorusChain, lam: float, spec: ProfileSpec) -> TorusChain:
    N = chain.n_states
    if chain.structure in ("translation_invariant", "reflective"):
        mixed = (1.0 - lam) * chain.row + lam / N
        mixed = _exact_symmetrize(mixed)
        return _validate_chain(chain._replace(spec=spec, row=_lock(mixed)))
    if chain.structure == "block":
        ncells = chain.reduced.n_states
        rrow = (1.0 - lam) * chain.reduced.row + lam / ncells
        rrow = _exact_symmetrize(rrow)
        reduced = _validate_chain(chain.reduced._replace(row=_lock(rrow)))
        return _validate_chain(chain._replace(spec=spec, reduced=reduced))
    mixed = (1.0 - lam) * chain.dense + lam / N
    return _validate_chain(chain._replace(spec=spec, dense=_lock(mixed)))


def _exact_symmetrize(row: np.ndarray) -> np.ndarray:
    out = row.copy()
    N = out.size
    out[N // 2 + 1 :] = out[1 : (N + 1) // 2][::-1]
    return out


@lru_cache(maxsize=64)
def cached_chain(spec: ProfileSpec) -> TorusChain:
    return build_variance_profile(spec)


# ---------------------------------------------------------------------------
# n-step kernels
# ---------------------------------------------------------------------------


def _fft_power_row(row: np.ndarray, n: int, shape: tuple) -> np.ndarray:
    grid = row.reshape(shape)
    hat = np.fft.fftn(grid)
    out = np.fft.ifftn(hat**n).real.ravel()
    bad = out < -1e-12
    if bad.any():
        raise ValidationError(
            f"FFT power produced a negative probability {out.min():.3e}"
        )
    out[out < 0.0] = 0.0
    return out / out.sum()


def n_step_fft(chain: TorusChain, n: int) -> np.ndarray:
    """p_n(0, .) for translation-invariant structure via DFT of the row.

    Block chains go through their reduced kernel and spread uniformly
    over each block. Tiny negative round-off (>= -1e-12) is clamped to 0
    and the row renormalized; anything more negative raises.
    """
    n = int(n)
    if n < 0:
        raise ValidationError("step count must be >= 0")
    if chain.structure == "translation_invariant":
        if n == 0:
            out = np.zeros(chain.n_states)
            out[0] = 1.0
            return out
        shape = _grid_shape(chain)
        return _fft_power_row(np.asarray(chain.row), n, shape)
    if chain.structure == "block":
        M = chain.block_size
        if n == 0:
            out = np.zeros(chain.n_states)
            out[0] = 1.0
            return out
        cell = n_step_fft(chain.reduced, n)
        return np.repeat(cell / M, M)
    raise ValidationError(
        f"FFT stepping needs translation invariance, got {chain.structure!r}"
    )


def _grid_shape(chain: TorusChain) -> tuple:
    if chain.spec is not None and chain.spec.kind == "WegnerBlock":
        return (chain.spec.param("D"),) * chain.spec.d
    d = 1 if chain.spec is None else chain.spec.d
    if d == 1:
        return (chain.n_states,)
    side = round(chain.n_states ** (1.0 / d))
    if side**d != chain.n_states:
        raise ValidationError("state count is not a d-dimensional torus")
    return (side,) * d


def n_step_power(chain: TorusChain, n: int, x: int, cap: int = DENSE_CAP
                 ) -> np.ndarray:
    """Row x of the n-step kernel by repeated dense multiplication.

    The brute-force oracle: works for every structure tag, refuses state
    counts above ``cap`` with the estimated flop cost attached.
    """
    n = int(n)
    if n < 0:
        raise ValidationError("step count must be >= 0")
    N = chain.n_states
    if N > cap:
        raise FeasibilityError(
            f"dense stepping for N={N} exceeds the cap {cap}",
            cost=float(N) ** 2 * max(n, 1),
        )
    P = chain.matrix(cap=cap)
    v = np.zeros(N)
    v[int(x) % N] = 1.0
    for _ in range(n):
        v = v @ P
    return v


class HankelStepResult(NamedTuple):
    row: np.ndarray
    center: int


def hankel_step(chain: TorusChain, n: int, x: int) -> HankelStepResult:
    """n-step row of a reflected (Hankel) chain by the frequency recursion.

    One step maps the transform phi(k) to t_hat(k) w^(k x0) phi(-k)
    (w the DFT root), so odd steps keep the reflection and even steps
    reduce to a plain symmetric walk. The reported center is where the
    walk concentrates: x for even n, x0 - x for odd n.
    """
    if chain.structure != "reflective":
        raise ValidationError("frequency stepping needs a reflective chain")
    n = int(n)
    if n < 0:
        raise ValidationError("step count must be >= 0")
    L = chain.n_states
    x = int(x) % L
    that = np.fft.fft(np.asarray(chain.row))
    phase = np.exp(-2j * np.pi * np.arange(L) * chain.x0 / L)
    phi = np.exp(-2j * np.pi * np.arange(L) * x / L)
    rev = (-np.arange(L)) % L  # index map k -> -k
    for _ in range(n):
        phi = that * phase * phi[rev]
    row = np.fft.ifft(phi).real
    bad = row < -1e-12
    if bad.any():
        raise ValidationError(
            f"frequency stepping produced a negative probability {row.min():.3e}"
        )
    row[row < 0.0] = 0.0
    row = row / row.sum()
    center = x if n % 2 == 0 else (chain.x0 - x) % L
    return HankelStepResult(row, center)


def wegner_block_kernel(D: int, d: int, lam: float, n: int) -> np.ndarray:
    """n-step table of the lazy nearest-neighbor block walk, shape (D,)*d."""
    D, d, n = int(D), int(d), int(n)
    if D < 2:
        raise ValidationError("block torus side must be >= 2")
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    if not 0.0 <= float(lam) < 1.0:
        raise ValidationError("coupling must lie in [0, 1)")
    if n < 0:
        raise ValidationError("step count must be >= 0")
    if n == 0:
        out = np.zeros((D,) * d)
        out[(0,) * d] = 1.0
        return out
    row = _lazy_walk_row(D, d, float(lam))
    return _fft_power_row(row, n, (D,) * d).reshape((D,) * d)


def export_kernel_csv(chain: TorusChain, path: str, cap: int = DENSE_CAP) -> None:
    """Write the full kernel as rows "x,y,p" (row-major)."""
    P = chain.matrix(cap=cap)
    N = chain.n_states
    with open(path, "w") as fh:
        fh.write("x,y,p\n")
        for i in range(N):
            for j in range(N):
                fh.write(f"{i},{j},{float(P[i, j])!r}\n")
