"""Truncated power-series calculus on the closed unit disk.

All holomorphic functions in the pipeline are polynomials

    f(z) = c_0 + c_1 z + ... + c_d z^d,     |z| <= 1,

stored as an ascending complex coefficient vector with a hard degree
cap.  Functions holomorphic on the closed disk are uniformly
approximable by polynomials, every construction step (rotation, bump
multiplication, exponentials re-expanded by their Taylor recurrence)
keeps the representation polynomial, and the cap makes truncation error
an explicit, reported quantity instead of a hidden one.

Evaluation on polar rasters goes through per-radius FFTs: on the circle
of radius r the values of f are the inverse DFT of the scaled
coefficients c_k r^k.  That is the workhorse that keeps dense
certification affordable for the high-degree data produced late in the
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import next_fast_len

DEFAULT_DEGREE_CAP = 512

# below this, a pair is declared degenerate (common zero at grid resolution)
NU_MIN = 1e-9

_EVAL_TOL = 1e-12  # slack on |z| <= 1 for evaluate()


class DomainError(ValueError):
    """Evaluation point outside the closed unit disk."""


class DegeneratePairError(ValueError):
    """Holomorphic data with a (numerical) common zero."""


class TailBoundError(ValueError):
    """Series re-expansion whose truncation tail exceeds its budget."""


def _as_coeffs(c) -> np.ndarray:
    a = np.atleast_1d(np.asarray(c, dtype=np.complex128))
    if a.ndim != 1:
        raise ValueError("coefficient array must be one-dimensional")
    if a.size == 0:
        a = np.zeros(1, dtype=np.complex128)
    return a


def trim(c: np.ndarray, rel: float = 0.0) -> np.ndarray:
    """Drop trailing coefficients below `rel` times the max magnitude."""
    a = _as_coeffs(c)
    mags = np.abs(a)
    thr = rel * mags.max() if mags.max() > 0 else 0.0
    nz = np.nonzero(mags > thr)[0]
    if nz.size == 0:
        return np.zeros(1, dtype=np.complex128)
    return np.array(a[: nz[-1] + 1])


@dataclass
class HoloFunction:
    """Polynomial on the closed unit disk, ascending coefficients."""

    coeffs: np.ndarray
    degree_cap: int = DEFAULT_DEGREE_CAP

    def __post_init__(self):
        self.coeffs = _as_coeffs(self.coeffs)
        if self.coeffs.size > self.degree_cap + 1:
            raise ValueError(
                f"{self.coeffs.size - 1} exceeds degree cap {self.degree_cap}"
            )

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return evaluate(self, z)

    def to_json_obj(self) -> list:
        return [[float(c.real), float(c.imag)] for c in self.coeffs]

    @classmethod
    def from_json_obj(cls, obj, degree_cap: int | None = None) -> "HoloFunction":
        c = np.array([complex(re, im) for re, im in obj], dtype=np.complex128)
        cap = degree_cap if degree_cap is not None else max(DEFAULT_DEGREE_CAP, c.size - 1)
        return cls(c, cap)


def polyval_ascending(coeffs: np.ndarray, z) -> np.ndarray:
    """Evaluate an ascending-coefficient polynomial at scattered points.

    Plain Horner up to degree 1024; above that a two-level scheme,
    powers by exp(k log z) and a block matmul, which keeps the Python
    loop out of the integrator's hot path at degree ~10^4..10^5.
    """
    c = _as_coeffs(coeffs)
    zs = np.asarray(z, dtype=np.complex128)
    scalar = zs.ndim == 0
    zf = np.atleast_1d(zs).ravel()
    if c.size <= 1025:
        h = np.full_like(zf, c[-1])
        for ck in c[-2::-1]:
            h = h * zf + ck
        out = h
    else:
        B = 512
        kb = (c.size + B - 1) // B
        cp = np.zeros(kb * B, dtype=np.complex128)
        cp[: c.size] = c
        C = cp.reshape(kb, B)
        safe = np.where(zf == 0.0, 1.0, zf)
        lz = np.log(safe)
        P = np.exp(lz[:, None] * np.arange(B)[None, :])
        blockvals = P @ C.T                       # (pts, kb)
        Q = np.exp((B * lz)[:, None] * np.arange(kb)[None, :])
        out = np.sum(blockvals * Q, axis=1)
        out[zf == 0.0] = c[0]
    if scalar:
        return complex(out[0])
    return out.reshape(zs.shape)


def evaluate(f: HoloFunction, z):
    """f(z) for |z| <= 1 (small tolerance), nested evaluation."""
    zs = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(zs) > 1.0 + _EVAL_TOL):
        raise DomainError("evaluation point outside the closed unit disk")
    return polyval_ascending(f.coeffs, zs)


def derivative(f: HoloFunction) -> HoloFunction:
    c = f.coeffs
    if c.size == 1:
        return HoloFunction(np.zeros(1, dtype=np.complex128), f.degree_cap)
    k = np.arange(1, c.size)
    return HoloFunction(c[1:] * k, f.degree_cap)


def antiderivative(f: HoloFunction, cap: int | None = None) -> HoloFunction:
    """Primitive with value 0 at the origin."""
    c = f.coeffs
    k = np.arange(1, c.size + 1)
    out = np.concatenate([[0.0 + 0.0j], c / k])
    cap = cap if cap is not None else max(f.degree_cap, out.size - 1)
    return HoloFunction(out, cap)


def multiply(f: HoloFunction, g: HoloFunction, cap: int | None = None,
             trim_rel: float = 0.0) -> HoloFunction:
    """FFT product, truncated to `cap` (sum of degrees by default)."""
    a, b = f.coeffs, g.coeffs
    n = a.size + b.size - 1
    m = next_fast_len(n)
    fa = np.fft.fft(a, m)
    fb = np.fft.fft(b, m)
    c = np.fft.ifft(fa * fb)[:n]
    if trim_rel > 0:
        c = trim(c, trim_rel)
    if cap is not None and c.size > cap + 1:
        c = c[: cap + 1]
    cap_out = cap if cap is not None else max(f.degree_cap, g.degree_cap, c.size - 1)
    return HoloFunction(c, cap_out)


def exp_series(g: HoloFunction, cap: int, tail_budget: float = 1e-10,
               tail_probe: int = 128) -> tuple[HoloFunction, float]:
    """Taylor re-expansion of exp(g) as a polynomial, with tail bound.

    Uses the recurrence h' = g' h, h(0) = exp(g(0)), which yields exact
    Taylor coefficients of exp(g).  The reported tail bound is
    sum_{k>cap'} |c_k| over `tail_probe` probe coefficients past the
    adaptive truncation point; raises if it exceeds `tail_budget`
    relative to the value scale exp(max Re g(0-ish)).
    """
    gc = g.coeffs
    dg = gc.size - 1
    if dg == 0:
        return HoloFunction(np.array([np.exp(gc[0])]), cap), 0.0
    kgk = np.arange(1, dg + 1) * gc[1:]  # coefficients of g'
    n_max = cap + tail_probe
    h = np.zeros(n_max + 1, dtype=np.complex128)
    h[0] = np.exp(gc[0])
    # h_{n+1} = (1/(n+1)) sum_{m=0}^{min(n,dg-1)} (m+1) g_{m+1} h_{n-m}
    for n in range(n_max):
        m = min(n + 1, dg)
        h[n + 1] = np.dot(kgk[:m], h[n - m + 1 : n + 1][::-1]) / (n + 1)
    mags = np.abs(h)
    scale = max(mags.max(), 1.0)
    # adaptive truncation: last index still significant
    keep = np.nonzero(mags > 1e-17 * scale)[0]
    d_keep = min(cap, keep[-1] if keep.size else 0)
    tail = float(np.sum(mags[d_keep + 1 :]))
    if tail > tail_budget * scale:
        raise TailBoundError(
            f"exp re-expansion tail {tail:.3e} exceeds budget "
            f"{tail_budget * scale:.3e} at cap {cap}"
        )
    return HoloFunction(h[: d_keep + 1], cap), tail


def eval_on_circles(coeffs: np.ndarray, radii, n_angles: int,
                    row_chunk: int = 64) -> np.ndarray:
    """Values of the polynomial on circles |z| = r, FFT per radius.

    Returns an array of shape (len(radii), n_angles) with entries
    f(r_i * exp(2*pi*i*m/n_angles)).  `n_angles` must exceed the degree
    or angular aliasing folds the spectrum.
    """
    c = _as_coeffs(coeffs)
    if n_angles < c.size:
        raise ValueError(
            f"n_angles={n_angles} under-resolves degree {c.size - 1}"
        )
    rs = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    out = np.empty((rs.size, n_angles), dtype=np.complex128)
    k = np.arange(c.size)
    logr = np.where(rs > 0, np.log(np.maximum(rs, 1e-300)), -np.inf)
    for i0 in range(0, rs.size, row_chunk):
        sl = slice(i0, min(i0 + row_chunk, rs.size))
        # r^k via exp(k log r), r=0 handled separately
        with np.errstate(over="ignore", invalid="ignore"):
            scale = np.exp(np.outer(logr[sl], k))
        scale[rs[sl] == 0.0] = 0.0
        scale[rs[sl] == 0.0, 0] = 1.0
        scaled = scale * c[None, :]
        out[sl] = np.fft.ifft(scaled, n=n_angles, axis=1) * n_angles
    return out


@dataclass
class NormBounds:
    """Pointwise bounds 0 < nu <= |phi| <= m on the closed disk."""

    nu: float
    m: float

    def __post_init__(self):
        if not (0 < self.nu <= self.m):
            raise ValueError(f"invalid norm bounds nu={self.nu}, m={self.m}")


@dataclass
class HoloPair:
    """Holomorphic data (phi1, phi2) of a Legendrian curve."""

    phi1: HoloFunction
    phi2: HoloFunction

    def __call__(self, z):
        return evaluate(self.phi1, z), evaluate(self.phi2, z)

    @property
    def degree(self) -> int:
        return max(self.phi1.degree, self.phi2.degree)

    def omega_coeffs(self) -> np.ndarray:
        """Coefficient vector of the density of omega = (phi1 - i phi2)/sqrt2 dz."""
        n = max(self.phi1.coeffs.size, self.phi2.coeffs.size)
        a = np.zeros(n, dtype=np.complex128)
        a[: self.phi1.coeffs.size] += self.phi1.coeffs
        a[: self.phi2.coeffs.size] -= 1j * self.phi2.coeffs
        return a / np.sqrt(2.0)

    def theta_coeffs(self) -> np.ndarray:
        """Coefficient vector of the density of theta = (phi1 + i phi2)/sqrt2 dz."""
        n = max(self.phi1.coeffs.size, self.phi2.coeffs.size)
        a = np.zeros(n, dtype=np.complex128)
        a[: self.phi1.coeffs.size] += self.phi1.coeffs
        a[: self.phi2.coeffs.size] += 1j * self.phi2.coeffs
        return a / np.sqrt(2.0)

    def to_json_obj(self) -> dict:
        return {"phi1": self.phi1.to_json_obj(), "phi2": self.phi2.to_json_obj()}

    @classmethod
    def from_json_obj(cls, obj) -> "HoloPair":
        return cls(HoloFunction.from_json_obj(obj["phi1"]),
                   HoloFunction.from_json_obj(obj["phi2"]))


def pair(c1, c2, degree_cap: int = DEFAULT_DEGREE_CAP) -> HoloPair:
    return HoloPair(HoloFunction(c1, degree_cap), HoloFunction(c2, degree_cap))


def pair_abs_on_circles(p: HoloPair, radii, n_angles: int) -> np.ndarray:
    """|phi| = sqrt(|phi1|^2+|phi2|^2) on a polar raster, FFT rows."""
    v1 = eval_on_circles(p.phi1.coeffs, radii, n_angles)
    v2 = eval_on_circles(p.phi2.coeffs, radii, n_angles)
    return np.sqrt(np.abs(v1) ** 2 + np.abs(v2) ** 2)


def norm_bounds(p: HoloPair, grid_density: int = 64,
                nu_min: float = NU_MIN) -> NormBounds:
    """min / max of |phi| over a polar grid including the boundary circle.

    The grid has `grid_density` radii (0..1 inclusive) and at least
    4*grid_density angles; the angle count is raised to resolve the
    pair's degree so the boundary extremes are not aliased away.
    """
    if grid_density < 64:
        raise ValueError("grid_density must be at least 64")
    radii = np.linspace(0.0, 1.0, grid_density)
    n_angles = max(4 * grid_density, next_fast_len(2 * (p.degree + 1)))
    mags = pair_abs_on_circles(p, radii, n_angles)
    nu, m = float(mags.min()), float(mags.max())
    if nu < nu_min:
        raise DegeneratePairError(
            f"|phi| drops to {nu:.3e} (< {nu_min:.1e}); common zero at grid resolution"
        )
    return NormBounds(nu, m)


def matrix_form(p: HoloPair, z) -> np.ndarray:
    """Anti-diagonal matrix M(z) = (1/sqrt2) [[0, phi1+i phi2], [phi1-i phi2, 0]]."""
    v1, v2 = p(z)
    v1 = np.asarray(v1, dtype=np.complex128)
    v2 = np.asarray(v2, dtype=np.complex128)
    out = np.zeros(v1.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 1] = (v1 + 1j * v2) / np.sqrt(2.0)
    out[..., 1, 0] = (v1 - 1j * v2) / np.sqrt(2.0)
    return out


def rotate_pair(p: HoloPair, t: float) -> HoloPair:
    """Real rotation ((cos t) phi1 + (sin t) phi2, -(sin t) phi1 + (cos t) phi2).

    Pointwise |phi| is preserved for every t.
    """
    c, s = np.cos(t), np.sin(t)
    n = max(p.phi1.coeffs.size, p.phi2.coeffs.size)
    a = np.zeros(n, dtype=np.complex128)
    b = np.zeros(n, dtype=np.complex128)
    a[: p.phi1.coeffs.size] = p.phi1.coeffs
    b[: p.phi2.coeffs.size] = p.phi2.coeffs
    cap = max(p.phi1.degree_cap, p.phi2.degree_cap)
    return HoloPair(HoloFunction(c * a + s * b, cap),
                    HoloFunction(-s * a + c * b, cap))


def induced_density_coeffs(p: HoloPair):
    """(phi1, phi2) padded to common length, for |phi| evaluations."""
    n = max(p.phi1.coeffs.size, p.phi2.coeffs.size)
    a = np.zeros(n, dtype=np.complex128)
    b = np.zeros(n, dtype=np.complex128)
    a[: p.phi1.coeffs.size] = p.phi1.coeffs
    b[: p.phi2.coeffs.size] = p.phi2.coeffs
    return a, b


def pair_values_on_circles(p, radii, n_angles: int):
    """(phi1, phi2) rows on circles for either pair representation."""
    if isinstance(p, FactoredPair):
        return p.values_on_circles(radii, n_angles)
    v1 = eval_on_circles(p.phi1.coeffs, radii, n_angles)
    v2 = eval_on_circles(p.phi2.coeffs, radii, n_angles)
    return v1, v2


@dataclass
class BumpStep:
    """One corridor-bump modification: rotate by t, scale the second
    component by exp(g), rotate back."""

    t: float
    g: HoloFunction


@dataclass
class FactoredPair:
    """Holomorphic data stored as a base pair plus a bump-step chain.

    Late iteration data is a product of exponential bump factors whose
    flattened coefficients span ~e^20 in magnitude; evaluating that
    flattened polynomial at interior points loses ~8 digits to
    cancellation.  Keeping the chain factored makes every evaluation a
    stable composition of small-polynomial evaluations and exact
    exponentials, at the cost of evaluation time linear in the number
    of steps.
    """

    base: HoloPair
    steps: list

    @property
    def degree(self) -> int:
        d = self.base.degree
        for s in self.steps:
            d = max(d, s.g.degree)
        return d

    def pushed(self, step: BumpStep) -> "FactoredPair":
        return FactoredPair(self.base, self.steps + [step])

    def rescaled(self, r: float) -> "FactoredPair":
        """Data of z -> X(rz): base picks up the chain-rule factor r."""
        k1 = np.arange(self.base.phi1.coeffs.size)
        k2 = np.arange(self.base.phi2.coeffs.size)
        base = HoloPair(
            HoloFunction(self.base.phi1.coeffs * r ** (k1 + 1),
                         self.base.phi1.degree_cap),
            HoloFunction(self.base.phi2.coeffs * r ** (k2 + 1),
                         self.base.phi2.degree_cap),
        )
        steps = []
        for s in self.steps:
            kg = np.arange(s.g.coeffs.size)
            steps.append(BumpStep(s.t, HoloFunction(s.g.coeffs * r**kg,
                                                    s.g.degree_cap)))
        return FactoredPair(base, steps)

    def __call__(self, z):
        v1, v2 = self.base(z)
        v1 = np.asarray(v1, dtype=np.complex128)
        v2 = np.asarray(v2, dtype=np.complex128)
        for s in self.steps:
            c, sn = np.cos(s.t), np.sin(s.t)
            w1 = c * v1 + sn * v2
            w2 = -sn * v1 + c * v2
            w2 = w2 * np.exp(polyval_ascending(s.g.coeffs, z))
            v1 = c * w1 - sn * w2
            v2 = sn * w1 + c * w2
        return v1, v2

    def values_on_circles(self, radii, n_angles: int):
        v1, v2 = pair_values_on_circles(self.base, radii, n_angles)
        for s in self.steps:
            c, sn = np.cos(s.t), np.sin(s.t)
            w1 = c * v1 + sn * v2
            w2 = -sn * v1 + c * v2
            w2 = w2 * np.exp(eval_on_circles(s.g.coeffs, radii, n_angles))
            v1 = c * w1 - sn * w2
            v2 = sn * w1 + c * w2
        return v1, v2

    def to_json_obj(self) -> dict:
        return {
            "base": self.base.to_json_obj(),
            "steps": [{"t": s.t, "g": s.g.to_json_obj()}
                      for s in self.steps],
        }

    @classmethod
    def from_json_obj(cls, obj) -> "FactoredPair":
        steps = [BumpStep(d["t"], HoloFunction.from_json_obj(d["g"]))
                 for d in obj["steps"]]
        return cls(HoloPair.from_json_obj(obj["base"]), steps)


def pair_abs_on_circles_any(p, radii, n_angles: int) -> np.ndarray:
    v1, v2 = pair_values_on_circles(p, radii, n_angles)
    return np.sqrt(np.abs(v1) ** 2 + np.abs(v2) ** 2)


def norm_bounds_any(p, grid_density: int = 64, nu_min: float = NU_MIN,
                    n_angles: int | None = None) -> NormBounds:
    """norm_bounds for either pair representation."""
    if isinstance(p, HoloPair):
        return norm_bounds(p, grid_density, nu_min)
    radii = np.linspace(0.0, 1.0, grid_density)
    if n_angles is None:
        n_angles = max(4 * grid_density, next_fast_len(2 * (p.degree + 1)))
    mags = pair_abs_on_circles_any(p, radii, n_angles)
    nu, m = float(mags.min()), float(mags.max())
    if nu < nu_min:
        raise DegeneratePairError(
            f"|phi| drops to {nu:.3e} (< {nu_min:.1e})"
        )
    return NormBounds(nu, m)
