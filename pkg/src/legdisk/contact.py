"""SL(2,C) curves: the Legendrian ODE, residuals, Darboux correspondence.

A holomorphic immersion X into SL(2,C) is Legendrian exactly when its
left logarithmic derivative X^{-1} X' is anti-diagonal; the two
anti-diagonal entries are the canonical one-form densities and are
encoded by the holomorphic data pair (phi1, phi2) through the
anti-diagonal matrix form M.  Curves are reconstructed from their data
by integrating

    X' = X * M(z),     X(base_point) = base_value,

along base->origin followed by radial spokes.  The right side is
polynomial, so path independence holds on the disk and angular sweeps
provide an independent cross-check.

Late-iteration data makes the induced metric enormous on the labyrinth
walls; there the true curve oscillates below any affordable resolution
and its entries overflow the double range within a few wall crossings.
Integration therefore carries a magnitude budget: spokes stop once
|X| exceeds `magnitude_cap` and the remaining nodes are masked invalid
(NaN).  All residual and determinant suprema are taken over valid
nodes, and determinant checks additionally report a tier restricted to
|X| <= DET_TIER_CAP where |det X - 1| is meaningful in doubles at the
1e-9 level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import json
import numpy as np

from .holo import (
    HoloFunction,
    HoloPair,
    eval_on_circles,
    evaluate,
    matrix_form,
    multiply,
    norm_bounds,
    pair_abs_on_circles,
    polyval_ascending,
    trim,
)

RESIDUAL_TOL = 1e-8
DET_TOL = 1e-9
MAGNITUDE_CAP = 3.0e3     # |X| beyond this is masked invalid
DET_TIER_CAP = 30.0       # |X| tier on which |det-1|<=1e-9 is float-meaningful

_ID = np.eye(2, dtype=np.complex128)


class IntegrationError(RuntimeError):
    """Step-size underflow or unmet tolerance."""


class BranchError(ValueError):
    """Input outside the principal-branch domain of the local inverse."""


class ConsistencyError(ValueError):
    """Matrix not in the image of the Darboux embedding."""


def matrix_norm(A: np.ndarray) -> float | np.ndarray:
    """Frobenius norm sqrt(trace(A A*)); >= sqrt(2) on SL(2,C)."""
    A = np.asarray(A)
    return np.sqrt(np.sum(np.abs(A) ** 2, axis=(-2, -1)))


def sl2_defect(A: np.ndarray) -> float | np.ndarray:
    """|det A - 1|."""
    A = np.asarray(A)
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    return np.abs(det - 1.0)


def inv2(A: np.ndarray) -> np.ndarray:
    """Inverse of 2x2 blocks via the adjugate (no LAPACK round trip)."""
    A = np.asarray(A)
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    out = np.empty_like(A)
    out[..., 0, 0] = A[..., 1, 1]
    out[..., 1, 1] = A[..., 0, 0]
    out[..., 0, 1] = -A[..., 0, 1]
    out[..., 1, 0] = -A[..., 1, 0]
    return out / det[..., None, None]


@dataclass(frozen=True)
class PolarGrid:
    """Polar sampling grid: radii ascending from 0, uniform angles."""

    radii: np.ndarray
    n_angles: int

    @classmethod
    def default(cls, nr: int = 96, na: int = 128) -> "PolarGrid":
        return cls(np.linspace(0.0, 1.0, nr), na)

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_angles) / self.n_angles

    def nodes(self) -> np.ndarray:
        return np.asarray(self.radii)[:, None] * np.exp(1j * self.angles)[None, :]


@dataclass
class LegendrianCurve:
    """Grid-sampled SL(2,C) curve plus the data that generated it."""

    pair: HoloPair
    base_point: complex
    base_value: np.ndarray
    grid: PolarGrid
    samples: np.ndarray          # (nr, na, 2, 2) complex, NaN where invalid
    valid: np.ndarray            # (nr, na) bool
    integration_error: float

    def value_at_base(self) -> np.ndarray:
        return np.array(self.base_value)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def _pair_matrix(pair, zs: np.ndarray) -> np.ndarray:
    """M(z) batched over flat complex points (any pair representation)."""
    v1, v2 = pair(zs)
    v1 = np.asarray(v1, dtype=np.complex128)
    v2 = np.asarray(v2, dtype=np.complex128)
    out = np.zeros(zs.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 1] = (v1 + 1j * v2) / np.sqrt(2.0)
    out[..., 1, 0] = (v1 - 1j * v2) / np.sqrt(2.0)
    return out


def rk_path(pair, z0: complex, X0: np.ndarray, z1: complex,
            tol: float = 1e-12, magnitude_cap: float = np.inf,
            max_steps: int = 2_000_000) -> np.ndarray:
    """Integrate X' = X M along the straight segment z0 -> z1."""
    Xs, ok = rk_path_batched(pair, np.array([z0]), X0[None, :, :],
                             np.array([z1]), tol, magnitude_cap, max_steps)
    if not ok[0]:
        raise IntegrationError("magnitude budget exceeded or step underflow")
    return Xs[0]


def rk_path_batched(pair, z0: np.ndarray, X0: np.ndarray,
                    z1: np.ndarray, tol: float = 1e-12,
                    magnitude_cap: float = np.inf,
                    max_steps: int = 2_000_000):
    """Vectorized adaptive Dormand-Prince along straight segments.

    Each lane integrates its own segment with its own step size; lanes
    whose |X| exceeds the budget (or whose step underflows) retire with
    ok=False.  Returns (X_end, ok).
    """
    n = z0.size
    dz = z1 - z0
    L = np.abs(dz)
    X = np.array(X0, dtype=np.complex128)
    s = np.zeros(n)                  # arclength parameter in [0, 1]
    h = np.full(n, 0.1)
    h[L > 0] = np.minimum(0.1, 0.5 / np.maximum(L[L > 0], 1e-30))
    ok = np.ones(n, dtype=bool)
    active = (L > 0) & ok
    steps = 0
    while np.any(active) and steps < max_steps:
        steps += 1
        idx = np.nonzero(active)[0]
        hh = np.minimum(h[idx], 1.0 - s[idx])
        # stage evaluations
        K = np.zeros((7, idx.size, 2, 2), dtype=np.complex128)
        z_here = z0[idx] + s[idx] * dz[idx]
        for i in range(7):
            Xi = X[idx].copy()
            for m, a in enumerate(_DP_A[i]):
                if a != 0.0:
                    Xi = Xi + (hh * a)[:, None, None] * K[m]
            zi = z_here + _DP_C[i] * hh * dz[idx]
            M = _pair_matrix(pair, zi)
            K[i] = np.einsum("nij,njk->nik", Xi, M) * dz[idx][:, None, None]
        X5 = X[idx] + hh[:, None, None] * np.tensordot(_DP_B5, K, axes=(0, 0))
        X4 = X[idx] + hh[:, None, None] * np.tensordot(_DP_B4, K, axes=(0, 0))
        scale = np.maximum(matrix_norm(X[idx]), 1.0)
        err = matrix_norm(X5 - X4) / (tol * scale)
        accept = err <= 1.0
        # update accepted lanes
        acc = idx[accept]
        X[acc] = X5[accept]
        s[acc] = s[acc] + hh[accept]
        # step control
        with np.errstate(divide="ignore"):
            fac = 0.9 * np.power(np.maximum(err, 1e-16), -0.2)
        fac = np.clip(fac, 0.2, 5.0)
        h[idx] = np.minimum(hh * fac, 1.0)
        under = idx[h[idx] * np.maximum(L[idx], 1.0) < 1e-14]
        ok[under] = False
        over = idx[matrix_norm(X[idx]) > magnitude_cap]
        ok[over] = False
        done = s >= 1.0 - 1e-15
        active = ~done & ok & (L > 0)
    if steps >= max_steps:
        raise IntegrationError("integrator exceeded its step budget")
    return X, ok


def integrate(pair, base_point: complex, base_value: np.ndarray,
              grid: PolarGrid, tol: float = 1e-12,
              magnitude_cap: float = MAGNITUDE_CAP,
              error_spokes: int = 4) -> LegendrianCurve:
    """Solve X' = X M over a polar grid from the base value.

    Path: base_point -> 0 along a segment, then radially outward along
    each spoke, recording node values.  A spoke is cut (masked) at the
    first node where |X| exceeds the magnitude budget.  The reported
    integration error is a step-halving style estimate: `error_spokes`
    sample spokes are re-integrated at tol/32 and compared, plus the
    double-precision floor eps * cap^2.
    """
    from .holo import norm_bounds_any
    norm_bounds_any(pair, 64)  # validates non-degeneracy
    radii = np.asarray(grid.radii, dtype=np.float64)
    na = grid.n_angles
    if abs(base_point) > 1.0 + 1e-12:
        raise ValueError("base point outside the closed unit disk")
    X_origin = np.array(base_value, dtype=np.complex128)
    if abs(base_point) > 0:
        X_origin = rk_path(pair, base_point, X_origin, 0.0, tol)

    nr = radii.size
    samples = np.full((nr, na, 2, 2), np.nan, dtype=np.complex128)
    valid = np.zeros((nr, na), dtype=bool)
    ang = np.exp(1j * grid.angles)
    X = np.repeat(X_origin[None, :, :], na, axis=0)
    alive = np.ones(na, dtype=bool)
    r_prev = 0.0
    if radii[0] == 0.0:
        samples[0, :] = X_origin
        valid[0, :] = True
        start = 1
    else:
        start = 0
    for i in range(start, nr):
        z0 = r_prev * ang
        z1 = radii[i] * ang
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        Xn, ok = rk_path_batched(pair, z0[idx], X[idx], z1[idx], tol,
                                 magnitude_cap)
        X[idx] = Xn
        alive[idx] = ok
        good = idx[ok]
        samples[i, good] = Xn[ok]
        valid[i, good] = True
        r_prev = radii[i]

    # step-halving style error estimate on sample spokes
    err = np.finfo(float).eps * magnitude_cap**2
    if error_spokes > 0 and nr > 1:
        sel = np.linspace(0, na - 1, min(error_spokes, na)).astype(int)
        for k in sel:
            rows = np.nonzero(valid[:, k])[0]
            if rows.size == 0:
                continue
            r_end = radii[rows[-1]]
            ref = rk_path(pair, 0.0, X_origin, r_end * ang[k], tol / 32.0)
            err = max(err, float(matrix_norm(samples[rows[-1], k] - ref)))
    return LegendrianCurve(pair, complex(base_point), np.array(base_value),
                           grid, samples, valid, err)


# ---------------------------------------------------------------------------
# residuals


def _full_rows(curve: LegendrianCurve) -> np.ndarray:
    ok = curve.valid.all(axis=1)
    ok[np.asarray(curve.grid.radii) == 0.0] = False
    return np.nonzero(ok)[0]


def legendrian_residual(curve: LegendrianCurve) -> float:
    """sup over checkable grid nodes of |diag(X^{-1} X')|.

    X' comes from spectral differentiation along fully valid circle
    rows (X' = dX/dtheta / (i z)); rows with masked nodes cannot be
    spectrally differentiated and are excluded.
    """
    return legendrian_residual_report(curve)["diag_sup"]


def legendrian_residual_report(curve: LegendrianCurve) -> dict:
    rows = _full_rows(curve)
    diag_sup = 0.0
    contact_sup = 0.0
    radii = np.asarray(curve.grid.radii)
    na = curve.grid.n_angles
    k = np.fft.fftfreq(na, d=1.0 / na)
    nodes = curve.grid.nodes()
    for i in rows:
        Xrow = curve.samples[i]                       # (na, 2, 2)
        dX = np.fft.ifft(1j * k[:, None, None]
                         * np.fft.fft(Xrow, axis=0), axis=0)
        Xp = dX / (1j * nodes[i])[:, None, None]
        psi = np.einsum("nij,njk->nik", inv2(Xrow), Xp)
        dd = np.sqrt(np.abs(psi[:, 0, 0]) ** 2 + np.abs(psi[:, 1, 1]) ** 2)
        diag_sup = max(diag_sup, float(dd.max()))
        contact_sup = max(contact_sup, float(np.abs(psi[:, 0, 0]).max()))
    return {
        "diag_sup": diag_sup,
        "contact_pullback_sup": contact_sup,   # = diag_sup / sqrt(2) algebraically
        "rows_checked": int(rows.size),
        "nodes_checked": int(rows.size * na),
    }


def det_report(curve: LegendrianCurve) -> dict:
    """Determinant drift over valid nodes, plus the well-conditioned tier."""
    v = curve.valid
    defect = sl2_defect(curve.samples[v]) if v.any() else np.zeros(0)
    mags = matrix_norm(curve.samples[v]) if v.any() else np.zeros(0)
    tier = mags <= DET_TIER_CAP
    return {
        "det_sup_valid": float(defect.max()) if defect.size else 0.0,
        "det_sup_tier": float(defect[tier].max()) if tier.any() else 0.0,
        "tier_nodes": int(tier.sum()),
        "valid_nodes": int(v.sum()),
    }


def fd_cross_check(curve: LegendrianCurve, n_samples: int = 100,
                   step: float = 1e-6) -> float:
    """Independent finite-difference check of anti-diagonality.

    Central differences of freshly integrated values at interior points
    of the smooth region; returns the sup of the diagonal part.
    """
    rows = _full_rows(curve)
    if rows.size == 0:
        return 0.0
    rng = np.random.default_rng(7)
    rs = np.asarray(curve.grid.radii)[rows]
    worst = 0.0
    for _ in range(n_samples):
        r = rng.uniform(0.05, min(0.9, rs.max() * 0.95))
        th = rng.uniform(0, 2 * np.pi)
        z = r * np.exp(1j * th)
        Xc = rk_path(curve.pair, curve.base_point, curve.value_at_base(), z)
        Xp_num = (rk_path(curve.pair, z, Xc, z + step)
                  - rk_path(curve.pair, z, Xc, z - step)) / (2 * step)
        psi = inv2(Xc) @ Xp_num
        worst = max(worst, float(np.sqrt(abs(psi[0, 0]) ** 2
                                         + abs(psi[1, 1]) ** 2)))
    return worst


# ---------------------------------------------------------------------------
# C^3 side and the Darboux correspondence


@dataclass
class C3Curve:
    """Legendrian curve in C^3 with components (F, G, H), dH = -F dG."""

    F: HoloFunction
    G: HoloFunction
    H: HoloFunction

    def __call__(self, z):
        return evaluate(self.F, z), evaluate(self.G, z), evaluate(self.H, z)


def contact_pullback_c3(curve: C3Curve, grid: PolarGrid | None = None) -> float:
    """sup over grid of |H' + F G'| (contact density along the curve)."""
    grid = grid or PolarGrid.default()
    zs = grid.nodes().ravel()
    from .holo import derivative
    Hp = polyval_ascending(derivative(curve.H).coeffs, zs)
    Gp = polyval_ascending(derivative(curve.G).coeffs, zs)
    Fv = polyval_ascending(curve.F.coeffs, zs)
    return float(np.abs(Hp + Fv * Gp).max())


def darboux_map(p) -> np.ndarray:
    """(x, y, z) in C^3 -> [[e^-z, x e^-z], [y e^z, e^z (1+xy)]]."""
    x, y, z = (np.asarray(v, dtype=np.complex128) for v in p)
    if np.any(np.abs(z.real) > 300.0):
        raise OverflowError("Re z too large for the exponential chart")
    ez = np.exp(z)
    out = np.empty(np.broadcast(x, y, z).shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = 1.0 / ez
    out[..., 0, 1] = x / ez
    out[..., 1, 0] = y * ez
    out[..., 1, 1] = ez * (1.0 + x * y)
    return out


def darboux_inverse(A: np.ndarray, consistency_tol: float = 1e-9):
    """Local inverse of the embedding near the identity.

    z = -Log m11 (principal branch), x = m12/m11, y = m21*m11; checks
    that m22 matches e^z (1+xy).
    """
    A = np.asarray(A, dtype=np.complex128)
    m11 = A[..., 0, 0]
    if np.any(m11 == 0) or np.any((m11.real <= 0) & (np.abs(m11.imag) < 1e-300)):
        raise BranchError("m11 on the closed negative real axis")
    z = -np.log(m11)
    x = A[..., 0, 1] / m11
    y = A[..., 1, 0] * m11
    m22 = np.exp(z) * (1.0 + x * y)
    defect = np.abs(A[..., 1, 1] - m22)
    if np.any(defect > consistency_tol):
        raise ConsistencyError(
            f"m22 mismatch {float(np.max(defect)):.3e} exceeds {consistency_tol:.1e}"
        )
    return x, y, z


def sl2_curve_from_c3(c3: C3Curve, grid: PolarGrid | None = None,
                      fit_degree: int | None = None) -> LegendrianCurve:
    """Grid curve X(z) with X^{-1}X' anti-diagonal lifted from (F, G, H).

    The chart sends the C^3 point (x1, x2, x3) = (G, F, H) through the
    exponential embedding; the transpose aligns it with the left
    logarithmic derivative convention used across this package (the
    untransposed embedding pairs with the right derivative).  The
    lift's one-form densities are omega' = e^{-2H} G' and
    theta' = e^{2H}(F' - F^2 G'); the attached data pair is their
    polynomial refit on the grid.
    """
    grid = grid or PolarGrid.default()
    zs = grid.nodes()
    Fv = polyval_ascending(c3.F.coeffs, zs)
    Gv = polyval_ascending(c3.G.coeffs, zs)
    Hv = polyval_ascending(c3.H.coeffs, zs)
    A = darboux_map((Gv, Fv, Hv))
    samples = np.swapaxes(A, -1, -2)
    from .holo import derivative
    Fp = polyval_ascending(derivative(c3.F).coeffs, zs)
    Gp = polyval_ascending(derivative(c3.G).coeffs, zs)
    omega = np.exp(-2.0 * Hv) * Gp
    theta = np.exp(2.0 * Hv) * (Fp - Fv**2 * Gp)
    if fit_degree is None:
        fit_degree = min(grid.n_angles - 2,
                         4 * (c3.F.degree + c3.G.degree + c3.H.degree) + 32)
    phi1 = fit_holofunction_on_grid((theta + omega) / np.sqrt(2.0), grid,
                                    fit_degree)
    phi2 = fit_holofunction_on_grid((theta - omega) / (1j * np.sqrt(2.0)), grid,
                                    fit_degree)
    base_value = samples[0, 0]
    valid = np.isfinite(samples).all(axis=(-2, -1))
    return LegendrianCurve(HoloPair(phi1, phi2), 0.0 + 0.0j, base_value, grid,
                           samples, valid, 0.0)


def fit_holofunction_on_grid(values: np.ndarray, grid: PolarGrid,
                             max_degree: int = 64) -> HoloFunction:
    """Least-squares polynomial fit of grid values, per-mode closed form.

    With full circle rows the monomials are orthogonal over each row,
    so the weighted normal equations decouple: for mode k,
    c_k = sum_i w_i r_i^k v_k(r_i) / sum_i w_i r_i^{2k}, where v_k(r_i)
    is the k-th angular Fourier coefficient of row i.
    """
    radii = np.asarray(grid.radii)
    na = grid.n_angles
    rows = radii > 0
    r = radii[rows]
    V = np.fft.fft(values[rows], axis=1) / na      # (nr, na) modes
    K = min(max_degree + 1, na)
    w = np.gradient(r) * r                          # area-ish row weights
    k = np.arange(K)
    rk = r[:, None] ** k[None, :]
    num = np.sum(w[:, None] * rk * V[:, :K], axis=0)
    den = np.sum(w[:, None] * rk**2, axis=0)
    return HoloFunction(trim(num / den, 1e-14), max(64, K - 1))


def curve_c3_from_sl2(curve: LegendrianCurve, max_degree: int = 64,
                      residual_tol: float = RESIDUAL_TOL) -> C3Curve:
    """Componentwise chart inverse of a Legendrian SL(2,C) grid curve.

    Applies the principal-branch inverse to the transposed samples and
    refits (F, G, H) as polynomials by per-mode least squares; the
    output satisfies the C^3 contact condition to `residual_tol`.
    """
    if not curve.valid.all():
        raise BranchError("curve has masked nodes; shrink the grid first")
    AT = np.swapaxes(curve.samples, -1, -2)
    x, y, z = darboux_inverse(AT)
    G = fit_holofunction_on_grid(x, curve.grid, max_degree)
    F = fit_holofunction_on_grid(y, curve.grid, max_degree)
    H = fit_holofunction_on_grid(z, curve.grid, max_degree)
    out = C3Curve(F, G, H)
    res = contact_pullback_c3(out, curve.grid)
    if res > residual_tol:
        raise ConsistencyError(
            f"refit contact residual {res:.3e} exceeds {residual_tol:.1e}"
        )
    return out


def induced_metric_density(pair, z):
    """Conformal factor sqrt(|phi1|^2 + |phi2|^2) of the curve metric."""
    v1, v2 = pair(z)
    return np.sqrt(np.abs(v1) ** 2 + np.abs(v2) ** 2)


# ---------------------------------------------------------------------------
# serialization: JSON header + little-endian float64 node block


def save_curve(curve: LegendrianCurve, path_json: str, path_bin: str) -> None:
    header = {
        "pair": curve.pair.to_json_obj(),
        "base_point": [curve.base_point.real, curve.base_point.imag],
        "base_value": [[curve.base_value[i, j].real, curve.base_value[i, j].imag]
                       for i in range(2) for j in range(2)],
        "radii": [float(r) for r in np.asarray(curve.grid.radii)],
        "n_angles": int(curve.grid.n_angles),
        "integration_error": float(curve.integration_error),
        "bin_file": path_bin.rsplit("/", 1)[-1],
        "layout": "row-major (radius, angle), 8 float64 per node: "
                  "re/im of m11, m12, m21, m22; NaN marks masked nodes",
    }
    with open(path_json, "w") as fh:
        json.dump(header, fh, sort_keys=True, indent=1)
        fh.write("\n")
    flat = curve.samples.reshape(-1, 2, 2)
    out = np.empty((flat.shape[0], 8), dtype="<f8")
    comps = flat.reshape(-1, 4)
    out[:, 0::2] = comps.real
    out[:, 1::2] = comps.imag
    with open(path_bin, "wb") as fh:
        fh.write(out.tobytes())


def load_curve(path_json: str, path_bin: str) -> LegendrianCurve:
    with open(path_json) as fh:
        header = json.load(fh)
    pair = HoloPair.from_json_obj(header["pair"])
    radii = np.array(header["radii"])
    na = int(header["n_angles"])
    grid = PolarGrid(radii, na)
    raw = np.frombuffer(open(path_bin, "rb").read(), dtype="<f8")
    raw = raw.reshape(radii.size, na, 4, 2)
    samples = (raw[..., 0] + 1j * raw[..., 1]).reshape(radii.size, na, 2, 2)
    bv = np.array([complex(re, im) for re, im in header["base_value"]]
                  ).reshape(2, 2)
    bp = complex(header["base_point"][0], header["base_point"][1])
    valid = np.isfinite(samples).all(axis=(-2, -1))
    return LegendrianCurve(pair, bp, bv, grid, samples, valid,
                           float(header["integration_error"]))
