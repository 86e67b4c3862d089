"""Annular labyrinth geometry: circles, rays, cells, combs.

For an integer N >= 4 the outer annulus  1 - 2/N <= |z| <= 1  is cut by

  * concentric circles of radius  r_k = 1 - k/N^3,  k = 0 .. 2N^2,
  * 2N rays at angles  j*pi/N,  j = 0 .. 2N-1,

into rings of radial width 1/N^3.  Rings alternate between two
families: even rings (counted from the boundary) are blocked by the
even rays, odd rings by the odd rays.  Removing the open band of
halfwidth  delta = 1/(4N^3)  around every circle and around the
blocking rays of each ring leaves the compact cell set Omega whose
connected components are annular-sector cells of radial width
1/(2N^3) spanning the 2*pi/N gap between consecutive blocking rays.

The j-th comb (j = 1 .. 2N) is the ray segment at angle j*pi/N across
the annulus, together with the cells it threads: each cell is centered
on exactly one ray and belongs to that ray's comb.  `classify` decides
all memberships by exact circle/ray distance formulas and sector index
arithmetic; no flood fill is involved (a flood-fill oracle lives in the
test suite as the independent cross-check).

Membership conventions at measure-zero ties: a cell belongs to a ray
only if the ray's angle is strictly inside the cell's angular interval
widened by the band halfwidth; exact tangency does not count.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class RegionEmptyError(ValueError):
    """Sampling could not find enough points in the requested region."""


class Region(enum.Enum):
    INNER_DISK = "inner_disk"
    ANNULUS = "annulus"
    SIGMA_BAND = "sigma_band"
    OMEGA_SET = "omega_set"
    OMEGA_J = "omega_j"
    VARPI_J = "varpi_j"


@dataclass(frozen=True)
class LabyrinthSpec:
    """All derived geometry of the labyrinth with parameter N."""

    N: int

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("N must be at least 4")

    @property
    def delta(self) -> float:
        """Halfwidth 1/(4N^3) of the removed bands."""
        return 1.0 / (4.0 * self.N**3)

    @property
    def n_circles(self) -> int:
        return 2 * self.N**2 + 1

    @property
    def inner_radius(self) -> float:
        return 1.0 - 2.0 / self.N

    def radius(self, k: int) -> float:
        """Circle radius r_k = 1 - k/N^3 for 0 <= k <= 2N^2."""
        if not 0 <= k <= 2 * self.N**2:
            raise ValueError(f"circle index {k} out of range 0..{2 * self.N ** 2}")
        return 1.0 - k / self.N**3

    def ray_angle(self, j: int) -> float:
        return np.pi * j / self.N

    def base_point(self, j: int) -> complex:
        """Anchor just inside the annulus at the comb's angle."""
        if not 1 <= j <= 2 * self.N:
            raise ValueError(f"comb index {j} out of range 1..{2 * self.N}")
        rho = 1.0 - 2.0 / self.N - 4.0 / self.N**3
        return rho * np.exp(1j * self.ray_angle(j))

    # -- u coordinate: u(z) = (1-|z|) N^3, circles at integer u -------------

    def u_of(self, r):
        return (1.0 - np.asarray(r)) * self.N**3

    def comb_parity(self, j: int) -> int:
        """Ring parity whose cells belong to comb j (0 = outermost ring)."""
        # odd rays thread the even rings (blocked there only by even rays)
        return 0 if j % 2 == 1 else 1


# convenience: module-level operations mirroring the public surface


def radius(N: int, k: int) -> float:
    return LabyrinthSpec(N).radius(k)


def base_point(spec: LabyrinthSpec, j: int) -> complex:
    return spec.base_point(j)


@dataclass
class RegionTag:
    """All labyrinth memberships of one point."""

    unit_disk: bool
    inner_disk: bool
    annulus: bool
    in_A: bool            # even-index rings (outermost first)
    in_A_tilde: bool
    on_L: bool            # on an even ray (within exact tolerance)
    on_L_tilde: bool
    sigma_band: bool      # within delta of the blocking set
    omega_set: bool       # in a cell of Omega
    omega_j: int          # comb owning the point (0 = none)
    varpi_js: tuple       # combs whose delta-fattening contains the point

    def matches(self, region: Region, j: int | None = None) -> bool:
        if region is Region.INNER_DISK:
            return self.inner_disk
        if region is Region.ANNULUS:
            return self.annulus
        if region is Region.SIGMA_BAND:
            return self.sigma_band
        if region is Region.OMEGA_SET:
            return self.omega_set
        if region is Region.OMEGA_J:
            return self.omega_j == j
        if region is Region.VARPI_J:
            return j in self.varpi_js
        raise ValueError(region)


_EXACT = 1e-13  # "on the ray" tolerance for measure-zero memberships


def _wrap_angle(theta):
    """Wrap to [0, 2 pi)."""
    return np.mod(theta, 2.0 * np.pi)


def _ray_distance(z, theta):
    """Euclidean distance from z to the ray {r e^{i theta} : r >= 0}."""
    w = np.asarray(z) * np.exp(-1j * theta)
    x, y = w.real, w.imag
    return np.where(x >= 0.0, np.abs(y), np.abs(w))


def _seg_distance(z, theta, r0, r1):
    """Distance from z to the radial segment [r0, r1] e^{i theta}."""
    w = np.asarray(z) * np.exp(-1j * theta)
    x = np.clip(w.real, r0, r1)
    return np.abs(w - x)


def dist_to_comb(spec: LabyrinthSpec, j: int, z,
                 ring_reach: int | None = 1) -> np.ndarray:
    """Euclidean distance from z to the comb (spine segment + its cells).

    `ring_reach` limits the cell search to the matching-parity rings
    within that many rings of the query point; the default covers every
    distance below one ring width 1/N^3, which is all the fattening
    predicates need.  Pass None for the exact global distance.
    """
    zin = np.asarray(z, dtype=np.complex128)
    zs = np.atleast_1d(zin)
    N, d = spec.N, spec.delta
    theta_j = spec.ray_angle(j)
    best = _seg_distance(zs, theta_j, spec.inner_radius, 1.0)
    w = zs * np.exp(-1j * theta_j)
    ang = np.arctan2(w.imag, w.real)  # cell spans |ang| <~ pi/N in this frame
    half = np.pi / N
    parity = spec.comb_parity(j)
    r_abs = np.abs(zs)
    n_rings = 2 * N**2
    if ring_reach is None:
        for m in range(parity, n_rings, 2):
            r_hi = 1.0 - (m + 0.25) / N**3
            r_lo = 1.0 - (m + 0.75) / N**3
            np.minimum(best, _cell_distance(r_abs, ang, r_lo, r_hi, half, d),
                       out=best)
    else:
        u = spec.u_of(r_abs)
        # nearest matching-parity ring index, then neighbors
        m0 = 2 * np.round((u - parity) / 2.0) + parity
        for off in range(-2 * ring_reach, 2 * ring_reach + 1, 2):
            m = np.clip(m0 + off, parity, n_rings - 2 + parity)
            r_hi = 1.0 - (m + 0.25) / N**3
            r_lo = 1.0 - (m + 0.75) / N**3
            np.minimum(best, _cell_distance(r_abs, ang, r_lo, r_hi, half, d),
                       out=best)
    return best if zin.ndim else best[0]


def _cell_distance(r_abs, ang, r_lo, r_hi, half, d):
    """Distance to one annular cell bounded by two ray-parallel strips.

    The cell, in a frame whose real axis bisects it, is
      { r_lo <= |w| <= r_hi }  intersect  { dist to ray(+half) >= d }
                               intersect  { dist to ray(-half) >= d }.
    Since d << r_lo and half <= pi/4 the strip constraints are the two
    lines Im(w e^{-+ i half}) = -+ d, giving a four-edge region: two
    arcs, two segments.  Distance is exact case analysis; r_lo / r_hi
    may be arrays matching r_abs.
    """
    r_lo = np.asarray(r_lo, dtype=np.float64)
    r_hi = np.asarray(r_hi, dtype=np.float64)
    g1 = -r_abs * np.sin(ang - half) - d   # >= 0 inside (upper strip)
    g2 = r_abs * np.sin(ang + half) - d    # >= 0 inside (lower strip)
    inside = (g1 >= 0) & (g2 >= 0) & (r_abs >= r_lo) & (r_abs <= r_hi)

    # corner angles where the strip lines meet the two arcs
    a_hi = half - np.arcsin(np.minimum(d / r_hi, 1.0))
    a_lo = half - np.arcsin(np.minimum(d / r_lo, 1.0))

    w = r_abs * np.exp(1j * ang)
    t = np.clip(ang, -a_hi, a_hi)
    d_out = np.abs(w - r_hi * np.exp(1j * t))
    t = np.clip(ang, -a_lo, a_lo)
    d_in = np.abs(w - r_lo * np.exp(1j * t))
    d_e1 = _segment_dist_2d(w, r_lo * np.exp(1j * a_lo), r_hi * np.exp(1j * a_hi))
    d_e2 = _segment_dist_2d(w, r_lo * np.exp(-1j * a_lo), r_hi * np.exp(-1j * a_hi))

    out = np.minimum(np.minimum(d_out, d_in), np.minimum(d_e1, d_e2))
    return np.where(inside, 0.0, out)


def _segment_dist_2d(w, p0, p1):
    """Distance from complex points w to segment [p0, p1]."""
    v = p1 - p0
    L2 = abs(v) ** 2
    t = np.clip(((w - p0) * np.conj(v)).real / L2, 0.0, 1.0)
    return np.abs(w - (p0 + t * v))


def classify(spec: LabyrinthSpec, z) -> RegionTag:
    """Memberships of a single point (vector version: classify_many)."""
    tags = classify_many(spec, np.array([z], dtype=np.complex128))
    return tags[0]


def classify_many(spec: LabyrinthSpec, zs: np.ndarray) -> list[RegionTag]:
    zs = np.asarray(zs, dtype=np.complex128)
    N, d = spec.N, spec.delta
    r = np.abs(zs)
    theta = _wrap_angle(np.angle(zs))
    u = spec.u_of(r)

    unit_disk = r <= 1.0 + _EXACT
    annulus = (r >= spec.inner_radius - _EXACT) & unit_disk
    inner_disk = r < spec.inner_radius
    in_A = annulus & (np.floor(u) % 2 == 0) & (u >= 0) & (u <= 2 * N**2)
    in_At = annulus & (np.floor(u) % 2 == 1) & (u <= 2 * N**2)

    # nearest ray index (rays at multiples of pi/N)
    step = np.pi / N
    j_near = np.rint(theta / step).astype(int) % (2 * N)
    ray_dist = _ray_distance(zs, j_near * step)
    on_even = (j_near % 2 == 0) & (ray_dist <= _EXACT)
    on_odd = (j_near % 2 == 1) & (ray_dist <= _EXACT)

    # distance to the full circle family: nearest integer u
    k_near = np.clip(np.rint(u), 0, 2 * N**2)
    circ_dist = np.abs(u - k_near) / N**3

    # blocking rays of the point's ring: even rings -> even rays
    ring = np.floor(u).astype(int)
    ring_parity = ring % 2
    # nearest blocking ray: even rays at 2m*step, odd at (2m+1)*step
    theta_shift = np.where(ring_parity == 0, theta, theta - step)
    jb = np.rint(theta_shift / (2 * step)).astype(int)
    block_angle = (2 * jb + ring_parity) * step
    block_dist = _ray_distance(zs, block_angle)
    in_ring = annulus & (u > 0) & (u < 2 * N**2)
    sigma_band = annulus & (
        (circ_dist <= d) | (in_ring & (block_dist <= d))
    )

    omega_set = in_ring & (circ_dist > d) & (block_dist > d)

    # owning comb of each Omega cell via sector index arithmetic
    owner = np.zeros(zs.size, dtype=int)
    m_even = np.floor(theta / (2 * step)).astype(int)
    own_even_ring = (2 * m_even + 1) % (2 * N)           # odd comb
    m_odd = np.floor((theta + step) / (2 * step)).astype(int)
    own_odd_ring = (2 * m_odd) % (2 * N)                 # even comb
    owner[omega_set] = np.where(ring_parity, own_odd_ring, own_even_ring)[omega_set]
    # spine membership overrides: the full ray segment belongs to its comb
    on_spine = annulus & (ray_dist <= _EXACT)
    owner[on_spine] = j_near[on_spine]
    owner[(omega_set | on_spine) & (owner == 0)] = 2 * N

    # fattened-comb memberships, vectorized per comb over an angular window
    varpi = np.zeros((zs.size, 2 * N + 1), dtype=bool)
    if np.any(annulus):
        for j_lab in range(1, 2 * N + 1):
            th_c = spec.ray_angle(j_lab)
            gap = np.abs(np.mod(theta - th_c + np.pi, 2 * np.pi) - np.pi)
            near = annulus & (gap <= np.pi / N + 8 * d)
            if not np.any(near):
                continue
            varpi[near, j_lab] = in_varpi(spec, j_lab, zs[near])

    tags = []
    for idx in range(zs.size):
        om = int(owner[idx])
        vps = np.nonzero(varpi[idx])[0].tolist()
        tags.append(RegionTag(
            unit_disk=bool(unit_disk[idx]),
            inner_disk=bool(inner_disk[idx]),
            annulus=bool(annulus[idx]),
            in_A=bool(in_A[idx]),
            in_A_tilde=bool(in_At[idx]),
            on_L=bool(on_even[idx]),
            on_L_tilde=bool(on_odd[idx]),
            sigma_band=bool(sigma_band[idx]),
            omega_set=bool(omega_set[idx]),
            omega_j=int(om),
            varpi_js=tuple(sorted(vps)),
        ))
    return tags


def in_varpi(spec: LabyrinthSpec, j: int, zs) -> np.ndarray:
    """Vectorized membership in the delta-fattened comb j."""
    return dist_to_comb(spec, j, zs) <= spec.delta + 1e-15


def in_omega(spec: LabyrinthSpec, j: int, zs) -> np.ndarray:
    """Vectorized membership in comb j (cells + spine segment)."""
    zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
    out = np.zeros(zs.shape, dtype=bool)
    tags = classify_many(spec, zs)
    for i, t in enumerate(tags):
        out[i] = t.omega_j == j
    return out


def _r2_sequence(n: int, skip: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points in the unit square."""
    g = 1.32471795724474602596  # plastic number
    a1, a2 = 1.0 / g, 1.0 / g**2
    idx = np.arange(skip + 1, skip + n + 1)
    return np.stack([np.mod(0.5 + a1 * idx, 1.0),
                     np.mod(0.5 + a2 * idx, 1.0)], axis=1)


def sample_region(spec: LabyrinthSpec, region: Region, count: int,
                  j: int | None = None, max_batches: int = 4096) -> np.ndarray:
    """Deterministic low-discrepancy points with classify == region.

    Rejection-samples an R2 sequence over a region-adapted bounding
    patch; raises RegionEmptyError if the acceptance budget runs out.
    """
    if region in (Region.OMEGA_J, Region.VARPI_J) and j is None:
        raise ValueError("comb index j required for per-comb regions")
    N = spec.N
    if region is Region.INNER_DISK:
        r_lo, r_hi = 0.0, spec.inner_radius
        th_lo, th_hi = 0.0, 2 * np.pi
    elif region in (Region.OMEGA_J, Region.VARPI_J):
        th_c = spec.ray_angle(j)
        pad = np.pi / N + 4 * spec.delta
        r_lo, r_hi = spec.inner_radius - 2 * spec.delta, 1.0
        th_lo, th_hi = th_c - pad, th_c + pad
    else:
        r_lo, r_hi = spec.inner_radius - 2 * spec.delta, 1.0
        th_lo, th_hi = 0.0, 2 * np.pi

    found: list[np.ndarray] = []
    total = 0
    batch = max(4 * count, 256)
    for b in range(max_batches):
        uv = _r2_sequence(batch, skip=b * batch)
        # area-uniform in the annular patch
        rr = np.sqrt(r_lo**2 + uv[:, 0] * (r_hi**2 - r_lo**2))
        th = th_lo + uv[:, 1] * (th_hi - th_lo)
        zs = rr * np.exp(1j * th)
        if region is Region.INNER_DISK:
            keep = np.abs(zs) < spec.inner_radius
        elif region is Region.ANNULUS:
            keep = (np.abs(zs) >= spec.inner_radius) & (np.abs(zs) <= 1.0)
        elif region is Region.VARPI_J:
            keep = in_varpi(spec, j, zs)
        elif region is Region.OMEGA_J:
            keep = in_omega(spec, j, zs)
        else:
            tags = classify_many(spec, zs)
            if region is Region.SIGMA_BAND:
                keep = np.array([t.sigma_band for t in tags])
            else:
                keep = np.array([t.omega_set for t in tags])
        found.append(zs[keep])
        total += int(keep.sum())
        if total >= count:
            return np.concatenate(found)[:count]
    raise RegionEmptyError(
        f"found {total}/{count} points in {region.value} after {max_batches} batches"
    )


# tag codes for the raster export, chosen for visual contrast
_PGM_CODES = {
    "outside": 255,
    "inner": 224,
    "annulus": 192,
    "sigma": 64,
    "omega_odd": 0,
    "omega_even": 32,
}


def rasterize_pgm(spec: LabyrinthSpec, path: str, resolution: int = 512) -> None:
    """Binary PGM of the labyrinth over [-1,1]^2, one tag byte per cell."""
    xs = np.linspace(-1.0, 1.0, resolution)
    X, Y = np.meshgrid(xs, xs)
    Z = (X + 1j * Y).ravel()
    img = np.full(Z.shape, _PGM_CODES["outside"], dtype=np.uint8)
    inside = np.abs(Z) <= 1.0
    tags = classify_many(spec, Z[inside])
    vals = np.empty(len(tags), dtype=np.uint8)
    for i, t in enumerate(tags):
        if t.omega_j:
            vals[i] = _PGM_CODES["omega_odd"] if t.omega_j % 2 else _PGM_CODES["omega_even"]
        elif t.sigma_band:
            vals[i] = _PGM_CODES["sigma"]
        elif t.annulus:
            vals[i] = _PGM_CODES["annulus"]
        else:
            vals[i] = _PGM_CODES["inner"]
    img[inside] = vals
    img = img.reshape(resolution, resolution)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{resolution} {resolution}\n255\n".encode())
        fh.write(img.tobytes())
