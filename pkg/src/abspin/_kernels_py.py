"""Reference (numpy) implementations of the hot kernels.

The compiled module ``_ckernels`` exposes exactly the same functions; which
one is used is decided in :mod:`abspin.kernels`.
"""

import numpy as np

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)

TAYLOR_ORDER = 12
SCALE_TARGET = 0.25


def _expm_i_sigma_batch(angles):
    """exp(i a.sigma) for each row a of ``angles`` by scaled Taylor series."""
    n = angles.shape[0]
    gen = 1j * (
        angles[:, 0, None, None] * _SX
        + angles[:, 1, None, None] * _SY
        + angles[:, 2, None, None] * _SZ
    )
    norms = np.linalg.norm(angles, axis=1)
    squarings = np.zeros(n, dtype=int)
    big = norms > SCALE_TARGET
    squarings[big] = np.ceil(np.log2(norms[big] / SCALE_TARGET)).astype(int)
    gen = gen / (2.0 ** squarings)[:, None, None]

    out = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()
    term = out.copy()
    for k in range(1, TAYLOR_ORDER + 1):
        term = term @ gen / k
        out += term
    for s in range(int(squarings.max(initial=0))):
        sel = squarings > s
        out[sel] = out[sel] @ out[sel]
    return out


def _ordered_product(mats):
    """mats[-1] @ ... @ mats[0] by pairwise reduction."""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            head, mats = mats[:1], mats[1:]
            # fold the earliest factor into the next one
            mats = mats.copy()
            mats[0] = mats[0] @ head[0]
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def magnus_product(durations, rates, nsteps):
    """Time-ordered product of exp(i a_k.sigma) on a uniform grid.

    ``durations`` (n,) and ``rates`` (n, 3) describe a piecewise-constant
    angular-rate vector; a_k is its exact integral over grid step k.
    """
    durations = np.ascontiguousarray(durations, dtype=float)
    rates = np.ascontiguousarray(rates, dtype=float).reshape(-1, 3)
    total = float(durations.sum())
    if nsteps < 1 or total <= 0.0:
        return np.eye(2, dtype=complex)
    edges = np.concatenate(([0.0], np.cumsum(durations)))
    grid = np.linspace(0.0, total, nsteps + 1)
    angles = np.empty((nsteps, 3))
    for c in range(3):
        cumulative = np.concatenate(([0.0], np.cumsum(rates[:, c] * durations)))
        angles[:, c] = np.diff(np.interp(grid, edges, cumulative))
    return _ordered_product(_expm_i_sigma_batch(angles))


def angle_sum(xy, px, py):
    """Sum of signed angles subtended at (px, py) by consecutive vertices."""
    xy = np.asarray(xy, dtype=float)
    d = xy - (px, py)
    a, b = d[:-1], d[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
    return float(np.sum(np.arctan2(cross, dot)))


def min_distance(xy, px, py):
    """Smallest distance from (px, py) to any segment of the polyline."""
    xy = np.asarray(xy, dtype=float)
    p = np.array([px, py])
    a, b = xy[:-1], xy[1:]
    ab = b - a
    len2 = np.einsum("ij,ij->i", ab, ab)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(len2 > 0, np.einsum("ij,ij->i", p - a, ab) / len2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.min(np.linalg.norm(closest - p, axis=1)))


def _segment_midpoints(a, b, samples):
    s = (np.arange(samples) + 0.5) / samples
    return a + s[:, None] * (b - a)


def gauge_line_integral(xy, centers, amps, widths, samples):
    """Composite midpoint rule for the integral of grad(chi).dr.

    chi(r) = sum_j amps[j] * exp(-|r - centers[j]|^2 / (2 widths[j]^2)).
    """
    xy = np.asarray(xy, dtype=float)
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    amps = np.asarray(amps, dtype=float)
    widths = np.asarray(widths, dtype=float)
    if len(amps) == 0:
        return 0.0
    total = 0.0
    for a, b in zip(xy[:-1], xy[1:]):
        pts = _segment_midpoints(a, b, samples)
        d = pts[:, None, :] - centers[None, :, :]
        g = amps * np.exp(-np.einsum("ijk,ijk->ij", d, d) / (2 * widths**2))
        grad = -np.einsum("ij,ijk->ik", g / widths**2, d)
        total += float(np.sum(grad @ (b - a))) / samples
    return total


def solenoid_line_integral(xy, px, py, flux, samples):
    """Composite midpoint rule for the point-flux potential Phi/(2 pi r) e_phi."""
    xy = np.asarray(xy, dtype=float)
    total = 0.0
    for a, b in zip(xy[:-1], xy[1:]):
        pts = _segment_midpoints(a, b, samples) - (px, py)
        r2 = np.einsum("ij,ij->i", pts, pts)
        ax, ay = -pts[:, 1] / r2, pts[:, 0] / r2
        step = b - a
        total += float(np.sum(ax * step[0] + ay * step[1])) / samples
    return flux / (2 * np.pi) * total
