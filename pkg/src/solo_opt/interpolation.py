"""Field reconstruction from nodal design variables: bilinear interpolation
on rectangular grids and Gaussian-RBF interpolation with a linear
polynomial tail, plus volume-targeted binarization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class FitError(RuntimeError):
    """The interpolation system could not be solved."""


class DomainError(ValueError):
    """Query point outside the interpolation domain."""


@dataclass(frozen=True)
class GridField:
    """Nodal values on a rectangular tensor grid."""

    x: np.ndarray  # strictly increasing x coordinates
    y: np.ndarray  # strictly increasing y coordinates
    values: np.ndarray  # shape (len(x), len(y))

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "values", v)
        if v.shape != (x.size, y.size):
            raise ValueError("values shape must be (len(x), len(y))")
        if not (np.all(np.diff(x) > 0) and np.all(np.diff(y) > 0)):
            raise ValueError("grid coordinates must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("nodal values must be finite")


def bilinear_interpolate(field: GridField, point) -> float:
    """Bilinear value at `point`; raises DomainError outside the grid."""
    px, py = float(point[0]), float(point[1])
    x, y, f = field.x, field.y, field.values
    if not (x[0] <= px <= x[-1] and y[0] <= py <= y[-1]):
        raise DomainError(f"point ({px}, {py}) outside the grid")
    i = min(int(np.searchsorted(x, px, side="right")) - 1, x.size - 2)
    j = min(int(np.searchsorted(y, py, side="right")) - 1, y.size - 2)
    i = max(i, 0)
    j = max(j, 0)
    x1, x2 = x[i], x[i + 1]
    y1, y2 = y[j], y[j + 1]
    row = np.array([x2 - px, px - x1])
    col = np.array([y2 - py, py - y1])
    block = np.array([[f[i, j], f[i, j + 1]], [f[i + 1, j], f[i + 1, j + 1]]])
    return float(row @ block @ col / ((x2 - x1) * (y2 - y1)))


@dataclass(frozen=True)
class RbfModel:
    """Gaussian RBF interpolant with linear polynomial augmentation."""

    centers: np.ndarray  # (N, 2)
    d: float
    lam: np.ndarray  # (N,)
    a: np.ndarray  # (a0, a1, a2)


def default_shape_distance(centers: np.ndarray) -> float:
    """Half the minimum spacing between distinct centers."""
    c = np.asarray(centers, dtype=np.float64)
    diff = c[:, None, :] - c[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min()) / 2.0


def rbf_fit(centers: np.ndarray, values: np.ndarray, d: float | None = None) -> RbfModel:
    """Solve the augmented (N+3) x (N+3) interpolation system.

    The polynomial rows force sum(lam) = sum(lam*x) = sum(lam*y) = 0,
    which makes the fit unique.
    """
    c = np.asarray(centers, dtype=np.float64)
    rho = np.asarray(values, dtype=np.float64)
    n = c.shape[0]
    if c.shape != (n, 2) or rho.shape != (n,):
        raise ValueError("centers must be (N,2), values (N,)")
    if d is None:
        d = default_shape_distance(c)
    if d <= 0:
        raise ValueError("shape distance d must be positive")

    diff = c[:, None, :] - c[None, :, :]
    phi = np.exp(-(diff**2).sum(axis=2) / d**2)
    a_mat = np.zeros((n + 3, n + 3))
    a_mat[:n, :n] = phi
    p = np.column_stack([np.ones(n), c[:, 0], c[:, 1]])
    a_mat[:n, n:] = p
    a_mat[n:, :n] = p.T
    rhs = np.concatenate([rho, np.zeros(3)])
    try:
        sol = scipy.linalg.solve(a_mat, rhs)
    except scipy.linalg.LinAlgError as exc:
        raise FitError(f"singular interpolation system: {exc}") from exc
    residual = np.linalg.norm(a_mat @ sol - rhs)
    if not np.isfinite(residual) or residual > 1e-8 * max(np.linalg.norm(rho), 1.0):
        raise FitError(f"interpolation system ill-conditioned (residual {residual:g})")
    return RbfModel(centers=c, d=float(d), lam=sol[:n], a=sol[n:])


def rbf_eval(model: RbfModel, points) -> np.ndarray | float:
    """sum_i lam_i exp(-|x - x_i|^2 / d^2) + a0 + a1 x + a2 y."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    diff = pts[:, None, :] - model.centers[None, :, :]
    phi = np.exp(-(diff**2).sum(axis=2) / model.d**2)
    out = phi @ model.lam + model.a[0] + model.a[1] * pts[:, 0] + model.a[2] * pts[:, 1]
    if np.asarray(points).ndim == 1:
        return float(out[0])
    return out


def sample_on_grid(model: RbfModel, bounds, resolution: int) -> np.ndarray:
    """Evaluate the interpolant at cell centers of a regular sampling grid."""
    (x0, x1), (y0, y1) = bounds
    xs = x0 + (np.arange(resolution) + 0.5) * (x1 - x0) / resolution
    ys = y0 + (np.arange(resolution) + 0.5) * (y1 - y0) / resolution
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return np.asarray(rbf_eval(model, pts)).reshape(resolution, resolution)


class ThresholdError(RuntimeError):
    """Bisection failed to match the target area fraction."""


def threshold_to_volume(model: RbfModel, bounds, resolution: int,
                        target_fraction: float, max_iter: int = 100):
    """Find rho_thres so the >= threshold area fraction matches the target.

    Bisection over the sampled field; tolerance is half a sampling cell.
    Returns (rho_thres, binary field on the sampling grid).
    """
    if not 0.0 < target_fraction < 1.0:
        raise ValueError("target fraction must be in (0, 1)")
    field = sample_on_grid(model, bounds, resolution)
    cells = field.size
    tol = 0.5 / cells
    lo = float(field.min()) - 1e-12
    hi = float(field.max()) + 1e-12
    # fraction(lo) = 1 (everything >= lo), fraction(hi) = 0
    for _ in range(max_iter):
        thr = 0.5 * (lo + hi)
        frac = float(np.mean(field >= thr))
        if abs(frac - target_fraction) <= tol:
            return thr, (field >= thr).astype(np.float64)
        if frac > target_fraction:
            lo = thr
        else:
            hi = thr
    raise ThresholdError(
        f"no threshold matches fraction {target_fraction} within {tol} "
        f"after {max_iter} bisection steps"
    )


def export_binary_field(field: np.ndarray, path):
    """Row-major 0/1 text grid for visualization tooling."""
    with open(path, "w") as fh:
        for row in np.asarray(field):
            fh.write(" ".join(str(int(v)) for v in row) + "\n")
