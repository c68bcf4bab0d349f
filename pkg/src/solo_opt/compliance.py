"""2D plane-stress FEM on a regular quad mesh with a nodal-density SIMP
material law; objective is elastic energy normalized by the uniform
half-density reference design."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .core import ContractViolation, VolumeConstraint

GAUSS = 1.0 / np.sqrt(3.0)
GP = [(-GAUSS, -GAUSS), (GAUSS, -GAUSS), (GAUSS, GAUSS), (-GAUSS, GAUSS)]


def simp_modulus(rho, y0: float, eps_y: float):
    """Y = Y0 * rho^3 + eps * (1 - rho^3)."""
    r3 = np.asarray(rho, dtype=np.float64) ** 3
    out = y0 * r3 + eps_y * (1.0 - r3)
    return float(out) if np.isscalar(rho) else out


def _shape_functions(xi, eta):
    """Q4 shape functions, local node order (-,-), (+,-), (+,+), (-,+)."""
    return 0.25 * np.array([
        (1 - xi) * (1 - eta),
        (1 + xi) * (1 - eta),
        (1 + xi) * (1 + eta),
        (1 - xi) * (1 + eta),
    ])


def _b_matrix(xi, eta, h):
    """Strain-displacement matrix for a square element of side h."""
    dn_dxi = 0.25 * np.array([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)])
    dn_deta = 0.25 * np.array([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)])
    dn_dx = dn_dxi * 2.0 / h
    dn_dy = dn_deta * 2.0 / h
    b = np.zeros((3, 8))
    b[0, 0::2] = dn_dx
    b[1, 1::2] = dn_dy
    b[2, 0::2] = dn_dy
    b[2, 1::2] = dn_dx
    return b


@dataclass(frozen=True)
class ComplianceProblem:
    """Unit-square design domain with n x n nodal density variables.

    Default boundary conditions: downward traction on the rightmost
    fraction of the top edge, vertical roller on the leftmost fraction of
    the bottom edge, symmetry (zero horizontal displacement) on the right
    boundary.  Fractions default to one element edge.
    """

    n: int = 5
    y0: float = 1.0
    eps_y: float = 1e-6
    nu: float = 0.3
    volume_limit: float = 0.5
    total_load: float = 1.0
    load_fraction: float | None = None
    roller_fraction: float | None = None
    symmetry: bool = True
    pin_corner_x: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ContractViolation("need at least a 2x2 grid")
        if self.eps_y <= 0:
            raise ContractViolation("void modulus must stay positive")
        if not 0.0 < self.volume_limit < 1.0:
            raise ContractViolation("volume limit must be in (0, 1)")
        object.__setattr__(self, "_cache", {})

    # -- mesh ------------------------------------------------------------
    @property
    def n_design(self) -> int:
        return self.n * self.n

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    def _node(self, ix, iy):
        return ix * self.n + iy

    def _setup(self):
        cache = self._cache
        if "k0" in cache:
            return cache
        n = self.n
        h = self.h
        d0 = (1.0 / (1.0 - self.nu**2)) * np.array([
            [1.0, self.nu, 0.0],
            [self.nu, 1.0, 0.0],
            [0.0, 0.0, (1.0 - self.nu) / 2.0],
        ])
        det_j = (h / 2.0) ** 2
        k0 = np.empty((4, 8, 8))
        shape = np.empty((4, 4))
        for g, (xi, eta) in enumerate(GP):
            b = _b_matrix(xi, eta, h)
            k0[g] = b.T @ d0 @ b * det_j
            shape[g] = _shape_functions(xi, eta)

        n_el = (n - 1) ** 2
        elem_nodes = np.empty((n_el, 4), dtype=np.int64)
        e = 0
        for ex in range(n - 1):
            for ey in range(n - 1):
                elem_nodes[e] = (
                    self._node(ex, ey),
                    self._node(ex + 1, ey),
                    self._node(ex + 1, ey + 1),
                    self._node(ex, ey + 1),
                )
                e += 1
        edof = np.empty((n_el, 8), dtype=np.int64)
        edof[:, 0::2] = 2 * elem_nodes
        edof[:, 1::2] = 2 * elem_nodes + 1

        # loads: uniform downward traction on top-edge segment ending at x=1
        load_frac = self.load_fraction if self.load_fraction is not None else h
        f = np.zeros(2 * n * n)
        n_seg = max(1, int(round(load_frac / h)))
        q = self.total_load / (n_seg * h)  # traction per unit length
        for ex in range(n - 1 - n_seg, n - 1):
            n1 = self._node(ex, n - 1)
            n2 = self._node(ex + 1, n - 1)
            f[2 * n1 + 1] -= q * h / 2.0
            f[2 * n2 + 1] -= q * h / 2.0

        fixed = set()
        roller_frac = self.roller_fraction if self.roller_fraction is not None else h
        n_rseg = max(1, int(round(roller_frac / h)))
        for ix in range(n_rseg + 1):
            fixed.add(2 * self._node(ix, 0) + 1)  # u_y = 0 on bottom-left
        if self.symmetry:
            for iy in range(n):
                fixed.add(2 * self._node(n - 1, iy))  # u_x = 0 on right edge
        if self.pin_corner_x:
            fixed.add(2 * self._node(0, 0))
        fixed = np.array(sorted(fixed), dtype=np.int64)
        free = np.setdiff1d(np.arange(2 * n * n), fixed)

        cache.update(
            k0=k0, shape=shape, elem_nodes=elem_nodes, edof=edof,
            f=f, free=free,
        )
        return cache

    # -- analysis --------------------------------------------------------
    def _solve_energy(self, rho: np.ndarray) -> float:
        cache = self._setup()
        y_gp = simp_modulus(
            rho[cache["elem_nodes"]] @ cache["shape"].T, self.y0, self.eps_y
        )
        n_dof = 2 * self.n_design
        k = kernels.assemble_plane(cache["edof"], y_gp, cache["k0"], n_dof)
        free = cache["free"]
        kff = k[np.ix_(free, free)]
        ff = cache["f"][free]
        try:
            uf = scipy.linalg.solve(kff, ff, assume_a="pos")
        except scipy.linalg.LinAlgError as exc:
            raise AnalysisError(f"singular stiffness matrix: {exc}") from exc
        return 0.5 * float(uf @ (kff @ uf)), uf

    def reference_energy(self) -> float:
        cache = self._setup()
        if "e_ref" not in cache:
            cache["e_ref"], _ = self._solve_energy(np.full(self.n_design, 0.5))
        return cache["e_ref"]

    def solve(self, rho: np.ndarray) -> "ComplianceResult":
        rho = np.asarray(rho, dtype=np.float64)
        if rho.shape != (self.n_design,):
            raise ContractViolation(f"expected {self.n_design} densities")
        energy, uf = self._solve_energy(rho)
        u = np.zeros(2 * self.n_design)
        u[self._setup()["free"]] = uf
        return ComplianceResult(
            displacements=u,
            energy=energy,
            energy_ratio=energy / self.reference_energy(),
        )

    def gauss_point_stresses(self, rho: np.ndarray) -> np.ndarray:
        """(n_el, 4 gp, 3) stress components, for verification."""
        cache = self._setup()
        res = self.solve(rho)
        d0 = (1.0 / (1.0 - self.nu**2)) * np.array([
            [1.0, self.nu, 0.0],
            [self.nu, 1.0, 0.0],
            [0.0, 0.0, (1.0 - self.nu) / 2.0],
        ])
        y_gp = simp_modulus(
            rho[cache["elem_nodes"]] @ cache["shape"].T, self.y0, self.eps_y
        )
        out = np.empty((cache["edof"].shape[0], 4, 3))
        for g, (xi, eta) in enumerate(GP):
            b = _b_matrix(xi, eta, self.h)
            strain = res.displacements[cache["edof"]] @ b.T
            out[:, g, :] = y_gp[:, g:g + 1] * (strain @ d0.T)
        return out

    def load_vector(self) -> np.ndarray:
        return self._setup()["f"].copy()

    def volume_weights(self) -> VolumeConstraint:
        """Nodal weights equal to the bilinear-basis integrals, total 1."""
        w1d = np.full(self.n, self.h)
        w1d[0] = w1d[-1] = self.h / 2.0
        w = np.outer(w1d, w1d).ravel()
        return VolumeConstraint(weights=w / w.sum(), limit=self.volume_limit)


class AnalysisError(RuntimeError):
    pass


@dataclass(frozen=True)
class ComplianceResult:
    displacements: np.ndarray
    energy: float
    energy_ratio: float


def solve_compliance(problem: ComplianceProblem, rho: np.ndarray) -> ComplianceResult:
    return problem.solve(rho)


def export_density_field(rho: np.ndarray, n: int, path):
    """Row-major real grid, plain text, for figure tooling."""
    grid = np.asarray(rho).reshape(n, n)
    with open(path, "w") as fh:
        for row in grid:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
