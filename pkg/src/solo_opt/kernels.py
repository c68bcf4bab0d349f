"""Hot numeric kernels: FEM matrix assembly for the truss and plane-stress
evaluators.

Each kernel has a numba @njit implementation and a pure-numpy fallback.
Set SOLO_OPT_NO_NUMBA=1 (or install without numba) to force the fallback;
`benchmarks/bench_kernels.py` compares the two paths.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("SOLO_OPT_NO_NUMBA", "").strip() not in ("", "0")

if not _DISABLED:
    try:
        from numba import njit
        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False
else:
    HAS_NUMBA = False


def using_numba() -> bool:
    return HAS_NUMBA


# ---------------------------------------------------------------------------
# truss: global stiffness from per-bar axial stiffness EA/L and direction
# cosines; K is dense (3 DOFs per node) and symmetric.
# ---------------------------------------------------------------------------

def _assemble_truss_np(bars, dircos, stiff, n_dof):
    k = np.zeros((n_dof, n_dof))
    # 6x6 bar matrices: s * [n; -n][n; -n]^T with n the direction cosines
    nn = dircos[:, :, None] * dircos[:, None, :]  # (nb, 3, 3)
    ke = np.empty((len(bars), 6, 6))
    ke[:, :3, :3] = nn
    ke[:, 3:, 3:] = nn
    ke[:, :3, 3:] = -nn
    ke[:, 3:, :3] = -nn
    ke *= stiff[:, None, None]
    dofs = np.empty((len(bars), 6), dtype=np.int64)
    dofs[:, :3] = 3 * bars[:, 0:1] + np.arange(3)
    dofs[:, 3:] = 3 * bars[:, 1:2] + np.arange(3)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    np.add.at(k.ravel(), rows * n_dof + cols, ke.ravel())
    return k


def _axial_forces_np(bars, dircos, stiff, u):
    u3 = u.reshape(-1, 3)
    rel = u3[bars[:, 1]] - u3[bars[:, 0]]
    return stiff * np.einsum("ij,ij->i", rel, dircos)


if HAS_NUMBA:

    @njit(cache=True)
    def _assemble_truss_nb(bars, dircos, stiff, n_dof):
        k = np.zeros((n_dof, n_dof))
        for b in range(bars.shape[0]):
            i = bars[b, 0]
            j = bars[b, 1]
            s = stiff[b]
            for a in range(3):
                for c in range(3):
                    v = s * dircos[b, a] * dircos[b, c]
                    ia = 3 * i + a
                    ic = 3 * i + c
                    ja = 3 * j + a
                    jc = 3 * j + c
                    k[ia, ic] += v
                    k[ja, jc] += v
                    k[ia, jc] -= v
                    k[ja, ic] -= v
        return k

    @njit(cache=True)
    def _axial_forces_nb(bars, dircos, stiff, u):
        nb = bars.shape[0]
        out = np.empty(nb)
        for b in range(nb):
            i = bars[b, 0]
            j = bars[b, 1]
            acc = 0.0
            for a in range(3):
                acc += (u[3 * j + a] - u[3 * i + a]) * dircos[b, a]
            out[b] = stiff[b] * acc
        return out


def assemble_truss(bars, dircos, stiff, n_dof):
    if HAS_NUMBA:
        return _assemble_truss_nb(bars, dircos, stiff, n_dof)
    return _assemble_truss_np(bars, dircos, stiff, n_dof)


def axial_forces(bars, dircos, stiff, u):
    if HAS_NUMBA:
        return _axial_forces_nb(bars, dircos, stiff, u)
    return _axial_forces_np(bars, dircos, stiff, u)


# ---------------------------------------------------------------------------
# plane stress: global stiffness from per-element per-gauss-point moduli and
# the unit-modulus gauss-point stiffness blocks k0 (n_gp, 8, 8).
# ---------------------------------------------------------------------------

def _assemble_plane_np(edof, y_gp, k0, n_dof):
    ke = np.einsum("eg,gab->eab", y_gp, k0)
    rows = np.repeat(edof, 8, axis=1).ravel()
    cols = np.tile(edof, (1, 8)).ravel()
    k = np.zeros(n_dof * n_dof)
    np.add.at(k, rows * n_dof + cols, ke.ravel())
    return k.reshape(n_dof, n_dof)


if HAS_NUMBA:

    @njit(cache=True)
    def _assemble_plane_nb(edof, y_gp, k0, n_dof):
        k = np.zeros((n_dof, n_dof))
        n_el = edof.shape[0]
        n_gp = k0.shape[0]
        for e in range(n_el):
            for a in range(8):
                ra = edof[e, a]
                for b in range(8):
                    acc = 0.0
                    for gp in range(n_gp):
                        acc += y_gp[e, gp] * k0[gp, a, b]
                    k[ra, edof[e, b]] += acc
        return k


def assemble_plane(edof, y_gp, k0, n_dof):
    if HAS_NUMBA:
        return _assemble_plane_nb(edof, y_gp, k0, n_dof)
    return _assemble_plane_np(edof, y_gp, k0, n_dof)
