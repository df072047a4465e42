"""Vectorized numpy kernel: the fallback when the compiled core is absent.

Contract shared with the compiled kernel in ``_kernels.pyx``: given the
same plan, seed, and iteration range, both produce bitwise-identical
outputs. That holds because (a) uniforms come from identical 64-bit
integer arithmetic, (b) index selection is first-match on the same cdf
arrays (searchsorted side='left' equals the linear scan), and (c) the
floating-point accumulation order per iteration is the same sequence of
IEEE additions. Keep any change here in lockstep with the .pyx file.
"""

from __future__ import annotations

import numpy as np

from .sampler import GAMMA, MASK64, mix64

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = np.float64(2.0 ** -53)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    z = z ^ (z >> np.uint64(31))
    return z


def _uniform_column(z1: np.ndarray, counter: int) -> np.ndarray:
    """Uniform draws for one counter across the chunk's iterations."""
    cg = np.uint64((counter * GAMMA) & MASK64)
    z = _mix64_vec(z1 + cg)
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def _conditional_pick(
    cdf_flat: np.ndarray,
    off: np.ndarray,
    rows: np.ndarray,
    u: np.ndarray,
) -> np.ndarray:
    """First-match index into the flat option space, row selected per element."""
    out = np.empty(rows.shape[0], dtype=np.int64)
    for row in np.unique(rows):
        mask = rows == row
        lo = int(off[row])
        hi = int(off[row + 1])
        out[mask] = lo + np.searchsorted(cdf_flat[lo:hi], u[mask], side="left")
    return out


def simulate_chunk(plan, seed: int, start: int, count: int) -> dict[str, np.ndarray]:
    """Run iterations [start, start+count) and return per-iteration arrays.

    Output keys: ``idx`` (int32 matrix, columns e_0..e_{s-1}, p_0..p_{s-1},
    b, v_flat, m_flat) and float64 vectors ``ep, pb, bv, vm, land, sea,
    total`` in kg e-CO2 per kWh.
    """
    ns = plan.n_minerals
    z0 = mix64(seed)
    n_arr = np.arange(start, start + count, dtype=np.uint64)
    z1 = _mix64_vec(np.uint64(z0) + n_arr * np.uint64(GAMMA))

    idx = np.empty((count, 2 * ns + 3), dtype=np.int32)
    counter = 0
    for i in range(ns):
        u = _uniform_column(z1, counter)
        lo, hi = int(plan.e_off[i]), int(plan.e_off[i + 1])
        idx[:, i] = np.searchsorted(plan.e_cdf_flat[lo:hi], u, side="left")
        counter += 1
    for i in range(ns):
        u = _uniform_column(z1, counter)
        lo, hi = int(plan.p_off[i]), int(plan.p_off[i + 1])
        idx[:, ns + i] = np.searchsorted(plan.p_cdf_flat[lo:hi], u, side="left")
        counter += 1
    u = _uniform_column(z1, counter)
    b_idx = np.searchsorted(plan.b_cdf, u, side="left")
    idx[:, 2 * ns] = b_idx
    counter += 1
    u = _uniform_column(z1, counter)
    v_flat = _conditional_pick(plan.v_cdf_flat, plan.v_off, b_idx, u)
    idx[:, 2 * ns + 1] = v_flat
    counter += 1
    u = _uniform_column(z1, counter)
    m_flat = _conditional_pick(plan.m_cdf_flat, plan.m_off, v_flat, u)
    idx[:, 2 * ns + 2] = m_flat

    ep = np.zeros(count, dtype=np.float64)
    pb = np.zeros(count, dtype=np.float64)
    land = np.zeros(count, dtype=np.float64)
    sea = np.zeros(count, dtype=np.float64)
    for i in range(ns):
        flat = plan.ep_mat_off[i] + idx[:, i].astype(np.int64) * plan.p_width[i] + idx[:, ns + i]
        l = plan.ep_land[flat]
        s = plan.ep_sea[flat]
        ep += l
        ep += s
        land += l
        sea += s
    nb = plan.b_cdf.shape[0]
    for i in range(ns):
        flat = plan.pb_mat_off[i] + idx[:, ns + i].astype(np.int64) * nb + b_idx
        l = plan.pb_land[flat]
        s = plan.pb_sea[flat]
        pb += l
        pb += s
        land += l
        sea += s
    l = plan.bv_land[v_flat]
    s = plan.bv_sea[v_flat]
    bv = l.copy()
    bv += s
    land += l
    sea += s
    l = plan.vm_land[m_flat]
    s = plan.vm_sea[m_flat]
    vm = l.copy()
    vm += s
    land += l
    sea += s

    total = ep.copy()
    total += pb
    total += bv
    total += vm
    return {
        "idx": idx,
        "ep": ep,
        "pb": pb,
        "bv": bv,
        "vm": vm,
        "land": land,
        "sea": sea,
        "total": total,
    }
