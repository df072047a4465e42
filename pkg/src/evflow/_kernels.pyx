# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled simulation kernel.

Mirrors _kernels_py.simulate_chunk exactly: same uniforms (64-bit integer
mixing), same first-match index rule (binary search equals searchsorted
side='left'), same floating-point addition order. The extension is built
with -ffp-contract=off so no fused multiply-adds break the bitwise match.
Keep any change here in lockstep with _kernels_py.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint64_t

cnp.import_array()

cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z ^= z >> 30
    z = z * (<uint64_t> 0xBF58476D1CE4E5B9)
    z ^= z >> 27
    z = z * (<uint64_t> 0x94D049BB133111EB)
    z ^= z >> 31
    return z


cdef inline double draw(uint64_t z1, uint64_t counter) nogil:
    cdef uint64_t z = mix64(z1 + counter * (<uint64_t> 0x9E3779B97F4A7C15))
    return <double> (z >> 11) * INV_2_53


cdef inline int64_t first_match(const double * cdf, int64_t lo, int64_t hi, double u) nogil:
    # bisect_left: first index with cdf[index] >= u, i.e. min{j : u <= F_j}
    cdef int64_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] < u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def simulate_chunk(plan, seed, start, count):
    """Run iterations [start, start+count); see _kernels_py for the contract."""
    cdef Py_ssize_t ns = plan.n_minerals
    cdef Py_ssize_t n_rows = count
    cdef int64_t first_iter = start

    cdef const double[::1] e_cdf = plan.e_cdf_flat
    cdef const int64_t[::1] e_off = plan.e_off
    cdef const double[::1] p_cdf = plan.p_cdf_flat
    cdef const int64_t[::1] p_off = plan.p_off
    cdef const double[::1] b_cdf = plan.b_cdf
    cdef const double[::1] v_cdf = plan.v_cdf_flat
    cdef const int64_t[::1] v_off = plan.v_off
    cdef const double[::1] m_cdf = plan.m_cdf_flat
    cdef const int64_t[::1] m_off = plan.m_off
    cdef const double[::1] ep_land = plan.ep_land
    cdef const double[::1] ep_sea = plan.ep_sea
    cdef const int64_t[::1] ep_mat_off = plan.ep_mat_off
    cdef const double[::1] pb_land = plan.pb_land
    cdef const double[::1] pb_sea = plan.pb_sea
    cdef const int64_t[::1] pb_mat_off = plan.pb_mat_off
    cdef const double[::1] bv_land = plan.bv_land
    cdef const double[::1] bv_sea = plan.bv_sea
    cdef const double[::1] vm_land = plan.vm_land
    cdef const double[::1] vm_sea = plan.vm_sea
    cdef const int64_t[::1] p_width = plan.p_width
    cdef int64_t nb = b_cdf.shape[0]

    idx_arr = np.empty((n_rows, 2 * ns + 3), dtype=np.int32)
    ep_arr = np.empty(n_rows, dtype=np.float64)
    pb_arr = np.empty(n_rows, dtype=np.float64)
    bv_arr = np.empty(n_rows, dtype=np.float64)
    vm_arr = np.empty(n_rows, dtype=np.float64)
    land_arr = np.empty(n_rows, dtype=np.float64)
    sea_arr = np.empty(n_rows, dtype=np.float64)
    total_arr = np.empty(n_rows, dtype=np.float64)

    cdef int32_t[:, ::1] idx = idx_arr
    cdef double[::1] ep_out = ep_arr
    cdef double[::1] pb_out = pb_arr
    cdef double[::1] bv_out = bv_arr
    cdef double[::1] vm_out = vm_arr
    cdef double[::1] land_out = land_arr
    cdef double[::1] sea_out = sea_arr
    cdef double[::1] total_out = total_arr

    cdef uint64_t z0 = mix64(<uint64_t> (seed & 0xFFFFFFFFFFFFFFFF))
    cdef uint64_t z1, counter
    cdef Py_ssize_t r, i
    cdef int64_t b_i, v_flat, m_flat, flat, e_i, p_i
    cdef double u, l, s, ep, pb, bv, vm, land, sea, total

    with nogil:
        for r in range(n_rows):
            z1 = mix64(z0 + (<uint64_t> (first_iter + r)) * (<uint64_t> 0x9E3779B97F4A7C15))
            counter = 0
            for i in range(ns):
                u = draw(z1, counter)
                idx[r, i] = <int32_t> (first_match(&e_cdf[0], e_off[i], e_off[i + 1], u) - e_off[i])
                counter += 1
            for i in range(ns):
                u = draw(z1, counter)
                idx[r, ns + i] = <int32_t> (first_match(&p_cdf[0], p_off[i], p_off[i + 1], u) - p_off[i])
                counter += 1
            u = draw(z1, counter)
            b_i = first_match(&b_cdf[0], 0, nb, u)
            idx[r, 2 * ns] = <int32_t> b_i
            counter += 1
            u = draw(z1, counter)
            v_flat = first_match(&v_cdf[0], v_off[b_i], v_off[b_i + 1], u)
            idx[r, 2 * ns + 1] = <int32_t> v_flat
            counter += 1
            u = draw(z1, counter)
            m_flat = first_match(&m_cdf[0], m_off[v_flat], m_off[v_flat + 1], u)
            idx[r, 2 * ns + 2] = <int32_t> m_flat

            ep = 0.0
            pb = 0.0
            land = 0.0
            sea = 0.0
            for i in range(ns):
                e_i = idx[r, i]
                p_i = idx[r, ns + i]
                flat = ep_mat_off[i] + e_i * p_width[i] + p_i
                l = ep_land[flat]
                s = ep_sea[flat]
                ep += l
                ep += s
                land += l
                sea += s
            for i in range(ns):
                p_i = idx[r, ns + i]
                flat = pb_mat_off[i] + p_i * nb + b_i
                l = pb_land[flat]
                s = pb_sea[flat]
                pb += l
                pb += s
                land += l
                sea += s
            l = bv_land[v_flat]
            s = bv_sea[v_flat]
            bv = l
            bv += s
            land += l
            sea += s
            l = vm_land[m_flat]
            s = vm_sea[m_flat]
            vm = l
            vm += s
            land += l
            sea += s

            total = ep
            total += pb
            total += bv
            total += vm
            ep_out[r] = ep
            pb_out[r] = pb
            bv_out[r] = bv
            vm_out[r] = vm
            land_out[r] = land
            sea_out[r] = sea
            total_out[r] = total

    return {
        "idx": idx_arr,
        "ep": ep_arr,
        "pb": pb_arr,
        "bv": bv_arr,
        "vm": vm_arr,
        "land": land_arr,
        "sea": sea_arr,
        "total": total_arr,
    }
