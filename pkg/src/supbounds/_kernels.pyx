# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled survival counter for Gaussian random walks below a moving threshold.

Draw order matches ``_kernels_py.survival_count`` exactly: at every step all
normals for the surviving paths are drawn first (in path order), then, in
bridge mode, one uniform per surviving path.  Identical generator state in
gives an identical count out.
"""
import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport exp, sqrt
from numpy.random cimport bitgen_t


cdef extern from "numpy/random/distributions.h":
    double random_standard_normal(bitgen_t *bitgen_state) nogil


def survival_count(const double[::1] sd, const double[::1] thr, Py_ssize_t n_paths,
                   rng, bint bridge=False, double thr0=0.0):
    """Number of the ``n_paths`` walks ``S_k = sum_{i<=k} sd[i] Z_i`` with ``S_k <= thr[k]`` for all k."""
    if sd.shape[0] != thr.shape[0]:
        raise ValueError("sd and thr must have equal length")
    bit_generator = rng.bit_generator
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("rng does not expose a numpy BitGenerator capsule")
    cdef bitgen_t *bg = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef double[::1] w = np.zeros(n_paths)
    cdef double[::1] z = np.empty(n_paths)
    cdef double[::1] uu = np.empty(n_paths if bridge else 1)
    cdef Py_ssize_t m = sd.shape[0]
    cdef Py_ssize_t alive = n_paths
    cdef Py_ssize_t k, i, j
    cdef double s, c, cprev, wp, wn, var

    with bit_generator.lock, nogil:
        cprev = thr0
        for k in range(m):
            if alive == 0:
                break
            s = sd[k]
            c = thr[k]
            for i in range(alive):
                z[i] = random_standard_normal(bg)
            if bridge:
                for i in range(alive):
                    uu[i] = bg.next_double(bg.state)
            var = s * s
            j = 0
            for i in range(alive):
                wp = w[i]
                wn = wp + s * z[i]
                if wn <= c:
                    if bridge and var > 0:
                        if uu[i] < exp(-2.0 * (cprev - wp) * (c - wn) / var):
                            continue
                    w[j] = wn
                    j += 1
            alive = j
            cprev = c
    return alive


cdef extern from "numpy/random/distributions.h":
    double random_wald(bitgen_t *bitgen_state, double mean, double scale) nogil


def skeleton_survival_count(const double[:, ::1] phases, Py_ssize_t block, Py_ssize_t n_paths, rng):
    """Exact block-skipping simulation of a Brownian skeleton below a piecewise-linear boundary.

    ``phases`` rows are ``(c_start, slope, h, nsteps)``: the boundary starts
    at ``c_start`` and moves with ``slope`` while the skeleton takes
    ``nsteps`` steps of length ``h``.  Returns how many of ``n_paths``
    skeletons never exceed the boundary at a grid point.
    """
    if phases.shape[1] != 4:
        raise ValueError("phases must have shape (k, 4)")
    if block < 1:
        raise ValueError("block must be >= 1")
    bit_generator = rng.bit_generator
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("rng does not expose a numpy BitGenerator capsule")
    cdef bitgen_t *bg = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef double[::1] w = np.zeros(n_paths)
    cdef double[::1] z = np.empty(n_paths)
    cdef double[::1] uu = np.empty(n_paths)
    cdef double[::1] tau = np.empty(n_paths)
    cdef double[::1] dd = np.empty(n_paths)
    cdef double[::1] sp = np.empty(n_paths)
    cdef double[::1] yy = np.empty(n_paths)
    cdef Py_ssize_t[::1] cand = np.empty(n_paths, dtype=np.intp)
    cdef char[::1] dead = np.zeros(n_paths, dtype=np.int8)
    cdef Py_ssize_t alive = n_paths
    cdef Py_ssize_t ph, nsteps, k0, mb, i, j, k, nc, c
    cdef double c0, beta, h, cs, ce, L, d0, y, r, sk, dt, rem

    with bit_generator.lock, nogil:
        for ph in range(phases.shape[0]):
            c0 = phases[ph, 0]
            beta = phases[ph, 1]
            h = phases[ph, 2]
            nsteps = <Py_ssize_t> phases[ph, 3]
            k0 = 0
            while k0 < nsteps and alive > 0:
                mb = block if nsteps - k0 > block else nsteps - k0
                cs = c0 + beta * (k0 * h)
                ce = c0 + beta * ((k0 + mb) * h)
                L = mb * h
                for i in range(alive):
                    z[i] = random_standard_normal(bg)
                for i in range(alive):
                    uu[i] = bg.next_double(bg.state)
                nc = 0
                for i in range(alive):
                    d0 = cs - w[i]
                    w[i] = w[i] + sqrt(L) * z[i]
                    y = ce - w[i]
                    dead[i] = 0
                    if y <= 0:
                        dead[i] = 1
                    elif mb > 1 and uu[i] < exp(-2.0 * d0 * y / L):
                        cand[nc] = i
                        dd[nc] = d0
                        yy[nc] = y
                        nc += 1
                for c in range(nc):
                    r = random_wald(bg, (dd[c] / L) / yy[c], (dd[c] / L) * (dd[c] / L))
                    tau[c] = r * L * L / (1.0 + r * L)
                    sp[c] = tau[c]
                    dd[c] = 0.0
                for k in range(1, mb):
                    sk = k * h
                    for c in range(nc):
                        i = cand[c]
                        if dead[i] or not (sk > tau[c]):
                            continue
                        dt = sk - sp[c]
                        rem = L - sp[c]
                        dd[c] = dd[c] + (yy[c] - dd[c]) * (dt / rem) + sqrt(dt * (L - sk) / rem) * random_standard_normal(bg)
                        sp[c] = sk
                        if dd[c] < 0:
                            dead[i] = 1
                j = 0
                for i in range(alive):
                    if not dead[i]:
                        w[j] = w[i]
                        j += 1
                alive = j
                k0 += mb
    return alive
