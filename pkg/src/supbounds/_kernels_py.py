"""Pure-numpy fallback for the compiled survival counter.

Consumes the generator in the same order as the Cython kernel, so both
backends return the same count for the same generator state.
"""
import numpy as np


def survival_count(sd, thr, n_paths, rng, bridge=False, thr0=0.0):
    sd = np.ascontiguousarray(sd, dtype=float)
    thr = np.ascontiguousarray(thr, dtype=float)
    if sd.shape != thr.shape:
        raise ValueError("sd and thr must have equal length")
    w = np.zeros(int(n_paths))
    cprev = float(thr0)
    for k in range(sd.shape[0]):
        if w.size == 0:
            break
        s = sd[k]
        c = thr[k]
        z = rng.standard_normal(w.size)
        if bridge:
            uu = rng.random(w.size)
        wn = w + s * z
        keep = wn <= c
        if bridge and s * s > 0:
            with np.errstate(over="ignore"):
                p = np.exp(-2.0 * (cprev - w) * (c - wn) / (s * s))
            keep &= ~(uu < p)
        w = wn[keep]
        cprev = c
    return int(w.size)


def skeleton_survival_count(phases, block, n_paths, rng):
    phases = np.ascontiguousarray(phases, dtype=float).reshape(-1, 4)
    if block < 1:
        raise ValueError("block must be >= 1")
    w = np.zeros(int(n_paths))
    for c0, beta, h, nsteps in phases:
        nsteps = int(nsteps)
        k0 = 0
        while k0 < nsteps and w.size > 0:
            mb = min(block, nsteps - k0)
            cs = c0 + beta * (k0 * h)
            ce = c0 + beta * ((k0 + mb) * h)
            L = mb * h
            z = rng.standard_normal(w.size)
            uu = rng.random(w.size)
            d0 = cs - w
            w = w + np.sqrt(L) * z
            y = ce - w
            dead = y <= 0
            if mb > 1:
                with np.errstate(over="ignore"):
                    cross = ~dead & (uu < np.exp(-2.0 * d0 * y / L))
                cand = np.flatnonzero(cross)
            else:
                cand = np.empty(0, dtype=np.intp)
            if cand.size:
                dc = d0[cand]
                yc = y[cand]
                r = rng.wald((dc / L) / yc, (dc / L) * (dc / L))
                tau = r * L * L / (1.0 + r * L)
                sp = tau.copy()
                dd = np.zeros(cand.size)
                cdead = np.zeros(cand.size, dtype=bool)
                for k in range(1, mb):
                    sk = k * h
                    act = ~cdead & (sk > tau)
                    m = int(act.sum())
                    if m == 0:
                        continue
                    zz = rng.standard_normal(m)
                    dt = sk - sp[act]
                    rem = L - sp[act]
                    da = dd[act]
                    da = da + (yc[act] - da) * (dt / rem) + np.sqrt(dt * (L - sk) / rem) * zz
                    dd[act] = da
                    sp[act] = sk
                    cdead[act] = da < 0
                dead[cand] = cdead
            w = w[~dead]
            k0 += mb
    return int(w.size)
