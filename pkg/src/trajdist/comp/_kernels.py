"""Compiled ADMM sweep.

One call performs a full iteration for every instance of a batch in a
single pass over the frames: row and column simplex projections, the edge
prox, the consensus average and the dual updates. It computes exactly what
the vectorized NumPy step in :mod:`trajdist.comp.admm` computes, without
the intermediate full-size arrays.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

__all__ = ["HAVE_NUMBA", "admm_sweep"]

_BIG = 1e30

if HAVE_NUMBA:

    @njit(cache=True)
    def _proj_simplex(v, out, act):
        # Michelot: drop entries below the running threshold until none is left
        m = v.size
        s = 0.0
        cnt = 0
        for i in range(m):
            # masked entries carry a huge negative value and never enter
            act[i] = v[i] > -0.5 * _BIG
            if act[i]:
                s += v[i]
                cnt += 1
        if cnt == 0:
            for i in range(m):
                out[i] = 0.0
            return
        theta = (s - 1.0) / cnt
        while True:
            changed = False
            for i in range(m):
                if act[i] and v[i] <= theta:
                    act[i] = False
                    s -= v[i]
                    cnt -= 1
                    changed = True
            if not changed:
                break
            theta = (s - 1.0) / cnt
        for i in range(m):
            x = v[i] - theta
            out[i] = x if x > 0.0 else 0.0

    @njit(cache=True)
    def _sort_desc(buf, m):
        # insertion sort; the vectors here are short
        for i in range(1, m):
            x = buf[i]
            j = i - 1
            while j >= 0 and buf[j] < x:
                buf[j + 1] = buf[j]
                j -= 1
            buf[j + 1] = x

    @njit(cache=True)
    def _column_level(U, S, inv, j, tau, m):
        # soft-threshold level of column j for an l1 ball of radius tau;
        # the active set is a prefix of the sorted magnitudes and holds the largest
        if S[m - 1, j] <= tau:
            return 0.0, 0
        k = 1
        while k < m and U[k, j] > (S[k, j] - tau) * inv[k]:
            k += 1
        return (S[k - 1, j] - tau) * inv[k - 1], k

    @njit(cache=True)
    def _colsum_prox(E, lam, tau0, out, S, U, col, inv):
        m = E.shape[0]
        tot = 0.0
        for j in range(m):
            mx = 0.0
            for i in range(m):
                a = abs(E[i, j])
                if a > mx:
                    mx = a
            tot += mx
        if tot <= lam:
            for i in range(m):
                for j in range(m):
                    out[i, j] = 0.0
            return 0.0
        top = 0.0
        for j in range(m):
            for i in range(m):
                col[i] = abs(E[i, j])
            _sort_desc(col, m)
            c = 0.0
            for k in range(m):
                u = col[k]
                c += u
                U[k, j] = u
                S[k, j] = c
            if c > top:
                top = c
        tau = tau0
        if tau >= top or tau < 0.0:
            tau = 0.0
        for _ in range(60):
            phi = -lam
            slope = 0.0
            for j in range(m):
                mu, k = _column_level(U, S, inv, j, tau, m)
                if k > 0:
                    phi += mu
                    slope -= inv[k - 1]
            if abs(phi) <= 1e-13 * lam:
                break
            if slope == 0.0:
                new = 0.0
            else:
                new = tau - phi / slope
            if new < 0.0:
                new = 0.0
            if new == tau:
                break
            tau = new
        for j in range(m):
            mu, k = _column_level(U, S, inv, j, tau, m)
            for i in range(m):
                a = abs(E[i, j]) - mu
                if a > 0.0:
                    out[i, j] = a if E[i, j] > 0 else -a
                else:
                    out[i, j] = 0.0
        return tau

    @njit(cache=True)
    def _entrywise_prox(E, lam, out):
        m = E.shape[0]
        for i in range(m):
            for j in range(m):
                a = abs(E[i, j]) - lam
                if a > 0.0:
                    out[i, j] = a if E[i, j] > 0 else -a
                else:
                    out[i, j] = 0.0

    @njit(cache=True)
    def admm_sweep(Z, Znew, Ur, Uc, UL, UR, tau, D, rho, alpha, relax, colsum, mask, use_mask, pr2, du2):
        Bn, T, m, _ = Z.shape
        v = np.empty(m)
        o = np.empty(m)
        act = np.empty(m, np.bool_)
        col = np.empty(m)
        S = np.empty((m, m))
        Us = np.empty((m, m))
        inv = 1.0 / np.arange(1.0, m + 1.0)
        Xr = np.empty((m, m))
        Xc = np.empty((m, m))
        E = np.empty((m, m))
        Dd = np.empty((m, m))
        Lc = np.empty((m, m))
        Rn = np.empty((m, m))
        Rp = np.empty((m, m))
        for b in range(Bn):
            r = rho[b]
            inv_r = 1.0 / r
            lam = 2.0 * alpha[b] / r
            p2 = 0.0
            d2 = 0.0
            for t in range(T):
                for i in range(m):
                    for j in range(m):
                        x = Z[b, t, i, j] - Ur[b, t, i, j]
                        if use_mask and not mask[b, t, i, j]:
                            x = -_BIG
                        v[j] = x
                    _proj_simplex(v, o, act)
                    for j in range(m):
                        Xr[i, j] = relax * o[j] + (1.0 - relax) * Z[b, t, i, j]
                for j in range(m):
                    for i in range(m):
                        x = Z[b, t, i, j] - Uc[b, t, i, j]
                        if use_mask and not mask[b, t, i, j]:
                            x = -_BIG
                        v[i] = x
                    _proj_simplex(v, o, act)
                    for i in range(m):
                        Xc[i, j] = relax * o[i] + (1.0 - relax) * Z[b, t, i, j]
                has_next = t < T - 1
                if has_next:
                    for i in range(m):
                        for j in range(m):
                            E[i, j] = (Z[b, t + 1, i, j] - UR[b, t, i, j]) - (Z[b, t, i, j] - UL[b, t, i, j])
                    if colsum:
                        tau[b, t] = _colsum_prox(E, lam, tau[b, t], Dd, S, Us, col, inv)
                    else:
                        _entrywise_prox(E, lam, Dd)
                    for i in range(m):
                        for j in range(m):
                            h = 0.5 * (E[i, j] - Dd[i, j])
                            lv = Z[b, t, i, j] - UL[b, t, i, j] + h
                            rv = Z[b, t + 1, i, j] - UR[b, t, i, j] - h
                            Lc[i, j] = relax * lv + (1.0 - relax) * Z[b, t, i, j]
                            Rn[i, j] = relax * rv + (1.0 - relax) * Z[b, t + 1, i, j]
                n = 2.0
                if t > 0:
                    n += 1.0
                if has_next:
                    n += 1.0
                for i in range(m):
                    for j in range(m):
                        acc = Xr[i, j] + Ur[b, t, i, j] + Xc[i, j] + Uc[b, t, i, j] - D[b, t, i, j] * inv_r
                        if has_next:
                            acc += Lc[i, j] + UL[b, t, i, j]
                        if t > 0:
                            acc += Rp[i, j] + UR[b, t - 1, i, j]
                        z = acc / n
                        Znew[b, t, i, j] = z
                        q = Xr[i, j] - z
                        Ur[b, t, i, j] += q
                        p2 += q * q
                        q = Xc[i, j] - z
                        Uc[b, t, i, j] += q
                        p2 += q * q
                        if has_next:
                            q = Lc[i, j] - z
                            UL[b, t, i, j] += q
                            p2 += q * q
                        if t > 0:
                            q = Rp[i, j] - z
                            UR[b, t - 1, i, j] += q
                            p2 += q * q
                        dz = z - Z[b, t, i, j]
                        d2 += n * dz * dz
                if has_next:
                    for i in range(m):
                        for j in range(m):
                            Rp[i, j] = Rn[i, j]
            pr2[b] = p2
            du2[b] = r * r * d2

else:  # pragma: no cover

    def admm_sweep(*args, **kwargs):
        raise RuntimeError("numba is not available")
