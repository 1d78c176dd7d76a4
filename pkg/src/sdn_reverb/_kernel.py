"""Sample-rate loop of the network, compiled with numba.

Buffer layout (see ``network.SDNNetwork``): one ring slot per tick shared by
all lines; ``ibuf`` rows are the directed internode lines ``i*K + p``,
``xbuf`` holds the input history and ``mbuf`` one row per node for the
extracted node pressure. ``delays`` is packed as
``[internode lines | source lines | mic lines | direct]`` and ``gains`` as
``[source lines | mic lines | direct]``.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _read(buf, pos, d, L):
    di = int(d)
    f = d - di
    i0 = (pos - di) % L
    if f == 0.0:
        return buf[i0]
    i1 = (pos - di - 1) % L
    return buf[i0] + f * (buf[i1] - buf[i0])


@njit(cache=True, nogil=True)
def run_block(
    x, out, ibuf, xbuf, mbuf, pos,
    delays0, delays1, gains0, gains1, ramp,
    slot_source, A, w, fb, fa, fstate,
    air_pole, air_state,
):
    n = x.shape[0]
    n_nodes = A.shape[0]
    K = A.shape[1]
    NL = n_nodes * K
    L = xbuf.shape[0]
    order = fstate.shape[1]
    d = delays1.copy()
    g = gains1.copy()
    pin = np.empty(K)
    for i in range(n):
        if ramp:
            t = (i + 1.0) / n
            for k in range(d.shape[0]):
                d[k] = delays0[k] + (delays1[k] - delays0[k]) * t
            for k in range(g.shape[0]):
                g[k] = gains0[k] + (gains1[k] - gains0[k]) * t
        xbuf[pos] = x[i]
        for j in range(n_nodes):
            ps = g[j] * _read(xbuf, pos, d[NL + j], L)
            for q in range(K):
                line = slot_source[j * K + q]
                v = _read(ibuf[line], pos, d[line], L)
                p = air_pole[line]
                if p != 0.0:
                    v = (1.0 - p) * v + p * air_state[line]
                    air_state[line] = v
                pin[q] = v + 0.5 * ps
            pe = 0.0
            for r in range(K):
                acc = 0.0
                for q in range(K):
                    acc += A[j, r, q] * pin[q]
                line = j * K + r
                u = fb[j, 0] * acc
                if order > 0:
                    u += fstate[line, 0]
                    for m in range(order - 1):
                        fstate[line, m] = fb[j, m + 1] * acc - fa[j, m + 1] * u + fstate[line, m + 1]
                    fstate[line, order - 1] = fb[j, order] * acc - fa[j, order] * u
                ibuf[line, pos] = u
                pe += w[j, r] * u
            mbuf[j, pos] = pe
        y = g[2 * n_nodes] * _read(xbuf, pos, d[NL + 2 * n_nodes], L)
        for j in range(n_nodes):
            y += g[n_nodes + j] * _read(mbuf[j], pos, d[NL + n_nodes + j], L)
        out[i] = y
        pos = (pos + 1) % L
        if not np.isfinite(y):
            return pos, i
    return pos, -1
