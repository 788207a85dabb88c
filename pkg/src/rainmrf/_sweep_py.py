"""Pure-Python Gibbs sweeps; reference twin of ``_sweep.pyx``.

Both kernels perform the same floating-point operations in the same order so
that, given identical uniforms, they produce identical chains.  States are
coded 0, 1, 2 here (1, 2, 3 elsewhere).
"""
from math import exp, inf


def gibbs_sweep(z, za, y, ya, mu, inv_sigma, mua, inv_sigma_a,
                nb_ptr, nb_idx, c_edge, D, spatial_on,
                log_P, log_1mP, temporal_on, aimr_w,
                log_node, log_node_aimr, order, u, record, counts, counts_a):
    """Run ``len(u)`` sweeps in place over ``z`` then ``za``.

    Row ``i`` of ``u`` holds the uniforms for sweep ``i``: one per entry of
    ``order`` followed by one per year.  Sweeps with ``record[i]`` set add the
    end-of-sweep state to ``counts``/``counts_a``.  Returns the largest
    |sum(p) - 1| over all conditionals, or -1.0 if one could not be normalised.
    """
    S, T = z.shape
    st = _State(z, za, y, ya, mu, inv_sigma, mua, nb_ptr, nb_idx, c_edge, log_node, log_node_aimr)
    order = order.tolist()
    max_err = 0.0
    for i in range(u.shape[0]):
        err = _sweep_once(st, S, T, float(inv_sigma_a), float(D), bool(spatial_on), float(log_P),
                          float(log_1mP), bool(temporal_on), float(aimr_w), order, u[i].tolist())
        if err < 0:
            return -1.0
        if err > max_err:
            max_err = err
        if record[i]:
            for s in range(S):
                row = st.z[s]
                cs = counts[s]
                for t in range(T):
                    cs[t, row[t]] += 1
            for t in range(T):
                counts_a[t, st.za[t]] += 1
    z[:, :] = st.z
    za[:] = st.za
    return max_err


class _State:
    def __init__(self, z, za, y, ya, mu, inv_sigma, mua, nb_ptr, nb_idx, c_edge, log_node, log_node_aimr):
        self.z = z.tolist()
        self.za = za.tolist()
        self.y = y.tolist()
        self.ya = ya.tolist()
        self.mu = mu.tolist()
        self.isg = inv_sigma.tolist()
        self.mua = mua.tolist()
        self.ptr = nb_ptr.tolist()
        self.idx = nb_idx.tolist()
        self.ce = c_edge.tolist()
        self.lnode = log_node.tolist()
        self.lnode_a = log_node_aimr.tolist()


def _sweep_once(st, S, T, inv_sigma_a, D, spatial_on, log_P, log_1mP, temporal_on, aimr_w, order, ul):
    zl, zal, ptr, idx, ce = st.z, st.za, st.ptr, st.idx, st.ce
    max_err = 0.0
    lw = [0.0, 0.0, 0.0]
    for k, node in enumerate(order):
        s = node // T
        t = node - s * T
        row = zl[s]
        ys = st.y[s][t]
        ms = st.mu[s]
        isg = st.isg[s]
        ln = st.lnode[s][t]
        for p in range(3):
            d = (ys - ms[p]) * isg
            w = ln[p] - 0.5 * (d * d)
            if spatial_on:
                for e in range(ptr[s], ptr[s + 1]):
                    if zl[idx[e]][t] == p:
                        w += ce[e]
                    else:
                        w += D
            if temporal_on:
                if t > 0:
                    w += log_P if row[t - 1] == p else log_1mP
                if t < T - 1:
                    w += log_P if row[t + 1] == p else log_1mP
            if zal[t] == p:
                w += aimr_w
            lw[p] = w
        new, err = _draw(lw, ul[k])
        if new < 0:
            return -1.0
        if err > max_err:
            max_err = err
        row[t] = new

    base = len(order)
    n = [0, 0, 0]
    for t in range(T):
        n[0] = n[1] = n[2] = 0
        for s in range(S):
            n[zl[s][t]] += 1
        for q in range(3):
            d = (st.ya[t] - st.mua[q]) * inv_sigma_a
            lw[q] = st.lnode_a[t][q] - 0.5 * (d * d) + aimr_w * n[q]
        new, err = _draw(lw, ul[base + t])
        if new < 0:
            return -1.0
        if err > max_err:
            max_err = err
        zal[t] = new
    return max_err


def _draw(lw, u):
    a, b, c = lw
    m = a
    if b > m:
        m = b
    if c > m:
        m = c
    if m != m or m == inf or m == -inf:
        return -1, 0.0
    w0 = exp(a - m)
    w1 = exp(b - m)
    w2 = exp(c - m)
    tot = w0 + w1 + w2
    p0 = w0 / tot
    p1 = w1 / tot
    p2 = w2 / tot
    err = abs((p0 + p1 + p2) - 1.0)
    if u < p0:
        return 0, err
    if u < p0 + p1:
        return 1, err
    return 2, err
