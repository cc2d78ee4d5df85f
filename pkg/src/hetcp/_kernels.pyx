# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loops.  Mirrors hetcp._pykernels statement for statement."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef class DirectKernel:
    """Gillespie loop with two exact thinnings of the same generator.

    Source scheme: every occupied site rings at 1 + lam*nu (lam = alpha for
    specialists, beta for generalists) and either dies or tries a uniform
    neighbour.  Target scheme: every occupied site dies at rate 1 and every
    empty site rings at lmax*nu, picks a uniform neighbour and accepts its
    offspring with probability lam/lmax.  ``scheme`` 0 picks, per event,
    whichever total rate is smaller; 1 forces source, 2 forces target.
    One exponential and three uniforms are consumed per event.
    """
    cdef public cnp.uint8_t[::1] states
    cdef const cnp.int32_t[:, ::1] nbr
    cdef const cnp.uint8_t[::1] host
    cdef cnp.int32_t[::1] slist
    cdef cnp.int32_t[::1] glist
    cdef cnp.int32_t[::1] elist
    cdef cnp.int32_t[::1] pos
    cdef public Py_ssize_t ns, ng, ne, nu
    cdef public double alpha, beta
    cdef public int scheme
    cdef public long long n_events, n_changes
    cdef long long cnt[4]

    def __init__(self, states, nbr, host, double alpha, double beta, int scheme=0):
        cdef Py_ssize_t i, n = states.shape[0]
        cdef int c
        self.states = np.array(states, dtype=np.uint8, copy=True)
        self.nbr = nbr
        self.host = host
        self.nu = nbr.shape[1]
        self.alpha = alpha
        self.beta = beta
        self.scheme = scheme
        self.slist = np.zeros(n, dtype=np.int32)
        self.glist = np.zeros(n, dtype=np.int32)
        self.elist = np.zeros(n, dtype=np.int32)
        self.pos = np.zeros(n, dtype=np.int32)
        self.ns = 0
        self.ng = 0
        self.ne = 0
        self.n_events = 0
        self.n_changes = 0
        for i in range(4):
            self.cnt[i] = 0
        for i in range(n):
            c = self.states[i]
            self.cnt[c] += 1
            self._add(i, c)

    def counts(self):
        return np.array([self.cnt[0], self.cnt[1], self.cnt[2], self.cnt[3]], dtype=np.int64)

    def get_states(self):
        return np.array(self.states, dtype=np.uint8, copy=True)

    cdef inline void _remove(self, Py_ssize_t x, int c):
        cdef Py_ssize_t p = self.pos[x], last
        if c == 0:
            self.ne -= 1
            last = self.elist[self.ne]
            self.elist[p] = last
        elif c == 3:
            self.ng -= 1
            last = self.glist[self.ng]
            self.glist[p] = last
        else:
            self.ns -= 1
            last = self.slist[self.ns]
            self.slist[p] = last
        self.pos[last] = p

    cdef inline void _add(self, Py_ssize_t x, int c):
        if c == 0:
            self.pos[x] = self.ne
            self.elist[self.ne] = x
            self.ne += 1
        elif c == 3:
            self.pos[x] = self.ng
            self.glist[self.ng] = x
            self.ng += 1
        else:
            self.pos[x] = self.ns
            self.slist[self.ns] = x
            self.ns += 1

    cdef inline void _set(self, Py_ssize_t x, int c):
        cdef int old = self.states[x]
        self._remove(x, old)
        self._add(x, c)
        self.states[x] = c
        self.cnt[old] -= 1
        self.cnt[c] += 1
        self.n_changes += 1

    def advance(self, double t, double t_stop, const double[::1] exps,
                const double[::1] unifs, Py_ssize_t i):
        cdef double rs = 1.0 + self.alpha * self.nu
        cdef double rg = 1.0 + self.beta * self.nu
        cdef double lmax = self.alpha if self.alpha > self.beta else self.beta
        cdef double re = lmax * self.nu
        cdef double tot_src, tot_tgt, total, ws, w, a, r, lam, t_next, u1, u2, u3
        cdef Py_ssize_t nbuf = exps.shape[0], k, j, x, y, nocc
        cdef int c
        cdef bint tgt
        while True:
            nocc = self.ns + self.ng
            if nocc == 0:
                return t_stop, i, True
            if i >= nbuf:
                return t, i, False
            tot_src = self.ns * rs + self.ng * rg
            tot_tgt = nocc + self.ne * re
            if self.scheme == 1 or re == 0.0:
                tgt = False
            elif self.scheme == 2:
                tgt = True
            else:
                tgt = tot_tgt < tot_src
            total = tot_tgt if tgt else tot_src
            t_next = t + exps[i] / total
            if t_next > t_stop:
                i += 1
                return t_stop, i, True
            t = t_next
            u1 = unifs[3 * i]
            u2 = unifs[3 * i + 1]
            u3 = unifs[3 * i + 2]
            i += 1
            self.n_events += 1
            w = u1 * total
            if tgt:
                if w < nocc or self.ne == 0:
                    k = <Py_ssize_t>w
                    if k >= nocc:
                        k = nocc - 1
                    x = self.slist[k] if k < self.ns else self.glist[k - self.ns]
                    self._set(x, 0)
                else:
                    k = <Py_ssize_t>((w - nocc) / re)
                    if k >= self.ne:
                        k = self.ne - 1
                    y = self.elist[k]
                    j = <Py_ssize_t>(u2 * self.nu)
                    if j >= self.nu:
                        j = self.nu - 1
                    c = self.states[self.nbr[y, j]]
                    if c == 3:
                        lam = self.beta
                    elif c != 0 and c == self.host[y]:
                        lam = self.alpha
                    else:
                        lam = 0.0
                    if u3 * lmax < lam:
                        self._set(y, c)
                continue
            ws = self.ns * rs
            if w < ws or self.ng == 0:
                k = <Py_ssize_t>(w / rs)
                if k >= self.ns:
                    k = self.ns - 1
                x = self.slist[k]
                r = rs
                lam = self.alpha
            else:
                k = <Py_ssize_t>((w - ws) / rg)
                if k >= self.ng:
                    k = self.ng - 1
                x = self.glist[k]
                r = rg
                lam = self.beta
            c = self.states[x]
            a = u2 * r
            if a < 1.0 or lam == 0.0:
                self._set(x, 0)
            else:
                j = <Py_ssize_t>((a - 1.0) / lam)
                if j >= self.nu:
                    j = self.nu - 1
                y = self.nbr[x, j]
                if self.states[y] == 0 and (c == 3 or self.host[y] == c):
                    self._set(y, c)


def replay(cnp.uint8_t[::1] states, const double[::1] times, const cnp.int8_t[::1] kind,
           const cnp.int32_t[::1] src, const cnp.int32_t[::1] dst,
           const cnp.uint8_t[::1] sflag, const cnp.uint8_t[::1] gflag):
    """Apply a time-sorted event list in place.  kind 0 = death at src."""
    cdef Py_ssize_t e, n = times.shape[0]
    cdef int c
    for e in range(n):
        if kind[e] == 0:
            states[src[e]] = 0
        else:
            c = states[src[e]]
            if c != 0 and states[dst[e]] == 0:
                if c == 3:
                    if not sflag[e]:
                        states[dst[e]] = c
                elif not gflag[e]:
                    states[dst[e]] = c
