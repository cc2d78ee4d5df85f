"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same arithmetic in the same order and the same random-buffer consumption,
so both backends produce identical trajectories for identical buffers.
"""
import numpy as np


class DirectKernel:
    def __init__(self, states, nbr, host, alpha, beta, scheme=0):
        self._states = [int(c) for c in states]
        self.nbr = np.asarray(nbr).tolist()
        self.host = [int(h) for h in host]
        self.nu = len(self.nbr[0]) if self.nbr else 0
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.scheme = scheme
        # lists indexed by state: empty, specialists, specialists, generalists
        self.elist, self.slist, self.glist = [], [], []
        self._lists = [self.elist, self.slist, self.slist, self.glist]
        self.pos = [0] * len(self._states)
        self.cnt = [0, 0, 0, 0]
        self.n_events = 0
        self.n_changes = 0
        for i, c in enumerate(self._states):
            self.cnt[c] += 1
            lst = self._lists[c]
            self.pos[i] = len(lst)
            lst.append(i)

    ns = property(lambda self: len(self.slist))
    ng = property(lambda self: len(self.glist))
    ne = property(lambda self: len(self.elist))

    def counts(self):
        return np.array(self.cnt, dtype=np.int64)

    def get_states(self):
        return np.array(self._states, dtype=np.uint8)

    def _set(self, x, c):
        states, pos, lists = self._states, self.pos, self._lists
        old = states[x]
        lst = lists[old]
        p = pos[x]
        last = lst.pop()
        if last != x:
            lst[p] = last
            pos[last] = p
        lst = lists[c]
        pos[x] = len(lst)
        lst.append(x)
        states[x] = c
        self.cnt[old] -= 1
        self.cnt[c] += 1
        self.n_changes += 1

    def advance(self, t, t_stop, exps, unifs, i):
        states, host, nbr = self._states, self.host, self.nbr
        slist, glist, elist = self.slist, self.glist, self.elist
        alpha, beta, nu = self.alpha, self.beta, self.nu
        rs = 1.0 + alpha * nu
        rg = 1.0 + beta * nu
        lmax = alpha if alpha > beta else beta
        re = lmax * nu
        nbuf = len(exps)
        while True:
            ns, ng, ne = len(slist), len(glist), len(elist)
            nocc = ns + ng
            if nocc == 0:
                return t_stop, i, True
            if i >= nbuf:
                return t, i, False
            tot_src = ns * rs + ng * rg
            tot_tgt = nocc + ne * re
            if self.scheme == 1 or re == 0.0:
                tgt = False
            elif self.scheme == 2:
                tgt = True
            else:
                tgt = tot_tgt < tot_src
            total = tot_tgt if tgt else tot_src
            t_next = t + float(exps[i]) / total
            if t_next > t_stop:
                return t_stop, i + 1, True
            t = t_next
            u1 = float(unifs[3 * i])
            u2 = float(unifs[3 * i + 1])
            u3 = float(unifs[3 * i + 2])
            i += 1
            self.n_events += 1
            w = u1 * total
            if tgt:
                if w < nocc or ne == 0:
                    k = min(int(w), nocc - 1)
                    self._set(slist[k] if k < ns else glist[k - ns], 0)
                else:
                    y = elist[min(int((w - nocc) / re), ne - 1)]
                    c = states[nbr[y][min(int(u2 * nu), nu - 1)]]
                    if c == 3:
                        lam = beta
                    elif c and c == host[y]:
                        lam = alpha
                    else:
                        lam = 0.0
                    if u3 * lmax < lam:
                        self._set(y, c)
                continue
            ws = ns * rs
            if w < ws or ng == 0:
                x, r, lam = slist[min(int(w / rs), ns - 1)], rs, alpha
            else:
                x, r, lam = glist[min(int((w - ws) / rg), ng - 1)], rg, beta
            c = states[x]
            a = u2 * r
            if a < 1.0 or lam == 0.0:
                self._set(x, 0)
            else:
                y = nbr[x][min(int((a - 1.0) / lam), nu - 1)]
                if states[y] == 0 and (c == 3 or host[y] == c):
                    self._set(y, c)


def replay(states, times, kind, src, dst, sflag, gflag):
    st = states.tolist()
    for k, x, z, s, g in zip(kind.tolist(), src.tolist(), dst.tolist(),
                             sflag.tolist(), gflag.tolist()):
        if k == 0:
            st[x] = 0
            continue
        c = st[x]
        if c and not st[z]:
            if (not s) if c == 3 else (not g):
                st[z] = c
    states[:] = st
