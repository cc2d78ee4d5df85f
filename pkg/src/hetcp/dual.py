"""Ancestry of a space-time point read backwards through an event log.

Going down from ``(x, T)`` the lineage at ``x`` lives until the first death
mark.  Every arrow tip met on that stretch, say ``y -> x`` at time ``t``,
starts a new lineage at ``(y, t)`` which is treated the same way.  Lineages
are ranked by integer keys compared lexicographically: the root has key
``()`` and the tips on a lineage with key ``u`` get ``u + (k,)``, where ``k``
counts tips upward from the bottom of the lineage (its death mark, or time 0
when it has none inside the window).  The ancestor with the smallest key is
the distinguished particle.

The type of ``(x, T)`` is read off by scanning ancestors that reach time 0
in key order: the first one sitting on an occupied site wins unless its way
up crosses an arrow its type may not use (g for specialists, s for
generalists), in which case every ancestor hanging below that arrow is
dropped and the scan continues.

The full ancestor tree grows exponentially with the window, so
:func:`reconstruct_type` runs the same scan over shared subtrees: the
lineage started by an arrow out of ``y`` at time ``t`` only depends on
``y`` and on the events at ``y`` before ``t``.  :func:`reconstruct_type_tree`
runs it literally on the enumerated tree and is meant for small windows.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .engine.graphical import ARROW, DEATH, EventLog
from .engine.state import Configuration
from .errors import ValidationError

MAX_NODES = 200_000


def normalize_key(key) -> tuple[int, ...]:
    """Drop trailing zeros, so (1, 2, 0, 0) and (1, 2) name the same rank."""
    key = tuple(int(k) for k in key)
    n = len(key)
    while n and key[n - 1] == 0:
        n -= 1
    return key[:n]


def key_str(key) -> str:
    key = normalize_key(key)
    return ".".join(map(str, key)) if key else "0"


@dataclass
class Node:
    site: int
    top: float            # time the lineage starts (T for the root)
    bottom: float         # death mark time, -inf when none in the window
    key: tuple
    s: bool = False       # labels of the arrow joining it to its parent
    g: bool = False
    parent: Node | None = field(default=None, repr=False)

    def alive(self, tau: float) -> bool:
        return self.bottom < tau <= self.top


@dataclass
class DualState:
    x: int
    T: float
    s: float
    ancestors: list          # (site, key) sorted by key
    nodes: list = field(default_factory=list, repr=False)

    @property
    def alive(self) -> bool:
        return bool(self.ancestors)

    @property
    def sites(self) -> set:
        return {site for site, _ in self.ancestors}

    @property
    def first(self):
        """Site of the distinguished particle, or None."""
        return self.ancestors[0][0] if self.ancestors else None


class SiteEvents:
    """Per-site time-sorted death marks and arrow tips of a log."""

    def __init__(self, log: EventLog):
        self.log = log
        n = log.spec.n_sites
        at = np.where(log.kind == DEATH, log.src, log.dst)
        order = np.lexsort((log.times, at))
        at = at[order]
        bounds = np.searchsorted(at, np.arange(n + 1))
        times = log.times[order].tolist()
        death = (log.kind[order] == DEATH).tolist()
        src = log.src[order].tolist()
        sfl = log.sflag[order].astype(bool).tolist()
        gfl = log.gflag[order].astype(bool).tolist()
        self.times, self.death, self.src, self.s, self.g, self.last_death = [], [], [], [], [], []
        for z in range(n):
            a, b = int(bounds[z]), int(bounds[z + 1])
            self.times.append(times[a:b])
            self.death.append(death[a:b])
            self.src.append(src[a:b])
            self.s.append(sfl[a:b])
            self.g.append(gfl[a:b])
            last, ld = -1, []
            for k, dk in enumerate(death[a:b]):
                if dk:
                    last = k
                ld.append(last)
            self.last_death.append(ld)

    def top_index(self, z: int, t: float, inclusive: bool) -> int:
        """Number of events at z strictly before t (or at or before, if inclusive)."""
        f = bisect.bisect_right if inclusive else bisect.bisect_left
        return f(self.times[z], t)

    def segment(self, z: int, hi: int) -> tuple[int, int]:
        """(index of the last death below ``hi`` or -1, hi)."""
        return (self.last_death[z][hi - 1] if hi else -1), hi


def _check_window(log: EventLog, T: float, s: float | None = None):
    if T > log.T + 1e-12 or T < 0:
        raise ValidationError(f"T={T} lies outside the log window [0, {log.T}]")
    if s is not None and not 0 <= s <= T:
        raise ValidationError(f"s={s} must lie in [0, T={T}]")


def ancestor_tree(x: int, T: float, log: EventLog, s: float | None = None,
                  max_nodes: int = MAX_NODES, events: SiteEvents | None = None) -> list[Node]:
    """Every lineage of the dual of (x, T) started by dual time ``s`` (default T).

    Nodes are returned in key order.  Raises when more than ``max_nodes``
    lineages would be created.
    """
    _check_window(log, T, s)
    ev = events or SiteEvents(log)
    tau = 0.0 if s is None else T - s
    out: list[Node] = []

    def build(site, top, inclusive, key, sflag, gflag, parent):
        if len(out) >= max_nodes:
            raise ValidationError(f"dual tree exceeds {max_nodes} lineages; shrink the window")
        hi = ev.top_index(site, top, inclusive)
        lo, hi = ev.segment(site, hi)
        bottom = ev.times[site][lo] if lo >= 0 else -np.inf
        node = Node(site, top, bottom, key, sflag, gflag, parent)
        out.append(node)
        tips = [j for j in range(lo + 1, hi) if not ev.death[site][j]]
        for k, j in enumerate(tips, start=1):
            t = ev.times[site][j]
            if t >= tau:
                build(ev.src[site][j], t, False, key + (k,), ev.s[site][j], ev.g[site][j], node)

    build(x, T, True, (), False, False, None)
    return out


def dual_ancestors(x: int, T: float, log: EventLog, s: float,
                   max_nodes: int = MAX_NODES) -> DualState:
    """Ancestors of (x, T) alive at dual time s, with their hierarchy keys."""
    nodes = ancestor_tree(x, T, log, s, max_nodes)
    tau = T - s
    live = [n for n in nodes if n.alive(tau)]
    return DualState(x, T, s, [(n.site, n.key) for n in live], nodes)


def dual_sites(x: int, T: float, log: EventLog, s: float) -> set:
    """Set of sites joined to (x, T) by a dual path reaching time T - s."""
    _check_window(log, T, s)
    hi = int(np.searchsorted(log.times, T, side="right"))
    lo = int(np.searchsorted(log.times, T - s, side="left"))
    cur = {x}
    for e in range(hi - 1, lo - 1, -1):
        if log.kind[e] == DEATH:
            cur.discard(int(log.src[e]))
        elif int(log.dst[e]) in cur:
            cur.add(int(log.src[e]))
    return cur


def distinguished_path(x: int, T: float, log: EventLog,
                       events: SiteEvents | None = None) -> list[tuple[float, float, int]]:
    """Location of the first ancestor as pieces ``(s_from, s_to, site)``.

    The first ancestor only changes when its own lineage hits a death mark:
    every lineage with a smaller key is already dead and new lineages get
    larger keys than their parent.  So the path is built death by death,
    each time taking the smallest-key lineage still alive just below it.
    Consecutive pieces on one site are merged; the path ends where the dual
    dies out (or at s = T).
    """
    _check_window(log, T)
    ev = events or SiteEvents(log)
    root = (x, ev.top_index(x, T, True))
    node, start = root, T
    pieces: list = []
    while node is not None:
        z, hi = node
        lo, _ = ev.segment(z, hi)
        bottom = ev.times[z][lo] if lo >= 0 else 0.0
        if pieces and pieces[-1][2] == z:
            pieces[-1] = (pieces[-1][0], T - bottom, z)
        else:
            pieces.append((T - start, T - bottom, z))
        if lo < 0:
            break
        node, start = _first_alive_below(root, bottom, ev), bottom
    return pieces


def _children(ev: SiteEvents, node, tau: float):
    """Lineages started by arrow tips on ``node``'s segment above ``tau``,
    in key order, as ``((site, top_index), top_time)``."""
    z, hi = node
    lo, _ = ev.segment(z, hi)
    for j in range(lo + 1, hi):
        t = ev.times[z][j]
        if not ev.death[z][j] and t > tau:
            y = ev.src[z][j]
            yield (y, ev.top_index(y, t, False)), t


def _first_alive_below(root, tau: float, ev: SiteEvents):
    """Smallest-key lineage alive just below forward time ``tau``."""
    live: dict = {}

    def alive_here(node):
        z, hi = node
        lo, _ = ev.segment(z, hi)
        return lo < 0 or ev.times[z][lo] < tau

    # post-order pass marking which subtrees hold a lineage alive at tau-
    stack = [(root, None)]
    while stack:
        node, kids = stack[-1]
        if node in live:
            stack.pop()
            continue
        if kids is None:
            if alive_here(node):
                live[node] = True
                stack.pop()
                continue
            kids = [c for c, _ in _children(ev, node, tau)]
            stack[-1] = (node, kids)
        pending = [c for c in kids if c not in live]
        if pending:
            stack.append((pending[0], None))
            continue
        live[node] = any(live[c] for c in kids)
        stack.pop()
    if not live[root]:
        return None
    node = root
    while not alive_here(node):
        node = next(c for c, _ in _children(ev, node, tau) if live[c])
    return node


def path_site(path, s: float):
    """Site of a :func:`distinguished_path` at dual time s (None once dead)."""
    for s_from, s_to, site in path:
        if s_from <= s <= s_to:
            return site
    return None


def _usable(c: int, s: bool, g: bool) -> bool:
    return not s if c == 3 else not g


def reconstruct_type_tree(x: int, T: float, log: EventLog, xi0: Configuration,
                          max_nodes: int = MAX_NODES) -> int:
    """Type of (x, T) by scanning the explicit ancestor list with pruning."""
    nodes = ancestor_tree(x, T, log, T, max_nodes)
    landed = [n for n in nodes if n.bottom < 0]
    pruned: set = set()
    state = xi0.states
    for n in landed:
        if any(n.key[:m] in pruned for m in range(len(n.key) + 1)):
            continue
        c = int(state[n.site])
        if not c:
            continue
        cur = n
        while cur.parent is not None and _usable(c, cur.s, cur.g):
            cur = cur.parent
        if cur.parent is None:
            return c
        pruned.add(cur.key)
    return 0


class DualReconstructor:
    """Type reconstruction for many points of one log, sharing lineages."""

    def __init__(self, log: EventLog, xi0: Configuration):
        if xi0.spec != log.spec:
            raise ValidationError("configuration and event log use different habitats")
        if log.params.alpha < log.params.beta:
            raise ValidationError("log was not built with alpha >= beta")
        self.log = log
        self.ev = SiteEvents(log)
        self.xi0 = xi0.states.tolist()
        self.memo: dict = {}

    def type_at(self, x: int, T: float | None = None) -> int:
        T = self.log.T if T is None else T
        _check_window(self.log, T)
        return self._value((x, self.ev.top_index(x, T, True)))

    def _value(self, root) -> int:
        ev, memo, xi0 = self.ev, self.memo, self.xi0
        stack = [root]
        cursor: dict = {}
        while stack:
            node = stack[-1]
            if node in memo:
                stack.pop()
                continue
            z, hi = node
            if node not in cursor:
                lo, _ = ev.segment(z, hi)
                if lo < 0 and xi0[z]:
                    memo[node] = xi0[z]
                    stack.pop()
                    continue
                cursor[node] = lo + 1
            j = cursor[node]
            result = None
            while j < hi:
                if ev.death[z][j]:
                    j += 1
                    continue
                y = ev.src[z][j]
                child = (y, ev.top_index(y, ev.times[z][j], False))
                c = memo.get(child)
                if c is None:
                    break
                if c and _usable(c, ev.s[z][j], ev.g[z][j]):
                    result = c
                    break
                j += 1
            cursor[node] = j
            if result is not None or j >= hi:
                memo[node] = result or 0
                del cursor[node]
                stack.pop()
            else:
                stack.append(child)
        return memo[root]


def reconstruct_type(x: int, T: float, log: EventLog, xi0: Configuration) -> int:
    """State of site x at time T read from the dual of (x, T)."""
    return DualReconstructor(log, xi0).type_at(x, T)


def reconstruct_all(log: EventLog, xi0: Configuration, T: float | None = None) -> np.ndarray:
    """Dual reconstruction at every site (one shared memo)."""
    r = DualReconstructor(log, xi0)
    return np.array([r.type_at(x, T) for x in range(log.spec.n_sites)], dtype=np.uint8)


def dump_tree(nodes, path) -> None:
    """Write ``parent_key child_key site time`` lines for every non-root lineage."""
    with open(path, "w") as fh:
        fh.write("# parent_key child_key site time\n")
        for n in nodes:
            if n.parent is not None:
                fh.write(f"{key_str(n.parent.key)} {key_str(n.key)} {n.site} {n.top!r}\n")
