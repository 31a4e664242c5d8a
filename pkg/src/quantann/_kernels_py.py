"""Pure numpy fallback for the compiled kernel core.

Mirrors _core exactly: same tie-breaking on (distance, id), same beam
search, same diversity selection, same reciprocal pruning. For int8 data
all distances are exact integers, so graphs and search results match the
compiled backend bit for bit. For float32 data numpy's pairwise summation
can differ from the compiled sequential accumulation in the last ulp, so
float32 agreement is approximate (and asserted only with tolerances).
"""

from __future__ import annotations

import heapq

import numpy as np

BACKEND = "pure"

_SCAN_CHUNK = 4096


def _widen(arr):
    if arr.dtype == np.float32:
        return arr.astype(np.float64)
    return arr.astype(np.int64)


def dot(a, b):
    """Inner product of two 1-D vectors of equal dtype (float32 or int8)."""
    if a.shape[0] != b.shape[0]:
        raise ValueError("length mismatch")
    if a.dtype != b.dtype:
        raise ValueError("dtype mismatch")
    return float(np.dot(_widen(a), _widen(b)))


def l2sq(a, b):
    """Squared Euclidean distance of two 1-D vectors of equal dtype."""
    if a.shape[0] != b.shape[0]:
        raise ValueError("length mismatch")
    if a.dtype != b.dtype:
        raise ValueError("dtype mismatch")
    diff = _widen(a) - _widen(b)
    return float(np.dot(diff, diff))


def norms(mat):
    """Euclidean norm of every row, rounded to float32 for storage."""
    if mat.shape[0] == 0 or mat.shape[1] == 0:
        return np.zeros(mat.shape[0], dtype=np.float32)
    wide = _widen(mat)
    sq = np.einsum("ij,ij->i", wide, wide)
    return np.sqrt(sq.astype(np.float64)).astype(np.float32)


def _dist_block(X, q, metric, xn=None, qn=None):
    """Distances from one widened query to a widened corpus block."""
    if metric == 1:
        diff = X - q
        return np.einsum("ij,ij->i", diff, diff).astype(np.float64)
    dots = (X @ q).astype(np.float64)
    if metric == 0:
        return -dots
    return 1.0 - dots / (xn.astype(np.float64) * float(qn))


def scan_topk(data, queries, k, metric, data_norms=None, query_norms=None):
    """Exhaustive top-k per query; rows ascending by (distance, id).

    Equivalent to a full lexicographic sort of (distance, id) truncated
    to min(k, n) entries.
    """
    if data.ndim != 2 or queries.ndim != 2:
        raise ValueError("data and queries must be 2-D")
    if data.dtype != queries.dtype:
        raise ValueError("dtype mismatch between data and queries")
    if data.shape[1] != queries.shape[1]:
        raise ValueError("dimension mismatch between data and queries")
    if k < 0:
        raise ValueError("k must be >= 0")
    n = data.shape[0]
    nq = queries.shape[0]
    keff = min(k, n)
    out_d = np.empty((nq, keff), dtype=np.float64)
    out_i = np.empty((nq, keff), dtype=np.int32)
    if n == 0 or nq == 0 or keff == 0:
        return out_d, out_i
    if metric == 2 and (
        data_norms is None
        or query_norms is None
        or data_norms.shape[0] != n
        or query_norms.shape[0] != nq
    ):
        raise ValueError("angular metric needs data and query norms")
    ids = np.arange(n)
    dv = np.empty(n, dtype=np.float64)
    for qi in range(nq):
        q = _widen(queries[qi])
        for lo in range(0, n, _SCAN_CHUNK):
            hi = min(lo + _SCAN_CHUNK, n)
            block = _widen(data[lo:hi])
            if metric == 2:
                dv[lo:hi] = _dist_block(
                    block, q, metric, data_norms[lo:hi], query_norms[qi]
                )
            else:
                dv[lo:hi] = _dist_block(block, q, metric)
        order = np.lexsort((ids, dv))[:keff]
        out_d[qi] = dv[order]
        out_i[qi] = order.astype(np.int32)
    return out_d, out_i


class HnswCore:
    """Pure-python twin of the compiled graph engine.

    Adjacency is a per-node list of per-layer python lists; everything else
    follows the compiled implementation decision for decision.
    """

    def __init__(self, data, metric, M, efc, levels, norms=None):
        if data.ndim != 2:
            raise ValueError("data must be a 2-D array")
        if metric not in (0, 1, 2):
            raise ValueError("metric must be 0, 1, or 2")
        if M < 2:
            raise ValueError("M must be >= 2")
        if efc < M:
            raise ValueError("EFC must be >= M")
        if data.dtype == np.float32:
            self.elem = 0
        elif data.dtype == np.int8:
            self.elem = 1
        else:
            raise ValueError("data must be float32 or int8")
        self.n = data.shape[0]
        self.d = data.shape[1]
        self.metric = metric
        self.M = M
        self.efc = efc
        self._data = data
        self._wide = _widen(data)
        lv = np.ascontiguousarray(levels, dtype=np.int32)
        if lv.shape[0] != self.n:
            raise ValueError("levels length must equal n")
        if self.n and int(lv.min()) < 0:
            raise ValueError("levels must be >= 0")
        self._levels = lv
        if metric == 2:
            if norms is None:
                raise ValueError("angular metric needs per-node norms")
            nr = np.ascontiguousarray(norms, dtype=np.float32)
            if nr.shape[0] != self.n:
                raise ValueError("norms length must equal n")
            self._nrm = nr
        else:
            self._nrm = np.empty(0, dtype=np.float32)
        self._adj = [
            [[] for _ in range(int(lv[i]) + 1)] for i in range(self.n)
        ]
        self.entry = -1
        self.max_level = -1
        self.count = 0
        self._q_node = -1
        self._q_wide = None
        self._q_norm = 0.0

    # -- distances ---------------------------------------------------------

    def _pair(self, a_wide, b_wide, na, nb):
        if self.metric == 1:
            diff = a_wide - b_wide
            return float(np.dot(diff, diff))
        v = float(np.dot(a_wide, b_wide))
        if self.metric == 0:
            return -v
        return 1.0 - v / (na * nb)

    def _dist_rows(self, a, b):
        na = nb = 0.0
        if self.metric == 2:
            na = float(self._nrm[a])
            nb = float(self._nrm[b])
        return self._pair(self._wide[a], self._wide[b], na, nb)

    def _dq(self, x):
        if self._q_node >= 0:
            return self._dist_rows(self._q_node, x)
        nx = float(self._nrm[x]) if self.metric == 2 else 0.0
        return self._pair(self._q_wide, self._wide[x], self._q_norm, nx)

    # -- traversal ---------------------------------------------------------

    def _greedy(self, cur, cur_d, layer):
        changed = True
        while changed:
            changed = False
            nbrs = self._adj[cur][layer]
            for u in nbrs:
                du = self._dq(u)
                if (du, u) < (cur_d, cur):
                    cur = u
                    cur_d = du
                    changed = True
        return cur, cur_d

    def _search_layer(self, ep, ep_d, ef, layer):
        visited = {ep}
        cand = [(ep_d, ep)]
        res = [(-ep_d, -ep)]
        while cand:
            cd, ci = cand[0]
            wd, wi = -res[0][0], -res[0][1]
            if len(res) >= ef and (cd, ci) > (wd, wi):
                break
            heapq.heappop(cand)
            for u in self._adj[ci][layer]:
                if u in visited:
                    continue
                visited.add(u)
                du = self._dq(u)
                wd, wi = -res[0][0], -res[0][1]
                if len(res) < ef or (du, u) < (wd, wi):
                    heapq.heappush(cand, (du, u))
                    heapq.heappush(res, (-du, -u))
                    if len(res) > ef:
                        heapq.heappop(res)
        return sorted((-d, -u) for d, u in res)

    def _select(self, cand_sorted, target):
        kept = []
        for dq, c in cand_sorted:
            if len(kept) == target:
                break
            good = True
            for _, t in kept:
                if not (dq < self._dist_rows(c, t)):
                    good = False
                    break
            if good:
                kept.append((dq, c))
        return kept

    def _link_back(self, s, inew, d_si, layer):
        cap = (2 * self.M) if layer == 0 else self.M
        lst = self._adj[s][layer]
        if len(lst) < cap:
            lst.append(inew)
            return
        cands = [(self._dist_rows(s, u), u) for u in lst]
        cands.append((d_si, inew))
        cands.sort()
        kept = self._select(cands, cap)
        self._adj[s][layer] = [u for _, u in kept]

    def _insert(self, i):
        L = int(self._levels[i])
        if self.count == 0:
            self.entry = i
            self.max_level = L
            self.count = 1
            return
        self._q_node = i
        cur = self.entry
        cur_d = self._dq(cur)
        for l in range(self.max_level, L, -1):
            cur, cur_d = self._greedy(cur, cur_d, l)
        top = min(L, self.max_level)
        for l in range(top, -1, -1):
            sel = self._search_layer(cur, cur_d, self.efc, l)
            kept = self._select(sel, self.M)
            self._adj[i][l] = [u for _, u in kept]
            for dsu, u in kept:
                self._link_back(u, i, dsu, l)
            cur_d, cur = sel[0]
        if L > self.max_level:
            self.entry = i
            self.max_level = L
        self.count += 1

    # -- public API (same surface as the compiled class) -------------------

    def insert_range(self, start, stop):
        """Insert nodes [start, stop) in id order; start must equal count."""
        if start != self.count:
            raise ValueError("insertions must be sequential from the current count")
        if stop > self.n or start > stop:
            raise ValueError("bad insert range")
        for i in range(start, stop):
            self._insert(i)

    def search(self, q, k, ef_search):
        """Top-k beam search for one external query vector."""
        if self.count == 0:
            return np.empty(0, dtype=np.float64), np.empty(0, dtype=np.int32)
        if k < 1:
            raise ValueError("k must be >= 1")
        self._q_node = -1
        self._q_wide = _widen(q)
        if self.metric == 2:
            sq = float(np.dot(self._q_wide, self._q_wide))
            self._q_norm = float(np.float32(np.sqrt(sq)))
        ef = max(ef_search, k)
        cur = self.entry
        cur_d = self._dq(cur)
        for l in range(self.max_level, 0, -1):
            cur, cur_d = self._greedy(cur, cur_d, l)
        found = self._search_layer(cur, cur_d, ef, 0)
        kk = min(k, len(found))
        out_d = np.empty(kk, dtype=np.float64)
        out_i = np.empty(kk, dtype=np.int32)
        for j in range(kk):
            out_d[j] = found[j][0]
            out_i[j] = found[j][1]
        return out_d, out_i

    def get_adjacency(self, node, layer):
        """Copy of one adjacency list, in stored order."""
        if node < 0 or node >= self.n:
            raise IndexError("node out of range")
        if layer < 0 or layer > int(self._levels[node]):
            raise IndexError("layer out of range for node")
        return np.asarray(self._adj[node][layer], dtype=np.int32)

    def set_adjacency(self, node, layer, ids):
        """Overwrite one adjacency list; used when loading a saved graph."""
        if node < 0 or node >= self.n:
            raise IndexError("node out of range")
        if layer < 0 or layer > int(self._levels[node]):
            raise IndexError("layer out of range for node")
        arr = np.ascontiguousarray(ids, dtype=np.int32)
        cap = (2 * self.M) if layer == 0 else self.M
        if arr.shape[0] > cap:
            raise ValueError("degree exceeds layer capacity")
        if arr.shape[0] and (int(arr.min()) < 0 or int(arr.max()) >= self.n):
            raise ValueError("edge target out of range")
        self._adj[node][layer] = [int(v) for v in arr]

    def finalize_load(self, entry, max_level, count):
        """Mark a deserialized graph complete."""
        if count < 0 or count > self.n:
            raise ValueError("bad count")
        if count > 0:
            if entry < 0 or entry >= self.n:
                raise ValueError("bad entry point")
            if int(self._levels[entry]) != max_level:
                raise ValueError("entry point level disagrees with max level")
        self.entry = entry
        self.max_level = max_level
        self.count = count
