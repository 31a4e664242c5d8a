# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: initializedcheck=False
# cython: cdivision=True
"""Compiled kernels: distance primitives, exhaustive top-k scan, graph core.

Contracts shared with the pure-python backend (_kernels_py):

* float32 distances accumulate in float64, strictly sequentially;
* int8 distances accumulate in int32 (exact for the supported d range)
  and are reported as float64, which is lossless below 2^53;
* every ordering decision breaks ties lexicographically on
  (distance, id), so outputs are reproducible bit for bit.
"""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


# ---------------------------------------------------------------------------
# distance primitives
# ---------------------------------------------------------------------------

cdef inline double _dot_f(const float* a, const float* b, Py_ssize_t d) nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t j
    for j in range(d):
        acc += (<double> a[j]) * (<double> b[j])
    return acc


cdef inline double _l2_f(const float* a, const float* b, Py_ssize_t d) nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t j
    for j in range(d):
        t = (<double> a[j]) - (<double> b[j])
        acc += t * t
    return acc


cdef inline int _dot_i(const signed char* a, const signed char* b, Py_ssize_t d) nogil:
    cdef int acc = 0
    cdef Py_ssize_t j
    for j in range(d):
        acc += (<int> a[j]) * (<int> b[j])
    return acc


cdef inline int _l2_i(const signed char* a, const signed char* b, Py_ssize_t d) nogil:
    cdef int acc = 0, t
    cdef Py_ssize_t j
    for j in range(d):
        t = (<int> a[j]) - (<int> b[j])
        acc += t * t
    return acc


cdef inline long long _sumsq_i(const signed char* a, Py_ssize_t d) nogil:
    # 64-bit on purpose: norms tolerate no overflow at any supported d
    cdef long long acc = 0
    cdef int t
    cdef Py_ssize_t j
    for j in range(d):
        t = <int> a[j]
        acc += <long long> (t * t)
    return acc


cdef inline double _pair_f(const float* a, const float* b, Py_ssize_t d,
                           int metric, double na, double nb) nogil:
    cdef double v
    if metric == 1:
        return _l2_f(a, b, d)
    v = _dot_f(a, b, d)
    if metric == 0:
        return -v
    return 1.0 - v / (na * nb)


cdef inline double _pair_i(const signed char* a, const signed char* b, Py_ssize_t d,
                           int metric, double na, double nb) nogil:
    cdef double v
    if metric == 1:
        return <double> _l2_i(a, b, d)
    v = <double> _dot_i(a, b, d)
    if metric == 0:
        return -v
    return 1.0 - v / (na * nb)


def dot(a, b):
    """Inner product of two 1-D vectors of equal dtype (float32 or int8)."""
    cdef const float[::1] af, bf
    cdef const signed char[::1] ai, bi
    if a.shape[0] != b.shape[0]:
        raise ValueError("length mismatch")
    if a.dtype != b.dtype:
        raise ValueError("dtype mismatch")
    if a.shape[0] == 0:
        return 0.0
    if a.dtype == np.float32:
        af = a
        bf = b
        return _dot_f(&af[0], &bf[0], af.shape[0])
    ai = a
    bi = b
    return <double> _dot_i(&ai[0], &bi[0], ai.shape[0])


def l2sq(a, b):
    """Squared Euclidean distance of two 1-D vectors of equal dtype."""
    cdef const float[::1] af, bf
    cdef const signed char[::1] ai, bi
    if a.shape[0] != b.shape[0]:
        raise ValueError("length mismatch")
    if a.dtype != b.dtype:
        raise ValueError("dtype mismatch")
    if a.shape[0] == 0:
        return 0.0
    if a.dtype == np.float32:
        af = a
        bf = b
        return _l2_f(&af[0], &bf[0], af.shape[0])
    ai = a
    bi = b
    return <double> _l2_i(&ai[0], &bi[0], ai.shape[0])


def norms(mat):
    """Euclidean norm of every row, rounded to float32 for storage."""
    cdef const float[:, ::1] mf
    cdef const signed char[:, ::1] mi
    cdef Py_ssize_t i, n, d
    out = np.empty(mat.shape[0], dtype=np.float32)
    cdef float[::1] ov = out
    n = mat.shape[0]
    d = mat.shape[1]
    if n == 0 or d == 0:
        out[:] = 0.0
        return out
    if mat.dtype == np.float32:
        mf = mat
        for i in range(n):
            ov[i] = <float> sqrt(_dot_f(&mf[i, 0], &mf[i, 0], d))
    else:
        mi = mat
        for i in range(n):
            ov[i] = <float> sqrt(<double> _sumsq_i(&mi[i, 0], d))
    return out


# ---------------------------------------------------------------------------
# (distance, id) heaps on parallel arrays
# ---------------------------------------------------------------------------

cdef inline bint _lex_lt(double d1, int i1, double d2, int i2) nogil:
    if d1 != d2:
        return d1 < d2
    return i1 < i2


cdef inline bint _lex_gt(double d1, int i1, double d2, int i2) nogil:
    if d1 != d2:
        return d1 > d2
    return i1 > i2


cdef inline int _minh_push(double[::1] hd, int[::1] hi, int size,
                           double d, int node) nogil:
    cdef int c = size, p
    cdef double td
    cdef int ti
    hd[c] = d
    hi[c] = node
    while c > 0:
        p = (c - 1) >> 1
        if _lex_lt(hd[c], hi[c], hd[p], hi[p]):
            td = hd[c]; hd[c] = hd[p]; hd[p] = td
            ti = hi[c]; hi[c] = hi[p]; hi[p] = ti
            c = p
        else:
            break
    return size + 1


cdef inline void _minh_sift(double[::1] hd, int[::1] hi, int size) nogil:
    cdef int c = 0, l, r, m
    cdef double td
    cdef int ti
    while True:
        l = 2 * c + 1
        r = l + 1
        m = c
        if l < size and _lex_lt(hd[l], hi[l], hd[m], hi[m]):
            m = l
        if r < size and _lex_lt(hd[r], hi[r], hd[m], hi[m]):
            m = r
        if m == c:
            break
        td = hd[c]; hd[c] = hd[m]; hd[m] = td
        ti = hi[c]; hi[c] = hi[m]; hi[m] = ti
        c = m


cdef inline int _minh_pop(double[::1] hd, int[::1] hi, int size) nogil:
    size -= 1
    hd[0] = hd[size]
    hi[0] = hi[size]
    _minh_sift(hd, hi, size)
    return size


cdef inline int _maxh_push(double[::1] hd, int[::1] hi, int size,
                           double d, int node) nogil:
    cdef int c = size, p
    cdef double td
    cdef int ti
    hd[c] = d
    hi[c] = node
    while c > 0:
        p = (c - 1) >> 1
        if _lex_gt(hd[c], hi[c], hd[p], hi[p]):
            td = hd[c]; hd[c] = hd[p]; hd[p] = td
            ti = hi[c]; hi[c] = hi[p]; hi[p] = ti
            c = p
        else:
            break
    return size + 1


cdef inline void _maxh_sift(double[::1] hd, int[::1] hi, int size) nogil:
    cdef int c = 0, l, r, m
    cdef double td
    cdef int ti
    while True:
        l = 2 * c + 1
        r = l + 1
        m = c
        if l < size and _lex_gt(hd[l], hi[l], hd[m], hi[m]):
            m = l
        if r < size and _lex_gt(hd[r], hi[r], hd[m], hi[m]):
            m = r
        if m == c:
            break
        td = hd[c]; hd[c] = hd[m]; hd[m] = td
        ti = hi[c]; hi[c] = hi[m]; hi[m] = ti
        c = m


cdef inline int _maxh_pop(double[::1] hd, int[::1] hi, int size) nogil:
    size -= 1
    hd[0] = hd[size]
    hi[0] = hi[size]
    _maxh_sift(hd, hi, size)
    return size


# ---------------------------------------------------------------------------
# exhaustive scan
# ---------------------------------------------------------------------------

cdef void _scan_f32(const float[:, ::1] X, const float[:, ::1] Q, int k, int metric,
                    const float[::1] xn, const float[::1] qn,
                    double[:, ::1] od, int[:, ::1] oi,
                    double[::1] hd, int[::1] hi):
    cdef Py_ssize_t n = X.shape[0], nq = Q.shape[0], d = X.shape[1]
    cdef Py_ssize_t q, r
    cdef int size, j
    cdef double dv, qnorm = 0.0
    cdef const float* qp
    for q in range(nq):
        qp = &Q[q, 0]
        if metric == 2:
            qnorm = <double> qn[q]
        size = 0
        for r in range(n):
            if metric == 2:
                dv = _pair_f(qp, &X[r, 0], d, 2, qnorm, <double> xn[r])
            else:
                dv = _pair_f(qp, &X[r, 0], d, metric, 0.0, 0.0)
            if size < k:
                size = _maxh_push(hd, hi, size, dv, <int> r)
            elif _lex_lt(dv, <int> r, hd[0], hi[0]):
                hd[0] = dv
                hi[0] = <int> r
                _maxh_sift(hd, hi, size)
        for j in range(size - 1, -1, -1):
            od[q, j] = hd[0]
            oi[q, j] = hi[0]
            size = _maxh_pop(hd, hi, size)


cdef void _scan_i8(const signed char[:, ::1] X, const signed char[:, ::1] Q,
                   int k, int metric,
                   const float[::1] xn, const float[::1] qn,
                   double[:, ::1] od, int[:, ::1] oi,
                   double[::1] hd, int[::1] hi):
    cdef Py_ssize_t n = X.shape[0], nq = Q.shape[0], d = X.shape[1]
    cdef Py_ssize_t q, r
    cdef int size, j
    cdef double dv, qnorm = 0.0
    cdef const signed char* qp
    for q in range(nq):
        qp = &Q[q, 0]
        if metric == 2:
            qnorm = <double> qn[q]
        size = 0
        for r in range(n):
            if metric == 2:
                dv = _pair_i(qp, &X[r, 0], d, 2, qnorm, <double> xn[r])
            else:
                dv = _pair_i(qp, &X[r, 0], d, metric, 0.0, 0.0)
            if size < k:
                size = _maxh_push(hd, hi, size, dv, <int> r)
            elif _lex_lt(dv, <int> r, hd[0], hi[0]):
                hd[0] = dv
                hi[0] = <int> r
                _maxh_sift(hd, hi, size)
        for j in range(size - 1, -1, -1):
            od[q, j] = hd[0]
            oi[q, j] = hi[0]
            size = _maxh_pop(hd, hi, size)


def scan_topk(data, queries, int k, int metric, data_norms=None, query_norms=None):
    """Exhaustive top-k per query over a bounded (distance, id) max-heap.

    Returns (dists float64 [nq, k'], ids int32 [nq, k']) with k' = min(k, n),
    each row ascending by (distance, id): exactly the first k' entries of a
    full lexicographic sort.
    """
    if data.ndim != 2 or queries.ndim != 2:
        raise ValueError("data and queries must be 2-D")
    if data.dtype != queries.dtype:
        raise ValueError("dtype mismatch between data and queries")
    if data.shape[1] != queries.shape[1]:
        raise ValueError("dimension mismatch between data and queries")
    if k < 0:
        raise ValueError("k must be >= 0")
    cdef Py_ssize_t n = data.shape[0]
    cdef int keff = k if k < n else <int> n
    out_d = np.empty((queries.shape[0], keff), dtype=np.float64)
    out_i = np.empty((queries.shape[0], keff), dtype=np.int32)
    if n == 0 or queries.shape[0] == 0 or keff == 0:
        return out_d, out_i
    empty = np.empty(0, dtype=np.float32)
    dn = empty if data_norms is None else data_norms
    qn = empty if query_norms is None else query_norms
    if metric == 2 and (dn.shape[0] != n or qn.shape[0] != queries.shape[0]):
        raise ValueError("angular metric needs data and query norms")
    hd = np.empty(keff + 1, dtype=np.float64)
    hi = np.empty(keff + 1, dtype=np.int32)
    if data.dtype == np.float32:
        _scan_f32(data, queries, keff, metric, dn, qn, out_d, out_i, hd, hi)
    else:
        _scan_i8(data, queries, keff, metric, dn, qn, out_d, out_i, hd, hi)
    return out_d, out_i


# ---------------------------------------------------------------------------
# layered proximity graph
# ---------------------------------------------------------------------------

cdef class HnswCore:
    """Storage and traversal engine for the layered graph.

    Vectors and per-node levels are fixed at construction; edges are built by
    sequential insert_range calls. Adjacency lives in one flat int32 buffer,
    one block per node: layer blocks in ascending layer order, each block a
    degree slot followed by capacity id slots (2M on layer 0, M above).
    """

    cdef const float[:, ::1] vf
    cdef const signed char[:, ::1] vi
    cdef const float[::1] nrm
    cdef const int[::1] levels
    cdef long long[::1] off
    cdef int[::1] edges
    cdef unsigned int[::1] visited
    cdef unsigned int epoch
    cdef readonly int n, d, elem, metric, M, efc
    cdef readonly int entry, max_level, count
    # scratch buffers; single-threaded use only
    cdef double[::1] cand_d, res_d, sel_d, rp_d, keep_d, nbr_d
    cdef int[::1] cand_i, res_i, sel_i, rp_i, keep_i, nbr_i
    # active query: a stored node id, or an external vector
    cdef int q_node
    cdef const float[::1] qf
    cdef const signed char[::1] qi
    cdef double qnorm

    def __cinit__(self, data, int metric, int M, int efc, levels, norms=None):
        if data.ndim != 2:
            raise ValueError("data must be a 2-D array")
        if metric < 0 or metric > 2:
            raise ValueError("metric must be 0, 1, or 2")
        if M < 2:
            raise ValueError("M must be >= 2")
        if efc < M:
            raise ValueError("EFC must be >= M")
        cdef Py_ssize_t n = data.shape[0]
        self.n = <int> n
        self.d = <int> data.shape[1]
        self.metric = metric
        self.M = M
        self.efc = efc
        if data.dtype == np.float32:
            self.elem = 0
            self.vf = data
        elif data.dtype == np.int8:
            self.elem = 1
            self.vi = data
        else:
            raise ValueError("data must be float32 or int8")
        lv = np.ascontiguousarray(levels, dtype=np.int32)
        if lv.shape[0] != n:
            raise ValueError("levels length must equal n")
        if n and int(lv.min()) < 0:
            raise ValueError("levels must be >= 0")
        self.levels = lv
        if metric == 2:
            if norms is None:
                raise ValueError("angular metric needs per-node norms")
            nr = np.ascontiguousarray(norms, dtype=np.float32)
            if nr.shape[0] != n:
                raise ValueError("norms length must equal n")
            self.nrm = nr
        else:
            self.nrm = np.empty(0, dtype=np.float32)
        per = (1 + 2 * M) + lv.astype(np.int64) * (1 + M)
        off = np.zeros(n + 1, dtype=np.int64)
        if n:
            np.cumsum(per, out=off[1:])
        self.off = off
        self.edges = np.zeros(int(off[n]), dtype=np.int32)
        self.visited = np.zeros(max(n, 1), dtype=np.uint32)
        self.epoch = 0
        cap = int(n) + 2
        self.cand_d = np.empty(cap, dtype=np.float64)
        self.cand_i = np.empty(cap, dtype=np.int32)
        self.res_d = np.empty(cap, dtype=np.float64)
        self.res_i = np.empty(cap, dtype=np.int32)
        self.sel_d = np.empty(cap, dtype=np.float64)
        self.sel_i = np.empty(cap, dtype=np.int32)
        scap = 2 * M + 2
        self.rp_d = np.empty(scap, dtype=np.float64)
        self.rp_i = np.empty(scap, dtype=np.int32)
        self.keep_d = np.empty(scap, dtype=np.float64)
        self.keep_i = np.empty(scap, dtype=np.int32)
        self.nbr_d = np.empty(scap, dtype=np.float64)
        self.nbr_i = np.empty(scap, dtype=np.int32)
        self.entry = -1
        self.max_level = -1
        self.count = 0
        self.q_node = -1
        self.qnorm = 0.0

    cdef inline Py_ssize_t _layer_off(self, int node, int layer) nogil:
        cdef Py_ssize_t o = self.off[node]
        if layer > 0:
            o += (1 + 2 * self.M) + (<Py_ssize_t> (layer - 1)) * (1 + self.M)
        return o

    cdef inline double _dist_rows(self, int a, int b) nogil:
        if self.elem == 0:
            if self.metric == 2:
                return _pair_f(&self.vf[a, 0], &self.vf[b, 0], self.d, 2,
                               <double> self.nrm[a], <double> self.nrm[b])
            return _pair_f(&self.vf[a, 0], &self.vf[b, 0], self.d, self.metric, 0.0, 0.0)
        if self.metric == 2:
            return _pair_i(&self.vi[a, 0], &self.vi[b, 0], self.d, 2,
                           <double> self.nrm[a], <double> self.nrm[b])
        return _pair_i(&self.vi[a, 0], &self.vi[b, 0], self.d, self.metric, 0.0, 0.0)

    cdef inline double _dq(self, int x) nogil:
        if self.q_node >= 0:
            return self._dist_rows(self.q_node, x)
        if self.elem == 0:
            if self.metric == 2:
                return _pair_f(&self.qf[0], &self.vf[x, 0], self.d, 2,
                               self.qnorm, <double> self.nrm[x])
            return _pair_f(&self.qf[0], &self.vf[x, 0], self.d, self.metric, 0.0, 0.0)
        if self.metric == 2:
            return _pair_i(&self.qi[0], &self.vi[x, 0], self.d, 2,
                           self.qnorm, <double> self.nrm[x])
        return _pair_i(&self.qi[0], &self.vi[x, 0], self.d, self.metric, 0.0, 0.0)

    cdef inline void _bump_epoch(self) nogil:
        cdef Py_ssize_t j
        self.epoch += 1
        if self.epoch == 0:
            for j in range(self.n):
                self.visited[j] = 0
            self.epoch = 1

    cdef (int, double) _greedy(self, int cur, double cur_d, int layer) nogil:
        # strict-improvement hill climb; the scanned list is the one the
        # pass started on, matching the reference formulation
        cdef bint changed = True
        cdef Py_ssize_t o
        cdef int deg, j, u
        cdef double du
        while changed:
            changed = False
            o = self._layer_off(cur, layer)
            deg = self.edges[o]
            for j in range(deg):
                u = self.edges[o + 1 + j]
                du = self._dq(u)
                if _lex_lt(du, u, cur_d, cur):
                    cur = u
                    cur_d = du
                    changed = True
        return cur, cur_d

    cdef int _search_layer(self, int ep, double ep_d, int ef, int layer) nogil:
        # beam search; fills the res_d/res_i max-heap, returns its size
        cdef int csize = 0, rsize = 0
        cdef double cd, du
        cdef int ci, u, j, deg
        cdef Py_ssize_t o
        self._bump_epoch()
        self.visited[ep] = self.epoch
        csize = _minh_push(self.cand_d, self.cand_i, csize, ep_d, ep)
        rsize = _maxh_push(self.res_d, self.res_i, rsize, ep_d, ep)
        while csize > 0:
            cd = self.cand_d[0]
            ci = self.cand_i[0]
            if rsize >= ef and _lex_gt(cd, ci, self.res_d[0], self.res_i[0]):
                break
            csize = _minh_pop(self.cand_d, self.cand_i, csize)
            o = self._layer_off(ci, layer)
            deg = self.edges[o]
            for j in range(deg):
                u = self.edges[o + 1 + j]
                if self.visited[u] == self.epoch:
                    continue
                self.visited[u] = self.epoch
                du = self._dq(u)
                if rsize < ef or _lex_lt(du, u, self.res_d[0], self.res_i[0]):
                    csize = _minh_push(self.cand_d, self.cand_i, csize, du, u)
                    rsize = _maxh_push(self.res_d, self.res_i, rsize, du, u)
                    if rsize > ef:
                        rsize = _maxh_pop(self.res_d, self.res_i, rsize)
        return rsize

    cdef int _select(self, double[::1] cd, int[::1] ci, int nc, int target) nogil:
        # distance-diversity filter over candidates sorted ascending by
        # (distance, id): keep c only if it is strictly closer to the
        # query point than to every already-kept neighbor
        cdef int nk = 0, j, t, c
        cdef double dq
        cdef bint good
        for j in range(nc):
            if nk == target:
                break
            c = ci[j]
            dq = cd[j]
            good = True
            for t in range(nk):
                if not (dq < self._dist_rows(c, self.keep_i[t])):
                    good = False
                    break
            if good:
                self.keep_d[nk] = dq
                self.keep_i[nk] = c
                nk += 1
        return nk

    cdef void _link_back(self, int s, int inew, double d_si, int layer) nogil:
        cdef int cap = (2 * self.M) if layer == 0 else self.M
        cdef Py_ssize_t o = self._layer_off(s, layer)
        cdef int deg = self.edges[o]
        cdef int nc = 0, j, p, u, nk
        cdef double dv
        if deg < cap:
            self.edges[o + 1 + deg] = inew
            self.edges[o] = deg + 1
            return
        # full: re-select over existing neighbors plus the newcomer
        for j in range(deg):
            u = self.edges[o + 1 + j]
            self.rp_d[nc] = self._dist_rows(s, u)
            self.rp_i[nc] = u
            nc += 1
        self.rp_d[nc] = d_si
        self.rp_i[nc] = inew
        nc += 1
        for j in range(1, nc):
            dv = self.rp_d[j]
            u = self.rp_i[j]
            p = j - 1
            while p >= 0 and _lex_gt(self.rp_d[p], self.rp_i[p], dv, u):
                self.rp_d[p + 1] = self.rp_d[p]
                self.rp_i[p + 1] = self.rp_i[p]
                p -= 1
            self.rp_d[p + 1] = dv
            self.rp_i[p + 1] = u
        nk = self._select(self.rp_d, self.rp_i, nc, cap)
        self.edges[o] = nk
        for j in range(nk):
            self.edges[o + 1 + j] = self.keep_i[j]

    cdef void _insert(self, int i) nogil:
        cdef int L = self.levels[i]
        cdef int cur, l, top, nres, sz, nk, j
        cdef double cur_d
        cdef Py_ssize_t o
        if self.count == 0:
            self.entry = i
            self.max_level = L
            self.count = 1
            return
        self.q_node = i
        cur = self.entry
        cur_d = self._dq(cur)
        for l in range(self.max_level, L, -1):
            cur, cur_d = self._greedy(cur, cur_d, l)
        top = L if L < self.max_level else self.max_level
        for l in range(top, -1, -1):
            nres = self._search_layer(cur, cur_d, self.efc, l)
            sz = nres
            for j in range(nres - 1, -1, -1):
                self.sel_d[j] = self.res_d[0]
                self.sel_i[j] = self.res_i[0]
                sz = _maxh_pop(self.res_d, self.res_i, sz)
            nk = self._select(self.sel_d, self.sel_i, nres, self.M)
            for j in range(nk):
                self.nbr_d[j] = self.keep_d[j]
                self.nbr_i[j] = self.keep_i[j]
            o = self._layer_off(i, l)
            self.edges[o] = nk
            for j in range(nk):
                self.edges[o + 1 + j] = self.nbr_i[j]
            for j in range(nk):
                self._link_back(self.nbr_i[j], i, self.nbr_d[j], l)
            cur = self.sel_i[0]
            cur_d = self.sel_d[0]
        if L > self.max_level:
            self.entry = i
            self.max_level = L
        self.count += 1

    def insert_range(self, int start, int stop):
        """Insert nodes [start, stop) in id order; start must equal count."""
        if start != self.count:
            raise ValueError("insertions must be sequential from the current count")
        if stop > self.n or start > stop:
            raise ValueError("bad insert range")
        cdef int i
        for i in range(start, stop):
            self._insert(i)

    def search(self, q, int k, int ef_search):
        """Top-k beam search for one external query vector.

        Returns (dists float64, ids int32) ascending by (distance, id),
        length min(k, reachable results).
        """
        if self.count == 0:
            return np.empty(0, dtype=np.float64), np.empty(0, dtype=np.int32)
        if k < 1:
            raise ValueError("k must be >= 1")
        cdef const float[::1] qfv
        cdef const signed char[::1] qiv
        cdef double qn = 0.0
        self.q_node = -1
        if self.elem == 0:
            qfv = q
            self.qf = qfv
            if self.metric == 2:
                qn = <double> (<float> sqrt(_dot_f(&qfv[0], &qfv[0], self.d)))
        else:
            qiv = q
            self.qi = qiv
            if self.metric == 2:
                qn = <double> (<float> sqrt(<double> _sumsq_i(&qiv[0], self.d)))
        self.qnorm = qn
        cdef int ef = ef_search if ef_search > k else k
        cdef int cur = self.entry
        cdef double cur_d = self._dq(cur)
        cdef int l
        for l in range(self.max_level, 0, -1):
            cur, cur_d = self._greedy(cur, cur_d, l)
        cdef int nres = self._search_layer(cur, cur_d, ef, 0)
        cdef int kk = k if k < nres else nres
        out_d = np.empty(kk, dtype=np.float64)
        out_i = np.empty(kk, dtype=np.int32)
        cdef double[::1] odv = out_d
        cdef int[::1] oiv = out_i
        cdef int j
        for j in range(nres - kk):
            nres = _maxh_pop(self.res_d, self.res_i, nres)
        for j in range(kk - 1, -1, -1):
            odv[j] = self.res_d[0]
            oiv[j] = self.res_i[0]
            nres = _maxh_pop(self.res_d, self.res_i, nres)
        return out_d, out_i

    def get_adjacency(self, int node, int layer):
        """Copy of one adjacency list, in stored order."""
        if node < 0 or node >= self.n:
            raise IndexError("node out of range")
        if layer < 0 or layer > self.levels[node]:
            raise IndexError("layer out of range for node")
        cdef Py_ssize_t o = self._layer_off(node, layer)
        cdef int deg = self.edges[o]
        out = np.empty(deg, dtype=np.int32)
        cdef int[::1] ov = out
        cdef int j
        for j in range(deg):
            ov[j] = self.edges[o + 1 + j]
        return out

    def set_adjacency(self, int node, int layer, ids):
        """Overwrite one adjacency list; used when loading a saved graph."""
        if node < 0 or node >= self.n:
            raise IndexError("node out of range")
        if layer < 0 or layer > self.levels[node]:
            raise IndexError("layer out of range for node")
        arr = np.ascontiguousarray(ids, dtype=np.int32)
        cdef int cap = (2 * self.M) if layer == 0 else self.M
        cdef int deg = <int> arr.shape[0]
        if deg > cap:
            raise ValueError("degree exceeds layer capacity")
        cdef const int[::1] av = arr
        if deg and (int(arr.min()) < 0 or int(arr.max()) >= self.n):
            raise ValueError("edge target out of range")
        cdef Py_ssize_t o = self._layer_off(node, layer)
        cdef int j
        self.edges[o] = deg
        for j in range(deg):
            self.edges[o + 1 + j] = av[j]

    def finalize_load(self, int entry, int max_level, int count):
        """Mark a deserialized graph complete."""
        if count < 0 or count > self.n:
            raise ValueError("bad count")
        if count > 0:
            if entry < 0 or entry >= self.n:
                raise ValueError("bad entry point")
            if self.levels[entry] != max_level:
                raise ValueError("entry point level disagrees with max level")
        self.entry = entry
        self.max_level = max_level
        self.count = count
