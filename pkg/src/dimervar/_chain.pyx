# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loops of the height-function Glauber chain.

A step consumes one raw 64-bit word u: bit 0 picks the direction (1 =
up); the interior vertex is picked by the multiply-shift reduction
((u >> 32) * n_int) >> 32, which avoids a hardware division.  An up
(down) move adds (subtracts) 4 when the vertex is a strict local
minimum (maximum) among its four lattice neighbors; otherwise the state
is unchanged.  The pure-Python twin in `_chain_py` consumes identical
words and must produce bitwise identical trajectories.
"""

import numpy as np

cimport numpy as cnp


cdef inline void _move(cnp.int32_t* h, const cnp.int32_t* nbr, Py_ssize_t v, unsigned long long up) noexcept nogil:
    cdef cnp.int32_t hv = h[v]
    cdef cnp.int32_t n0 = h[nbr[4 * v]]
    cdef cnp.int32_t n1 = h[nbr[4 * v + 1]]
    cdef cnp.int32_t n2 = h[nbr[4 * v + 2]]
    cdef cnp.int32_t n3 = h[nbr[4 * v + 3]]
    if up:
        if n0 > hv and n1 > hv and n2 > hv and n3 > hv:
            h[v] = hv + 4
    else:
        if n0 < hv and n1 < hv and n2 < hv and n3 < hv:
            h[v] = hv - 4


cdef inline Py_ssize_t _pick(unsigned long long u, Py_ssize_t n_int) noexcept nogil:
    return <Py_ssize_t> ((((u >> 32) & 0xFFFFFFFFULL) * <unsigned long long> n_int) >> 32)


def run_single(cnp.ndarray[cnp.int32_t, ndim=1] heights,
               cnp.ndarray[cnp.int32_t, ndim=2] nbr4,
               cnp.ndarray[cnp.int32_t, ndim=1] interior,
               cnp.ndarray[cnp.uint64_t, ndim=1] raw):
    """Advance one chain by len(raw) steps, in place."""
    cdef cnp.int32_t* h = <cnp.int32_t*> heights.data
    cdef const cnp.int32_t* nbr = <const cnp.int32_t*> nbr4.data
    cdef const cnp.int32_t* inter = <const cnp.int32_t*> interior.data
    cdef const unsigned long long* r = <const unsigned long long*> raw.data
    cdef Py_ssize_t m = raw.shape[0]
    cdef Py_ssize_t n_int = interior.shape[0]
    cdef Py_ssize_t i
    cdef unsigned long long u
    if n_int == 0:
        return
    with nogil:
        for i in range(m):
            u = r[i]
            _move(h, nbr, inter[_pick(u, n_int)], u & 1)


def run_pair(cnp.ndarray[cnp.int32_t, ndim=1] top,
             cnp.ndarray[cnp.int32_t, ndim=1] bot,
             cnp.ndarray[cnp.int32_t, ndim=2] nbr4,
             cnp.ndarray[cnp.int32_t, ndim=1] interior,
             cnp.ndarray[cnp.uint64_t, ndim=1] raw):
    """Advance two coupled chains with common moves, in place.

    The chains are interleaved into one scratch buffer so each move
    touches half as many cache lines; results are written back to the
    separate arrays on exit.
    """
    cdef Py_ssize_t nv = top.shape[0]
    cdef cnp.ndarray[cnp.int32_t, ndim=1] packed = np.empty(2 * nv, dtype=np.int32)
    packed[0::2] = top
    packed[1::2] = bot
    cdef cnp.int32_t* h2 = <cnp.int32_t*> packed.data
    cdef const cnp.int32_t* nbr = <const cnp.int32_t*> nbr4.data
    cdef const cnp.int32_t* inter = <const cnp.int32_t*> interior.data
    cdef const unsigned long long* r = <const unsigned long long*> raw.data
    cdef Py_ssize_t m = raw.shape[0]
    cdef Py_ssize_t n_int = interior.shape[0]
    cdef Py_ssize_t i, v, b, n0, n1, n2, n3
    cdef unsigned long long u
    cdef cnp.int32_t hv
    if n_int == 0:
        return
    with nogil:
        for i in range(m):
            u = r[i]
            v = inter[_pick(u, n_int)]
            b = 2 * v
            n0 = 2 * nbr[4 * v]
            n1 = 2 * nbr[4 * v + 1]
            n2 = 2 * nbr[4 * v + 2]
            n3 = 2 * nbr[4 * v + 3]
            if u & 1:
                hv = h2[b]
                if h2[n0] > hv and h2[n1] > hv and h2[n2] > hv and h2[n3] > hv:
                    h2[b] = hv + 4
                hv = h2[b + 1]
                if h2[n0 + 1] > hv and h2[n1 + 1] > hv and h2[n2 + 1] > hv and h2[n3 + 1] > hv:
                    h2[b + 1] = hv + 4
            else:
                hv = h2[b]
                if h2[n0] < hv and h2[n1] < hv and h2[n2] < hv and h2[n3] < hv:
                    h2[b] = hv - 4
                hv = h2[b + 1]
                if h2[n0 + 1] < hv and h2[n1 + 1] < hv and h2[n2 + 1] < hv and h2[n3 + 1] < hv:
                    h2[b + 1] = hv - 4
    top[:] = packed[0::2]
    bot[:] = packed[1::2]


def agreement(cnp.ndarray[cnp.int32_t, ndim=1] top,
              cnp.ndarray[cnp.int32_t, ndim=1] bot):
    """Largest pointwise gap between the coupled chains."""
    cdef const cnp.int32_t* ht = <const cnp.int32_t*> top.data
    cdef const cnp.int32_t* hb = <const cnp.int32_t*> bot.data
    cdef Py_ssize_t n = top.shape[0]
    cdef Py_ssize_t i
    cdef long long worst = 0
    with nogil:
        for i in range(n):
            if ht[i] - hb[i] > worst:
                worst = ht[i] - hb[i]
    return worst
