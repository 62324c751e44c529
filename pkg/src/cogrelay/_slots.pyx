# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled slot loop; mirrors ``_slots_py.run_chunk`` exactly."""

cdef enum:
    ARR_P = 1
    ARR_S = 2
    DETECT = 4
    DIRECT_OK = 8
    DECODE_OK = 16
    NO_FA = 32
    RELAY_OK = 64
    OWN_OK = 128

cdef enum:
    PU_ARRIVALS = 0
    SU_ARRIVALS = 1
    PU_ATTEMPTS = 2
    PU_DIRECT = 3
    RELAY_ADMIT = 4
    COLLISIONS = 5
    RELAY_SERVED = 6
    OWN_VIRTUAL = 7
    OWN_SERVED = 8
    RELAY_VIRTUAL = 9
    SUM_QP = 10
    SUM_QPS = 11
    SUM_QS = 12
    RELAY_FULL = 13
    IDLE_SLOTS = 14


def run_chunk(const unsigned char[::1] flags, long long[::1] state, long long m,
              bint dominant, long long[::1] counts, long long[::1] hist,
              long long offset, long long window_len, long long[::1] win_qp,
              long long[::1] win_qps, long long[::1] win_qs):
    cdef Py_ssize_t i, n = flags.shape[0]
    cdef long long qp = state[0], qps = state[1], qs = state[2]
    cdef long long slot = offset
    cdef long long w = slot // window_len
    cdef long long next_edge = (w + 1) * window_len
    cdef long long aqp = 0, aqps = 0, aqs = 0
    cdef unsigned char f
    cdef int status = 0

    with nogil:
        for i in range(n):
            f = flags[i]
            if slot == next_edge:
                win_qp[w] += aqp
                win_qps[w] += aqps
                win_qs[w] += aqs
                counts[SUM_QP] += aqp
                counts[SUM_QPS] += aqps
                counts[SUM_QS] += aqs
                aqp = 0
                aqps = 0
                aqs = 0
                w += 1
                next_edge += window_len
            aqp += qp
            aqps += qps
            aqs += qs
            hist[qps] += 1
            slot += 1

            if f & ARR_P:
                qp += 1
                counts[PU_ARRIVALS] += 1
            if f & ARR_S:
                qs += 1
                counts[SU_ARRIVALS] += 1

            if qp > 0:
                counts[PU_ATTEMPTS] += 1
                if not (f & DETECT) and (dominant or qps > 0 or qs > 0):
                    counts[COLLISIONS] += 1
                elif f & DIRECT_OK:
                    qp -= 1
                    counts[PU_DIRECT] += 1
                elif f & DECODE_OK:
                    if qps < m:
                        qp -= 1
                        qps += 1
                        counts[RELAY_ADMIT] += 1
                    else:
                        counts[RELAY_FULL] += 1
            else:
                counts[IDLE_SLOTS] += 1
                if f & NO_FA:
                    if f & RELAY_OK:
                        counts[RELAY_VIRTUAL] += 1
                    if qps > 0:
                        if f & RELAY_OK:
                            qps -= 1
                            counts[RELAY_SERVED] += 1
                    else:
                        if f & OWN_OK:
                            counts[OWN_VIRTUAL] += 1
                            if qs > 0:
                                qs -= 1
                                counts[OWN_SERVED] += 1
            if qps > m:
                status = 1
                break

        win_qp[w] += aqp
        win_qps[w] += aqps
        win_qs[w] += aqs
        counts[SUM_QP] += aqp
        counts[SUM_QPS] += aqps
        counts[SUM_QS] += aqs

    state[0] = qp
    state[1] = qps
    state[2] = qs
    return status
