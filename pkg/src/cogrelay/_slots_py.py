"""Pure-Python slot loop; same contract as the compiled ``_slots`` module."""

# flag bits, one uniform draw each
ARR_P = 1
ARR_S = 2
DETECT = 4
DIRECT_OK = 8
DECODE_OK = 16
NO_FA = 32
RELAY_OK = 64
OWN_OK = 128

# indices into the counters array
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
N_COUNTERS = 15


def run_chunk(flags, state, m, dominant, counts, hist,
              offset, window_len, win_qp, win_qps, win_qs):
    """Advance the queues over one chunk of slots.

    ``state`` holds ``[q_p, q_ps, q_s]`` and is updated in place, as are
    ``counts``, ``hist`` and the per-window occupancy sums.  Queue lengths
    are sampled at the start of each slot.  Returns 0, or 1 if the relay
    buffer ever exceeded ``m``.
    """
    qp, qps, qs = int(state[0]), int(state[1]), int(state[2])
    c = [int(v) for v in counts]
    h = [int(v) for v in hist]
    slot = int(offset)
    w = slot // window_len
    next_edge = (w + 1) * window_len
    aqp = aqps = aqs = 0
    status = 0
    for f in bytes(flags):
        if slot == next_edge:
            win_qp[w] += aqp
            win_qps[w] += aqps
            win_qs[w] += aqs
            c[SUM_QP] += aqp
            c[SUM_QPS] += aqps
            c[SUM_QS] += aqs
            aqp = aqps = aqs = 0
            w += 1
            next_edge += window_len
        aqp += qp
        aqps += qps
        aqs += qs
        h[qps] += 1
        slot += 1

        if f & ARR_P:
            qp += 1
            c[PU_ARRIVALS] += 1
        if f & ARR_S:
            qs += 1
            c[SU_ARRIVALS] += 1

        if qp > 0:
            c[PU_ATTEMPTS] += 1
            if not (f & DETECT) and (dominant or qps > 0 or qs > 0):
                c[COLLISIONS] += 1
            elif f & DIRECT_OK:
                qp -= 1
                c[PU_DIRECT] += 1
            elif f & DECODE_OK:
                if qps < m:
                    qp -= 1
                    qps += 1
                    c[RELAY_ADMIT] += 1
                else:
                    c[RELAY_FULL] += 1
        else:
            c[IDLE_SLOTS] += 1
            if f & NO_FA:
                if f & RELAY_OK:
                    c[RELAY_VIRTUAL] += 1
                if qps > 0:
                    if f & RELAY_OK:
                        qps -= 1
                        c[RELAY_SERVED] += 1
                else:
                    if f & OWN_OK:
                        c[OWN_VIRTUAL] += 1
                        if qs > 0:
                            qs -= 1
                            c[OWN_SERVED] += 1
        if qps > m:
            status = 1
            break

    win_qp[w] += aqp
    win_qps[w] += aqps
    win_qs[w] += aqs
    c[SUM_QP] += aqp
    c[SUM_QPS] += aqps
    c[SUM_QS] += aqs
    state[0], state[1], state[2] = qp, qps, qs
    for i, v in enumerate(c):
        counts[i] = v
    for i, v in enumerate(h):
        hist[i] = v
    return status
