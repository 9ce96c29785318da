# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled slot-loop kernels. Keep in lockstep with _pyloops.py."""

BACKEND = "cython"


def run_slots(
    int[::1] sched,
    int[::1] states,
    int[::1] nstates,
    double[::1] stay,
    double[::1] move,
    unsigned char[:, ::1] members,
    double[:, ::1] q,
    double[:, ::1] dpow,
    double noise,
    double gamma_th,
    double p0,
    int mean_power,
    double ch,
    int quorum,
    int scheme,
    int mode,
    double[:, ::1] alpha,
    double[:, ::1] vth,
    int[::1] est,
    double[:, ::1] chain_u,
    double[:, ::1] obs_u,
    double[:, ::1] wrong_u,
    double[:, ::1] act_u,
    double[:, ::1] vval,
    double[:, :, ::1] fade,
    double[::1] f1,
    double[::1] f2,
    long[::1] errsum,
    unsigned char[::1] alldel,
    long[::1] fail_n,
    long[::1] slot_n,
    long[::1] err_n,
    long[:, ::1] gen_kn,
    long[:, ::1] spk_kn,
    long[:, ::1] opp_kn,
):
    cdef Py_ssize_t S = chain_u.shape[0]
    cdef Py_ssize_t N = states.shape[0]
    cdef Py_ssize_t K = members.shape[0]
    cdef Py_ssize_t M = dpow.shape[1]
    cdef Py_ssize_t L = sched.shape[0]

    cdef int[64] spk_k
    cdef int[64] spk_correct
    cdef double[64] spk_rho
    cdef double[64] spk_v

    cdef Py_ssize_t s, t, j, nn, kk, m, ii
    cdef int n, prev_n, x, changed, i_n, obs, correct, gen, speak, ns, ndec, delivered, err, idx, newst
    cdef double u, v, rho, sig, itf, pw

    if K > 64:
        raise ValueError("kernel supports at most 64 ISAs")

    for s in range(S):
        t = s // L
        j = s - t * L
        n = sched[j]
        prev_n = states[n]
        for nn in range(N):
            u = chain_u[s, nn]
            if u >= stay[nn] and move[nn] > 0.0:
                idx = <int>((u - stay[nn]) / move[nn])
                if idx > nstates[nn] - 2:
                    idx = nstates[nn] - 2
                newst = idx + 1
                if newst >= states[nn]:
                    newst += 1
                states[nn] = newst
        x = states[n]
        changed = 1 if x != prev_n else 0

        ns = 0
        for kk in range(K):
            if not members[kk, n]:
                continue
            opp_kn[kk, n] += 1
            i_n = nstates[n]
            if obs_u[s, kk] < q[kk, n]:
                obs = x
                correct = 1
            else:
                idx = <int>(wrong_u[s, kk] * (i_n - 1))
                if idx > i_n - 2:
                    idx = i_n - 2
                obs = idx + 1
                if obs >= x:
                    obs += 1
                correct = 0
            if scheme == 0:
                gen = 1
            elif scheme == 1:
                gen = changed
            else:
                gen = 1 if x != est[n] else 0
            gen_kn[kk, n] += gen
            if not gen:
                continue
            v = vval[s, kk]
            if mode == 0:
                speak = 1 if act_u[s, kk] < alpha[kk, n] else 0
            else:
                speak = 1 if v > vth[kk, n] else 0
            if not speak:
                continue
            spk_kn[kk, n] += 1
            if mean_power:
                rho = p0 * 0.125
            else:
                rho = p0 * v * v * v
            spk_k[ns] = kk
            spk_correct[ns] = correct
            spk_rho[ns] = rho
            spk_v[ns] = v
            ns += 1

        ndec = 0
        for m in range(M):
            sig = 0.0
            itf = 0.0
            for ii in range(ns):
                kk = spk_k[ii]
                pw = fade[s, kk, m] * spk_rho[ii] * dpow[kk, m]
                if spk_correct[ii]:
                    sig += pw
                else:
                    itf += pw
            if sig > gamma_th * (itf + noise):
                ndec += 1

        delivered = 1 if ndec >= quorum else 0
        if delivered:
            est[n] = x
        err = 1 if est[n] != x else 0

        for ii in range(ns):
            f1[t] += spk_v[ii]
            f2[t] += ch * p0 * spk_v[ii] * spk_v[ii]
        errsum[t] += err
        if not delivered:
            alldel[t] = 0
            fail_n[n] += 1
        slot_n[n] += 1
        err_n[n] += err


def error_chain(double pi01, double pi11, double[::1] u):
    """Long-run error frequency of the 2-state discrepancy chain."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef int state = 0
    cdef long errs = 0
    for i in range(n):
        if state == 0:
            state = 1 if u[i] < pi01 else 0
        else:
            state = 1 if u[i] < pi11 else 0
        errs += state
    return errs / <double>n
