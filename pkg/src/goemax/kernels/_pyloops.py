"""Pure-Python slot-loop kernels.

Scalar transliteration of the compiled kernels in _cyloops.pyx: same operations
in the same order, so both backends produce bit-identical results. Slow; used
as the fallback and as the traceable reference.
"""

from __future__ import annotations

BACKEND = "python"


def run_slots(
    sched,
    states,
    nstates,
    stay,
    move,
    members,
    q,
    dpow,
    noise,
    gamma_th,
    p0,
    mean_power,
    ch,
    quorum,
    scheme,
    mode,
    alpha,
    vth,
    est,
    chain_u,
    obs_u,
    wrong_u,
    act_u,
    vval,
    fade,
    f1,
    f2,
    errsum,
    alldel,
    fail_n,
    slot_n,
    err_n,
    gen_kn,
    spk_kn,
    opp_kn,
    trace=None,
):
    """Simulate S slots in place. See simulate.run_simulation for the layout.

    scheme: 0 uniform, 1 change-aware, 2 semantics-aware.
    mode: 0 fixed-activation (Bernoulli), 1 threshold rule.
    """
    S = chain_u.shape[0]
    N = states.shape[0]
    K = members.shape[0]
    M = dpow.shape[1]
    L = sched.shape[0]

    spk_k = [0] * K
    spk_correct = [0] * K
    spk_rho = [0.0] * K
    spk_v = [0.0] * K

    for s in range(S):
        t = s // L
        j = s - t * L
        n = int(sched[j])
        prev_n = int(states[n])
        for nn in range(N):
            u = chain_u[s, nn]
            if u >= stay[nn] and move[nn] > 0.0:
                idx = int((u - stay[nn]) / move[nn])
                if idx > nstates[nn] - 2:
                    idx = nstates[nn] - 2
                newst = idx + 1
                if newst >= states[nn]:
                    newst += 1
                states[nn] = newst
        x = int(states[n])
        changed = 1 if x != prev_n else 0

        ns = 0
        for kk in range(K):
            if not members[kk, n]:
                continue
            opp_kn[kk, n] += 1
            i_n = int(nstates[n])
            if obs_u[s, kk] < q[kk, n]:
                obs = x
                correct = 1
            else:
                idx = int(wrong_u[s, kk] * (i_n - 1))
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
                speak = act_u[s, kk] < alpha[kk, n]
            else:
                speak = v > vth[kk, n]
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
        sinrs = [] if trace is not None else None
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
            decoded = sig > gamma_th * (itf + noise)
            if decoded:
                ndec += 1
            if trace is not None:
                sinrs.append((sig / (itf + noise), bool(decoded)))

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

        if trace is not None:
            trace.append(
                {
                    "slot": s,
                    "interval": t,
                    "attr": n,
                    "true_state": x,
                    "speakers": [(spk_k[i], bool(spk_correct[i]), spk_rho[i], spk_v[i]) for i in range(ns)],
                    "nma": sinrs,
                    "decoded_count": ndec,
                    "quorum_reached": bool(delivered),
                    "estimate": int(est[n]),
                }
            )


def error_chain(pi01, pi11, u):
    """Long-run error frequency of the 2-state discrepancy chain."""
    state = 0
    errs = 0
    n = u.shape[0]
    for i in range(n):
        if state == 0:
            state = 1 if u[i] < pi01 else 0
        else:
            state = 1 if u[i] < pi11 else 0
        errs += state
    return errs / n
