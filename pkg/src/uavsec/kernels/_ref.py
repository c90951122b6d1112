"""Pure-numpy reference implementation of the hot kernels.

The compiled extension in _core.pyx mirrors these functions exactly
(same formulas, same bisection schedule); tests assert the backends
agree to ~1e-12 relative.
"""

from __future__ import annotations

import numpy as np

LN2 = float(np.log(2.0))


def secrecy_accumulate(su, pu, sj, pj, hu, he, noise):
    """Per-user clipped secrecy averages and unclipped per-pair averages.

    su, pu: (N, M, KU, NF) schedule indicator / power in W.
    sj, pj: (N, M, NF) jamming indicator / power in W.
    hu: (N, M, KU) and he: (N, M, KE) channel gains; noise in W.

    Returns (user_avg (KU,), pair_avg (KU, KE)), both in bps/Hz:
      user_avg[k] averages [rate - worst leakage]^+ per cell over slots,
      pair_avg[k, e] averages the unclipped rate - leakage gap per pair.
    """
    su = np.asarray(su, dtype=float)
    pu = np.asarray(pu, dtype=float)
    n_slots, n_uav, n_users, _ = su.shape
    n_eves = he.shape[2]

    w = np.asarray(sj, dtype=float) * np.asarray(pj, dtype=float)  # (N, M, NF)
    tot_u = np.einsum("nmi,nmk->nik", w, hu)  # total jam power seen by each user
    iu = tot_u[:, None, :, :].transpose(0, 1, 3, 2) - w[:, :, None, :] * hu[:, :, :, None]
    snr_u = su * pu * hu[:, :, :, None] / (iu + noise)
    rate = su * np.log2(1.0 + snr_u)

    pair_sum = np.zeros((n_users, n_eves))
    if n_eves:
        tot_e = np.einsum("nmi,nme->nie", w, he)
        ie = tot_e[:, None, :, :].transpose(0, 1, 3, 2) - w[:, :, None, :] * he[:, :, :, None]
        # (N, M, KU, KE, NF)
        snr_e = (su * pu)[:, :, :, None, :] * he[:, :, None, :, None] / (ie[:, :, None, :, :] + noise)
        leak = su[:, :, :, None, :] * np.log2(1.0 + snr_e)
        worst = leak.max(axis=3)
        pair_sum = np.einsum("nmkei->ke", rate[:, :, :, None, :] - leak)
    else:
        worst = np.zeros_like(rate)

    user_sum = np.maximum(rate - worst, 0.0).sum(axis=(0, 1, 3))
    return user_sum / n_slots, pair_sum / n_slots


def comm_sweep(hu_eff, he_eff, alpha, beta, eps, vartheta, pcap, cell_ok, pair_ok, niter=50):
    """One primal pass of the dual-decomposition scheduler.

    hu_eff: (N, M, KU, NF) effective user gains (1/W); he_eff: (N, M, KE, NF).
    alpha: (KU, KE); beta: (N, NF); eps: (N, M, NF); vartheta: (N, M) > 0;
    pcap: (N, M) residual power budget; cell_ok: (N, M, NF) bool role mask;
    pair_ok: (M, KU) bool scheme mask; niter: bisection iterations.

    Returns (power (N, M, KU, NF), score (N, M, KU, NF),
             sel_m (N, NF) int32, sel_k (N, NF) int32) with -1 for unassigned.
    Power is computed per cell; only cells with a positive score and the
    per-(n, i) argmax are scheduled. Cells whose effective user gain does
    not exceed every eavesdropper's effective gain are never powered.
    """
    a = np.asarray(hu_eff, dtype=float)
    b = np.asarray(he_eff, dtype=float)
    n_slots, n_uav, n_users, n_sub = a.shape

    ok = np.asarray(cell_ok, dtype=bool)[:, :, None, :] & np.asarray(pair_ok, dtype=bool)[None, :, :, None]
    ok = ok & (a > b.max(axis=2, keepdims=True) if b.shape[2] else ok)

    asum = alpha.sum(axis=1)  # (KU,)
    vt = np.asarray(vartheta, dtype=float)[:, :, None, None]
    cap = np.broadcast_to(np.asarray(pcap, dtype=float)[:, :, None, None], a.shape)

    def dphi(p):
        # derivative of sum_e alpha*(log2(1+pA) - log2(1+pB_e)) - vartheta*p
        t1 = asum[None, None, :, None] * a / (1.0 + p * a)
        x = b[:, :, None, :, :] / (1.0 + p[:, :, :, None, :] * b[:, :, None, :, :])
        t2 = np.einsum("ke,nmkei->nmki", alpha, x)
        return (t1 - t2) / LN2 - vt

    power = np.zeros_like(a)
    live = ok & (dphi(np.zeros_like(a)) > 0.0)
    at_cap = live & (dphi(cap.copy()) >= 0.0)
    power[at_cap] = cap[at_cap]
    mid_mask = live & ~at_cap
    lo = np.zeros_like(a)
    hi = cap.copy()
    for _ in range(niter):
        mid = 0.5 * (lo + hi)
        pos = dphi(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    power[mid_mask] = (0.5 * (lo + hi))[mid_mask]

    lam = power * a
    lam_e = power[:, :, :, None, :] * b[:, :, None, :, :]
    per_e = (np.log1p(lam)[:, :, :, None, :] - np.log1p(lam_e)
             - (lam / (1.0 + lam))[:, :, :, None, :] + lam_e / (1.0 + lam_e))
    score = np.einsum("ke,nmkei->nmki", alpha, per_e) / LN2
    score = score - beta[:, None, None, :] - eps[:, :, None, :]
    score[~(ok & (power > 0.0))] = -np.inf

    flat = score.transpose(0, 3, 1, 2).reshape(n_slots, n_sub, n_uav * n_users)
    best = flat.argmax(axis=2).astype(np.int32)
    best_val = np.take_along_axis(flat, best[:, :, None].astype(np.int64), axis=2)[:, :, 0]
    assigned = best_val > 0.0
    sel_m = np.where(assigned, best // n_users, -1).astype(np.int32)
    sel_k = np.where(assigned, best % n_users, -1).astype(np.int32)
    return power, score, sel_m, sel_k
