"""Independent brute-force reference implementations used as test oracles.

Everything in this file is deliberately written in plain Python (math +
explicit loops, no numpy, no imports from the package under test) so that a
bug in the library cannot silently agree with its own oracle.  Formulas are
transcribed term by term from the displayed equations they implement, with
no shared helpers beyond trivial sums.
"""

from __future__ import annotations

import math


# ---------------------------------------------------------------------------
# spectra and geometry


def power_law(d, a):
    return [float(i) ** (-a) for i in range(1, d + 1)]


def quantized_lambda(lam, dvec):
    return [l + dd for l, dd in zip(lam, dvec)]


def quantized_target(lam, w, dvec):
    # (H + D)^{-1} H w*
    return [l * wi / (l + dd) for l, wi, dd in zip(lam, w, dvec)]


def d_vector(lam, regime, eps_d):
    if regime == "multiplicative":
        return [eps_d * l for l in lam]
    if regime == "additive":
        return [eps_d for _ in lam]
    raise ValueError(regime)


def excess_risk(lam, w_star, w):
    return 0.5 * sum(l * (wi - si) ** 2 for l, wi, si in zip(lam, w, w_star))


def effective_dim(lam, n_gamma):
    # number of eigenvalues at least 1/(N*gamma); lam sorted descending
    thresh = 1.0 / n_gamma
    k = 0
    for l in lam:
        if l >= thresh:
            k += 1
    return k


# ---------------------------------------------------------------------------
# closed-form decomposition terms


def r3_closed(lam, w, dvec, label_err_sq):
    s = 0.0
    for l, wi, dd in zip(lam, w, dvec):
        s += dd * (l / (l + dd)) ** 2 * wi**2
    return 0.5 * label_err_sq + 0.5 * s


def r4_closed(lam, w, dvec):
    s = 0.0
    for l, wi, dd in zip(lam, w, dvec):
        s += l * (dd / (l + dd)) ** 2 * wi**2
    return 0.5 * s


# ---------------------------------------------------------------------------
# noise-scale constants


def eps_tilde(eps_p, eps_a, eps_o):
    return 2 * eps_p + 4 * eps_o * (1 + eps_a) * (1 + eps_p) + 2 * eps_a * (1 + eps_p)


def sigma_m_sq(lam, w, eps, batch, alpha, noise_var):
    ed, el, ep, ea, eo = eps
    signal = sum(l * wi**2 for l, wi in zip(lam, w))
    lead = (1 + 4 * eo) * noise_var / batch
    inner = 4 * eo * ((1 + ea) * (1 + ep) + 1) + 2 * ea * (1 + ep) + 2 * ep
    return lead + (signal / (1 + ed)) * alpha * inner


def sigma_a_sq(lam, eps, batch, alpha, noise_var):
    ed, el, ep, ea, eo = eps
    tr_q = sum(lam) + len(lam) * ed
    return (eo + ea) / batch + alpha * ep * tr_q + noise_var / batch


# ---------------------------------------------------------------------------
# risk bounds; eps = (eps_d, eps_l, eps_p, eps_a, eps_o)


def bound_mult(lam, w, eps, n, batch, gamma, alpha, noise_var):
    ed, el, ep, ea, eo = eps
    d = len(lam)
    et = eps_tilde(ep, ea, eo)
    lam_q = [(1 + ed) * l for l in lam]
    w_q = [wi / (1 + ed) for wi in w]
    k = effective_dim(lam_q, n * gamma)
    signal = sum(l * wi**2 for l, wi in zip(lam, w))
    sm = sigma_m_sq(lam, w, eps, batch, alpha, noise_var)
    tr_h = sum(lam)
    denom = 1 - (1 + et) * gamma * alpha * (1 + ed) * tr_h

    head_i = sum(w_q[i] ** 2 for i in range(k))
    tail_hq = sum(lam_q[i] * w_q[i] ** 2 for i in range(k, d))
    spectral = k / n + n * gamma**2 * (1 + ed) ** 2 * sum(
        lam[i] ** 2 for i in range(k, d)
    )
    var = spectral * (
        sm / denom
        + 2 * (1 + et) * alpha * (head_i + n * gamma * tail_hq) / (n * gamma * denom)
    )
    bias = (1 / (gamma**2 * n**2)) * sum(
        w_q[i] ** 2 / lam_q[i] for i in range(k)
    ) + tail_hq
    approx = signal * ((1.5 + ed / 2) * ed) / (1 + ed) ** 2 + el * (signal + noise_var)
    total = approx + ((1 + 3 * ed) / (1 + ed)) * (var + bias)
    ok = gamma < 1 / (alpha * (1 + ed) * (1 + et) * tr_h)
    return {
        "k_star": k,
        "var_err": var,
        "bias_err": bias,
        "approx_err": approx,
        "sigma_eff_sq": sm,
        "eps_tilde": et,
        "total": total,
        "stepsize_ok": ok,
    }


def bound_add(lam, w, eps, n, batch, gamma, alpha, noise_var):
    ed, el, ep, ea, eo = eps
    d = len(lam)
    lam_q = [l + ed for l in lam]
    w_q = [l * wi / (l + ed) for l, wi in zip(lam, w)]
    k = effective_dim(lam_q, n * gamma)
    sa = sigma_a_sq(lam, eps, batch, alpha, noise_var)
    tr_q = sum(lam_q)
    denom = 1 - gamma * alpha * tr_q

    head_i = sum(w_q[i] ** 2 for i in range(k))
    tail_hq = sum(lam_q[i] * w_q[i] ** 2 for i in range(k, d))
    spectral = k / n + n * gamma**2 * sum(lam_q[i] ** 2 for i in range(k, d))
    var = (
        (sa + (2 * alpha / (n * gamma)) * (head_i + n * gamma * tail_hq))
        / denom
        * spectral
    )
    bias = (1 / (gamma**2 * n**2)) * sum(
        w_q[i] ** 2 / lam_q[i] for i in range(k)
    ) + tail_hq
    approx = (
        el
        + 1.5 * ed * sum(l**2 * wi**2 / (l + ed) ** 2 for l, wi in zip(lam, w))
        + 0.5 * ed**2 * sum(l * wi**2 / (l + ed) ** 2 for l, wi in zip(lam, w))
    )
    total = approx + 2 * var + 2 * bias
    ok = gamma < 1 / (alpha * tr_q)
    return {
        "k_star": k,
        "var_err": var,
        "bias_err": bias,
        "approx_err": approx,
        "sigma_eff_sq": sa,
        "total": total,
        "stepsize_ok": ok,
    }


def bound_general(
    lam, w, dvec, n, batch, gamma, alpha, sigma_sq, sup_ao, param_trace, label_err_sq
):
    d = len(lam)
    lam_q = [l + dd for l, dd in zip(lam, dvec)]
    w_q = [l * wi / (l + dd) for l, wi, dd in zip(lam, w, dvec)]
    k = effective_dim(lam_q, n * gamma)
    sigma_g = (sigma_sq + sup_ao) / batch + alpha * param_trace
    tr_q = sum(lam_q)
    denom = 1 - gamma * alpha * tr_q

    head_i = sum(w_q[i] ** 2 for i in range(k))
    tail_hq = sum(lam_q[i] * w_q[i] ** 2 for i in range(k, d))
    numer = sigma_g + (2 * alpha / (n * gamma)) * (head_i + n * gamma * tail_hq)
    spectral = k / n + n * gamma**2 * sum(lam_q[i] ** 2 for i in range(k, d))
    var = numer / denom * spectral
    bias = (1 / (gamma**2 * n**2)) * sum(
        w_q[i] ** 2 / lam_q[i] for i in range(k)
    ) + tail_hq
    approx = (
        label_err_sq
        + 1.5
        * sum(
            l**2 * dd / (l + dd) ** 2 * wi**2 for l, wi, dd in zip(lam, w, dvec)
        )
        + 0.5
        * sum(
            dd**2 * l / (l + dd) ** 2 * wi**2 for l, wi, dd in zip(lam, w, dvec)
        )
    )
    d_norm = max(dvec) if dvec else 0.0
    q_bias = (1 / (gamma**2 * n**2)) * sum(
        w_q[i] ** 2 / lam_q[i] ** 2 for i in range(k)
    ) + sum(w_q[i] ** 2 for i in range(k, d))
    q_spectral = sum(1 / (n * lam_q[i]) for i in range(k)) + n * gamma**2 * sum(
        lam_q[i] for i in range(k, d)
    )
    quantized = 2 * d_norm * q_bias + 2 * d_norm * (numer / denom) * q_spectral
    total = var + bias + approx + quantized
    ok = gamma < 1 / (alpha * tr_q)
    return {
        "k_star": k,
        "var_err": var,
        "bias_err": bias,
        "approx_err": approx,
        "quantized_err": quantized,
        "sigma_eff_sq": sigma_g,
        "total": total,
        "stepsize_ok": ok,
    }


def baseline_r0(lam, w, n, batch, gamma, alpha, noise_var):
    d = len(lam)
    k0 = effective_dim(lam, n * gamma)
    spectral = k0 / n + n * gamma**2 * sum(lam[i] ** 2 for i in range(k0, d))
    denom = 1 - gamma * alpha * sum(lam)
    head_i = sum(w[i] ** 2 for i in range(k0))
    tail_h = sum(lam[i] * w[i] ** 2 for i in range(k0, d))
    r0 = (
        spectral
        * (
            4 * alpha * (head_i + n * gamma * tail_h) / (n * gamma * denom)
            + noise_var / (batch * denom)
        )
        + (2 / (gamma**2 * n**2)) * sum(w[i] ** 2 / lam[i] for i in range(k0))
        + 2 * tail_h
    )
    return r0


# ---------------------------------------------------------------------------
# budget-matching thresholds (all constants set to one)


def matching_mult(lam, w, eps, n, batch, gamma, alpha, noise_var):
    r0 = baseline_r0(lam, w, n, batch, gamma, alpha, noise_var)
    signal = sum(l * wi**2 for l, wi in zip(lam, w))
    shared = min(noise_var / (batch * signal), 1.0)
    return {
        "eps_l": r0,
        "eps_p": shared,
        "eps_a": shared,
        "eps_o": shared,
        "eps_d": min(r0 / signal, 1.0),
    }


def matching_add(lam, w, eps, n, batch, gamma, alpha, noise_var):
    d = len(lam)
    r0 = baseline_r0(lam, w, n, batch, gamma, alpha, noise_var)
    ed = eps[0]
    k0 = effective_dim(lam, n * gamma)
    norm_sq = sum(wi**2 for wi in w)
    if k0 < d:
        tail_sq = math.sqrt(sum(lam[i] ** 2 for i in range(k0, d)) / (d - k0))
        num = sum(lam[i] * w[i] ** 2 for i in range(k0, d)) + (
            1 / (n**2 * gamma**2)
        ) * sum(w[i] ** 2 / lam[i] for i in range(k0))
        ratio = num / sum(w[i] ** 2 for i in range(k0, d))
    else:
        tail_sq = math.inf
        ratio = math.inf
    return {
        "eps_l": r0,
        "eps_o_plus_a": noise_var,
        "eps_p": noise_var / (batch * (sum(lam) + d * ed)),
        "eps_d": min(r0 / norm_sq, tail_sq, ratio),
    }


# ---------------------------------------------------------------------------
# power-law corollaries (constants one)


def d_eff_mult(n_gamma, eps_d, a):
    return (n_gamma * (1 + eps_d)) ** (1 / a)


def d_eff_add(n_gamma, eps_d, a, d):
    m = max(d ** (-a), 1 / n_gamma - eps_d)
    base = m ** (-1 / a)
    return (d - base) * eps_d * n_gamma + base


def powerlaw_mult(lam, w, eps, n, batch, gamma, alpha, noise_var, a):
    ed, el, ep, ea, eo = eps
    d = len(lam)
    de = min(d_eff_mult(n * gamma, ed, a), d)
    total = (
        ed
        + el
        + de / (n * gamma)
        + (de / n) * (noise_var / batch + ep + eo + ea + de / (n * gamma))
    )
    return {"d_eff": de, "total": total}


def powerlaw_add(lam, w, eps, n, batch, gamma, alpha, noise_var, a):
    ed, el, ep, ea, eo = eps
    d = len(lam)
    de = min(d_eff_add(n * gamma, ed, a, d), d)
    total = (
        ed * d
        + el
        + de / (n * gamma)
        + (de / n)
        * (noise_var / batch + (1 + d * ed) * ep + (eo + ea) / batch + de / (n * gamma))
    )
    return {"d_eff": de, "total": total}


# ---------------------------------------------------------------------------
# rounding-format preference


def fp_int_preference(bits, mantissa_bits, d):
    t = mantissa_bits - bits + 0.5 * math.log2(d)
    if abs(t) < 1e-9:
        return "boundary"
    return "fp" if t > 0 else "int"


# ---------------------------------------------------------------------------
# frozen worked examples (hand-evaluated once, pinned forever)

# one quantized SGD step with every multiplicative site at eps = 0.04 and all
# Rademacher signs pinned to +1, x = [1], y = 1, w = [0], gamma = 0.5, B = 1:
#   Qd(x) = 1.2, Qp(w) = 0, a = 0, Qa(a) = 0, o = 1.2*1 - 0 = 1.2,
#   Qo(o) = 1.2 * 1.2 = 1.44, w' = 0 + 0.5 * 1.2 * 1.44 = 0.864
PINNED_STEP_RESULT = 0.864

# r4 for lam = [1, 0.25], w* = [1, 1], multiplicative eps_d = 0.01:
#   0.5 * (0.01/1.01)^2 * (1 + 0.25)
PINNED_R4_MULT = 6.126850308793256e-05

# eps_tilde(0.1, 0.1, 0.1) = 0.2 + 0.484 + 0.22
PINNED_EPS_TILDE = 0.904

# additive effective dimension at N*gamma = 100, eps_d = 0.005, a = 2, d = 400:
#   max(400^-2, 0.01 - 0.005) = 0.005 -> base = 0.005^-0.5 = 14.1421356...
#   (400 - base) * 0.5 + base
PINNED_D_EFF_ADD = 207.07106781186548

# multiplicative effective dimensions at N*gamma = 100, a = 2
PINNED_D_EFF_MULT_0 = 10.0  # eps_d = 0
PINNED_D_EFF_MULT_021 = 11.0  # eps_d = 0.21 -> sqrt(121)

# sigma_a_sq with eps = (0, 0, 0.01, 0.01, 0.01), B = 2, sigma^2 = 1, alpha = 3,
# lam summing to ... is pinned in the tests with its exact spectrum.

# power-law eigenvalues (4, 1.5)
PINNED_POWER_LAW_4_15 = [1.0, 0.3535533905932738, 0.19245008972987526, 0.125]
