"""Closed-form excess-risk bounds for quantized averaged SGD.

Three bound families are provided, all diagonal in the covariance eigenbasis:

- :func:`bound_multiplicative` — every active site scales its input by
  (1 + sqrt(eps) s); the quantized spectrum is (1 + eps_d) lambda.
- :func:`bound_additive` — every active site adds sqrt(eps) s per coordinate;
  the quantized spectrum is lambda + eps_d.
- :func:`bound_general` — any data-site second-moment diagonal D, with the
  caller (or an analytic default) supplying the gradient-noise ingredients.

Shared structure: with k* the number of quantized eigenvalues at least
1/(N gamma), the bound splits into a variance term over the head, a bias term
over the tail, an approximation term paid for moving the optimum, and (in the
general form) an extra term proportional to ||D||.  ``stepsize_ok`` reports
the stability condition gamma < 1 / (alpha_B * tr(H + D)) (with an extra
(1 + eps_tilde) factor in the multiplicative form); when it fails the
variance terms are reported as inf rather than a meaningless negative value.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .engine import SiteQuantizers, data_noise_diagonal, resolve_stepsize
from .quantizers import QuantizerSpec, rounding_eps_equivalent
from .risk import label_error_second_moment, quantized_geometry
from .spectrum import ProblemSpec


def effective_dimension(eigenvalues: np.ndarray, n_gamma: float) -> int:
    """Number of eigenvalues at least 1/(N gamma); eigenvalues descending."""
    if n_gamma <= 0:
        raise ValueError("n_gamma must be positive")
    return int((np.asarray(eigenvalues) >= 1.0 / n_gamma).sum())


def eps_tilde(eps_p: float, eps_a: float, eps_o: float) -> float:
    """Combined relative-noise inflation 2ep + 4eo(1+ea)(1+ep) + 2ea(1+ep)."""
    return (
        2 * eps_p
        + 4 * eps_o * (1 + eps_a) * (1 + eps_p)
        + 2 * eps_a * (1 + eps_p)
    )


@dataclass(frozen=True)
class Eps:
    """The five per-site noise levels used by the closed forms."""

    data: float = 0.0
    label: float = 0.0
    param: float = 0.0
    activation: float = 0.0
    output_grad: float = 0.0

    @classmethod
    def from_sites(cls, sites: SiteQuantizers) -> "Eps":
        def level(q: QuantizerSpec) -> float:
            q = rounding_eps_equivalent(q)
            return 0.0 if q.is_identity else q.epsilon

        return cls(*(level(q) for q in sites))


def sigma_m_sq(
    spec: ProblemSpec, eps: Eps, batch: int, alpha_b: float = 3.0
) -> float:
    """Gradient-noise scale for the all-multiplicative model.

    The activation/output contributions are coherent across the batch (one
    shared sign), so they are not divided by the batch size; only the label
    noise averages.
    """
    lead = (1 + 4 * eps.output_grad) * spec.noise_var / batch
    inner = (
        4 * eps.output_grad * ((1 + eps.activation) * (1 + eps.param) + 1)
        + 2 * eps.activation * (1 + eps.param)
        + 2 * eps.param
    )
    return lead + (spec.signal_sq / (1 + eps.data)) * alpha_b * inner


def sigma_a_sq(
    spec: ProblemSpec, eps: Eps, batch: int, alpha_b: float = 3.0
) -> float:
    """Gradient-noise scale for the all-additive model (noise averages in B)."""
    tr_q = spec.trace + spec.dim * eps.data
    return (
        (eps.output_grad + eps.activation) / batch
        + alpha_b * eps.param * tr_q
        + spec.noise_var / batch
    )


def default_noise_bound(spec: ProblemSpec, sites: SiteQuantizers) -> float:
    """Heuristic bound on the residual-noise second moment at the quantized optimum.

    The exact constant has no closed form once the optimum shifts; this
    over-estimate adds to the label-noise variance the quantized-label power
    and three times the shifted-optimum energy (the Gaussian fourth-moment
    factor), and reduces to the plain noise variance when all sites are off.
    """
    geom = quantized_geometry(spec, sites.data)
    label_q = rounding_eps_equivalent(sites.label)
    if label_q.is_identity:
        label_term = 0.0
    elif label_q.kind == "additive":
        label_term = label_q.epsilon
    else:
        label_term = 3.0 * label_q.epsilon * spec.label_second_moment
    shift = spec.w_star - geom.w_star_q
    shift_h = float(spec.eigenvalues @ shift**2)
    data_q = rounding_eps_equivalent(sites.data)
    if data_q.is_identity:
        proj = 0.0
    elif data_q.kind == "additive":
        proj = data_q.epsilon * float(geom.w_star_q @ geom.w_star_q)
    else:
        proj = data_q.epsilon * float(spec.eigenvalues @ geom.w_star_q**2)
    return spec.noise_var + label_term + 3.0 * (shift_h + proj)


@dataclass(frozen=True)
class BoundInputs:
    """Everything the closed-form bounds consume.

    ``gamma`` may be the string "auto" (half the stability limit).  The last
    three fields override analytic defaults; ``bound_general`` requires them
    whenever a site has no additive-style closed form (e.g. multiplicative
    activation noise, whose supremum must be estimated from a trajectory).
    """

    spec: ProblemSpec
    sites: SiteQuantizers
    n: int
    batch: int = 1
    gamma: float | str = "auto"
    alpha_b: float = 3.0
    sigma_sq: float | None = None
    label_err_sq: float | None = None
    act_out_sup: float | None = None
    param_trace: float | None = None

    def resolved_gamma(self) -> float:
        if isinstance(self.gamma, str):
            if self.gamma != "auto":
                raise ValueError("gamma must be a float or 'auto'")
            return resolve_stepsize(self.spec, self.sites, self.alpha_b)
        return float(self.gamma)

    def resolved_sigma_sq(self) -> float:
        if self.sigma_sq is not None:
            return float(self.sigma_sq)
        return default_noise_bound(self.spec, self.sites)


def _config_hash(inputs: BoundInputs, sigma_sq: float, gamma: float) -> str:
    payload = {
        "problem": {
            "eigenvalues": inputs.spec.eigenvalues.tolist(),
            "w_star": inputs.spec.w_star.tolist(),
            "noise_var": inputs.spec.noise_var,
        },
        "quantizers": inputs.sites.to_json(),
        "n": inputs.n,
        "batch": inputs.batch,
        "gamma": gamma,
        "alpha_b": inputs.alpha_b,
        "sigma_sq": sigma_sq,
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class BoundReport:
    regime: str
    k_star: int
    var_err: float
    bias_err: float
    approx_err: float
    sigma_eff_sq: float
    total: float
    stepsize_ok: bool
    config_hash: str
    quantized_err: float | None = None  # general bound only
    eps_tilde: float | None = None  # multiplicative bound only

    def to_json(self) -> dict:
        out = {
            "regime": self.regime,
            "k_star": self.k_star,
            "var_err": self.var_err,
            "bias_err": self.bias_err,
            "approx_err": self.approx_err,
        }
        if self.quantized_err is not None:
            out["quantized_err"] = self.quantized_err
        out["sigma_eff_sq"] = self.sigma_eff_sq
        if self.eps_tilde is not None:
            out["eps_tilde"] = self.eps_tilde
        out["total"] = self.total
        out["stepsize_ok"] = self.stepsize_ok
        out["config_hash"] = self.config_hash
        return out


def _require_regime(sites: SiteQuantizers, expected: str, fn: str):
    regime = sites.regime
    if regime not in (expected, "identity"):
        raise ValueError(
            f"{fn} applies to {expected}-regime quantizers, got {regime!r}"
        )


def bound_multiplicative(inputs: BoundInputs) -> BoundReport:
    """Risk bound when every active site is a multiplicative quantizer."""
    _require_regime(inputs.sites, "multiplicative", "bound_multiplicative")
    spec = inputs.spec
    eps = Eps.from_sites(inputs.sites)
    gamma = inputs.resolved_gamma()
    n, alpha = inputs.n, inputs.alpha_b
    et = eps_tilde(eps.param, eps.activation, eps.output_grad)
    lam = spec.eigenvalues
    lam_q = (1 + eps.data) * lam
    w_q = spec.w_star / (1 + eps.data)
    k = effective_dimension(lam_q, n * gamma)
    sm = sigma_m_sq(spec, eps, inputs.batch, alpha)
    denom = 1 - (1 + et) * gamma * alpha * (1 + eps.data) * spec.trace
    stepsize_ok = denom > 0

    head_i = float((w_q[:k] ** 2).sum())
    tail_hq = float((lam_q[k:] * w_q[k:] ** 2).sum())
    spectral = k / n + n * gamma**2 * (1 + eps.data) ** 2 * float(
        (lam[k:] ** 2).sum()
    )
    if stepsize_ok:
        var = spectral * (
            sm / denom
            + 2 * (1 + et) * alpha * (head_i + n * gamma * tail_hq) / (n * gamma * denom)
        )
    else:
        var = math.inf
    bias = (1 / (gamma**2 * n**2)) * float(
        (w_q[:k] ** 2 / lam_q[:k]).sum()
    ) + tail_hq
    approx = (
        spec.signal_sq * ((1.5 + eps.data / 2) * eps.data) / (1 + eps.data) ** 2
        + eps.label * spec.label_second_moment
    )
    total = approx + ((1 + 3 * eps.data) / (1 + eps.data)) * (var + bias)
    return BoundReport(
        regime="multiplicative",
        k_star=k,
        var_err=var,
        bias_err=bias,
        approx_err=approx,
        sigma_eff_sq=sm,
        eps_tilde=et,
        total=total,
        stepsize_ok=stepsize_ok,
        config_hash=_config_hash(inputs, sm, gamma),
    )


def bound_additive(inputs: BoundInputs) -> BoundReport:
    """Risk bound when every active site is an additive quantizer."""
    _require_regime(inputs.sites, "additive", "bound_additive")
    spec = inputs.spec
    eps = Eps.from_sites(inputs.sites)
    gamma = inputs.resolved_gamma()
    n, alpha = inputs.n, inputs.alpha_b
    lam = spec.eigenvalues
    lam_q = lam + eps.data
    w_q = lam * spec.w_star / lam_q
    k = effective_dimension(lam_q, n * gamma)
    sa = sigma_a_sq(spec, eps, inputs.batch, alpha)
    denom = 1 - gamma * alpha * float(lam_q.sum())
    stepsize_ok = denom > 0

    head_i = float((w_q[:k] ** 2).sum())
    tail_hq = float((lam_q[k:] * w_q[k:] ** 2).sum())
    spectral = k / n + n * gamma**2 * float((lam_q[k:] ** 2).sum())
    if stepsize_ok:
        var = (
            (sa + (2 * alpha / (n * gamma)) * (head_i + n * gamma * tail_hq))
            / denom
            * spectral
        )
    else:
        var = math.inf
    bias = (1 / (gamma**2 * n**2)) * float(
        (w_q[:k] ** 2 / lam_q[:k]).sum()
    ) + tail_hq
    w2 = spec.w_star**2
    approx = (
        eps.label
        + 1.5 * eps.data * float((lam**2 * w2 / lam_q**2).sum())
        + 0.5 * eps.data**2 * float((lam * w2 / lam_q**2).sum())
    )
    total = approx + 2 * var + 2 * bias
    return BoundReport(
        regime="additive",
        k_star=k,
        var_err=var,
        bias_err=bias,
        approx_err=approx,
        sigma_eff_sq=sa,
        total=total,
        stepsize_ok=stepsize_ok,
        config_hash=_config_hash(inputs, sa, gamma),
    )


def _analytic_act_out_sup(sites: SiteQuantizers) -> float:
    """Spectral-norm bound on the activation+output conditional second moment.

    Available in closed form only when both sites are additive-style (their
    moment is eps * I regardless of the input).
    """
    total = 0.0
    for q in (sites.activation, sites.output_grad):
        q = rounding_eps_equivalent(q)
        if q.is_identity:
            continue
        if q.kind != "additive":
            raise ValueError(
                "act_out_sup has no closed form for non-additive activation/"
                "output quantizers; supply it in BoundInputs (e.g. estimated "
                "from trajectory statistics)"
            )
        total += q.epsilon
    return total


def _analytic_param_trace(sites: SiteQuantizers, trace_q: float) -> float:
    q = rounding_eps_equivalent(sites.param)
    if q.is_identity:
        return 0.0
    if q.kind != "additive":
        raise ValueError(
            "param_trace has no closed form for non-additive parameter "
            "quantizers; supply it in BoundInputs"
        )
    return q.epsilon * trace_q


def bound_general(inputs: BoundInputs) -> BoundReport:
    """Risk bound for an arbitrary mix of unbiased sites.

    The data site enters through its second-moment diagonal D; the three
    gradient-noise ingredients (residual noise, activation/output supremum,
    parameter trace) are taken from ``inputs`` or computed analytically when
    the corresponding sites admit it.
    """
    spec = inputs.spec
    gamma = inputs.resolved_gamma()
    n, alpha = inputs.n, inputs.alpha_b
    lam = spec.eigenvalues
    d_vec = data_noise_diagonal(spec, inputs.sites.data)
    lam_q = lam + d_vec
    w_q = lam * spec.w_star / lam_q
    trace_q = float(lam_q.sum())
    k = effective_dimension(lam_q, n * gamma)

    sigma_sq = inputs.resolved_sigma_sq()
    sup = (
        inputs.act_out_sup
        if inputs.act_out_sup is not None
        else _analytic_act_out_sup(inputs.sites)
    )
    p_trace = (
        inputs.param_trace
        if inputs.param_trace is not None
        else _analytic_param_trace(inputs.sites, trace_q)
    )
    label_err_sq = (
        inputs.label_err_sq
        if inputs.label_err_sq is not None
        else label_error_second_moment(spec, rounding_eps_equivalent(inputs.sites.label))
    )
    sigma_g = (sigma_sq + sup) / inputs.batch + alpha * p_trace

    denom = 1 - gamma * alpha * trace_q
    stepsize_ok = denom > 0
    head_i = float((w_q[:k] ** 2).sum())
    tail_hq = float((lam_q[k:] * w_q[k:] ** 2).sum())
    numer = sigma_g + (2 * alpha / (n * gamma)) * (head_i + n * gamma * tail_hq)
    spectral = k / n + n * gamma**2 * float((lam_q[k:] ** 2).sum())
    bias = (1 / (gamma**2 * n**2)) * float(
        (w_q[:k] ** 2 / lam_q[:k]).sum()
    ) + tail_hq
    w2 = spec.w_star**2
    approx = (
        label_err_sq
        + 1.5 * float((lam**2 * d_vec / lam_q**2 * w2).sum())
        + 0.5 * float((d_vec**2 * lam / lam_q**2 * w2).sum())
    )
    d_norm = float(d_vec.max()) if spec.dim else 0.0
    q_bias = (1 / (gamma**2 * n**2)) * float(
        (w_q[:k] ** 2 / lam_q[:k] ** 2).sum()
    ) + float((w_q[k:] ** 2).sum())
    q_spectral = float((1.0 / (n * lam_q[:k])).sum()) + n * gamma**2 * float(
        lam_q[k:].sum()
    )
    if stepsize_ok:
        var = numer / denom * spectral
        quantized = 2 * d_norm * q_bias + 2 * d_norm * (numer / denom) * q_spectral
    else:
        var = math.inf
        quantized = math.inf
    total = var + bias + approx + quantized
    return BoundReport(
        regime="general",
        k_star=k,
        var_err=var,
        bias_err=bias,
        approx_err=approx,
        quantized_err=quantized,
        sigma_eff_sq=sigma_g,
        total=total,
        stepsize_ok=stepsize_ok,
        config_hash=_config_hash(inputs, sigma_sq, gamma),
    )


def baseline_r0(
    spec: ProblemSpec, n: int, batch: int, gamma: float, alpha_b: float = 3.0
) -> float:
    """Unquantized averaged-SGD risk bound used as the budget-matching target."""
    lam, w = spec.eigenvalues, spec.w_star
    k0 = effective_dimension(lam, n * gamma)
    spectral = k0 / n + n * gamma**2 * float((lam[k0:] ** 2).sum())
    denom = 1 - gamma * alpha_b * spec.trace
    if denom <= 0:
        return math.inf
    head_i = float((w[:k0] ** 2).sum())
    tail_h = float((lam[k0:] * w[k0:] ** 2).sum())
    return (
        spectral
        * (
            4 * alpha_b * (head_i + n * gamma * tail_h) / (n * gamma * denom)
            + spec.noise_var / (batch * denom)
        )
        + (2 / (gamma**2 * n**2)) * float((w[:k0] ** 2 / lam[:k0]).sum())
        + 2 * tail_h
    )


@dataclass
class MatchingCondition:
    name: str
    value: float
    threshold: float
    ok: bool

    def to_json(self) -> dict:
        ratio = self.value / self.threshold if self.threshold > 0 else math.inf
        if math.isinf(self.threshold):
            ratio = 0.0
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "ratio": ratio,
            "ok": self.ok,
        }


@dataclass
class MatchingReport:
    regime: str
    r0: float
    conditions: list[MatchingCondition]
    ok: bool

    def to_json(self) -> dict:
        return {
            "regime": self.regime,
            "r0": self.r0,
            "conditions": [c.to_json() for c in self.conditions],
            "ok": self.ok,
        }


def check_matching_conditions(inputs: BoundInputs) -> MatchingReport:
    """Per-site noise budgets under which quantization preserves the baseline rate.

    All constants are set to one, so treat the verdicts as order-of-magnitude
    guidance: a ratio near one is borderline, far below one comfortable.
    """
    spec = inputs.spec
    regime = inputs.sites.regime
    if regime == "identity":
        regime = "multiplicative"  # degenerate: every budget is trivially met
    if regime not in ("multiplicative", "additive"):
        raise ValueError("matching conditions are defined per pure regime")
    eps = Eps.from_sites(inputs.sites)
    gamma = inputs.resolved_gamma()
    r0 = baseline_r0(spec, inputs.n, inputs.batch, gamma, inputs.alpha_b)
    lam, w = spec.eigenvalues, spec.w_star
    conds: list[MatchingCondition] = []

    def add(name: str, value: float, threshold: float):
        conds.append(MatchingCondition(name, value, threshold, value <= threshold))

    if regime == "multiplicative":
        shared = min(spec.noise_var / (inputs.batch * spec.signal_sq), 1.0)
        add("eps_l", eps.label, r0)
        add("eps_p", eps.param, shared)
        add("eps_a", eps.activation, shared)
        add("eps_o", eps.output_grad, shared)
        add("eps_d", eps.data, min(r0 / spec.signal_sq, 1.0))
    else:
        d = spec.dim
        k0 = effective_dimension(lam, inputs.n * gamma)
        norm_sq = float(w @ w)
        if k0 < d:
            tail_sq = math.sqrt(float((lam[k0:] ** 2).sum()) / (d - k0))
            num = float((lam[k0:] * w[k0:] ** 2).sum()) + (
                1 / (inputs.n**2 * gamma**2)
            ) * float((w[:k0] ** 2 / lam[:k0]).sum())
            ratio = num / float((w[k0:] ** 2).sum())
        else:
            tail_sq = math.inf
            ratio = math.inf
        add("eps_l", eps.label, r0)
        add("eps_o_plus_a", eps.output_grad + eps.activation, spec.noise_var)
        add(
            "eps_p",
            eps.param,
            spec.noise_var / (inputs.batch * (spec.trace + d * eps.data)),
        )
        add("eps_d", eps.data, min(r0 / norm_sq, tail_sq, ratio))
    return MatchingReport(
        regime=regime, r0=r0, conditions=conds, ok=all(c.ok for c in conds)
    )


def d_eff_multiplicative(n_gamma: float, eps_d: float, a: float) -> float:
    """(N gamma (1 + eps_d))**(1/a): the head the quantized spectrum resolves."""
    return (n_gamma * (1 + eps_d)) ** (1 / a)


def d_eff_additive(n_gamma: float, eps_d: float, a: float, d: int) -> float:
    """Effective dimension of lambda + eps_d under a power-law head.

    The noise floor eps_d keeps coordinates past the raw cutoff above the
    1/(N gamma) resolution threshold, so the effective dimension interpolates
    between the raw cutoff and the full dimension as eps_d * N gamma grows.
    """
    m = max(d ** (-a), 1 / n_gamma - eps_d)
    base = m ** (-1 / a)
    return (d - base) * eps_d * n_gamma + base


@dataclass
class PowerlawReport:
    regime: str
    a: float
    d_eff: float
    d_eff_clamped: float
    total: float

    def to_json(self) -> dict:
        return {
            "regime": self.regime,
            "a": self.a,
            "d_eff": self.d_eff,
            "d_eff_clamped": self.d_eff_clamped,
            "total": self.total,
        }


def powerlaw_bound(inputs: BoundInputs, a: float) -> PowerlawReport:
    """Order-of-magnitude risk bound for a power-law spectrum (constants one).

    The multiplicative branch requires the signal energy to be dominated by
    the noise level (its derivation trades signal terms for noise terms);
    violating that raises rather than silently returning a non-bound.
    """
    if a <= 1:
        raise ValueError("power-law exponent must exceed 1")
    spec = inputs.spec
    regime = inputs.sites.regime
    if regime == "identity":
        regime = "multiplicative"
    if regime not in ("multiplicative", "additive"):
        raise ValueError("powerlaw_bound is defined per pure regime")
    eps = Eps.from_sites(inputs.sites)
    gamma = inputs.resolved_gamma()
    n, batch, d = inputs.n, inputs.batch, spec.dim
    n_gamma = n * gamma
    if regime == "multiplicative":
        if spec.signal_sq > spec.noise_var:
            raise ValueError(
                "multiplicative power-law bound requires signal_sq <= noise_var"
            )
        d_eff = d_eff_multiplicative(n_gamma, eps.data, a)
        de = min(d_eff, d)
        total = (
            eps.data
            + eps.label
            + de / n_gamma
            + (de / n)
            * (
                spec.noise_var / batch
                + eps.param
                + eps.output_grad
                + eps.activation
                + de / n_gamma
            )
        )
    else:
        d_eff = d_eff_additive(n_gamma, eps.data, a, d)
        de = min(d_eff, d)
        total = (
            eps.data * d
            + eps.label
            + de / n_gamma
            + (de / n)
            * (
                spec.noise_var / batch
                + (1 + d * eps.data) * eps.param
                + (eps.output_grad + eps.activation) / batch
                + de / n_gamma
            )
        )
    return PowerlawReport(
        regime=regime, a=a, d_eff=d_eff, d_eff_clamped=de, total=total
    )


def fp_int_preference(bits: int, mantissa_bits: int, d: int) -> str:
    """Which rounding family wins at matched bit budget in dimension d.

    Relative (floating-point) steps track coordinate magnitude, absolute
    (integer) steps do not; the crossover sits at mantissa = bits minus half
    the log-dimension.  Returns "fp", "int", or "boundary" when the two are
    within numerical tolerance of each other.
    """
    t = mantissa_bits - bits + 0.5 * math.log2(d)
    if abs(t) < 1e-9:
        return "boundary"
    return "fp" if t > 0 else "int"
