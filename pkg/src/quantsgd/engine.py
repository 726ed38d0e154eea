"""One-pass averaged SGD with quantization applied at five sites.

The update implemented by :func:`sgd_step` is

    w' = w + (gamma / B) * Qd(X)^T ( Qo( Ql(y) - Qa( Qd(X) @ Qp(w) ) ) )

with full-precision linear algebra throughout: quantizers only transform the
tensors named above, the master iterate ``w`` is never overwritten by its
quantized copy, and the same realization ``Qd(X)`` appears in both places it
occurs.

Site semantics (chosen to match the noise model the risk bounds assume):

- data:            each batch row quantized independently,
- label:           each sample quantized independently,
- param:           the whole parameter vector as one tensor,
- activation:      the whole batch vector of predictions as one tensor,
- output_grad:     the whole batch vector of residuals as one tensor.

Randomness: a trajectory seed is expanded as ``SeedSequence(seed).spawn(6)``
into, in order, the sampling stream and one stream per site
(data, label, param, activation, output_grad).  Identity sites and sites with
``epsilon == 0`` draw nothing, so e.g. an all-identity run consumes only the
sampling stream and is bit-for-bit a plain SGD run on the same data.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .quantizers import (
    QuantizerSpec,
    apply,
    apply_elementwise,
    apply_rows,
    identity,
    rounding_eps_equivalent,
)
from .spectrum import ProblemSpec, excess_risk, sample_batch

SITE_NAMES = ("data", "label", "param", "activation", "output_grad")


class DivergenceError(RuntimeError):
    """Raised when an iterate leaves the numerically trusted region."""

    def __init__(self, step: int, norm_sq: float):
        super().__init__(f"iterate diverged at step {step} (|w|^2 = {norm_sq:.3e})")
        self.step = step
        self.norm_sq = norm_sq


@dataclass(frozen=True)
class SiteQuantizers:
    data: QuantizerSpec = field(default_factory=identity)
    label: QuantizerSpec = field(default_factory=identity)
    param: QuantizerSpec = field(default_factory=identity)
    activation: QuantizerSpec = field(default_factory=identity)
    output_grad: QuantizerSpec = field(default_factory=identity)

    @classmethod
    def all_identity(cls) -> "SiteQuantizers":
        return cls()

    @classmethod
    def uniform(cls, kind: str, epsilon: float) -> "SiteQuantizers":
        q = QuantizerSpec(kind, epsilon=epsilon)
        return cls(data=q, label=q, param=q, activation=q, output_grad=q)

    @classmethod
    def data_only(cls, kind: str, epsilon: float) -> "SiteQuantizers":
        return cls(data=QuantizerSpec(kind, epsilon=epsilon))

    def __iter__(self):
        yield self.data
        yield self.label
        yield self.param
        yield self.activation
        yield self.output_grad

    @property
    def regime(self) -> str:
        """Classify the five kinds: multiplicative, additive, identity or general."""
        kinds = {q.kind for q in self if not q.is_identity}
        if not kinds:
            return "identity"
        if kinds <= {"multiplicative", "multiplicative_indep"}:
            return "multiplicative"
        if kinds <= {"additive"}:
            return "additive"
        return "general"

    def to_json(self) -> dict:
        return {name: q.to_json() for name, q in zip(SITE_NAMES, self)}

    @classmethod
    def from_json(cls, obj: dict) -> "SiteQuantizers":
        extra = set(obj) - set(SITE_NAMES)
        if extra:
            raise ValueError(f"unknown quantizer sites {sorted(extra)}")
        return cls(
            **{
                name: QuantizerSpec.from_json(obj[name])
                for name in SITE_NAMES
                if name in obj
            }
        )


@dataclass
class SiteStreams:
    """The six generators a trajectory consumes."""

    sample: np.random.Generator
    data: np.random.Generator
    label: np.random.Generator
    param: np.random.Generator
    activation: np.random.Generator
    output_grad: np.random.Generator

    @classmethod
    def from_seed(cls, seed) -> "SiteStreams":
        children = np.random.SeedSequence(seed).spawn(6)
        return cls(*(np.random.default_rng(c) for c in children))


def data_noise_diagonal(spec: ProblemSpec, data_q: QuantizerSpec) -> np.ndarray:
    """Diagonal of D = E[eps_d eps_d^T] for the data site.

    Both multiplicative kinds give eps * lambda (the per-coordinate second
    moment of the scaling error under N(0, H)), additive gives eps * 1.
    Rounding kinds are mapped through their bound-safe equivalent model.
    """
    q = rounding_eps_equivalent(data_q)
    if q.is_identity:
        return np.zeros(spec.dim)
    if q.kind in ("multiplicative", "multiplicative_indep"):
        return q.epsilon * spec.eigenvalues
    if q.kind == "additive":
        return q.epsilon * np.ones(spec.dim)
    raise ValueError(f"no moment model for data quantizer kind {q.kind!r}")


def resolve_stepsize(
    spec: ProblemSpec, sites: SiteQuantizers, alpha_b: float = 3.0
) -> float:
    """Default stepsize 0.5 / (alpha_B * tr(H + D)), half the stability limit."""
    tr_q = spec.trace + float(data_noise_diagonal(spec, sites.data).sum())
    return 0.5 / (alpha_b * tr_q)


@dataclass(frozen=True)
class RunConfig:
    steps: int
    batch: int = 1
    stepsize: float | str = "auto"
    checkpoints: int | list[int] | None = None
    seed: int = 0
    w0: np.ndarray | None = None
    alpha_b: float = 3.0
    record_stats: bool = True

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if self.batch < 1:
            raise ValueError("batch must be positive")
        if isinstance(self.stepsize, str) and self.stepsize != "auto":
            raise ValueError("stepsize must be a float or 'auto'")
        if not isinstance(self.stepsize, str) and self.stepsize <= 0:
            raise ValueError("stepsize must be positive")

    def resolved_checkpoints(self) -> np.ndarray:
        if isinstance(self.checkpoints, (list, tuple, np.ndarray)):
            cps = np.unique(np.asarray(self.checkpoints, dtype=int))
            if cps.size == 0 or cps[0] < 1 or cps[-1] > self.steps:
                raise ValueError("checkpoints must lie in [1, steps]")
            return cps
        n = 32 if self.checkpoints is None else int(self.checkpoints)
        n = max(1, min(n, self.steps))
        return np.unique(np.round(np.geomspace(1, self.steps, n)).astype(int))


@dataclass
class TrajectoryStats:
    """Running maxima used to estimate gradient-noise ingredients."""

    max_act_sq: float = 0.0  # max_t |Qd X Qp(w)|^2
    max_ograd_sq: float = 0.0  # max_t |Ql(y) - Qa(a)|^2
    max_param_h_sq: float = 0.0  # max_t sum_i lambda_i w_{t,i}^2
    max_param_sq: float = 0.0  # max_t |w_t|^2


@dataclass
class Trajectory:
    checkpoints: np.ndarray
    risk_last: np.ndarray
    risk_avg: np.ndarray
    final_w: np.ndarray
    final_avg: np.ndarray
    seed: int
    stats: TrajectoryStats | None = None


def sgd_step(
    w: np.ndarray,
    batch: tuple[np.ndarray, np.ndarray],
    sites: SiteQuantizers,
    gamma: float,
    batch_size: int,
    streams: SiteStreams,
) -> np.ndarray:
    """One quantized update; returns the new iterate, never mutating ``w``."""
    x, y = batch
    xq = apply_rows(sites.data, x, streams.data)
    yq = apply_elementwise(sites.label, y, streams.label)
    wq = apply(sites.param, w, streams.param)
    a = xq @ wq
    aq = apply(sites.activation, a, streams.activation)
    o = yq - aq
    oq = apply(sites.output_grad, o, streams.output_grad)
    return w + (gamma / batch_size) * (xq.T @ oq)


def run_trajectory(
    spec: ProblemSpec, sites: SiteQuantizers, run: RunConfig
) -> Trajectory:
    """Simulate one quantized SGD trajectory and record risk at checkpoints.

    ``risk_avg`` at checkpoint t is the excess risk of the average of the
    first t iterates w_0 .. w_{t-1} (the final iterate is excluded, the
    starting point included); ``risk_last`` is the excess risk of w_t.
    Divergence raises :class:`DivergenceError` carrying the offending step.
    """
    gamma = (
        resolve_stepsize(spec, sites, run.alpha_b)
        if isinstance(run.stepsize, str)
        else float(run.stepsize)
    )
    streams = SiteStreams.from_seed(run.seed)
    w = (
        np.zeros(spec.dim)
        if run.w0 is None
        else np.array(run.w0, dtype=float, copy=True)
    )
    if w.shape != (spec.dim,):
        raise ValueError("w0 has the wrong shape")
    checkpoints = run.resolved_checkpoints()
    cp_set = set(int(c) for c in checkpoints)
    risk_last = np.empty(checkpoints.shape)
    risk_avg = np.empty(checkpoints.shape)
    lam = spec.eigenvalues
    stats = TrajectoryStats() if run.record_stats else None
    w_sum = np.zeros(spec.dim)
    limit = 1e12 * (1.0 + float(spec.w_star @ spec.w_star))
    idx = 0
    for t in range(1, run.steps + 1):
        w_sum += w
        batch = sample_batch(spec, run.batch, streams.sample)
        x, y = batch
        xq = apply_rows(sites.data, x, streams.data)
        yq = apply_elementwise(sites.label, y, streams.label)
        wq = apply(sites.param, w, streams.param)
        a = xq @ wq
        aq = apply(sites.activation, a, streams.activation)
        o = yq - aq
        oq = apply(sites.output_grad, o, streams.output_grad)
        w = w + (gamma / run.batch) * (xq.T @ oq)
        norm_sq = float(w @ w)
        if not norm_sq < limit:
            raise DivergenceError(t, norm_sq)
        if stats is not None:
            a_sq = float(a @ a)
            o_sq = float(o @ o)
            h_sq = float(lam @ (w * w))
            if a_sq > stats.max_act_sq:
                stats.max_act_sq = a_sq
            if o_sq > stats.max_ograd_sq:
                stats.max_ograd_sq = o_sq
            if h_sq > stats.max_param_h_sq:
                stats.max_param_h_sq = h_sq
            if norm_sq > stats.max_param_sq:
                stats.max_param_sq = norm_sq
        if t in cp_set:
            risk_last[idx] = excess_risk(spec, w)
            risk_avg[idx] = excess_risk(spec, w_sum / t)
            idx += 1
    return Trajectory(
        checkpoints=checkpoints,
        risk_last=risk_last,
        risk_avg=risk_avg,
        final_w=w,
        final_avg=w_sum / run.steps,
        seed=run.seed,
        stats=stats,
    )


@dataclass
class MeanRisk:
    checkpoints: np.ndarray
    mean_last: np.ndarray
    se_last: np.ndarray
    mean_avg: np.ndarray
    se_avg: np.ndarray
    n_seeds: int
    final_avg_risks: np.ndarray  # per-seed excess risk of the final average


def mean_risk(
    spec: ProblemSpec, sites: SiteQuantizers, run: RunConfig, n_seeds: int
) -> MeanRisk:
    """Average risk curves over seeds ``run.seed .. run.seed + n_seeds - 1``.

    ``n_seeds = 1`` is allowed for debugging; standard errors are then zero.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be positive")
    last = []
    avg = []
    trajs = []
    for i in range(n_seeds):
        traj = run_trajectory(spec, sites, replace(run, seed=run.seed + i))
        trajs.append(traj)
        last.append(traj.risk_last)
        avg.append(traj.risk_avg)
    last_arr = np.asarray(last)
    avg_arr = np.asarray(avg)
    if n_seeds > 1:
        se_last = last_arr.std(axis=0, ddof=1) / np.sqrt(n_seeds)
        se_avg = avg_arr.std(axis=0, ddof=1) / np.sqrt(n_seeds)
    else:
        se_last = np.zeros(last_arr.shape[1])
        se_avg = np.zeros(avg_arr.shape[1])
    return MeanRisk(
        checkpoints=trajs[0].checkpoints,
        mean_last=last_arr.mean(axis=0),
        se_last=se_last,
        mean_avg=avg_arr.mean(axis=0),
        se_avg=se_avg,
        n_seeds=n_seeds,
        final_avg_risks=np.array([excess_risk(spec, t.final_avg) for t in trajs]),
    )
