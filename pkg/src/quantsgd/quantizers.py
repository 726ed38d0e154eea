"""Unbiased quantizers: relative/absolute random scalings and stochastic rounding.

Six kinds are supported, all unbiased given their input:

- ``identity``:              passes values through untouched, draws nothing.
- ``multiplicative``:        x -> (1 + sqrt(eps) * s) x with ONE Rademacher
                             sign s shared by every coordinate of the tensor;
                             conditional error second moment eps * x x^T.
- ``multiplicative_indep``:  same scaling with an independent sign per
                             coordinate; second moment eps * diag(x * x).
- ``additive``:              x_i -> x_i + sqrt(eps) * s_i with independent
                             signs; second moment eps * I.
- ``int_round``:             stochastic rounding to the fixed grid with step
                             2**-bits (unbounded range, no clipping).
- ``fp_round``:              stochastic rounding to a floating-point style
                             grid whose step follows the magnitude of each
                             coordinate: delta(x) = 2**(floor(log2 |x|) - m).
                             Zero is preserved exactly.

Rounding conditional variance per coordinate is (x - lo)(hi - x) where lo/hi
are the neighbouring grid points; it vanishes on the grid and is at most
delta^2 / 4.

Any quantizer whose ``epsilon`` is zero behaves as the identity and consumes
nothing from the random stream; rounding kinds always consume one uniform per
coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

KINDS = (
    "identity",
    "multiplicative",
    "multiplicative_indep",
    "additive",
    "int_round",
    "fp_round",
)

_EPS_KINDS = ("multiplicative", "multiplicative_indep", "additive")


@dataclass(frozen=True)
class QuantizerSpec:
    kind: str
    epsilon: float = 0.0
    bits: int | None = None
    mantissa_bits: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown quantizer kind {self.kind!r}")
        if self.kind in _EPS_KINDS and self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.kind == "int_round" and (self.bits is None or self.bits < 1):
            raise ValueError("int_round requires bits >= 1")
        if self.kind == "fp_round" and (
            self.mantissa_bits is None or self.mantissa_bits < 1
        ):
            raise ValueError("fp_round requires mantissa_bits >= 1")

    @property
    def is_identity(self) -> bool:
        """True when applying this quantizer never changes the input."""
        return self.kind == "identity" or (
            self.kind in _EPS_KINDS and self.epsilon == 0.0
        )

    def to_json(self) -> dict[str, Any]:
        if self.kind == "identity":
            return {"kind": "identity"}
        if self.kind == "int_round":
            return {"kind": "int_round", "bits": self.bits}
        if self.kind == "fp_round":
            return {"kind": "fp_round", "mantissa_bits": self.mantissa_bits}
        return {"kind": self.kind, "epsilon": self.epsilon}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "QuantizerSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValueError(f"quantizer spec must be an object with a 'kind': {obj!r}")
        kind = obj["kind"]
        known = {"kind", "epsilon", "bits", "mantissa_bits"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown quantizer keys {sorted(extra)}")
        return cls(
            kind=kind,
            epsilon=float(obj.get("epsilon", 0.0)),
            bits=obj.get("bits"),
            mantissa_bits=obj.get("mantissa_bits"),
        )


def identity() -> QuantizerSpec:
    return QuantizerSpec("identity")


def _signs(rng: np.random.Generator, shape) -> np.ndarray:
    return np.where(rng.random(shape) < 0.5, 1.0, -1.0)


def _round_stochastic(x: np.ndarray, delta, rng: np.random.Generator) -> np.ndarray:
    # delta is a power of two (scalar or per-coordinate), so x / delta is exact
    scaled = x / delta
    lo = np.floor(scaled)
    frac = scaled - lo
    up = rng.random(np.shape(x)) < frac
    return (lo + up) * delta


def _fp_delta(x: np.ndarray, mantissa_bits: int) -> np.ndarray:
    _, exp = np.frexp(x)  # |x| = m * 2**exp with m in [0.5, 1)
    return np.ldexp(1.0, exp - 1 - mantissa_bits)


def apply(q: QuantizerSpec, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Quantize ``x`` as a single tensor.

    For the multiplicative kind this means one shared sign for the whole
    tensor, which is the semantics used at the parameter, activation and
    output-gradient sites.
    """
    if q.is_identity:
        return x
    x = np.asarray(x, dtype=float)
    if q.kind == "multiplicative":
        return x * (1.0 + np.sqrt(q.epsilon) * _signs(rng, ()))
    if q.kind == "multiplicative_indep":
        return x * (1.0 + np.sqrt(q.epsilon) * _signs(rng, x.shape))
    if q.kind == "additive":
        return x + np.sqrt(q.epsilon) * _signs(rng, x.shape)
    if q.kind == "int_round":
        return _round_stochastic(x, 2.0 ** (-q.bits), rng)
    if q.kind == "fp_round":
        return _round_stochastic(x, _fp_delta(x, q.mantissa_bits), rng)
    raise AssertionError(q.kind)


def apply_rows(q: QuantizerSpec, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Quantize each row of a (batch, d) matrix independently.

    Only the shared-sign multiplicative kind differs from :func:`apply` here
    (one sign per row instead of one overall); every other kind is already
    independent per coordinate.
    """
    if q.kind == "multiplicative" and not q.is_identity:
        x = np.asarray(x, dtype=float)
        s = _signs(rng, x.shape[0])
        return x * (1.0 + np.sqrt(q.epsilon) * s)[:, None]
    return apply(q, x, rng)


def apply_elementwise(
    q: QuantizerSpec, x: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Quantize each element independently (the label-site semantics)."""
    if q.kind == "multiplicative" and not q.is_identity:
        x = np.asarray(x, dtype=float)
        return x * (1.0 + np.sqrt(q.epsilon) * _signs(rng, x.shape))
    return apply(q, x, rng)


def error_second_moment(q: QuantizerSpec, x: np.ndarray) -> np.ndarray:
    """Analytic conditional second moment E[(Q(x)-x)(Q(x)-x)^T | x].

    ``x`` is treated with the single-tensor semantics of :func:`apply` and
    must be one-dimensional.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("error_second_moment expects a vector")
    d = x.shape[0]
    if q.is_identity:
        return np.zeros((d, d))
    if q.kind == "multiplicative":
        return q.epsilon * np.outer(x, x)
    if q.kind == "multiplicative_indep":
        return q.epsilon * np.diag(x**2)
    if q.kind == "additive":
        return q.epsilon * np.eye(d)
    if q.kind == "int_round":
        delta = 2.0 ** (-q.bits)
    elif q.kind == "fp_round":
        delta = _fp_delta(x, q.mantissa_bits)
    else:
        raise AssertionError(q.kind)
    lo = np.floor(x / delta) * delta
    return np.diag((x - lo) * (lo + delta - x))


def rounding_eps_equivalent(q: QuantizerSpec) -> QuantizerSpec:
    """Map a rounding quantizer onto the exact-model kind that upper-bounds it.

    Integer rounding has conditional variance at most delta^2/4 per
    coordinate, uniformly in x, so it is dominated by an additive quantizer
    with eps = 2**(-2 bits) / 4.  Floating-point rounding has step at most
    |x| * 2**-m, hence variance at most |x|^2 * 2**(-2m) / 4, dominated by a
    multiplicative quantizer with eps = 2**(-2m) / 4.  These are bound-safe
    over-estimates, not exact moment models.
    """
    if q.kind == "int_round":
        return QuantizerSpec("additive", epsilon=2.0 ** (-2 * q.bits) / 4)
    if q.kind == "fp_round":
        return QuantizerSpec("multiplicative", epsilon=2.0 ** (-2 * q.mantissa_bits) / 4)
    return q
