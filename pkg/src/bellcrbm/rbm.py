"""Binary restricted Boltzmann machine with exact enumeration.

Units take values {0, 1}. A configuration ``(v, h)`` has energy

    E(v, h) = -(v . W h + c . v + d . h)

and probability proportional to ``exp(-E / t)`` at temperature ``t``
(default 1). Hidden units factorize given the visible layer, so free
energies and exact visible marginals are available in closed form for any
machine small enough to enumerate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

_MAX_ENUM_VISIBLE = 20


def _check_temp(temp: float) -> None:
    if not (np.isfinite(temp) and temp > 0.0):
        raise ValueError(f"temperature must be a finite positive number, got {temp!r}")


def enumerate_bits(k: int) -> np.ndarray:
    """All length-``k`` binary vectors in lexicographic order, shape (2**k, k)."""
    idx = np.arange(1 << k, dtype=np.uint32)
    return ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.int8)


@dataclass(frozen=True)
class RbmParams:
    """Weights (m x n), visible biases (m,), hidden biases (n,).

    Arrays are copied and frozen on construction; instances are immutable
    values and safe to share across threads.
    """

    weights: np.ndarray
    visible_biases: np.ndarray
    hidden_biases: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        c = np.array(self.visible_biases, dtype=float).reshape(-1)
        d = np.array(self.hidden_biases, dtype=float).reshape(-1)
        if w.ndim != 2:
            raise ValueError(f"weights must be 2-d, got shape {w.shape}")
        if c.size < 1 or d.size < 1:
            raise ValueError("need at least one visible and one hidden unit")
        if w.shape != (c.size, d.size):
            raise ValueError(
                f"weights shape {w.shape} does not match bias sizes ({c.size}, {d.size})"
            )
        for name, arr in (("weights", w), ("visible_biases", c), ("hidden_biases", d)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        for field, arr in (("weights", w), ("visible_biases", c), ("hidden_biases", d)):
            arr.flags.writeable = False
            object.__setattr__(self, field, arr)

    @property
    def m(self) -> int:
        return self.visible_biases.size

    @property
    def n(self) -> int:
        return self.hidden_biases.size


def _check_visible(params: RbmParams, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (params.m,):
        raise ValueError(f"visible vector shape {v.shape} does not match m={params.m}")
    return v


def energy(params: RbmParams, v: np.ndarray, h: np.ndarray) -> float:
    """E(v, h) = -(v . W h + c . v + d . h)."""
    v = _check_visible(params, v)
    h = np.asarray(h, dtype=float)
    if h.shape != (params.n,):
        raise ValueError(f"hidden vector shape {h.shape} does not match n={params.n}")
    return float(
        -(v @ params.weights @ h + params.visible_biases @ v + params.hidden_biases @ h)
    )


def hidden_fields(params: RbmParams, v: np.ndarray) -> np.ndarray:
    """Per-hidden-unit input d_j + (W^T v)_j; accepts a leading batch axis."""
    return params.hidden_biases + np.asarray(v, dtype=float) @ params.weights


def free_energy(params: RbmParams, v: np.ndarray, temp: float = 1.0) -> float:
    """Effective energy of a visible configuration with hidden units summed out:

        F(v) = -c . v - t * sum_j softplus((d_j + (W^T v)_j) / t)

    which equals ``-t * log sum_h exp(-E(v, h) / t)``. The softplus is
    evaluated as ``logaddexp(0, x)`` so large weights cannot overflow.
    """
    _check_temp(temp)
    v = _check_visible(params, v)
    phi = hidden_fields(params, v)
    softplus_sum = float(np.logaddexp(0.0, phi / temp).sum())
    return float(-(params.visible_biases @ v) - temp * softplus_sum)


def visible_distribution(params: RbmParams, temp: float = 1.0) -> np.ndarray:
    """Exact marginal P(v) over all 2**m visible vectors.

    Row ``i`` of the result corresponds to ``enumerate_bits(m)[i]``. Guarded
    to m <= 20; the table has 2**m rows.
    """
    _check_temp(temp)
    if params.m > _MAX_ENUM_VISIBLE:
        raise ValueError(f"m={params.m} too large to enumerate (limit {_MAX_ENUM_VISIBLE})")
    v = enumerate_bits(params.m).astype(float)
    phi = params.hidden_biases + v @ params.weights
    log_weight = (v @ params.visible_biases) / temp + np.logaddexp(0.0, phi / temp).sum(axis=1)
    return np.exp(log_weight - logsumexp(log_weight))


def unit_activation(delta_e, temp: float = 1.0):
    """P(unit = 1) = 1 / (1 + exp(-delta_e / t)) for the energy drop
    ``delta_e`` when the unit switches on. Vectorized over ``delta_e``."""
    _check_temp(temp)
    return expit(np.asarray(delta_e, dtype=float) / temp)


def gibbs_sweep(
    params: RbmParams,
    state: tuple[np.ndarray, np.ndarray],
    rng: np.random.Generator,
    temp: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """One block-Gibbs update: resample every hidden unit given v, then every
    visible unit given the new h.

    Both state arrays may carry leading batch axes; chains in a batch evolve
    independently. The trajectory is a deterministic function of the
    generator state.
    """
    v, h = state
    v = np.asarray(v)
    h = np.asarray(h)
    if v.shape[-1] != params.m or h.shape[-1] != params.n or v.shape[:-1] != h.shape[:-1]:
        raise ValueError(
            f"state shapes {v.shape}, {h.shape} do not match layer sizes ({params.m}, {params.n})"
        )
    p_h = unit_activation(params.hidden_biases + v @ params.weights, temp)
    h_new = (rng.random(p_h.shape) < p_h).astype(np.int8)
    p_v = unit_activation(params.visible_biases + h_new @ params.weights.T, temp)
    v_new = (rng.random(p_v.shape) < p_v).astype(np.int8)
    return v_new, h_new
