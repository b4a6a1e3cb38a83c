"""Conditional RBM over two outcome units with one-hot conditioning groups.

Three conditioning groups (detector A setting, detector B setting, prepared
state) each hold a weight row per choice; the active rows add to the hidden
biases, so each condition selects an ordinary RBM over the two visible
units. Outcomes are encoded +1 -> 0, -1 -> 1, and the model only ever
produces distributions conditional on a full choice of settings and state:
no probability is assigned to the conditions themselves.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np
from scipy.special import expit, logsumexp

from . import rbm
from .quantum import OUTCOMES, OutcomeDistribution, TwoQubitState, born_probabilities
from .rbm import RbmParams

GROUP_NAMES = ("detector_a", "detector_b", "state")

#: Visible configurations in outcome order: bit 0 encodes +1, bit 1 encodes -1.
VISIBLE_CONFIGS = rbm.enumerate_bits(2)

MODEL_FORMAT = "bellcrbm-model"
MODEL_FORMAT_VERSION = 1


class ConditionVector(NamedTuple):
    """Active one-hot index per conditioning group."""

    a_idx: int
    b_idx: int
    s_idx: int = 0


@dataclass(frozen=True)
class ConditioningLayout:
    """Detector angles (radians) and prepared states addressed by the
    conditioning groups."""

    detector_a: tuple[float, ...]
    detector_b: tuple[float, ...]
    states: tuple[TwoQubitState, ...]

    def __post_init__(self) -> None:
        a = tuple(float(x) for x in self.detector_a)
        b = tuple(float(x) for x in self.detector_b)
        states = tuple(self.states)
        if not a or not b or not states:
            raise ValueError("every conditioning group needs at least one entry")
        if not all(np.isfinite(a)) or not all(np.isfinite(b)):
            raise ValueError("detector angles must be finite")
        for s in states:
            if not isinstance(s, TwoQubitState):
                raise TypeError(f"states must be TwoQubitState, got {type(s).__name__}")
        object.__setattr__(self, "detector_a", a)
        object.__setattr__(self, "detector_b", b)
        object.__setattr__(self, "states", states)

    @property
    def group_sizes(self) -> tuple[int, int, int]:
        return (len(self.detector_a), len(self.detector_b), len(self.states))

    @property
    def n_conditions(self) -> int:
        k_a, k_b, k_s = self.group_sizes
        return k_a * k_b * k_s

    def conditions(self) -> list[ConditionVector]:
        """All conditions, state-major then detector A then detector B."""
        k_a, k_b, k_s = self.group_sizes
        return [
            ConditionVector(a, b, s)
            for s in range(k_s)
            for a in range(k_a)
            for b in range(k_b)
        ]

    def validate_condition(self, u: ConditionVector) -> ConditionVector:
        u = ConditionVector(*u)
        k_a, k_b, k_s = self.group_sizes
        if not (0 <= u.a_idx < k_a and 0 <= u.b_idx < k_b and 0 <= u.s_idx < k_s):
            raise ValueError(f"condition {u} out of range for group sizes {self.group_sizes}")
        return u

    def angle_index(self, detector: str, angle: float, atol: float = 1e-9) -> int:
        """Index of ``angle`` in the given detector group ("a" or "b")."""
        angles = {"a": self.detector_a, "b": self.detector_b}[detector]
        for i, x in enumerate(angles):
            if abs(x - angle) <= atol:
                return i
        raise ValueError(f"angle {angle!r} is not a detector {detector.upper()} setting")

    def describe(self) -> str:
        k_a, k_b, k_s = self.group_sizes
        return f"A={k_a} settings, B={k_b} settings, states={k_s}"


def born_tables(layout: ConditioningLayout) -> dict[ConditionVector, OutcomeDistribution]:
    """Exact measurement statistics for every condition in the layout."""
    return {
        u: born_probabilities(
            layout.states[u.s_idx], layout.detector_a[u.a_idx], layout.detector_b[u.b_idx]
        )
        for u in layout.conditions()
    }


@dataclass(frozen=True)
class CrbmParams:
    """Conditional RBM parameters: a 2-visible-unit base RBM plus one
    (group size x n) conditioning weight matrix per group, ordered
    (detector A, detector B, state)."""

    base: RbmParams
    cond_weights: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.base.m != 2:
            raise ValueError(f"conditional RBM has exactly 2 visible units, got {self.base.m}")
        cw = tuple(np.array(w, dtype=float) for w in self.cond_weights)
        if len(cw) != len(GROUP_NAMES):
            raise ValueError(f"expected {len(GROUP_NAMES)} conditioning groups, got {len(cw)}")
        for name, w in zip(GROUP_NAMES, cw):
            if w.ndim != 2 or w.shape[1] != self.base.n:
                raise ValueError(
                    f"{name} weights shape {w.shape} does not match {self.base.n} hidden units"
                )
            if w.shape[0] < 1:
                raise ValueError(f"{name} group must have at least one row")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"{name} weights must be finite")
            w.flags.writeable = False
        object.__setattr__(self, "cond_weights", cw)

    @property
    def n_hidden(self) -> int:
        return self.base.n

    @property
    def group_sizes(self) -> tuple[int, int, int]:
        return tuple(w.shape[0] for w in self.cond_weights)

    def validate_layout(self, layout: ConditioningLayout) -> None:
        if self.group_sizes != layout.group_sizes:
            raise ValueError(
                f"parameter group sizes {self.group_sizes} do not match layout {layout.group_sizes}"
            )

    def to_vector(self) -> np.ndarray:
        """All parameters as one flat vector (weights, visible biases, hidden
        biases, then each conditioning matrix row-major)."""
        parts = [self.base.weights.ravel(), self.base.visible_biases, self.base.hidden_biases]
        parts += [w.ravel() for w in self.cond_weights]
        return np.concatenate(parts)

    def with_vector(self, vec: np.ndarray) -> "CrbmParams":
        """New instance with the same shapes and values taken from ``vec``."""
        vec = np.asarray(vec, dtype=float)
        shapes = [self.base.weights.shape, (2,), (self.base.n,)]
        shapes += [w.shape for w in self.cond_weights]
        sizes = [int(np.prod(s)) for s in shapes]
        if vec.shape != (sum(sizes),):
            raise ValueError(f"vector length {vec.size} does not match {sum(sizes)} parameters")
        chunks = np.split(vec, np.cumsum(sizes)[:-1])
        arrays = [chunk.reshape(shape) for chunk, shape in zip(chunks, shapes)]
        base = RbmParams(arrays[0], arrays[1], arrays[2])
        return CrbmParams(base, tuple(arrays[3:]))


def initial_params(
    layout: ConditioningLayout,
    n_hidden: int,
    rng: np.random.Generator,
    init_scale: float = 0.1,
) -> CrbmParams:
    """Zero-mean Gaussian weights with std ``init_scale``; biases start at 0."""
    if n_hidden < 1:
        raise ValueError("need at least one hidden unit")
    weights = rng.normal(0.0, init_scale, size=(2, n_hidden))
    cond = tuple(
        rng.normal(0.0, init_scale, size=(k, n_hidden)) for k in layout.group_sizes
    )
    base = RbmParams(weights, np.zeros(2), np.zeros(n_hidden))
    return CrbmParams(base, cond)


def effective_hidden_biases(params: CrbmParams, u: ConditionVector) -> np.ndarray:
    """Hidden biases plus the active conditioning row from each group."""
    u = _check_condition(params, u)
    cw_a, cw_b, cw_s = params.cond_weights
    return params.base.hidden_biases + cw_a[u.a_idx] + cw_b[u.b_idx] + cw_s[u.s_idx]


def _check_condition(params: CrbmParams, u: ConditionVector) -> ConditionVector:
    u = ConditionVector(*u)
    k_a, k_b, k_s = params.group_sizes
    if not (0 <= u.a_idx < k_a and 0 <= u.b_idx < k_b and 0 <= u.s_idx < k_s):
        raise ValueError(f"condition {u} out of range for group sizes {params.group_sizes}")
    return u


def conditional_energy(
    params: CrbmParams, v: np.ndarray, u: ConditionVector, h: np.ndarray
) -> float:
    """Energy of (v, h) under the plain RBM selected by condition ``u``."""
    shifted = RbmParams(
        params.base.weights, params.base.visible_biases, effective_hidden_biases(params, u)
    )
    return rbm.energy(shifted, v, h)


def _tables_from_shifts(
    weights: np.ndarray,
    visible_biases: np.ndarray,
    hidden_biases: np.ndarray,
    shifts: np.ndarray,
    temp: float,
) -> np.ndarray:
    """Conditional tables (U, 4) given per-condition hidden-bias shifts (U, n)."""
    v = VISIBLE_CONFIGS.astype(float)
    phi = (hidden_biases + shifts)[:, None, :] + (v @ weights)[None, :, :]
    log_weight = (v @ visible_biases)[None, :] / temp + np.logaddexp(0.0, phi / temp).sum(axis=2)
    return np.exp(log_weight - logsumexp(log_weight, axis=1, keepdims=True))


def _condition_index_array(
    params: CrbmParams, conditions: Iterable[ConditionVector]
) -> np.ndarray:
    idx = np.array([_check_condition(params, u) for u in conditions], dtype=int)
    if idx.size == 0:
        raise ValueError("need at least one condition")
    return idx


def _shifts_for(params: CrbmParams, idx: np.ndarray) -> np.ndarray:
    cw_a, cw_b, cw_s = params.cond_weights
    return cw_a[idx[:, 0]] + cw_b[idx[:, 1]] + cw_s[idx[:, 2]]


def conditional_tables(
    params: CrbmParams, conditions: Iterable[ConditionVector], temp: float = 1.0
) -> np.ndarray:
    """Exact conditional outcome tables, one row per condition, columns in
    ``quantum.OUTCOMES`` order."""
    rbm._check_temp(temp)
    idx = _condition_index_array(params, conditions)
    return _tables_from_shifts(
        params.base.weights,
        params.base.visible_biases,
        params.base.hidden_biases,
        _shifts_for(params, idx),
        temp,
    )


def conditional_table(
    params: CrbmParams, u: ConditionVector, temp: float = 1.0
) -> OutcomeDistribution:
    """Exact P(x_a, x_b | u) over the four joint outcomes."""
    return OutcomeDistribution(conditional_tables(params, [u], temp)[0])


def hidden_activations(
    params: CrbmParams, v_bits: np.ndarray, shifts: np.ndarray, temp: float = 1.0
) -> np.ndarray:
    """P(h_j = 1 | v, u) for batched visible bits and condition shifts."""
    phi = params.base.hidden_biases + shifts + np.asarray(v_bits, dtype=float) @ params.base.weights
    return expit(phi / temp)


def sample_outcome(
    params: CrbmParams, u: ConditionVector, rng: np.random.Generator, temp: float = 1.0
) -> tuple[int, int]:
    """Draw one (x_a, x_b) by inverse-CDF over the exact conditional table."""
    p = conditional_table(params, u, temp).probs
    idx = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
    return OUTCOMES[min(idx, 3)]


# ---------------------------------------------------------------------------
# Model files: versioned JSON with every float rendered to 17 significant
# digits, which round-trips IEEE doubles bit-exactly.
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_flat(arr: np.ndarray) -> list[str]:
    return [_fmt(x) for x in np.asarray(arr, dtype=float).ravel()]


def _parse_flat(data: list[str], shape: tuple[int, ...]) -> np.ndarray:
    return np.array([float(x) for x in data], dtype=float).reshape(shape)


def layout_to_doc(layout: ConditioningLayout) -> dict:
    return {
        "detector_a_angles": [_fmt(x) for x in layout.detector_a],
        "detector_b_angles": [_fmt(x) for x in layout.detector_b],
        "states": [
            {"amplitudes": [[_fmt(a.real), _fmt(a.imag)] for a in s.amplitudes]}
            for s in layout.states
        ],
    }


def layout_from_doc(doc: Mapping) -> ConditioningLayout:
    states = tuple(
        TwoQubitState(np.array([complex(float(re), float(im)) for re, im in s["amplitudes"]]))
        for s in doc["states"]
    )
    return ConditioningLayout(
        detector_a=tuple(float(x) for x in doc["detector_a_angles"]),
        detector_b=tuple(float(x) for x in doc["detector_b_angles"]),
        states=states,
    )


class LoadedModel(NamedTuple):
    params: CrbmParams
    layout: ConditioningLayout
    seed_lineage: dict
    metadata: dict


def model_to_doc(
    params: CrbmParams,
    layout: ConditioningLayout,
    seed_lineage: Mapping | None = None,
    metadata: Mapping | None = None,
) -> dict:
    params.validate_layout(layout)
    return {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "layout": layout_to_doc(layout),
        "hidden_units": params.n_hidden,
        "params": {
            "weights": {"shape": [2, params.n_hidden], "data": _fmt_flat(params.base.weights)},
            "visible_biases": _fmt_flat(params.base.visible_biases),
            "hidden_biases": _fmt_flat(params.base.hidden_biases),
            "cond_weights": [
                {"group": name, "shape": list(w.shape), "data": _fmt_flat(w)}
                for name, w in zip(GROUP_NAMES, params.cond_weights)
            ],
        },
        "seed_lineage": dict(seed_lineage or {}),
        "metadata": dict(metadata or {}),
    }


def model_from_doc(doc: Mapping) -> LoadedModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} document")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')!r}")
    layout = layout_from_doc(doc["layout"])
    p = doc["params"]
    n = int(doc["hidden_units"])
    base = RbmParams(
        _parse_flat(p["weights"]["data"], (2, n)),
        _parse_flat(p["visible_biases"], (2,)),
        _parse_flat(p["hidden_biases"], (n,)),
    )
    cond = tuple(
        _parse_flat(w["data"], tuple(w["shape"])) for w in p["cond_weights"]
    )
    params = CrbmParams(base, cond)
    params.validate_layout(layout)
    return LoadedModel(params, layout, dict(doc.get("seed_lineage", {})), dict(doc.get("metadata", {})))


def save_model(
    path,
    params: CrbmParams,
    layout: ConditioningLayout,
    seed_lineage: Mapping | None = None,
    metadata: Mapping | None = None,
) -> None:
    doc = model_to_doc(params, layout, seed_lineage, metadata)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_model(path) -> LoadedModel:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise OSError(f"cannot parse model file {path}: {exc}") from exc
    return model_from_doc(doc)
