"""Exact two-spin measurement statistics and nonlocality metrics.

Angles parameterize measurement directions in the z-x plane: an angle
``theta`` means the spin component along ``(sin theta, 0, cos theta)``,
measured from the z axis. Outcomes at each station are +1 or -1. For the
singlet state this convention gives the correlator ``E = -cos(alpha - beta)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np

Angle = float

#: Joint outcomes (x_a, x_b) in table order.
OUTCOMES: tuple[tuple[int, int], ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))
_OUTCOME_INDEX = {o: i for i, o in enumerate(OUTCOMES)}
_PRODUCT_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])

_BASIS_LABELS = ("++", "+-", "-+", "--")
_NORM_TOL = 1e-12


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities of the four joint outcomes, ordered per ``OUTCOMES``."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float).reshape(4)
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite")
        if np.any(p < -1e-12):
            raise ValueError(f"negative probability {p.min()!r}")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    def __getitem__(self, outcome: tuple[int, int]) -> float:
        return float(self.probs[_OUTCOME_INDEX[tuple(outcome)]])

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {o: float(p) for o, p in zip(OUTCOMES, self.probs)}


def uniform_distribution() -> OutcomeDistribution:
    return OutcomeDistribution(np.full(4, 0.25))


@dataclass(frozen=True)
class TwoQubitState:
    """Pure state of two spin-1/2 particles; amplitudes ordered
    |++>, |+->, |-+>, |--> in the z eigenbasis."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.amplitudes, dtype=complex).reshape(4)
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        norm_sq = float(np.sum(np.abs(a) ** 2))
        if abs(norm_sq - 1.0) > _NORM_TOL:
            raise ValueError(f"squared norm {norm_sq!r} differs from 1 by more than {_NORM_TOL}")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    def fidelity(self, other: "TwoQubitState") -> float:
        """|<self|other>|^2."""
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


def singlet() -> TwoQubitState:
    """(|+-> - |-+>)/sqrt(2), the maximally anticorrelated Bell state."""
    s = 1.0 / math.sqrt(2.0)
    return TwoQubitState(np.array([0.0, s, -s, 0.0], dtype=complex))


def basis_state(label: str) -> TwoQubitState:
    """Product basis state by label, e.g. ``"+-"`` for |+->."""
    if label not in _BASIS_LABELS:
        raise ValueError(f"unknown basis label {label!r}; expected one of {_BASIS_LABELS}")
    amps = np.zeros(4, dtype=complex)
    amps[_BASIS_LABELS.index(label)] = 1.0
    return TwoQubitState(amps)


def _measurement_basis(theta: Angle) -> np.ndarray:
    # Rows: +1 then -1 eigenvectors of the spin component along
    # (sin theta, 0, cos theta), expressed in the z eigenbasis.
    h = 0.5 * theta
    return np.array([[math.cos(h), math.sin(h)], [-math.sin(h), math.cos(h)]])


def born_probabilities(state: TwoQubitState, alpha: Angle, beta: Angle) -> OutcomeDistribution:
    """P(x_a, x_b | alpha, beta) for spin measurements along ``alpha`` at
    station A and ``beta`` at station B.

    ``TwoQubitState`` enforces normalization, so the returned table always
    sums to 1 up to rounding. For the singlet this reduces to
    ``P = (1 - x_a*x_b*cos(alpha - beta)) / 4``.
    """
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ValueError("measurement angles must be finite")
    projector_rows = np.kron(_measurement_basis(alpha), _measurement_basis(beta))
    amps = projector_rows @ state.amplitudes
    return OutcomeDistribution(np.abs(amps) ** 2)


def expectation(dist: OutcomeDistribution) -> float:
    """E[x_a * x_b] under the given joint outcome distribution."""
    return float(dist.probs @ _PRODUCT_SIGNS)


#: The four possible positions of the minus sign in the CHSH sum.
SIGN_PLACEMENTS: tuple[str, ...] = ("ab", "a'b", "ab'", "a'b'")


@dataclass(frozen=True)
class ChshSettings:
    """Setting quartet for the CHSH sum. ``sign_placement`` names the single
    correlator that enters with a minus sign."""

    a: Angle
    a_prime: Angle
    b: Angle
    b_prime: Angle
    sign_placement: str = "a'b'"

    def __post_init__(self) -> None:
        for name in ("a", "a_prime", "b", "b_prime"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"setting {name} must be finite")
        if self.sign_placement not in SIGN_PLACEMENTS:
            raise ValueError(f"sign_placement must be one of {SIGN_PLACEMENTS}")

    def pairs(self) -> dict[str, tuple[Angle, Angle]]:
        return {
            "ab": (self.a, self.b),
            "a'b": (self.a_prime, self.b),
            "ab'": (self.a, self.b_prime),
            "a'b'": (self.a_prime, self.b_prime),
        }


#: Settings at which the singlet attains S = 2*sqrt(2).
CANONICAL_SETTINGS = ChshSettings(0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)

CorrelatorSource = Callable[[Angle, Angle], OutcomeDistribution]


def chsh_all(source: CorrelatorSource, settings: ChshSettings) -> dict[str, float]:
    """The CHSH quantity |+-E(a,b) +- E(a',b) +- E(a,b') +- E(a',b')| for each
    of the four placements of the single minus sign."""
    e = {key: expectation(source(*pair)) for key, pair in settings.pairs().items()}
    total = sum(e.values())
    return {key: abs(total - 2.0 * e[key]) for key in SIGN_PLACEMENTS}


def chsh(source: CorrelatorSource, settings: ChshSettings) -> float:
    """CHSH quantity with the minus sign on ``settings.sign_placement``."""
    return chsh_all(source, settings)[settings.sign_placement]


class ChshMax(NamedTuple):
    s: float
    placement: str


def chsh_max(source: CorrelatorSource, settings: ChshSettings) -> ChshMax:
    """Maximum CHSH quantity over the four sign placements, with the argmax."""
    values = chsh_all(source, settings)
    best = max(SIGN_PLACEMENTS, key=lambda key: values[key])
    return ChshMax(values[best], best)


PR_ANTICORRELATED = OutcomeDistribution(np.array([0.0, 0.5, 0.5, 0.0]))
PR_CORRELATED = OutcomeDistribution(np.array([0.5, 0.0, 0.0, 0.5]))


def pr_box(alpha_index: int, beta_index: int) -> OutcomeDistribution:
    """Maximally nonlocal no-signaling box, anticorrelated convention:
    opposite outcomes unless both stations use the primed setting (index 1).

    Marginals are uniform for every setting pair, so the box cannot signal;
    its CHSH quantity is 4.
    """
    if alpha_index not in (0, 1) or beta_index not in (0, 1):
        raise ValueError("PR box setting indices must be 0 (unprimed) or 1 (primed)")
    if alpha_index == 1 and beta_index == 1:
        return PR_CORRELATED
    return PR_ANTICORRELATED


def _station_marginals(dist: OutcomeDistribution) -> tuple[float, float]:
    # P(x_a = +1), P(x_b = +1)
    p = dist.probs
    return float(p[0] + p[1]), float(p[0] + p[2])


def signaling_by_station(
    distributions: Mapping[tuple[Angle, Angle], OutcomeDistribution],
) -> dict[str, float]:
    """Largest outcome-marginal change at each station induced by varying the
    other station's setting, over a complete (alpha, beta) grid."""
    keys = set(distributions)
    a_settings = sorted({k[0] for k in keys})
    b_settings = sorted({k[1] for k in keys})
    if keys != set(itertools.product(a_settings, b_settings)):
        raise ValueError("distributions must cover the full (alpha, beta) settings grid")
    marg_a = {}
    marg_b = {}
    for key, dist in distributions.items():
        marg_a[key], marg_b[key] = _station_marginals(dist)
    dev_a = max(
        max(marg_a[(a, b)] for b in b_settings) - min(marg_a[(a, b)] for b in b_settings)
        for a in a_settings
    )
    dev_b = max(
        max(marg_b[(a, b)] for a in a_settings) - min(marg_b[(a, b)] for a in a_settings)
        for b in b_settings
    )
    return {"A": dev_a, "B": dev_b}


def signaling_deviation(
    distributions: Mapping[tuple[Angle, Angle], OutcomeDistribution],
) -> float:
    """Max over both stations of the marginal deviation; 0 means exactly
    no-signaling."""
    by_station = signaling_by_station(distributions)
    return max(by_station["A"], by_station["B"])
