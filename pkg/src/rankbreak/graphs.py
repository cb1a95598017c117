"""Comparison graphs, spectral diagnostics, theoretical bounds, topologies.

The comparison graph puts one node per item and accumulates, for every
sample offering both endpoints, a weight proportional to the number of
separators over the number of item pairs in that offering.  Its Laplacian
spectrum drives both the achievable error (through the rescaled spectral
gap ``alpha``) and the sample-size requirement (through the degree balance
``beta`` and the position diagnostics ``gamma`` and ``eta``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dataset import BrokenDataset
from .errors import ValidationError
from .model import Offering

_LAPLACIAN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ComparisonGraph:
    """Weighted item graph with adjacency, degrees, and Laplacian."""

    adjacency: np.ndarray
    d: int

    def __post_init__(self):
        adjacency = np.asarray(self.adjacency, dtype=float)
        if adjacency.shape != (self.d, self.d):
            raise ValidationError("adjacency must be square of size d")
        if not np.allclose(adjacency, adjacency.T, atol=1e-12):
            raise ValidationError("adjacency must be symmetric")
        if np.any(adjacency < 0) or np.any(np.diag(adjacency) != 0):
            raise ValidationError("adjacency needs nonnegative weights, zero diagonal")
        object.__setattr__(self, "adjacency", adjacency)

    @property
    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.degree) - self.adjacency

    @property
    def max_degree(self) -> float:
        return float(self.degree.max())

    @property
    def trace(self) -> float:
        return float(self.degree.sum())


def _sample_tau(kappas, positions, lams):
    """Per-sample normalized weight mass: sum lam * (kappa - p) / ell."""
    taus = []
    for kappa, pos, lam in zip(kappas, positions, lams):
        taus.append(float(np.sum(lam * (kappa - pos))) / len(pos))
    return np.asarray(taus)


def build_comparison_graph(dataset: BrokenDataset) -> ComparisonGraph:
    """Accumulate tau_j * ell_j / (kappa_j (kappa_j - 1)) per co-offered pair.

    Under the data-driven weights tau_j = 1 and the edge weight reduces to
    the separator count over the number of ordered pairs in the offering.
    """
    kappas, ells, positions, lams = dataset.sample_stats()
    taus = _sample_tau(kappas, positions, lams)
    adjacency = np.zeros((dataset.d, dataset.d))
    for (offering, _), tau, ell in zip(dataset.samples, taus, ells):
        idx = np.fromiter((dataset.index[i] for i in offering.items),
                          count=offering.kappa, dtype=np.int64)
        kappa = offering.kappa
        weight = tau * ell / (kappa * (kappa - 1))
        adjacency[np.ix_(idx, idx)] += weight
    np.fill_diagonal(adjacency, 0.0)
    return ComparisonGraph(adjacency=adjacency, d=dataset.d)


def design_comparison_graph(offerings, ell: int) -> ComparisonGraph:
    """Comparison graph implied by a survey design before any responses.

    Assumes ``ell`` separators per offering and data-driven weights, which
    is all the graph depends on.
    """
    items = sorted({i for off in offerings for i in off.items},
                   key=lambda x: (str(type(x)), x))
    index = {item: k for k, item in enumerate(items)}
    d = len(items)
    adjacency = np.zeros((d, d))
    for offering in offerings:
        idx = np.fromiter((index[i] for i in offering.items),
                          count=offering.kappa, dtype=np.int64)
        kappa = offering.kappa
        adjacency[np.ix_(idx, idx)] += ell / (kappa * (kappa - 1))
    np.fill_diagonal(adjacency, 0.0)
    return ComparisonGraph(adjacency=adjacency, d=d)


def _check_laplacian(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValidationError("Laplacian must be square")
    scale = max(float(np.abs(L).max()), 1.0)
    if not np.allclose(L, L.T, atol=_LAPLACIAN_TOL * scale):
        raise ValidationError("Laplacian must be symmetric")
    if np.any(np.abs(L.sum(axis=1)) > _LAPLACIAN_TOL * scale * L.shape[0]):
        raise ValidationError("Laplacian rows must sum to zero")
    return L


def laplacian_spectrum(L) -> np.ndarray:
    """All eigenvalues, ascending, of a validated Laplacian."""
    return np.linalg.eigvalsh(_check_laplacian(L))


def lambda2(L) -> float:
    """Second-smallest Laplacian eigenvalue (the spectral gap).

    The all-ones eigenvector is deflated explicitly: its eigenvalue is
    pushed above the spectrum before taking the smallest eigenvalue.
    Nonnegative, and zero exactly when the graph is disconnected.
    """
    L = _check_laplacian(L)
    d = L.shape[0]
    if d == 1:
        return 0.0
    shift = float(np.trace(L)) + 1.0
    deflated = L + shift * np.ones((d, d)) / d
    smallest = float(np.linalg.eigvalsh(deflated)[0])
    return max(smallest, 0.0)


def alpha(graph: ComparisonGraph) -> float:
    """Rescaled spectral gap lambda2 * (d - 1) / trace, in [0, 1]."""
    trace = graph.trace
    if trace <= 0:
        raise ValidationError("comparison graph carries no weight")
    return lambda2(graph.laplacian) * (graph.d - 1) / trace


def beta(graph: ComparisonGraph) -> float:
    """Degree balance trace / (d * max degree), in (0, 1]."""
    if graph.max_degree <= 0:
        raise ValidationError("comparison graph carries no weight")
    return graph.trace / (graph.d * graph.max_degree)


def gamma(dataset: BrokenDataset, b: float) -> float:
    """Curvature floor: min over samples of (1 - p_last/kappa)^(ceil(2 e^{2b}) - 2).

    Equal to one when b = 0; decays sharply when the deepest separator
    approaches the bottom of a large offering.
    """
    if not b >= 0:
        raise ValidationError("b must be nonnegative")
    exponent = math.ceil(2.0 * math.exp(2.0 * b)) - 2
    kappas, _, positions, _ = dataset.sample_stats()
    worst = min(1.0 - pos[-1] / kappa for kappa, pos in zip(kappas, positions))
    return float(worst ** exponent)


def eta(dataset: BrokenDataset) -> float:
    """Sample-size inflation: max over samples of kappa / max(ell, kappa - p_last)."""
    kappas, ells, positions, _ = dataset.sample_stats()
    return float(max(
        kappa / max(ell, kappa - pos[-1])
        for kappa, ell, pos in zip(kappas, ells, positions)))


def general_weight_diagnostics(dataset: BrokenDataset):
    """Weight-dependent quantities (tau, delta_j1, delta_j2, delta).

    tau is the worst normalized weight mass per separator; the deltas bound
    the per-sample degree a single response can contribute, which controls
    how concentrated the objective's curvature is.  Under data-driven
    weights tau = 1.
    """
    kappas, ells, positions, lams = dataset.sample_stats()
    taus = _sample_tau(kappas, positions, lams)
    delta_j1 = np.empty(len(kappas))
    delta_j2 = np.empty(len(kappas))
    delta_terms = np.empty(len(kappas))
    for j, (kappa, ell, pos, lam) in enumerate(zip(kappas, ells, positions, lams)):
        mass = lam * (kappa - pos)
        delta_j1[j] = float(mass.max() + lam.sum())
        delta_j2[j] = float(lam.sum())
        eta_j = kappa / max(ell, kappa - pos[-1])
        delta_terms[j] = (4.0 * delta_j1[j] ** 2
                          + 2.0 * (delta_j1[j] * delta_j2[j] + delta_j2[j] ** 2)
                          * kappa / (eta_j * ell))
    return float(taus.min()), delta_j1, delta_j2, float(delta_terms.max())


def chi(kappa: int) -> float:
    """Bottom-prefix curvature constant (1/4)(1 - exp(-2 / (9 (kappa - 2))))."""
    if kappa <= 2:
        raise ValidationError("chi is defined for offerings of size at least 3")
    return 0.25 * (1.0 - math.exp(-2.0 / (9.0 * (kappa - 2))))


@dataclass(frozen=True, eq=False)
class Diagnostics:
    """Everything the error bounds and sample-size conditions consume."""

    alpha: float
    beta: float
    gamma: float
    eta: float
    tau: float
    delta: float
    chi: float
    d_max: float
    ell_max: int
    kappa_max: int
    effective_sample_size: int
    weighted_pair_mass: float = None
    weighted_pair_mass_sq: float = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "eta": self.eta,
            "tau": self.tau,
            "delta": self.delta,
            "chi": self.chi,
            "d_max": self.d_max,
            "ell_max": self.ell_max,
            "kappa_max": self.kappa_max,
            "effective_sample_size": self.effective_sample_size,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def compute_diagnostics(dataset: BrokenDataset, b: float) -> Diagnostics:
    graph = build_comparison_graph(dataset)
    kappas, ells, positions, lams = dataset.sample_stats()
    tau, _, _, delta = general_weight_diagnostics(dataset)
    kappa_max = int(kappas.max())
    mass = sum(float(np.sum(lam * (kappa - pos)))
               for kappa, pos, lam in zip(kappas, positions, lams))
    mass_sq = sum(float(np.sum(lam ** 2 * (kappa - pos) * (kappa - pos + 1)))
                  for kappa, pos, lam in zip(kappas, positions, lams))
    return Diagnostics(
        alpha=alpha(graph),
        beta=beta(graph),
        gamma=gamma(dataset, b),
        eta=eta(dataset),
        tau=tau,
        delta=delta,
        chi=chi(kappa_max) if kappa_max > 2 else math.nan,
        d_max=graph.max_degree,
        ell_max=int(ells.max()),
        kappa_max=kappa_max,
        effective_sample_size=int(ells.sum()),
        weighted_pair_mass=mass,
        weighted_pair_mass_sq=mass_sq,
    )


def sample_complexity_check(diag: Diagnostics, d: int, b: float):
    """Effective sample size required for the error guarantee, and whether met.

    Returns ``(required, satisfied)``.  A disconnected design (alpha = 0)
    is infeasible: required is infinite.
    """
    if diag.alpha <= 0:
        return math.inf, False
    if diag.gamma <= 0 or diag.beta <= 0:
        return math.inf, False
    required = (2.0 ** 11 * math.exp(18.0 * b) * diag.eta
                * math.log(diag.ell_max + 2) ** 2
                / (diag.alpha ** 2 * diag.gamma ** 2 * diag.beta)
                * d * math.log(d))
    return required, diag.effective_sample_size >= required


REGIMES = ("general-optimal", "general-custom", "top-ell", "bottom-ell")


def theoretical_error_bound(diag: Diagnostics, d: int, b: float, regime: str) -> float:
    """Right-hand side of the per-item root-mean-square error guarantee.

    All regimes scale as sqrt(d log d / effective sample size); they differ
    in the prefactor the data topology and weight choice command.
    """
    if regime not in REGIMES:
        raise ValidationError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    size = diag.effective_sample_size
    if size <= 0 or d < 2:
        raise ValidationError("bound needs a nonempty dataset and d >= 2")
    rate = math.sqrt(d * math.log(d) / size)
    if regime == "general-optimal":
        if diag.alpha <= 0 or diag.gamma <= 0:
            raise ValidationError("general-optimal bound needs alpha > 0 and gamma > 0")
        return (4.0 * math.sqrt(2.0) * math.exp(4.0 * b) * (1.0 + math.exp(2.0 * b)) ** 2
                / (diag.alpha * diag.gamma)) * rate
    if regime == "general-custom":
        if diag.weighted_pair_mass is None or diag.weighted_pair_mass_sq is None:
            raise ValidationError("general-custom bound needs the weighted pair masses")
        if diag.alpha <= 0 or diag.gamma <= 0 or diag.weighted_pair_mass <= 0:
            raise ValidationError("general-custom bound needs alpha, gamma, weight mass > 0")
        return (4.0 * math.sqrt(2.0) * math.exp(4.0 * b) * (1.0 + math.exp(2.0 * b)) ** 2
                / (diag.alpha * diag.gamma)
                * math.sqrt(d * math.log(d) * diag.weighted_pair_mass_sq)
                / diag.weighted_pair_mass)
    if regime == "top-ell":
        if diag.alpha <= 0:
            raise ValidationError("top-ell bound needs alpha > 0")
        return 16.0 * (1.0 + math.exp(2.0 * b)) ** 2 / diag.alpha * rate
    # bottom-ell
    if math.isnan(diag.chi) or diag.chi <= 0:
        raise ValidationError("bottom-ell bound needs chi for kappa > 2")
    ratio = diag.kappa_max / diag.ell_max
    return (128.0 * (1.0 + math.exp(4.0 * b)) ** 2 / diag.chi
            * ratio ** 1.5 * rate)


class CramerRaoBound(NamedTuple):
    """Information-theoretic floor on mean squared error for unbiased estimators."""

    value: float
    jensen_floor: float


def cramer_rao_position_p(L, p: int, kappa_max: int) -> CramerRaoBound:
    """Single-separator (position-p) lower bound from the comparison Laplacian.

    ``value`` sums inverse nonzero eigenvalues; ``jensen_floor`` replaces the
    sum by its Jensen lower bound (d-1)^2 / trace, scaled identically.
    """
    if p < 1 or kappa_max < 2:
        raise ValidationError("need p >= 1 and kappa_max >= 2")
    L = _check_laplacian(L)
    d = L.shape[0]
    scale = 1.0 / (2.0 * p * math.log(kappa_max) ** 2)
    eigs = laplacian_spectrum(L)[1:]
    if eigs.size == 0 or eigs.min() <= 0:
        return CramerRaoBound(math.inf, math.inf)
    return CramerRaoBound(scale * float(np.sum(1.0 / eigs)),
                          scale * (d - 1) ** 2 / float(np.trace(L)))


def cramer_rao_topl(L, ell_max: int, kappa_max: int) -> CramerRaoBound:
    """Ranked-prefix lower bound; the multiplier corrects for censoring."""
    if ell_max < 1 or kappa_max < 2 or ell_max > kappa_max - 1:
        raise ValidationError("need 1 <= ell_max <= kappa_max - 1")
    L = _check_laplacian(L)
    d = L.shape[0]
    harmonic = sum(1.0 / (kappa_max - i + 1) for i in range(1, ell_max + 1)) / ell_max
    multiplier = 1.0 / (1.0 - harmonic)
    eigs = laplacian_spectrum(L)[1:]
    if eigs.size == 0 or eigs.min() <= 0:
        return CramerRaoBound(math.inf, math.inf)
    return CramerRaoBound(multiplier * float(np.sum(1.0 / eigs)),
                          (d - 1) ** 2 / float(np.trace(L)))


TOPOLOGY_KINDS = ("complete", "sparse-random", "chain", "star", "barbell")


def generate_topology(kind: str, d: int, kappa: int, n: int, seed,
                      worst_case_b: float = None):
    """Offerings for the five canonical survey designs.

    Returns ``(offerings, theta_star)`` where ``theta_star`` is the
    worst-case utility assignment (items of each constituent set share one
    of two levels, then centered) for the chain and barbell designs when
    ``worst_case_b`` is given, else None.
    """
    if kind not in TOPOLOGY_KINDS:
        raise ValidationError(f"unknown topology {kind!r}; expected one of {TOPOLOGY_KINDS}")
    if kappa > d:
        raise ValidationError("offerings cannot exceed the item count")
    if kappa < 2 or n < 1:
        raise ValidationError("need kappa >= 2 and n >= 1")
    if worst_case_b is not None and kind not in ("chain", "barbell"):
        raise ValidationError("worst-case utilities are defined for chain and barbell designs")
    rng = np.random.default_rng(seed)

    if kind in ("complete", "sparse-random"):
        keys = rng.random((n, d))
        chosen = np.argpartition(keys, kappa - 1, axis=1)[:, :kappa]
        offerings = [Offering(items=tuple(sorted(map(int, row)))) for row in chosen]
        return offerings, None

    if kind == "chain":
        if (d - 1) % (kappa - 1) != 0:
            raise ValidationError(
                f"chain design needs (d - 1) divisible by (kappa - 1); "
                f"d - 1 = {d - 1}, kappa - 1 = {kappa - 1}")
        groups = (d - 1) // (kappa - 1)
        if n % groups != 0:
            raise ValidationError(
                f"chain design needs n divisible by (d - 1)/(kappa - 1) = {groups}")
        sets = [tuple(range(g * (kappa - 1), g * (kappa - 1) + kappa))
                for g in range(groups)]
        offerings = [Offering(items=s) for s in sets for _ in range(n // groups)]
        theta = None
        if worst_case_b is not None:
            # two per-set levels, one half of the chain each: the contrast then
            # rides the slow mode of the weakly connected chain, which is the
            # least damped error direction
            theta = np.zeros(d)
            for g, s in enumerate(sets):
                level = worst_case_b if g >= groups // 2 else 0.0
                for item in s[:-1]:
                    theta[item] = level
            theta[d - 1] = theta[d - 2]
            theta -= theta.mean()
        return offerings, theta

    if kind == "star":
        if (d - 1) % (kappa - 1) != 0:
            raise ValidationError(
                f"star design needs (d - 1) divisible by (kappa - 1); "
                f"d - 1 = {d - 1}, kappa - 1 = {kappa - 1}")
        offerings = []
        for _ in range(n):
            others = rng.choice(np.arange(1, d), size=kappa - 1, replace=False)
            offerings.append(Offering(items=(0,) + tuple(sorted(map(int, others)))))
        return offerings, None

    # barbell: one connector offering per (d/kappa - 1) side offerings
    if d % kappa != 0:
        raise ValidationError(f"barbell design needs d divisible by kappa = {kappa}")
    block = d // kappa
    if n % block != 0:
        raise ValidationError(f"barbell design needs n divisible by d/kappa = {block}")
    if (d - kappa) % 2 != 0:
        raise ValidationError("barbell design needs an even number of non-connector items")
    side_size = (d - kappa) // 2
    if side_size + 1 < kappa:
        raise ValidationError("barbell design needs (d - kappa)/2 + 1 >= kappa")
    connector = sorted(map(int, rng.choice(d, size=kappa, replace=False)))
    bridge_i, bridge_j = connector[0], connector[1]
    rest = [item for item in range(d) if item not in set(connector)]
    side1 = [bridge_i] + rest[:side_size]
    side2 = [bridge_j] + rest[side_size:]
    offerings = []
    for r in range(n // block):
        offerings.append(Offering(items=tuple(connector)))
        for k in range(block - 1):
            side = side1 if (r * (block - 1) + k) % 2 == 0 else side2
            chosen = rng.choice(len(side), size=kappa, replace=False)
            offerings.append(Offering(items=tuple(sorted(side[c] for c in chosen))))
    theta = None
    if worst_case_b is not None:
        theta = np.zeros(d)
        for item in side2[1:]:
            theta[item] = worst_case_b
        half = kappa // 2
        for item in connector[half:]:
            theta[item] = worst_case_b
        theta[bridge_i] = 0.0
        theta[bridge_j] = worst_case_b
        theta -= theta.mean()
    return offerings, theta
