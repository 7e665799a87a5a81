"""Finite-support integer step laws and their admissibility checks.

A step law is a probability vector on a contiguous integer range
[support_min, support_max].  Downstream machinery (exact lattice dynamic
programming, reflection kernels, Monte Carlo) requires a centered,
strongly aperiodic law with at least one negative atom; ``validate``
reports each of those conditions separately instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySupport, MassNotNormalizable, NegativeWeight

MASS_TOL = 1e-9        # construction: how far the raw weights may be from 1
MEAN_TOL = 1e-12       # validation: |mean| above this fails the centering check


@dataclass(frozen=True)
class StepDistribution:
    """Finite-support step law; immutable after construction."""

    support_min: int
    support_max: int
    probs: np.ndarray  # one weight per integer in [support_min, support_max]

    def __post_init__(self):
        self.probs.setflags(write=False)

    def offsets(self) -> np.ndarray:
        return np.arange(self.support_min, self.support_max + 1)

    def atoms(self):
        """Yield (offset, weight) pairs with positive weight."""
        for k, p in zip(self.offsets(), self.probs):
            if p > 0.0:
                yield int(k), float(p)

    def prob(self, offset: int) -> float:
        if offset < self.support_min or offset > self.support_max:
            return 0.0
        return float(self.probs[offset - self.support_min])

    @property
    def max_down_jump(self) -> int:
        """Largest y >= 1 with positive mass at -y; 0 when no negative atom."""
        for k, _ in self.atoms():
            if k < 0:
                return -k
        return 0

    def negative_mass(self) -> float:
        return float(self.probs[: max(0, -self.support_min)].sum())


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    sigma2: float
    neg_moment3: float  # third moment of the negative part max(0, -xi)
    aperiodic: bool

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ValidationCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[ValidationCheck]:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        return "\n".join(lines)


def from_table(atoms) -> StepDistribution:
    """Build a step law from (offset, weight) pairs.

    Weights must be non-negative and sum to 1 within ``MASS_TOL``; they are
    then renormalized exactly.  Duplicate offsets accumulate.  Zero-weight
    edges are trimmed so the stored support bounds are tight.
    """
    atoms = list(atoms)
    if not atoms:
        raise EmptySupport("step table is empty")
    table: dict[int, float] = {}
    for k, w in atoms:
        k = int(k)
        w = float(w)
        if w < 0.0:
            raise NegativeWeight(f"weight {w} at offset {k}")
        table[k] = table.get(k, 0.0) + w
    positive = [k for k, w in table.items() if w > 0.0]
    if not positive:
        raise EmptySupport("all weights are zero")
    total = math.fsum(table.values())
    if abs(total - 1.0) > MASS_TOL:
        raise MassNotNormalizable(f"weights sum to {total!r}, off by more than {MASS_TOL}")
    lo, hi = min(positive), max(positive)
    probs = np.zeros(hi - lo + 1)
    for k, w in table.items():
        if w > 0.0:
            probs[k - lo] = w / total
    return StepDistribution(lo, hi, probs)


def mirrored(d: StepDistribution) -> StepDistribution:
    """The law of -xi; used for ascending-ladder quantities."""
    return StepDistribution(-d.support_max, -d.support_min, np.ascontiguousarray(d.probs[::-1]))


def _support_gcd(d: StepDistribution) -> int:
    """gcd of pairwise differences of positive-mass support points."""
    pts = [k for k, _ in d.atoms()]
    g = 0
    for k in pts[1:]:
        g = math.gcd(g, k - pts[0])
    return g


def moments(d: StepDistribution) -> MomentSummary:
    """Exact moments as finite sums over the support.

    ``sigma2`` is the variance (equals the raw second moment for centered
    laws).  Strong aperiodicity is the difference-gcd criterion: the support
    lies in no coset of a proper subgroup of the integers iff the gcd of
    pairwise differences of its points is 1.
    """
    ks = d.offsets().astype(float)
    mean = float(np.dot(ks, d.probs))
    sigma2 = float(np.dot((ks - mean) ** 2, d.probs))
    neg = np.maximum(0.0, -ks)
    neg3 = float(np.dot(neg**3, d.probs))
    return MomentSummary(mean=mean, sigma2=sigma2, neg_moment3=neg3, aperiodic=_support_gcd(d) == 1)


def validate(d: StepDistribution) -> ValidationReport:
    """Admissibility report: moments, centering, strong aperiodicity, reflection.

    Failures are report entries, never exceptions.
    """
    m = moments(d)
    has_neg = d.max_down_jump > 0
    checks = (
        ValidationCheck(
            "A1-moments", True,
            f"finite support [{d.support_min},{d.support_max}]; sigma2={m.sigma2:.12g}, "
            f"E[(xi^-)^3]={m.neg_moment3:.12g} (automatically finite)"),
        ValidationCheck("A2-centered", abs(m.mean) <= MEAN_TOL, f"mean={m.mean:.3e}"),
        ValidationCheck("A3-aperiodic", m.aperiodic, f"support difference gcd={_support_gcd(d)}"),
        ValidationCheck("has-negative-atom", has_neg,
                        f"mass below zero={d.negative_mass():.12g}"),
    )
    return ValidationReport(checks)


def parse_distribution_text(text: str) -> StepDistribution:
    """Parse "offset weight" lines; '#' starts a comment."""
    atoms = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MassNotNormalizable(f"line {ln}: expected 'offset weight', got {raw!r}")
        try:
            atoms.append((int(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise MassNotNormalizable(f"line {ln}: {exc}") from exc
    return from_table(atoms)


def load_distribution(path) -> StepDistribution:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_distribution_text(fh.read())


def lazy_walk() -> StepDistribution:
    """Reference symmetric walk: steps -1, 0, +1 with weights 1/4, 1/2, 1/4."""
    return from_table([(-1, 0.25), (0, 0.5), (1, 0.25)])


def skew_walk() -> StepDistribution:
    """Reference asymmetric walk: steps -2, 0, +1 with weights 0.2, 0.4, 0.4."""
    return from_table([(-2, 0.2), (0, 0.4), (1, 0.4)])
