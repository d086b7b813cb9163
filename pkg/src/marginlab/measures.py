"""Hard one-dimensional mixture measures and their pullbacks to S^{d-1}.

The mixture has four roles: a clean two-atom pair at +/-gamma (majority
weight theta on the positive atom), a flipped atom at (-gamma, +1), an
arcsine noise band on [-1/8, 1/8] with uniform labels, and an optional
finitely supported noise measure on explicit sphere points.  The pullback
lifts the 1-D coordinate t to x = t e + sqrt(1-t^2) z with z uniform on the
sphere orthogonal to the direction e.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .orthopoly import BAND_HALF_WIDTH
from .sphere import RngStream, sample_band

WEIGHT_TOL = 1e-12


class SpecError(ValueError):
    pass


class DegenerateLossError(ValueError):
    """No grid triple satisfies the theta inequality for this loss."""


@dataclass(frozen=True)
class LabeledPoint:
    x: np.ndarray
    y: int

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.y not in (-1, 1):
            raise SpecError(f"label must be +/-1, got {self.y}")


@dataclass
class AdversarialSpec:
    """Full recipe for one hard distribution on S^{d-1} x {+/-1}."""

    d: int
    gamma: float
    theta: float
    lambda2: float = 0.0
    lambda3: float = 0.0
    lambdaN: float = 0.0
    e: np.ndarray | None = None
    noise_atoms: object | None = None  # WeightedAtomMeasure, needed iff lambdaN > 0
    boundary_counts: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < BAND_HALF_WIDTH:
            raise SpecError(f"gamma must be in (0, 1/8), got {self.gamma}")
        if not 0.0 < self.theta < 1.0:
            raise SpecError(f"theta must be in (0, 1), got {self.theta}")
        lams = (self.lambda2, self.lambda3, self.lambdaN)
        if any(l < 0 for l in lams) or sum(lams) >= 1.0:
            raise SpecError("mixture weights must be >= 0 and sum to < 1")
        if self.e is None:
            e = np.zeros(self.d)
            e[0] = 1.0
            self.e = e
        else:
            self.e = np.asarray(self.e, dtype=float)
            if len(self.e) != self.d:
                raise SpecError("direction dimension mismatch")
            if abs(np.linalg.norm(self.e) - 1.0) > 1e-9:
                raise SpecError("direction must be a unit vector")
        if self.lambdaN > 0 and self.noise_atoms is None:
            raise SpecError("lambdaN > 0 requires noise_atoms")

    @property
    def clean_weight(self) -> float:
        return 1.0 - self.lambda2 - self.lambda3 - self.lambdaN

    def to_json(self) -> str:
        doc = {
            "d": self.d,
            "gamma": self.gamma,
            "theta": self.theta,
            "lambda2": self.lambda2,
            "lambda3": self.lambda3,
            "lambdaN": self.lambdaN,
            "e": self.e.tolist(),
            "boundary_counts": self.boundary_counts,
            "seed": self.seed,
        }
        if self.noise_atoms is not None:
            doc["noise_atoms"] = [
                [list(map(float, p)), int(y), float(w)]
                for p, y, w in self.noise_atoms.atoms
            ]
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AdversarialSpec":
        doc = json.loads(text)
        atoms = None
        if "noise_atoms" in doc:
            from .geometry import WeightedAtomMeasure

            atoms = WeightedAtomMeasure(
                [(np.asarray(p), int(y), float(w)) for p, y, w in doc["noise_atoms"]]
            )
        return cls(
            d=int(doc["d"]),
            gamma=float(doc["gamma"]),
            theta=float(doc["theta"]),
            lambda2=float(doc.get("lambda2", 0.0)),
            lambda3=float(doc.get("lambda3", 0.0)),
            lambdaN=float(doc.get("lambdaN", 0.0)),
            e=np.asarray(doc["e"]) if doc.get("e") is not None else None,
            noise_atoms=atoms,
            boundary_counts=bool(doc.get("boundary_counts", False)),
            seed=int(doc.get("seed", 0)),
        )


def arcsine_density(t: float) -> float:
    """Density 8 / (pi sqrt(1 - (8t)^2)) on [-1/8, 1/8], 0 outside."""
    a = abs(t)
    if a > BAND_HALF_WIDTH:
        return 0.0
    if a == BAND_HALF_WIDTH:
        return math.inf
    return 8.0 / (math.pi * math.sqrt(1.0 - (8.0 * t) ** 2))


def sample_arcsine_t(rng: RngStream) -> float:
    """Draw t from the arcsine band measure on [-1/8, 1/8]."""
    u = rng.gen.uniform(-math.pi / 2, math.pi / 2)
    return math.sin(u) * BAND_HALF_WIDTH


def sample_labeled(spec: AdversarialSpec, rng: RngStream) -> LabeledPoint:
    """One draw from the pullback distribution of the mixture."""
    g = rng.gen
    u = g.uniform()
    c1 = spec.clean_weight
    if u < c1:
        if g.uniform() < spec.theta:
            t, y = spec.gamma, 1
        else:
            t, y = -spec.gamma, -1
    elif u < c1 + spec.lambda2:
        t, y = -spec.gamma, 1
    elif u < c1 + spec.lambda2 + spec.lambda3:
        t = sample_arcsine_t(rng)
        y = 1 if g.uniform() < 0.5 else -1
    else:
        atoms = spec.noise_atoms.atoms
        weights = np.array([w for _, _, w in atoms])
        idx = g.choice(len(atoms), p=weights / weights.sum())
        p, y, _ = atoms[idx]
        return LabeledPoint(np.asarray(p, dtype=float), int(y))
    x = sample_band(spec.e, t, rng)
    return LabeledPoint(x, y)


def sample_dataset(spec: AdversarialSpec, n: int, rng: RngStream) -> list[LabeledPoint]:
    return [sample_labeled(spec, rng) for _ in range(n)]


def certified_margin_bound(spec: AdversarialSpec) -> float:
    """Analytic upper bound on the gamma-margin error of the mixture.

    Witnessed by the reference halfspace through the origin with normal e.
    Valid under the strict boundary convention (error iff y*t < gamma); with
    boundary_counts the clean atoms at exactly +/-gamma are also inside the
    margin, which adds the clean mass and voids the certificate.
    """
    band_mass = 0.5 + math.asin(8.0 * spec.gamma) / math.pi
    bound = spec.lambda2 + spec.lambda3 * band_mass
    if spec.lambdaN > 0:
        mass = 0.0
        for p, y, w in spec.noise_atoms.atoms:
            t = float(np.dot(p, spec.e))
            inside = y * t <= spec.gamma if spec.boundary_counts else y * t < spec.gamma
            if inside:
                mass += w
        bound += spec.lambdaN * mass
    if spec.boundary_counts:
        import warnings

        warnings.warn(
            "boundary_counts adds the clean-atom mass; the certificate "
            "requires the strict convention",
            stacklevel=2,
        )
        bound += spec.clean_weight
    return bound


def empirical_margin_error(
    data: list[LabeledPoint],
    w: np.ndarray,
    b: float,
    gamma: float,
    boundary_counts: bool = False,
) -> float:
    """Fraction of samples with y(<w,x> + b) < gamma (or <= with the flag)."""
    if not data:
        raise SpecError("empty dataset")
    w = np.asarray(w, dtype=float)
    scores = np.array([p.y * (np.dot(w, p.x) + b) for p in data])
    if boundary_counts:
        return float(np.mean(scores <= gamma))
    return float(np.mean(scores < gamma))


def choose_theta(loss, slack: float = 1e-6):
    """Find (alpha, beta, theta) with the strict mixture inequality
    (1-theta) l(-beta) + theta l(beta) < theta l(alpha) by coarse grid search.
    """
    if loss.d_plus_at_0 >= 0:
        raise DegenerateLossError("loss must be strictly decreasing at 0")
    thetas = [round(0.7 + 0.01 * k, 2) for k in range(30)]
    for theta in thetas:
        for alpha in (0.25, 0.5):
            for beta in (1.0, 2.0):
                la, lb, lnb = loss.value(alpha), loss.value(beta), loss.value(-beta)
                if la <= lb:
                    continue
                if (1 - theta) * lnb + theta * lb < theta * la - slack:
                    return alpha, beta, theta
    raise DegenerateLossError("no grid triple satisfies the theta inequality")
