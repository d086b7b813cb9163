"""Surrogate losses, the norm-constrained kernel program and the
finite-dimensional program as empirical solvers, evaluation metrics, and a
brute-force 1-D oracle.

Both trainers run projected subgradient with iterate averaging.  On top of the
base schedule eta_t = R / (Lhat sqrt(t)) they restart with a geometrically
shrinking radius around the incumbent, which recovers high accuracy on the
piecewise-linear objectives used here; the reported gap certificate comes from
the standard averaged-subgradient bound of the final stage.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import KernelSpec, cross_gram, gram
from .measures import LabeledPoint

GRAM_JITTER = 1e-10
NORM_SLACK = 1e-9


class LossError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, model=None):
        super().__init__(msg)
        self.model = model


@dataclass(frozen=True)
class SurrogateLoss:
    """Convex loss bounded below by the 0-1 loss.

    value/subgradient are vectorized; subgradient returns the right derivative
    at kinks.  lipschitz is math.inf for unbounded-slope losses.
    """

    name: str
    value: object
    subgradient: object
    d_plus_at_0: float
    lipschitz: float

    @property
    def at_zero(self) -> float:
        return float(self.value(np.asarray(0.0)))


def make_loss(name: str, gamma: float | None = None, C: float | None = None) -> SurrogateLoss:
    """Shipped losses: hinge, squared, absolute, logistic, margin_loss(gamma, C),
    truncated_margin(gamma, C)."""
    if name == "hinge":
        return SurrogateLoss(
            "hinge",
            lambda x: np.maximum(1.0 - x, 0.0),
            lambda x: np.where(x < 1.0, -1.0, 0.0),
            d_plus_at_0=-1.0,
            lipschitz=1.0,
        )
    if name == "squared":
        return SurrogateLoss(
            "squared",
            lambda x: (1.0 - x) ** 2,
            lambda x: -2.0 * (1.0 - x),
            d_plus_at_0=-2.0,
            lipschitz=math.inf,
        )
    if name == "absolute":
        return SurrogateLoss(
            "absolute",
            lambda x: np.abs(1.0 - x),
            lambda x: np.where(x < 1.0, -1.0, 1.0),
            d_plus_at_0=-1.0,
            lipschitz=1.0,
        )
    if name == "logistic":
        ln2 = math.log(2.0)
        return SurrogateLoss(
            "logistic",
            lambda x: np.log1p(np.exp(-x)) / ln2,
            lambda x: -1.0 / ((1.0 + np.exp(x)) * ln2),
            d_plus_at_0=-1.0 / (2.0 * ln2),
            lipschitz=1.0 / ln2,
        )
    if name in ("margin_loss", "truncated_margin"):
        if C is None or C <= 0:
            raise LossError(f"{name} needs a scale constant C > 0")
        knee = 1.0 / C
        if name == "margin_loss":
            # 1 - x below the knee, flat at 1 - 1/C above it
            return SurrogateLoss(
                f"margin_loss(C={C:g})",
                lambda x: np.where(x <= knee, 1.0 - x, 1.0 - knee),
                lambda x: np.where(x < knee, -1.0, 0.0),
                d_plus_at_0=-1.0,
                lipschitz=1.0,
            )
        # truncated_margin: (1 - C x)_+ = hinge(C x)
        return SurrogateLoss(
            f"truncated_margin(C={C:g})",
            lambda x: np.maximum(1.0 - C * x, 0.0),
            lambda x: np.where(x < knee, -C, 0.0),
            d_plus_at_0=-C,
            lipschitz=C,
        )
    raise LossError(f"unknown loss {name!r}")


# ---------------------------------------------------------------------------
# Models.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class L2Ball:
    radius: float


@dataclass(frozen=True)
class L1Ball:
    radius: float


@dataclass
class SolverOptions:
    max_iters: int = 2000
    n_restarts: int = 10
    eps_opt: float = 0.1
    bias_box: float = 10.0
    seed: int = 0
    strict: bool = False


@dataclass
class KernelModel:
    support: np.ndarray
    alpha: np.ndarray
    b: float
    C: float
    kernel: KernelSpec
    loss: SurrogateLoss
    objective: float = math.nan
    gap_certificate: float = math.nan
    converged: bool = True
    _gram: np.ndarray | None = field(default=None, repr=False)

    @property
    def norm(self) -> float:
        G = self._gram if self._gram is not None else gram(
            self.kernel, self.support, check_psd=False
        )
        return math.sqrt(max(float(self.alpha @ G @ self.alpha), 0.0))

    def decision_function(self, X: np.ndarray, block: int = 2048) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(len(X))
        for lo in range(0, len(X), block):
            hi = min(lo + block, len(X))
            out[lo:hi] = cross_gram(self.kernel, X[lo:hi], self.support) @ self.alpha
        return out + self.b

    def to_json(self) -> str:
        return json.dumps(
            {
                "kernel": self.kernel.name,
                "kernel_params": {
                    k: v for k, v in self.kernel.params.items()
                    if isinstance(v, (int, float, str))
                },
                "loss": self.loss.name,
                "support": self.support.tolist(),
                "alpha": self.alpha.tolist(),
                "b": self.b,
                "C": self.C,
                "objective": self.objective,
                "gap_certificate": self.gap_certificate,
                "converged": self.converged,
            },
            sort_keys=True,
        )


@dataclass
class FiniteDimModel:
    w: np.ndarray
    b: float
    constraint: L2Ball | L1Ball
    feature_map: object
    loss: SurrogateLoss
    objective: float = math.nan
    gap_certificate: float = math.nan
    converged: bool = True

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.feature_map(X) @ self.w + self.b


# ---------------------------------------------------------------------------
# Projected subgradient core.
# ---------------------------------------------------------------------------

def _as_arrays(data):
    if isinstance(data, tuple):
        X, y = data[0], data[1]
        wts = data[2] if len(data) > 2 else None
    else:
        X = np.array([p.x for p in data])
        y = np.array([p.y for p in data], dtype=float)
        wts = None
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if wts is None:
        wts = np.full(len(y), 1.0 / len(y))
    else:
        wts = np.asarray(wts, dtype=float)
        wts = wts / wts.sum()
    return X, y, wts


def project_l1(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the L1 ball (sorted simplex projection)."""
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, len(u) + 1) > css - radius)[0][-1]
    tau = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - tau, 0.0)


def _subgradient_solve(objective, subgrad, project, z0, radius, lip_bound, opts):
    """Shared projected-subgradient loop with step-size annealing restarts.

    objective(z) -> float; subgrad(z) -> (g, gnorm) with gnorm measured in the
    geometry the projection works in; project(z) -> z.  Restart k reruns the
    schedule eta_t = (R / 2^k) / (Lhat sqrt(t)) from the incumbent, which
    polishes the piecewise-linear objectives used here.  The gap certificate
    is the standard averaged-iterate bound of the first stage only (the later
    stages are heuristic step shrinking).
    Returns (best z, best objective, gap certificate).
    """
    z = project(z0.copy())
    best_z, best_f = z.copy(), objective(z)
    cert = math.inf
    for stage in range(max(opts.n_restarts, 1)):
        R = radius / 2**stage
        z = best_z.copy()
        avg = np.zeros_like(z)
        sum_eta = 0.0
        sum_eta2_g2 = 0.0
        lhat = max(lip_bound, 1e-12)
        for t in range(1, opts.max_iters + 1):
            g, gnorm = subgrad(z)
            lhat = max(lhat, gnorm)
            eta = R / (lhat * math.sqrt(t))
            z = project(z - eta * g)
            sum_eta += eta
            sum_eta2_g2 += eta * eta * gnorm * gnorm
            avg += eta * z
            f = objective(z)
            if f < best_f:
                best_f, best_z = f, z.copy()
        z_avg = project(avg / sum_eta)
        f_avg = objective(z_avg)
        if f_avg < best_f:
            best_f, best_z = f_avg, z_avg
        if stage == 0:
            cert = (radius * radius + sum_eta2_g2) / (2.0 * sum_eta)
    return best_z, best_f, cert


def train_kernel_program(data, kernel: KernelSpec, loss: SurrogateLoss, C: float,
                         opts: SolverOptions = SolverOptions()):
    """Approximately solve  min mean l(y (f(x) + b))  over ||f||_{H_k} <= C.

    Restricting f to span{k(., x_i)} is lossless (it preserves sample
    predictions and never increases the norm), so the search runs over dual
    coefficients alpha with the ellipsoidal projection
    alpha <- alpha * min(1, C / sqrt(alpha' G alpha)).
    """
    if C < 0:
        raise LossError("norm bound must be >= 0")
    X, y, wts = _as_arrays(data)
    n = len(y)
    G = gram(kernel, X, check_psd=False)
    eig_floor = float(np.min(np.diag(G)))
    if eig_floor < -1e-8 * n:
        raise LossError("Gram diagonal negative beyond tolerance: invalid kernel")
    G[np.diag_indices_from(G)] += GRAM_JITTER
    bias_box = opts.bias_box

    def split(z):
        return z[:n], z[n]

    def objective(z):
        alpha, b = split(z)
        return float(wts @ loss.value(y * (G @ alpha + b)))

    def subgrad(z):
        alpha, b = split(z)
        u = wts * y * loss.subgradient(y * (G @ alpha + b))
        g = np.empty(n + 1)
        g[:n] = u
        g[n] = u.sum()
        # norm in the geometry the update lives in: RKHS norm of the
        # functional part sum u_i k(., x_i) plus the bias coordinate
        gnorm = math.hypot(math.sqrt(max(float(u @ G @ u), 0.0)), g[n])
        return g, gnorm

    def project(z):
        alpha, b = split(z)
        q = float(alpha @ G @ alpha)
        if q > C * C:
            alpha = alpha * (C / math.sqrt(q))
        z = np.append(alpha, np.clip(b, -bias_box, bias_box))
        return z

    lip = loss.lipschitz if math.isfinite(loss.lipschitz) else 1.0
    z0 = np.zeros(n + 1)
    radius = 2.0 * C + 2.0 * bias_box
    z, f_best, cert = _subgradient_solve(objective, subgrad, project, z0,
                                         radius, lip, opts)
    alpha, b = split(z)
    model = KernelModel(
        support=X, alpha=alpha, b=float(b), C=C, kernel=kernel, loss=loss,
        objective=f_best, gap_certificate=cert,
        converged=cert <= opts.eps_opt, _gram=G,
    )
    if opts.strict and not model.converged:
        raise NonConvergenceError(
            f"certified gap {cert:.3e} > eps_opt {opts.eps_opt:.3e} "
            f"after {opts.max_iters} iters",
            model=model,
        )
    return model


def train_finite_program(data, feature_map, constraint, loss: SurrogateLoss,
                         opts: SolverOptions = SolverOptions()):
    """Approximately solve  min mean l(y (<w, psi(x)> + b))  over w in the
    constraint set (L2 or L1 ball) and free bias."""
    X, y, wts = _as_arrays(data)
    F = np.atleast_2d(np.asarray(feature_map(X), dtype=float))
    m = F.shape[1]
    R_w = constraint.radius
    feat_bound = float(np.max(np.linalg.norm(F, axis=1))) if len(F) else 1.0
    bias_box = opts.bias_box

    def split(z):
        return z[:m], z[m]

    def objective(z):
        w, b = split(z)
        return float(wts @ loss.value(y * (F @ w + b)))

    def subgrad(z):
        w, b = split(z)
        u = wts * y * loss.subgradient(y * (F @ w + b))
        g = np.empty(m + 1)
        g[:m] = F.T @ u
        g[m] = u.sum()
        return g, float(np.linalg.norm(g))

    def project(z):
        w, b = split(z)
        if isinstance(constraint, L2Ball):
            nw = np.linalg.norm(w)
            if nw > R_w:
                w = w * (R_w / max(nw, 1e-300))
        else:
            w = project_l1(w, R_w)
        return np.append(w, np.clip(b, -bias_box, bias_box))

    lip = loss.lipschitz if math.isfinite(loss.lipschitz) else 1.0
    z0 = np.zeros(m + 1)
    radius = 2.0 * R_w * max(feat_bound, 1.0) + 2.0 * bias_box
    z, f_best, cert = _subgradient_solve(objective, subgrad, project, z0,
                                         radius, lip, opts)
    w, b = split(z)
    model = FiniteDimModel(
        w=w, b=float(b), constraint=constraint, feature_map=feature_map,
        loss=loss, objective=f_best, gap_certificate=cert,
        converged=cert <= opts.eps_opt,
    )
    if opts.strict and not model.converged:
        raise NonConvergenceError(
            f"certified gap {cert:.3e} > eps_opt {opts.eps_opt:.3e}", model=model
        )
    return model


# ---------------------------------------------------------------------------
# Metrics and oracles.
# ---------------------------------------------------------------------------

def evaluate(model, data, gamma: float, boundary_counts: bool = False):
    """(err01, err_margin, err_surrogate) of the model's score function."""
    if isinstance(data, tuple):
        X, y = np.atleast_2d(np.asarray(data[0], float)), np.asarray(data[1], float)
    else:
        X = np.array([p.x for p in data])
        y = np.array([p.y for p in data], dtype=float)
    if len(y) == 0:
        raise LossError("empty dataset")
    margins = y * model.decision_function(X)
    err01 = float(np.mean(margins <= 0.0))
    if boundary_counts:
        err_margin = float(np.mean(margins <= gamma))
    else:
        err_margin = float(np.mean(margins < gamma))
    err_surrogate = float(np.mean(model.loss.value(margins)))
    return err01, err_margin, err_surrogate


def brute_force_1d(atoms, loss: SurrogateLoss, C: float,
                   n_slope: int = 2001, n_bias: int = 4001) -> float:
    """Dense grid search over slope in [-C, C] and bias in [-2C, 2C] for the
    weighted 1-D objective sum_i w_i l(y_i (slope t_i + bias)), refined once
    around the incumbent.  Ties break toward smallest |slope|, then |bias|.
    """
    if len(atoms) > 10:
        raise LossError("oracle restricted to <= 10 atoms")
    t = np.array([a[0] for a in atoms])
    y = np.array([a[1] for a in atoms], dtype=float)
    w = np.array([a[2] for a in atoms], dtype=float)
    w = w / w.sum()
    bias_half = max(2.0 * C, 1.0)

    def search(slopes, biases):
        best = (math.inf, math.inf, math.inf)  # (obj, |slope|, |bias|)
        best_sb = (0.0, 0.0)
        for s in slopes:
            scores = y[None, :] * (s * t[None, :] + biases[:, None])
            objs = loss.value(scores) @ w
            j = int(np.lexsort((np.abs(biases), objs))[0])
            key = (round(float(objs[j]), 15), abs(s), abs(biases[j]))
            if key < best:
                best = key
                best_sb = (s, float(biases[j]))
        return best_sb, best[0]

    slopes = np.linspace(-C, C, n_slope) if C > 0 else np.array([0.0])
    biases = np.linspace(-bias_half, bias_half, n_bias)
    (s0, b0), _ = search(slopes, biases)
    ds = (slopes[1] - slopes[0]) if len(slopes) > 1 else 0.0
    db = biases[1] - biases[0]
    fine_s = (np.clip(np.linspace(s0 - ds, s0 + ds, n_slope), -C, C)
              if C > 0 else np.array([0.0]))
    fine_b = np.linspace(b0 - db, b0 + db, n_bias)
    _, obj = search(fine_s, fine_b)
    return obj
