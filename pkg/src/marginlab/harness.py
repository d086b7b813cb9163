"""Experiment orchestration: gap experiments, integrality reports, sweeps over
configurations, and the lemma verification suites behind `mgl verify`.

Everything here is deterministic given the config: per-(config, seed) random
streams are derived from the seed alone, so sweeps are byte-identical across
worker counts.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy

from . import geometry, kernels, learners, lemma_lab, measures, orthopoly, sphere
from .measures import AdversarialSpec
from .sphere import RngStream

SWEEP_COLUMNS = [
    "config_id", "seed", "gamma", "d", "kernel", "C", "loss",
    "lambda2", "lambda3", "lambdaN", "n_train",
    "err01", "err_margin_certified", "err_margin_empirical", "err_surrogate",
    "ratio", "band_gap", "band_bound", "solver_gap", "error",
]


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    d: int = 25
    gamma: float = 0.01
    theta: float = 0.7
    lambda2: float = 0.0
    lambda3: float = 0.0
    lambdaN: float = 0.0
    kernel: str = "linear"
    kernel_params: dict = field(default_factory=dict)
    loss: str = "hinge"
    C: float = 5.0
    n_train: int = 1000
    n_test: int = 5000
    n_seeds: int = 1
    seed: int = 0
    max_iters: int = 150
    n_restarts: int = 4
    eps_opt: float | None = None
    n_mc: int = 256
    boundary_counts: bool = False
    noise_atoms_csv: str | None = None

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise UsageError("n_train and n_test must be >= 1")
        if self.n_seeds < 1:
            raise UsageError("n_seeds must be >= 1")
        if self.eps_opt is None:
            self.eps_opt = math.sqrt(self.gamma)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]

    def make_spec(self) -> AdversarialSpec:
        atoms = None
        if self.lambdaN > 0:
            if self.noise_atoms_csv is None:
                raise UsageError("lambdaN > 0 requires noise_atoms_csv")
            atoms = geometry.WeightedAtomMeasure.from_csv(self.noise_atoms_csv)
        return AdversarialSpec(
            d=self.d, gamma=self.gamma, theta=self.theta,
            lambda2=self.lambda2, lambda3=self.lambda3, lambdaN=self.lambdaN,
            noise_atoms=atoms, boundary_counts=self.boundary_counts,
            seed=self.seed,
        )

    def make_kernel(self) -> kernels.KernelSpec:
        return kernels.standard_kernel(self.kernel, **self.kernel_params)

    def make_loss(self) -> learners.SurrogateLoss:
        if self.loss in ("margin_loss", "truncated_margin"):
            return learners.make_loss(self.loss, gamma=self.gamma, C=self.C)
        return learners.make_loss(self.loss)

    def solver_opts(self) -> learners.SolverOptions:
        return learners.SolverOptions(
            max_iters=self.max_iters, n_restarts=self.n_restarts,
            eps_opt=self.eps_opt,
        )

    @property
    def band_cutoff(self) -> int:
        return max(1, math.ceil(math.log(max(self.C, 1.001))))


@dataclass
class ExperimentReport:
    config_hash: str
    versions: dict
    rows: list

    def to_json(self) -> str:
        return json.dumps(
            {"config_hash": self.config_hash, "versions": self.versions,
             "rows": self.rows},
            sort_keys=True,
        )


def _versions() -> dict:
    from . import __version__

    return {"marginlab": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__}


def _blank_row(config: ExperimentConfig, config_id, seed) -> dict:
    row = {c: float("nan") for c in SWEEP_COLUMNS}
    row.update(
        config_id=config_id, seed=seed, gamma=config.gamma, d=config.d,
        kernel=config.kernel, C=config.C, loss=config.loss,
        lambda2=config.lambda2, lambda3=config.lambda3, lambdaN=config.lambdaN,
        n_train=config.n_train, error="",
    )
    return row


def run_single(config: ExperimentConfig, seed: int, config_id: int = 0) -> dict:
    """One (config, seed) trial: sample, train, evaluate, band-check."""
    row = _blank_row(config, config_id, seed)
    try:
        spec = config.make_spec()
        kernel = config.make_kernel()
        loss = config.make_loss()
        base = RngStream(seed, 0)
        train = measures.sample_dataset(spec, config.n_train, base.child(1))
        test = measures.sample_dataset(spec, config.n_test, base.child(2))
        model = learners.train_kernel_program(
            train, kernel, loss, config.C, config.solver_opts()
        )
        err01, err_margin, err_surr = learners.evaluate(
            model, test, config.gamma, config.boundary_counts
        )
        certified = measures.certified_margin_bound(spec)
        ratio = err01 / certified if certified > 0 else float("inf")
        row.update(
            err01=err01, err_margin_certified=certified,
            err_margin_empirical=err_margin, err_surrogate=err_surr,
            ratio=ratio, solver_gap=model.gap_certificate,
        )
        try:
            report = lemma_lab.check_band_gap(
                model, spec.e, config.gamma, config.band_cutoff,
                n_mc=config.n_mc, rng=base.child(3),
            )
            row.update(band_gap=report.gap, band_bound=report.bound)
        except lemma_lab.GapViolationError as exc:
            row["error"] = f"band: {exc}"
    except Exception as exc:  # seed-level failures never abort a sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_gap_experiment(config: ExperimentConfig) -> ExperimentReport:
    rows = [run_single(config, config.seed + i) for i in range(config.n_seeds)]
    return ExperimentReport(config.config_hash, _versions(), rows)


def run_integrality_report(config: ExperimentConfig) -> ExperimentReport:
    """Trained surrogate optimum over the certified margin bound: an empirical
    lower bound on the surrogate program's integrality gap at this instance."""
    rows = []
    for i in range(config.n_seeds):
        seed = config.seed + i
        row = {"seed": seed, "surrogate_optimum": float("nan"),
               "err_margin_certified": float("nan"),
               "gap_ratio": float("nan"), "error": ""}
        try:
            spec = config.make_spec()
            base = RngStream(seed, 0)
            train = measures.sample_dataset(spec, config.n_train, base.child(1))
            model = learners.train_kernel_program(
                train, config.make_kernel(), config.make_loss(), config.C,
                config.solver_opts(),
            )
            certified = measures.certified_margin_bound(spec)
            opt = model.objective
            row.update(
                surrogate_optimum=opt, err_margin_certified=certified,
                gap_ratio=opt / certified if certified > 0 else float("inf"),
            )
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return ExperimentReport(config.config_hash, _versions(), rows)


def sweep(configs: list, threads: int = 1) -> list:
    """One row per (config, seed), ordered by (config index, seed)."""
    if not configs:
        raise UsageError("sweep needs at least one config")
    tasks = [
        (ci, cfg, cfg.seed + si)
        for ci, cfg in enumerate(configs)
        for si in range(cfg.n_seeds)
    ]
    if threads <= 1:
        return [run_single(cfg, seed, ci) for ci, cfg, seed in tasks]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_single, cfg, seed, ci)
                   for ci, cfg, seed in tasks]
        return [f.result() for f in futures]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def sweep_to_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Lemma verification suites.
# ---------------------------------------------------------------------------

def _suite_orthopoly() -> list:
    checks = []
    grid = np.linspace(-1.0, 1.0, 401)
    for d in (3, 5, 8, 12):
        table = orthopoly.legendre_table(d, 40, grid)
        sup = float(np.max(np.abs(table)))
        at1 = orthopoly.legendre_table(d, 40, np.array(1.0))
        checks.append((f"legendre_sup_norm_d{d}", sup <= 1.0 + 1e-9,
                       {"sup": sup}))
        dev1 = float(np.max(np.abs(at1 - 1.0)))
        checks.append((f"legendre_at_one_d{d}", dev1 <= 1e-9, {"dev": dev1}))
    inner = np.linspace(-0.99, 0.99, 101)
    worst = 0.0
    for d in (5, 8, 12):
        table = orthopoly.legendre_table(d, 40, inner)
        for n in range(1, 41):
            for ti, t in enumerate(inner):
                b = orthopoly.legendre_bound(d, n, float(t))
                worst = max(worst, abs(table[n, ti]) - b)
    checks.append(("legendre_pointwise_bound", worst <= 1e-9, {"excess": worst}))
    band = np.linspace(-0.125, 0.125, 101)
    worst_tail = -math.inf
    for d in (5, 8, 12):
        table = np.abs(orthopoly.legendre_table(d, 200, band))
        for K in (5, 10, 20):
            tail = float(np.max(table[K:].sum(axis=0)))
            worst_tail = max(worst_tail,
                             tail - orthopoly.legendre_tail_bound(K, d))
    checks.append(("legendre_tail_bound", worst_tail <= 1e-9,
                   {"excess": worst_tail}))
    # Chebyshev: T_n' = n U_{n-1} by central differences, sup U_n = n+1
    h = 1e-6
    ts = np.linspace(-0.9, 0.9, 50)
    rel = 0.0
    for n in range(1, 21):
        tp = (orthopoly.chebyshev_eval("first", n, ts + h)
              - orthopoly.chebyshev_eval("first", n, ts - h)) / (2 * h)
        un = n * orthopoly.chebyshev_eval("second", n - 1, ts)
        rel = max(rel, float(np.max(np.abs(tp - un) / (1.0 + np.abs(un)))))
    checks.append(("chebyshev_derivative_identity", rel <= 1e-5, {"rel": rel}))
    sup_dev = 0.0
    for n in range(0, 21):
        u = orthopoly.chebyshev_eval("second", n, grid)
        sup_dev = max(sup_dev, abs(float(np.max(np.abs(u))) - (n + 1)))
    checks.append(("chebyshev_second_sup", sup_dev <= 1e-9, {"dev": sup_dev}))
    # L1-L2 inequality for arcsine orthonormal polynomials
    rng = np.random.default_rng(1234)
    nodes, wts = orthopoly.gauss_chebyshev_nodes(256)
    worst_l12 = -math.inf
    for _ in range(500):
        K = int(rng.integers(1, 30))
        alpha = rng.standard_normal(K) * 10 ** rng.uniform(-2, 2)
        vals = sum(a * orthopoly.arcsine_orthopoly_eval(n, nodes)
                   for n, a in enumerate(alpha))
        l1 = float(np.sum(wts * np.abs(vals)))
        l2 = float(np.sqrt(np.sum(wts * vals**2)))
        pmax = 1.0 if K == 1 else math.sqrt(2.0)
        worst_l12 = max(worst_l12, l2 - math.sqrt(K) * l1 * pmax - 1e-9 * l2)
    checks.append(("l1_l2_inequality", worst_l12 <= 0.0, {"excess": worst_l12}))
    return checks


def _suite_band(n_funcs: int = 1000) -> list:
    rng = np.random.default_rng(987)
    violations = []
    for i in range(n_funcs):
        d = int(rng.choice([5, 8]))
        K = int(rng.choice([5, 15]))
        gamma = float(rng.choice([0.01, 0.05]))
        deg = int(rng.integers(1, 60))
        alpha = rng.standard_normal(deg + 1) * 10 ** rng.uniform(-2, 1)
        f = orthopoly.PolyCoeffs(d, alpha)
        gap, bound = orthopoly.changes_slowly_gap(f, gamma, K)
        if gap > bound:
            violations.append({"i": i, "d": d, "K": K, "gamma": gamma,
                               "gap": gap, "bound": bound})
    return [("changes_slowly_random_zonal", not violations,
             {"n": n_funcs, "violations": violations[:5]})]


def _suite_kernels(n_sets: int = 25) -> list:
    checks = []
    rng = RngStream(42, 0)
    shipped = [
        kernels.standard_kernel("linear"),
        kernels.standard_kernel("sss"),
        kernels.standard_kernel("rbf", sigma=1.0),
        kernels.standard_kernel("poly", degree=3),
    ]
    min_eig = math.inf
    for i in range(n_sets):
        d = int(rng.gen.integers(3, 12))
        n = int(rng.gen.integers(5, 30))
        X = np.array([sphere.sample_unit_sphere(d, rng) for _ in range(n)])
        for k in shipped:
            G = kernels.gram(k, X, check_psd=False)
            min_eig = min(min_eig, float(np.linalg.eigvalsh(G)[0]))
    checks.append(("gram_psd", min_eig >= -1e-8, {"min_eig": min_eig}))
    for name in ("sss", "rbf", "poly"):
        k = (kernels.standard_kernel(name, sigma=1.0) if name == "rbf"
             else kernels.standard_kernel(name, degree=3) if name == "poly"
             else kernels.standard_kernel(name))
        for d in (6, 10):
            prof = kernels.RkhsProfile.from_kernel(k, d, nmax=40)
            bmin = float(np.min(prof.b))
            total = float(np.sum(prof.b))
            k1 = k.profile_value(1.0)
            checks.append((f"legendre_coeffs_{name}_d{d}",
                           bmin >= -1e-8 and abs(total - k1) <= 1e-6,
                           {"bmin": bmin, "sum": total, "k1": k1}))
            # reproducing identity: ||k(.,x0)||^2 = kappa(1)
            alpha = prof.b.copy()
            nrm = kernels.rkhs_norm_symmetric(alpha, prof)
            checks.append((f"reproducing_norm_{name}_d{d}",
                           abs(nrm - math.sqrt(k1)) <= 1e-6, {"norm": nrm}))
    return checks


def _suite_geometry() -> list:
    checks = []
    rng = RngStream(7, 0)
    for m in (2, 3, 5, 10):
        pts = np.array([sphere.sample_unit_sphere(m, rng) for _ in range(20 * m)])
        ell = geometry.mvee(pts, symmetric=True)
        contain = float(np.max(ell.quad(pts)))
        checks.append((f"mvee_containment_m{m}", contain <= 1.0 + geometry.MVEE_EPS,
                       {"max_quad": contain}))
        Minv = np.linalg.inv(ell.shape)
        worst = math.inf
        for _ in range(200):
            u = sphere.sample_unit_sphere(m, rng)
            lhs = float(np.max(np.abs(pts @ u)))
            rhs = math.sqrt(float(u @ Minv @ u) / (m * (1 + geometry.MVEE_EPS)))
            worst = min(worst, lhs - rhs)
        checks.append((f"john_ratio_m{m}", worst >= -1e-12, {"min_slack": worst}))
    for m in (2, 3, 5):
        A = rng.gen.standard_normal((m, 10))

        def psi(x, A=A):
            return A @ x

        probes = geometry.default_probes(10, m, rng)
        try:
            geometry.build_noise_measure(psi, probes, m, rng=rng.child(m))
            checks.append((f"noise_measure_certificate_m{m}", True, {}))
        except geometry.GeometryError as exc:
            checks.append((f"noise_measure_certificate_m{m}", False,
                           {"error": str(exc)}))
    return checks


SUITES = {
    "orthopoly": _suite_orthopoly,
    "band": _suite_band,
    "kernels": _suite_kernels,
    "geometry": _suite_geometry,
}


def verify_lemmas(suite: str = "all") -> tuple:
    """(passed, report) for the named property suite; counterexamples are in
    the report's failure entries."""
    if suite == "all":
        names = list(SUITES)
    elif suite in SUITES:
        names = [suite]
    else:
        raise UsageError(f"unknown suite {suite!r}; options: "
                         f"{', '.join(SUITES)}, all")
    report = {}
    passed = True
    for name in names:
        checks = SUITES[name]()
        report[name] = [
            {"check": c, "passed": bool(ok), "detail": detail}
            for c, ok, detail in checks
        ]
        passed = passed and all(ok for _, ok, _ in checks)
    return passed, report
