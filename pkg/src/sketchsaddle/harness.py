"""Monte Carlo sweep harness.

A sweep fixes one instance and runs seeded projection draws over a grid
of sketch sizes, solving the sketched problem with theorem-prescribed
l1 weights (optionally scaled, since the constants are conservative) and
recording recovery errors against the planted reference pair.  Every
trial's projection seed derives deterministically from the config seed
and the (sketch size, trial) indices, so any row of the output can be
reproduced in isolation.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .errors import ConfigError
from .instances import (ErmInstance, gen_erm, gen_planted_quadratic,
                        perturb_to_approx_sparse, reference_pair)
from .model import kkt_residual, sparsity_stats
from .regbounds import (OracleQuantities, THEOREMS, minimum_sketch_size,
                        prescribe_regularization, recovery_bounds,
                        rho_diagnostics, theorem_shape, zeta_restricted)
from .sketch import DEFAULT_C, DISTRIBUTIONS, apply_sketch, make_projection
from .solver import SolverOptions, solve_sketched

_CONFIG_KEYS = {"schema", "instance", "perturb", "theorem", "side", "m_values",
                "trials", "distribution", "scale_factor", "c", "delta", "seed",
                "allow_small_m", "zeta_mode", "rho_diagnostics", "solver",
                "output"}

_INSTANCE_KEYS = {
    "planted": {"kind", "d", "n", "s_w", "s_lambda", "alpha", "beta",
                "matrix_style", "seed"},
    "erm": {"kind", "loss", "d", "n", "s", "reg", "margin_fraction", "seed"},
}


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs, loadable from versioned JSON."""

    instance: dict
    m_values: tuple
    trials: int
    theorem: str = "T1"
    distribution: str = "gaussian"
    scale_factor: float = 1.0
    c: float = DEFAULT_C
    delta: float = 0.05
    seed: int = 0
    allow_small_m: bool = False
    zeta_mode: str = "bound"
    rho_diagnostics: bool = False
    perturb: Optional[dict] = None
    solver: dict = field(default_factory=dict)
    output: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        if not self.m_values:
            raise ConfigError("m_values must be nonempty")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.theorem not in THEOREMS:
            raise ConfigError(f"unknown prescription variant {self.theorem!r}")
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        if not 0 < self.delta < 1. / 3.:
            raise ConfigError("delta must lie in (0, 1/3)")
        floor = minimum_sketch_size(self.c, self.delta)
        if not self.allow_small_m and min(self.m_values) < floor:
            raise ConfigError(
                f"smallest sketch size {min(self.m_values)} is below the "
                f"guarantee floor {floor}; set allow_small_m to explore anyway")
        kind = self.instance.get("kind")
        if kind not in _INSTANCE_KEYS:
            raise ConfigError(f"unknown instance kind {kind!r}")
        unknown = set(self.instance) - _INSTANCE_KEYS[kind]
        if unknown:
            raise ConfigError(f"unknown instance keys {sorted(unknown)}")
        if self.perturb is not None:
            unknown = set(self.perturb) - {"mode", "amount", "seed"}
            if unknown:
                raise ConfigError(f"unknown perturb keys {sorted(unknown)}")

    @property
    def side(self):
        return theorem_shape(self.theorem)[0]

    @property
    def guaranteed(self):
        return theorem_shape(self.theorem)[1]

    @staticmethod
    def from_dict(data):
        data = dict(data)
        if data.pop("schema", None) != 1:
            raise ConfigError("config must declare \"schema\": 1")
        declared_side = data.pop("side", None)
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        config = SweepConfig(**data)
        if declared_side is not None and declared_side != config.side:
            raise ConfigError(
                f"side {declared_side!r} contradicts variant {config.theorem}")
        return config

    @staticmethod
    def from_json(path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return SweepConfig.from_dict(data)

    def to_dict(self):
        data = asdict(self)
        data["m_values"] = list(self.m_values)
        data["schema"] = 1
        data["side"] = self.side
        return data


@dataclass(frozen=True)
class TrialRecord:
    """One sketched solve: errors against the reference pair plus bounds.

    ``bound_w`` and ``bound_l`` are the l2 recovery bounds implied by
    the applied (possibly scaled) weights; the pass flags compare the
    measured l2 errors against them.  ``rho_w``/``rho_lambda`` are NaN
    unless the sweep asked for per-draw diagnostics.
    """

    m: int
    trial: int
    seed: int
    gamma_w: float
    gamma_lambda: float
    err_w_l2: float
    err_w_l1: float
    ratio_w: float
    err_l_l2: float
    err_l_l1: float
    ratio_l: float
    bound_w: float
    bound_l: float
    pass_w: bool
    pass_l: bool
    iterations: int
    converged: bool
    wall_time_ms: float
    rho_w: float = float("nan")
    rho_lambda: float = float("nan")


def build_instance(config):
    """Instantiate (and optionally perturb) the configured instance."""
    spec = dict(config.instance)
    kind = spec.pop("kind")
    if kind == "planted":
        instance = gen_planted_quadratic(**spec)
    else:
        instance = gen_erm(**spec)
    if config.perturb is not None:
        if kind != "planted":
            raise ConfigError("perturb applies only to planted instances; "
                              "an erm reference pair carries its own gap")
        instance = perturb_to_approx_sparse(instance, **config.perturb)
    return instance


def _prescription_extras(config, instance, oracle):
    extras = {}
    if config.theorem == "T4":
        if config.perturb is not None:
            if config.perturb.get("mode") != "stationarity":
                raise ConfigError("T4 sweeps need a stationarity perturbation")
            extras["stationarity_gap"] = float(config.perturb["amount"])
        elif isinstance(instance, ErmInstance):
            # the reference pair is only approximately stationary; measure
            # its gap directly and use it as the certificate
            r_w, r_l = kkt_residual(instance.problem, instance.w_planted,
                                    instance.lambda_ref)
            extras["stationarity_gap"] = float(max(r_w, r_l))
        else:
            raise ConfigError("T4 sweeps need a stationarity perturbation")
    if config.theorem == "T7":
        if config.perturb is None or config.perturb.get("mode") != "neighbor":
            raise ConfigError("T7 sweeps need a neighbor perturbation")
        extras["neighbor_distance"] = float(config.perturb["amount"])
        extras["smoothness"] = float(instance.mu)
    if config.theorem == "T5":
        extras["zeta"] = zeta_restricted(instance.problem.A, 16 * oracle.s_w,
                                         side="rows", mode=config.zeta_mode)
    if config.theorem == "T6":
        extras["zeta"] = zeta_restricted(instance.problem.A, 16 * oracle.s_lambda,
                                         side="columns", mode=config.zeta_mode)
    return extras


def trial_seed(config_seed, m_index, trial):
    """The projection seed for one trial, derived and recordable."""
    ss = np.random.SeedSequence([int(config_seed), int(m_index), int(trial)])
    return int(ss.generate_state(1)[0])


def _solver_options(config):
    return SolverOptions(**config.solver)


def run_trial(config, instance, oracle, prescription, m_index, trial):
    """Run a single seeded projection draw; returns its TrialRecord."""
    problem = instance.problem
    m = config.m_values[m_index]
    seed = trial_seed(config.seed, m_index, trial)
    rows = problem.n if config.side == "right" else problem.d
    R = make_projection(rows, m, config.distribution, seed)
    sketched = apply_sketch(problem, R, config.side)
    applied = prescription.scaled(config.scale_factor)
    pair, report = solve_sketched(sketched, applied.gamma_w,
                                  applied.gamma_lambda,
                                  _solver_options(config))
    w_ref, lam_ref = reference_pair(instance)
    e_w = sparsity_stats(pair.w - w_ref)
    e_l = sparsity_stats(pair.lam - lam_ref)
    bw = recovery_bounds(applied, oracle, side="w")
    bl = recovery_bounds(applied, oracle, side="lambda")
    rho_w = rho_lambda = float("nan")
    if config.rho_diagnostics:
        diag = rho_diagnostics(sketched, w_ref, lam_ref,
                               applied.gamma_w, applied.gamma_lambda)
        rho_w, rho_lambda = diag.rho_w, diag.rho_lambda
    return TrialRecord(
        m=m, trial=trial, seed=seed,
        gamma_w=applied.gamma_w, gamma_lambda=applied.gamma_lambda,
        err_w_l2=e_w.l2, err_w_l1=e_w.l1, ratio_w=e_w.ratio,
        err_l_l2=e_l.l2, err_l_l1=e_l.l1, ratio_l=e_l.ratio,
        bound_w=bw.l2, bound_l=bl.l2,
        pass_w=bool(e_w.l2 <= bw.l2), pass_l=bool(e_l.l2 <= bl.l2),
        iterations=report.iterations, converged=report.converged,
        wall_time_ms=report.wall_time_ms,
        rho_w=rho_w, rho_lambda=rho_lambda)


_WORKER_STATE = {}


def _worker_run(payload):
    config_json, m_index, trial = payload
    state = _WORKER_STATE.get(config_json)
    if state is None:
        config = SweepConfig.from_dict(json.loads(config_json))
        instance = build_instance(config)
        oracle = OracleQuantities.from_instance(instance)
        extras = _prescription_extras(config, instance, oracle)
        prescriptions = {
            i: prescribe_regularization(config.theorem, oracle, m,
                                        c=config.c, delta=config.delta,
                                        enforce_minimum=not config.allow_small_m,
                                        **extras)
            for i, m in enumerate(config.m_values)}
        state = (config, instance, oracle, prescriptions)
        _WORKER_STATE[config_json] = state
    config, instance, oracle, prescriptions = state
    return run_trial(config, instance, oracle, prescriptions[m_index],
                     m_index, trial)


def run_sweep(config, workers=1):
    """Run all trials of a sweep; records ordered by (sketch size, trial).

    With ``workers > 1`` trials run in separate processes; each trial is
    self-contained (instance rebuilt from the config, projection from
    the derived seed), so the records match a sequential run exactly.
    """
    tasks = [(m_index, trial)
             for m_index in range(len(config.m_values))
             for trial in range(config.trials)]
    if workers > 1:
        config_json = json.dumps(config.to_dict(), sort_keys=True)
        payloads = [(config_json, mi, t) for mi, t in tasks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_worker_run, payloads, chunksize=1))
    else:
        instance = build_instance(config)
        oracle = OracleQuantities.from_instance(instance)
        extras = _prescription_extras(config, instance, oracle)
        records = []
        for m_index, trial in tasks:
            prescription = prescribe_regularization(
                config.theorem, oracle, config.m_values[m_index],
                c=config.c, delta=config.delta,
                enforce_minimum=not config.allow_small_m, **extras)
            records.append(run_trial(config, instance, oracle, prescription,
                                     m_index, trial))
    return sorted(records, key=lambda r: (r.m, r.trial))


# -- analysis ----------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    """Log-log least squares fit of median error against sketch size."""

    slope: float
    intercept: float
    r_squared: float
    m_values: tuple
    medians: tuple


def median_by_m(records, fieldname="err_w_l2"):
    """Per-sketch-size medians of one record field, in increasing m."""
    values = {}
    for r in records:
        values.setdefault(r.m, []).append(getattr(r, fieldname))
    ms = sorted(values)
    return ms, [float(np.median(values[m])) for m in ms]


def fit_rate(records, fieldname="err_w_l2"):
    """Fit ``log(median) ~ slope * log(m) + intercept`` across sketch sizes."""
    ms, meds = median_by_m(records, fieldname)
    if len(ms) < 2:
        raise ValueError("rate fit needs at least two sketch sizes")
    if any(v <= 0 for v in meds):
        raise ValueError("rate fit needs positive medians")
    x = np.log(np.asarray(ms, dtype=float))
    y = np.log(np.asarray(meds))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-30:
        r2 = 1.0 if ss_res <= 1e-30 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept),
                   r_squared=float(r2), m_values=tuple(ms),
                   medians=tuple(meds))


@dataclass(frozen=True)
class BoundCheck:
    """Pass fractions of the three recovery bounds on one side."""

    side: str
    count: int
    frac_l2: float
    frac_l1: float
    frac_ratio: float
    threshold: float
    ok: bool


def check_bounds(records, s_w, s_lambda, alpha, beta, delta=0.05, side="w"):
    """Fraction of trials satisfying the l2, l1 and ratio bounds.

    The target fraction is the theorem's ``1 - 3 delta``; the l1 and
    ratio bounds are recomputed from each record's applied weight.
    """
    if side == "w":
        s, modulus = s_w, alpha
        l2 = np.array([r.err_w_l2 for r in records])
        l1 = np.array([r.err_w_l1 for r in records])
        ratio = np.array([r.ratio_w for r in records])
        gamma = np.array([r.gamma_w for r in records])
    elif side == "lambda":
        s, modulus = s_lambda, beta
        l2 = np.array([r.err_l_l2 for r in records])
        l1 = np.array([r.err_l_l1 for r in records])
        ratio = np.array([r.ratio_l for r in records])
        gamma = np.array([r.gamma_lambda for r in records])
    else:
        raise ValueError("side must be 'w' or 'lambda'")
    count = len(records)
    if count == 0:
        raise ValueError("no records to check")
    root_s = np.sqrt(s)
    frac_l2 = float(np.mean(l2 <= 3.0 * gamma * root_s / modulus))
    frac_l1 = float(np.mean(l1 <= 12.0 * gamma * s / modulus))
    frac_ratio = float(np.mean(ratio <= 4.0 * root_s))
    threshold = 1.0 - 3.0 * delta
    ok = (frac_l2 >= threshold and frac_l1 >= threshold
          and frac_ratio >= threshold)
    return BoundCheck(side=side, count=count, frac_l2=frac_l2,
                      frac_l1=frac_l1, frac_ratio=frac_ratio,
                      threshold=threshold, ok=bool(ok))
