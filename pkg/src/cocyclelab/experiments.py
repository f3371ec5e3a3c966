"""Reproducible experiments: configuration, runners, and report writing.

Every runner returns a ``Report`` whose rows depend only on the configuration
(never on the worker count), so reports are byte-identical across runs.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

from .cocycles import (build_a_sigma_1, build_a_sigma_eta, build_bk, build_lk,
                       exchange_check, fiber_bunching_margin, iterate)
from .errors import ConfigError
from .exponents import (lyap_diag_closed_form, lyap_induced, lyap_top_mc)
from .induction import cj_decay, even_return_diagonal, kac_birkhoff
from .mat2 import op_norm, rotation
from .montecarlo import trial_seeds
from .norms import (ModulusSpec, analytic_bk_bound, analytic_lk_cases,
                    norm_distance)
from .shift_space import LazyPoint, make_wk, make_zk

COMMANDS = ("exponent", "norm-sweep", "boundary", "exchange", "induced", "kac")
SCENARIOS = {
    "exponent": ("diagonal", "perturbation"),
    "norm-sweep": ("bk", "lk"),
    "boundary": ("eta-sweep",),
    "exchange": ("bk", "lk", "fiber-bunching"),
    "induced": ("bk", "lk", "base"),
    "kac": ("zk", "wk"),
}
# fields that do not influence results and are left out of the config hash
_NOT_HASHED = ("threads", "out", "fmt")
EXCHANGE_DPS = 50
# return-time experiments need mu(cylinder)^-1 steps per return, so they stay small
LONG_K = (2, 4, 8, 16, 32, 64)
SHORT_K = (2, 3, 4)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    scenario: str = ""
    sigma: float = 2.0
    eta: float = 2.0
    etas: tuple = (0.8, 0.9, 0.95, 0.99, 1.01, 1.05, 1.1, 1.25)
    p: float = 0.5
    rho: float = 0.5
    k: tuple | None = None
    beta: float = 0.9
    delta: float = 0.5
    alpha: float = 1.0
    alphas: tuple = (1.0, 2.0, 3.0)
    n: int = 100_000
    trials: int = 50
    j_max: int = 10_000
    cap: int | None = None
    seed: int = 0
    threads: int = 1
    fmt: str = "csv"
    out: str | None = None

    def __post_init__(self):
        for name in ("k", "etas", "alphas"):
            v = getattr(self, name)
            if v is None:
                continue
            if isinstance(v, (int, float)):
                v = (v,)
            object.__setattr__(self, name, tuple(v))

    def validate(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        scen = self.scenario or SCENARIOS[self.command][0]
        if scen not in SCENARIOS[self.command]:
            raise ConfigError(f"unknown scenario {scen!r} for {self.command}; "
                              f"choose from {', '.join(SCENARIOS[self.command])}")
        object.__setattr__(self, "scenario", scen)
        if self.k is None:
            object.__setattr__(self, "k", LONG_K if self.command in ("norm-sweep", "exchange")
                               else SHORT_K)
        if not 0 < self.p < 1:
            raise ConfigError("p must lie in (0, 1)")
        if not 0 < self.rho < 1:
            raise ConfigError("rho must lie in (0, 1)")
        if not self.sigma > 0 or not self.eta > 0 or any(e <= 0 for e in self.etas):
            raise ConfigError("sigma and eta must be positive")
        if self.command == "exponent" and scen == "diagonal" and self.sigma < self.eta:
            raise ConfigError("need sigma >= eta")
        if self.command == "boundary" and any(e > self.sigma for e in self.etas):
            raise ConfigError("need sigma >= eta for every eta")
        if not self.k:
            raise ConfigError("k grid is empty")
        if any(int(k) != k or k < 1 for k in self.k):
            raise ConfigError("k values must be positive integers")
        uses_lk = scen == "lk" or (self.command == "exponent" and scen == "perturbation")
        if uses_lk:
            if not 0 < self.delta < self.beta < 1:
                raise ConfigError("L_k scenarios need 0 < delta < beta < 1")
            if min(self.k) < 2:
                raise ConfigError("L_k needs k >= 2")
        elif not 0 < self.delta <= 1:
            raise ConfigError("delta must lie in (0, 1]")
        if self.n < 1 or self.trials < 1 or self.j_max < 1:
            raise ConfigError("n, trials and j_max must be positive")
        if self.cap is not None and self.cap < 1:
            raise ConfigError("cap must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.command in ("exchange", "norm-sweep", "kac") or scen == "lk":
            if self.sigma <= 1:
                raise ConfigError("sigma must exceed 1")
        return self

    def hashed_fields(self) -> dict:
        d = dataclasses.asdict(self)
        for f in _NOT_HASHED:
            d.pop(f)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def config_hash(self) -> str:
        blob = json.dumps(self.hashed_fields(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Report:
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def render(self, fmt: str = "csv") -> str:
        if fmt == "json":
            return json.dumps([{c: r.get(c) for c in self.columns} for r in self.rows],
                              indent=1, sort_keys=False) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(r.get(c)) for c in self.columns])
        return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _ks(cfg):
    return [int(k) for k in cfg.k]


def run_exponent(cfg: ExperimentConfig) -> Report:
    cols = ["cocycle", "sigma", "eta_or_k", "p", "method", "value", "stderr", "n", "trials"]
    rep = Report(cols)

    def add(est, name, eta_or_k):
        rep.rows.append({"cocycle": name, "sigma": cfg.sigma, "eta_or_k": eta_or_k,
                         "p": cfg.p, "method": est.method, "value": est.value,
                         "stderr": est.stderr, "n": est.n, "trials": est.trials})

    if cfg.scenario == "diagonal":
        F = build_a_sigma_eta(cfg.sigma, cfg.eta)
        add(lyap_diag_closed_form(cfg.sigma, cfg.eta, cfg.p), "A_sigma_eta", cfg.eta)
        add(lyap_top_mc(F, cfg.p, cfg.n, cfg.trials, cfg.seed, cfg.threads),
            "A_sigma_eta", cfg.eta)
    else:
        add(lyap_diag_closed_form(cfg.sigma, 1.0, cfg.p), "A_sigma_1", "")
        for k in _ks(cfg):
            add(lyap_induced(build_bk(cfg.sigma, k), make_zk(k), cfg.p, cfg.trials,
                             cfg.j_max, cfg.seed, cfg.cap, cfg.threads), "B_k", k)
            add(lyap_induced(build_lk(cfg.sigma, k, cfg.beta), make_wk(k), cfg.p,
                             cfg.trials, cfg.j_max, cfg.seed, cfg.cap, cfg.threads),
                "L_k", k)
    rep.summary["exponent_units"] = "nats per ambient step"
    return rep


def run_norm_sweep(cfg: ExperimentConfig) -> Report:
    cols = ["k", "spec", "sup_term", "seminorm_term", "total", "analytic_bound",
            "exact_or_sampled"]
    rep = Report(cols)
    A = build_a_sigma_1(cfg.sigma)
    specs = [ModulusSpec.log(cfg.delta), ModulusSpec.log(1.0),
             ModulusSpec.holder(cfg.alpha)]
    cases = {}
    for k in _ks(cfg):
        F = build_bk(cfg.sigma, k) if cfg.scenario == "bk" else build_lk(cfg.sigma, k, cfg.beta)
        for spec in specs:
            d = norm_distance(F, A, spec, cfg.rho, seed=cfg.seed)
            bound = None
            if spec.kind == "Log":
                if cfg.scenario == "bk":
                    bound = analytic_bk_bound(k, cfg.sigma, spec.delta, cfg.rho)
                elif spec.delta < cfg.beta:
                    lk = analytic_lk_cases(k, cfg.sigma, cfg.beta, spec.delta, cfg.rho)
                    bound = lk.total
                    cases[str(k)] = {"cases": lk.cases, "sup_bound": lk.sup_bound}
            rep.rows.append({"k": k, "spec": spec.label, "sup_term": d.sup_term,
                             "seminorm_term": d.seminorm_term, "total": d.total,
                             "analytic_bound": bound,
                             "exact_or_sampled": "exact" if d.exact else "sampled"})
    if cases:
        rep.summary["lk_case_bounds"] = cases
    return rep


def run_boundary(cfg: ExperimentConfig) -> Report:
    cols = ["eta", "sigma", "p", "lambda_plus", "p_critical", "lambda_plus_at_p_critical",
            "uniformly_hyperbolic", "hyperbolic_constant", "distance_sup", "distance_total",
            "spec"]
    rep = Report(cols)
    A = build_a_sigma_1(cfg.sigma)
    spec = ModulusSpec.log(cfg.delta)
    for eta in cfg.etas:
        F = build_a_sigma_eta(cfg.sigma, eta)
        lam = lyap_diag_closed_form(cfg.sigma, eta, cfg.p).value
        pc = lc = None
        if eta > 1:
            pc = math.log(eta) / math.log(cfg.sigma * eta)
            lc = lyap_diag_closed_form(cfg.sigma, eta, pc).value
        d = norm_distance(F, A, spec, cfg.rho)
        rep.rows.append({"eta": eta, "sigma": cfg.sigma, "p": cfg.p, "lambda_plus": lam,
                         "p_critical": pc, "lambda_plus_at_p_critical": lc,
                         "uniformly_hyperbolic": str(eta < 1).lower(),
                         "hyperbolic_constant": cfg.sigma / eta if eta < 1 else None,
                         "distance_sup": d.sup_term, "distance_total": d.total,
                         "spec": spec.label})
    return rep


def run_exchange(cfg: ExperimentConfig) -> Report:
    if cfg.scenario == "fiber-bunching":
        rep = Report(["sigma", "alpha", "rho", "sup_product", "threshold", "holds"])
        for alpha in cfg.alphas:
            fb = fiber_bunching_margin(build_a_sigma_1(cfg.sigma), alpha, cfg.rho)
            rep.rows.append({"sigma": cfg.sigma, "alpha": alpha, "rho": cfg.rho,
                             "sup_product": fb.sup_product, "threshold": fb.threshold,
                             "holds": str(fb.holds).lower()})
        return rep
    rep = Report(["cocycle", "k", "beta", "samples", "steps", "max_e1_to_vertical",
                  "max_e2_to_horizontal", "max_quarter_turn_error"])
    seeds = trial_seeds(cfg.seed, cfg.trials)
    for k in _ks(cfg):
        if cfg.scenario == "bk":
            F, c, steps, beta = build_bk(cfg.sigma, k), make_zk(k), k, None
        else:
            F, c, steps, beta = (build_lk(cfg.sigma, k, cfg.beta, dps=EXCHANGE_DPS),
                                 make_wk(k), 2 * k + 1, cfg.beta)
        e1 = e2 = 0.0
        qt = None
        for s in seeds:
            x = LazyPoint.conditioned(c, int(s), cfg.p)
            r = exchange_check(F, x, steps)
            e1, e2 = max(e1, r.e1_to_vertical), max(e2, r.e2_to_horizontal)
            if cfg.scenario == "bk":
                err = op_norm(iterate(F, x, steps).to_mat2() - rotation(math.pi / 2))
                qt = err if qt is None else max(qt, err)
        rep.rows.append({"cocycle": "B_k" if cfg.scenario == "bk" else "L_k", "k": k,
                         "beta": beta, "samples": cfg.trials, "steps": steps,
                         "max_e1_to_vertical": e1, "max_e2_to_horizontal": e2,
                         "max_quarter_turn_error": qt})
    return rep


def _dyadic(j_max):
    out = []
    j = 1
    while j < j_max:
        out.append(j)
        j *= 2
    return out + [j_max]


def run_induced(cfg: ExperimentConfig) -> Report:
    rep = Report(["k", "trial", "j", "m_j", "c_j", "abs_c_j_over_m_j"])
    grid = _dyadic(cfg.j_max)
    summary = {}
    seeds = trial_seeds(cfg.seed, cfg.trials)
    for k in _ks(cfg):
        if cfg.scenario == "bk":
            F, c = build_bk(cfg.sigma, k), make_zk(k)
        elif cfg.scenario == "lk":
            F, c = build_lk(cfg.sigma, k, cfg.beta), make_wk(k)
        else:
            F, c = build_a_sigma_1(cfg.sigma), make_zk(k)
        for t, s in enumerate(seeds):
            x = LazyPoint.conditioned(c, int(s), cfg.p)
            cs = even_return_diagonal(F, x, c, cfg.j_max, cfg.cap)
            for j in grid:
                rep.rows.append({"k": k, "trial": t, "j": j, "m_j": int(cs.m[j - 1]),
                                 "c_j": float(cs.c[j - 1]),
                                 "abs_c_j_over_m_j": float(cs.ratio[j - 1])})
        d = cj_decay(F, c, cfg.p, cfg.trials, cfg.j_max, cfg.seed, grid, cfg.cap,
                     cfg.threads)
        summary[str(k)] = {"grid": list(d.grid), "mean_ratio": list(d.grid_means),
                           "stderr": list(d.grid_stderr),
                           "rate_convention": "per ambient step"}
    rep.summary["cj_decay"] = summary
    return rep


def run_kac(cfg: ExperimentConfig) -> Report:
    rep = Report(["cylinder", "k", "p", "trials", "mean_tau", "mean_tau_stderr",
                  "expected_tau", "slope", "slope_stderr", "expected_slope"])
    for k in _ks(cfg):
        c = make_zk(k) if cfg.scenario == "zk" else make_wk(k)
        r = kac_birkhoff(c, cfg.p, cfg.trials, cfg.j_max, cfg.seed, cfg.cap, cfg.threads)
        rep.rows.append({"cylinder": str(c), "k": k, "p": cfg.p, "trials": cfg.trials,
                         "mean_tau": r.mean_tau, "mean_tau_stderr": r.mean_tau_stderr,
                         "expected_tau": r.expected_tau, "slope": r.slope,
                         "slope_stderr": r.slope_stderr,
                         "expected_slope": r.expected_slope})
    return rep


RUNNERS = {"exponent": run_exponent, "norm-sweep": run_norm_sweep,
           "boundary": run_boundary, "exchange": run_exchange,
           "induced": run_induced, "kac": run_kac}


def run(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    rep = RUNNERS[cfg.command](cfg)
    rep.summary.update({"command": cfg.command, "scenario": cfg.scenario,
                        "seed": cfg.seed, "config_hash": cfg.config_hash(),
                        "config": cfg.hashed_fields()})
    return rep


def write_report(rep: Report, cfg: ExperimentConfig, stream=None) -> None:
    """Write the table to ``cfg.out`` (plus a ``.summary.json`` sidecar) or to ``stream``."""
    text = rep.render(cfg.fmt)
    summary = json.dumps(rep.summary, indent=1, sort_keys=True) + "\n"
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
        with open(cfg.out + ".summary.json", "w") as fh:
            fh.write(summary)
    else:
        stream.write(text)
