"""Two-stage (coarse filter, then fine) Metropolis-Hastings sampling of
KL coefficients, with and without conditioning on measurements.

Proposals come from the random walk sampler

    theta_p = sqrt(1 - beta^2) * theta + beta * eps,   eps ~ N(0, I),

applied by default to a single uniformly chosen component per iteration.
This sampler is reversible with respect to the standard-normal prior:
the transition density satisfies

    pi(theta) q(theta_p | theta) = pi(theta_p) q(theta | theta_p),

because (theta, theta_p) is a jointly Gaussian exchangeable pair under
the prior. Hence the instrumental ratio times the prior ratio cancels in
the Metropolis ratio and the acceptance probabilities reduce to pure
likelihood ratios:

    alpha_c = min(1, exp(llc_p - llc))
    alpha_f = min(1, exp((llf_p - llf) - (llc_p - llc)))

The trace records the fine-scale accepted theta per iteration, repeating
the previous state on rejection, which is exactly what the convergence
diagnostics consume.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import conditioning, darcy, kle
from .errors import ArgumentError, CondflowError

_MOD = "mcmc"


@dataclass(frozen=True)
class LikelihoodParams:
    """Precision parameters of the coarse and fine Gaussian likelihoods."""

    sigma_c2: float = 5e-3
    sigma_f2: float = 1e-4

    def __post_init__(self):
        if self.sigma_c2 <= 0 or self.sigma_f2 <= 0:
            raise ArgumentError("precision parameters must be positive",
                                module=_MOD)


@dataclass(frozen=True)
class ChainConfig:
    beta: float = 0.85
    iterations: int = 10000
    seed: int = 0
    conditioned: bool = False
    single_component: bool = True
    store_projected: bool = False

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ArgumentError(f"beta must be in [0, 1], got {self.beta}",
                                module=_MOD)
        if self.iterations < 1:
            raise ArgumentError("iterations must be positive", module=_MOD)


@dataclass(frozen=True)
class ModelBundle:
    """Everything a chain needs, all immutable and shareable.

    ref_obs_fine / ref_obs_coarse are the reference pressure data,
    observed through the chessboard masks of the respective grids.
    """

    basis: object  # kle.KLEBasis on the fine grid
    fine: object
    coarse: object
    bc: darcy.BoundaryConditions
    fine_mask: object
    coarse_mask: object
    ref_obs_fine: np.ndarray
    ref_obs_coarse: np.ndarray
    likelihood: LikelihoodParams
    projector: object = None  # required when sampling conditioned
    kriged: object = None


@dataclass
class ChainTrace:
    """Per-iteration record of one chain."""

    thetas: np.ndarray  # (iterations, n) fine-accepted state, repeated
    coarse_accepted: np.ndarray  # (iterations,) bool
    fine_accepted: np.ndarray  # (iterations,) bool
    loglik_fine: np.ndarray  # (iterations,) of the recorded state
    seed: int
    config: ChainConfig = field(repr=False, default=None)

    @property
    def iterations(self):
        return self.thetas.shape[0]

    @property
    def coarse_rate(self):
        return float(np.mean(self.coarse_accepted))

    @property
    def fine_rate(self):
        """Fine acceptances over all proposals."""
        return float(np.mean(self.fine_accepted))

    @property
    def fine_rate_conditional(self):
        """Fine acceptances over proposals that passed the coarse stage."""
        n_coarse = int(np.sum(self.coarse_accepted))
        if n_coarse == 0:
            return 0.0
        return float(np.sum(self.fine_accepted)) / n_coarse


def log_likelihood(sim, ref, sigma2):
    """Gaussian log-likelihood -||ref - sim||^2 / (2 sigma2)."""
    sim = np.asarray(sim, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if sim.shape != ref.shape:
        raise ArgumentError(
            f"observation length mismatch: {sim.shape} vs {ref.shape}",
            module=_MOD,
        )
    r = ref - sim
    return float(-(r @ r) / (2.0 * sigma2))


def rws_propose(theta, beta, rng, single_component=True):
    """Random walk sampler step; one component or the full vector."""
    if not 0.0 <= beta <= 1.0:
        raise ArgumentError(f"beta must be in [0, 1], got {beta}", module=_MOD)
    theta = np.asarray(theta, dtype=float)
    keep = np.sqrt(1.0 - beta * beta)
    if single_component:
        out = theta.copy()
        i = int(rng.integers(theta.size))
        out[i] = keep * theta[i] + beta * rng.standard_normal()
        return out
    return keep * theta + beta * rng.standard_normal(theta.size)


def _metropolis(log_ratio):
    # cap before exponentiating so large ratios cannot overflow
    return 1.0 if log_ratio >= 0.0 else float(np.exp(log_ratio))


def coarse_accept_prob(loglik_c_prop, loglik_c_curr):
    return _metropolis(loglik_c_prop - loglik_c_curr)


def fine_accept_prob(loglik_f_prop, loglik_f_curr, loglik_c_prop, loglik_c_curr):
    return _metropolis((loglik_f_prop - loglik_f_curr)
                       - (loglik_c_prop - loglik_c_curr))


def _field_for(theta, cfg, bundle):
    if cfg.conditioned:
        return conditioning.synthesize_conditioned(
            bundle.basis, bundle.kriged, theta, bundle.projector
        )
    return kle.synthesize_unconditioned(bundle.basis, theta)


def _logliks(theta, cfg, bundle, want_fine):
    """Coarse (always) and fine (optional) log-likelihood of a state."""
    fine_field = _field_for(theta, cfg, bundle)
    coarse_field = darcy.upscale(fine_field, bundle.fine, bundle.coarse)
    pc = darcy.solve_pressure(coarse_field, bundle.bc)
    llc = log_likelihood(
        darcy.observe_pressure(pc, bundle.coarse_mask),
        bundle.ref_obs_coarse,
        bundle.likelihood.sigma_c2,
    )
    llf = None
    if want_fine:
        pf = darcy.solve_pressure(fine_field, bundle.bc)
        llf = log_likelihood(
            darcy.observe_pressure(pf, bundle.fine_mask),
            bundle.ref_obs_fine,
            bundle.likelihood.sigma_f2,
        )
    return llc, llf


def run_chain(cfg, bundle, initial_theta=None):
    """Run one two-stage chain and return its trace.

    The chain state is the unprojected theta unless
    ``cfg.store_projected`` is set, in which case the projected vector
    is stored after each fine acceptance.
    """
    if cfg.conditioned and (bundle.projector is None or bundle.kriged is None):
        raise ArgumentError(
            "conditioned sampling needs a projector and a kriged surface",
            module=_MOD,
        )
    rng = np.random.default_rng(cfg.seed)
    n = bundle.basis.n
    theta = (np.asarray(initial_theta, dtype=float).copy()
             if initial_theta is not None else rng.standard_normal(n))
    if theta.size != n:
        raise ArgumentError(f"initial theta must have {n} entries", module=_MOD)

    try:
        llc, llf = _logliks(theta, cfg, bundle, want_fine=True)
    except CondflowError as exc:
        raise CondflowError(
            f"forward solve failed for the initial state: {exc}",
            module=_MOD, code="forward",
        ) from exc

    thetas = np.empty((cfg.iterations, n))
    coarse_acc = np.zeros(cfg.iterations, dtype=bool)
    fine_acc = np.zeros(cfg.iterations, dtype=bool)
    logliks = np.empty(cfg.iterations)

    for it in range(cfg.iterations):
        theta_p = rws_propose(theta, cfg.beta, rng, cfg.single_component)
        try:
            llc_p, _ = _logliks(theta_p, cfg, bundle, want_fine=False)
        except CondflowError as exc:
            raise CondflowError(
                f"coarse solve failed at iteration {it}: {exc}",
                module=_MOD, code="forward",
            ) from exc
        if rng.random() < coarse_accept_prob(llc_p, llc):
            coarse_acc[it] = True
            try:
                _, llf_p = _logliks(theta_p, cfg, bundle, want_fine=True)
            except CondflowError as exc:
                raise CondflowError(
                    f"fine solve failed at iteration {it}: {exc}",
                    module=_MOD, code="forward",
                ) from exc
            if rng.random() < fine_accept_prob(llf_p, llf, llc_p, llc):
                fine_acc[it] = True
                if cfg.conditioned and cfg.store_projected:
                    theta = conditioning.project(theta_p, bundle.projector)
                else:
                    theta = theta_p
                llc, llf = llc_p, llf_p
        thetas[it] = theta
        logliks[it] = llf

    return ChainTrace(thetas, coarse_acc, fine_acc, logliks, cfg.seed, cfg)


def run_study(base_cfg, bundle, seeds, initial_thetas=None):
    """Run one independent chain per seed, sequentially and
    deterministically; returns the traces in seed order."""
    seeds = list(seeds)
    if len(seeds) < 1:
        raise ArgumentError("need at least one seed", module=_MOD)
    if len(set(seeds)) != len(seeds):
        warnings.warn("duplicate chain seeds: chains will be identical",
                      stacklevel=2)
    traces = []
    for c, seed in enumerate(seeds):
        cfg = replace(base_cfg, seed=seed)
        init = initial_thetas[c] if initial_thetas is not None else None
        traces.append(run_chain(cfg, bundle, initial_theta=init))
    return traces


def write_trace_csv(trace, path):
    """Persist a trace: iteration, theta_1..theta_n, flags, loglik."""
    n = trace.thetas.shape[1]
    with open(path, "w") as fh:
        cols = ["iteration"] + [f"theta_{i + 1}" for i in range(n)]
        cols += ["coarse_accept", "fine_accept", "loglik"]
        fh.write(",".join(cols) + "\n")
        for it in range(trace.iterations):
            row = [str(it)]
            row += [format(v, ".17g") for v in trace.thetas[it]]
            row += [
                str(int(trace.coarse_accepted[it])),
                str(int(trace.fine_accepted[it])),
                format(trace.loglik_fine[it], ".17g"),
            ]
            fh.write(",".join(row) + "\n")


def read_trace_csv(path):
    """Load a trace written by :func:`write_trace_csv`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        n = len(header) - 4
        if n < 1 or header[0] != "iteration" or header[-1] != "loglik":
            raise ArgumentError(f"{path}: not a trace CSV", module=_MOD)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return ChainTrace(
        thetas=data[:, 1:1 + n],
        coarse_accepted=data[:, 1 + n].astype(bool),
        fine_accepted=data[:, 2 + n].astype(bool),
        loglik_fine=data[:, 3 + n],
        seed=-1,
    )
