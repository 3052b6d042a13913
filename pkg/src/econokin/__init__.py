"""Kinetic wealth-exchange simulation and income-distribution analytics.

Two exchange ensembles (a Boltzmann-like group with a common saving
propensity and a group with quenched random saving propensities), fitting of
Gamma-mixture and Tsallis models to binned income data, and inequality and
money-flow analytics on the fitted models.
"""

__version__ = "0.1.0"

from .distributions import (
    GammaMixParams,
    GammaTerm,
    MixtureModel,
    TsallisParams,
    ccdf,
    cdf,
    dist_mean,
    eval_ccdf,
    eval_pdf,
    normalize,
    partial_moment,
    quad_mean,
    quad_moment,
    rescale,
    sample,
    tail_exponent,
    total_mass,
    usa2001_boltzmann,
    usa2001_mixture,
    usa2001_tsallis,
)
from .errors import *  # noqa: F401,F403
from .exchange import SimConfig, SimResult, assign_lambdas, income_by_lambda, run_ensemble, run_realization, trade_step
from .fitting import FitOptions, FitResult, fit, goodness
from .inequality import (
    FlowReport,
    GroupSpec,
    StratificationReport,
    decile_ratio,
    equilibrium_beta,
    gini,
    money_flow,
    stratify,
)
from .ingest import BinningScheme, EmpiricalDistribution, histogram, parse_income_table, to_empirical
