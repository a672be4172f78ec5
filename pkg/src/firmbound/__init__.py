"""Learned time-varying stopping boundaries for sequential classification.

The package regresses the Bayes continuation risk backward in time with
either a concave piecewise-linear fit (2-block ADMM) or a sparse variational
Gaussian process, and deploys the resulting rule "stop when the immediate
decision risk is no larger than the predicted risk of continuing".
"""

from .cfl import AdmmConfig, PiecewiseLinearModel, fit_concave, fit_convex, tune_reg
from .datasets import (
    DOLSpec, GaussianSpec, SequenceDataset, bernoulli_posterior, dol_curve,
    gen_bernoulli_toy, gen_dol, gen_gaussian, read_fbds, write_fbds,
)
from .dre import DREModel, lsel_loss, mce_loss, tandem_llr, train_dre
from .errors import (
    DataIOError, DegeneratePosteriorError, FirmboundError, InvalidInputError,
    NumericError,
)
from .evalharness import (
    EvalReport, dp_oracle, evaluate_policy, evaluate_random, evaluate_schedule,
    match_mean_static, oracle_agreement, read_csv, static_sweep, write_csv,
)
from .gp import GPModel, elbo, fit_gp, kl_divergence, rbf_kernel
from .policy import (
    StoppingPolicy, build_labels, fit_policy, normalized_params, stopping_risk,
    stopping_risk_batch, terminal_decision_batch,
)
from .sprt import (
    Decision, random_stops, sprt_decide, sprt_decide_batch, static_schedule,
    tapering_schedule, terminal_decision,
)
from .stats import (
    RiskParams, Trajectory, aapr, apr, llr_to_posterior, posterior_from_llr_batch,
    posterior_to_llr,
)

__version__ = "0.1.0"
