"""Extinction times of self-similar processes time-changed by inverse subordinators.

Bernstein functions and Wiener-Hopf pairs (:mod:`.bernstein`), the
generalized gamma function W_phi (:mod:`.wphi`), Mellin transforms, densities
and tails of the resulting laws (:mod:`.mellin_models`) and Monte Carlo
samplers (:mod:`.monte_carlo`).
"""

from .bernstein import (
    Affine,
    BernsteinFunction,
    ExponentialJumps,
    GammaRatio,
    LevyTriple,
    ModelSpec,
    Power,
    STransform,
    WienerHopfPair,
    brownian_pair,
    identity,
    load_model_spec,
    membership,
    parse_model_spec,
    rescale,
    s_transform,
    stable_example_pair,
    stable_subordinator_exponent,
)
from .mellin_models import (
    MellinLaw,
    chi_law,
    density_mellin_barnes,
    density_series_gen_frechet,
    extinction_law,
    gen_frechet_law,
    lambda_law,
    laplace_lambda,
    markov_T_law,
    mellin_extinction,
    mellin_gen_frechet,
    mellin_lambda,
    mellin_markov_T,
    persistence_report,
    smoothness_index,
    survival,
    verify_theorem3,
)
from .monte_carlo import EmpiricalLaw, SimConfig
from .wphi import w_phi_eval

__version__ = "0.1.0"
