"""SGD on random least squares versus its deterministic Volterra limit.

Modules
-------
spectral
    Limiting spectral measures, h_k transforms, Stieltjes identities.
datagen
    Random instances under isotropic, planted, deep-linear and
    one-hidden-layer data models.
sgd
    Finite-sum and streaming minibatch SGD traces.
baselines
    SDE and SME diffusion surrogates.
volterra
    Trapezoid solver for psi(t).
criticality
    gamma0, gamma_star, Malthusian rates, MP closed forms, asymptotics.
harness
    Config parsing, comparison, rate sweeps, plot scripts and the CLI.
"""
from . import baselines, criticality, datagen, sgd, spectral, traces, volterra
from .criticality import (asymptotic_rate, gamma_max, gamma_star, malthusian_lambda, mp_closed_form,
                          mp_constants, psi_infinity)
from .datagen import (DeepLinear, Isotropic, OneHiddenLayer, Planted, ProblemInstance, gen_instance,
                      gen_matrix, haar_orthogonal)
from .sgd import SGDConfig, f_value, run_sgd, run_streaming, sgd_step
from .baselines import DiffusionConfig, run_sde, run_sme
from .spectral import (SpectralMeasure, esm_from_eigenvalues, h_k, moment, mp_measure,
                       mp_resolvent_integral, stieltjes_m)
from .traces import Trace
from .volterra import VolterraGrid, VolterraSolution, forcing_z, kernel_K, solve

__version__ = "0.1.0"
