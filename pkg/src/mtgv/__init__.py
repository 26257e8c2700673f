"""Second-order total generalized variation for manifold-valued data.

Denoising of 1D signals and 2D images with values on the circle, the
two-sphere, the SPD(3) cone (affine-invariant metric) or flat R^K, by a
cyclic proximal point solver with analytic Jacobi-field gradients, plus a
certified flat primal-dual reference solver for validation.
"""

from .manifolds import (CIRCLE, SPD3, SPHERE2, ConjugatePointError,
                        CutLocusError, Euclidean, Manifold, ManifoldError,
                        ManifoldMismatchError, get_manifold)
from .grid import Grid, fill_masked
from .tuples import TangentTuple, d_pt, d_pt_sym, d_s, d_s_sym, schild_point
from .functionals import (TgvWeights, energy_bivariate, energy_univariate,
                          geodesic_signal, tv_bivariate, tv_univariate)
from .gradients import (AdjointJacobiOp, QuadGrad, SymGrad, dB_dt_spd,
                        dB_dt_sphere, dL_dt, fd_grad, grad_d_pt, grad_d_pt_sym,
                        grad_d_s, grad_d_s_sym, op_T1, op_T3, op_T4, op_T_log)
from .proximal import ProxInnerParams, prox_data, prox_dist_pair, prox_second_atom, prox_sym_atom
from .cppa import (DegeneracyOverflowError, SolveReport, StagewiseSchedule,
                   TgvParams, alphas_from_rs, denoise_bivariate, denoise_tv,
                   denoise_univariate, schedule)
from .reference import cp_tgv_denoise, tgv_value_flat, unwrap_circle, wrap_to_circle
from .synth import (GRADIENT_DIRECTIONS_21, DwiProtocol, delta_snr,
                    dwi_forward, fit_tensors, make_phantom, make_rng,
                    rician_corrupt, tangent_gaussian_noise, vonmises_noise)
from .mvdio import MvdFormatError, read_mvd, write_mvd

__version__ = "0.1.0"
