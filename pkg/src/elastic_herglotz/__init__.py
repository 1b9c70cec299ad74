"""Elastic Herglotz wave functions: eigenvector expansions of the time-harmonic
isotropic elasticity operator, weighted inner products, and truncated
reproducing kernels in two and three dimensions."""

from .core import (ElasticParams, FrameDegenerateError, ModeError, ModeIndex,
                   ParameterError, ResolutionError, SphPoint, SphTensor, SphVec,
                   cartesian_to_frame, frame_to_cartesian, make_params,
                   params_from_wavenumbers, tensor_double_dot)
from .hansen import (eig_gradient, hansen, hansen_gradient, navier_eig,
                     navier_eig_cartesian, spherical_gradient)
from .inner import (RadialQuadrature, SphereQuadrature, bessel_pair_integral,
                    cross_decay_report, diag_decay_report, gram_closed,
                    h_inner, h_inner_eig, h_norm_eig, hansen_grad_gram,
                    radial_integral, sphere_inner)
from .kernel3d import (CoeffField, HModeQuadrature, KernelValue, OrthonormalCache,
                       build_cache, coeff_field_norm, eval_field_cartesian,
                       eval_field_cartesian_many, kernel_eval, kernel_mode,
                       n_tilde_eval, project, random_coeff_field, reproduce_check)
from .plane2d import (Cache2D, CoeffField2D, PolarPoint, angular_gradient_2d,
                      basis_2d, build_cache_2d, f_scalar, h_inner_2d, kernel_2d,
                      reproduce_check_2d)
from .synthesis import (FarFieldPattern, herglotz_condition_estimate,
                        herglotz_synthesize, navier_residual_fd, split_ps,
                        synthesize_then_project)

__version__ = "0.1.0"
