"""Sparse optimization via exact continuous relaxations of the counting penalty.

Library layout:

* fidelity    -- separable data terms (LS / logistic / Kullback-Leibler)
* generating  -- generator families, Bregman distances, the 1D penalties
* calibration -- curvature thresholds making the relaxation exact
* prox        -- closed-form proximal operators, Lambert W, cubic roots
* solver      -- proximal gradient descent with fixed step or backtracking
* certify     -- criticality / local-minimizer certification, enumeration
* datagen     -- seeded synthetic instances for the three data terms
* oracles     -- brute-force cross-checks used by the test suite
* cli         -- `brexopt` command-line entry point
"""

from .calibration import CalibrationReport, GeneratorKind, Mode, calibrate
from .certify import (CertRecord, check_critical_JPsi, check_localmin_J0,
                      check_localmin_JPsi, check_preserved,
                      enumerate_minimizers, threshold_to_J0)
from .datagen import DataGenConfig, gen_kl, gen_lr, gen_ls, make_problem
from .errors import (BrexoptError, CalibrationError, ConvergenceError,
                     DomainError, EnumerationLimitError)
from .fidelity import Constraint, FidelitySpec, Kind
from .generating import (Generator, KLGenerator, MatchedGenerator,
                         PowerGenerator, RelaxationSpec, ShannonGenerator,
                         alpha_bounds, beta_value, bregman_d, brex_value,
                         ell_bounds, psi_d1, psi_d2, psi_value)
from .problem import ProblemSpec
from .prox import (ProxQuery, ProxResult, candidate_set, cubic_real_roots,
                   hard_threshold, lambert_w, make_prox, prox_beta, prox_vector)
from .solver import (Backtracking, Fixed, SolveResult, SolverConfig, StopReason,
                     objective_J0, objective_JPsi, pga_step, solve)

__version__ = "0.1.0"
