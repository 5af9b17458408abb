"""Push-sum loopless-SVRG optimisation over unbalanced directed networks."""

from .netgraph import (DirectedNetwork, generate_graph, perron_vector, pi_norm, sigma_a,
                       build_column_stochastic_weights, check_strong_connectivity)
from .objective import (make_logistic, make_svm_smoothed_hinge, make_synthetic_quadratic,
                        predict_accuracy)
from .solver import AlgoConfig, SystemState, run, interval_trigger_probs
from .theory import (compute_constants, build_h_alpha, build_g_k, check_lemma7_certificate,
                     theorem_step_bound, iteration_complexity_estimate, spectral_radius)
from .harness import solve_reference, compare_traces, run_case_study
from .trace import Trace, TraceRecord, residual, consensus_error

__version__ = "0.1.0"
