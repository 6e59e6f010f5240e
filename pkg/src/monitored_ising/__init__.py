"""Monitored transverse-field Ising chain in the Gaussian fermion representation.

Quantum-jump trajectories and the post-selected no-click limit, Pfaffian
spin-spin correlators, entanglement entropy of subchains, and maximization
of the quantum Fisher information over local probe directions.
"""

__version__ = "0.1.0"

from .analysis import (DecayFit, EnsembleSummary, FitResult,
                       ensemble_summary, fit_decay_exponent, fit_power_law,
                       fit_xx_ansatz)
from .correlators import (MajoranaBlocks, MajoranaRows, SpinCorrelationTensor,
                          averaged_abs_correlator, blocks_from_amplitudes,
                          blocks_from_state, correlation_tensor,
                          correlator_rows, ctilde_from_state,
                          ctilde_profile, majorana_covariance, majorana_rows,
                          pfaffian, purity_defect, spin_xx, spin_xy, spin_yx,
                          spin_yy, spin_zz)
from .dynamics import (CorrelationState, HoppingMatrices, JumpEvent,
                       TrajectoryRecord, apply_jump, drift_derivatives,
                       evolve_trajectory, hopping_matrices,
                       initial_product_state, jump_probabilities, load_state,
                       rk5_step, sample_jump, save_state, trajectory_rng)
from .ensemble import ObservableConfig, run_ensemble, run_one_trajectory
from .entanglement import EntropyRequest, entanglement_entropy
from .errors import (ConfigurationError, ContractError, CorruptedStateError,
                     DomainError, InfeasibleJumpError, InsufficientDataError,
                     ParameterError, SimulationError)
from .noclick import (NoClickPoint, ScanResult, ScanSpec, noclick_observables,
                      noclick_rows, scan_phase_diagram, vacuum_state)
from .qfi import (AnnealSchedule, DirectionField, QfiResult, brute_force_max,
                  classical_energy, maximize_qfi, qfi_form,
                  quadratic_form_matrix)
from .spectral import (ModeData, ModelParams, allowed_momenta,
                       annihilation_residual, critical_rate, gap_momentum,
                       mode_lambda, mode_spectrum, noclick_vacuum)
