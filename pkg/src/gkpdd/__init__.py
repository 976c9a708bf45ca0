"""Numerical toolkit for grid-state engineering by displacement twirls and dynamical decoupling."""

from .channels import KrausChannel, LossParams, chi_from_kraus, photon_loss_chi, photon_loss_kraus
from .charfunc import char_of_operator, effective_squeezing, symplectic_form, wigner
from .ddseq import average_hamiltonian, control_graph, hamiltonian_cycle, pulse_schedule, stroboscopic_propagator
from .engineering import engineered_spectrum, feasibility, substrate_hamiltonian
from .fockspace import TruncatedOperator, KetState, displacement, gkp_codestate
from .twirl import FilterKind, filter_value, twirl_measure

__version__ = "0.1.0"
