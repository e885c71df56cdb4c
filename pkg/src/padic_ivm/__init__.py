"""Exact p-adic computation of Gibbs measures for the Ising-Vannimenus model
on Cayley trees of arbitrary order."""

from .padic import (
    DomainError,
    PadicError,
    PadicNumber,
    PrecisionLossError,
    PrimeContext,
    eq_mod,
    from_rational,
    norm_str,
    padic_sum,
    pow_int,
)
from .analysis import (
    EpMembership,
    ep_membership,
    exp_p,
    in_Ep,
    in_minus_Ep,
    kth_residue_count,
    log_p,
    minus_one_kth_root_exists_Qp,
    minus_one_residues,
    roots_of_unity,
)
from .hensel import IntPolySystem, PolyTerm, jacobian_det_mod_p, lift, linear_solve_Zp
from .tree import TreeIndex, is_Gm_periodic, prolonged_pairs, translate
from .model import (
    CompatReport,
    Configuration,
    CouplingParams,
    HQuadruple,
    MeasureTable,
    UTriple,
    compatibility_check,
    h_from_u,
    h_recurrence_residual,
    hamiltonian,
    measure_table_from_h,
    measure_table_from_u,
    recurrence_step,
    u_from_h,
)
from .solver import (
    FixedPointCertificate,
    TwoPeriodicResult,
    backward_recursion,
    field_distance,
    fix_in_Ep,
    fix_in_minus_Ep,
    ising_potts_map,
    recursion_distance_profile,
    solve_translation_invariant,
    solve_two_periodic,
)
from .phase import (
    DecayReport,
    MeasureClassification,
    PhaseReport,
    classify,
    detect_phase_transition,
    partition_closed_form,
    partition_norm_exponent,
    strong_decay_check,
)

__version__ = "0.1.0"
