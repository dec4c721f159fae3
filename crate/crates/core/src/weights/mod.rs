//! Weight sequences, their associated functions and growth conditions.

mod assoc;
mod conditions;
mod rseq;
mod sequence;

pub use assoc::{AssociatedFunction, Backend, NuValue};
pub use conditions::{
    check_inclusion, check_inclusion_with, check_m2, check_m2_with, check_m2star,
    check_m2star_with, check_nontriviality, check_nu_doubling, check_nu_doubling_with,
    check_nu_m2_inequality, log_grid, ls_slope, ConditionReport, SearchCaps,
};
pub use rseq::{
    growth_witness, merge_rsequences, shrink_r, KDirection, KWitness, MergeResult, RSequence,
    ShrinkReport, ShrinkResult, DEFAULT_DIVERGENCE_THRESHOLD,
};
pub use sequence::{Generator, WeightSequence};
