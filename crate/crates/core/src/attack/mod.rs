//! Attack implementations: structural poisoning/evasion, sequence-template
//! placeholder injection, and imperceptible text-feature perturbation.

pub mod confusables;
pub mod structure;
pub mod template;
pub mod text;
