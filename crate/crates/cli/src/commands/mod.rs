pub mod bound_check;
pub mod cloak_demo;
pub mod passivity;
pub mod polarizability;
pub mod sum_rule;
