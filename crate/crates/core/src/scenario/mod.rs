//! The experiment world: income cohorts, asset endowments, shock and return
//! processes, interventions, seeds and scenario files.

mod cohort;
mod config;
mod intervention;
mod process;
pub mod seeds;

pub use cohort::{
    assign_assets, build_cohorts, parse_incomes, remove_outliers, BaseIncome, Cohort, CohortName,
    BRACKET_EDGES, MEDIAN_ASSETS, SUBSISTENCE_SHARE, SYNTHETIC_INCOMES_CSV,
};
pub use config::{
    ExperimentSection, GridSection, ModelSection, PopulationSection, ReturnSection, ScenarioConfig,
    ShockSection, SCHEMA_VERSION,
};
pub use intervention::{apply_intervention, CompensationRule, Intervention};
pub use process::{
    generate_realization, income_law, income_law_with, RegimeKind, ReturnRegime, ShockProcess,
    MIN_RETURN,
};
pub use seeds::derive_seed;
