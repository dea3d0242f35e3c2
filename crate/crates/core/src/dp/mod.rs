//! Stochastic value table and the per-step lookahead window DP.

pub mod distribution;
pub mod dump;
pub mod table;
pub mod window;

pub use distribution::{discretize_uniform, DiscreteDistribution};
pub use table::{
    build_value_table, build_value_table_with_law, interpolate_value, Node, TransitionLaw,
    ValueTable,
};
pub use window::{solve_lookahead_dp, LookaheadWindow, WindowPlanner};
