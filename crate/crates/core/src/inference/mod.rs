//! Energy minimization: max-flow core and alpha-expansion.

mod expansion;
mod maxflow;

pub use expansion::{alpha_expansion, expansion_move, is_expansion_optimal, ExpansionResult, DEFAULT_MAX_SWEEPS};
pub use maxflow::{max_flow_st, FlowNetwork};
