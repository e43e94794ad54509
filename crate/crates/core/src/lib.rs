//! Belief-space task planning: three-valued beliefs compiled to classical
//! planning through knowledge fluents, an execute-observe-replan loop and
//! a partially observable transition-graph simulator.

pub mod logic;
pub mod model;
pub mod pddl;
pub mod compile;
pub mod belief;
pub mod planner;
pub mod executive;
pub mod sim;
pub mod bench;
