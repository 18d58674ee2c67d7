//! Dynamic plane-geometry reasoning over declarative diagrams.
//!
//! The crate is organised around the perception–reasoning–action loop:
//!
//! - [`logic_form`]: the diagram language (parse, canonical serialize, validate, diff)
//! - [`geom`]: rigid maps, intersections and angle measures
//! - [`action`]: sketch actions and the executor
//! - [`solver`]: residuals for declared relations and L-BFGS repair
//! - [`correction`]: the solve, redraw, compare repair loop
//! - [`render`]: deterministic SVG output
//! - [`reasoner`]: scripted, rule-based and external reasoners
//! - [`harness`]: episodes, rewards, benchmark scoring

pub mod action;
pub mod answer;
pub mod canonical;
pub mod correction;
pub mod geom;
pub mod harness;
pub mod lbfgs;
pub mod logic_form;
pub mod reasoner;
pub mod render;
pub mod solver;

pub use action::{execute, parse_action, Action, ExecError, ExecutionResult};
pub use answer::{AnswerType, AnswerValue};
pub use geom::Vec2;
pub use logic_form::{
    diff_forms, parse_logic_form, serialize_logic_form, validate, DiagramDiff, LogicForm,
    ObjectDecl, PointDecl, Relation,
};
