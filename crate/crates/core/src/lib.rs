//! Background-knowledge policies for lifted classical planning.
//!
//! A domain strategy is written as stratified Datalog rules whose heads are
//! action schemata. Evaluating the rules on a goal-annotated state yields a
//! set of candidate actions; a relational network built from the same rules
//! learns to rank those candidates for shorter plans.

pub mod bench;
pub mod bk;
pub mod datalog;
pub mod explorer;
pub mod generators;
pub mod lrnn;
pub mod planning;
pub mod policy;
