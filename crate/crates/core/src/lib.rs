//! Engine that synthesizes executable multi-step data preparation
//! pipelines from a set of source tables and an instance-free target
//! schema. A constrained five-action sandbox defines the reasoning moves,
//! Monte Carlo Tree Search explores them with an LLM-or-heuristic
//! proposal oracle, and an execution-grounded reward scores candidate
//! pipelines against the target schema.

pub mod bench;
pub mod ops;
pub mod oracle;
pub mod sandbox;
pub mod search;
pub mod table;

pub use ops::{execute_plan, parse_plan, ExecutionDiagnostics, PipelinePlan};
pub use sandbox::{Action, ActionType, ReasoningState};
pub use search::{run_search, RewardMode, SearchConfig, SearchOutcome};
pub use table::{read_csv, write_csv, CellValue, Schema, Table};
