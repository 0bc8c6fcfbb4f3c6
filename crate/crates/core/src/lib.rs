pub mod codegen;
pub mod dataset;
pub mod engine;
pub mod eval;
pub mod kernel;
pub mod llm;
pub mod planner;
pub mod prompts;
pub mod stages;
pub mod table;
