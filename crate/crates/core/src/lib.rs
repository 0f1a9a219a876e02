pub mod bisim;
pub mod lang;
pub mod models;
pub mod qstate;
pub mod semantics;
