//! Instance files, result records and subcommand bodies behind `rdlp`.

pub mod commands;
pub mod instance;
pub mod record;
