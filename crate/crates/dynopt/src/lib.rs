//! Library backing the `dynopt` command-line tool.

pub mod run;
