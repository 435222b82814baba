//! Front end for the model description language and the statistical-test
//! option files.

mod ast;
mod error;
mod lexer;
mod options;
mod parser;
mod preprocess;
mod printer;

pub use ast::*;
pub use error::{DslError, DslErrorKind};
pub use options::{parse_test_options, TestSpecAst};
pub use parser::{check_model, load_model, parse_model, parse_model_unchecked};
pub use preprocess::{preprocess, preprocess_with_macros, Preprocessed};
pub use printer::{expr_to_string, formula_to_string, pretty_print};
