//! Generalized Langreth rules: a compiler from contour-integral equations over
//! products of multi-point Keldysh functions to real-time expressions, with an
//! exact branch-splitting oracle and a discrete-contour numeric verifier.

pub mod combinatorics;
pub mod contour_ir;
pub mod error;
pub mod expr_parser;
pub mod langreth_compiler;
pub mod numeric_oracle;
pub mod retarded_engine;
pub mod tables;

pub use contour_ir::{
    canonicalize, connectivity, validate_equation, Contour, ContourEquation, Factor, IndexItem,
    Label, LinearCombination, RealTimeExpression, RealTimeTerm, Scalar, SubFunction, SuperIndex,
};
pub use error::{Error, Result, SourceSpan};
pub use expr_parser::{
    parse_equation, parse_equations, parse_expression, parse_rule, parse_superindex,
};
pub use langreth_compiler::{derive_rule, emit, Format, Naming};
pub use numeric_oracle::{
    branch_split_oracle, normal_form_equal, verify, VerifyConfig, VerifyReport,
};
