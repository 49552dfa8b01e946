//! Bundled fixtures: the two six-element patterns on `[2]³`, the five-term
//! ε-decomposition of `M(Λ_ex)`, Strassen's decomposition of `⟨2,2,2⟩` and a
//! two-factor pattern for the capacity region.
//!
//! Tensor variables follow [`crate::tensor::SparseTensor::from_pattern`]:
//! `x_{i,j}` is index `(i-1)·2 + (j-1)` and likewise for `y_{j,k}`, `z_{k,i}`.

use crate::capacity::KPattern;
use crate::pattern::Pattern;
use crate::tensor::{EpsDecomposition, RankDecomposition};

pub const LAMBDA_EX_JSON: &str = include_str!("../fixtures/lambda_ex.json");
pub const LAMBDA_BCRL_JSON: &str = include_str!("../fixtures/lambda_bcrl.json");
pub const REMARK_BINARY_JSON: &str = include_str!("../fixtures/remark_binary.json");
pub const EXAMPLE_BORDER_JSON: &str = include_str!("../fixtures/example_border.json");
pub const STRASSEN_JSON: &str = include_str!("../fixtures/strassen.json");

/// `{(1,1,2),(1,2,1),(2,1,1),(2,2,1),(2,1,2),(1,2,2)}`: border rank 5.
pub fn lambda_ex() -> Pattern {
    serde_json::from_str(LAMBDA_EX_JSON).expect("bundled fixture")
}

/// `{(1,1,1),(1,1,2),(1,2,1),(1,2,2),(2,1,1),(2,1,2)}` (Bini–Capovani–Romani–Lotti).
pub fn lambda_bcrl() -> Pattern {
    serde_json::from_str(LAMBDA_BCRL_JSON).expect("bundled fixture")
}

/// `{(0,0),(0,1),(1,0)}` with two factors.
pub fn remark_binary() -> KPattern {
    serde_json::from_str(REMARK_BINARY_JSON).expect("bundled fixture")
}

/// Five-term ε-decomposition with `ε³ M(Λ_ex)` as lowest-order term.
pub fn example_border() -> EpsDecomposition {
    EpsDecomposition::from_json_str(EXAMPLE_BORDER_JSON).expect("bundled fixture")
}

/// Strassen's seven-term decomposition of `⟨2,2,2⟩`.
pub fn strassen() -> RankDecomposition {
    RankDecomposition::from_json_str(STRASSEN_JSON).expect("bundled fixture")
}

/// Looks up a fixture by name (`lambda_ex`, `lambda_bcrl`, `remark_binary`,
/// `example_border`, `strassen`).
pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "lambda_ex" => Some(LAMBDA_EX_JSON),
        "lambda_bcrl" => Some(LAMBDA_BCRL_JSON),
        "remark_binary" => Some(REMARK_BINARY_JSON),
        "example_border" => Some(EXAMPLE_BORDER_JSON),
        "strassen" => Some(STRASSEN_JSON),
        _ => None,
    }
}
