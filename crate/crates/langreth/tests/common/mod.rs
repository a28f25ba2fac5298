//! Published rule tables, transcribed with bracket shorthands expanded.
#![allow(dead_code)]

use langreth::numeric_oracle::{branch_split_oracle, normal_form};
use langreth::tables::{CONVOLUTION, DOUBLE_TRIANGLE, PRODUCT, TRIANGLE, VERTEX};
use langreth::{parse_equation, parse_expression, parse_superindex, Result};

pub struct Row {
    pub equation: &'static str,
    pub target: &'static str,
    pub rule: &'static str,
}

const fn row(equation: &'static str, target: &'static str, rule: &'static str) -> Row {
    Row {
        equation,
        target,
        rule,
    }
}

pub const CONVOLUTION_ROWS: [Row; 7] = [
    row(CONVOLUTION, ">", "∫ A^R B^> + ∫ A^> B^A + ∫ A^⌉ B^⌈"),
    row(CONVOLUTION, "<", "∫ A^R B^< + ∫ A^< B^A + ∫ A^⌉ B^⌈"),
    row(CONVOLUTION, "R", "∫ A^R B^R"),
    row(CONVOLUTION, "A", "∫ A^A B^A"),
    row(CONVOLUTION, "⌉", "∫ A^⌉ B^M + ∫ A^R B^⌉"),
    row(CONVOLUTION, "⌈", "∫ A^⌈ B^A + ∫ A^M B^⌈"),
    row(CONVOLUTION, "M", "∫ A^M B^M"),
];

/// Retarded and advanced rows appear twice, once per alternative.
pub const PRODUCT_ROWS: [Row; 9] = [
    row(PRODUCT, ">", "A^> B^<"),
    row(PRODUCT, "<", "A^< B^>"),
    row(PRODUCT, "R", "A^R B^< + A^< B^A"),
    row(PRODUCT, "R", "A^R B^> + A^> B^A"),
    row(PRODUCT, "A", "A^A B^< + A^< B^R"),
    row(PRODUCT, "A", "A^A B^> + A^> B^R"),
    row(PRODUCT, "⌉", "A^⌉ B^⌈"),
    row(PRODUCT, "⌈", "A^⌈ B^⌉"),
    row(PRODUCT, "M", "A^M B^M"),
];

pub const DOUBLE_TRIANGLE_ROWS: [Row; 7] = [
    row(
        DOUBLE_TRIANGLE,
        ">",
        "∫ A^⌉ B^⌈ C^M D^⌉ E^⌈ + ∫ (A^R B^> + A^> B^A) C^⌉ D^⌉ E^⌈ + ∫ A^⌉ B^⌈ C^⌈ (D^R E^> + D^> E^A) \
         + ∫ (A^R B^> + A^> B^A) C^> (D^R E^> + D^> E^A) + ∫ (A^R B^> + A^> B^A) C^R (D^< - D^A) E^> \
         + ∫ A^> (B^< + B^R) C^A (D^R E^> + D^> E^A)",
    ),
    row(
        DOUBLE_TRIANGLE,
        "<",
        "∫ A^⌉ B^⌈ C^M D^⌉ E^⌈ + ∫ (A^R B^< + A^< B^A) C^⌉ D^⌉ E^⌈ + ∫ A^⌉ B^⌈ C^⌈ (D^R E^< + D^< E^A) \
         + ∫ (A^R B^< + A^< B^A) C^> (D^R E^< + D^< E^A) + ∫ (A^R B^< + A^< B^A) C^R D^< (E^> - E^R) \
         + ∫ (A^> + A^A) B^< C^A (D^R E^< + D^< E^A)",
    ),
    row(
        DOUBLE_TRIANGLE,
        "R",
        "∫ A^R B^R C^⌉ D^⌉ E^⌈ + ∫ A^⌉ B^⌈ C^⌈ D^R E^R \
         + ∫ (A^R B^R (D^R E^< + D^< E^A) + (A^R B^< + A^< B^A) D^A E^A) C^> \
         + ∫ A^R B^R C^R D^< E^> + ∫ A^> B^< C^A D^R E^R + ∫ A^> D^R C^A B^R E^> + ∫ B^< A^R C^R E^R D^<",
    ),
    row(
        DOUBLE_TRIANGLE,
        "A",
        "∫ A^A B^A C^⌉ D^⌉ E^⌈ + ∫ A^⌉ B^⌈ C^⌈ D^A E^A \
         + ∫ (A^A B^A (D^R E^< + D^< E^A) + (A^R B^< + A^< B^A) D^R E^R) C^> \
         + ∫ A^A B^A C^R D^< E^> + ∫ A^> B^< C^A D^A E^A + ∫ A^> D^A C^R B^A E^> + ∫ B^< A^A C^A E^A D^<",
    ),
    row(
        DOUBLE_TRIANGLE,
        "⌉",
        "∫ A^⌉ B^M C^M D^⌉ E^M + ∫ A^⌉ B^M C^⌈ D^R E^⌉ + ∫ A^R B^⌉ C^⌉ D^⌉ E^M \
         + ∫ (A^R D^> C^R + A^< D^R C^A + A^R D^R C^<) B^⌉ E^⌉",
    ),
    row(
        DOUBLE_TRIANGLE,
        "⌈",
        "∫ A^M B^⌈ C^M D^M E^⌈ + ∫ A^M B^⌈ C^⌈ D^⌈ E^A + ∫ A^⌈ B^A C^⌉ D^M E^⌈ \
         + ∫ A^⌈ D^⌈ (B^A E^< C^R + B^> E^A C^A + B^A E^A C^<)",
    ),
    row(DOUBLE_TRIANGLE, "M", "∫ A^M B^M C^M D^M E^M"),
];

/// The retarded and advanced double-triangle rows with the product of the two
/// convolutions worked out by the two-point product rule.
pub const DOUBLE_TRIANGLE_CORRECTED: [Row; 2] = [
    row(
        DOUBLE_TRIANGLE,
        "R",
        "∫ A^R B^R C^⌉ D^⌉ E^⌈ + ∫ A^⌉ B^⌈ C^⌈ D^R E^R \
         + ∫ (A^R B^R (D^R E^> + D^> E^A) + (A^R B^< + A^< B^A) D^R E^R) C^> \
         + ∫ A^R B^R C^R D^< E^> + ∫ A^> B^< C^A D^R E^R + ∫ A^> D^R C^A B^R E^> + ∫ B^< A^R C^R E^R D^<",
    ),
    row(
        DOUBLE_TRIANGLE,
        "A",
        "∫ A^A B^A C^⌉ D^⌉ E^⌈ + ∫ A^⌉ B^⌈ C^⌈ D^A E^A \
         + ∫ (A^A B^A (D^R E^> + D^> E^A) + (A^R B^< + A^< B^A) D^A E^A) C^> \
         + ∫ A^A B^A C^R D^< E^> + ∫ A^> B^< C^A D^A E^A + ∫ A^> D^A C^R B^A E^> + ∫ B^< A^A C^A E^A D^<",
    ),
];

pub const TRIANGLE_ROWS: [Row; 2] = [
    row(
        TRIANGLE,
        "1",
        "∫ A^⌉ B^⌉ C^M + ∫ A^⌉ B^R C^⌈ + ∫ A^R B^⌉ C^⌉ + ∫ (A^R B^> C^R + A^< B^R C^A + A^R B^R C^<)",
    ),
    row(
        TRIANGLE,
        "1",
        "∫ A^⌉ B^⌉ C^M + ∫ A^⌉ B^R C^⌈ + ∫ A^R B^⌉ C^⌉ + ∫ (A^R B^< C^R + A^> B^R C^A + A^R B^R C^>)",
    ),
];

pub const VERTEX_ROWS: [Row; 7] = [
    row(
        VERTEX,
        ">",
        "∫ A^⌉ B^⌉ C^{M(cd)b} + ∫ A^> B^⌉ C^{M(d)R(b,c)} + ∫ A^R B^⌉ C^{M(d)cb} + ∫ A^⌉ B^> C^{M(c)R(b,d)} \
         + ∫ A^⌉ B^R C^{M(c)db} + ∫ A^> B^R C^{R(d,c)b} + ∫ A^R B^< C^{R(c,d)b} + ∫ A^R B^> C^{cR(b,d)} \
         + ∫ A^> B^R C^{dR(b,c)} + ∫ A^R B^R C^{cdb} + ∫ A^> B^> C^{R(b,cd)}",
    ),
    row(
        VERTEX,
        "<",
        "∫ A^⌉ B^⌉ C^{M(cd)b} + ∫ A^< B^⌉ C^{M(d)R(b,c)} + ∫ A^R B^⌉ C^{M(d)bc} + ∫ A^⌉ B^< C^{M(c)R(b,d)} \
         + ∫ A^⌉ B^R C^{M(c)bd} + ∫ A^> B^R C^{bR(d,c)} + ∫ A^< B^R C^{R(b,c)d} + ∫ A^R B^< C^{bR(c,d)} \
         + ∫ A^R B^< C^{R(b,d)c} + ∫ A^R B^R C^{bcd} + ∫ A^< B^< C^{R(b,cd)}",
    ),
    row(
        VERTEX,
        "R",
        "∫ A^R B^⌉ C^{M(d)R(c,b)} + ∫ A^⌉ B^R C^{M(c)R(d,b)} + ∫ A^> B^R C^{R(d,bc)} + ∫ A^R B^< C^{R(c,bd)} \
         + ∫ A^R B^R (C^{cR(d,b)} + C^{R(c,b)d})",
    ),
    row(
        VERTEX,
        "A",
        "∫ A^A B^⌉ C^{M(d)R(b,c)} + ∫ A^⌉ B^A C^{M(c)R(b,d)} + ∫ (A^> B^A + A^A B^<) C^{R(b,cd)} \
         + ∫ A^R B^A C^{cR(b,d)} + ∫ A^A B^R C^{R(b,c)d}",
    ),
    row(
        VERTEX,
        "⌉",
        "∫ A^⌉ B^⌉ C^{M(bcd)} + ∫ A^⌉ B^R C^{M(bc)d} + ∫ A^R B^⌉ C^{M(bd)c} + ∫ A^R B^< C^{M(b)R(c,d)} \
         + ∫ A^> B^R C^{M(b)R(d,c)} + ∫ A^R B^R C^{M(b)cd}",
    ),
    row(
        VERTEX,
        "⌈",
        "∫ A^M B^M C^{M(cd)b} + ∫ A^M B^⌈ C^{M(c)R(b,d)} + ∫ A^⌈ B^M C^{M(d)R(b,c)} + ∫ A^⌈ B^⌈ C^{R(b,cd)}",
    ),
    row(VERTEX, "M", "∫ A^M B^M C^{M(bcd)}"),
];

/// Symbolic agreement of a row with the branch-splitting oracle, and the
/// number of mismatching normal-form keys.
pub fn check_row(r: &Row) -> Result<(bool, usize)> {
    let eq = parse_equation(r.equation)?;
    let target = parse_superindex(r.target, &eq)?;
    let expr = parse_expression(r.rule, &eq)?;
    let oracle = branch_split_oracle(&eq, &target)?.restricted_to(&target);
    let mine = normal_form(&expr)?.restricted_to(&target);
    let d = mine.difference(&oracle).len();
    Ok((d == 0, d))
}
