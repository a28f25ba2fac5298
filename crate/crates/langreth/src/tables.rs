//! Built-in structures and rendering of their rule tables.

use std::fmt::Write as _;

use crate::contour_ir::{Contour, ContourEquation, Label};
use crate::error::Result;
use crate::expr_parser::{parse_equation, parse_superindex};
use crate::langreth_compiler::{derive_rule, emit_rule, Format, Naming};

pub const CONVOLUTION: &str = "D[a,b] = int{c} : A[a,c]*B[c,b]";
pub const PRODUCT: &str = "D[a,b] = int{} : A[a,b]*B[b,a]";
pub const CHAIN: &str = "E[a,b] = int{c,d} : A[a,c]*B[c,d]*C[d,b]";
pub const DOUBLE_TRIANGLE: &str = "G[a,b] = int{c,d} : A[a,c]*B[c,b]*C[c,d]*D[a,d]*E[d,b]";
pub const TRIANGLE: &str = "F[a] = int{b,c} : A[a,b]*B[a,c]*C[b,c]";
pub const VERTEX: &str = "H[a,b] = int{c,d} : A[a,c]*B[a,d]*C[d,b,c]";

/// Targets of a two-external table, in row order.
pub const TWO_POINT_TARGETS: [&str; 7] = [">", "<", "R", "A", "⌉", "⌈", "M"];

/// One block of a table: a structure and the targets derived for it.
#[derive(Clone, Debug)]
pub struct Block {
    pub equation: &'static str,
    pub targets: Vec<&'static str>,
}

#[derive(Clone, Debug)]
pub struct TableSpec {
    pub key: &'static str,
    pub title: &'static str,
    pub blocks: Vec<Block>,
}

pub fn builtin_tables() -> Vec<TableSpec> {
    let two = || TWO_POINT_TARGETS.to_vec();
    vec![
        TableSpec {
            key: "convolution",
            title: "Convolutions and products",
            blocks: vec![
                Block {
                    equation: CONVOLUTION,
                    targets: two(),
                },
                Block {
                    equation: PRODUCT,
                    targets: two(),
                },
            ],
        },
        TableSpec {
            key: "double-triangle",
            title: "Double-triangle structure",
            blocks: vec![
                Block {
                    equation: DOUBLE_TRIANGLE,
                    targets: two(),
                },
                Block {
                    equation: TRIANGLE,
                    targets: vec!["1"],
                },
            ],
        },
        TableSpec {
            key: "vertex",
            title: "Vertex structure",
            blocks: vec![Block {
                equation: VERTEX,
                targets: two(),
            }],
        },
    ]
}

fn latex_equation(eq: &ContourEquation) -> String {
    let list = |ls: &[Label]| ls.iter().map(|l| l.0).collect::<String>();
    let mut s = format!("{}_{{{}}} = ", eq.lhs_name, list(&eq.external));
    if !eq.internal.is_empty() {
        let _ = write!(s, "\\int_{{{}}} ", list(&eq.internal));
    }
    let fs: Vec<String> = eq
        .product
        .iter()
        .map(|f| format!("{}_{{{}}}", f.name, list(&f.args)))
        .collect();
    s + &fs.join(" ")
}

/// Renders one table. On the Keldysh contour rows with Matsubara externals
/// are left out and imaginary-time terms vanish.
pub fn render_table(spec: &TableSpec, contour: Contour, format: Format) -> Result<String> {
    let mut out = String::new();
    let latex = format == Format::Latex;
    if latex {
        let _ = writeln!(out, "% {}", spec.title);
        let _ = writeln!(out, "\\begin{{tabular}}{{@{{}}l@{{}}}}");
        let _ = writeln!(out, "\\toprule");
    } else {
        let _ = writeln!(out, "== {} ==", spec.title);
    }
    for (bi, block) in spec.blocks.iter().enumerate() {
        let eq = parse_equation(block.equation)?.with_contour(contour);
        if latex {
            if bi > 0 {
                let _ = writeln!(out, "\\midrule");
            }
            let _ = writeln!(out, "${}$ \\\\", latex_equation(&eq));
            let _ = writeln!(out, "\\midrule");
        } else {
            let _ = writeln!(out, "{eq}");
        }
        for t in &block.targets {
            let target = parse_superindex(t, &eq)?;
            if contour == Contour::Keldysh && !target.matsubara().is_empty() {
                continue;
            }
            let expr = derive_rule(&eq, &target)?;
            let line = emit_rule(&eq, &target, &expr, format, Naming::Mixed)?;
            if latex {
                let _ = writeln!(out, "${line}$ \\\\");
            } else {
                let _ = writeln!(out, "  {line}");
            }
        }
    }
    if latex {
        let _ = writeln!(out, "\\bottomrule");
        let _ = writeln!(out, "\\end{{tabular}}");
    }
    Ok(out)
}

/// All tables, or those whose key matches `only`.
pub fn render_tables(only: Option<&str>, contour: Contour, format: Format) -> Result<String> {
    let mut parts = Vec::new();
    for spec in builtin_tables() {
        if only.is_none_or(|k| k == spec.key) {
            parts.push(render_table(&spec, contour, format)?);
        }
    }
    Ok(parts.join("\n"))
}
