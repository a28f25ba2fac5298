//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Two lines are expected to fail. Both concern rules that are printed in the
//! published tables but are not identities: the third term of the chain rule
//! and the compact product-of-convolutions shorthand in the retarded and
//! advanced double-triangle rows. Each has a companion line checking the
//! corrected form, which must pass.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use langreth::combinatorics::{
    binomial, commutator_slice, enumerate_shuffles, nested_bracket, nested_commutator, ShuffleClass,
};
use langreth::contour_ir::labels;
use langreth::expr_parser::parse_labeled_index;
use langreth::langreth_compiler::{all_targets, derive_rule_traced, emit_rule};
use langreth::numeric_oracle::{
    normal_form, total_contour_integral, ComponentTable, DiscreteContour,
};
use langreth::retarded_engine::{component_representation, composition_representation};
use langreth::tables::{CHAIN, CONVOLUTION, PRODUCT, TWO_POINT_TARGETS};
use langreth::{
    branch_split_oracle, derive_rule, normal_form_equal, parse_equation, parse_equations,
    parse_expression, parse_superindex, verify, Contour, ContourEquation, Format,
    LinearCombination, Naming, Result, SubFunction, VerifyConfig,
};

const TABLE_ONE_BUDGET: Duration = Duration::from_secs(1);
const CHAIN_BUDGET: Duration = Duration::from_secs(1);
const TABLE_TWO_BUDGET: Duration = Duration::from_secs(10);
const TABLE_THREE_BUDGET: Duration = Duration::from_secs(10);
const CORPUS_BUDGET: Duration = Duration::from_secs(120);

const VERIFY_TOL: f64 = 1e-8;
const VERIFY_SEEDS: [u64; 3] = [1, 2, 3];
const VERIFY_GRID: usize = 24;

const ZERO_TOL: f64 = 1e-10;
/// Grid points per branch for the structural-zero check, by arity.
const ZERO_GRIDS: [(usize, usize); 3] = [(2, 24), (3, 24), (4, 12)];
const ZERO_SEEDS: [u64; 3] = [11, 12, 13];

const EXPECTED_FAILURES: [&str; 2] = ["2", "3"];

struct Line {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn run(
    id: &'static str,
    name: &'static str,
    budget: Option<Duration>,
    f: impl FnOnce() -> Result<(bool, String)>,
) -> Line {
    let start = Instant::now();
    let (ok, mut detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    let mut pass = ok;
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail.push_str(&format!("; over budget {b:?}"));
        }
    }
    Line {
        id,
        name,
        pass,
        detail,
        elapsed,
    }
}

fn corpus() -> Vec<(String, ContourEquation)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("corpus directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "keq"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f).expect("corpus file");
        let stem = f.file_stem().unwrap().to_string_lossy().into_owned();
        for eq in parse_equations(&text).expect("corpus parses") {
            out.push((stem.clone(), eq));
        }
    }
    out
}

/// Each row against the derived rule and the oracle.
fn rows_agree(rows: &[Row]) -> Result<(usize, Vec<String>)> {
    let mut bad = Vec::new();
    for r in rows {
        let eq = parse_equation(r.equation)?;
        let target = parse_superindex(r.target, &eq)?;
        let printed = parse_expression(r.rule, &eq)?;
        let derived = derive_rule(&eq, &target)?;
        let (oracle_ok, _) = check_row(r)?;
        if !(normal_form_equal(&printed, &derived)? && oracle_ok) {
            bad.push(format!("{}^{}", eq.lhs_name, r.target));
        }
    }
    Ok((rows.len(), bad))
}

fn rows_line(rows: &[Row]) -> Result<(bool, String)> {
    let (n, bad) = rows_agree(rows)?;
    if bad.is_empty() {
        Ok((true, format!("{n} rows equal")))
    } else {
        Ok((
            false,
            format!("{}/{n} rows differ: {}", bad.len(), bad.join(", ")),
        ))
    }
}

fn golden(name: &str) -> Vec<String> {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(p)
        .expect("golden file")
        .lines()
        .map(str::to_string)
        .collect()
}

fn table_one() -> Result<(bool, String)> {
    let mut emitted = 0;
    let mut mismatched = Vec::new();
    for (eq_text, file) in [(CONVOLUTION, "convolution.txt"), (PRODUCT, "product.txt")] {
        let eq = parse_equation(eq_text)?;
        let want = golden(file);
        for (i, t) in TWO_POINT_TARGETS.iter().enumerate() {
            let target = parse_superindex(t, &eq)?;
            let expr = derive_rule(&eq, &target)?;
            let line = emit_rule(&eq, &target, &expr, Format::Text, Naming::Mixed)?;
            emitted += 1;
            if want.get(i) != Some(&line) {
                mismatched.push(line);
            }
        }
    }
    let (n, bad) = rows_agree(&CONVOLUTION_ROWS)?;
    let (m, bad_p) = rows_agree(&PRODUCT_ROWS)?;
    let ok = emitted == 14 && mismatched.is_empty() && bad.is_empty() && bad_p.is_empty();
    Ok((
        ok,
        format!(
            "{emitted} rules emitted, {} golden mismatches, {} of {} printed rows (brace alternatives included) differ",
            mismatched.len(),
            bad.len() + bad_p.len(),
            n + m
        ),
    ))
}

fn chain(printed: &str) -> Result<(bool, String)> {
    let eq = parse_equation(CHAIN)?.with_contour(Contour::Keldysh);
    let target = parse_superindex(">", &eq)?;
    let derived = derive_rule(&eq, &target)?;
    let want = parse_expression(printed, &eq)?;
    let oracle = branch_split_oracle(&eq, &target)?;
    let identity = normal_form(&want)?.difference(&oracle).is_empty();
    let exact = derived == want;
    Ok((
        exact,
        format!(
            "canonical match {exact}; rule is {}an identity",
            if identity { "" } else { "not " }
        ),
    ))
}

fn worked_examples() -> Result<(bool, String)> {
    let integrand = |ext: &str, int: &str, args: &str| ContourEquation {
        lhs_name: "D".into(),
        external: labels(ext),
        internal: labels(int),
        product: vec![SubFunction::new("X", args)],
        contour: Contour::Keldysh,
    };
    let sorted = |v: Vec<String>| {
        let mut v = v;
        v.sort();
        v
    };
    let strs = |xs: &[&str]| sorted(xs.iter().map(|s| s.to_string()).collect());
    let d = integrand("ad", "bc", "abcd");
    let greater = component_representation(&d, &parse_labeled_index("ad")?)?;
    let lesser = component_representation(&d, &parse_labeled_index("da")?)?;
    let e = integrand("abcde", "fg", "abcdefg");
    let retarded = composition_representation(&e, &parse_labeled_index("R(a,b)R(c,de)")?)?;
    let render = |v: &[langreth::retarded_engine::Composition]| {
        sorted(v.iter().map(|c| c.index.to_string()).collect())
    };
    let checks = [
        (
            render(&greater),
            strs(&["R(a,bc)d", "R(a,b)R(d,c)", "R(a,c)R(d,b)", "aR(d,bc)"]),
        ),
        (
            render(&lesser),
            strs(&["dR(a,bc)", "R(d,c)R(a,b)", "R(d,b)R(a,c)", "R(d,bc)a"]),
        ),
        (
            render(&retarded),
            strs(&[
                "R(a,bfg)R(c,de)",
                "R(a,bf)R(c,deg)",
                "R(a,bg)R(c,def)",
                "R(a,b)R(c,defg)",
            ]),
        ),
    ];
    let ok = checks.iter().all(|(g, w)| g == w);
    let counts: Vec<usize> = checks.iter().map(|(g, _)| g.len()).collect();
    Ok((ok, format!("term sets equal, sizes {counts:?}")))
}

fn combinatorial_counts() -> Result<(bool, String)> {
    let mut shuffle_cases = 0;
    for m in 0..=8 {
        for k in 0..=m {
            for rev in [false, true] {
                if enumerate_shuffles(ShuffleClass::new(m, k, rev)).len() != binomial(m, k) {
                    return Ok((
                        false,
                        format!("shuffle count wrong at m={m} k={k} reversed={rev}"),
                    ));
                }
                shuffle_cases += 1;
            }
        }
    }
    for n in 1..=8usize {
        let items: Vec<usize> = (0..n).collect();
        if nested_commutator(&items).len() != 1 << (n - 1) {
            return Ok((false, format!("commutator size wrong at n={n}")));
        }
        for k in 0..n {
            if commutator_slice(&items, k)?.len() != binomial(n - 1, k) {
                return Ok((false, format!("slice size wrong at n={n} k={k}")));
            }
        }
    }
    let atom = |c: char| LinearCombination::new(vec![(1, vec![c])]);
    let (x, y, z) = (atom('x'), atom('y'), atom('z'));
    let mut jacobi = nested_bracket(&[x.clone(), y.clone(), z.clone()]);
    jacobi.extend(nested_bracket(&[y.clone(), z.clone(), x.clone()]));
    jacobi.extend(nested_bracket(&[z, x, y]));
    let jacobi_zero = jacobi.canonical().is_zero();
    Ok((
        jacobi_zero,
        format!("{shuffle_cases} shuffle classes, commutators n<=8, Jacobi zero {jacobi_zero}"),
    ))
}

fn oracle_equivalence() -> Result<(bool, String)> {
    let cfg = VerifyConfig {
        seeds: VERIFY_SEEDS.to_vec(),
        grid: VERIFY_GRID,
        tol: VERIFY_TOL,
        ..VerifyConfig::default()
    };
    let mut n = 0;
    let mut failed = Vec::new();
    let mut worst: f64 = 0.0;
    for (file, eq) in corpus() {
        for target in all_targets(&eq) {
            let rep = verify(&eq, &target, &cfg)?;
            n += 1;
            worst = rep
                .numeric
                .iter()
                .map(|r| r.max_error)
                .fold(worst, f64::max);
            if !rep.pass {
                failed.push(format!("{file}:{}^{{{target}}}", eq.lhs_name));
            }
        }
    }
    Ok((
        failed.is_empty(),
        format!("{n} targets, worst numeric error {worst:.2e}, failures {failed:?}"),
    ))
}

fn structural_zero() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (arity, grid) in ZERO_GRIDS {
        let args: String = ('a'..='z').take(arity).collect();
        let f = SubFunction::new("X", &args);
        let g = DiscreteContour::new(grid);
        for seed in ZERO_SEEDS {
            let tables = ComponentTable::new(std::slice::from_ref(&f), seed);
            let (sum, scale) = total_contour_integral(&f, &tables, &g)?;
            worst = worst.max(sum.norm() / scale);
        }
    }
    Ok((
        worst < ZERO_TOL,
        format!("worst |integral|/scale {worst:.2e}"),
    ))
}

fn vanishing_soundness() -> Result<(bool, String)> {
    let mut checked = 0;
    let mut nonzero = Vec::new();
    for (file, eq) in corpus() {
        for target in all_targets(&eq) {
            for d in derive_rule_traced(&eq, &target)?.discarded {
                let sub = ContourEquation {
                    lhs_name: "Z".into(),
                    external: d.index.labels(),
                    internal: Vec::new(),
                    product: d.functions.clone(),
                    contour: eq.contour,
                };
                let nf = branch_split_oracle(&sub, &d.index)?.restricted_to(&d.index);
                checked += 1;
                if !nf.is_empty() {
                    nonzero.push(format!(
                        "{file}: {} over {:?} for {}",
                        d.index,
                        d.functions
                            .iter()
                            .map(|f| f.to_string())
                            .collect::<Vec<_>>(),
                        target
                    ));
                }
            }
        }
    }
    Ok((
        checked > 0 && nonzero.is_empty(),
        format!("{checked} discarded compositions, non-empty normal form: {nonzero:?}"),
    ))
}

#[test]
fn acceptance() {
    let lines = vec![
        run(
            "1",
            "convolution and product table",
            Some(TABLE_ONE_BUDGET),
            table_one,
        ),
        run("2", "chain rule, printed form", Some(CHAIN_BUDGET), || {
            chain(CHAIN_PRINTED)
        }),
        run(
            "2c",
            "chain rule, corrected third term",
            Some(CHAIN_BUDGET),
            || chain(CHAIN_CORRECTED),
        ),
        run(
            "3",
            "double-triangle table, printed shorthand",
            Some(TABLE_TWO_BUDGET),
            || {
                let mut rows: Vec<Row> = DOUBLE_TRIANGLE_ROWS.into_iter().collect();
                rows.extend(TRIANGLE_ROWS);
                rows_line(&rows)
            },
        ),
        run(
            "3c",
            "double-triangle table, product shorthand by the product rule",
            Some(TABLE_TWO_BUDGET),
            || {
                let mut rows: Vec<Row> = DOUBLE_TRIANGLE_ROWS
                    .into_iter()
                    .filter(|r| r.target != "R" && r.target != "A")
                    .collect();
                rows.extend(DOUBLE_TRIANGLE_CORRECTED);
                rows.extend(TRIANGLE_ROWS);
                rows_line(&rows)
            },
        ),
        run("4", "vertex table", Some(TABLE_THREE_BUDGET), || {
            rows_line(&VERTEX_ROWS)
        }),
        run("5", "worked expansion examples", None, worked_examples),
        run("6", "combinatorial counts", None, combinatorial_counts),
        run(
            "7",
            "oracle equivalence over the corpus",
            Some(CORPUS_BUDGET),
            oracle_equivalence,
        ),
        run(
            "8",
            "structural zero of total contour integrals",
            None,
            structural_zero,
        ),
        run("9", "vanishing soundness", None, vanishing_soundness),
    ];
    for l in &lines {
        println!(
            "ACCEPTANCE {:<3} {} {} [{:.3}s] {}",
            l.id,
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.elapsed.as_secs_f64(),
            l.detail
        );
    }
    for l in &lines {
        if EXPECTED_FAILURES.contains(&l.id) {
            assert!(
                !l.pass,
                "criterion {} now passes; update the expected failures",
                l.id
            );
        } else {
            assert!(l.pass, "criterion {} failed: {}", l.id, l.detail);
        }
    }
}

const CHAIN_PRINTED: &str = "∫ A^{R(a,c)} B^{cd} C^{R(b,d)} + ∫ A^{R(a,c)} B^{R(c,d)} C^{db} + ∫ A^{ac} B^{R(c,d)} C^{R(d,b)}";
const CHAIN_CORRECTED: &str = "∫ A^{R(a,c)} B^{cd} C^{R(b,d)} + ∫ A^{R(a,c)} B^{R(c,d)} C^{db} + ∫ A^{ac} B^{R(d,c)} C^{R(b,d)}";
