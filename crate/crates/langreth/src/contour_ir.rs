//! Core data model: labels, super-indices, products of sub-functions,
//! contour equations and real-time expressions.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// A time-argument label. Labels are single lowercase ASCII letters so that
/// super-index strings such as `M(ab)R(c,de)` stay unambiguous.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Label(pub char);

impl Label {
    pub fn new(c: char) -> Option<Self> {
        c.is_ascii_lowercase().then_some(Label(c))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 1-based argument position used by háček super-indices.
pub type Pos = u8;

/// Builds labels from a string of letters, e.g. `labels("abc")`.
pub fn labels(s: &str) -> Vec<Label> {
    s.chars().map(Label).collect()
}

/// One entry of a super-index.
///
/// Variant order fixes the canonical sort: Matsubara sets first, then
/// retarded sets, then plain arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum IndexItem<T = Label> {
    Matsubara(Vec<T>),
    Retarded {
        top: Box<IndexItem<T>>,
        rest: Vec<IndexItem<T>>,
    },
    Plain(T),
}

impl<T: Copy + Ord> IndexItem<T> {
    /// Retarded set with the `R(e, ∅) → e` normalization applied.
    pub fn retarded(top: IndexItem<T>, rest: Vec<IndexItem<T>>) -> Self {
        if rest.is_empty() {
            top
        } else {
            IndexItem::Retarded {
                top: Box::new(top),
                rest,
            }
        }
    }

    /// Label whose time orders this item on the contour.
    pub fn top_label(&self) -> Option<T> {
        match self {
            IndexItem::Plain(x) => Some(*x),
            IndexItem::Retarded { top, .. } => top.top_label(),
            IndexItem::Matsubara(_) => None,
        }
    }

    pub fn collect_labels(&self, out: &mut Vec<T>) {
        match self {
            IndexItem::Plain(x) => out.push(*x),
            IndexItem::Matsubara(xs) => out.extend_from_slice(xs),
            IndexItem::Retarded { top, rest } => {
                top.collect_labels(out);
                for r in rest {
                    r.collect_labels(out);
                }
            }
        }
    }

    pub fn labels(&self) -> Vec<T> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    pub fn is_retarded(&self) -> bool {
        matches!(self, IndexItem::Retarded { .. })
    }

    pub fn map<U: Copy + Ord>(&self, f: &impl Fn(T) -> U) -> IndexItem<U> {
        match self {
            IndexItem::Plain(x) => IndexItem::Plain(f(*x)),
            IndexItem::Matsubara(xs) => {
                let mut v: Vec<U> = xs.iter().map(|x| f(*x)).collect();
                v.sort();
                IndexItem::Matsubara(v)
            }
            IndexItem::Retarded { top, rest } => IndexItem::Retarded {
                top: Box::new(top.map(f)),
                rest: rest.iter().map(|r| r.map(f)).collect(),
            },
        }
    }
}

impl<T: fmt::Display> fmt::Display for IndexItem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexItem::Plain(x) => write!(f, "{x}"),
            IndexItem::Matsubara(xs) => {
                write!(f, "M(")?;
                for x in xs {
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            IndexItem::Retarded { top, rest } => {
                write!(f, "R({top},")?;
                for r in rest {
                    write!(f, "{r}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A component or composition name: an optional leading Matsubara set
/// followed by plain arguments and (possibly nested) retarded sets.
///
/// `SuperIndex<Label>` is the labeled form, `SuperIndex<Pos>` the háček form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SuperIndex<T = Label> {
    pub items: Vec<IndexItem<T>>,
}

impl<T: Copy + Ord + fmt::Display> SuperIndex<T> {
    /// Builds a super-index, sorting Matsubara sets and dropping an empty one.
    pub fn new(items: Vec<IndexItem<T>>) -> Self {
        let items = items
            .into_iter()
            .filter_map(|it| match it {
                IndexItem::Matsubara(mut xs) => {
                    xs.sort();
                    (!xs.is_empty()).then_some(IndexItem::Matsubara(xs))
                }
                other => Some(other),
            })
            .collect();
        SuperIndex { items }
    }

    /// Plain component in the given contour order (latest first).
    pub fn word(order: &[T]) -> Self {
        SuperIndex {
            items: order.iter().map(|&x| IndexItem::Plain(x)).collect(),
        }
    }

    pub fn with_matsubara(mats: Vec<T>, body: Vec<IndexItem<T>>) -> Self {
        let mut items = vec![IndexItem::Matsubara(mats)];
        items.extend(body);
        SuperIndex::new(items)
    }

    pub fn matsubara(&self) -> &[T] {
        match self.items.first() {
            Some(IndexItem::Matsubara(xs)) => xs,
            _ => &[],
        }
    }

    /// Items after the Matsubara head.
    pub fn body(&self) -> &[IndexItem<T>] {
        match self.items.first() {
            Some(IndexItem::Matsubara(_)) => &self.items[1..],
            _ => &self.items,
        }
    }

    pub fn labels(&self) -> Vec<T> {
        let mut out = Vec::new();
        for it in &self.items {
            it.collect_labels(&mut out);
        }
        out
    }

    /// True when no retarded sets appear (a single component).
    pub fn is_component(&self) -> bool {
        !self.items.iter().any(IndexItem::is_retarded)
    }

    /// Checks the Matsubara-head and distinct-label invariants.
    pub fn validate(&self) -> Result<()> {
        for (i, it) in self.items.iter().enumerate() {
            if i > 0 && matches!(it, IndexItem::Matsubara(_)) {
                return Err(Error::CoverError(format!(
                    "Matsubara set must lead the super-index `{self}`"
                )));
            }
            if let IndexItem::Retarded { .. } = it {
                if contains_matsubara(it) {
                    return Err(Error::CoverError(format!(
                        "Matsubara set nested in a retarded set in `{self}`"
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for x in self.labels() {
            if !seen.insert(x) {
                return Err(Error::CoverError(format!(
                    "label `{x}` repeats in `{self}`"
                )));
            }
        }
        Ok(())
    }

    pub fn map<U: Copy + Ord + fmt::Display>(&self, f: impl Fn(T) -> U) -> SuperIndex<U> {
        SuperIndex::new(self.items.iter().map(|it| it.map(&f)).collect())
    }
}

fn contains_matsubara<T>(it: &IndexItem<T>) -> bool {
    match it {
        IndexItem::Matsubara(_) => true,
        IndexItem::Plain(_) => false,
        IndexItem::Retarded { top, rest } => {
            contains_matsubara(top) || rest.iter().any(contains_matsubara)
        }
    }
}

impl SuperIndex<Label> {
    /// Háček form relative to a function's argument list.
    pub fn to_hacek(&self, args: &[Label]) -> Result<SuperIndex<Pos>> {
        self.check_cover(args)?;
        let pos: HashMap<Label, Pos> = args
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, (i + 1) as Pos))
            .collect();
        Ok(self.map(|l| pos[&l]))
    }

    /// Labeled form from a háček super-index and an argument list.
    pub fn from_hacek(h: &SuperIndex<Pos>, args: &[Label]) -> Result<SuperIndex<Label>> {
        for p in h.labels() {
            if p == 0 || p as usize > args.len() {
                return Err(Error::RangeError(format!(
                    "position {p} outside 1..={}",
                    args.len()
                )));
            }
        }
        let out = h.map(|p| args[p as usize - 1]);
        out.check_cover(args)?;
        Ok(out)
    }

    /// Verifies the index covers exactly `args`.
    pub fn check_cover(&self, args: &[Label]) -> Result<()> {
        self.validate()?;
        let covered = self.labels();
        if covered.len() != args.len() {
            return Err(Error::ArityMismatch {
                expected: args.len(),
                found: covered.len(),
            });
        }
        for l in covered {
            if !args.contains(&l) {
                return Err(Error::UnknownLabel(l));
            }
        }
        Ok(())
    }
}

impl<T: fmt::Display> fmt::Display for SuperIndex<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for it in &self.items {
            write!(f, "{it}")?;
        }
        Ok(())
    }
}

/// A factor of the integrand, `name[args]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SubFunction {
    pub name: String,
    pub args: Vec<Label>,
}

impl SubFunction {
    pub fn new(name: &str, args: &str) -> Self {
        SubFunction {
            name: name.to_string(),
            args: labels(args),
        }
    }
}

impl fmt::Display for SubFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.name)?;
        write_label_list(f, &self.args)?;
        write!(f, "]")
    }
}

fn write_label_list(f: &mut fmt::Formatter<'_>, ls: &[Label]) -> fmt::Result {
    for (i, l) in ls.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{l}")?;
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum Contour {
    /// Forward and backward real-time branches only.
    Keldysh,
    /// Real-time branches plus the vertical Matsubara branch.
    #[default]
    Extended,
}

/// `lhs[external] = ∫{internal} product` on a chosen contour.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ContourEquation {
    pub lhs_name: String,
    pub external: Vec<Label>,
    pub internal: Vec<Label>,
    pub product: Vec<SubFunction>,
    pub contour: Contour,
}

impl ContourEquation {
    pub fn all_labels(&self) -> Vec<Label> {
        let mut v = self.external.clone();
        v.extend_from_slice(&self.internal);
        v
    }

    pub fn is_internal(&self, l: Label) -> bool {
        self.internal.contains(&l)
    }

    pub fn with_contour(mut self, contour: Contour) -> Self {
        self.contour = contour;
        self
    }

    /// Index of the sub-function with this name and argument list.
    pub fn function_index(&self, name: &str, args: &[Label]) -> Option<usize> {
        self.product
            .iter()
            .position(|s| s.name == name && s.args == args)
    }

    pub fn function_by_name(&self, name: &str) -> Option<&SubFunction> {
        self.product.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for ContourEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.lhs_name)?;
        write_label_list(f, &self.external)?;
        write!(f, "] = int{{")?;
        write_label_list(f, &self.internal)?;
        write!(f, "}} : ")?;
        for (i, s) in self.product.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Checks label uniqueness, set disjointness and coverage.
pub fn validate_equation(eq: &ContourEquation) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &l in &eq.external {
        if !seen.insert(l) {
            return Err(Error::DuplicateLabel(l));
        }
    }
    let mut seen_int = BTreeSet::new();
    for &l in &eq.internal {
        if eq.external.contains(&l) {
            return Err(Error::OverlappingSets(l));
        }
        if !seen_int.insert(l) {
            return Err(Error::DuplicateLabel(l));
        }
    }
    if eq.product.is_empty() {
        return Err(Error::CoverError("empty product".into()));
    }
    for s in &eq.product {
        if s.args.is_empty() {
            return Err(Error::CoverError(format!(
                "sub-function {} has no arguments",
                s.name
            )));
        }
        let mut local = BTreeSet::new();
        for &a in &s.args {
            if !local.insert(a) {
                return Err(Error::DuplicateLabel(a));
            }
            if !eq.external.contains(&a) && !eq.internal.contains(&a) {
                return Err(Error::UnknownLabel(a));
            }
        }
    }
    for l in eq.all_labels() {
        if !eq.product.iter().any(|s| s.args.contains(&l)) {
            return Err(Error::DanglingLabel(l));
        }
    }
    Ok(())
}

/// True iff every pair in `subset` is linked by sub-functions that share
/// labels inside `subset`.
pub fn connected(product: &[&[Label]], subset: &[Label]) -> bool {
    if subset.len() <= 1 {
        return true;
    }
    let mut reached = vec![false; subset.len()];
    reached[0] = true;
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let x = subset[i];
        for args in product {
            if !args.contains(&x) {
                continue;
            }
            for (j, y) in subset.iter().enumerate() {
                if !reached[j] && args.contains(y) {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    reached.into_iter().all(|r| r)
}

/// Connectivity query on an equation's product graph.
pub fn connectivity(eq: &ContourEquation, subset: &[Label]) -> Result<bool> {
    let all = eq.all_labels();
    for l in subset {
        if !all.contains(l) {
            return Err(Error::UnknownLabel(*l));
        }
    }
    let args: Vec<&[Label]> = eq.product.iter().map(|s| s.args.as_slice()).collect();
    Ok(connected(&args, subset))
}

/// Formal signed sum `Σ σ_j x_j`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearCombination<W> {
    pub terms: Vec<(i64, W)>,
}

impl<W: Ord + Clone> LinearCombination<W> {
    pub fn new(terms: Vec<(i64, W)>) -> Self {
        LinearCombination { terms }
    }

    pub fn zero() -> Self {
        LinearCombination { terms: Vec::new() }
    }

    /// Sorted, merged and with zero coefficients removed.
    pub fn canonical(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<(i64, W)> = Vec::new();
        for (c, w) in terms {
            match out.last_mut() {
                Some((c0, w0)) if *w0 == w => *c0 += c,
                _ => out.push((c, w)),
            }
        }
        out.retain(|(c, _)| *c != 0);
        LinearCombination { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.canonical().terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn extend(&mut self, other: LinearCombination<W>) {
        self.terms.extend(other.terms);
    }
}

/// A single sub-function carrying a component or composition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Factor {
    pub name: String,
    pub args: Vec<Label>,
    pub index: SuperIndex,
}

impl Factor {
    pub fn new(f: &SubFunction, index: SuperIndex) -> Self {
        Factor {
            name: f.name.clone(),
            args: f.args.clone(),
            index,
        }
    }
}

/// Coefficient `coeff · (−i)^neg_i_power`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Scalar {
    pub coeff: i64,
    pub neg_i_power: u32,
}

/// Signed product of sub-function factors with step prefactors and
/// integration markers. Imaginary-time integrals carry their `−i` in
/// `scalar.neg_i_power`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RealTimeTerm {
    pub scalar: Scalar,
    /// Step chains `Θ(t₁,…,t_k)`, latest time first.
    pub steps: Vec<Vec<Label>>,
    pub factors: Vec<Factor>,
    pub real_integrals: BTreeSet<Label>,
    pub imag_integrals: BTreeSet<Label>,
}

impl RealTimeTerm {
    /// Builds a term; integration markers follow from which internal labels
    /// sit in Matsubara sets.
    pub fn new(
        coeff: i64,
        steps: Vec<Vec<Label>>,
        factors: Vec<Factor>,
        internal: &[Label],
    ) -> Self {
        let mut real = BTreeSet::new();
        let mut imag = BTreeSet::new();
        for f in &factors {
            for &l in f.index.matsubara() {
                if internal.contains(&l) {
                    imag.insert(l);
                }
            }
        }
        for f in &factors {
            for l in f.index.labels() {
                if internal.contains(&l) && !imag.contains(&l) {
                    real.insert(l);
                }
            }
        }
        RealTimeTerm {
            scalar: Scalar {
                coeff,
                neg_i_power: imag.len() as u32,
            },
            steps,
            factors,
            real_integrals: real,
            imag_integrals: imag,
        }
    }

    fn normalized(mut self) -> Self {
        self.factors.sort();
        self.steps.retain(|c| c.len() >= 2);
        self.steps.sort();
        self.steps.dedup();
        self
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.scalar.neg_i_power == other.scalar.neg_i_power
            && self.steps == other.steps
            && self.factors == other.factors
            && self.real_integrals == other.real_integrals
            && self.imag_integrals == other.imag_integrals
    }

    fn sort_key(&self) -> impl Ord + '_ {
        (
            Reverse(self.imag_integrals.len()),
            &self.factors,
            &self.steps,
            &self.real_integrals,
            &self.imag_integrals,
        )
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct RealTimeExpression {
    pub terms: Vec<RealTimeTerm>,
}

impl RealTimeExpression {
    pub fn new(terms: Vec<RealTimeTerm>) -> Self {
        RealTimeExpression { terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.scalar.coeff = -t.scalar.coeff;
        }
        out
    }
}

/// Sorts factors and terms, merges identical terms and drops zeros.
pub fn canonicalize(expr: &RealTimeExpression) -> RealTimeExpression {
    let mut terms: Vec<RealTimeTerm> = expr
        .terms
        .iter()
        .cloned()
        .map(RealTimeTerm::normalized)
        .collect();
    terms.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut out: Vec<RealTimeTerm> = Vec::new();
    for t in terms {
        match out.last_mut() {
            Some(prev) if prev.same_shape(&t) => prev.scalar.coeff += t.scalar.coeff,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.scalar.coeff != 0);
    RealTimeExpression { terms: out }
}
