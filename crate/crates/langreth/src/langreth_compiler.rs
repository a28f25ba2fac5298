//! Rule compiler: reduces compositions of products of sub-functions to
//! products of single sub-function components and compositions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::combinatorics::Permutation;
use crate::contour_ir::{
    canonicalize, connected, Contour, ContourEquation, Factor, IndexItem, Label,
    RealTimeExpression, RealTimeTerm, SubFunction, SuperIndex,
};
use crate::error::{Error, Result};
use crate::expr_parser::langreth_name;
use crate::retarded_engine::{composition_representation, expand_atoms};

/// A composition of a whole product of sub-functions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProductComposition {
    pub functions: Vec<SubFunction>,
    pub index: SuperIndex,
}

/// Result of moving the Matsubara set onto the sub-functions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MatsubaraSplit {
    /// Sub-functions with at most one real argument left, as closed factors.
    pub closed: Vec<Factor>,
    /// Remaining sub-functions with their Matsubara labels.
    pub open: Vec<(SubFunction, Vec<Label>)>,
    /// The composition without its Matsubara head.
    pub body: SuperIndex,
}

/// A piece of a derivation dropped because a retarded set is disconnected.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Discarded {
    /// Sub-functions restricted to the labels of the dropped set.
    pub functions: Vec<SubFunction>,
    pub index: SuperIndex,
    /// Labels of the disconnected set.
    pub witness: Vec<Label>,
}

/// Derived rule together with everything the vanishing rule removed.
#[derive(Clone, PartialEq, Debug)]
pub struct Derivation {
    pub expr: RealTimeExpression,
    pub discarded: Vec<Discarded>,
}

pub fn distribute_matsubara(pc: &ProductComposition) -> MatsubaraSplit {
    let mats = pc.index.matsubara();
    let mut closed = Vec::new();
    let mut open = Vec::new();
    for f in &pc.functions {
        let m: Vec<Label> = f
            .args
            .iter()
            .copied()
            .filter(|l| mats.contains(l))
            .collect();
        let real: Vec<Label> = f
            .args
            .iter()
            .copied()
            .filter(|l| !mats.contains(l))
            .collect();
        if real.len() <= 1 {
            closed.push(Factor::new(
                f,
                SuperIndex::with_matsubara(m, real.into_iter().map(IndexItem::Plain).collect()),
            ));
        } else {
            open.push((f.clone(), m));
        }
    }
    MatsubaraSplit {
        closed,
        open,
        body: SuperIndex::new(pc.index.body().to_vec()),
    }
}

/// Each sub-function receives the contour order induced by a full order of
/// all labels (optionally headed by a Matsubara set).
pub fn component_of_product(functions: &[SubFunction], order: &SuperIndex) -> Result<Vec<Factor>> {
    if !order.is_component() {
        return Err(Error::CoverError(format!(
            "`{order}` is not a plain contour order"
        )));
    }
    let mats = order.matsubara();
    let word: Vec<Label> = order
        .body()
        .iter()
        .filter_map(|it| match it {
            IndexItem::Plain(x) => Some(*x),
            _ => None,
        })
        .collect();
    functions
        .iter()
        .map(|f| {
            let m: Vec<Label> = mats
                .iter()
                .copied()
                .filter(|l| f.args.contains(l))
                .collect();
            let w: Vec<Label> = word
                .iter()
                .copied()
                .filter(|l| f.args.contains(l))
                .collect();
            let idx = SuperIndex::with_matsubara(m, w.into_iter().map(IndexItem::Plain).collect());
            idx.check_cover(&f.args)?;
            Ok(Factor::new(f, idx))
        })
        .collect()
}

fn real_args(functions: &[SubFunction], mats: &[Label]) -> Vec<Vec<Label>> {
    functions
        .iter()
        .map(|f| {
            f.args
                .iter()
                .copied()
                .filter(|l| !mats.contains(l))
                .collect()
        })
        .collect()
}

fn first_disconnected(item: &IndexItem, graph: &[&[Label]]) -> Option<Vec<Label>> {
    let IndexItem::Retarded { top, rest } = item else {
        return None;
    };
    let ls = item.labels();
    if !connected(graph, &ls) {
        return Some(ls);
    }
    first_disconnected(top, graph)
        .or_else(|| rest.iter().find_map(|r| first_disconnected(r, graph)))
}

/// Witness of a disconnected retarded set (outer or nested), if any.
/// Matsubara labels take no part in connectivity.
pub fn vanishes(pc: &ProductComposition) -> Option<Vec<Label>> {
    let args = real_args(&pc.functions, pc.index.matsubara());
    let graph: Vec<&[Label]> = args.iter().map(Vec::as_slice).collect();
    pc.index
        .body()
        .iter()
        .find_map(|it| first_disconnected(it, &graph))
}

/// Orderings of the retarded arguments whose nested commutator survives:
/// every argument must share a sub-function with some argument to its left.
pub fn commutator_prune(functions: &[SubFunction], top: Label, rest: &[Label]) -> Vec<Vec<Label>> {
    let linked = |x: Label, y: Label| {
        functions
            .iter()
            .any(|f| f.args.contains(&x) && f.args.contains(&y))
    };
    Permutation::all(rest.len())
        .into_iter()
        .map(|p| {
            let mut chain = vec![top];
            chain.extend(p.apply(rest));
            chain
        })
        .filter(|chain| (1..chain.len()).all(|k| chain[..k].iter().any(|&y| linked(chain[k], y))))
        .collect()
}

#[derive(Clone, Debug)]
struct Alt {
    sign: i64,
    steps: Vec<Vec<Label>>,
    frags: BTreeMap<usize, Vec<IndexItem<Label>>>,
}

struct Resolver<'a> {
    functions: &'a [SubFunction],
    /// Real arguments of open sub-functions; empty for closed ones.
    real: Vec<Vec<Label>>,
    discarded: Vec<Discarded>,
}

const MAX_DEPTH: usize = 64;

impl<'a> Resolver<'a> {
    fn new(functions: &'a [SubFunction], mats: &[Label]) -> Self {
        let real = real_args(functions, mats)
            .into_iter()
            .map(|r| if r.len() >= 2 { r } else { Vec::new() })
            .collect();
        Resolver {
            functions,
            real,
            discarded: Vec::new(),
        }
    }

    fn count(&self, f: usize, ls: &[Label]) -> usize {
        self.real[f].iter().filter(|l| ls.contains(l)).count()
    }

    fn touching(&self, ls: &[Label]) -> Vec<usize> {
        (0..self.real.len())
            .filter(|&f| self.count(f, ls) > 0)
            .collect()
    }

    fn is_connected(&self, ls: &[Label]) -> bool {
        let graph: Vec<&[Label]> = self.real.iter().map(Vec::as_slice).collect();
        connected(&graph, ls)
    }

    fn discard(&mut self, node: &IndexItem, ls: &[Label]) {
        let functions = self
            .touching(ls)
            .into_iter()
            .map(|f| SubFunction {
                name: self.functions[f].name.clone(),
                args: self.real[f]
                    .iter()
                    .copied()
                    .filter(|l| ls.contains(l))
                    .collect(),
            })
            .collect();
        self.discarded.push(Discarded {
            functions,
            index: SuperIndex::new(vec![node.clone()]),
            witness: ls.to_vec(),
        });
    }

    /// Alternative for a node owned by one sub-function: it takes the whole
    /// node, every other touching sub-function sees a single label.
    fn owned(&self, node: &IndexItem, ls: &[Label], owner: usize) -> Alt {
        let mut frags = BTreeMap::new();
        for f in self.touching(ls) {
            if f == owner {
                frags.insert(f, vec![node.clone()]);
            } else {
                let l = self.real[f]
                    .iter()
                    .find(|l| ls.contains(l))
                    .copied()
                    .expect("touching");
                frags.insert(f, vec![IndexItem::Plain(l)]);
            }
        }
        Alt {
            sign: 1,
            steps: Vec::new(),
            frags,
        }
    }

    fn resolve(&mut self, node: &IndexItem, depth: usize) -> Result<Vec<Alt>> {
        if depth > MAX_DEPTH {
            return Err(Error::IrreducibleBlock(node.to_string()));
        }
        let ls = node.labels();
        let (top, rest) = match node {
            IndexItem::Plain(x) => {
                let frags = self
                    .touching(&ls)
                    .into_iter()
                    .map(|f| (f, vec![IndexItem::Plain(*x)]))
                    .collect();
                return Ok(vec![Alt {
                    sign: 1,
                    steps: Vec::new(),
                    frags,
                }]);
            }
            IndexItem::Matsubara(_) => {
                return Err(Error::CoverError(format!(
                    "Matsubara set `{node}` inside a real-time item"
                )))
            }
            IndexItem::Retarded { top, rest } => (top, rest),
        };
        if !self.is_connected(&ls) {
            self.discard(node, &ls);
            return Ok(Vec::new());
        }
        let owners: Vec<usize> = (0..self.real.len())
            .filter(|&f| self.count(f, &ls) >= 2)
            .collect();
        if let [owner] = owners[..] {
            if self.count(owner, &ls) == ls.len() {
                return Ok(vec![self.owned(node, &ls, owner)]);
            }
        }
        if let Some(alts) = self.triangle(top, rest, &ls, &owners) {
            return Ok(alts);
        }
        if rest.len() == 1 {
            return self.binary(top, &rest[0], depth);
        }
        let mut atoms = vec![(**top).clone()];
        atoms.extend(rest.iter().cloned());
        let pivot = self.choose_pivot(&atoms);
        let mut out = Vec::new();
        for a in expand_atoms(&atoms, pivot) {
            let mut it = a.into_iter();
            let t = it.next().expect("top atom");
            let next = IndexItem::retarded(t, it.collect());
            out.extend(self.resolve(&next, depth + 1)?);
        }
        Ok(out)
    }

    /// Pivot whose nested expansion creates the most disconnected sets; ties
    /// go to the smallest top label.
    fn choose_pivot(&self, atoms: &[IndexItem]) -> usize {
        let mut best = (0usize, Label('{'), 1usize);
        for p in 1..atoms.len() {
            let mut lp = atoms[p].labels();
            let dead = (0..atoms.len())
                .filter(|&i| i != p)
                .filter(|&i| {
                    let mut ls = atoms[i].labels();
                    ls.append(&mut lp.clone());
                    !self.is_connected(&ls)
                })
                .count();
            lp.clear();
            let key = atoms[p].top_label().expect("atom top");
            if dead > best.0 || (dead == best.0 && key < best.1) {
                best = (dead, key, p);
            }
        }
        best.2
    }

    /// Three 2-point owners on the pairs of `R(x, yz)`.
    fn triangle(
        &self,
        top: &IndexItem,
        rest: &[IndexItem],
        ls: &[Label],
        owners: &[usize],
    ) -> Option<Vec<Alt>> {
        let (IndexItem::Plain(x), [IndexItem::Plain(y), IndexItem::Plain(z)]) = (top, rest) else {
            return None;
        };
        let (x, y, z) = (*x, *y, *z);
        if owners.len() != 3 {
            return None;
        }
        let find = |a: Label, b: Label| {
            owners.iter().copied().find(|&f| {
                self.count(f, ls) == 2 && self.real[f].contains(&a) && self.real[f].contains(&b)
            })
        };
        let (fxy, fxz, fyz) = (find(x, y)?, find(x, z)?, find(y, z)?);
        if fxy == fxz || fxy == fyz || fxz == fyz {
            return None;
        }
        let r = |a: Label, b: Label| {
            vec![IndexItem::retarded(
                IndexItem::Plain(a),
                vec![IndexItem::Plain(b)],
            )]
        };
        let w = |a: Label, b: Label| vec![IndexItem::Plain(a), IndexItem::Plain(b)];
        let forms = [
            (r(x, y), w(x, z), r(y, z)),
            (w(y, x), r(x, z), r(z, y)),
            (r(x, y), r(x, z), w(z, y)),
        ];
        let base = self.owned(&IndexItem::Plain(x), ls, usize::MAX);
        Some(
            forms
                .into_iter()
                .map(|(a, b, c)| {
                    let mut alt = base.clone();
                    for f in self.touching(ls) {
                        if ![fxy, fxz, fyz].contains(&f) {
                            let l = self.real[f]
                                .iter()
                                .find(|l| ls.contains(l))
                                .copied()
                                .expect("touching");
                            alt.frags.insert(f, vec![IndexItem::Plain(l)]);
                        }
                    }
                    alt.frags.insert(fxy, a);
                    alt.frags.insert(fxz, b);
                    alt.frags.insert(fyz, c);
                    alt
                })
                .collect(),
        )
    }

    /// `R(Z₀; Z₁)` by telescoping the commutator over the sub-functions that
    /// bridge the two blocks.
    fn binary(&mut self, z0: &IndexItem, z1: &IndexItem, depth: usize) -> Result<Vec<Alt>> {
        let a0s = self.resolve(z0, depth + 1)?;
        let a1s = self.resolve(z1, depth + 1)?;
        let (h0, h1) = (z0.top_label().expect("top"), z1.top_label().expect("top"));
        let (l0, l1) = (z0.labels(), z1.labels());
        let bridges: Vec<usize> = (0..self.real.len())
            .filter(|&f| self.count(f, &l0) > 0 && self.count(f, &l1) > 0)
            .collect();
        let zero_first_before = h0 > h1;
        let mut out = Vec::new();
        for a0 in &a0s {
            for a1 in &a1s {
                let mut shared = BTreeMap::new();
                for (f, fr) in a0.frags.iter().chain(a1.frags.iter()) {
                    if !bridges.contains(f) {
                        shared.insert(*f, fr.clone());
                    }
                }
                let mut steps = a0.steps.clone();
                steps.extend(a1.steps.iter().cloned());
                let sign = a0.sign * a1.sign;
                let cat = |f: usize, zero_first: bool| {
                    let (p, q) = (&a0.frags[&f], &a1.frags[&f]);
                    let mut v = if zero_first { p.clone() } else { q.clone() };
                    v.extend(if zero_first {
                        q.iter().cloned()
                    } else {
                        p.iter().cloned()
                    });
                    v
                };
                for (j, &b) in bridges.iter().enumerate() {
                    let mut frags = shared.clone();
                    for (i, &o) in bridges.iter().enumerate() {
                        if i < j {
                            frags.insert(o, cat(o, zero_first_before));
                        } else if i > j {
                            frags.insert(o, cat(o, !zero_first_before));
                        }
                    }
                    let (f0, f1) = (&a0.frags[&b], &a1.frags[&b]);
                    let exact = matches!((&f0[..], &f1[..]), ([p], [q]) if p.top_label() == Some(h0) && q.top_label() == Some(h1));
                    if exact {
                        frags.insert(
                            b,
                            vec![IndexItem::retarded(f0[0].clone(), vec![f1[0].clone()])],
                        );
                        out.push(Alt {
                            sign,
                            steps: steps.clone(),
                            frags,
                        });
                    } else {
                        let mut st = steps.clone();
                        st.push(vec![h0, h1]);
                        let mut plus = frags.clone();
                        plus.insert(b, cat(b, true));
                        let mut minus = frags;
                        minus.insert(b, cat(b, false));
                        out.push(Alt {
                            sign,
                            steps: st.clone(),
                            frags: plus,
                        });
                        out.push(Alt {
                            sign: -sign,
                            steps: st,
                            frags: minus,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

fn combine(items: Vec<Vec<Alt>>) -> Vec<Alt> {
    let mut acc = vec![Alt {
        sign: 1,
        steps: Vec::new(),
        frags: BTreeMap::new(),
    }];
    for alts in items {
        let mut next = Vec::with_capacity(acc.len() * alts.len());
        for a in &acc {
            for b in &alts {
                let mut frags = a.frags.clone();
                for (f, fr) in &b.frags {
                    frags
                        .entry(*f)
                        .or_insert_with(Vec::new)
                        .extend(fr.iter().cloned());
                }
                let mut steps = a.steps.clone();
                steps.extend(b.steps.iter().cloned());
                next.push(Alt {
                    sign: a.sign * b.sign,
                    steps,
                    frags,
                });
            }
        }
        acc = next;
    }
    acc
}

/// Reduces one product composition to terms whose factors are components or
/// compositions of single sub-functions. Closed Matsubara factors split off
/// first; each top-level item is resolved by ownership, the triangle rule,
/// telescoping across bridging sub-functions, or nested expansion.
pub fn separate(pc: &ProductComposition, internal: &[Label]) -> Result<RealTimeExpression> {
    Ok(separate_traced(pc, internal)?.0)
}

fn separate_traced(
    pc: &ProductComposition,
    internal: &[Label],
) -> Result<(RealTimeExpression, Vec<Discarded>)> {
    let mats = pc.index.matsubara().to_vec();
    let mut r = Resolver::new(&pc.functions, &mats);
    let mut per_item = Vec::new();
    for item in pc.index.body() {
        per_item.push(r.resolve(item, 0)?);
    }
    let alts = combine(per_item);
    let split = distribute_matsubara(pc);
    let terms = alts
        .into_iter()
        .map(|alt| {
            let factors = pc
                .functions
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    if r.real[i].is_empty() {
                        split
                            .closed
                            .iter()
                            .find(|c| c.name == f.name && c.args == f.args)
                            .cloned()
                            .expect("closed factor")
                    } else {
                        let m: Vec<Label> = f
                            .args
                            .iter()
                            .copied()
                            .filter(|l| mats.contains(l))
                            .collect();
                        Factor::new(f, SuperIndex::with_matsubara(m, alt.frags[&i].clone()))
                    }
                })
                .collect();
            RealTimeTerm::new(alt.sign, alt.steps, factors, internal)
        })
        .collect();
    Ok((RealTimeExpression::new(terms), r.discarded))
}

fn order_relations(item: &IndexItem, out: &mut Vec<(Label, Label)>) {
    if let IndexItem::Retarded { top, rest } = item {
        let t = item.top_label().expect("top");
        for r in rest {
            for l in r.labels() {
                out.push((t, l));
            }
            order_relations(r, out);
        }
        order_relations(top, out);
    }
}

fn closure(edges: &[(Label, Label)]) -> BTreeSet<(Label, Label)> {
    let mut set: BTreeSet<(Label, Label)> = edges.iter().copied().collect();
    loop {
        let mut grew = false;
        let cur: Vec<(Label, Label)> = set.iter().copied().collect();
        for &(a, b) in &cur {
            for &(c, d) in &cur {
                if b == c && set.insert((a, d)) {
                    grew = true;
                }
            }
        }
        if !grew {
            return set;
        }
    }
}

/// Drops terms whose step functions contradict each other and removes step
/// chains already enforced by the factors.
fn prune_steps(expr: RealTimeExpression) -> RealTimeExpression {
    let terms = expr
        .terms
        .into_iter()
        .filter_map(|mut t| {
            let mut implied = Vec::new();
            for f in &t.factors {
                for it in &f.index.items {
                    order_relations(it, &mut implied);
                }
            }
            let mut all = implied.clone();
            for c in &t.steps {
                all.extend(c.windows(2).map(|w| (w[0], w[1])));
            }
            if closure(&all).iter().any(|(a, b)| a == b) {
                return None;
            }
            let known = closure(&implied);
            t.steps
                .retain(|c| !c.windows(2).all(|w| known.contains(&(w[0], w[1]))));
            Some(t)
        })
        .collect();
    RealTimeExpression::new(terms)
}

/// Derives the real-time rule for one component or composition of the
/// left-hand side.
pub fn derive_rule(eq: &ContourEquation, target: &SuperIndex) -> Result<RealTimeExpression> {
    Ok(derive_rule_traced(eq, target)?.expr)
}

pub fn derive_rule_traced(eq: &ContourEquation, target: &SuperIndex) -> Result<Derivation> {
    let mut terms = Vec::new();
    let mut discarded = Vec::new();
    for comp in composition_representation(eq, target)? {
        let pc = ProductComposition {
            functions: eq.product.clone(),
            index: comp.index,
        };
        let (e, d) = separate_traced(&pc, &eq.internal)?;
        terms.extend(e.terms);
        discarded.extend(d);
    }
    let expr = canonicalize(&prune_steps(RealTimeExpression::new(terms)));
    Ok(Derivation { expr, discarded })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Format {
    #[default]
    Text,
    /// Plain ASCII: `int`, `Theta`, `rc`/`lc`.
    Ascii,
    Latex,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Naming {
    /// `>`, `<`, `R`, `A`, `⌉`, `⌈`, `M`; two-point factors only.
    Langreth,
    /// Argument positions, with the argument list as a subscript.
    Hacek,
    /// Label-based super-indices.
    #[default]
    Labeled,
    /// Langreth names where available, háček otherwise.
    Mixed,
}

fn latex_index(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_lowercase() {
                format!("\\check{{{c}}}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

fn factor_text(f: &Factor, naming: Naming, format: Format) -> Result<String> {
    let named = langreth_name(&f.index, &f.args);
    let short = |n: &str| -> String {
        match (format, n) {
            (Format::Latex, "⌉") => "\\rceil".into(),
            (Format::Latex, "⌈") => "\\lceil".into(),
            (Format::Ascii, "⌉") => "rc".into(),
            (Format::Ascii, "⌈") => "lc".into(),
            _ => n.to_string(),
        }
    };
    let wrap = |sup: String| {
        if sup.chars().count() == 1 && format != Format::Latex {
            sup
        } else {
            format!("{{{sup}}}")
        }
    };
    let args: String = f.args.iter().map(|l| l.0).collect();
    let hacek = || -> Result<String> {
        let h = f.index.to_hacek(&f.args)?.to_string();
        Ok(format!("{}^{{{h}}}_{{{args}}}", f.name))
    };
    match naming {
        Naming::Langreth => match named {
            Some(n) => Ok(format!("{}^{}", f.name, wrap(short(n)))),
            None => Err(Error::NamingUnavailable(format!(
                "{}^{{{}}}",
                f.name, f.index
            ))),
        },
        Naming::Mixed => match named {
            Some(n) if f.args.len() <= 2 => Ok(format!("{}^{}", f.name, wrap(short(n)))),
            _ => hacek(),
        },
        Naming::Hacek => hacek(),
        Naming::Labeled => {
            let s = f.index.to_string();
            let s = if format == Format::Latex {
                latex_index(&s)
            } else {
                s
            };
            Ok(format!("{}^{{{s}}}", f.name))
        }
    }
}

/// Renders an expression; the empty expression is `0`.
pub fn emit(expr: &RealTimeExpression, format: Format, naming: Naming) -> Result<String> {
    if expr.terms.is_empty() {
        return Ok("0".into());
    }
    let mut out = String::new();
    for (k, t) in expr.terms.iter().enumerate() {
        let c = t.scalar.coeff;
        match (k, c < 0) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let mut parts = Vec::new();
        if c.abs() != 1 {
            parts.push(c.abs().to_string());
        }
        if !t.real_integrals.is_empty() || !t.imag_integrals.is_empty() {
            parts.push(
                match format {
                    Format::Text => "∫",
                    Format::Ascii => "int",
                    Format::Latex => "\\int",
                }
                .to_string(),
            );
        }
        for s in &t.steps {
            let chain: String = s.iter().map(|l| l.0).collect();
            parts.push(match format {
                Format::Text => format!(
                    "Θ({})",
                    chain
                        .chars()
                        .map(String::from)
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                Format::Ascii => format!(
                    "Theta({})",
                    chain
                        .chars()
                        .map(String::from)
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                Format::Latex => format!("\\Theta_{{{chain}}}"),
            });
        }
        for f in &t.factors {
            parts.push(factor_text(f, naming, format)?);
        }
        let _ = write!(out, "{}", parts.join(" "));
    }
    Ok(out)
}

/// Emits a named rule `D^{target} = rhs`.
pub fn emit_rule(
    eq: &ContourEquation,
    target: &SuperIndex,
    expr: &RealTimeExpression,
    format: Format,
    naming: Naming,
) -> Result<String> {
    let lhs = Factor::new(
        &SubFunction {
            name: eq.lhs_name.clone(),
            args: eq.external.clone(),
        },
        target.clone(),
    );
    let naming_lhs = if naming == Naming::Langreth && langreth_name(target, &eq.external).is_none()
    {
        Naming::Mixed
    } else {
        naming
    };
    let l = factor_text(&lhs, naming_lhs, format)?;
    Ok(format!("{l} = {}", emit(expr, format, naming)?))
}

/// Targets enumerated by `all`: every Keldysh component, every placement of
/// externals on the Matsubara branch (extended contour only) and every
/// single-top retarded composition.
pub fn all_targets(eq: &ContourEquation) -> Vec<SuperIndex> {
    let ext = &eq.external;
    let n = ext.len();
    let mut out = Vec::new();
    let subsets: Vec<Vec<Label>> = (0u32..(1 << n))
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ext[i])
                .collect()
        })
        .collect();
    let mats_choices: Vec<&Vec<Label>> = match eq.contour {
        Contour::Keldysh => subsets.iter().filter(|s| s.is_empty()).collect(),
        Contour::Extended => subsets.iter().collect(),
    };
    for m in mats_choices {
        let real: Vec<Label> = ext.iter().copied().filter(|l| !m.contains(l)).collect();
        for p in Permutation::all(real.len()) {
            let word = p.apply(&real);
            out.push(SuperIndex::with_matsubara(
                m.clone(),
                word.into_iter().map(IndexItem::Plain).collect(),
            ));
        }
    }
    if n >= 2 {
        for &t in ext {
            let rest: Vec<IndexItem> = ext
                .iter()
                .copied()
                .filter(|&l| l != t)
                .map(IndexItem::Plain)
                .collect();
            out.push(SuperIndex::new(vec![IndexItem::retarded(
                IndexItem::Plain(t),
                rest,
            )]));
        }
    }
    out
}
