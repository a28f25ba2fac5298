//! Component and composition representations of integrated functions, and
//! expansion of (nested) retarded compositions into step-weighted words.

use crate::combinatorics::{nested_commutator, Permutation};
use crate::contour_ir::{Contour, ContourEquation, IndexItem, Label, SuperIndex};
use crate::error::{Error, Result};

/// One word of an expanded composition: `sign · Π Θ(chain) · O^{M(matsubara) word}`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StepWord {
    pub sign: i64,
    /// Step chains, latest time first.
    pub chains: Vec<Vec<Label>>,
    pub matsubara: Vec<Label>,
    /// Contour order of the remaining labels, latest first.
    pub word: Vec<Label>,
}

type Piece = (i64, Vec<Vec<Label>>, Vec<Label>);

/// Expands one item into signed, step-weighted words.
pub fn expand_item(item: &IndexItem) -> Vec<(i64, Vec<Vec<Label>>, Vec<Label>)> {
    match item {
        IndexItem::Plain(x) => vec![(1, Vec::new(), vec![*x])],
        IndexItem::Matsubara(_) => vec![(1, Vec::new(), Vec::new())],
        IndexItem::Retarded { top, rest } => {
            let mut atoms: Vec<&IndexItem> = vec![top];
            atoms.extend(rest.iter());
            let expanded: Vec<Vec<Piece>> = atoms.iter().map(|a| expand_item(a)).collect();
            let tops: Vec<Label> = atoms
                .iter()
                .map(|a| a.top_label().expect("retarded atoms carry a top label"))
                .collect();
            let mut out = Vec::new();
            for perm in Permutation::all(rest.len()) {
                let order: Vec<usize> = std::iter::once(0)
                    .chain(perm.images.iter().copied())
                    .collect();
                let chain: Vec<Label> = order.iter().map(|&i| tops[i]).collect();
                for (s, arrangement) in nested_commutator(&order).terms {
                    let mut acc: Vec<Piece> = vec![(s, vec![chain.clone()], Vec::new())];
                    for &ai in &arrangement {
                        acc = concat_pieces(&acc, &expanded[ai]);
                    }
                    out.extend(acc);
                }
            }
            out
        }
    }
}

fn concat_pieces(left: &[Piece], right: &[Piece]) -> Vec<Piece> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for (s0, c0, w0) in left {
        for (s1, c1, w1) in right {
            let mut c = c0.clone();
            c.extend(c1.iter().cloned());
            let mut w = w0.clone();
            w.extend_from_slice(w1);
            out.push((s0 * s1, c, w));
        }
    }
    out
}

/// Expands a super-index into step-weighted words. Plain items give one
/// word; each retarded set `R(Z₀; Z₁…Z_k)` sums over permutations `P` of
/// `Θ(top(Z₀), top(Z_P₁), …)·[Z₀, Z_P₁, …]` with inner sets expanded in place.
pub fn expand_retarded(index: &SuperIndex) -> Vec<StepWord> {
    let mats = index.matsubara().to_vec();
    let mut acc: Vec<Piece> = vec![(1, Vec::new(), Vec::new())];
    for item in index.body() {
        acc = concat_pieces(&acc, &expand_item(item));
    }
    acc.into_iter()
        .map(|(sign, chains, word)| StepWord {
            sign,
            chains: chains.into_iter().filter(|c| c.len() >= 2).collect(),
            matsubara: mats.clone(),
            word,
        })
        .collect()
}

/// One term of a representation: a composition of the whole integrand,
/// integrated over `internal`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Composition {
    pub index: SuperIndex,
    pub internal: Vec<Label>,
}

/// Slot of an internal label in a distribution: `0` is the Matsubara set,
/// `j ≥ 1` the `j`-th external item.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Distribution {
    pub slots: Vec<usize>,
}

/// All distributions of `n_internal` labels over the slots, lexicographic,
/// first label most significant. Slot `0` is skipped on the Keldysh contour.
pub fn distributions(n_internal: usize, n_items: usize, contour: Contour) -> Vec<Distribution> {
    let first = match contour {
        Contour::Extended => 0,
        Contour::Keldysh => 1,
    };
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n_internal);
    fn rec(n: usize, lo: usize, hi: usize, cur: &mut Vec<usize>, out: &mut Vec<Distribution>) {
        if cur.len() == n {
            out.push(Distribution { slots: cur.clone() });
            return;
        }
        for s in lo..=hi {
            cur.push(s);
            rec(n, lo, hi, cur, out);
            cur.pop();
        }
    }
    if n_items > 0 || first == 0 {
        rec(n_internal, first, n_items, &mut cur, &mut out);
    }
    out
}

fn check_target(eq: &ContourEquation, target: &SuperIndex) -> Result<()> {
    target.check_cover(&eq.external)?;
    if eq.contour == Contour::Keldysh && !target.matsubara().is_empty() {
        return Err(Error::CoverError(format!(
            "target `{target}` places arguments on the Matsubara branch of a Keldysh contour"
        )));
    }
    for item in target.body() {
        if let IndexItem::Retarded { top, rest } = item {
            if top.is_retarded() || rest.iter().any(IndexItem::is_retarded) {
                return Err(Error::CoverError(format!(
                    "nested retarded sets are not supported in targets (`{target}`)"
                )));
            }
        }
    }
    Ok(())
}

/// Writes a component of the integrated function as a sum over
/// distributions of the internal labels into one retarded set per external
/// (plus a Matsubara set on the extended contour).
pub fn component_representation(
    eq: &ContourEquation,
    target: &SuperIndex,
) -> Result<Vec<Composition>> {
    check_target(eq, target)?;
    if !target.is_component() {
        return Err(Error::CoverError(format!(
            "`{target}` is not a single component"
        )));
    }
    Ok(distribute(eq, target))
}

/// Joins the internal labels into the existing sets of a composition in all
/// ways; reduces to the component representation for plain targets.
pub fn composition_representation(
    eq: &ContourEquation,
    target: &SuperIndex,
) -> Result<Vec<Composition>> {
    check_target(eq, target)?;
    Ok(distribute(eq, target))
}

fn distribute(eq: &ContourEquation, target: &SuperIndex) -> Vec<Composition> {
    let body = target.body();
    distributions(eq.internal.len(), body.len(), eq.contour)
        .into_iter()
        .map(|d| {
            let mut mats = target.matsubara().to_vec();
            let mut extra: Vec<Vec<IndexItem>> = vec![Vec::new(); body.len()];
            for (&l, &s) in eq.internal.iter().zip(&d.slots) {
                if s == 0 {
                    mats.push(l);
                } else {
                    extra[s - 1].push(IndexItem::Plain(l));
                }
            }
            let items: Vec<IndexItem> = body
                .iter()
                .zip(extra)
                .map(|(item, add)| match item {
                    IndexItem::Retarded { top, rest } => {
                        let mut r = rest.clone();
                        r.extend(add);
                        IndexItem::retarded((**top).clone(), r)
                    }
                    other => IndexItem::retarded(other.clone(), add),
                })
                .collect();
            Composition {
                index: SuperIndex::with_matsubara(mats, items),
                internal: eq.internal.clone(),
            }
        })
        .collect()
}

/// Nested expansion of a retarded node with respect to the non-top atom
/// `atoms[pivot]`: the pivot is nested onto each other atom in turn.
/// `atoms[0]` is the top. Returns the new atom lists (top first).
pub fn expand_atoms(atoms: &[IndexItem], pivot: usize) -> Vec<Vec<IndexItem>> {
    assert!(pivot >= 1 && pivot < atoms.len());
    let p = &atoms[pivot];
    (0..atoms.len())
        .filter(|&i| i != pivot)
        .map(|i| {
            atoms
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != pivot)
                .map(|(j, a)| {
                    if j == i {
                        IndexItem::retarded(a.clone(), vec![p.clone()])
                    } else {
                        a.clone()
                    }
                })
                .collect()
        })
        .collect()
}

fn expand_in_item(item: &IndexItem, pivot: Label) -> Option<Vec<IndexItem>> {
    let IndexItem::Retarded { top, rest } = item else {
        return None;
    };
    if let Some(p) = rest.iter().position(|r| r.top_label() == Some(pivot)) {
        let mut atoms = vec![(**top).clone()];
        atoms.extend(rest.iter().cloned());
        return Some(
            expand_atoms(&atoms, p + 1)
                .into_iter()
                .map(|mut a| {
                    let t = a.remove(0);
                    IndexItem::retarded(t, a)
                })
                .collect(),
        );
    }
    if let Some(tops) = expand_in_item(top, pivot) {
        return Some(
            tops.into_iter()
                .map(|t| IndexItem::retarded(t, rest.clone()))
                .collect(),
        );
    }
    for (k, r) in rest.iter().enumerate() {
        if let Some(rs) = expand_in_item(r, pivot) {
            return Some(
                rs.into_iter()
                    .map(|x| {
                        let mut nr = rest.clone();
                        nr[k] = x;
                        IndexItem::retarded((**top).clone(), nr)
                    })
                    .collect(),
            );
        }
    }
    None
}

/// Expands the retarded set holding the non-top entry whose top label is
/// `pivot` as a sum of nested retarded compositions.
pub fn nested_expand(index: &SuperIndex, pivot: Label) -> Result<Vec<SuperIndex>> {
    for (k, item) in index.items.iter().enumerate() {
        if let Some(vs) = expand_in_item(item, pivot) {
            return Ok(vs
                .into_iter()
                .map(|v| {
                    let mut items = index.items.clone();
                    items[k] = v;
                    SuperIndex::new(items)
                })
                .collect());
        }
    }
    Err(Error::RangeError(format!(
        "`{pivot}` is not a non-top entry of any retarded set in `{index}`"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour_ir::{labels, SubFunction};
    use crate::expr_parser::parse_labeled_index;

    fn idx(s: &str) -> SuperIndex {
        parse_labeled_index(s).unwrap()
    }

    fn rendered(v: &[SuperIndex]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn integrand(ext: &str, int: &str, args: &str, contour: Contour) -> ContourEquation {
        ContourEquation {
            lhs_name: "D".into(),
            external: labels(ext),
            internal: labels(int),
            product: vec![SubFunction::new("X", args)],
            contour,
        }
    }

    #[test]
    fn two_point_retarded() {
        let got = expand_retarded(&idx("R(e,i)"));
        assert_eq!(got.len(), 2);
        assert_eq!((got[0].sign, &got[0].word), (1, &labels("ei")));
        assert_eq!((got[1].sign, &got[1].word), (-1, &labels("ie")));
        assert!(got.iter().all(|w| w.chains == vec![labels("ei")]));
    }

    #[test]
    fn three_point_retarded_chains() {
        let got = expand_retarded(&idx("R(e,ij)"));
        assert_eq!(got.len(), 8);
        assert_eq!(
            got[..4]
                .iter()
                .filter(|w| w.chains == vec![labels("eij")])
                .count(),
            4
        );
        assert_eq!(
            got[4..]
                .iter()
                .filter(|w| w.chains == vec![labels("eji")])
                .count(),
            4
        );
    }

    #[test]
    fn nested_chain_uses_tops() {
        let got = expand_retarded(&idx("R(a,R(c,d))"));
        assert_eq!(got.len(), 4);
        for w in &got {
            let mut c = w.chains.clone();
            c.sort();
            assert_eq!(c, vec![labels("ac"), labels("cd")]);
        }
        let words: Vec<(i64, String)> = got
            .iter()
            .map(|w| (w.sign, w.word.iter().map(|l| l.0).collect()))
            .collect();
        assert!(words.contains(&(1, "acd".into())));
        assert!(words.contains(&(-1, "adc".into())));
        assert!(words.contains(&(-1, "cda".into())));
        assert!(words.contains(&(1, "dca".into())));
    }

    #[test]
    fn expansion_example_keldysh() {
        let eq = integrand("ad", "bc", "abcd", Contour::Keldysh);
        let got = component_representation(&eq, &idx("ad")).unwrap();
        let s: Vec<String> = got.iter().map(|c| c.index.to_string()).collect();
        assert_eq!(s, ["R(a,bc)d", "R(a,b)R(d,c)", "R(a,c)R(d,b)", "aR(d,bc)"]);
    }

    #[test]
    fn lesser_reorders_sets() {
        let eq = integrand("ad", "bc", "abcd", Contour::Keldysh);
        let got = component_representation(&eq, &idx("da")).unwrap();
        let mut s: Vec<String> = got.iter().map(|c| c.index.to_string()).collect();
        s.sort();
        let mut want = ["dR(a,bc)", "R(d,c)R(a,b)", "R(d,b)R(a,c)", "R(d,bc)a"];
        want.sort();
        assert_eq!(s, want);
    }

    #[test]
    fn extended_matsubara_example() {
        let eq = integrand("ad", "bc", "abcd", Contour::Extended);
        let got = component_representation(&eq, &idx("M(a)d")).unwrap();
        let s: Vec<String> = got.iter().map(|c| c.index.to_string()).collect();
        assert_eq!(s, ["M(abc)d", "M(ab)R(d,c)", "M(ac)R(d,b)", "M(a)R(d,bc)"]);
    }

    #[test]
    fn retarded_example() {
        let eq = integrand("abcde", "fg", "abcdefg", Contour::Keldysh);
        let got = composition_representation(&eq, &idx("R(a,b)R(c,de)")).unwrap();
        let s: Vec<String> = got.iter().map(|c| c.index.to_string()).collect();
        assert_eq!(
            s,
            [
                "R(a,bfg)R(c,de)",
                "R(a,bf)R(c,deg)",
                "R(a,bg)R(c,def)",
                "R(a,b)R(c,defg)"
            ]
        );
    }

    #[test]
    fn no_internals_is_identity() {
        let eq = integrand("ab", "", "ab", Contour::Extended);
        let got = component_representation(&eq, &idx("ba")).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].index, idx("ba"));
    }

    #[test]
    fn nested_expansion_examples() {
        let got = nested_expand(&idx("R(a,bcd)"), Label('d')).unwrap();
        assert_eq!(
            rendered(&got),
            ["R(R(a,d),bc)", "R(a,R(b,d)c)", "R(a,bR(c,d))"]
        );
        let got = nested_expand(&idx("R(a,cd)"), Label('d')).unwrap();
        assert_eq!(rendered(&got), ["R(R(a,d),c)", "R(a,R(c,d))"]);
        let got = nested_expand(&idx("R(a,cd)"), Label('c')).unwrap();
        assert_eq!(rendered(&got), ["R(R(a,c),d)", "R(a,R(d,c))"]);
        assert!(nested_expand(&idx("R(a,cd)"), Label('a')).is_err());
    }

    #[test]
    fn keldysh_rejects_matsubara_target() {
        let eq = integrand("ad", "bc", "abcd", Contour::Keldysh);
        assert!(component_representation(&eq, &idx("M(a)d")).is_err());
    }
}
