//! Independent verifiers for derived rules: an exact branch-splitting oracle
//! working in a basis of total time orders, and a discrete-contour evaluator
//! comparing both sides of a rule on random component tables.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{linear_extensions, Permutation};
use crate::contour_ir::{
    Contour, ContourEquation, Factor, IndexItem, Label, RealTimeExpression, RealTimeTerm,
    SubFunction, SuperIndex,
};
use crate::error::{Error, Result};
use crate::langreth_compiler::{derive_rule, emit, Format, Naming};
use crate::retarded_engine::{expand_retarded, StepWord};

/// One sub-function component in the normal-form basis.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NfComponent {
    pub name: String,
    pub args: Vec<Label>,
    pub matsubara: Vec<Label>,
    pub word: Vec<Label>,
}

/// Basis element: a total order of the real times (latest first) times a
/// product of components.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NfKey {
    pub order: Vec<Label>,
    pub components: Vec<NfComponent>,
    pub neg_i_power: u32,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct NormalForm {
    pub terms: BTreeMap<NfKey, i64>,
}

impl NormalForm {
    fn add(&mut self, key: NfKey, c: i64) {
        *self.terms.entry(key).or_insert(0) += c;
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| *c != 0);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Keys whose coefficients differ, with both coefficients.
    pub fn difference(&self, other: &NormalForm) -> Vec<(NfKey, i64, i64)> {
        let mut out = Vec::new();
        for (k, &c) in &self.terms {
            let d = other.terms.get(k).copied().unwrap_or(0);
            if c != d {
                out.push((k.clone(), c, d));
            }
        }
        for (k, &d) in &other.terms {
            if !self.terms.contains_key(k) {
                out.push((k.clone(), 0, d));
            }
        }
        out
    }

    /// Keeps only the basis elements in which a component target is
    /// realizable: the external times along the target word rise, then fall.
    pub fn restricted_to(&self, target: &SuperIndex) -> NormalForm {
        let word: Vec<Label> = target
            .body()
            .iter()
            .filter_map(|it| match it {
                IndexItem::Plain(x) => Some(*x),
                _ => None,
            })
            .collect();
        if !target.is_component() || word.len() < 3 {
            return self.clone();
        }
        NormalForm {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| unimodal_peak(&word, &k.order).is_some())
                .map(|(k, c)| (k.clone(), *c))
                .collect(),
        }
    }

    /// Expression with one step chain per basis element.
    pub fn to_expression(&self, internal: &[Label]) -> RealTimeExpression {
        RealTimeExpression::new(
            self.terms
                .iter()
                .map(|(k, &c)| {
                    let factors = k
                        .components
                        .iter()
                        .map(|nc| {
                            Factor::new(
                                &SubFunction {
                                    name: nc.name.clone(),
                                    args: nc.args.clone(),
                                },
                                SuperIndex::with_matsubara(
                                    nc.matsubara.clone(),
                                    nc.word.iter().copied().map(IndexItem::Plain).collect(),
                                ),
                            )
                        })
                        .collect();
                    RealTimeTerm::new(c, vec![k.order.clone()], factors, internal)
                })
                .collect(),
        )
    }
}

/// Index of the peak if times along `word` (ranked by `order`, latest
/// first) increase up to it and decrease after it.
fn unimodal_peak(word: &[Label], order: &[Label]) -> Option<usize> {
    let rank = |l: &Label| order.len() - order.iter().position(|x| x == l).expect("ordered label");
    let t: Vec<usize> = word.iter().map(rank).collect();
    if t.is_empty() {
        return Some(0);
    }
    let peak = (0..t.len()).max_by_key(|&i| t[i])?;
    let rising = t[..=peak].windows(2).all(|w| w[0] < w[1]);
    let falling = t[peak..].windows(2).all(|w| w[0] > w[1]);
    (rising && falling).then_some(peak)
}

/// A step word over argument slots: sign, θ chains, Matsubara slot mask, slot order.
type SlotWord = (i64, Vec<Vec<Label>>, u32, Vec<u8>);

fn factor_words(f: &Factor) -> Result<Vec<StepWord>> {
    f.index
        .check_cover(&f.args)
        .map_err(|e| Error::NotFullyExpanded(format!("{}^{{{}}}: {e}", f.name, f.index)))?;
    Ok(expand_retarded(&f.index))
}

/// Normal form of an expression whose factors are components or
/// compositions of single sub-functions.
pub fn normal_form(expr: &RealTimeExpression) -> Result<NormalForm> {
    let mut nf = NormalForm::default();
    for t in &expr.terms {
        term_normal_form(t, &mut nf)?;
    }
    Ok(nf.pruned())
}

fn term_normal_form(t: &RealTimeTerm, nf: &mut NormalForm) -> Result<()> {
    let mut acc: Vec<(i64, Vec<Vec<Label>>, Vec<NfComponent>)> =
        vec![(t.scalar.coeff, t.steps.clone(), Vec::new())];
    for f in &t.factors {
        let words = factor_words(f)?;
        let mut next = Vec::with_capacity(acc.len() * words.len());
        for (s, ch, comps) in &acc {
            for w in &words {
                let mut ch = ch.clone();
                ch.extend(w.chains.iter().cloned());
                let mut comps = comps.clone();
                comps.push(NfComponent {
                    name: f.name.clone(),
                    args: f.args.clone(),
                    matsubara: w.matsubara.clone(),
                    word: w.word.clone(),
                });
                next.push((s * w.sign, ch, comps));
            }
        }
        acc = next;
    }
    for (s, chains, mut comps) in acc {
        comps.sort();
        let mut real: Vec<Label> = comps.iter().flat_map(|c| c.word.iter().copied()).collect();
        real.sort();
        real.dedup();
        for c in &chains {
            if c.iter().any(|l| !real.contains(l)) {
                return Err(Error::NotFullyExpanded(format!(
                    "step chain over a label that is not a real time: {c:?}"
                )));
            }
        }
        for order in linear_extensions(&real, &chains) {
            nf.add(
                NfKey {
                    order,
                    components: comps.clone(),
                    neg_i_power: t.scalar.neg_i_power,
                },
                s,
            );
        }
    }
    Ok(())
}

pub fn normal_form_equal(x: &RealTimeExpression, y: &RealTimeExpression) -> Result<bool> {
    Ok(normal_form(x)? == normal_form(y)?)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Branch {
    Forward,
    Backward,
    Matsubara,
}

/// Contour sort key, larger is later: forward `(0, t)`, backward `(1, −t)`,
/// Matsubara last.
fn contour_key(b: Branch, t: f64) -> (u8, f64) {
    match b {
        Branch::Forward => (0, t),
        Branch::Backward => (1, -t),
        Branch::Matsubara => (2, t),
    }
}

fn induced_component(f: &SubFunction, branch: &impl Fn(Label) -> (Branch, f64)) -> NfComponent {
    let mut matsubara = Vec::new();
    let mut real = Vec::new();
    for &l in &f.args {
        let (b, t) = branch(l);
        if b == Branch::Matsubara {
            matsubara.push(l);
        } else {
            real.push((contour_key(b, t), l));
        }
    }
    matsubara.sort();
    real.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
    NfComponent {
        name: f.name.clone(),
        args: f.args.clone(),
        matsubara,
        word: real.into_iter().map(|x| x.1).collect(),
    }
}

/// Exact contour-side normal form by splitting every internal integral over
/// the branches and every real-time configuration over total orders.
///
/// An external word that no placement of real times on the two branches
/// realizes is skipped when there are internal labels. Without internal
/// labels the product's components follow from the word alone, so such
/// sectors are kept.
pub fn branch_split_oracle(eq: &ContourEquation, target: &SuperIndex) -> Result<NormalForm> {
    target.check_cover(&eq.external)?;
    let branches: &[Branch] = match eq.contour {
        Contour::Keldysh => &[Branch::Forward, Branch::Backward],
        Contour::Extended => &[Branch::Forward, Branch::Backward, Branch::Matsubara],
    };
    let n_int = eq.internal.len();
    let mut nf = NormalForm::default();
    for sw in expand_retarded(target) {
        for code in 0..branches.len().pow(n_int as u32) {
            let mut place = Vec::with_capacity(n_int);
            let mut c = code;
            for _ in 0..n_int {
                place.push(branches[c % branches.len()]);
                c /= branches.len();
            }
            let mut real: Vec<Label> = sw.word.clone();
            let mut sign = sw.sign;
            let mut power = 0u32;
            for (&l, &b) in eq.internal.iter().zip(&place) {
                match b {
                    Branch::Forward => real.push(l),
                    Branch::Backward => {
                        real.push(l);
                        sign = -sign;
                    }
                    Branch::Matsubara => power += 1,
                }
            }
            real.sort();
            for order in linear_extensions(&real, &sw.chains) {
                let peak = unimodal_peak(&sw.word, &order);
                if peak.is_none() && n_int > 0 {
                    continue;
                }
                let time = |l: Label| {
                    (order.len() - order.iter().position(|&x| x == l).expect("ordered")) as f64
                };
                let locate = |l: Label| -> (Branch, f64) {
                    if sw.matsubara.contains(&l) {
                        return (Branch::Matsubara, 0.0);
                    }
                    if let Some(i) = sw.word.iter().position(|&x| x == l) {
                        return match peak {
                            Some(p) if i < p => (Branch::Backward, time(l)),
                            Some(_) => (Branch::Forward, time(l)),
                            None => (Branch::Forward, (sw.word.len() - i) as f64),
                        };
                    }
                    let k = eq
                        .internal
                        .iter()
                        .position(|&x| x == l)
                        .expect("internal label");
                    (
                        place[k],
                        if place[k] == Branch::Matsubara {
                            0.0
                        } else {
                            time(l)
                        },
                    )
                };
                let mut comps: Vec<NfComponent> = eq
                    .product
                    .iter()
                    .map(|f| induced_component(f, &locate))
                    .collect();
                comps.sort();
                nf.add(
                    NfKey {
                        order,
                        components: comps,
                        neg_i_power: power,
                    },
                    sign,
                );
            }
        }
    }
    Ok(nf.pruned())
}

/// Tie-free discrete contour: every label gets its own midpoint grid on
/// `[0, t_max]`, shifted by an irrational fraction of the spacing, shared by
/// the forward and backward branches; the Matsubara branch spans `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteContour {
    pub t0: f64,
    pub t_max: f64,
    pub n_real: usize,
    pub n_mats: usize,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

impl DiscreteContour {
    pub fn new(n: usize) -> Self {
        DiscreteContour {
            t0: 0.0,
            t_max: 1.0,
            n_real: n,
            n_mats: n,
        }
    }

    fn offset(l: Label) -> f64 {
        let k = (l.0 as u32 - 'a' as u32 + 1) as f64;
        0.1 + 0.8 * (k * GOLDEN).fract()
    }

    /// Real-time grid points of one label.
    pub fn real_points(&self, l: Label) -> Vec<f64> {
        let h = (self.t_max - self.t0) / self.n_real as f64;
        let o = Self::offset(l);
        (0..self.n_real)
            .map(|k| self.t0 + (k as f64 + o) * h)
            .collect()
    }

    pub fn real_weight(&self) -> f64 {
        (self.t_max - self.t0) / self.n_real as f64
    }

    pub fn mats_points(&self, l: Label) -> Vec<f64> {
        let o = Self::offset(l);
        (0..self.n_mats)
            .map(|k| (k as f64 + o) / self.n_mats as f64)
            .collect()
    }

    pub fn mats_weight(&self) -> f64 {
        1.0 / self.n_mats as f64
    }
}

#[derive(Clone, Debug)]
struct Smooth {
    c0: Complex64,
    lin: Vec<Complex64>,
    amp: Vec<Complex64>,
    freq: Vec<f64>,
    phase: Vec<f64>,
    cross: Complex64,
    m1: Complex64,
    m2: Complex64,
    mix: Complex64,
    wm: f64,
}

impl Smooth {
    fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let c = |rng: &mut ChaCha8Rng| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        Smooth {
            c0: c(rng),
            lin: (0..n).map(|_| c(rng)).collect(),
            amp: (0..n).map(|_| c(rng)).collect(),
            freq: (0..n).map(|_| rng.gen_range(0.5..4.0)).collect(),
            phase: (0..n).map(|_| rng.gen_range(0.0..TAU)).collect(),
            cross: c(rng),
            m1: c(rng),
            m2: c(rng),
            mix: c(rng),
            wm: rng.gen_range(0.5..4.0),
        }
    }

    /// Real arguments enter by position; Matsubara arguments only through
    /// symmetric combinations.
    fn eval(&self, times: &[f64], mats_mask: u32) -> Complex64 {
        let mut v = self.c0;
        let mut prod = 1.0;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut tr = 0.0;
        for (i, &t) in times.iter().enumerate() {
            if mats_mask & (1 << i) != 0 {
                s1 += t;
                s2 += (self.wm * t).cos();
            } else {
                v += self.lin[i] * t + self.amp[i] * (self.freq[i] * t + self.phase[i]).cos();
                prod *= (1.0 + t).sin();
                tr += t;
            }
        }
        v + self.cross * prod + self.m1 * s1 + self.m2 * s2 + self.mix * s1 * tr
    }
}

/// Random smooth values for every component of every sub-function.
#[derive(Clone, Debug)]
pub struct ComponentTable {
    functions: Vec<SubFunction>,
    entries: Vec<HashMap<(u32, Vec<u8>), Smooth>>,
}

impl ComponentTable {
    pub fn new(functions: &[SubFunction], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = functions
            .iter()
            .map(|f| {
                let n = f.args.len();
                let mut map = HashMap::new();
                for mask in 0u32..(1 << n) {
                    let real: Vec<u8> = (0..n as u8).filter(|i| mask & (1 << i) == 0).collect();
                    for p in Permutation::all(real.len()) {
                        map.insert((mask, p.apply(&real)), Smooth::random(n, &mut rng));
                    }
                }
                map
            })
            .collect();
        ComponentTable {
            functions: functions.to_vec(),
            entries,
        }
    }

    /// Value of the component `M(mask) word` of sub-function `f`; `word`
    /// lists 0-based argument positions latest first, `times` is indexed by
    /// argument position.
    pub fn value(&self, f: usize, mask: u32, word: &[u8], times: &[f64]) -> Result<Complex64> {
        self.entries[f]
            .get(&(mask, word.to_vec()))
            .map(|s| s.eval(times, mask))
            .ok_or_else(|| {
                Error::UnknownComponent(format!(
                    "{} mask {mask:b} word {word:?}",
                    self.functions[f].name
                ))
            })
    }

    fn function_index(&self, name: &str, args: &[Label]) -> Result<usize> {
        self.functions
            .iter()
            .position(|f| f.name == name && f.args == args)
            .ok_or_else(|| Error::UnknownComponent(format!("no sub-function {name}")))
    }
}

/// Placement of external times: real externals by value, Matsubara
/// externals by imaginary depth in `[0, 1]`.
pub type ExternalTimes = BTreeMap<Label, f64>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContourOptions {
    /// Put the latest external on the backward branch instead of the forward one.
    pub peak_backward: bool,
    /// Drop internal grid points later than the latest external time.
    pub truncate: bool,
}

type Slots = [(Branch, f64); 26];

fn slot(l: Label) -> usize {
    (l.0 as u8 - b'a') as usize
}

fn check_ties(
    grid: &DiscreteContour,
    labels: &[Label],
    ext: &ExternalTimes,
    mats: &[Label],
) -> Result<()> {
    for (&e, &t) in ext {
        if mats.contains(&e) {
            continue;
        }
        for &l in labels {
            if grid.real_points(l).iter().any(|&p| (p - t).abs() < 1e-12) {
                return Err(Error::GridTieError(format!(
                    "external `{e}` at t = {t} meets the grid of `{l}`"
                )));
            }
        }
    }
    let mut seen: Vec<f64> = ext
        .iter()
        .filter(|(e, _)| !mats.contains(e))
        .map(|(_, &t)| t)
        .collect();
    seen.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if seen.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-12) {
        return Err(Error::GridTieError("coinciding external times".into()));
    }
    Ok(())
}

fn product_value(
    eq_fns: &[SubFunction],
    tables: &ComponentTable,
    slots: &Slots,
) -> Result<Complex64> {
    let mut v = Complex64::new(1.0, 0.0);
    let mut times = [0.0f64; 8];
    for (fi, f) in eq_fns.iter().enumerate() {
        let mut mask = 0u32;
        let mut real: [(u8, f64, u8); 8] = [(0, 0.0, 0); 8];
        let mut n = 0;
        for (i, &l) in f.args.iter().enumerate() {
            let (b, t) = slots[slot(l)];
            times[i] = t;
            if b == Branch::Matsubara {
                mask |= 1 << i;
            } else {
                let (k, tt) = contour_key(b, t);
                real[n] = (k, tt, i as u8);
                n += 1;
            }
        }
        let rs = &mut real[..n];
        rs.sort_by(|a, b| (b.0, b.1).partial_cmp(&(a.0, a.1)).expect("finite"));
        let word: Vec<u8> = rs.iter().map(|x| x.2).collect();
        v *= tables.value(fi, mask, &word, &times[..f.args.len()])?;
    }
    Ok(v)
}

/// Contour side of `D^{target}`: a discrete contour integral over the
/// internal labels of the product of sub-functions, each evaluated by
/// contour-order lookup into the tables.
pub fn evaluate_contour_side(
    eq: &ContourEquation,
    target: &SuperIndex,
    tables: &ComponentTable,
    grid: &DiscreteContour,
    ext: &ExternalTimes,
    opts: ContourOptions,
) -> Result<Complex64> {
    check_ties(grid, &eq.internal, ext, target.matsubara())?;
    let t_cut = ext
        .iter()
        .filter(|(l, _)| !target.matsubara().contains(l))
        .map(|(_, &t)| t)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = Complex64::new(0.0, 0.0);
    for sw in expand_retarded(target) {
        if !chains_hold(&sw.chains, ext) {
            continue;
        }
        let mut slots: Slots = [(Branch::Forward, 0.0); 26];
        for &m in &sw.matsubara {
            slots[slot(m)] = (Branch::Matsubara, ext[&m]);
        }
        if !sw.word.is_empty() {
            let tw: Vec<f64> = sw.word.iter().map(|l| ext[l]).collect();
            let peak = (0..tw.len())
                .max_by(|&i, &j| tw[i].partial_cmp(&tw[j]).expect("finite"))
                .expect("non-empty");
            let rising = tw[..=peak].windows(2).all(|w| w[0] < w[1]);
            let falling = tw[peak..].windows(2).all(|w| w[0] > w[1]);
            if !(rising && falling) {
                return Err(Error::CoverError(format!(
                    "external times do not realize the contour order `{}`",
                    SuperIndex::word(&sw.word)
                )));
            }
            for (i, &l) in sw.word.iter().enumerate() {
                let back = i < peak || (i == peak && opts.peak_backward);
                slots[slot(l)] = (
                    if back {
                        Branch::Backward
                    } else {
                        Branch::Forward
                    },
                    ext[&l],
                );
            }
        }
        let points = internal_points(eq, grid, opts.truncate.then_some(t_cut));
        let mut acc = Complex64::new(0.0, 0.0);
        sum_points(
            &points,
            0,
            Complex64::new(sw.sign as f64, 0.0),
            &mut slots,
            &mut |w, s| {
                acc += w * product_value(&eq.product, tables, s)?;
                Ok(())
            },
        )?;
        total += acc;
    }
    Ok(total)
}

type Points = Vec<(Label, Vec<(Branch, f64, Complex64)>)>;

fn internal_points(eq: &ContourEquation, grid: &DiscreteContour, cut: Option<f64>) -> Points {
    let h = grid.real_weight();
    let hm = grid.mats_weight();
    eq.internal
        .iter()
        .map(|&l| {
            let mut pts = Vec::new();
            for t in grid.real_points(l) {
                if cut.is_some_and(|c| t > c) {
                    continue;
                }
                pts.push((Branch::Forward, t, Complex64::new(h, 0.0)));
                pts.push((Branch::Backward, t, Complex64::new(-h, 0.0)));
            }
            if eq.contour == Contour::Extended {
                for tau in grid.mats_points(l) {
                    pts.push((Branch::Matsubara, tau, Complex64::new(0.0, -hm)));
                }
            }
            (l, pts)
        })
        .collect()
}

fn sum_points(
    points: &Points,
    k: usize,
    weight: Complex64,
    slots: &mut Slots,
    f: &mut impl FnMut(Complex64, &Slots) -> Result<()>,
) -> Result<()> {
    if k == points.len() {
        return f(weight, slots);
    }
    let (l, pts) = &points[k];
    for &(b, t, w) in pts {
        slots[slot(*l)] = (b, t);
        sum_points(points, k + 1, weight * w, slots, f)?;
    }
    Ok(())
}

fn chains_hold(chains: &[Vec<Label>], times: &ExternalTimes) -> bool {
    chains
        .iter()
        .all(|c| c.windows(2).all(|w| times[&w[0]] > times[&w[1]]))
}

fn chains_hold_slots(chains: &[Vec<Label>], slots: &Slots) -> bool {
    chains.iter().all(|c| {
        c.windows(2)
            .all(|w| slots[slot(w[0])].1 > slots[slot(w[1])].1)
    })
}

/// Real-time side of a rule on the same grids: real internals on the
/// real grid, imaginary internals on the Matsubara grid, compositions
/// evaluated through their step-weighted expansion.
pub fn evaluate_realtime_side(
    eq: &ContourEquation,
    expr: &RealTimeExpression,
    tables: &ComponentTable,
    grid: &DiscreteContour,
    ext: &ExternalTimes,
    ext_mats: &[Label],
) -> Result<Complex64> {
    let h = grid.real_weight();
    let hm = grid.mats_weight();
    let mut total = Complex64::new(0.0, 0.0);
    for t in &expr.terms {
        let mut expanded = Vec::new();
        for f in &t.factors {
            let fi = tables.function_index(&f.name, &f.args)?;
            let words: Vec<SlotWord> = factor_words(f)?
                .into_iter()
                .map(|w| {
                    let pos =
                        |l: &Label| f.args.iter().position(|a| a == l).expect("argument") as u8;
                    let mask = w.matsubara.iter().fold(0u32, |m, l| m | 1 << pos(l));
                    (w.sign, w.chains, mask, w.word.iter().map(pos).collect())
                })
                .collect();
            expanded.push((fi, f.args.clone(), words));
        }
        let scalar = Complex64::new(t.scalar.coeff as f64, 0.0)
            * Complex64::new(0.0, -1.0).powu(t.scalar.neg_i_power);
        let points: Points = eq
            .internal
            .iter()
            .filter(|l| t.real_integrals.contains(l) || t.imag_integrals.contains(l))
            .map(|&l| {
                let pts = if t.imag_integrals.contains(&l) {
                    grid.mats_points(l)
                        .into_iter()
                        .map(|tau| (Branch::Matsubara, tau, Complex64::new(hm, 0.0)))
                        .collect()
                } else {
                    grid.real_points(l)
                        .into_iter()
                        .map(|x| (Branch::Forward, x, Complex64::new(h, 0.0)))
                        .collect()
                };
                (l, pts)
            })
            .collect();
        let mut slots: Slots = [(Branch::Forward, 0.0); 26];
        for (&l, &x) in ext {
            slots[slot(l)] = (
                if ext_mats.contains(&l) {
                    Branch::Matsubara
                } else {
                    Branch::Forward
                },
                x,
            );
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mut times = [0.0f64; 8];
        sum_points(&points, 0, scalar, &mut slots, &mut |w, s| {
            if !chains_hold_slots(&t.steps, s) {
                return Ok(());
            }
            let mut v = w;
            for (fi, args, words) in &expanded {
                for (i, l) in args.iter().enumerate() {
                    times[i] = s[slot(*l)].1;
                }
                let mut fv = Complex64::new(0.0, 0.0);
                for (sign, chains, mask, word) in words {
                    if chains_hold_slots(chains, s) {
                        fv +=
                            *sign as f64 * tables.value(*fi, *mask, word, &times[..args.len()])?;
                    }
                }
                v *= fv;
                if v == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            acc += v;
            Ok(())
        })?;
        total += acc;
    }
    Ok(total)
}

/// Integral of a sub-function over all of its arguments on the Keldysh
/// contour, with the sum of absolute contributions as scale.
pub fn total_contour_integral(
    f: &SubFunction,
    tables: &ComponentTable,
    grid: &DiscreteContour,
) -> Result<(Complex64, f64)> {
    let eq = ContourEquation {
        lhs_name: "Z".into(),
        external: Vec::new(),
        internal: f.args.clone(),
        product: vec![f.clone()],
        contour: Contour::Keldysh,
    };
    let points = internal_points(&eq, grid, None);
    let mut slots: Slots = [(Branch::Forward, 0.0); 26];
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    sum_points(
        &points,
        0,
        Complex64::new(1.0, 0.0),
        &mut slots,
        &mut |w, s| {
            let v = w * product_value(std::slice::from_ref(f), tables, s)?;
            sum += v;
            scale += v.norm();
            Ok(())
        },
    )?;
    Ok((sum, scale))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub seeds: Vec<u64>,
    pub grid: usize,
    pub tol: f64,
    /// External-time samples per ordering class.
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seeds: vec![1, 2, 3],
            grid: 24,
            tol: 1e-8,
            samples: 1,
        }
    }
}

impl VerifyConfig {
    /// A zero tolerance is accepted; it only passes exact agreement.
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::RangeError(format!(
                "tolerance {} is not a finite non-negative number",
                self.tol
            )));
        }
        if self.grid < 4 {
            return Err(Error::RangeError(format!(
                "grid of {} points per branch, need at least 4",
                self.grid
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::RangeError("no seeds".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NumericRecord {
    pub seed: u64,
    pub samples: usize,
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VerifyReport {
    pub equation: String,
    pub target: String,
    pub symbolic_pass: bool,
    /// Rule terms whose expansion touches a mismatching basis element.
    pub offending_terms: Vec<String>,
    pub mismatches: usize,
    pub numeric: Vec<NumericRecord>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn summary(&self) -> String {
        let max = self.numeric.iter().map(|r| r.max_error).fold(0.0, f64::max);
        format!(
            "{} {}^{{{}}}: symbolic {} numeric {} (max error {:.2e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.equation,
            self.target,
            if self.symbolic_pass { "ok" } else { "mismatch" },
            if self.numeric.iter().all(|r| r.pass) {
                "ok"
            } else {
                "mismatch"
            },
            max
        )
    }
}

/// External-time samples: one random configuration per total order of the
/// real externals consistent with the target's step chains.
pub fn sample_externals(
    eq: &ContourEquation,
    target: &SuperIndex,
    rng: &mut ChaCha8Rng,
    per_class: usize,
) -> Vec<ExternalTimes> {
    let mats = target.matsubara();
    let real: Vec<Label> = eq
        .external
        .iter()
        .copied()
        .filter(|l| !mats.contains(l))
        .collect();
    let mut required: Vec<Vec<Label>> = Vec::new();
    if let Some(IndexItem::Retarded { .. }) = target.body().first() {
        if target.body().len() == 1 {
            let top = target.body()[0].top_label().expect("top");
            required.extend(real.iter().filter(|&&l| l != top).map(|&l| vec![top, l]));
        }
    }
    let mut out = Vec::new();
    for order in linear_extensions(&real, &required) {
        for _ in 0..per_class {
            let mut ts: Vec<f64> = (0..order.len())
                .map(|_| rng.gen_range(0.02..0.98))
                .collect();
            ts.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
            let mut m: ExternalTimes = order.iter().copied().zip(ts).collect();
            for &l in mats {
                m.insert(l, rng.gen_range(0.0..1.0));
            }
            out.push(m);
        }
    }
    out
}

fn numeric_check(
    eq: &ContourEquation,
    target: &SuperIndex,
    expr: &RealTimeExpression,
    cfg: &VerifyConfig,
) -> Result<Vec<NumericRecord>> {
    let grid = DiscreteContour::new(cfg.grid);
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            let tables = ComponentTable::new(&eq.product, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let samples = sample_externals(eq, target, &mut rng, cfg.samples.max(1));
            let errors: Vec<f64> = samples
                .par_iter()
                .map(|ext| {
                    let l = evaluate_contour_side(
                        eq,
                        target,
                        &tables,
                        &grid,
                        ext,
                        ContourOptions::default(),
                    )?;
                    let r =
                        evaluate_realtime_side(eq, expr, &tables, &grid, ext, target.matsubara())?;
                    Ok((l - r).norm() / (1.0 + l.norm().max(r.norm())))
                })
                .collect::<Result<_>>()?;
            let max_error = errors.iter().copied().fold(0.0, f64::max);
            Ok(NumericRecord {
                seed,
                samples: errors.len(),
                max_error,
                pass: errors.iter().all(|&e| e <= cfg.tol),
            })
        })
        .collect()
}

/// Checks a given rule against both oracles.
pub fn verify_expression(
    eq: &ContourEquation,
    target: &SuperIndex,
    expr: &RealTimeExpression,
    cfg: &VerifyConfig,
) -> Result<VerifyReport> {
    cfg.validate()?;
    let oracle = branch_split_oracle(eq, target)?.restricted_to(target);
    let mine = normal_form(expr)?.restricted_to(target);
    let diff = mine.difference(&oracle);
    let mut offending = Vec::new();
    if !diff.is_empty() {
        let show = |t: &RealTimeTerm| {
            emit(
                &RealTimeExpression::new(vec![t.clone()]),
                Format::Text,
                Naming::Labeled,
            )
        };
        // Terms whose removal or sign flip alone repairs the rule.
        for (i, t) in expr.terms.iter().enumerate() {
            let mut rest: Vec<RealTimeTerm> = expr.terms.clone();
            rest.remove(i);
            let removed =
                normal_form(&RealTimeExpression::new(rest.clone()))?.restricted_to(target);
            let mut flipped = t.clone();
            flipped.scalar.coeff = -flipped.scalar.coeff;
            rest.insert(i, flipped);
            let negated = normal_form(&RealTimeExpression::new(rest))?.restricted_to(target);
            if removed.difference(&oracle).is_empty() || negated.difference(&oracle).is_empty() {
                offending.push(show(t)?);
            }
        }
        if offending.is_empty() {
            for t in &expr.terms {
                let mut nf = NormalForm::default();
                term_normal_form(t, &mut nf)?;
                if diff.iter().any(|(k, _, _)| nf.terms.contains_key(k)) {
                    offending.push(show(t)?);
                }
            }
        }
        if offending.is_empty() {
            offending.push("(missing contributions)".into());
        }
    }
    let numeric = numeric_check(eq, target, expr, cfg)?;
    let symbolic_pass = diff.is_empty();
    let pass = symbolic_pass && numeric.iter().all(|r| r.pass);
    Ok(VerifyReport {
        equation: eq.to_string(),
        target: target.to_string(),
        symbolic_pass,
        offending_terms: offending,
        mismatches: diff.len(),
        numeric,
        pass,
    })
}

/// Derives the rule for `target` and checks it against both oracles.
pub fn verify(
    eq: &ContourEquation,
    target: &SuperIndex,
    cfg: &VerifyConfig,
) -> Result<VerifyReport> {
    let expr = derive_rule(eq, target)?;
    verify_expression(eq, target, &expr, cfg)
}
