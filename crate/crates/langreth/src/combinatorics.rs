//! Shuffle classes, step-function products and nested commutators.

use std::fmt;

use crate::contour_ir::{Label, LinearCombination};
use crate::error::{Error, Result};

/// Permutation in one-line notation: `images[i]` is the image of `i + 1`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Permutation {
    pub images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Option<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x == 0 || x > n || seen[x - 1] {
                return None;
            }
            seen[x - 1] = true;
        }
        Some(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (1..=n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x - 1] = i + 1;
        }
        Permutation { images: inv }
    }

    /// Applies the permutation to a sequence: output slot `i` holds `items[P(i+1) − 1]`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.images.iter().map(|&x| items[x - 1].clone()).collect()
    }

    /// All permutations of `1..=n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(n);
        let mut used = vec![false; n];
        fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
            if cur.len() == n {
                out.push(Permutation {
                    images: cur.clone(),
                });
                return;
            }
            for v in 0..n {
                if !used[v] {
                    used[v] = true;
                    cur.push(v + 1);
                    rec(n, cur, used, out);
                    cur.pop();
                    used[v] = false;
                }
            }
        }
        rec(n, &mut cur, &mut used, &mut out);
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.images.iter().any(|&x| x > 9) {
            ","
        } else {
            ""
        };
        for (i, x) in self.images.iter().enumerate() {
            if i > 0 {
                write!(f, "{sep}")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

/// Merges of a front block `1..k` (or `k..1` when reversed) with a back
/// block `k+1..m`, each keeping its internal order.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ShuffleClass {
    pub m: usize,
    pub k: usize,
    pub reversed_front: bool,
}

impl ShuffleClass {
    pub fn new(m: usize, k: usize, reversed_front: bool) -> Self {
        assert!(k <= m, "front block larger than the whole");
        ShuffleClass {
            m,
            k,
            reversed_front,
        }
    }
}

/// Enumerates a shuffle class in lexicographic order; the count is `C(m, k)`.
pub fn enumerate_shuffles(class: ShuffleClass) -> Vec<Permutation> {
    let front: Vec<usize> = if class.reversed_front {
        (1..=class.k).rev().collect()
    } else {
        (1..=class.k).collect()
    };
    let back: Vec<usize> = (class.k + 1..=class.m).collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(class.m);
    merge_rec(&front, &back, &mut cur, &mut out);
    out.sort();
    out.into_iter()
        .map(|images| Permutation { images })
        .collect()
}

fn merge_rec<T: Clone>(a: &[T], b: &[T], cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
    if a.is_empty() && b.is_empty() {
        out.push(cur.clone());
        return;
    }
    if let Some((x, rest)) = a.split_first() {
        cur.push(x.clone());
        merge_rec(rest, b, cur, out);
        cur.pop();
    }
    if let Some((y, rest)) = b.split_first() {
        cur.push(y.clone());
        merge_rec(a, rest, cur, out);
        cur.pop();
    }
}

/// All total orders (latest first) of `items` compatible with every chain.
/// Chain entries not in `items` are ignored.
pub fn linear_extensions<T: Copy + Eq>(items: &[T], chains: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = items.len();
    let idx = |x: &T| items.iter().position(|y| y == x);
    // preds[j] lists the items that must come before item j.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in chains {
        let pos: Vec<usize> = c.iter().filter_map(idx).collect();
        for w in pos.windows(2) {
            if w[0] != w[1] && !preds[w[1]].contains(&w[0]) {
                preds[w[1]].push(w[0]);
            }
        }
    }
    let mut out = Vec::new();
    let mut placed = vec![false; n];
    let mut cur = Vec::with_capacity(n);
    fn rec<T: Copy>(
        items: &[T],
        preds: &[Vec<usize>],
        placed: &mut [bool],
        cur: &mut Vec<T>,
        out: &mut Vec<Vec<T>>,
    ) {
        if cur.len() == items.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..items.len() {
            if !placed[j] && preds[j].iter().all(|&p| placed[p]) {
                placed[j] = true;
                cur.push(items[j]);
                rec(items, preds, placed, cur, out);
                cur.pop();
                placed[j] = false;
            }
        }
    }
    rec(items, &preds, &mut placed, &mut cur, &mut out);
    out
}

/// Rewrites `Θ(front)·Θ(back)` as a sum of single chains, valid for
/// pairwise distinct times. With `reversed_front` the first factor is
/// `Θ(front reversed)`. Chains sharing labels are merged as partial orders.
pub fn theta_product_decompose(
    front: &[Label],
    back: &[Label],
    reversed_front: bool,
) -> Result<Vec<Vec<Label>>> {
    for chain in [front, back] {
        for (i, x) in chain.iter().enumerate() {
            if chain[i + 1..].contains(x) {
                return Err(Error::OverlappingChains(*x));
            }
        }
    }
    let disjoint = front.iter().all(|x| !back.contains(x));
    if disjoint {
        let mut joined = front.to_vec();
        joined.extend_from_slice(back);
        let class = ShuffleClass::new(joined.len(), front.len(), reversed_front);
        return Ok(enumerate_shuffles(class)
            .into_iter()
            .map(|p| p.apply(&joined))
            .collect());
    }
    let f: Vec<Label> = if reversed_front {
        front.iter().rev().copied().collect()
    } else {
        front.to_vec()
    };
    let mut all = f.clone();
    for x in back {
        if !all.contains(x) {
            all.push(*x);
        }
    }
    Ok(linear_extensions(&all, &[f, back.to_vec()]))
}

/// Expands `[x, i₁, …, i_m] = [⋯[[x, i₁], i₂]⋯, i_m]` into `2^m` signed words.
pub fn nested_commutator<T: Clone + Ord>(items: &[T]) -> LinearCombination<Vec<T>> {
    let Some((head, rest)) = items.split_first() else {
        return LinearCombination::zero();
    };
    let mut terms = vec![(1i64, vec![head.clone()])];
    for y in rest {
        let mut next = Vec::with_capacity(terms.len() * 2);
        for (s, w) in &terms {
            let mut right = w.clone();
            right.push(y.clone());
            next.push((*s, right));
            let mut left = Vec::with_capacity(w.len() + 1);
            left.push(y.clone());
            left.extend_from_slice(w);
            next.push((-*s, left));
        }
        terms = next;
    }
    LinearCombination::new(terms)
}

/// Terms of the nested commutator with exactly `k` items left of the head:
/// those items in decreasing order, the rest increasing, sign `(−1)^k`.
pub fn commutator_slice<T: Clone + Ord>(
    items: &[T],
    k: usize,
) -> Result<LinearCombination<Vec<T>>> {
    let Some((head, rest)) = items.split_first() else {
        return Err(Error::RangeError("empty commutator".into()));
    };
    let m = rest.len();
    if k > m {
        return Err(Error::RangeError(format!(
            "slice {k} of a commutator with {m} inner items"
        )));
    }
    let sign = if k.is_multiple_of(2) { 1 } else { -1 };
    let mut terms = Vec::new();
    for chosen in combinations(m, k) {
        let mut word: Vec<T> = chosen.iter().rev().map(|&i| rest[i].clone()).collect();
        word.push(head.clone());
        word.extend(
            (0..m)
                .filter(|i| !chosen.contains(i))
                .map(|i| rest[i].clone()),
        );
        terms.push((sign, word));
    }
    Ok(LinearCombination::new(terms))
}

/// `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Concatenation product of two formal combinations of words.
pub fn word_product<T: Clone + Ord>(
    a: &LinearCombination<Vec<T>>,
    b: &LinearCombination<Vec<T>>,
) -> LinearCombination<Vec<T>> {
    let mut terms = Vec::with_capacity(a.len() * b.len());
    for (sa, wa) in &a.terms {
        for (sb, wb) in &b.terms {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            terms.push((sa * sb, w));
        }
    }
    LinearCombination::new(terms)
}

/// `[a, b] = ab − ba` on formal combinations.
pub fn bracket<T: Clone + Ord>(
    a: &LinearCombination<Vec<T>>,
    b: &LinearCombination<Vec<T>>,
) -> LinearCombination<Vec<T>> {
    let mut out = word_product(a, b);
    let ba = word_product(b, a);
    out.terms.extend(ba.terms.into_iter().map(|(s, w)| (-s, w)));
    out
}

/// Left-nested bracket of formal combinations.
pub fn nested_bracket<T: Clone + Ord>(
    items: &[LinearCombination<Vec<T>>],
) -> LinearCombination<Vec<T>> {
    let Some((head, rest)) = items.split_first() else {
        return LinearCombination::zero();
    };
    rest.iter().fold(head.clone(), |acc, x| bracket(&acc, x))
}
