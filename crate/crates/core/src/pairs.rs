//! Signed pairwise supervision: sampling labelled pairs, label noise, and
//! the signed normalized contrastive Laplacian `L_c = I - D^{-1/2} Y D^{-1/2}`.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{rng_for, STREAM_FLIP, STREAM_PAIRS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn from_i64(y: i64) -> Option<Sign> {
        match y {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }
}

/// One labelled node pair. The stored orientation is kept because the
/// probe's features depend on it; the implied matrix `Y` is symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Pair {
    pub i: u32,
    pub j: u32,
    pub sign: Sign,
}

impl Pair {
    pub fn new(i: usize, j: usize, sign: Sign) -> Self {
        Pair {
            i: i as u32,
            j: j as u32,
            sign,
        }
    }

    fn key(&self) -> (u32, u32) {
        (self.i.min(self.j), self.i.max(self.j))
    }
}

/// A conflict-free set of signed pairs over `n` nodes, together with the
/// symmetrized, degree-normalized pair matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    n: usize,
    pairs: Vec<Pair>,
    contrastive_degrees: Vec<u32>,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    // Y_ij / sqrt(D_ii D_jj) for each stored neighbour.
    weights: Vec<f64>,
}

impl PairSet {
    /// Strict constructor: rejects self-pairs, out-of-range nodes and any
    /// repeated unordered pair.
    pub fn new(n: usize, pairs: Vec<Pair>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for p in &pairs {
            Self::check_pair(n, p)?;
            if !seen.insert(p.key()) {
                return Err(Error::DuplicatePair {
                    i: p.i as usize,
                    j: p.j as usize,
                });
            }
        }
        Ok(Self::build(n, pairs))
    }

    /// Collapses repeated unordered pairs that agree in sign, keeping the
    /// first occurrence. Returns the set and the number of entries dropped.
    /// Disagreeing repeats are an error.
    pub fn collapse(n: usize, pairs: Vec<Pair>) -> Result<(Self, usize)> {
        let mut seen = std::collections::HashMap::with_capacity(pairs.len());
        let mut kept = Vec::with_capacity(pairs.len());
        let mut dropped = 0;
        for p in pairs {
            Self::check_pair(n, &p)?;
            match seen.get(&p.key()) {
                None => {
                    seen.insert(p.key(), p.sign);
                    kept.push(p);
                }
                Some(&s) if s == p.sign => dropped += 1,
                Some(_) => {
                    return Err(Error::ConflictingPair {
                        i: p.i as usize,
                        j: p.j as usize,
                    })
                }
            }
        }
        Ok((Self::build(n, kept), dropped))
    }

    pub fn empty(n: usize) -> Self {
        Self::build(n, Vec::new())
    }

    fn check_pair(n: usize, p: &Pair) -> Result<()> {
        for node in [p.i as usize, p.j as usize] {
            if node >= n {
                return Err(Error::NodeOutOfRange { node, n });
            }
        }
        if p.i == p.j {
            return Err(Error::SelfPair {
                i: p.i as usize,
                j: p.j as usize,
            });
        }
        Ok(())
    }

    fn build(n: usize, pairs: Vec<Pair>) -> Self {
        let mut contrastive_degrees = vec![0u32; n];
        for p in &pairs {
            contrastive_degrees[p.i as usize] += 1;
            contrastive_degrees[p.j as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        for &d in &contrastive_degrees {
            offsets.push(offsets.last().unwrap() + d as usize);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut entries = vec![(0u32, 0f64); 2 * pairs.len()];
        for p in &pairs {
            let (i, j) = (p.i as usize, p.j as usize);
            let w = p.sign.value()
                / (contrastive_degrees[i] as f64 * contrastive_degrees[j] as f64).sqrt();
            entries[cursor[i]] = (p.j, w);
            cursor[i] += 1;
            entries[cursor[j]] = (p.i, w);
            cursor[j] += 1;
        }
        for i in 0..n {
            entries[offsets[i]..offsets[i + 1]].sort_unstable_by_key(|e| e.0);
        }
        let (cols, weights) = entries.into_iter().unzip();
        PairSet {
            n,
            pairs,
            contrastive_degrees,
            offsets,
            cols,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored pairs, `P`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// `D_c,ii`: number of stored pairs incident to each node.
    pub fn contrastive_degrees(&self) -> &[u32] {
        &self.contrastive_degrees
    }

    pub fn count(&self, sign: Sign) -> usize {
        self.pairs.iter().filter(|p| p.sign == sign).count()
    }

    /// Row `i` of `D^{-1/2} Y D^{-1/2}` as `(column, weight)` entries.
    pub fn normalized_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// Same pair set with new signs, in the same order.
    fn with_signs(&self, signs: impl Iterator<Item = Sign>) -> PairSet {
        let pairs = self
            .pairs
            .iter()
            .zip(signs)
            .map(|(p, sign)| Pair { sign, ..*p })
            .collect();
        Self::build(self.n, pairs)
    }
}

/// Per-node class assignment with classes `0..classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeLabels {
    labels: Vec<usize>,
    classes: usize,
}

impl NodeLabels {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("no node labels"));
        }
        let classes = labels.iter().max().unwrap() + 1;
        Ok(NodeLabels { labels, classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.classes];
        for (node, &c) in self.labels.iter().enumerate() {
            members[c].push(node);
        }
        members
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GenerationStats {
    pub requested_positive: usize,
    pub requested_negative: usize,
    pub positive: usize,
    pub negative: usize,
    /// Draws dropped because the same unordered pair was drawn earlier.
    pub collapsed: usize,
}

/// Balanced pair sampling: `floor(P/2)` positive draws uniform over
/// same-class unordered pairs and `P - floor(P/2)` negative draws uniform
/// over cross-class unordered pairs, with replacement. Repeated draws are
/// collapsed, so the result can hold fewer than `P` pairs.
pub fn generate_pairs(
    labels: &NodeLabels,
    count: usize,
    seed: u64,
) -> Result<(PairSet, GenerationStats)> {
    if count < 2 {
        return Err(Error::invalid("pair count must be at least 2"));
    }
    let members = labels.members();
    let positive_weights: Vec<u64> = members
        .iter()
        .map(|m| {
            let s = m.len() as u64;
            s * s.saturating_sub(1) / 2
        })
        .collect();
    if positive_weights.iter().all(|&w| w == 0) {
        return Err(Error::invalid(
            "no positive pair exists: every class has fewer than two nodes",
        ));
    }
    let mut class_pairs = Vec::new();
    let mut negative_weights = Vec::new();
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let w = (members[a].len() * members[b].len()) as u64;
            if w > 0 {
                class_pairs.push((a, b));
                negative_weights.push(w);
            }
        }
    }
    if class_pairs.is_empty() {
        return Err(Error::invalid(
            "no negative pair exists: all nodes share one class",
        ));
    }

    let mut rng = rng_for(seed, STREAM_PAIRS);
    let requested_positive = count / 2;
    let requested_negative = count - requested_positive;
    let mut drawn = Vec::with_capacity(count);

    let pick_class = WeightedIndex::new(&positive_weights).expect("checked nonzero above");
    for _ in 0..requested_positive {
        let class = &members[pick_class.sample(&mut rng)];
        let a = rng.random_range(0..class.len());
        let mut b = rng.random_range(0..class.len() - 1);
        if b >= a {
            b += 1;
        }
        drawn.push(Pair::new(class[a], class[b], Sign::Positive));
    }

    let pick_pair = WeightedIndex::new(&negative_weights).expect("checked nonempty above");
    for _ in 0..requested_negative {
        let (ca, cb) = class_pairs[pick_pair.sample(&mut rng)];
        let u = members[ca][rng.random_range(0..members[ca].len())];
        let v = members[cb][rng.random_range(0..members[cb].len())];
        let pair = if rng.random_bool(0.5) {
            Pair::new(u, v, Sign::Negative)
        } else {
            Pair::new(v, u, Sign::Negative)
        };
        drawn.push(pair);
    }

    let (set, collapsed) = PairSet::collapse(labels.n(), drawn)?;
    let stats = GenerationStats {
        requested_positive,
        requested_negative,
        positive: set.count(Sign::Positive),
        negative: set.count(Sign::Negative),
        collapsed,
    };
    Ok((set, stats))
}

/// Negates the sign of exactly `round(fraction * P)` pairs chosen uniformly
/// without replacement. Contrastive degrees are unaffected.
pub fn flip_labels(pairs: &PairSet, fraction: f64, seed: u64) -> Result<PairSet> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!(
            "flip fraction {fraction} outside [0, 1]"
        )));
    }
    let flips = (fraction * pairs.len() as f64).round() as usize;
    let mut flip = vec![false; pairs.len()];
    let mut rng = rng_for(seed, STREAM_FLIP);
    for idx in rand::seq::index::sample(&mut rng, pairs.len(), flips) {
        flip[idx] = true;
    }
    Ok(pairs.with_signs(
        pairs
            .pairs
            .iter()
            .zip(&flip)
            .map(|(p, &f)| if f { p.sign.flipped() } else { p.sign }),
    ))
}

/// `L_c · S`, row by row: `S_i - Σ_j Y_ij S_j / sqrt(D_ii D_jj)`.
pub fn apply_contrastive_laplacian<T: Real>(
    pairs: &PairSet,
    s: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    let mut out = Array2::zeros(s.raw_dim());
    apply_contrastive_laplacian_into(pairs, s, &mut out)?;
    Ok(out)
}

pub(crate) fn apply_contrastive_laplacian_into<T: Real>(
    pairs: &PairSet,
    s: ArrayView2<'_, T>,
    out: &mut Array2<T>,
) -> Result<()> {
    if s.nrows() != pairs.n {
        return Err(Error::shape(
            format!("{} rows", pairs.n),
            format!("{} rows", s.nrows()),
        ));
    }
    if out.dim() != s.dim() {
        return Err(Error::shape(format!("{:?}", s.dim()), format!("{:?}", out.dim())));
    }
    let k = s.ncols();
    if let (Some(xs), Some(os)) = (s.as_slice(), out.as_slice_mut()) {
        if k > 0 {
            os.par_chunks_mut(k).enumerate().for_each(|(i, row)| {
                row.copy_from_slice(&xs[i * k..(i + 1) * k]);
                for (j, w) in pairs.normalized_row(i) {
                    let w = T::from_f64(w);
                    let src = &xs[j * k..(j + 1) * k];
                    row.iter_mut().zip(src).for_each(|(o, &v)| *o = *o - w * v);
                }
            });
        }
        return Ok(());
    }
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            row.assign(&s.row(i));
            for (j, w) in pairs.normalized_row(i) {
                let w = T::from_f64(w);
                row.zip_mut_with(&s.row(j), |o, &v| *o = *o - w * v);
            }
        });
    Ok(())
}

/// `Tr(Sᵀ L_c S)`, accumulated in `f64`.
pub fn contrastive_quadratic_form<T: Real>(pairs: &PairSet, s: ArrayView2<'_, T>) -> Result<f64> {
    let ls = apply_contrastive_laplacian(pairs, s)?;
    Ok(frobenius_inner(s, ls.view()))
}

pub(crate) fn frobenius_inner<T: Real>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> f64 {
    if let (Some(x), Some(y)) = (a.as_slice(), b.as_slice()) {
        return crate::real::dot_wide(x, y);
    }
    let mut acc = 0.0;
    Zip::from(a).and(b).for_each(|&x, &y| acc += x.widen() * y.widen());
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn forced_balanced_sample() {
        let labels = NodeLabels::new(vec![0, 0, 1, 1]).unwrap();
        for seed in 0..20 {
            let (set, stats) = generate_pairs(&labels, 4, seed).unwrap();
            assert_eq!(stats.requested_positive, 2);
            assert_eq!(stats.requested_negative, 2);
            for p in set.pairs() {
                let key = p.key();
                match p.sign {
                    Sign::Positive => assert!(key == (0, 1) || key == (2, 3)),
                    Sign::Negative => {
                        assert!([(0, 2), (0, 3), (1, 2), (1, 3)].contains(&key))
                    }
                }
            }
            assert_eq!(set.len() + stats.collapsed, 4);
        }
    }

    #[test]
    fn generation_preconditions() {
        let singletons = NodeLabels::new(vec![0, 1]).unwrap();
        assert!(generate_pairs(&singletons, 2, 0).is_err());
        let one_class = NodeLabels::new(vec![0, 0, 0]).unwrap();
        assert!(generate_pairs(&one_class, 4, 0).is_err());
        let ok = NodeLabels::new(vec![0, 0, 1]).unwrap();
        assert!(generate_pairs(&ok, 1, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let labels = NodeLabels::new((0..100).map(|i| i % 4).collect()).unwrap();
        let (a, sa) = generate_pairs(&labels, 1000, 9).unwrap();
        let (b, sb) = generate_pairs(&labels, 1000, 9).unwrap();
        assert_eq!(a.pairs(), b.pairs());
        assert_eq!(sa, sb);
        assert_eq!(sa.positive + sa.negative, a.len());
        assert_eq!(sa.positive + sa.negative + sa.collapsed, 1000);
    }

    #[test]
    fn collapse_and_conflicts() {
        let pairs = vec![
            Pair::new(0, 1, Sign::Positive),
            Pair::new(1, 0, Sign::Positive),
            Pair::new(1, 2, Sign::Negative),
        ];
        let (set, collapsed) = PairSet::collapse(3, pairs.clone()).unwrap();
        assert_eq!((set.len(), collapsed), (2, 1));
        assert!(matches!(
            PairSet::new(3, pairs),
            Err(Error::DuplicatePair { .. })
        ));
        let conflict = vec![Pair::new(0, 1, Sign::Positive), Pair::new(1, 0, Sign::Negative)];
        assert!(matches!(
            PairSet::collapse(2, conflict),
            Err(Error::ConflictingPair { .. })
        ));
        assert!(matches!(
            PairSet::new(2, vec![Pair::new(1, 1, Sign::Positive)]),
            Err(Error::SelfPair { .. })
        ));
    }

    #[test]
    fn flip_counts() {
        let four = PairSet::new(
            5,
            (0..4).map(|i| Pair::new(i, i + 1, Sign::Positive)).collect(),
        )
        .unwrap();
        let flipped = flip_labels(&four, 0.25, 3).unwrap();
        assert_eq!(flipped.count(Sign::Negative), 1);
        assert_eq!(flip_labels(&four, 0.0, 3).unwrap().pairs(), four.pairs());
        assert!(flip_labels(&four, 1.5, 3).is_err());
        assert!(flip_labels(&four, -0.1, 3).is_err());

        let hundred = PairSet::new(
            101,
            (0..100).map(|i| Pair::new(i, i + 1, Sign::Positive)).collect(),
        )
        .unwrap();
        let flipped = flip_labels(&hundred, 0.40, 11).unwrap();
        assert_eq!(flipped.count(Sign::Negative), 40);
        assert_eq!(flipped.contrastive_degrees(), hundred.contrastive_degrees());
    }

    #[test]
    fn laplacian_two_node_cases() {
        let pos = PairSet::new(2, vec![Pair::new(0, 1, Sign::Positive)]).unwrap();
        let s = array![[0.6, 0.8], [0.6, 0.8]];
        let out = apply_contrastive_laplacian(&pos, s.view()).unwrap();
        assert!(out.iter().all(|v: &f64| v.abs() < 1e-15));
        assert!(contrastive_quadratic_form(&pos, s.view()).unwrap().abs() < 1e-15);

        let neg = PairSet::new(2, vec![Pair::new(0, 1, Sign::Negative)]).unwrap();
        let opposite = array![[0.6, 0.8], [-0.6, -0.8]];
        let out = apply_contrastive_laplacian(&neg, opposite.view()).unwrap();
        assert!(out.iter().all(|v: &f64| v.abs() < 1e-15));
        let q = contrastive_quadratic_form(&neg, s.view()).unwrap();
        assert!((q - 4.0).abs() < 1e-12, "q = {q}");
    }

    #[test]
    fn unpaired_rows_pass_through() {
        let set = PairSet::new(3, vec![Pair::new(0, 1, Sign::Positive)]).unwrap();
        let s = array![[1.0, 0.0], [0.0, 1.0], [0.3, -0.2]];
        let out = apply_contrastive_laplacian(&set, s.view()).unwrap();
        assert_eq!(out.row(2), s.row(2));
        assert!(apply_contrastive_laplacian(&set, array![[1.0]].view()).is_err());
    }
}
