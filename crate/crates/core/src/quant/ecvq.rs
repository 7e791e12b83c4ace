//! Entropy-constrained vector quantization.
//!
//! Codeword selection minimizes `d(x, c_j) + lambda * (-log2 p_j)` with `d`
//! the squared Euclidean distance. Training alternates assignment, centroid
//! and probability updates; each step can only lower the objective
//! `J = mean[d + lambda * rate]`.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Quantized Gaussian attribute group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    Scale,
    Rotation,
    Dc,
    Sh1,
    Sh2,
    Sh3,
}

impl Attribute {
    pub const ALL: [Attribute; 6] = [
        Attribute::Scale,
        Attribute::Rotation,
        Attribute::Dc,
        Attribute::Sh1,
        Attribute::Sh2,
        Attribute::Sh3,
    ];

    pub fn dim(self) -> usize {
        match self {
            Attribute::Scale | Attribute::Dc => 3,
            Attribute::Rotation => 4,
            Attribute::Sh1 => 9,
            Attribute::Sh2 => 15,
            Attribute::Sh3 => 21,
        }
    }

    /// SH band covered by this attribute (`0` for DC).
    pub fn sh_band(self) -> Option<usize> {
        match self {
            Attribute::Dc => Some(0),
            Attribute::Sh1 => Some(1),
            Attribute::Sh2 => Some(2),
            Attribute::Sh3 => Some(3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Scale => "scale",
            Attribute::Rotation => "rotation",
            Attribute::Dc => "dc",
            Attribute::Sh1 => "sh1",
            Attribute::Sh2 => "sh2",
            Attribute::Sh3 => "sh3",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Static,
    Dynamic,
}

impl Component {
    pub const ALL: [Component; 2] = [Component::Static, Component::Dynamic];

    pub fn name(self) -> &'static str {
        match self {
            Component::Static => "static",
            Component::Dynamic => "dynamic",
        }
    }
}

/// Attribute x component pair that owns one codebook.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId {
    pub attribute: Attribute,
    pub component: Component,
}

impl GroupId {
    pub fn new(attribute: Attribute, component: Component) -> Self {
        GroupId {
            attribute,
            component,
        }
    }

    /// All twelve groups in container order: static groups first.
    pub fn all() -> impl Iterator<Item = GroupId> {
        Component::ALL
            .into_iter()
            .flat_map(|c| Attribute::ALL.into_iter().map(move |a| GroupId::new(a, c)))
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.component.name(), self.attribute.name())
    }
}

/// Probability floor for a codebook of `m` entries.
pub fn probability_floor(m: usize) -> f64 {
    1.0 / (64.0 * m as f64)
}

/// Codewords and symbol probabilities for one attribute group.
#[derive(Clone, Debug, PartialEq)]
pub struct EcvqCodebook {
    pub group: GroupId,
    pub dim: usize,
    /// Row-major `len() x dim`.
    pub codewords: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Rate multiplier used during codeword selection.
    pub lambda: f64,
}

/// Outcome of quantizing one vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcvqCode {
    pub index: usize,
    pub rate_bits: f64,
    pub distortion: f64,
}

impl EcvqCodebook {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn codeword(&self, j: usize) -> &[f64] {
        &self.codewords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rate_bits(&self, j: usize) -> f64 {
        -self.probabilities[j].log2()
    }

    /// Check probabilities sum to one, respect the floor, and shapes agree.
    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::validation("empty codebook"));
        }
        if self.codewords.len() != self.len() * self.dim {
            return Err(Error::validation("codeword array does not match the codebook size"));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("probabilities sum to {sum}")));
        }
        let floor = probability_floor(self.len());
        if self.probabilities.iter().any(|&p| p < floor * (1.0 - 1e-9)) {
            return Err(Error::validation("probability below the floor"));
        }
        Ok(())
    }

    pub fn encode(&self, x: &[f64]) -> Result<EcvqCode> {
        ecvq_encode(x, self)
    }

    /// Drop codewords no sample uses and re-estimate probabilities from the
    /// given assignment. Returns the compacted codebook and remapped indices.
    pub fn compact(&self, assignments: &[usize]) -> (EcvqCodebook, Vec<usize>) {
        let mut counts = vec![0usize; self.len()];
        for &a in assignments {
            counts[a] += 1;
        }
        let mut remap = vec![usize::MAX; self.len()];
        let mut codewords = Vec::new();
        let mut kept_counts = Vec::new();
        for (j, &c) in counts.iter().enumerate() {
            if c > 0 {
                remap[j] = kept_counts.len();
                codewords.extend_from_slice(self.codeword(j));
                kept_counts.push(c);
            }
        }
        if kept_counts.is_empty() {
            return (self.clone(), assignments.to_vec());
        }
        let probabilities = floored_frequencies(&kept_counts);
        let cb = EcvqCodebook {
            group: self.group,
            dim: self.dim,
            codewords,
            probabilities,
            lambda: self.lambda,
        };
        (cb, assignments.iter().map(|&a| remap[a]).collect())
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Entropy-constrained codeword selection; ties go to the lowest index.
pub fn ecvq_encode(x: &[f64], cb: &EcvqCodebook) -> Result<EcvqCode> {
    if cb.is_empty() {
        return Err(Error::validation("empty codebook"));
    }
    if x.len() != cb.dim {
        return Err(Error::validation(format!(
            "vector of dimension {} for a codebook of dimension {}",
            x.len(),
            cb.dim
        )));
    }
    Ok(encode_unchecked(x, cb))
}

fn encode_unchecked(x: &[f64], cb: &EcvqCodebook) -> EcvqCode {
    let mut best = EcvqCode {
        index: 0,
        rate_bits: 0.0,
        distortion: 0.0,
    };
    let mut best_cost = f64::INFINITY;
    for j in 0..cb.len() {
        let d = squared_distance(x, cb.codeword(j));
        let r = cb.rate_bits(j);
        let cost = if cb.lambda == 0.0 { d } else { d + cb.lambda * r };
        if cost < best_cost {
            best_cost = cost;
            best = EcvqCode {
                index: j,
                rate_bits: r,
                distortion: d,
            };
        }
    }
    best
}

/// Constrained maximum-likelihood probabilities: `p_j = max(floor, n_j / mu)`
/// with `mu` chosen so the table sums to one.
pub(crate) fn floored_frequencies(counts: &[usize]) -> Vec<f64> {
    let m = counts.len();
    let floor = probability_floor(m);
    let mut floored = vec![false; m];
    loop {
        let n_floored = floored.iter().filter(|&&f| f).count();
        let free_mass = 1.0 - n_floored as f64 * floor;
        let free_count: usize = counts
            .iter()
            .zip(&floored)
            .filter(|(_, &f)| !f)
            .map(|(&c, _)| c)
            .sum();
        if free_count == 0 {
            // every entry floored: spread the remaining mass uniformly
            let p = 1.0 / m as f64;
            return vec![p; m];
        }
        let mut changed = false;
        for j in 0..m {
            if !floored[j] && (counts[j] as f64 / free_count as f64) * free_mass < floor {
                floored[j] = true;
                changed = true;
            }
        }
        if !changed {
            let mut p: Vec<f64> = counts
                .iter()
                .zip(&floored)
                .map(|(&c, &f)| {
                    if f {
                        floor
                    } else {
                        c as f64 / free_count as f64 * free_mass
                    }
                })
                .collect();
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= s);
            return p;
        }
    }
}

/// Result of [`ecvq_train`].
#[derive(Clone, Debug)]
pub struct EcvqTraining {
    pub codebook: EcvqCodebook,
    /// Final assignment of every training sample.
    pub assignments: Vec<usize>,
    /// Objective after each iteration.
    pub history: Vec<f64>,
}

/// Alternating ECVQ training seeded from `m` distinct random samples.
pub fn ecvq_train(
    samples: &[Vec<f64>],
    m: usize,
    lambda: f64,
    iters: usize,
    seed: u64,
) -> Result<EcvqTraining> {
    train_group(
        samples,
        m,
        lambda,
        iters,
        seed,
        GroupId::new(Attribute::Scale, Component::Static),
    )
}

pub(crate) fn train_group(
    samples: &[Vec<f64>],
    m: usize,
    lambda: f64,
    iters: usize,
    seed: u64,
    group: GroupId,
) -> Result<EcvqTraining> {
    if m < 1 {
        return Err(Error::validation("codebook size must be at least 1"));
    }
    if samples.is_empty() {
        return Err(Error::validation("no training samples"));
    }
    if samples.len() < m {
        return Err(Error::validation(format!(
            "{} samples cannot seed {m} codewords",
            samples.len()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::validation("lambda must be a non-negative finite value"));
    }
    let dim = samples[0].len();
    if dim == 0 || samples.iter().any(|s| s.len() != dim) {
        return Err(Error::validation("samples have inconsistent dimension"));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut cb = EcvqCodebook {
        group,
        dim,
        codewords: order[..m]
            .iter()
            .flat_map(|&i| samples[i].iter().copied())
            .collect(),
        probabilities: vec![1.0 / m as f64; m],
        lambda,
    };
    let mut history = Vec::with_capacity(iters);
    let mut assignments = assign(samples, &cb);
    for _ in 0..iters {
        // centroids
        let mut sums = vec![0.0; m * dim];
        let mut counts = vec![0usize; m];
        for (s, &j) in samples.iter().zip(&assignments) {
            counts[j] += 1;
            for (acc, v) in sums[j * dim..(j + 1) * dim].iter_mut().zip(s) {
                *acc += v;
            }
        }
        for j in 0..m {
            if counts[j] > 0 {
                for t in 0..dim {
                    cb.codewords[j * dim + t] = sums[j * dim + t] / counts[j] as f64;
                }
            }
        }
        cb.probabilities = floored_frequencies(&counts);
        history.push(objective(samples, &assignments, &cb));
        let next = assign(samples, &cb);
        let converged = next == assignments;
        assignments = next;
        if converged {
            break;
        }
    }
    Ok(EcvqTraining {
        codebook: cb,
        assignments,
        history,
    })
}

fn assign(samples: &[Vec<f64>], cb: &EcvqCodebook) -> Vec<usize> {
    samples
        .par_iter()
        .map(|s| encode_unchecked(s, cb).index)
        .collect()
}

/// `mean[d + lambda * rate]` for a fixed assignment.
pub fn objective(samples: &[Vec<f64>], assignments: &[usize], cb: &EcvqCodebook) -> f64 {
    let total: f64 = samples
        .iter()
        .zip(assignments)
        .map(|(s, &j)| squared_distance(s, cb.codeword(j)) + cb.lambda * cb.rate_bits(j))
        .sum();
    total / samples.len() as f64
}

/// Shannon entropy in bits of the empirical index distribution.
pub fn index_entropy(indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let max = indices.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    indices.iter().for_each(|&i| counts[i] += 1);
    let n = indices.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn book(codewords: Vec<Vec<f64>>, probs: Vec<f64>, lambda: f64) -> EcvqCodebook {
        EcvqCodebook {
            group: GroupId::new(Attribute::Dc, Component::Static),
            dim: codewords[0].len(),
            codewords: codewords.concat(),
            probabilities: probs,
            lambda,
        }
    }

    #[test]
    fn zero_lambda_is_nearest_neighbour() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cws: Vec<Vec<f64>> = (0..16).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let mut probs: Vec<f64> = (0..16).map(|_| rng.random::<f64>() + 0.01).collect();
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        let cb = book(cws.clone(), probs, 0.0);
        for _ in 0..500 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let brute = (0..16)
                .min_by(|&a, &b| {
                    squared_distance(&x, &cws[a])
                        .partial_cmp(&squared_distance(&x, &cws[b]))
                        .unwrap()
                })
                .unwrap();
            assert_eq!(ecvq_encode(&x, &cb).unwrap().index, brute);
        }
    }

    #[test]
    fn equal_distortion_prefers_cheaper_symbol() {
        let cb = book(vec![vec![-1.0], vec![1.0]], vec![0.7, 0.3], 0.1);
        let code = ecvq_encode(&[0.0], &cb).unwrap();
        assert_eq!(code.index, 0);
        let cb = book(vec![vec![-1.0], vec![1.0]], vec![0.3, 0.7], 0.1);
        assert_eq!(ecvq_encode(&[0.0], &cb).unwrap().index, 1);
    }

    #[test]
    fn exact_match_has_zero_distortion() {
        let cb = book(vec![vec![0.0, 1.0], vec![2.0, 2.0]], vec![0.2, 0.8], 0.5);
        let c = ecvq_encode(&[2.0, 2.0], &cb).unwrap();
        assert_eq!(c.index, 1);
        assert_eq!(c.distortion, 0.0);
        assert!((c.rate_bits + 0.8f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn encode_errors() {
        let cb = book(vec![vec![0.0, 1.0]], vec![1.0], 0.0);
        assert!(ecvq_encode(&[1.0], &cb).is_err());
        let empty = EcvqCodebook {
            codewords: vec![],
            probabilities: vec![],
            ..cb
        };
        assert!(ecvq_encode(&[1.0, 0.0], &empty).is_err());
    }

    #[test]
    fn training_exact_cover() {
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let t = ecvq_train(&pts, 8, 0.0, 10, 1).unwrap();
        assert!(*t.history.last().unwrap() < 1e-12);
        let mut cws: Vec<Vec<f64>> = (0..8).map(|j| t.codebook.codeword(j).to_vec()).collect();
        cws.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(cws, pts);
    }

    #[test]
    fn training_errors() {
        let pts = vec![vec![1.0]; 3];
        assert!(ecvq_train(&pts, 0, 0.0, 5, 0).is_err());
        assert!(ecvq_train(&[], 1, 0.0, 5, 0).is_err());
        assert!(ecvq_train(&pts, 4, 0.0, 5, 0).is_err());
    }

    #[test]
    fn objective_never_increases_and_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vec<f64>> = (0..600).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        for lambda in [0.0, 0.01, 0.3] {
            let a = ecvq_train(&pts, 32, lambda, 25, 3).unwrap();
            for w in a.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", a.history);
            }
            a.codebook.validate().unwrap();
            let b = ecvq_train(&pts, 32, lambda, 25, 3).unwrap();
            assert_eq!(a.codebook, b.codebook);
        }
    }

    #[test]
    fn floored_frequencies_respect_floor() {
        let p = floored_frequencies(&[1000, 0, 0, 1]);
        let f = probability_floor(4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= f * (1.0 - 1e-12)));
        assert_eq!(floored_frequencies(&[0, 0]), vec![0.5, 0.5]);
    }

    #[test]
    fn compaction_drops_unused_entries() {
        let cb = book(vec![vec![0.0], vec![5.0], vec![9.0]], vec![0.4, 0.3, 0.3], 0.0);
        let (c, idx) = cb.compact(&[0, 2, 2, 0, 2]);
        assert_eq!(c.len(), 2);
        assert_eq!(c.codewords, vec![0.0, 9.0]);
        assert_eq!(idx, vec![0, 1, 1, 0, 1]);
        c.validate().unwrap();
    }

    #[test]
    fn cross_entropy_bounds_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cws: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random::<f64>()]).collect();
        let cb = book(cws, vec![0.125; 8], 0.02);
        let codes: Vec<EcvqCode> = (0..400)
            .map(|_| ecvq_encode(&[rng.random::<f64>()], &cb).unwrap())
            .collect();
        let mean_rate = codes.iter().map(|c| c.rate_bits).sum::<f64>() / codes.len() as f64;
        let idx: Vec<usize> = codes.iter().map(|c| c.index).collect();
        assert!(mean_rate >= index_entropy(&idx) - 1e-12);
    }
}
