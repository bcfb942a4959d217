//! Seeded instance generators.

use nudge::{EmbeddingMatrix, LabelSet, QuerySet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

pub fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    normalize(&gaussian(rng, d))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize, unit_rows: bool) -> EmbeddingMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| if unit_rows { unit_vector(rng, d) } else { gaussian(rng, d) })
        .collect();
    EmbeddingMatrix::from_rows(&rows).unwrap()
}

/// Data, training and validation queries with single-label targets.
#[derive(Debug, Clone)]
pub struct Instance {
    pub data: EmbeddingMatrix,
    pub train_q: EmbeddingMatrix,
    pub train_l: LabelSet,
    pub val_q: EmbeddingMatrix,
    pub val_l: LabelSet,
}

impl Instance {
    pub fn train(&self) -> QuerySet<'_> {
        QuerySet::new(&self.train_q, &self.train_l)
    }

    pub fn val(&self) -> QuerySet<'_> {
        QuerySet::new(&self.val_q, &self.val_l)
    }
}

/// Queries are noisy copies of a hidden "true" position per record, while the
/// data rows are a perturbed version of those positions. Targets are drawn
/// from a small popular subset so that some records gather several training
/// queries and validation queries share targets with training.
pub fn random_instance(seed: u64, n: usize, d: usize, n_t: usize, n_v: usize, unit_rows: bool) -> Instance {
    let mut r = rng(seed);
    let truth: Vec<Vec<f64>> = (0..n).map(|_| unit_vector(&mut r, d)).collect();
    let noise = r.random_range(0.2..1.2);
    let rows: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| {
            let v: Vec<f64> = t.iter().zip(gaussian(&mut r, d)).map(|(a, b)| a + noise * b).collect();
            if unit_rows {
                normalize(&v)
            } else {
                let s = r.random_range(0.5..1.5);
                v.iter().map(|x| x * s).collect()
            }
        })
        .collect();
    let data = EmbeddingMatrix::from_rows(&rows).unwrap();

    let popular = (n / 3).max(2).min(n);
    let queries = |count: usize, r: &mut ChaCha8Rng| {
        let targets: Vec<usize> = (0..count).map(|_| r.random_range(0..popular)).collect();
        let q_noise = r.random_range(0.1..0.8);
        let rows: Vec<Vec<f64>> = targets
            .iter()
            .map(|&t| {
                let v: Vec<f64> = truth[t].iter().zip(gaussian(r, d)).map(|(a, b)| a + q_noise * b).collect();
                normalize(&v)
            })
            .collect();
        (EmbeddingMatrix::from_rows(&rows).unwrap(), LabelSet::single(&targets))
    };
    let (train_q, train_l) = queries(n_t, &mut r);
    let (val_q, val_l) = queries(n_v, &mut r);
    Instance {
        data,
        train_q,
        train_l,
        val_q,
        val_l,
    }
}

/// Random desk-scale shape `(n, d, n_T, n_V)` within the oracle caps.
pub fn desk_shape(seed: u64, max_n: usize, max_d: usize, max_t: usize, max_v: usize) -> (usize, usize, usize, usize) {
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    (
        r.random_range(3..=max_n),
        r.random_range(2..=max_d),
        r.random_range(1..=max_t),
        r.random_range(1..=max_v),
    )
}

/// Clustered retrieval benchmark: each record has a unit-norm center, the
/// stored embedding is a distorted copy of it, and queries are
/// `normalize(center + N(0, σ²I))` for targets in a popular subset.
#[derive(Debug, Clone)]
pub struct ClusterBench {
    pub inst: Instance,
    pub test_q: EmbeddingMatrix,
    pub test_l: LabelSet,
}

#[derive(Debug, Clone, Copy)]
pub struct ClusterConfig {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub distortion: f64,
    pub popular: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            d: 32,
            sigma: 0.3,
            distortion: 1.0,
            popular: 400,
            n_train: 4000,
            n_val: 400,
            n_test: 1000,
        }
    }
}

pub fn cluster_bench(seed: u64, cfg: &ClusterConfig) -> ClusterBench {
    let mut r = rng(seed);
    let d = cfg.d;
    let centers: Vec<Vec<f64>> = (0..cfg.n).map(|_| unit_vector(&mut r, d)).collect();
    let scale = cfg.distortion / (d as f64).sqrt();
    let rows: Vec<Vec<f64>> = centers
        .iter()
        .map(|c| {
            let v: Vec<f64> = c.iter().zip(gaussian(&mut r, d)).map(|(a, b)| a + scale * b).collect();
            normalize(&v)
        })
        .collect();
    let data = EmbeddingMatrix::from_rows(&rows).unwrap();

    let queries = |count: usize, r: &mut ChaCha8Rng| {
        let targets: Vec<usize> = (0..count).map(|_| r.random_range(0..cfg.popular)).collect();
        let rows: Vec<Vec<f64>> = targets
            .iter()
            .map(|&t| {
                let v: Vec<f64> = centers[t]
                    .iter()
                    .zip(gaussian(r, d))
                    .map(|(a, b)| a + cfg.sigma * b)
                    .collect();
                normalize(&v)
            })
            .collect();
        (EmbeddingMatrix::from_rows(&rows).unwrap(), LabelSet::single(&targets))
    };
    let (train_q, train_l) = queries(cfg.n_train, &mut r);
    let (val_q, val_l) = queries(cfg.n_val, &mut r);
    let (test_q, test_l) = queries(cfg.n_test, &mut r);
    ClusterBench {
        inst: Instance {
            data,
            train_q,
            train_l,
            val_q,
            val_l,
        },
        test_q,
        test_l,
    }
}

/// Fraction of queries whose labeled record is the strict top-1.
pub fn top1_accuracy(queries: &EmbeddingMatrix, labels: &LabelSet, data: &EmbeddingMatrix) -> f64 {
    let c = nudge::correctness(queries, labels, data).unwrap();
    c.count as f64 / queries.rows() as f64
}
