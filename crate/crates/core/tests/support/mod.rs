//! Naive reference implementations and random inputs shared by the tests.
#![allow(dead_code)]

pub mod gen;
pub mod schema;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scenelayer_core::embedding::{Embedding, EmbeddingSet};

/// Plain-loop cosine; `None` when either vector has zero norm.
pub fn naive_cos(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot / (na.sqrt() * nb.sqrt()))
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

fn pick(xs: &[f64], mode: &str) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut best = xs[0];
    for &x in xs {
        match mode {
            "min" if x < best => best = x,
            "max" if x > best => best = x,
            _ => {}
        }
    }
    if mode == "mean" {
        mean(xs)
    } else {
        Some(best)
    }
}

/// Per-sample originality: extremum of similarities to every reference.
pub fn naive_sample_o(g: &[f64], refs: &[Vec<f64>], mode: &str) -> Option<f64> {
    let sims: Vec<f64> = refs.iter().filter_map(|r| naive_cos(r, g)).collect();
    pick(&sims, mode)
}

/// Mean over generated rows of the per-sample originality.
pub fn naive_o(gen: &[Vec<f64>], refs: &[Vec<f64>], mode: &str) -> Option<f64> {
    let per: Vec<f64> = gen.iter().filter_map(|g| naive_sample_o(g, refs, mode)).collect();
    mean(&per)
}

/// Similarity of row `j` to every other row, reduced by `mode`.
pub fn naive_sample_d(rows: &[Vec<f64>], j: usize, mode: &str) -> Option<f64> {
    let mut sims = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if i != j {
            if let Some(c) = naive_cos(r, &rows[j]) {
                sims.push(c);
            }
        }
    }
    pick(&sims, mode)
}

pub fn naive_d(rows: &[Vec<f64>], mode: &str) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let per: Vec<f64> = (0..rows.len())
        .filter_map(|j| naive_sample_d(rows, j, mode))
        .collect();
    mean(&per)
}

/// Random rows; entries in [-1, 1] (or [0, 1] when `nonneg`), and each row is
/// all zeros with probability `zero_p`.
pub fn random_rows(rng: &mut ChaCha8Rng, m: usize, dim: usize, nonneg: bool, zero_p: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| {
            if rng.random_bool(zero_p) {
                vec![0.0; dim]
            } else {
                let lo = if nonneg { 0.0 } else { -1.0 };
                let mut row: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..1.0)).collect();
                if row.iter().all(|&x| x == 0.0) {
                    row[0] = 0.5;
                }
                row
            }
        })
        .collect()
}

pub fn to_set(rows: &[Vec<f64>]) -> EmbeddingSet {
    let rows = rows
        .iter()
        .map(|r| Embedding::new(r.clone(), "test").unwrap())
        .collect();
    EmbeddingSet::from_rows(rows).unwrap()
}

pub fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}
