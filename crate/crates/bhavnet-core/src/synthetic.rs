//! Synthetic separable pair data for desk-scale end-to-end checks.
//!
//! Each pair starts from a random base vector `v`: a synonym pair embeds its
//! words at `(v, v + e)` and an antonym pair at `(v, -v + e)`, with `e` small
//! uniform noise. A working model separates these easily, which makes the
//! construction a fast fixture for training-loop and gradient tests.

use crate::data::{EmbeddingTable, LabeledPair};
use crate::error::Result;
use crate::rng::Rng;

/// Generate `n_pairs` pairs (alternating synonym/antonym) at width `dim`,
/// embedding tokens `{prefix}{i}a` / `{prefix}{i}b`.
pub fn separable_dataset(
    n_pairs: usize,
    dim: usize,
    noise: f64,
    language: &str,
    prefix: &str,
    rng: &mut Rng,
) -> Result<(EmbeddingTable, Vec<LabeledPair>)> {
    let mut entries = Vec::with_capacity(2 * n_pairs);
    let mut pairs = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let label = (i % 2) as u8;
        let v: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let w: Vec<f64> = v
            .iter()
            .map(|&x| {
                let base = if label == 0 { x } else { -x };
                base + rng.uniform(-noise, noise)
            })
            .collect();
        let t1 = format!("{prefix}{i}a");
        let t2 = format!("{prefix}{i}b");
        entries.push((t1.clone(), v));
        entries.push((t2.clone(), w));
        pairs.push(LabeledPair::new(&t1, &t2, label, language)?);
    }
    let table = EmbeddingTable::from_entries(language, dim, entries)?;
    Ok((table, pairs))
}
