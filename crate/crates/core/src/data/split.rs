use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Train / validation / test fractions mirroring a 102 / 14 / 28 subject split.
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.71, 0.10, 0.19];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded disjoint partition of `0..n_total`. Train and validation sizes are
/// `floor(n * f)`; the test split takes the remainder.
pub fn make_split(n_total: usize, fractions: [f64; 3], seed: u64) -> Result<Split> {
    if n_total < 3 {
        return Err(Error::InvalidArgument(format!("cannot split {n_total} items three ways")));
    }
    if fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("split fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let n_train = (n_total as f64 * fractions[0] + 1e-9).floor() as usize;
    let n_val = (n_total as f64 * fractions[1] + 1e-9).floor() as usize;
    let mut idx: Vec<usize> = (0..n_total).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(Split { train: idx, val, test })
}
