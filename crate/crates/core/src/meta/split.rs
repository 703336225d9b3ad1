use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    Kfold { k: usize },
    /// Development half for meta-training, final half for meta-testing.
    Phase,
}

/// Meta-training and meta-testing datasets of one fold (or phase).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub folds: Vec<Fold>,
}

fn shuffled(ids: &[usize], seed: u64) -> Vec<usize> {
    let mut v = ids.to_vec();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v
}

fn complement(ids: &[usize], held_out: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = ids.iter().copied().filter(|i| !held_out.contains(i)).collect();
    out.sort_unstable();
    out
}

/// Seeded shuffle, then contiguous chunks. When `k` does not divide the
/// count, the first `n % k` folds get one extra dataset.
pub fn make_kfold(ids: &[usize], k: usize, seed: u64) -> Result<SplitPlan> {
    let n = ids.len();
    if k < 2 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let order = shuffled(ids, seed);
    let (base, rem) = (n / k, n % k);
    let mut start = 0;
    let folds = (0..k)
        .map(|f| {
            let len = base + usize::from(f < rem);
            let mut test = order[start..start + len].to_vec();
            start += len;
            test.sort_unstable();
            Fold {
                train: complement(ids, &test),
                test,
            }
        })
        .collect();
    Ok(SplitPlan {
        kind: SplitKind::Kfold { k },
        folds,
    })
}

/// Seeded split into a development half (the larger one when `n` is odd)
/// and a final half.
pub fn make_phase_split(ids: &[usize], seed: u64) -> Result<SplitPlan> {
    let n = ids.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("phase split needs at least 2 datasets, got {n}")));
    }
    let order = shuffled(ids, seed);
    let dev_len = n.div_ceil(2);
    let mut dev = order[..dev_len].to_vec();
    let mut fin = order[dev_len..].to_vec();
    dev.sort_unstable();
    fin.sort_unstable();
    Ok(SplitPlan {
        kind: SplitKind::Phase,
        folds: vec![Fold { train: dev, test: fin }],
    })
}
