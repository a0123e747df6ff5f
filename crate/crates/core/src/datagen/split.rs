use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random train/test partition of `0..n` with `round(n·test_frac)` test rows.
/// Both index lists are returned sorted.
pub fn train_test_split<R: Rng + ?Sized>(n: usize, test_frac: f64, rng: &mut R) -> Result<Split> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::config(format!("test fraction {test_frac} not in (0, 1)")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let n_test = ((n as f64) * test_frac).round() as usize;
    let mut test = perm[..n_test].to_vec();
    let mut train = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, test })
}

/// `k` disjoint folds covering `0..n`, sizes differing by at most one.
pub fn kfold<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::config(format!("cannot make {k} folds from {n} rows")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in perm.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}
