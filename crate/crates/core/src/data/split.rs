use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

/// Disjoint train/validation/test partition of a dataset's design ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Sizes `floor(0.8 n)`, `floor(0.1 n)`, remainder.
fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 8 / 10;
    let val = n / 10;
    (train, val, n - train - val)
}

/// Seeded random 8:1:1 split over individual designs.
pub fn split_design_level(dataset: &Dataset, seed: u64) -> Result<SplitAssignment> {
    let n = dataset.len();
    if n < 10 {
        return Err(Error::TooSmallToSplit(n));
    }
    let mut ids: Vec<String> = dataset.samples.iter().map(|s| s.design_id.clone()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = split_sizes(n);
    let test = ids.split_off(n_train + n_val);
    let val = ids.split_off(n_train);
    Ok(SplitAssignment {
        train: ids,
        val,
        test,
    })
}

/// Seeded 8:1:1 split over kernels: all designs of a kernel land in the
/// same partition. Ratios apply to the kernel count.
pub fn split_kernel_level(dataset: &Dataset, seed: u64) -> Result<SplitAssignment> {
    let mut by_kernel: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for s in &dataset.samples {
        by_kernel
            .entry(s.kernel_id.as_str())
            .or_default()
            .push(s.design_id.clone());
    }
    let mut kernels: Vec<&str> = by_kernel.keys().copied().collect();
    if kernels.len() < 10 {
        return Err(Error::TooSmallToSplit(kernels.len()));
    }
    kernels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_train, n_val, _) = split_sizes(kernels.len());
    let gather = |ks: &[&str]| -> Vec<String> {
        ks.iter().flat_map(|k| by_kernel[k].iter().cloned()).collect()
    };
    Ok(SplitAssignment {
        train: gather(&kernels[..n_train]),
        val: gather(&kernels[n_train..n_train + n_val]),
        test: gather(&kernels[n_train + n_val..]),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;
    use crate::data::dataset::tests::toy_sample;
    use crate::data::Target;

    fn dataset(n: usize, per_kernel: usize) -> Dataset {
        Dataset {
            target: Target::Ff,
            samples: (0..n)
                .map(|i| {
                    toy_sample(&format!("k{}", i / per_kernel), &format!("d{i}"), 1000.0, 1001.0)
                })
                .collect(),
            embedding_file: None,
        }
    }

    #[test]
    fn sizes_follow_floor_rule() {
        assert_eq!(split_sizes(10_108), (8086, 1010, 1012));
        let s = split_design_level(&dataset(10, 1), 0).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn too_small() {
        let err = split_design_level(&dataset(9, 1), 0).unwrap_err();
        assert!(err.to_string().contains("dataset too small to split"));
    }

    #[test]
    fn seeds_matter() {
        let ds = dataset(200, 1);
        let a = split_design_level(&ds, 1).unwrap();
        assert_eq!(a, split_design_level(&ds, 1).unwrap());
        assert_ne!(a, split_design_level(&ds, 2).unwrap());
    }

    #[test]
    fn kernel_level_keeps_kernels_together() {
        let ds = dataset(200, 10);
        let s = split_kernel_level(&ds, 3).unwrap();
        let kernel_of = |id: &String| ds.by_design_id()[id.as_str()].kernel_id.clone();
        let train: HashSet<_> = s.train.iter().map(kernel_of).collect();
        let test: HashSet<_> = s.test.iter().map(kernel_of).collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 200);
        assert_eq!(s.train.len(), 160);
    }

    proptest! {
        #[test]
        fn partitions_all_designs(n in 10usize..400, seed in any::<u64>()) {
            let ds = dataset(n, 1);
            let s = split_design_level(&ds, seed).unwrap();
            let (a, b, c) = split_sizes(n);
            prop_assert_eq!((s.train.len(), s.val.len(), s.test.len()), (a, b, c));
            let all: HashSet<&String> = s.train.iter().chain(&s.val).chain(&s.test).collect();
            prop_assert_eq!(all.len(), n);
        }
    }
}
