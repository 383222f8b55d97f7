//! Synthetic binary-classification pools.
//!
//! Class 0 is centred on `(-class_sep, ..., -class_sep)` and class 1 on
//! `(+class_sep, ..., +class_sep)`, each with unit isotropic Gaussian noise,
//! so `class_sep` alone controls how much the classes overlap. The generated
//! population is then split at random into a small labeled pool, a large
//! unlabeled pool and a set of equally sized test pools.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::csv_float;

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

/// Identifier of an instance, unique within one generated dataset.
pub type InstanceId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: InstanceId,
    pub features: Vec<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolRole {
    Labeled,
    Unlabeled,
    Test,
}

/// An ordered collection of instances playing one role in the experiment.
///
/// Unlabeled pools still store the true label of every instance; it is the
/// simulation loop's job to only read it when an instance is queried.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPool {
    role: PoolRole,
    instances: Vec<Instance>,
}

impl DataPool {
    pub fn new(role: PoolRole, instances: Vec<Instance>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(instances.len());
        for inst in &instances {
            if !seen.insert(inst.id) {
                return Err(Error::Partition(format!(
                    "duplicate instance id {} in {:?} pool",
                    inst.id, role
                )));
            }
        }
        Ok(Self { role, instances })
    }

    pub fn role(&self) -> PoolRole {
        self.role
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = InstanceId> + '_ {
        self.instances.iter().map(|i| i.id)
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        self.instances.iter().any(|i| i.id == id)
    }

    pub fn positives(&self) -> usize {
        self.instances.iter().filter(|i| i.label.is_positive()).count()
    }

    /// Adds instances moved in from another pool.
    pub(crate) fn extend(&mut self, incoming: Vec<Instance>) {
        debug_assert!(incoming.iter().all(|i| !self.contains(i.id)));
        self.instances.extend(incoming);
    }

    /// Removes and returns the instances with the given ids, in the order
    /// the ids are given. Returns `None` if any id is missing.
    pub(crate) fn take(&mut self, ids: &[InstanceId]) -> Option<Vec<Instance>> {
        let mut positions = Vec::with_capacity(ids.len());
        for &id in ids {
            positions.push(self.instances.iter().position(|i| i.id == id)?);
        }
        let mut sorted = positions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != positions.len() {
            return None;
        }
        let taken: Vec<Instance> = positions.iter().map(|&p| self.instances[p].clone()).collect();
        // Remove from the back so earlier positions stay valid.
        for &p in sorted.iter().rev() {
            self.instances.remove(p);
        }
        Some(taken)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_features: usize,
    pub class_sep: f64,
    pub flip_y: f64,
    pub labeled_size: usize,
    pub unlabeled_size: usize,
    pub n_test_pools: usize,
    pub test_pool_size: usize,
    pub positive_fraction: f64,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_features: 4,
            class_sep: 0.5,
            flip_y: 0.0,
            labeled_size: 10,
            unlabeled_size: 1000,
            n_test_pools: 3,
            test_pool_size: 1000,
            positive_fraction: 0.5,
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn total_size(&self) -> usize {
        self.labeled_size + self.unlabeled_size + self.n_test_pools * self.test_pool_size
    }

    /// Number of positive labels before flip noise is applied.
    pub fn positive_count(&self) -> usize {
        (self.positive_fraction * self.total_size() as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_features", self.n_features),
            ("labeled_size", self.labeled_size),
            ("unlabeled_size", self.unlabeled_size),
            ("n_test_pools", self.n_test_pools),
            ("test_pool_size", self.test_pool_size),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.class_sep > 0.0 && self.class_sep.is_finite()) {
            return Err(Error::Config(format!(
                "class_sep must be a positive finite number, got {}",
                self.class_sep
            )));
        }
        if !(0.0..1.0).contains(&self.flip_y) {
            return Err(Error::Config(format!("flip_y must lie in [0, 1), got {}", self.flip_y)));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(Error::Config(format!(
                "positive_fraction must lie in (0, 1), got {}",
                self.positive_fraction
            )));
        }
        Ok(())
    }
}

/// Draws the full population described by `config`.
///
/// Exactly [`DatasetConfig::positive_count`] instances are generated from
/// the positive centroid; each label is then flipped independently with
/// probability `flip_y`, the collection is shuffled, and ids are assigned in
/// output order. The random stream is consumed identically for every
/// `class_sep`, so for a fixed seed only the centroid offset changes.
pub fn generate_dataset<R: Rng + ?Sized>(config: &DatasetConfig, rng: &mut R) -> Result<Vec<Instance>> {
    config.validate()?;
    let total = config.total_size();
    let n_pos = config.positive_count();

    let mut rows: Vec<(Vec<f64>, Label)> = Vec::with_capacity(total);
    for i in 0..total {
        let label = if i < n_pos { Label::Positive } else { Label::Negative };
        let centre = match label {
            Label::Positive => config.class_sep,
            Label::Negative => -config.class_sep,
        };
        let features = (0..config.n_features)
            .map(|_| centre + rng.sample::<f64, _>(StandardNormal))
            .collect();
        rows.push((features, label));
    }

    if config.flip_y > 0.0 {
        for (_, label) in rows.iter_mut() {
            if rng.random::<f64>() < config.flip_y {
                *label = label.flipped();
            }
        }
    }

    rows.shuffle(rng);
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (features, label))| Instance {
            id: i as InstanceId,
            features,
            label,
        })
        .collect())
}

/// The three disjoint pools of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Pools {
    pub labeled: DataPool,
    pub unlabeled: DataPool,
    pub tests: Vec<DataPool>,
}

/// Randomly partitions `dataset` into labeled, unlabeled and test pools with
/// the sizes in `config`.
pub fn split_pools<R: Rng + ?Sized>(dataset: Vec<Instance>, config: &DatasetConfig, rng: &mut R) -> Result<Pools> {
    config.validate()?;
    if dataset.len() != config.total_size() {
        return Err(Error::Partition(format!(
            "dataset has {} instances but the configuration requires {}",
            dataset.len(),
            config.total_size()
        )));
    }
    let mut dataset = dataset;
    dataset.shuffle(rng);

    let mut rest = dataset.into_iter();
    let labeled = DataPool::new(PoolRole::Labeled, rest.by_ref().take(config.labeled_size).collect())?;
    let unlabeled = DataPool::new(PoolRole::Unlabeled, rest.by_ref().take(config.unlabeled_size).collect())?;
    let tests = (0..config.n_test_pools)
        .map(|_| DataPool::new(PoolRole::Test, rest.by_ref().take(config.test_pool_size).collect()))
        .collect::<Result<Vec<_>>>()?;

    let pools = Pools {
        labeled,
        unlabeled,
        tests,
    };
    pools.check_disjoint()?;
    Ok(pools)
}

impl Pools {
    /// Total number of instances across all pools.
    pub fn total(&self) -> usize {
        self.labeled.len() + self.unlabeled.len() + self.tests.iter().map(DataPool::len).sum::<usize>()
    }

    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.total());
        let all = std::iter::once(&self.labeled)
            .chain(std::iter::once(&self.unlabeled))
            .chain(self.tests.iter());
        for pool in all {
            for id in pool.ids() {
                if !seen.insert(id) {
                    return Err(Error::Partition(format!("instance {id} appears in more than one pool")));
                }
            }
        }
        Ok(())
    }
}

/// Writes `instances` as CSV with header `id,f0,...,f{n-1},label`.
pub fn write_dataset_csv<W: Write>(instances: &[Instance], writer: W) -> Result<()> {
    let io_err = |e: csv::Error| Error::Config(format!("writing dataset CSV: {e}"));
    let n_features = instances.first().map_or(0, |i| i.features.len());
    let mut out = csv::Writer::from_writer(writer);

    let mut header = vec!["id".to_string()];
    header.extend((0..n_features).map(|j| format!("f{j}")));
    header.push("label".to_string());
    out.write_record(&header).map_err(io_err)?;

    for inst in instances {
        let mut record = Vec::with_capacity(n_features + 2);
        record.push(inst.id.to_string());
        record.extend(inst.features.iter().map(|&x| csv_float(x)));
        record.push(inst.label.bit().to_string());
        out.write_record(&record).map_err(io_err)?;
    }
    out.flush()
        .map_err(|e| Error::Config(format!("writing dataset CSV: {e}")))?;
    Ok(())
}
