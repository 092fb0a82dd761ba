//! Class-balanced train/validation/test splits, optionally biased toward one
//! hierarchy band.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{HierarchyLevel, HnmAnnotation};
use crate::graph::{Graph, SplitMask};

/// Size of the validation or test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetSize {
    Count(usize),
    /// Share of the labeled nodes, rounded to the nearest integer.
    Fraction(f64),
    /// Every labeled node not used elsewhere.
    Rest,
}

/// How many nodes go where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// Training labels per class; when absent, `train_fraction` of the
    /// labeled nodes is divided evenly among classes.
    pub per_class: Option<usize>,
    pub train_fraction: f64,
    pub val: SetSize,
    pub test: SetSize,
    /// Preferred origin of training nodes.
    pub band: Option<Band>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::fractional()
    }
}

impl SplitSpec {
    /// 10% train (balanced), 80% test, the rest validation.
    pub fn fractional() -> Self {
        SplitSpec {
            per_class: None,
            train_fraction: 0.1,
            val: SetSize::Rest,
            test: SetSize::Fraction(0.8),
            band: None,
        }
    }

    /// 20 labels per class, 500 validation and 1000 test nodes.
    pub fn planetoid() -> Self {
        SplitSpec {
            per_class: Some(20),
            train_fraction: 0.0,
            val: SetSize::Count(500),
            test: SetSize::Count(1000),
            band: None,
        }
    }

    fn per_class_for(&self, labeled: usize, classes: usize) -> Result<usize> {
        let k = match self.per_class {
            Some(k) => k,
            None => (self.train_fraction * labeled as f64 / classes as f64).round() as usize,
        };
        if k == 0 {
            return Err(Error::InvalidArgument(
                "per-class label count must be at least 1".into(),
            ));
        }
        Ok(k)
    }
}

/// Hierarchy band: HNM tiers, or quintiles of the Poincaré norm (`q1` lowest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Band {
    Level(HierarchyLevel),
    Quintile(u8),
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Band::Level(l) => write!(f, "{l}"),
            Band::Quintile(q) => write!(f, "q{q}"),
        }
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(q) = s.strip_prefix('q') {
            return match q.parse::<u8>() {
                Ok(q @ 1..=5) => Ok(Band::Quintile(q)),
                _ => Err(Error::InvalidArgument(format!("unknown band {s:?}"))),
            };
        }
        s.parse().map(Band::Level)
    }
}

impl TryFrom<String> for Band {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Band> for String {
    fn from(b: Band) -> String {
        b.to_string()
    }
}

/// A split plus the share of training nodes drawn from outside the band.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchySplit {
    pub mask: SplitMask,
    pub top_up_fraction: f64,
}

/// Quintile (1-5) of every node's norm; ties broken by node id.
pub fn norm_quintiles(norms: &[f64]) -> Vec<u8> {
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
    let mut q = vec![0u8; norms.len()];
    for (rank, &v) in order.iter().enumerate() {
        q[v] = (rank * 5 / norms.len()) as u8 + 1;
    }
    q
}

fn labeled_by_class(g: &Graph) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); g.num_classes()];
    for v in 0..g.node_count() {
        if let Some(y) = g.label(v) {
            by_class[y].push(v);
        }
    }
    by_class
}

fn resolve(size: SetSize, labeled: usize, available: usize) -> Result<usize> {
    let k = match size {
        SetSize::Count(k) => k,
        SetSize::Fraction(f) => (f * labeled as f64).round() as usize,
        SetSize::Rest => available,
    };
    if k > available {
        return Err(Error::InvalidArgument(format!(
            "requested {k} nodes but only {available} remain"
        )));
    }
    Ok(k)
}

/// Fills validation and test from the labeled nodes not in `train`.
/// `Rest` on test wins over `Rest` on validation.
fn finish(
    g: &Graph,
    train: Vec<usize>,
    spec: &SplitSpec,
    rng: &mut ChaCha8Rng,
) -> Result<SplitMask> {
    let n = g.node_count();
    let in_train = {
        let mut f = vec![false; n];
        for &v in &train {
            f[v] = true;
        }
        f
    };
    let labeled = (0..n).filter(|&v| g.label(v).is_some()).count();
    let mut rest: Vec<usize> = (0..n)
        .filter(|&v| g.label(v).is_some() && !in_train[v])
        .collect();
    rest.shuffle(rng);
    let (val_n, test_n) = match (spec.val, spec.test) {
        (SetSize::Rest, SetSize::Rest) | (_, SetSize::Rest) => {
            let v = resolve(spec.val, labeled, rest.len())?;
            (v, rest.len() - v)
        }
        (SetSize::Rest, t) => {
            let t = resolve(t, labeled, rest.len())?;
            (rest.len() - t, t)
        }
        (v, t) => {
            let v = resolve(v, labeled, rest.len())?;
            (v, resolve(t, labeled, rest.len() - v)?)
        }
    };
    let val = rest[..val_n].to_vec();
    let test = rest[val_n..val_n + test_n].to_vec();
    SplitMask::new(train, val, test, n)
}

/// Exactly `per_class` random training nodes per class; validation and test
/// drawn from the remaining labeled nodes. Reproducible from `(g, seed)`.
pub fn make_balanced_split(g: &Graph, spec: &SplitSpec, seed: u64) -> Result<SplitMask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class = labeled_by_class(g);
    let labeled: usize = by_class.iter().map(Vec::len).sum();
    let per_class = spec.per_class_for(labeled, g.num_classes())?;
    let mut train = Vec::with_capacity(per_class * by_class.len());
    for (class, nodes) in by_class.iter_mut().enumerate() {
        if nodes.len() < per_class {
            return Err(Error::ClassTooSmall {
                class,
                available: nodes.len(),
                required: per_class,
            });
        }
        nodes.shuffle(&mut rng);
        train.extend_from_slice(&nodes[..per_class]);
    }
    finish(g, train, spec, &mut rng)
}

/// Like [`make_balanced_split`], but training nodes come from `band` first and
/// are topped up with random nodes of the same class when the band runs short.
/// Tier bands need `annotation`, quintile bands need `norms`.
pub fn make_hierarchy_split(
    g: &Graph,
    band: Band,
    annotation: Option<&HnmAnnotation>,
    norms: Option<&[f64]>,
    spec: &SplitSpec,
    seed: u64,
) -> Result<HierarchySplit> {
    let n = g.node_count();
    let in_band: Vec<bool> = match band {
        Band::Level(level) => {
            let a = annotation.ok_or_else(|| {
                Error::InvalidArgument(format!("band {band} needs hierarchy annotations"))
            })?;
            (0..n).map(|v| a.level(v) == level).collect()
        }
        Band::Quintile(q) => {
            let norms = norms.ok_or(Error::MissingNorm(0))?;
            if norms.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: norms.len(),
                });
            }
            norm_quintiles(norms).into_iter().map(|x| x == q).collect()
        }
    };
    if !in_band.iter().any(|&b| b) {
        return Err(Error::EmptyBand(band.to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_class = labeled_by_class(g);
    let labeled: usize = by_class.iter().map(Vec::len).sum();
    let per_class = spec.per_class_for(labeled, g.num_classes())?;
    let mut train = Vec::with_capacity(per_class * by_class.len());
    let mut topped = 0;
    for (class, nodes) in by_class.iter().enumerate() {
        if nodes.len() < per_class {
            return Err(Error::ClassTooSmall {
                class,
                available: nodes.len(),
                required: per_class,
            });
        }
        let (mut inside, mut outside): (Vec<usize>, Vec<usize>) =
            nodes.iter().partition(|&&v| in_band[v]);
        inside.shuffle(&mut rng);
        outside.shuffle(&mut rng);
        let take = inside.len().min(per_class);
        train.extend_from_slice(&inside[..take]);
        train.extend_from_slice(&outside[..per_class - take]);
        topped += per_class - take;
    }
    let top_up_fraction = topped as f64 / train.len() as f64;
    Ok(HierarchySplit {
        mask: finish(g, train, spec, &mut rng)?,
        top_up_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::hnm_three_community;

    fn labeled_path(n: usize, classes: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i)))
            .unwrap()
            .with_labels((0..n).map(|v| Some(v % classes)).collect(), classes)
            .unwrap()
    }

    #[test]
    fn planetoid_sizes() {
        let g = labeled_path(2000, 3);
        let m = make_balanced_split(&g, &SplitSpec::planetoid(), 0).unwrap();
        assert_eq!(m.train.len(), 60);
        assert_eq!(m.val.len(), 500);
        assert_eq!(m.test.len(), 1000);
        for c in 0..3 {
            assert_eq!(m.train.iter().filter(|&&v| v % 3 == c).count(), 20);
        }
    }

    #[test]
    fn fractional_test_share() {
        let g = labeled_path(1024, 3);
        let m = make_balanced_split(&g, &SplitSpec::fractional(), 5).unwrap();
        assert!((817..=819).contains(&m.test.len()), "{}", m.test.len());
        assert_eq!(m.train.len() + m.val.len() + m.test.len(), 1024);
    }

    #[test]
    fn class_too_small() {
        let g = labeled_path(10, 2);
        let spec = SplitSpec {
            per_class: Some(6),
            ..SplitSpec::fractional()
        };
        assert!(matches!(
            make_balanced_split(&g, &spec, 0),
            Err(Error::ClassTooSmall { required: 6, .. })
        ));
    }

    #[test]
    fn band_parsing() {
        assert_eq!("q3".parse::<Band>().unwrap(), Band::Quintile(3));
        assert_eq!(
            "top".parse::<Band>().unwrap(),
            Band::Level(HierarchyLevel::Top)
        );
        assert!("q6".parse::<Band>().is_err());
        assert!("side".parse::<Band>().is_err());
    }

    #[test]
    fn quintiles_split_evenly() {
        let norms: Vec<f64> = (0..10).map(|i| (9 - i) as f64).collect();
        let q = norm_quintiles(&norms);
        assert_eq!(q, vec![5, 5, 4, 4, 3, 3, 2, 2, 1, 1]);
    }

    #[test]
    fn top_band_draws_old_generations() {
        let h = hnm_three_community(5).unwrap();
        let spec = SplitSpec {
            per_class: Some(20),
            ..SplitSpec::fractional()
        };
        let s = make_hierarchy_split(
            &h.graph,
            Band::Level(HierarchyLevel::Top),
            Some(&h.annotation),
            None,
            &spec,
            1,
        )
        .unwrap();
        assert_eq!(s.top_up_fraction, 0.0);
        assert!(s
            .mask
            .train
            .iter()
            .all(|&v| h.annotation.generation[v] <= 3));
    }
}
