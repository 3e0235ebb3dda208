//! Problem instances: metric spaces, weight vectors, the four problem
//! variants, solutions, and JSON (de)serialization.
//!
//! Facilities and clients are indexed densely; a metric point is a facility
//! index `i < n_facilities` or a client offset `n_facilities + j`. All
//! distances are exact rationals and the triangle inequality is checked
//! exactly on load.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rat::Rat;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("metric violation: {0}")]
    Metric(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("infeasible solution: {0}")]
    InfeasibleSolution(String),
    #[error("length mismatch: weights {0}, costs {1}")]
    LengthMismatch(usize, usize),
    #[error("rank {0} out of range 1..={1}")]
    RankOutOfRange(usize, usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type ModelResult<T> = Result<T, ModelError>;

/// Finite metric over facilities followed by clients.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    pub facility_ids: Vec<String>,
    pub client_ids: Vec<String>,
    /// full symmetric matrix over facilities ++ clients
    pub dist: Vec<Vec<Rat>>,
}

impl MetricSpace {
    pub fn n_facilities(&self) -> usize {
        self.facility_ids.len()
    }

    pub fn n_clients(&self) -> usize {
        self.client_ids.len()
    }

    pub fn n_points(&self) -> usize {
        self.facility_ids.len() + self.client_ids.len()
    }

    pub fn d(&self, p: usize, q: usize) -> &Rat {
        &self.dist[p][q]
    }

    /// facility `i` to client `j`
    pub fn d_fc(&self, i: usize, j: usize) -> &Rat {
        &self.dist[i][self.n_facilities() + j]
    }

    pub fn client_point(&self, j: usize) -> usize {
        self.n_facilities() + j
    }

    pub fn from_l1_points(
        facility_ids: Vec<String>,
        client_ids: Vec<String>,
        points: &[(Rat, Rat)],
    ) -> Self {
        let n = points.len();
        assert_eq!(n, facility_ids.len() + client_ids.len());
        let mut dist = vec![vec![Rat::zero(); n]; n];
        for p in 0..n {
            for q in p + 1..n {
                let dx = (&points[p].0 - &points[q].0).abs();
                let dy = (&points[p].1 - &points[q].1).abs();
                let d = &dx + &dy;
                dist[p][q] = d.clone();
                dist[q][p] = d;
            }
        }
        MetricSpace {
            facility_ids,
            client_ids,
            dist,
        }
    }
}

/// Which rules a metric check enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricCheck {
    /// non-co-located points must be at distance >= 1
    pub unit_separation: bool,
}

/// Verifies symmetry, zero diagonal and the exact triangle inequality.
/// With `unit_separation` also rejects distances in (0, 1); co-located
/// pairs are exempt.
pub fn validate_metric(m: &MetricSpace, check: MetricCheck) -> ModelResult<()> {
    let n = m.n_points();
    for p in 0..n {
        if m.dist.len() != n || m.dist[p].len() != n {
            return Err(ModelError::Metric(format!(
                "matrix not square: expected {n}x{n}"
            )));
        }
        if !m.dist[p][p].is_zero() {
            return Err(ModelError::Metric(format!("nonzero diagonal at {p}")));
        }
        for q in 0..n {
            if m.dist[p][q].is_negative() {
                return Err(ModelError::Metric(format!("negative entry ({p},{q})")));
            }
            if m.dist[p][q] != m.dist[q][p] {
                return Err(ModelError::Metric(format!("asymmetric entry ({p},{q})")));
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if &(&m.dist[u][v] + &m.dist[v][w]) < &m.dist[u][w] {
                    return Err(ModelError::Metric(format!(
                        "triangle violation: d({u},{w}) > d({u},{v}) + d({v},{w})"
                    )));
                }
            }
        }
    }
    if check.unit_separation {
        let one = Rat::one();
        for p in 0..n {
            for q in p + 1..n {
                if m.dist[p][q].is_positive() && m.dist[p][q] < one {
                    return Err(ModelError::Metric(format!(
                        "non-co-located pair ({p},{q}) at distance {} < 1",
                        m.dist[p][q]
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Non-increasing, non-negative weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(pub Vec<Rat>);

impl WeightVector {
    pub fn new(entries: Vec<Rat>) -> ModelResult<Self> {
        for w in &entries {
            if w.is_negative() {
                return Err(ModelError::InvalidInstance("negative weight".into()));
            }
        }
        for pair in entries.windows(2) {
            if pair[0] < pair[1] {
                return Err(ModelError::InvalidInstance(
                    "weights not non-increasing".into(),
                ));
            }
        }
        Ok(WeightVector(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// all-ones weights serve as the plain-sum objective
    pub fn ones(n: usize) -> Self {
        WeightVector(vec![Rat::one(); n])
    }

    /// `ell` ones followed by zeros
    pub fn top_ell(n: usize, ell: usize) -> Self {
        let mut v = vec![Rat::zero(); n];
        for w in v.iter_mut().take(ell) {
            *w = Rat::one();
        }
        WeightVector(v)
    }
}

#[derive(Debug, Clone)]
pub enum MatroidSpec {
    Partition {
        /// disjoint facility groups covering all facilities
        parts: Vec<Vec<usize>>,
        capacities: Vec<usize>,
    },
    Explicit {
        /// the full family of independent sets
        sets: Vec<BTreeSet<usize>>,
    },
}

impl MatroidSpec {
    pub fn validate(&self, n_facilities: usize) -> ModelResult<()> {
        match self {
            MatroidSpec::Partition { parts, capacities } => {
                if parts.len() != capacities.len() {
                    return Err(ModelError::InvalidInstance(
                        "partition parts/capacities length mismatch".into(),
                    ));
                }
                let mut seen = vec![false; n_facilities];
                for part in parts {
                    for &i in part {
                        if i >= n_facilities || seen[i] {
                            return Err(ModelError::InvalidInstance(
                                "partition parts must disjointly cover facilities".into(),
                            ));
                        }
                        seen[i] = true;
                    }
                }
                if !seen.iter().all(|&s| s) {
                    return Err(ModelError::InvalidInstance(
                        "partition parts must cover all facilities".into(),
                    ));
                }
                Ok(())
            }
            MatroidSpec::Explicit { sets } => {
                let family: BTreeSet<&BTreeSet<usize>> = sets.iter().collect();
                if !family.contains(&BTreeSet::new()) {
                    return Err(ModelError::InvalidInstance(
                        "independent-set table must contain the empty set".into(),
                    ));
                }
                for set in sets {
                    for &i in set {
                        if i >= n_facilities {
                            return Err(ModelError::InvalidInstance(
                                "independent set references unknown facility".into(),
                            ));
                        }
                        let mut sub = set.clone();
                        sub.remove(&i);
                        if !family.contains(&sub) {
                            return Err(ModelError::InvalidInstance(
                                "independent-set table not downward closed".into(),
                            ));
                        }
                    }
                }
                // exchange: a smaller independent set extends from any larger one
                for a in sets {
                    for b in sets {
                        if a.len() < b.len() {
                            let extendable = b.difference(a).any(|&x| {
                                let mut ext = a.clone();
                                ext.insert(x);
                                family.contains(&ext)
                            });
                            if !extendable {
                                return Err(ModelError::InvalidInstance(
                                    "independent-set table violates the exchange property".into(),
                                ));
                            }
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_independent(&self, set: &BTreeSet<usize>) -> bool {
        match self {
            MatroidSpec::Partition { parts, capacities } => {
                parts.iter().zip(capacities).all(|(part, &cap)| {
                    part.iter().filter(|i| set.contains(i)).count() <= cap
                })
            }
            MatroidSpec::Explicit { sets } => sets.iter().any(|s| s == set),
        }
    }

    pub fn rank(&self, subset: &BTreeSet<usize>) -> usize {
        match self {
            MatroidSpec::Partition { parts, capacities } => parts
                .iter()
                .zip(capacities)
                .map(|(part, &cap)| part.iter().filter(|i| subset.contains(i)).count().min(cap))
                .sum(),
            MatroidSpec::Explicit { sets } => sets
                .iter()
                .filter(|s| s.is_subset(subset))
                .map(|s| s.len())
                .max()
                .unwrap_or(0),
        }
    }

    /// enumerates every independent set (facility subsets), including the
    /// empty set
    pub fn independent_sets(&self, n_facilities: usize) -> Vec<BTreeSet<usize>> {
        match self {
            MatroidSpec::Explicit { sets } => sets.clone(),
            MatroidSpec::Partition { .. } => {
                let mut out = Vec::new();
                for mask in 0u64..(1 << n_facilities) {
                    let set: BTreeSet<usize> =
                        (0..n_facilities).filter(|i| mask >> i & 1 == 1).collect();
                    if self.is_independent(&set) {
                        out.push(set);
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Variant {
    Robust { k: usize, m: usize },
    Matroid { spec: MatroidSpec },
    Knapsack { weights: Vec<Rat>, budget: Rat },
    FaultTolerant { k: usize, requirements: Vec<usize> },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Robust { .. } => "robust",
            Variant::Matroid { .. } => "matroid",
            Variant::Knapsack { .. } => "knapsack",
            Variant::FaultTolerant { .. } => "fault_tolerant",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub metric: MetricSpace,
    pub weights: WeightVector,
    pub variant: Variant,
}

impl Instance {
    pub fn n_facilities(&self) -> usize {
        self.metric.n_facilities()
    }

    pub fn n_clients(&self) -> usize {
        self.metric.n_clients()
    }

    /// number of served clients: `m` for robust and `|C|` otherwise
    pub fn served_count(&self) -> usize {
        match &self.variant {
            Variant::Robust { m, .. } => *m,
            _ => self.n_clients(),
        }
    }

    pub fn validate(&self) -> ModelResult<()> {
        let nf = self.n_facilities();
        let nc = self.n_clients();
        if nf == 0 || nc == 0 {
            return Err(ModelError::InvalidInstance(
                "need at least one facility and one client".into(),
            ));
        }
        validate_metric(
            &self.metric,
            MetricCheck {
                unit_separation: false,
            },
        )?;
        match &self.variant {
            Variant::Robust { k, m } => {
                if !(1..=nf).contains(k) {
                    return Err(ModelError::InvalidInstance(format!(
                        "robust: k={k} outside 1..={nf}"
                    )));
                }
                if !(1..=nc).contains(m) {
                    return Err(ModelError::InvalidInstance(format!(
                        "robust: m={m} outside 1..={nc}"
                    )));
                }
                if self.weights.len() != *m {
                    return Err(ModelError::InvalidInstance(format!(
                        "robust: |w|={} != m={m}",
                        self.weights.len()
                    )));
                }
            }
            Variant::Matroid { spec } => {
                spec.validate(nf)?;
                if self.weights.len() != nc {
                    return Err(ModelError::InvalidInstance("matroid: |w| != |C|".into()));
                }
                if spec.rank(&(0..nf).collect()) == 0 {
                    return Err(ModelError::InvalidInstance(
                        "matroid: no nonempty independent set".into(),
                    ));
                }
            }
            Variant::Knapsack { weights, budget } => {
                if weights.len() != nf {
                    return Err(ModelError::InvalidInstance(
                        "knapsack: facility weight count != |F|".into(),
                    ));
                }
                if weights.iter().any(|w| w.is_negative()) || budget.is_negative() {
                    return Err(ModelError::InvalidInstance(
                        "knapsack: negative weight or budget".into(),
                    ));
                }
                if self.weights.len() != nc {
                    return Err(ModelError::InvalidInstance("knapsack: |w| != |C|".into()));
                }
                if !weights.iter().any(|w| w <= budget) {
                    return Err(ModelError::InvalidInstance(
                        "knapsack: no single facility fits the budget".into(),
                    ));
                }
            }
            Variant::FaultTolerant { k, requirements } => {
                if !(1..=nf).contains(k) {
                    return Err(ModelError::InvalidInstance(format!(
                        "fault-tolerant: k={k} outside 1..={nf}"
                    )));
                }
                if requirements.len() != nc {
                    return Err(ModelError::InvalidInstance(
                        "fault-tolerant: requirement count != |C|".into(),
                    ));
                }
                if requirements.iter().any(|&r| r == 0 || r > *k) {
                    return Err(ModelError::InvalidInstance(
                        "fault-tolerant: requirements must lie in 1..=k".into(),
                    ));
                }
                if self.weights.len() != nc {
                    return Err(ModelError::InvalidInstance(
                        "fault-tolerant: |w| != |C|".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Open facilities plus the served clients and their assignments.
#[derive(Debug, Clone)]
pub struct Solution {
    pub open: Vec<usize>,
    pub served: Vec<usize>,
    /// per served client (parallel to `served`), the assigned open facilities
    pub assignments: Vec<Vec<usize>>,
}

/// One exact cost per served client, parallel to `Solution::served`.
pub type ServiceCostVector = Vec<Rat>;

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "open={:?} served={:?}", self.open, self.served)
    }
}

// ---------------------------------------------------------------------------
// JSON wire formats
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    facilities: Vec<String>,
    clients: Vec<String>,
    dist: DistJson,
    weights: Vec<Rat>,
    variant: VariantJson,
}

#[derive(Serialize, Deserialize)]
enum DistJson {
    #[serde(rename = "matrix")]
    Matrix(Vec<Vec<Rat>>),
    #[serde(rename = "points_l1")]
    PointsL1(Vec<(Rat, Rat)>),
}

#[derive(Serialize, Deserialize)]
enum VariantJson {
    #[serde(rename = "robust")]
    Robust { k: usize, m: usize },
    #[serde(rename = "matroid")]
    Matroid(MatroidJson),
    #[serde(rename = "knapsack")]
    Knapsack { wt: Vec<Rat>, #[serde(rename = "W")] budget: Rat },
    #[serde(rename = "fault_tolerant")]
    FaultTolerant { k: usize, r: Vec<usize> },
}

#[derive(Serialize, Deserialize)]
enum MatroidJson {
    #[serde(rename = "partition")]
    Partition {
        parts: Vec<Vec<String>>,
        capacities: Vec<usize>,
    },
    #[serde(rename = "explicit")]
    Explicit { independent_sets: Vec<Vec<String>> },
}

impl Instance {
    pub fn to_json(&self) -> serde_json::Value {
        let fid = |i: &usize| self.metric.facility_ids[*i].clone();
        let variant = match &self.variant {
            Variant::Robust { k, m } => VariantJson::Robust { k: *k, m: *m },
            Variant::Matroid { spec } => VariantJson::Matroid(match spec {
                MatroidSpec::Partition { parts, capacities } => MatroidJson::Partition {
                    parts: parts.iter().map(|p| p.iter().map(fid).collect()).collect(),
                    capacities: capacities.clone(),
                },
                MatroidSpec::Explicit { sets } => MatroidJson::Explicit {
                    independent_sets: sets
                        .iter()
                        .map(|s| s.iter().map(fid).collect())
                        .collect(),
                },
            }),
            Variant::Knapsack { weights, budget } => VariantJson::Knapsack {
                wt: weights.clone(),
                budget: budget.clone(),
            },
            Variant::FaultTolerant { k, requirements } => VariantJson::FaultTolerant {
                k: *k,
                r: requirements.clone(),
            },
        };
        let raw = InstanceJson {
            facilities: self.metric.facility_ids.clone(),
            clients: self.metric.client_ids.clone(),
            dist: DistJson::Matrix(self.metric.dist.clone()),
            weights: self.weights.0.clone(),
            variant,
        };
        serde_json::to_value(raw).expect("instance serialization")
    }

    pub fn from_json_str(s: &str) -> ModelResult<Self> {
        let raw: InstanceJson = serde_json::from_str(s)?;
        let facility_index = |id: &String| -> ModelResult<usize> {
            raw.facilities
                .iter()
                .position(|f| f == id)
                .ok_or_else(|| ModelError::InvalidInstance(format!("unknown facility id {id}")))
        };
        let metric = match raw.dist {
            DistJson::Matrix(dist) => MetricSpace {
                facility_ids: raw.facilities.clone(),
                client_ids: raw.clients.clone(),
                dist,
            },
            DistJson::PointsL1(points) => MetricSpace::from_l1_points(
                raw.facilities.clone(),
                raw.clients.clone(),
                &points,
            ),
        };
        let variant = match raw.variant {
            VariantJson::Robust { k, m } => Variant::Robust { k, m },
            VariantJson::Matroid(MatroidJson::Partition { parts, capacities }) => {
                let mut idx_parts = Vec::new();
                for part in &parts {
                    idx_parts.push(part.iter().map(facility_index).collect::<Result<_, _>>()?);
                }
                Variant::Matroid {
                    spec: MatroidSpec::Partition {
                        parts: idx_parts,
                        capacities,
                    },
                }
            }
            VariantJson::Matroid(MatroidJson::Explicit { independent_sets }) => {
                let mut sets = Vec::new();
                for set in &independent_sets {
                    sets.push(set.iter().map(facility_index).collect::<Result<_, _>>()?);
                }
                Variant::Matroid {
                    spec: MatroidSpec::Explicit { sets },
                }
            }
            VariantJson::Knapsack { wt, budget } => Variant::Knapsack {
                weights: wt,
                budget,
            },
            VariantJson::FaultTolerant { k, r } => Variant::FaultTolerant {
                k,
                requirements: r,
            },
        };
        let inst = Instance {
            metric,
            weights: WeightVector::new(raw.weights)?,
            variant,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: &std::path::Path) -> ModelResult<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> ModelResult<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SolutionJson {
    open: Vec<String>,
    served: Vec<String>,
    assignments: Vec<Vec<String>>,
    cost: Rat,
}

impl Solution {
    pub fn to_json(&self, inst: &Instance, cost: &Rat) -> serde_json::Value {
        let raw = SolutionJson {
            open: self
                .open
                .iter()
                .map(|&i| inst.metric.facility_ids[i].clone())
                .collect(),
            served: self
                .served
                .iter()
                .map(|&j| inst.metric.client_ids[j].clone())
                .collect(),
            assignments: self
                .assignments
                .iter()
                .map(|a| {
                    a.iter()
                        .map(|&i| inst.metric.facility_ids[i].clone())
                        .collect()
                })
                .collect(),
            cost: cost.clone(),
        };
        serde_json::to_value(raw).expect("solution serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn line_metric(facilities: &[i64], clients: &[i64]) -> MetricSpace {
        let points: Vec<(Rat, Rat)> = facilities
            .iter()
            .chain(clients)
            .map(|&x| (Rat::from_int(x), Rat::zero()))
            .collect();
        MetricSpace::from_l1_points(
            (0..facilities.len()).map(|i| format!("f{i}")).collect(),
            (0..clients.len()).map(|j| format!("c{j}")).collect(),
            &points,
        )
    }

    #[test]
    fn collinear_points_form_a_metric() {
        let m = line_metric(&[0, 1], &[2]);
        assert!(validate_metric(&m, MetricCheck { unit_separation: false }).is_ok());
        assert!(validate_metric(&m, MetricCheck { unit_separation: true }).is_ok());
    }

    #[test]
    fn triangle_violation_detected() {
        let mut m = line_metric(&[0, 5], &[6]);
        // d(f0,c0)=10 breaks through f1: 10 > 5 + 1
        m.dist[0][2] = rat!(10);
        m.dist[2][0] = rat!(10);
        let err = validate_metric(&m, MetricCheck { unit_separation: false }).unwrap_err();
        assert!(err.to_string().contains("triangle"));
    }

    #[test]
    fn co_location_exempt_from_unit_separation() {
        let m = line_metric(&[0, 0], &[3]);
        assert!(validate_metric(&m, MetricCheck { unit_separation: true }).is_ok());
        let m2 = line_metric(&[0], &[1]);
        assert!(validate_metric(&m2, MetricCheck { unit_separation: true }).is_ok());
        let mut m3 = line_metric(&[0], &[1]);
        m3.dist[0][1] = rat!(1, 2);
        m3.dist[1][0] = rat!(1, 2);
        assert!(validate_metric(&m3, MetricCheck { unit_separation: true }).is_err());
        assert!(validate_metric(&m3, MetricCheck { unit_separation: false }).is_ok());
    }

    #[test]
    fn weight_vector_rejects_increasing() {
        assert!(WeightVector::new(vec![rat!(1), rat!(2)]).is_err());
        assert!(WeightVector::new(vec![rat!(2), rat!(1), rat!(1)]).is_ok());
        assert!(WeightVector::new(vec![rat!(1), rat!(-1)]).is_err());
    }

    #[test]
    fn explicit_matroid_validation() {
        // uniform rank-1 on two elements
        let good = MatroidSpec::Explicit {
            sets: vec![
                BTreeSet::new(),
                BTreeSet::from([0]),
                BTreeSet::from([1]),
            ],
        };
        assert!(good.validate(2).is_ok());
        assert_eq!(good.rank(&BTreeSet::from([0, 1])), 1);

        // not downward closed: {0,1} present but {1} missing
        let bad = MatroidSpec::Explicit {
            sets: vec![BTreeSet::new(), BTreeSet::from([0]), BTreeSet::from([0, 1])],
        };
        assert!(bad.validate(2).is_err());

        // exchange violated: {0,1} and {2} independent but {2} extends to neither
        let bad2 = MatroidSpec::Explicit {
            sets: vec![
                BTreeSet::new(),
                BTreeSet::from([0]),
                BTreeSet::from([1]),
                BTreeSet::from([0, 1]),
                BTreeSet::from([2]),
            ],
        };
        assert!(bad2.validate(3).is_err());
    }

    #[test]
    fn instance_json_roundtrip() {
        let inst = Instance {
            metric: line_metric(&[0, 10], &[0, 4, 10]),
            weights: WeightVector::new(vec![rat!(1), rat!(1, 2)]).unwrap(),
            variant: Variant::Robust { k: 1, m: 2 },
        };
        inst.validate().unwrap();
        let s = serde_json::to_string(&inst.to_json()).unwrap();
        let back = Instance::from_json_str(&s).unwrap();
        assert_eq!(back.metric.dist, inst.metric.dist);
        assert_eq!(back.weights, inst.weights);
    }
}
