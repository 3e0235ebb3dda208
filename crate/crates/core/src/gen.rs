//! Deterministic random-instance generation on integer grids.
//!
//! Points are drawn uniformly from an integer grid and distances are taken
//! in the L1 norm, so the triangle inequality holds by construction and any
//! two non-co-located points are at distance at least 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, MatroidSpec, MetricSpace, Variant, WeightVector};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Robust,
    Matroid,
    Knapsack,
    FaultTolerant,
}

impl VariantKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "robust" => Some(VariantKind::Robust),
            "matroid" => Some(VariantKind::Matroid),
            "knapsack" => Some(VariantKind::Knapsack),
            "fault_tolerant" | "ft" => Some(VariantKind::FaultTolerant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenSpec {
    pub count: usize,
    pub n_facilities: usize,
    pub n_clients: usize,
    pub variant: VariantKind,
    pub grid: i64,
}

/// Generates `spec.count` valid instances; the same seed yields the same
/// instances byte for byte.
pub fn gen_instances(spec: &GenSpec, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.count)
        .map(|_| gen_one(spec, &mut rng))
        .collect()
}

fn gen_one(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Instance {
    let nf = spec.n_facilities;
    let nc = spec.n_clients;
    assert!(nf >= 1 && nc >= 1 && spec.grid >= 1);
    let points: Vec<(Rat, Rat)> = (0..nf + nc)
        .map(|_| {
            (
                Rat::from_int(rng.gen_range(0..=spec.grid)),
                Rat::from_int(rng.gen_range(0..=spec.grid)),
            )
        })
        .collect();
    let metric = MetricSpace::from_l1_points(
        (0..nf).map(|i| format!("f{i}")).collect(),
        (0..nc).map(|j| format!("c{j}")).collect(),
        &points,
    );

    let k = rng.gen_range(1..=nf.min(3));
    let variant = match spec.variant {
        VariantKind::Robust => Variant::Robust {
            k,
            m: rng.gen_range(1..=nc),
        },
        VariantKind::Matroid => {
            // random partition with at least one open slot
            let n_parts = rng.gen_range(1..=nf.min(3));
            let mut parts: Vec<Vec<usize>> = vec![Vec::new(); n_parts];
            for i in 0..nf {
                parts[rng.gen_range(0..n_parts)].push(i);
            }
            parts.retain(|p| !p.is_empty());
            let mut capacities: Vec<usize> =
                parts.iter().map(|p| rng.gen_range(0..=p.len())).collect();
            if capacities.iter().all(|&c| c == 0) {
                capacities[0] = 1;
            }
            Variant::Matroid {
                spec: MatroidSpec::Partition { parts, capacities },
            }
        }
        VariantKind::Knapsack => {
            let weights: Vec<Rat> = (0..nf)
                .map(|_| Rat::from_int(rng.gen_range(1..=10)))
                .collect();
            let min_wt = weights.iter().min().unwrap().clone();
            let budget = &min_wt + &Rat::from_int(rng.gen_range(0..=15));
            Variant::Knapsack { weights, budget }
        }
        VariantKind::FaultTolerant => {
            let requirements = (0..nc).map(|_| rng.gen_range(1..=k.min(2))).collect();
            Variant::FaultTolerant { k, requirements }
        }
    };

    let m = match &variant {
        Variant::Robust { m, .. } => *m,
        _ => nc,
    };
    // non-increasing weights built as suffix sums of non-negative steps
    let mut weights: Vec<Rat> = Vec::with_capacity(m);
    let mut level = Rat::from_int(rng.gen_range(0..=3));
    for _ in 0..m {
        weights.push(level.clone());
        let drop = rng.gen_range(0..=2);
        level = (&level - &Rat::from_int(drop)).max(Rat::zero());
    }
    weights.reverse();
    weights.sort_by(|a, b| b.cmp(a));
    if weights[0].is_zero() {
        weights[0] = Rat::one();
    }

    let inst = Instance {
        metric,
        weights: WeightVector::new(weights).expect("constructed non-increasing"),
        variant,
    };
    inst.validate().expect("generated instance must validate");
    inst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instances() {
        let spec = GenSpec {
            count: 5,
            n_facilities: 4,
            n_clients: 6,
            variant: VariantKind::Robust,
            grid: 50,
        };
        let a = gen_instances(&spec, 11);
        let b = gen_instances(&spec, 11);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                serde_json::to_string(&x.to_json()).unwrap(),
                serde_json::to_string(&y.to_json()).unwrap()
            );
        }
        let c = gen_instances(&spec, 12);
        assert_ne!(
            serde_json::to_string(&a[0].to_json()).unwrap(),
            serde_json::to_string(&c[0].to_json()).unwrap()
        );
    }

    #[test]
    fn all_variants_validate() {
        for kind in [
            VariantKind::Robust,
            VariantKind::Matroid,
            VariantKind::Knapsack,
            VariantKind::FaultTolerant,
        ] {
            let spec = GenSpec {
                count: 10,
                n_facilities: 5,
                n_clients: 7,
                variant: kind,
                grid: 80,
            };
            for inst in gen_instances(&spec, 3) {
                inst.validate().unwrap();
            }
        }
    }

    #[test]
    fn ft_requirements_bounded_by_k() {
        let spec = GenSpec {
            count: 20,
            n_facilities: 6,
            n_clients: 8,
            variant: VariantKind::FaultTolerant,
            grid: 100,
        };
        for inst in gen_instances(&spec, 9) {
            let Variant::FaultTolerant { k, requirements } = &inst.variant else {
                panic!()
            };
            assert!(requirements.iter().all(|r| (1..=*k).contains(r)));
        }
    }
}
