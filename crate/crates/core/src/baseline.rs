//! Reference policies: fixed-assignment runs, an exhaustive search over
//! assignment maps used as the offline proxy, and two simple heuristics.
//!
//! The proxy fixes the per-machine discipline and searches only over which
//! machine each job goes to, at speed 1. It is an upper bound on the true
//! offline optimum, not the optimum itself.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Metrics, Mode};
use crate::sim::{Assignment, AssignmentMap, Simulation};
use crate::unweighted::UnweightedSchedulerConfig;
use crate::weighted::WeightedSchedulerConfig;

/// Largest number of maps the proxy enumerates by default (`3^8`).
pub const DEFAULT_ENUMERATION_CAP: u128 = 6561;

/// Runs `instance` at `speedup` with every job on the machine given by `map`.
pub fn simulate_fixed_assignment(instance: &Instance, map: &AssignmentMap, speedup: f64) -> Result<Metrics> {
    let assignment = Assignment::Fixed(Arc::new(map.clone()));
    run_with(instance, speedup, assignment)
}

/// Online greedy assignment at `speedup`.
pub fn simulate_greedy(instance: &Instance, speedup: f64) -> Result<(Metrics, AssignmentMap)> {
    match instance.mode {
        Mode::Weighted => {
            let mut sim =
                Simulation::new(instance, WeightedSchedulerConfig::new(speedup)?, Assignment::Greedy)?.without_trace();
            sim.run_to_end()?;
            Ok((sim.metrics(), AssignmentMap(sim.assignments().to_vec())))
        }
        Mode::Unweighted => {
            let mut sim = Simulation::new(instance, UnweightedSchedulerConfig::new(speedup)?, Assignment::Greedy)?
                .without_trace();
            sim.run_to_end()?;
            Ok((sim.metrics(), AssignmentMap(sim.assignments().to_vec())))
        }
    }
}

fn run_with(instance: &Instance, speedup: f64, assignment: Assignment) -> Result<Metrics> {
    match instance.mode {
        Mode::Weighted => {
            let mut sim =
                Simulation::new(instance, WeightedSchedulerConfig::new(speedup)?, assignment)?.without_trace();
            sim.run_to_end()?;
            Ok(sim.metrics())
        }
        Mode::Unweighted => {
            let mut sim =
                Simulation::new(instance, UnweightedSchedulerConfig::new(speedup)?, assignment)?.without_trace();
            sim.run_to_end()?;
            Ok(sim.metrics())
        }
    }
}

/// Number of assignment maps, `m^n`, saturating.
pub fn map_count(instance: &Instance) -> u128 {
    let m = instance.machine_count() as u128;
    let mut total: u128 = 1;
    for _ in 0..instance.jobs.len() {
        total = total.saturating_mul(m);
    }
    total
}

/// The `index`-th map in base-`m` order; job 0 is the least significant digit.
pub fn map_from_index(index: u128, machines: usize, jobs: usize) -> AssignmentMap {
    let m = machines as u128;
    let mut rest = index;
    let mut out = Vec::with_capacity(jobs);
    for _ in 0..jobs {
        out.push((rest % m) as usize);
        rest /= m;
    }
    AssignmentMap(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyResult {
    pub map: AssignmentMap,
    pub metrics: Metrics,
    pub objective: f64,
    pub maps_evaluated: u128,
}

/// Best fixed assignment at speed 1 over all `m^n` maps, ties to the lowest
/// map index. Fails with [`Error::EnumerationCap`] beyond `cap` maps.
pub fn exhaustive_offline_proxy(instance: &Instance, cap: u128) -> Result<ProxyResult> {
    let maps = map_count(instance);
    if maps > cap {
        return Err(Error::EnumerationCap { maps, cap });
    }
    let (m, n) = (instance.machine_count(), instance.jobs.len());
    let mode = instance.mode;
    let best = (0..maps as u64)
        .into_par_iter()
        .map(|k| {
            let map = map_from_index(k as u128, m, n);
            simulate_fixed_assignment(instance, &map, 1.0).map(|metrics| (metrics.objective(mode), k, metrics))
        })
        .try_reduce_with(|a, b| Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }))
        .expect("at least one map")?;
    let (objective, k, metrics) = best;
    Ok(ProxyResult { map: map_from_index(k as u128, m, n), metrics, objective, maps_evaluated: maps })
}

/// Job `i` goes to machine `i mod m`.
pub fn round_robin_assignment(instance: &Instance) -> AssignmentMap {
    let m = instance.machine_count();
    AssignmentMap((0..instance.jobs.len()).map(|i| i % m).collect())
}

/// Each job, in release order, goes to the machine with the least total
/// weight assigned so far (lowest index on ties).
pub fn greedy_total_weight_assignment(instance: &Instance) -> AssignmentMap {
    let mut load = vec![0.0; instance.machine_count()];
    let mut out = Vec::with_capacity(instance.jobs.len());
    for job in &instance.jobs {
        let mut best = 0;
        for i in 1..load.len() {
            if load[i] < load[best] {
                best = i;
            }
        }
        load[best] += job.weight;
        out.push(best);
    }
    AssignmentMap(out)
}

/// Uniformly random map.
pub fn random_assignment<R: Rng>(instance: &Instance, rng: &mut R) -> AssignmentMap {
    let m = instance.machine_count();
    AssignmentMap((0..instance.jobs.len()).map(|_| rng.gen_range(0..m)).collect())
}

#[cfg(test)]
mod tests {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::Job;
    use crate::power::PowerFunction;

    fn three_jobs() -> Instance {
        let pf = PowerFunction::poly(2.0).unwrap();
        let jobs = vec![
            Job::new(0, 0.0, 1.0, 3.0).unwrap(),
            Job::new(1, 0.0, 1.0, 1.0).unwrap(),
            Job::new(2, 0.0, 1.0, 1.0).unwrap(),
        ];
        Instance::new(vec![pf.clone(), pf], jobs, Mode::Weighted).unwrap()
    }

    #[test]
    fn heuristic_examples() {
        let inst = three_jobs();
        assert_eq!(round_robin_assignment(&inst), AssignmentMap(vec![0, 1, 0]));
        assert_eq!(greedy_total_weight_assignment(&inst), AssignmentMap(vec![0, 1, 1]));
    }

    #[test]
    fn map_enumeration_order() {
        assert_eq!(map_from_index(0, 2, 3), AssignmentMap(vec![0, 0, 0]));
        assert_eq!(map_from_index(1, 2, 3), AssignmentMap(vec![1, 0, 0]));
        assert_eq!(map_from_index(6, 2, 3), AssignmentMap(vec![0, 1, 1]));
        let inst = three_jobs();
        assert_eq!(map_count(&inst), 8);
    }

    #[test]
    fn proxy_respects_cap() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let jobs: Vec<Job> = (0..9).map(|i| Job::new(i, 0.0, 1.0, 1.0).unwrap()).collect();
        let inst = Instance::new(vec![pf.clone(), pf.clone(), pf], jobs, Mode::Weighted).unwrap();
        assert_eq!(
            exhaustive_offline_proxy(&inst, DEFAULT_ENUMERATION_CAP),
            Err(Error::EnumerationCap { maps: 19683, cap: 6561 })
        );
    }

    #[test]
    fn proxy_is_minimum_over_maps() {
        let inst = three_jobs();
        let best = exhaustive_offline_proxy(&inst, DEFAULT_ENUMERATION_CAP).unwrap();
        let objs: Vec<f64> = (0..8)
            .map(|k| simulate_fixed_assignment(&inst, &map_from_index(k, 2, 3), 1.0).unwrap().objective(Mode::Weighted))
            .collect();
        let min = objs.iter().copied().fold(f64::INFINITY, f64::min);
        let first = objs.iter().position(|&o| o == min).unwrap();
        assert_eq!(best.objective, min);
        assert_eq!(best.map, map_from_index(first as u128, 2, 3));
    }

    #[test]
    fn proxy_ignores_job_listing_order() {
        let pf = PowerFunction::poly(3.0).unwrap();
        let mut jobs: Vec<Job> =
            (0..6).map(|i| Job::new(i, 0.3 * i as f64, 0.5 + 0.3 * i as f64, 1.0 + (i % 3) as f64).unwrap()).collect();
        let inst = Instance::new(vec![pf.clone(), pf.clone()], jobs.clone(), Mode::Weighted).unwrap();
        let a = exhaustive_offline_proxy(&inst, DEFAULT_ENUMERATION_CAP).unwrap();
        jobs.shuffle(&mut ChaCha8Rng::seed_from_u64(11));
        let shuffled = Instance::new(vec![pf.clone(), pf], jobs, Mode::Weighted).unwrap();
        let b = exhaustive_offline_proxy(&shuffled, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.map, b.map);
    }

    #[test]
    fn single_machine_proxy_matches_fixed_run() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let inst = Instance::new(vec![pf], vec![Job::unit(0, 0.0, 1.0).unwrap()], Mode::Unweighted).unwrap();
        let best = exhaustive_offline_proxy(&inst, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(best.maps_evaluated, 1);
        assert!((best.objective - 2.0).abs() < 1e-15);
    }
}
