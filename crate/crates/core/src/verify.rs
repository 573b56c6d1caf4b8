//! Runs policies and the full check suite on instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    check_arrival_condition, check_boundary_completion, check_running_condition, g_pair_check, shift_inequality_check,
    CompetitiveParams, CoupledTrace, COMPLETION_TOL,
};
use crate::baseline::{
    exhaustive_offline_proxy, greedy_total_weight_assignment, random_assignment, round_robin_assignment,
    simulate_fixed_assignment, simulate_greedy, ProxyResult, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::model::{Instance, MachineState, Metrics, Mode};
use crate::report::{instance_digest, AdversaryArrivals, CheckSummary, InstanceReport, PolicyReport, Ratio, RunReport};
use crate::sim::{Assignment, Discipline, Simulation};
use crate::unweighted::UnweightedSchedulerConfig;
use crate::weighted::WeightedSchedulerConfig;
use crate::workload::{SuiteConfig, SuiteItem};

pub const FUTURE_COST_TOL_WEIGHTED: f64 = 1e-4;
pub const FUTURE_COST_TOL_UNWEIGHTED: f64 = 1e-8;
pub const ENERGY_FLOW_TOL: f64 = 1e-8;
pub const PAIR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Random fixed-assignment adversaries per instance, besides the proxy.
    pub random_adversaries: usize,
    /// Running-condition samples per coupled trace.
    pub running_samples: usize,
    pub enumeration_cap: u128,
    /// Samples per machine for the pointwise checks on `x/Q(x)`.
    pub pair_samples: usize,
    /// Keep per-arrival records in the report.
    pub details: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            random_adversaries: 20,
            running_samples: 100,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            pair_samples: 200,
            details: false,
        }
    }
}

fn proxy_or_none(instance: &Instance, cap: u128) -> Result<Option<ProxyResult>> {
    match exhaustive_offline_proxy(instance, cap) {
        Ok(p) => Ok(Some(p)),
        Err(Error::EnumerationCap { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn ratio(objective: f64, proxy: Option<&ProxyResult>) -> Ratio {
    match proxy {
        Some(p) if p.objective > 0.0 => Ratio::Value(objective / p.objective),
        Some(_) if objective == 0.0 => Ratio::Value(1.0),
        _ => Ratio::not_computed(),
    }
}

fn policy(name: &str, speedup: f64, metrics: Metrics, mode: Mode, proxy: Option<&ProxyResult>) -> PolicyReport {
    let objective = metrics.objective(mode);
    PolicyReport { name: name.into(), speedup, metrics, objective, ratio_vs_proxy: ratio(objective, proxy) }
}

/// Online at `speedup` plus the proxy and both heuristics at speed 1.
fn policy_reports(instance: &Instance, speedup: f64, proxy: Option<&ProxyResult>) -> Result<Vec<PolicyReport>> {
    let mode = instance.mode;
    let (online, _) = simulate_greedy(instance, speedup)?;
    let mut out = vec![policy("online", speedup, online, mode, proxy)];
    if let Some(p) = proxy {
        out.push(policy("proxy", 1.0, p.metrics, mode, proxy));
    }
    let rr = simulate_fixed_assignment(instance, &round_robin_assignment(instance), 1.0)?;
    out.push(policy("round_robin", 1.0, rr, mode, proxy));
    let gw = simulate_fixed_assignment(instance, &greedy_total_weight_assignment(instance), 1.0)?;
    out.push(policy("greedy_weight", 1.0, gw, mode, proxy));
    Ok(out)
}

/// Metrics for every policy, without checks.
pub fn run_instance(instance: &Instance, speedup: f64, cap: u128) -> Result<InstanceReport> {
    let proxy = proxy_or_none(instance, cap)?;
    Ok(InstanceReport {
        digest: instance_digest(instance),
        seed: None,
        machines: instance.machine_count(),
        jobs: instance.jobs.len(),
        epsilon: None,
        policies: policy_reports(instance, speedup, proxy.as_ref())?,
        checks: Default::default(),
        arrivals: Vec::new(),
    })
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Remaining objective of `state` run alone at speed 1.
fn simulate_rest<D: Discipline>(state: &MachineState, discipline: D) -> Result<f64> {
    let mode = discipline.mode();
    let mut sim = Simulation::from_states(vec![state.clone()], discipline).without_trace();
    sim.run_to_end()?;
    Ok(sim.metrics().objective(mode))
}

/// Replays the online run and, at every arrival, checks that the chosen
/// machine has the smallest delta and that each busy machine's future cost
/// matches a run to completion.
fn online_replay_checks<D: Discipline>(
    instance: &Instance,
    online: D,
    alone: D,
    tol: f64,
    greedy: &mut CheckSummary,
    future: &mut CheckSummary,
) -> Result<()> {
    let mut sim = Simulation::new(instance, online, Assignment::Greedy)?.without_trace();
    while let Some(t) = sim.next_event_time()? {
        sim.flow_until(t)?;
        sim.pop_completions();
        let mut arrived = false;
        while let Some(job) = sim.peek_arrival().copied().filter(|j| j.release <= t) {
            let deltas: Vec<f64> = sim.machines().iter().map(|m| sim.discipline().assignment_delta(m, &job)).collect();
            let (_, m) = sim.admit_next().expect("released job");
            let best = deltas.iter().copied().fold(f64::INFINITY, f64::min);
            greedy.record(deltas[m] <= best, best - deltas[m]);
            arrived = true;
        }
        if arrived {
            for state in sim.machines().iter().filter(|s| !s.is_idle()) {
                let expected = 2.0 * alone.shadow_potential(state);
                let got = simulate_rest(state, alone.clone())?;
                let err = rel_err(got, expected);
                future.record(err <= tol, tol - err);
            }
        }
    }
    Ok(())
}

/// All checks on one instance.
pub fn verify_instance(instance: &Instance, epsilon: f64, seed: u64, cfg: &VerifyConfig) -> Result<InstanceReport> {
    let params = CompetitiveParams::new(epsilon)?;
    let mode = instance.mode;
    let proxy = proxy_or_none(instance, cfg.enumeration_cap)?;
    let policies = policy_reports(instance, params.speedup(), proxy.as_ref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut arrival = CheckSummary::default();
    let mut running = CheckSummary::default();
    let mut coverage = CheckSummary::default();
    let mut boundary = CheckSummary::default();
    let mut arrivals = Vec::new();
    let mut adversaries = Vec::new();
    if let Some(p) = &proxy {
        adversaries.push(p.map.clone());
    }
    adversaries.extend((0..cfg.random_adversaries).map(|_| random_assignment(instance, &mut rng)));
    for (k, map) in adversaries.into_iter().enumerate() {
        let coupled = CoupledTrace::simulate(instance, map, params)?;
        let a = check_arrival_condition(&coupled)?;
        for c in &a.checks {
            arrival.record(c.pass, c.bound - c.delta_phi);
        }
        if cfg.details {
            arrivals.push(AdversaryArrivals { adversary: k, checks: a.checks });
        }
        let r = check_running_condition(&coupled, cfg.running_samples)?;
        for s in &r.samples {
            running.record(s.pass, s.rhs + s.tol - s.lhs);
        }
        running.skipped += r.skipped as u64;
        coverage.record(r.samples.len() >= cfg.running_samples, r.samples.len() as f64 - cfg.running_samples as f64);
        let b = check_boundary_completion(&coupled)?;
        boundary.record(b.phi_start == 0.0, -b.phi_start.abs());
        boundary.record(b.phi_end >= 0.0, b.phi_end);
        for c in &b.completions {
            boundary.record(c.pass, c.phi_before + COMPLETION_TOL - c.phi_after);
        }
    }

    let mut checks = std::collections::BTreeMap::new();
    checks.insert("arrival".to_string(), arrival);
    checks.insert("running".to_string(), running);
    checks.insert("running_coverage".to_string(), coverage);
    checks.insert("boundary".to_string(), boundary);

    let mut ratio_check = CheckSummary::default();
    if let Some(r) = policies[0].ratio_vs_proxy.value() {
        let bound = params.ratio_bound(mode);
        ratio_check.record(r <= bound, bound - r);
    }
    checks.insert("ratio".to_string(), ratio_check);

    let online = &policies[0].metrics;
    let mut energy_flow = CheckSummary::default();
    let flow = match mode {
        Mode::Weighted => online.fractional_weighted_flow,
        Mode::Unweighted => online.integer_weighted_flow,
    };
    let err = rel_err(online.energy, flow);
    energy_flow.record(err <= ENERGY_FLOW_TOL, ENERGY_FLOW_TOL - err);
    checks.insert("energy_flow".to_string(), energy_flow);

    let mut greedy = CheckSummary::default();
    let mut future = CheckSummary::default();
    match mode {
        Mode::Weighted => online_replay_checks(
            instance,
            WeightedSchedulerConfig::new(params.speedup())?,
            WeightedSchedulerConfig::default(),
            FUTURE_COST_TOL_WEIGHTED,
            &mut greedy,
            &mut future,
        )?,
        Mode::Unweighted => online_replay_checks(
            instance,
            UnweightedSchedulerConfig::new(params.speedup())?,
            UnweightedSchedulerConfig::default(),
            FUTURE_COST_TOL_UNWEIGHTED,
            &mut greedy,
            &mut future,
        )?,
    }
    checks.insert("greedy_choice".to_string(), greedy);
    checks.insert("future_cost".to_string(), future);

    let mut shift = CheckSummary::default();
    let mut g_monotone = CheckSummary::default();
    let mut g_subadditive = CheckSummary::default();
    for pf in &instance.machines {
        for _ in 0..cfg.pair_samples {
            let (wa, wo, wj) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let l = shift_inequality_check(pf, wa, wo, wj)?;
            shift.record(l.pass, l.rhs + PAIR_TOL - l.lhs);
            let (x, y) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let g = g_pair_check(pf, x, y);
            g_monotone.record(g.monotone, 0.0);
            g_subadditive.record(g.subadditive, 0.0);
        }
    }
    checks.insert("shift_inequality".to_string(), shift);
    checks.insert("g_monotone".to_string(), g_monotone);
    checks.insert("g_subadditive".to_string(), g_subadditive);

    Ok(InstanceReport {
        digest: instance_digest(instance),
        seed: Some(seed),
        machines: instance.machine_count(),
        jobs: instance.jobs.len(),
        epsilon: Some(epsilon),
        policies,
        checks,
        arrivals,
    })
}

/// Verifies every suite instance (in parallel) and assembles the report.
pub fn verify_suite(items: &[SuiteItem], mode: Mode, cfg: &VerifyConfig) -> Result<RunReport> {
    let reports: Vec<InstanceReport> = items
        .par_iter()
        .map(|item| verify_instance(&item.instance, item.epsilon, item.seed, cfg))
        .collect::<Result<_>>()?;
    let bounds: Vec<Option<f64>> =
        items.iter().map(|i| CompetitiveParams::new(i.epsilon).ok().map(|p| p.ratio_bound(mode))).collect();
    Ok(RunReport::new("verify", mode, reports, &bounds))
}

pub fn verify_random(suite: &SuiteConfig, cfg: &VerifyConfig) -> Result<RunReport> {
    verify_suite(&suite.generate()?, suite.mode, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Job;
    use crate::power::PowerFunction;

    #[test]
    fn single_arrival_instance() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let inst =
            Instance::new(vec![pf.clone(), pf], vec![Job::new(0, 0.0, 1.0, 1.0).unwrap()], Mode::Weighted).unwrap();
        let cfg = VerifyConfig { details: true, random_adversaries: 4, ..VerifyConfig::default() };
        let rep = verify_instance(&inst, 0.5, 1, &cfg).unwrap();
        assert!(rep.all_pass(), "{:#?}", rep.checks);
        // the proxy puts the job on machine 0, like the online side
        assert_eq!(rep.arrivals.len(), 5);
        assert_eq!(rep.arrivals[0].checks[0].delta_phi, 0.0);
        for a in &rep.arrivals {
            let c = &a.checks[0];
            let expected = if c.adversary_machine == 0 { 0.0 } else { 8.0 / 3.0 };
            assert!((c.delta_phi - expected).abs() < 1e-12);
            assert!((c.bound - 16.0 / 3.0).abs() < 1e-9);
        }
        assert!(rep.checks["running"].total >= 100);
    }

    #[test]
    fn run_reports_closed_form_objective() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let inst = Instance::new(vec![pf], vec![Job::new(0, 0.0, 1.0, 1.0).unwrap()], Mode::Weighted).unwrap();
        let rep = run_instance(&inst, 1.0, DEFAULT_ENUMERATION_CAP).unwrap();
        let online = rep.policy("online").unwrap();
        assert!((online.objective - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(online.ratio_vs_proxy, Ratio::Value(1.0));
    }

    #[test]
    fn run_marks_missing_proxy() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let jobs: Vec<Job> = (0..4).map(|i| Job::new(i, 0.0, 1.0, 1.0).unwrap()).collect();
        let inst = Instance::new(vec![pf.clone(), pf], jobs, Mode::Weighted).unwrap();
        let rep = run_instance(&inst, 1.0, 8).unwrap();
        assert!(rep.policy("proxy").is_none());
        assert_eq!(rep.policy("online").unwrap().ratio_vs_proxy, Ratio::not_computed());
    }

    #[test]
    fn empty_instance_has_zero_metrics() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let inst = Instance::new(vec![pf], vec![], Mode::Unweighted).unwrap();
        let rep = run_instance(&inst, 1.0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(rep.policies.iter().all(|p| p.metrics == Metrics::default()));
    }
}
