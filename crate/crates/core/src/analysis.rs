//! Potential functions and numeric checks of the local-competitiveness
//! conditions on coupled online/adversary runs.
//!
//! The online side uses greedy assignment at speed `1 + epsilon`; the
//! adversary uses a fixed assignment map at speed 1. Both run the same
//! per-machine discipline. For machine `i`,
//!
//! ```text
//! weighted:   Phi_i = (2/eps) ∫_0^∞ ∫_0^{(w_a(q) - w_o(q))_+} x/Q_i(x) dx dq
//! unweighted: Phi_i = (4/eps) ∫_0^∞ sum_{j=1}^{(n_a(q) - n_o(q))_+} j/Q_i(j) dq
//! ```
//!
//! and `Phi` is the sum over machines. The checks are:
//!
//! - arrival: `ΔPhi <= d * (adversary's assignment delta)` with `d = 4/eps`;
//! - running: `2 w_a + dPhi/dt <= (1 + 1/eps) 2 w_o` (weighted) and
//!   `4 n_a + dPhi/dt <= 4 n_o` (unweighted) away from events, with `dPhi/dt`
//!   from a central difference;
//! - boundary/completion: `Phi = 0` at the start, `Phi >= 0` at the end, and
//!   no increase across completions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{profile_merge_breakpoints, Instance, JobId, MachineSnapshot, MachineState, Metrics, Mode};
use crate::power::PowerFunction;
use crate::sim::{Assignment, AssignmentMap, Discipline, Simulation};
use crate::unweighted::{count_prefix_sums, UnweightedSchedulerConfig};
use crate::weighted::WeightedSchedulerConfig;

/// Additive slack for the arrival check, scaled by `max(1, bound)`.
pub const ARRIVAL_TOL: f64 = 1e-7;
/// Absolute slack for the completion check.
pub const COMPLETION_TOL: f64 = 1e-9;
/// Relative slack for the running check, scaled by `max(1, rhs)`.
pub const RUNNING_REL_TOL: f64 = 1e-4;
/// Finite-difference step as a fraction of the trace span.
pub const RUNNING_STEP_FRACTION: f64 = 1e-6;
/// Weighted completion threshold used on both sides of a coupled run.
pub const COUPLED_COMPLETION_THRESHOLD: f64 = 1e-13;
/// Absolute slack for [`shift_inequality_check`].
pub const SHIFT_INEQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetitiveParams {
    pub epsilon: f64,
}

impl CompetitiveParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {epsilon}")));
        }
        Ok(CompetitiveParams { epsilon })
    }

    pub fn speedup(&self) -> f64 {
        1.0 + self.epsilon
    }

    /// Running-condition constant, weighted case: `1 + 1/eps`.
    pub fn c_weighted(&self) -> f64 {
        1.0 + 1.0 / self.epsilon
    }

    /// Arrival-condition constant, weighted case: `4/eps`.
    pub fn d_weighted(&self) -> f64 {
        4.0 / self.epsilon
    }

    pub fn c_unweighted(&self) -> f64 {
        4.0
    }

    pub fn d_unweighted(&self) -> f64 {
        4.0 / self.epsilon
    }

    pub fn c(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Weighted => self.c_weighted(),
            Mode::Unweighted => self.c_unweighted(),
        }
    }

    pub fn d(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Weighted => self.d_weighted(),
            Mode::Unweighted => self.d_unweighted(),
        }
    }

    /// Asserted bound on online cost over the offline proxy: `2 (c + d)`.
    pub fn ratio_bound(&self, mode: Mode) -> f64 {
        2.0 * (self.c(mode) + self.d(mode))
    }
}

fn check_machines(online: &[MachineState], adversary: &[MachineState]) -> Result<()> {
    if online.len() != adversary.len() {
        return Err(Error::MachineMismatch(format!(
            "{} online machines vs {} adversary machines",
            online.len(),
            adversary.len()
        )));
    }
    for (i, (a, o)) in online.iter().zip(adversary).enumerate() {
        if !Arc::ptr_eq(&a.power, &o.power) && a.power != o.power {
            return Err(Error::MachineMismatch(format!("machine {i} has different power functions")));
        }
    }
    Ok(())
}

/// Weighted potential summed over machines.
pub fn potential_weighted(online: &[MachineState], adversary: &[MachineState], epsilon: f64) -> Result<f64> {
    check_machines(online, adversary)?;
    let mut total = 0.0;
    for (a, o) in online.iter().zip(adversary) {
        let pa = a.weighted_profile();
        let po = o.weighted_profile();
        let breaks = profile_merge_breakpoints(&pa, &po);
        for w in breaks.windows(2) {
            let excess = pa.value_above(w[1]) - po.value_above(w[1]);
            if excess > 0.0 {
                total += (w[1] - w[0]) * a.power.xq_primitive(excess);
            }
        }
    }
    Ok(2.0 / epsilon * total)
}

/// Unweighted potential summed over machines.
pub fn potential_unweighted(online: &[MachineState], adversary: &[MachineState], epsilon: f64) -> Result<f64> {
    check_machines(online, adversary)?;
    let mut total = 0.0;
    for (a, o) in online.iter().zip(adversary) {
        let pa = a.count_profile();
        let po = o.count_profile();
        let prefix = count_prefix_sums(&a.power, a.unfinished());
        let breaks = profile_merge_breakpoints(&pa, &po);
        for w in breaks.windows(2) {
            let excess = pa.value_above(w[1]) - po.value_above(w[1]);
            if excess > 0.0 {
                total += (w[1] - w[0]) * prefix[excess as usize];
            }
        }
    }
    Ok(4.0 / epsilon * total)
}

pub fn potential(mode: Mode, online: &[MachineState], adversary: &[MachineState], epsilon: f64) -> Result<f64> {
    match mode {
        Mode::Weighted => potential_weighted(online, adversary, epsilon),
        Mode::Unweighted => potential_unweighted(online, adversary, epsilon),
    }
}

/// One coupled run: online greedy at `1 + eps` against a fixed-assignment
/// adversary at speed 1, on the same arrivals.
#[derive(Debug, Clone)]
pub struct CoupledTrace {
    pub instance: Instance,
    pub adversary: AssignmentMap,
    pub params: CompetitiveParams,
    pub online_metrics: Metrics,
    pub adversary_metrics: Metrics,
    pub online_assignment: Vec<usize>,
    /// Arrival and completion instants on either side, sorted.
    pub event_times: Vec<f64>,
    /// Time at which both sides are done.
    pub span: f64,
}

impl CoupledTrace {
    pub fn simulate(instance: &Instance, adversary: AssignmentMap, params: CompetitiveParams) -> Result<Self> {
        adversary.validate(instance)?;
        let mut online = online_sim_any(instance, params)?;
        let mut adv = adversary_sim_any(instance, &adversary)?;
        online.run_to_end()?;
        adv.run_to_end()?;
        let mut event_times: Vec<f64> = online.trace_times().into_iter().chain(adv.trace_times()).collect();
        event_times.sort_by(f64::total_cmp);
        event_times.dedup();
        let span = event_times.last().copied().unwrap_or(0.0);
        Ok(CoupledTrace {
            instance: instance.clone(),
            adversary,
            params,
            online_metrics: online.metrics(),
            adversary_metrics: adv.metrics(),
            online_assignment: online.assignments(),
            event_times,
            span,
        })
    }

    pub fn mode(&self) -> Mode {
        self.instance.mode
    }
}

/// Mode-erased simulation used by the coupled checks.
#[derive(Debug, Clone)]
enum AnySim {
    Weighted(Simulation<WeightedSchedulerConfig>),
    Unweighted(Simulation<UnweightedSchedulerConfig>),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            AnySim::Weighted($s) => $body,
            AnySim::Unweighted($s) => $body,
        }
    };
}

impl AnySim {
    fn new(instance: &Instance, speedup: f64, assignment: Assignment) -> Result<Self> {
        Ok(match instance.mode {
            Mode::Weighted => {
                let cfg = WeightedSchedulerConfig { speedup, completion_threshold: COUPLED_COMPLETION_THRESHOLD };
                cfg.validate()?;
                AnySim::Weighted(Simulation::new(instance, cfg, assignment)?)
            }
            Mode::Unweighted => {
                let cfg = UnweightedSchedulerConfig::new(speedup)?;
                AnySim::Unweighted(Simulation::new(instance, cfg, assignment)?)
            }
        })
    }

    fn run_to_end(&mut self) -> Result<()> {
        dispatch!(self, s => s.run_to_end())
    }
    fn metrics(&self) -> Metrics {
        dispatch!(self, s => s.metrics())
    }
    fn assignments(&self) -> Vec<usize> {
        dispatch!(self, s => s.assignments().to_vec())
    }
    fn trace_times(&self) -> Vec<f64> {
        dispatch!(self, s => s.trace().iter().map(|e| e.time()).collect())
    }
    fn machines(&self) -> &[MachineState] {
        dispatch!(self, s => s.machines())
    }
    fn next_event_time(&self) -> Result<Option<f64>> {
        dispatch!(self, s => s.next_event_time())
    }
    fn flow_until(&mut self, t: f64) -> Result<()> {
        dispatch!(self, s => s.flow_until(t))
    }
    fn pop_completions(&mut self) -> Vec<(JobId, usize)> {
        dispatch!(self, s => s.pop_completions())
    }
    fn advance_to(&mut self, t: f64) -> Result<()> {
        dispatch!(self, s => s.advance_to(t))
    }
    fn snapshot(&self) -> Vec<MachineSnapshot> {
        dispatch!(self, s => s.snapshot())
    }
    fn pending_release(&self) -> Option<f64> {
        dispatch!(self, s => s.next_release())
    }
    fn time(&self) -> f64 {
        dispatch!(self, s => s.time())
    }
    /// Machine the next job goes to and that machine's assignment delta.
    fn route_next(&self) -> Option<(usize, f64)> {
        dispatch!(self, s => {
            let job = *s.peek_arrival()?;
            let m = s.route(&job);
            Some((m, s.discipline().assignment_delta(&s.machines()[m], &job)))
        })
    }
    fn admit_next(&mut self) -> Option<(JobId, usize)> {
        dispatch!(self, s => s.admit_next())
    }
    /// `w_a` (weighted) or `n_a` (unweighted), summed over machines.
    fn load(&self) -> f64 {
        match self {
            AnySim::Weighted(s) => s.machines().iter().map(MachineState::fractional_weight).sum(),
            AnySim::Unweighted(s) => s.machines().iter().map(|m| m.unfinished() as f64).sum(),
        }
    }
}

fn online_sim_any(instance: &Instance, params: CompetitiveParams) -> Result<AnySim> {
    AnySim::new(instance, params.speedup(), Assignment::Greedy)
}

fn adversary_sim_any(instance: &Instance, map: &AssignmentMap) -> Result<AnySim> {
    AnySim::new(instance, 1.0, Assignment::Fixed(Arc::new(map.clone())))
}

#[derive(Debug, Clone)]
struct Pair {
    online: AnySim,
    adversary: AnySim,
    mode: Mode,
    epsilon: f64,
}

impl Pair {
    fn start(coupled: &CoupledTrace) -> Result<Self> {
        Ok(Pair {
            online: online_sim_any(&coupled.instance, coupled.params)?,
            adversary: adversary_sim_any(&coupled.instance, &coupled.adversary)?,
            mode: coupled.mode(),
            epsilon: coupled.params.epsilon,
        })
    }

    fn phi(&self) -> Result<f64> {
        potential(self.mode, self.online.machines(), self.adversary.machines(), self.epsilon)
    }

    fn next_event(&self) -> Result<Option<f64>> {
        let a = self.online.next_event_time()?;
        let b = self.adversary.next_event_time()?;
        Ok(match (a, b) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        })
    }

    fn flow_until(&mut self, t: f64) -> Result<()> {
        self.online.flow_until(t)?;
        self.adversary.flow_until(t)
    }

    fn advance_to(&mut self, t: f64) -> Result<()> {
        self.online.advance_to(t)?;
        self.adversary.advance_to(t)
    }

    fn arrival_due(&self) -> bool {
        self.online.pending_release().is_some_and(|r| r <= self.online.time())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalCheck {
    pub time: f64,
    pub job: JobId,
    pub online_machine: usize,
    pub adversary_machine: usize,
    pub delta_phi: f64,
    pub adversary_delta: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArrivalReport {
    pub checks: Vec<ArrivalCheck>,
}

impl ArrivalReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Smallest `bound - delta_phi`.
    pub fn worst_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.bound - c.delta_phi).fold(f64::INFINITY, f64::min)
    }
}

/// Replays the coupled run and checks every arrival.
pub fn check_arrival_condition(coupled: &CoupledTrace) -> Result<ArrivalReport> {
    let d = coupled.params.d(coupled.mode());
    let mut pair = Pair::start(coupled)?;
    let mut report = ArrivalReport::default();
    while let Some(t) = pair.next_event()? {
        pair.flow_until(t)?;
        pair.online.pop_completions();
        pair.adversary.pop_completions();
        while pair.arrival_due() {
            let before = pair.phi()?;
            let (adv_machine, adv_delta) = pair.adversary.route_next().expect("pending arrival");
            let (job, online_machine) = pair.online.admit_next().expect("pending arrival");
            pair.adversary.admit_next();
            let after = pair.phi()?;
            let bound = d * adv_delta;
            let delta_phi = after - before;
            report.checks.push(ArrivalCheck {
                time: t,
                job,
                online_machine,
                adversary_machine: adv_machine,
                delta_phi,
                adversary_delta: adv_delta,
                bound,
                pass: delta_phi <= bound + ARRIVAL_TOL * bound.max(1.0),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningSample {
    pub time: f64,
    /// `G_A + dPhi/dt` in the mode's form.
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub dphi_dt: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningReport {
    pub samples: Vec<RunningSample>,
    /// Grid points dropped for lying within two steps of an event.
    pub skipped: usize,
    pub step: f64,
}

impl RunningReport {
    pub fn all_pass(&self) -> bool {
        self.samples.iter().all(|s| s.pass)
    }

    /// Smallest `rhs + tol - lhs`.
    pub fn worst_margin(&self) -> f64 {
        self.samples.iter().map(|s| s.rhs + s.tol - s.lhs).fold(f64::INFINITY, f64::min)
    }
}

/// Checks the running condition on an even grid of sample times with at
/// least `min_samples` points away from events.
pub fn check_running_condition(coupled: &CoupledTrace, min_samples: usize) -> Result<RunningReport> {
    let span = if coupled.span > 0.0 { coupled.span } else { 1.0 };
    let h = RUNNING_STEP_FRACTION * span;
    let params = coupled.params;
    let mut pair = Pair::start(coupled)?;
    let mut report = RunningReport { step: h, ..Default::default() };
    let events = &coupled.event_times;
    // each event rules out at most one grid point
    let grid = min_samples + events.len();
    for k in 0..grid {
        let t = span * (k as f64 + 0.5) / grid as f64;
        let i = events.partition_point(|&e| e < t);
        let near = |e: f64| (e - t).abs() <= 2.0 * h;
        if events.get(i).copied().is_some_and(near) || (i > 0 && near(events[i - 1])) {
            report.skipped += 1;
            continue;
        }
        pair.advance_to(t - h)?;
        let phi_minus = pair.phi()?;
        let mut probe = pair.clone();
        probe.advance_to(t)?;
        let phi_mid = probe.phi()?;
        let load_a = probe.online.load();
        let load_o = probe.adversary.load();
        probe.advance_to(t + h)?;
        let phi_plus = probe.phi()?;

        let dphi = (phi_plus - phi_minus) / (2.0 * h);
        let curvature = (phi_plus - 2.0 * phi_mid + phi_minus).abs() / (h * h);
        let (lhs, rhs) = match coupled.mode() {
            Mode::Weighted => (2.0 * load_a + dphi, params.c_weighted() * 2.0 * load_o),
            Mode::Unweighted => (4.0 * load_a + dphi, 4.0 * load_o),
        };
        let tol = RUNNING_REL_TOL * rhs.max(1.0) + 10.0 * h * curvature;
        report.samples.push(RunningSample { time: t, lhs, rhs, tol, dphi_dt: dphi, pass: lhs <= rhs + tol });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionCheck {
    pub time: f64,
    pub jobs: Vec<JobId>,
    pub phi_before: f64,
    pub phi_after: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub phi_start: f64,
    pub phi_end: f64,
    pub completions: Vec<CompletionCheck>,
}

impl BoundaryReport {
    pub fn all_pass(&self) -> bool {
        self.phi_start == 0.0 && self.phi_end >= 0.0 && self.completions.iter().all(|c| c.pass)
    }

    /// Largest increase of `Phi` over a completion.
    pub fn worst_increase(&self) -> f64 {
        self.completions.iter().map(|c| c.phi_after - c.phi_before).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn check_boundary_completion(coupled: &CoupledTrace) -> Result<BoundaryReport> {
    let mut pair = Pair::start(coupled)?;
    let phi_start = pair.phi()?;
    let mut completions = Vec::new();
    while let Some(t) = pair.next_event()? {
        pair.flow_until(t)?;
        let before = pair.phi()?;
        let mut jobs: Vec<JobId> = pair.online.pop_completions().into_iter().map(|c| c.0).collect();
        jobs.extend(pair.adversary.pop_completions().into_iter().map(|c| c.0));
        if !jobs.is_empty() {
            let after = pair.phi()?;
            completions.push(CompletionCheck {
                time: t,
                jobs,
                phi_before: before,
                phi_after: after,
                pass: after <= before + COMPLETION_TOL,
            });
        }
        while pair.arrival_due() {
            pair.online.admit_next();
            pair.adversary.admit_next();
        }
    }
    Ok(BoundaryReport { phi_start, phi_end: pair.phi()?, completions })
}

/// Online state at one instant, with `Phi` against an adversary when one
/// is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time: f64,
    pub machines: Vec<MachineSnapshot>,
    pub phi: Option<f64>,
}

/// Samples the online run at `speedup` at the given (sorted) times. `Phi`
/// needs `speedup > 1`, with `epsilon = speedup - 1`.
pub fn trajectory(
    instance: &Instance,
    speedup: f64,
    adversary: Option<&AssignmentMap>,
    times: &[f64],
) -> Result<Vec<TrajectoryRow>> {
    let mut online = AnySim::new(instance, speedup, Assignment::Greedy)?;
    let mut adv = match adversary {
        Some(map) if speedup > 1.0 => Some(adversary_sim_any(instance, map)?),
        _ => None,
    };
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        online.advance_to(t)?;
        let phi = match adv.as_mut() {
            Some(a) => {
                a.advance_to(t)?;
                Some(potential(instance.mode, online.machines(), a.machines(), speedup - 1.0)?)
            }
            None => None,
        };
        rows.push(TrajectoryRow { time: t, machines: online.snapshot(), phi });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `∫_{w_a}^{w_a+w_j} g - ∫_{(w_a-w_o-w_j)_+}^{(w_a-w_o)_+} g <= 2 ∫_0^{w_j} g(w_o + x) dx`
/// for `g(x) = x/Q(x)`.
pub fn shift_inequality_check(pf: &PowerFunction, w_a: f64, w_o: f64, w_j: f64) -> Result<ShiftInequality> {
    if !(w_a >= 0.0 && w_o >= 0.0 && w_j >= 0.0) {
        return Err(Error::Domain("shift_inequality_check needs non-negative weights".into()));
    }
    let upper = (w_a - w_o).max(0.0);
    let lower = (w_a - w_o - w_j).max(0.0);
    let lhs = pf.integral_x_over_q(w_a, w_a + w_j)? - pf.integral_x_over_q(lower, upper)?;
    let rhs = 2.0 * pf.integral_x_over_q(w_o, w_o + w_j)?;
    Ok(ShiftInequality { lhs, rhs, pass: lhs <= rhs + SHIFT_INEQUALITY_TOL })
}

/// Monotonicity and subadditivity of `g(x) = x/Q(x)` at one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPairCheck {
    pub monotone: bool,
    pub subadditive: bool,
}

pub fn g_pair_check(pf: &PowerFunction, x: f64, y: f64) -> GPairCheck {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let g = |v: f64| pf.x_over_q(v);
    GPairCheck { monotone: g(lo) <= g(hi) + 1e-9, subadditive: g(x) + g(y) + 1e-9 >= g(x + y) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Job;

    fn square() -> Arc<PowerFunction> {
        Arc::new(PowerFunction::poly(2.0).unwrap())
    }

    fn wjob(id: u64, size: f64, weight: f64) -> Job {
        Job::new(id, 0.0, size, weight).unwrap()
    }

    #[test]
    fn weighted_potential_examples() {
        let pf = square();
        let on = vec![MachineState::with_jobs(pf.clone(), &[wjob(0, 1.0, 1.0)])];
        let off = vec![MachineState::new(pf.clone())];
        for eps in [0.1, 0.5, 2.0] {
            assert_eq!(potential_weighted(&on, &on, eps).unwrap(), 0.0);
        }
        let phi = potential_weighted(&on, &off, 0.5).unwrap();
        assert!((phi - 8.0 / 3.0).abs() < 1e-14);
        assert_eq!(potential_weighted(&off, &on, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn unweighted_potential_examples() {
        let pf = square();
        let one = MachineState::with_jobs(pf.clone(), &[Job::unit(0, 0.0, 1.0).unwrap()]);
        let two =
            MachineState::with_jobs(pf.clone(), &[Job::unit(0, 0.0, 1.0).unwrap(), Job::unit(1, 0.0, 1.0).unwrap()]);
        let empty = MachineState::new(pf);
        assert_eq!(potential_unweighted(std::slice::from_ref(&two), std::slice::from_ref(&two), 1.0).unwrap(), 0.0);
        assert!((potential_unweighted(std::slice::from_ref(&one), &[empty], 1.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((potential_unweighted(&[two], &[one], 1.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn mismatched_machines_are_rejected() {
        let a = vec![MachineState::new(square())];
        let b = vec![MachineState::new(square()), MachineState::new(square())];
        assert!(matches!(potential_weighted(&a, &b, 1.0), Err(Error::MachineMismatch(_))));
        let c = vec![MachineState::new(Arc::new(PowerFunction::poly(3.0).unwrap()))];
        assert!(matches!(potential_unweighted(&a, &c, 1.0), Err(Error::MachineMismatch(_))));
    }

    #[test]
    fn shift_inequality_examples() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let r = shift_inequality_check(&pf, 3.0, 1.0, 0.0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.pass);
        let r = shift_inequality_check(&pf, 2.0, 1.0, 1.0).unwrap();
        let i = |a: f64, b: f64| (b.powf(1.5) - a.powf(1.5)) / 1.5;
        assert!((r.lhs - (i(2.0, 3.0) - i(0.0, 1.0))).abs() < 1e-14);
        assert!((r.rhs - 2.0 * i(1.0, 2.0)).abs() < 1e-14);
        assert!(r.pass);
    }

    #[test]
    fn arrival_on_different_empty_machines() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let inst = Instance::new(vec![pf.clone(), pf], vec![wjob(0, 1.0, 1.0)], Mode::Weighted).unwrap();
        // online picks machine 0; the adversary uses machine 1
        let coupled =
            CoupledTrace::simulate(&inst, AssignmentMap(vec![1]), CompetitiveParams::new(0.5).unwrap()).unwrap();
        let rep = check_arrival_condition(&coupled).unwrap();
        assert_eq!(rep.checks.len(), 1);
        let c = &rep.checks[0];
        assert_eq!((c.online_machine, c.adversary_machine), (0, 1));
        assert!((c.delta_phi - 8.0 / 3.0).abs() < 1e-14);
        assert!((c.bound - 16.0 / 3.0).abs() < 1e-14);
        assert!(c.pass);
    }

    #[test]
    fn arrival_on_same_machine_changes_nothing() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let inst = Instance::new(vec![pf.clone(), pf], vec![wjob(0, 1.0, 1.0)], Mode::Weighted).unwrap();
        let coupled =
            CoupledTrace::simulate(&inst, AssignmentMap(vec![0]), CompetitiveParams::new(0.5).unwrap()).unwrap();
        let rep = check_arrival_condition(&coupled).unwrap();
        assert_eq!(rep.checks[0].delta_phi, 0.0);
        assert!(rep.all_pass());
    }

    #[test]
    fn empty_instance_checks() {
        let pf = PowerFunction::poly(2.0).unwrap();
        for mode in [Mode::Weighted, Mode::Unweighted] {
            let inst = Instance::new(vec![pf.clone()], vec![], mode).unwrap();
            let coupled =
                CoupledTrace::simulate(&inst, AssignmentMap(vec![]), CompetitiveParams::new(1.0).unwrap()).unwrap();
            let run = check_running_condition(&coupled, 100).unwrap();
            assert_eq!(run.samples.len(), 100);
            assert_eq!(run.skipped, 0);
            assert!(run.samples.iter().all(|s| s.lhs == 0.0 && s.rhs == 0.0 && s.pass));
            let b = check_boundary_completion(&coupled).unwrap();
            assert!(b.all_pass());
            assert!(b.completions.is_empty());
            assert!(check_arrival_condition(&coupled).unwrap().checks.is_empty());
        }
    }

    #[test]
    fn single_job_identical_assignment() {
        let pf = PowerFunction::poly(2.0).unwrap();
        let inst = Instance::new(vec![pf], vec![wjob(0, 1.0, 1.0)], Mode::Weighted).unwrap();
        let coupled =
            CoupledTrace::simulate(&inst, AssignmentMap(vec![0]), CompetitiveParams::new(0.5).unwrap()).unwrap();
        let run = check_running_condition(&coupled, 100).unwrap();
        assert!(run.samples.len() >= 100);
        assert!(run.all_pass(), "{:?}", run.samples.iter().find(|s| !s.pass));
        let b = check_boundary_completion(&coupled).unwrap();
        assert_eq!(b.phi_start, 0.0);
        assert_eq!(b.phi_end, 0.0);
        assert!(b.all_pass());
    }
}
