//! Power functions `P(s)` and their inverses `Q(y)`.
//!
//! Every accepted power function is in canonical form: `P(0) = 0`, strictly
//! increasing, convex, unbounded. Three families are supported:
//!
//! - `poly`: `P(s) = s^alpha` with `alpha > 1`;
//! - `affine`: a convex polynomial `sum_k c_k s^k` with `c_0 = 0`,
//!   non-negative coefficients and at least one term of degree two or more;
//! - `table`: convex piecewise-linear interpolation through `(0, 0)` and the
//!   given `(speed, power)` breakpoints, extended linearly past the last one.
//!
//! The scheduling code needs two integrals over power levels `x`:
//! `∫ x/Q(x) dx` (the shadow-potential integrand) and `∫ dx/Q(x)` (time to
//! drain fractional weight under "power = weight"). Both are evaluated from
//! exact antiderivatives. For `affine` and `table` the antiderivatives are
//! taken in the speed domain via the substitution `x = P(s)`, where
//! `x/Q(x) dx = P(s) P'(s) / s ds` and `dx/Q(x) = P'(s) / s ds`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Serialized description of a power function, as it appears in instance files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PowerSpec {
    Poly {
        alpha: f64,
    },
    /// `coefficients[k]` multiplies `s^k`; `coefficients[0]` must be zero.
    Affine {
        coefficients: Vec<f64>,
    },
    /// `(speed, power)` breakpoints with strictly increasing speeds.
    Table {
        points: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone)]
enum Kind {
    Poly {
        alpha: f64,
        /// `1 - 1/alpha`, exponent of the `∫ dx/Q` primitive.
        beta: f64,
        /// `2 - 1/alpha`, exponent of the `∫ x/Q dx` primitive.
        gamma: f64,
    },
    Affine {
        coeffs: Vec<f64>,
        /// Coefficients of `∫_0^s P(u) P'(u) / u du`, indexed by degree.
        xq_coeffs: Vec<f64>,
    },
    Table {
        speeds: Vec<f64>,
        powers: Vec<f64>,
        /// `slopes[k]` is the slope on `[speeds[k], speeds[k+1]]`; the last
        /// slope also covers the linear extension.
        slopes: Vec<f64>,
        /// `∫_0^{powers[k]} x/Q(x) dx`.
        xq_cum: Vec<f64>,
        /// Speed-domain primitive of `P'(s)/s` at each breakpoint, anchored
        /// to zero at `speeds[1]`.
        inv_cum: Vec<f64>,
    },
}

/// A validated power function. Immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PowerSpec", into = "PowerSpec")]
pub struct PowerFunction {
    spec: PowerSpec,
    kind: Kind,
}

impl PartialEq for PowerFunction {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl From<PowerFunction> for PowerSpec {
    fn from(pf: PowerFunction) -> Self {
        pf.spec
    }
}

impl TryFrom<PowerSpec> for PowerFunction {
    type Error = Error;

    fn try_from(spec: PowerSpec) -> Result<Self> {
        PowerFunction::new(spec)
    }
}

impl fmt::Display for PowerFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            PowerSpec::Poly { alpha } => write!(f, "s^{alpha}"),
            PowerSpec::Affine { coefficients } => {
                let terms: Vec<String> = coefficients
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(k, c)| format!("{c}*s^{k}"))
                    .collect();
                write!(f, "{}", terms.join(" + "))
            }
            PowerSpec::Table { points } => write!(f, "table({} points)", points.len()),
        }
    }
}

const BISECT_MAX_ITER: u32 = 200;

impl PowerFunction {
    pub fn new(spec: PowerSpec) -> Result<Self> {
        let kind = match &spec {
            PowerSpec::Poly { alpha } => build_poly(*alpha)?,
            PowerSpec::Affine { coefficients } => build_affine(coefficients)?,
            PowerSpec::Table { points } => build_table(points)?,
        };
        let pf = PowerFunction { spec, kind };
        pf.check_axioms_by_sampling()?;
        Ok(pf)
    }

    /// `P(s) = s^alpha`.
    pub fn poly(alpha: f64) -> Result<Self> {
        Self::new(PowerSpec::Poly { alpha })
    }

    pub fn affine(coefficients: Vec<f64>) -> Result<Self> {
        Self::new(PowerSpec::Affine { coefficients })
    }

    pub fn table(points: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(PowerSpec::Table { points })
    }

    pub fn spec(&self) -> &PowerSpec {
        &self.spec
    }

    /// `P(s)`, rejecting negative or non-finite speeds.
    pub fn eval_power(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("speed must be a finite value >= 0, got {s}")));
        }
        Ok(self.power_at(s))
    }

    /// `Q(y)`, the speed reachable at power `y`.
    pub fn eval_speed(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("power must be a finite value >= 0, got {y}")));
        }
        Ok(self.speed_at(y))
    }

    /// `P(s)` for `s >= 0`; negative inputs are treated as zero.
    pub fn power_at(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match &self.kind {
            Kind::Poly { alpha, .. } => s.powf(*alpha),
            Kind::Affine { coeffs, .. } => horner(coeffs, s),
            Kind::Table { speeds, powers, slopes, .. } => {
                let k = segment_of(speeds, s);
                powers[k] + slopes[k] * (s - speeds[k])
            }
        }
    }

    /// `Q(y)` for `y >= 0`; negative inputs are treated as zero.
    pub fn speed_at(&self, y: f64) -> f64 {
        let y = y.max(0.0);
        if y == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Poly { alpha, .. } => {
                if *alpha == 2.0 {
                    y.sqrt()
                } else if *alpha == 3.0 {
                    y.cbrt()
                } else {
                    y.powf(alpha.recip())
                }
            }
            Kind::Affine { coeffs, .. } => {
                let mut hi = 1.0;
                while horner(coeffs, hi) < y {
                    hi *= 2.0;
                }
                quad::bisect_increasing(|s| horner(coeffs, s) - y, 0.0, hi, BISECT_MAX_ITER)
            }
            Kind::Table { speeds, powers, slopes, .. } => {
                let k = segment_of(powers, y);
                speeds[k] + (y - powers[k]) / slopes[k]
            }
        }
    }

    /// Right derivative `P'(0)`. Positive exactly when `Q` is asymptotically
    /// linear at zero, which makes `∫_0 dx/Q(x)` diverge.
    pub fn slope_at_zero(&self) -> f64 {
        match &self.kind {
            Kind::Poly { .. } => 0.0,
            Kind::Affine { coeffs, .. } => coeffs.get(1).copied().unwrap_or(0.0),
            Kind::Table { slopes, .. } => slopes[0],
        }
    }

    /// `g(x) = x / Q(x)`, with `g(0) := 0`.
    pub fn x_over_q(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        x / self.speed_at(x)
    }

    /// `∫_0^x t/Q(t) dt`.
    pub fn xq_primitive(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        if x == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Poly { gamma, .. } => x.powf(*gamma) / gamma,
            Kind::Affine { xq_coeffs, .. } => horner(xq_coeffs, self.speed_at(x)),
            Kind::Table { speeds, powers, slopes, xq_cum, .. } => {
                let k = segment_of(powers, x);
                let s = speeds[k] + (x - powers[k]) / slopes[k];
                xq_cum[k] + table_xq_piece(speeds[k], powers[k], slopes[k], s)
            }
        }
    }

    /// `∫_a^b x/Q(x) dx` for `0 <= a <= b`.
    pub fn integral_x_over_q(&self, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        if a == b {
            return Ok(0.0);
        }
        Ok((self.xq_primitive(b) - self.xq_primitive(a)).max(0.0))
    }

    /// Antiderivative of `1/Q(x)` up to an additive constant; `-inf` at zero
    /// when the integral diverges there.
    pub fn inv_q_primitive(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match &self.kind {
            Kind::Poly { beta, .. } => x.powf(*beta) / beta,
            Kind::Affine { coeffs, .. } => affine_inv_primitive(coeffs, self.speed_at(x)),
            Kind::Table { speeds, powers, slopes, inv_cum, .. } => {
                let k = segment_of(powers, x);
                let s = speeds[k] + (x - powers[k]) / slopes[k];
                table_inv_primitive(speeds, slopes, inv_cum, k, s)
            }
        }
    }

    /// `∫_lo^hi dx/Q(x)` for `0 <= lo <= hi`.
    pub fn integral_inv_q(&self, lo: f64, hi: f64) -> Result<f64> {
        check_interval(lo, hi)?;
        if lo == hi {
            return Ok(0.0);
        }
        if lo == 0.0 && self.slope_at_zero() > 0.0 {
            return Err(Error::NonTerminating(format!(
                "∫ dx/Q(x) diverges at 0 for {self} (P'(0) = {})",
                self.slope_at_zero()
            )));
        }
        Ok((self.inv_q_primitive(hi) - self.inv_q_primitive(lo)).max(0.0))
    }

    /// `∫_a^b dw / Q(base + w)`, the time-of-progress primitive obtained by
    /// separating `dw/dt = -Q(base + w) / d`.
    pub fn integral_inv_q_shift(&self, base: f64, a: f64, b: f64) -> Result<f64> {
        if !(base >= 0.0) {
            return Err(Error::Domain(format!("base weight must be >= 0, got {base}")));
        }
        check_interval(a, b)?;
        self.integral_inv_q(base + a, base + b)
    }

    /// Lower limit `lo` with `∫_lo^hi dx/Q(x) = tau`, clamped at zero.
    pub fn drain_lower_limit(&self, hi: f64, tau: f64) -> f64 {
        if tau <= 0.0 {
            return hi;
        }
        match &self.kind {
            Kind::Poly { beta, .. } => {
                let target = hi.powf(*beta) / beta - tau;
                if target <= 0.0 {
                    0.0
                } else {
                    (beta * target).powf(beta.recip())
                }
            }
            Kind::Affine { coeffs, .. } => {
                let s_hi = self.speed_at(hi);
                let target = affine_inv_primitive(coeffs, s_hi) - tau;
                if affine_inv_primitive(coeffs, 0.0) >= target {
                    return 0.0;
                }
                let s =
                    quad::bisect_increasing(|s| affine_inv_primitive(coeffs, s) - target, 0.0, s_hi, BISECT_MAX_ITER);
                horner(coeffs, s).min(hi)
            }
            Kind::Table { speeds, powers, slopes, inv_cum, .. } => {
                let k_hi = segment_of(powers, hi);
                let s_hi = speeds[k_hi] + (hi - powers[k_hi]) / slopes[k_hi];
                let target = table_inv_primitive(speeds, slopes, inv_cum, k_hi, s_hi) - tau;
                // last breakpoint whose primitive is <= target; segment 0 otherwise
                let k = (1..slopes.len()).rev().find(|&k| inv_cum[k] <= target).unwrap_or(0);
                let s = if k == 0 {
                    speeds[1] * (target / slopes[0]).exp()
                } else {
                    speeds[k] * ((target - inv_cum[k]) / slopes[k]).exp()
                };
                (powers[k] + slopes[k] * (s - speeds[k])).clamp(0.0, hi)
            }
        }
    }

    /// Quadrature route for `∫_a^b x/Q(x) dx`; independent of the primitives.
    pub fn integral_x_over_q_quadrature(&self, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        Ok(self.piecewise_quadrature(|x| self.x_over_q(x), a, b))
    }

    /// Quadrature route for `∫_a^b dw/Q(base + w)`. Only meaningful when the
    /// integrand is bounded, i.e. `base + a > 0`.
    pub fn integral_inv_q_shift_quadrature(&self, base: f64, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        if base + a <= 0.0 {
            return Err(Error::Domain("quadrature route needs base + a > 0".into()));
        }
        Ok(self.piecewise_quadrature(|x| 1.0 / self.speed_at(x), base + a, base + b))
    }

    fn piecewise_quadrature<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        // split at table kinks so each piece is smooth
        let mut cuts = vec![a];
        if let Kind::Table { powers, .. } = &self.kind {
            cuts.extend(powers.iter().copied().filter(|&p| p > a && p < b));
        }
        cuts.push(b);
        cuts.windows(2).map(|w| quad::adaptive_simpson(&f, w[0], w[1], quad::REL_TOL * 1e-2, quad::ABS_FLOOR)).sum()
    }

    fn check_axioms_by_sampling(&self) -> Result<()> {
        if self.power_at(0.0) != 0.0 {
            return Err(Error::InvalidPower("P(0) must be 0".into()));
        }
        let grid: Vec<f64> = (0..=60).map(|i| 1e-3 * 10f64.powf(i as f64 / 10.0)).collect();
        for w in grid.windows(2) {
            let (s1, s2) = (w[0], w[1]);
            let (p1, p2) = (self.power_at(s1), self.power_at(s2));
            if !(p2 > p1) {
                return Err(Error::InvalidPower(format!("not strictly increasing at s={s1}")));
            }
            let mid = self.power_at(0.5 * (s1 + s2));
            if mid > 0.5 * (p1 + p2) + 1e-9 * p2.max(1.0) {
                return Err(Error::InvalidPower(format!("not convex near s={s1}")));
            }
        }
        Ok(())
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0) || !(b >= a) || !b.is_finite() {
        return Err(Error::Domain(format!("need 0 <= a <= b < inf, got a={a}, b={b}")));
    }
    Ok(())
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

/// Index of the segment containing `v` in a sorted breakpoint list whose
/// first entry is zero; values past the end use the last segment.
fn segment_of(breaks: &[f64], v: f64) -> usize {
    let n_segments = breaks.len() - 1;
    breaks.partition_point(|&b| b <= v).saturating_sub(1).min(n_segments - 1)
}

fn build_poly(alpha: f64) -> Result<Kind> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::InvalidPower(format!("alpha must be finite and > 1, got {alpha}")));
    }
    Ok(Kind::Poly { alpha, beta: 1.0 - 1.0 / alpha, gamma: 2.0 - 1.0 / alpha })
}

fn build_affine(coefficients: &[f64]) -> Result<Kind> {
    if coefficients.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidPower("coefficients must be finite and >= 0".into()));
    }
    if coefficients.first().copied().unwrap_or(0.0) != 0.0 {
        return Err(Error::InvalidPower("constant term must be 0".into()));
    }
    if !coefficients.iter().skip(2).any(|c| *c > 0.0) {
        return Err(Error::InvalidPower("need a positive coefficient of degree >= 2 for strict convexity".into()));
    }
    let mut coeffs = coefficients.to_vec();
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    // P(s) P'(s) / s = sum_{k,l>=1} c_k l c_l s^{k+l-2}; integrate termwise.
    let deg = coeffs.len() - 1;
    let mut xq_coeffs = vec![0.0; 2 * deg];
    for k in 1..=deg {
        for l in 1..=deg {
            let d = k + l - 1;
            xq_coeffs[d] += coeffs[k] * l as f64 * coeffs[l] / d as f64;
        }
    }
    Ok(Kind::Affine { coeffs, xq_coeffs })
}

/// `c_1 ln s + sum_{k>=2} k c_k s^{k-1}/(k-1)`.
fn affine_inv_primitive(coeffs: &[f64], s: f64) -> f64 {
    let c1 = coeffs.get(1).copied().unwrap_or(0.0);
    let mut acc = if c1 > 0.0 { c1 * s.ln() } else { 0.0 };
    let mut pow = s;
    for (k, c) in coeffs.iter().enumerate().skip(2) {
        acc += k as f64 * c * pow / (k - 1) as f64;
        pow *= s;
    }
    acc
}

fn build_table(points: &[[f64; 2]]) -> Result<Kind> {
    if points.is_empty() {
        return Err(Error::InvalidPower("table needs at least one point".into()));
    }
    let mut speeds = vec![0.0];
    let mut powers = vec![0.0];
    for (i, &[s, p]) in points.iter().enumerate() {
        if !s.is_finite() || !p.is_finite() {
            return Err(Error::InvalidPower(format!("point {i} is not finite")));
        }
        if i == 0 && s == 0.0 {
            if p != 0.0 {
                return Err(Error::InvalidPower("P(0) must be 0".into()));
            }
            continue;
        }
        if s <= *speeds.last().unwrap() || p <= *powers.last().unwrap() {
            return Err(Error::InvalidPower(format!(
                "point {i} ({s}, {p}) does not strictly increase speed and power"
            )));
        }
        speeds.push(s);
        powers.push(p);
    }
    if speeds.len() < 2 {
        return Err(Error::InvalidPower("table needs a point with positive speed".into()));
    }
    let slopes: Vec<f64> =
        speeds.windows(2).zip(powers.windows(2)).map(|(s, p)| (p[1] - p[0]) / (s[1] - s[0])).collect();
    for (k, w) in slopes.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(Error::InvalidPower(format!(
                "slopes decrease at breakpoint {} ({} -> {}); table must be convex",
                k + 1,
                w[0],
                w[1]
            )));
        }
    }
    let mut xq_cum = vec![0.0; speeds.len()];
    let mut inv_cum = vec![f64::NEG_INFINITY; speeds.len()];
    inv_cum[1] = 0.0;
    for k in 0..slopes.len() {
        xq_cum[k + 1] = xq_cum[k] + table_xq_piece(speeds[k], powers[k], slopes[k], speeds[k + 1]);
        if k >= 1 {
            inv_cum[k + 1] = inv_cum[k] + slopes[k] * (speeds[k + 1] / speeds[k]).ln();
        }
    }
    Ok(Kind::Table { speeds, powers, slopes, xq_cum, inv_cum })
}

/// `∫_{s0}^{s} (b + m u) m / u du` on a linear segment with `P(s0) = p0`.
fn table_xq_piece(s0: f64, p0: f64, m: f64, s: f64) -> f64 {
    let intercept = p0 - m * s0;
    let log_term = if intercept == 0.0 || s0 == 0.0 { 0.0 } else { intercept * (s / s0).ln() };
    m * (log_term + m * (s - s0))
}

fn table_inv_primitive(speeds: &[f64], slopes: &[f64], inv_cum: &[f64], k: usize, s: f64) -> f64 {
    if k == 0 {
        slopes[0] * (s / speeds[1]).ln()
    } else {
        inv_cum[k] + slopes[k] * (s / speeds[k]).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn eval_power_examples() {
        let sq = PowerFunction::poly(2.0).unwrap();
        assert_eq!(sq.eval_power(2.0).unwrap(), 4.0);
        let cube = PowerFunction::poly(3.0).unwrap();
        assert_eq!(cube.eval_power(0.0).unwrap(), 0.0);
        let table = PowerFunction::table(vec![[1.0, 1.0], [2.0, 4.0]]).unwrap();
        assert!(close(table.eval_power(1.5).unwrap(), 2.5, 1e-15));
        assert!(matches!(sq.eval_power(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn eval_speed_examples() {
        let sq = PowerFunction::poly(2.0).unwrap();
        assert_eq!(sq.eval_speed(4.0).unwrap(), 2.0);
        assert_eq!(sq.eval_speed(0.0).unwrap(), 0.0);
        let cube = PowerFunction::poly(3.0).unwrap();
        assert_eq!(cube.eval_speed(8.0).unwrap(), 2.0);
        let aff = PowerFunction::affine(vec![0.0, 0.5, 1.0, 0.25]).unwrap();
        assert_eq!(aff.eval_speed(0.0).unwrap(), 0.0);
        for y in [1e-6, 0.3, 1.0, 17.0, 1e4] {
            let s = aff.eval_speed(y).unwrap();
            assert!((aff.power_at(s) - y).abs() <= 1e-10 * y.max(1.0));
        }
    }

    #[test]
    fn integral_x_over_q_examples() {
        let sq = PowerFunction::poly(2.0).unwrap();
        assert!(close(sq.integral_x_over_q(0.0, 1.0).unwrap(), 2.0 / 3.0, 1e-15));
        let cube = PowerFunction::poly(3.0).unwrap();
        assert!(close(cube.integral_x_over_q(0.0, 1.0).unwrap(), 3.0 / 5.0, 1e-15));
        assert_eq!(sq.integral_x_over_q(0.7, 0.7).unwrap(), 0.0);
        assert!(matches!(sq.integral_x_over_q(1.0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn integral_inv_q_shift_examples() {
        let sq = PowerFunction::poly(2.0).unwrap();
        assert!(close(sq.integral_inv_q_shift(0.0, 0.0, 1.0).unwrap(), 2.0, 1e-15));
        assert_eq!(sq.integral_inv_q_shift(1.0, 0.0, 0.0).unwrap(), 0.0);
        let cube = PowerFunction::poly(3.0).unwrap();
        assert!(close(cube.integral_inv_q_shift(0.0, 0.0, 1.0).unwrap(), 1.5, 1e-15));
    }

    #[test]
    fn divergent_drain_is_reported() {
        let table = PowerFunction::table(vec![[1.0, 1.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(table.integral_inv_q_shift(0.0, 0.0, 1.0), Err(Error::NonTerminating(_))));
        let aff = PowerFunction::affine(vec![0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(aff.integral_inv_q(0.0, 1.0), Err(Error::NonTerminating(_))));
        // no linear term: convergent
        let aff2 = PowerFunction::affine(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(close(aff2.integral_inv_q(0.0, 1.0).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn rejects_non_canonical_functions() {
        assert!(PowerFunction::poly(1.0).is_err());
        assert!(PowerFunction::poly(f64::NAN).is_err());
        assert!(PowerFunction::affine(vec![1.0, 0.0, 1.0]).is_err());
        assert!(PowerFunction::affine(vec![0.0, 1.0]).is_err());
        assert!(PowerFunction::affine(vec![0.0, -1.0, 1.0]).is_err());
        // concave table
        assert!(PowerFunction::table(vec![[1.0, 3.0], [2.0, 4.0]]).is_err());
        assert!(PowerFunction::table(vec![[1.0, 1.0], [1.0, 2.0]]).is_err());
        assert!(PowerFunction::table(vec![[0.0, 1.0], [1.0, 2.0]]).is_err());
        assert!(PowerFunction::table(vec![]).is_err());
    }

    #[test]
    fn primitives_match_quadrature_for_every_kind() {
        let pfs = [
            PowerFunction::poly(2.5).unwrap(),
            PowerFunction::affine(vec![0.0, 0.3, 1.0, 0.2]).unwrap(),
            PowerFunction::affine(vec![0.0, 0.0, 0.5, 0.0, 0.1]).unwrap(),
            PowerFunction::table(vec![[0.5, 0.25], [1.0, 1.0], [2.0, 4.0], [3.0, 9.5]]).unwrap(),
        ];
        for pf in &pfs {
            for (a, b) in [(0.0, 1.0), (0.2, 3.7), (1.0, 25.0), (4.0, 4.5)] {
                let exact = pf.integral_x_over_q(a, b).unwrap();
                let quad = pf.integral_x_over_q_quadrature(a, b).unwrap();
                assert!(close(exact, quad, 1e-7), "{pf}: {exact} vs {quad} on [{a},{b}]");
                if a > 0.0 {
                    let exact = pf.integral_inv_q(a, b).unwrap();
                    let quad = pf.integral_inv_q_shift_quadrature(0.0, a, b).unwrap();
                    assert!(close(exact, quad, 1e-7), "{pf}: {exact} vs {quad}");
                }
            }
        }
    }

    #[test]
    fn drain_lower_limit_inverts_the_time_integral() {
        let pfs = [
            PowerFunction::poly(3.0).unwrap(),
            PowerFunction::affine(vec![0.0, 0.3, 1.0, 0.2]).unwrap(),
            PowerFunction::table(vec![[0.5, 0.25], [1.0, 1.0], [2.0, 4.0]]).unwrap(),
        ];
        for pf in &pfs {
            let hi = 6.0;
            for tau in [1e-4, 0.1, 0.5, 1.0] {
                let lo = pf.drain_lower_limit(hi, tau);
                let back = pf.integral_inv_q(lo, hi).unwrap();
                assert!(close(back, tau, 1e-9), "{pf}: tau {tau} -> lo {lo} -> {back}");
            }
        }
        let sq = PowerFunction::poly(2.0).unwrap();
        // ∫_0^1 dx/sqrt(x) = 2, so anything longer drains to zero
        assert_eq!(sq.drain_lower_limit(1.0, 3.0), 0.0);
    }

    #[test]
    fn serde_shapes() {
        let pf: PowerFunction = serde_json::from_str(r#"{"kind":"poly","alpha":2.0}"#).unwrap();
        assert_eq!(pf.power_at(3.0), 9.0);
        let pf: PowerFunction = serde_json::from_str(r#"{"kind":"table","points":[[1,1],[2,4]]}"#).unwrap();
        assert_eq!(serde_json::to_string(&pf).unwrap(), r#"{"kind":"table","points":[[1.0,1.0],[2.0,4.0]]}"#);
        assert!(serde_json::from_str::<PowerFunction>(r#"{"kind":"poly","alpha":0.5}"#).is_err());
    }
}
