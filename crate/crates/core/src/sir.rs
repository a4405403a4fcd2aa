//! Review-diffusion dynamics: a susceptible/infected/recovered compartment
//! model over a population normalized to 1, its forward-Euler integrator,
//! closed-form parameter estimators from review timelines, and the virality
//! features derived from the fitted dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default integration step (days) used by feature extraction.
pub const DEFAULT_DT: f64 = 0.01;
/// Default simulation horizon (days) used by feature extraction.
pub const DEFAULT_HORIZON: f64 = 90.0;
/// "First week" window is `[0, FIRST_WEEK_DAYS)` days since release.
pub const FIRST_WEEK_DAYS: f64 = 7.0;
/// Floor applied to the recovery rate when no negative first-week reviews
/// exist, so beta/gamma stays finite.
pub const GAMMA_FLOOR: f64 = 1e-6;

const SIMPLEX_TOL: f64 = 1e-9;

/// Population compartments as fractions of a unit population, at time `t`
/// days since release.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub t: f64,
}

impl SirState {
    /// Builds a state and checks the simplex invariants.
    pub fn new(s: f64, i: f64, r: f64, t: f64) -> Result<Self> {
        let state = SirState { s, i, r, t };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s", self.s), ("i", self.i), ("r", self.r)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::ContractViolation(format!(
                    "compartment {name} = {v} outside [0, 1]"
                )));
            }
        }
        if (self.s + self.i + self.r - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::ContractViolation(format!(
                "compartments sum to {} (expected 1 within {SIMPLEX_TOL})",
                self.s + self.i + self.r
            )));
        }
        if !(self.t >= 0.0) {
            return Err(Error::ContractViolation(format!(
                "time {} must be >= 0",
                self.t
            )));
        }
        Ok(())
    }
}

/// Contact and recovery rates per day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub beta: f64,
    pub gamma: f64,
}

impl SirParams {
    /// `gamma` must be strictly positive so `beta / gamma` is defined.
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::ContractViolation(format!(
                "beta = {beta} must be finite and >= 0"
            )));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::ContractViolation(format!(
                "gamma = {gamma} must be finite and > 0"
            )));
        }
        Ok(SirParams { beta, gamma })
    }

    pub fn basic_reproduction_number(&self) -> f64 {
        self.beta / self.gamma
    }
}

/// Fixed-step trajectory produced by [`simulate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SirTrajectory {
    pub states: Vec<SirState>,
    pub dt: f64,
}

impl SirTrajectory {
    pub fn peak_infected(&self) -> f64 {
        self.states.iter().map(|s| s.i).fold(f64::MIN, f64::max)
    }

    /// Days from the trajectory start until the first infected maximum.
    pub fn time_to_peak(&self) -> f64 {
        let peak = self.peak_infected();
        let t0 = self.states[0].t;
        self.states
            .iter()
            .find(|s| s.i == peak)
            .map(|s| s.t - t0)
            .unwrap_or(0.0)
    }
}

/// Virality features derived from initial conditions, rates, and a
/// simulated trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SirFeatures {
    /// `i0 / s0`; `None` when `s0 = 0` (undefined, imputed downstream).
    pub i0_s0_ratio: Option<f64>,
    /// `r0 / s0`; `None` when `s0 = 0`.
    pub r0_s0_ratio: Option<f64>,
    /// `beta / gamma`.
    pub basic_reproduction_number: f64,
    /// `beta * s0`.
    pub effective_contact_rate: f64,
    pub peak_infected: f64,
    pub time_to_peak: f64,
}

/// Per-reviewer comment timeline feeding the closed-form estimators.
///
/// Each entry is one distinct reviewer: the day (since release) of their
/// first comment, and whether they posted a negative review within the
/// first week. `total_comments` tracks raw comment volume including
/// repeat comments by the same reviewer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewTimeline {
    pub review_timestamps: Vec<(f64, bool)>,
    pub total_reviewers: usize,
    pub total_comments: usize,
}

impl ReviewTimeline {
    pub fn new(
        review_timestamps: Vec<(f64, bool)>,
        total_reviewers: usize,
        total_comments: usize,
    ) -> Result<Self> {
        if total_reviewers == 0 || total_comments == 0 {
            return Err(Error::ContractViolation(
                "timeline requires total_reviewers > 0 and total_comments > 0".into(),
            ));
        }
        if total_reviewers > total_comments {
            return Err(Error::ContractViolation(format!(
                "total_reviewers {total_reviewers} > total_comments {total_comments}"
            )));
        }
        if review_timestamps.len() > total_reviewers {
            return Err(Error::ContractViolation(format!(
                "{} timeline entries exceed total_reviewers {total_reviewers}",
                review_timestamps.len()
            )));
        }
        if let Some((d, _)) = review_timestamps.iter().find(|(d, _)| !(*d >= 0.0)) {
            return Err(Error::ContractViolation(format!(
                "days-since-release {d} must be >= 0"
            )));
        }
        Ok(ReviewTimeline {
            review_timestamps,
            total_reviewers,
            total_comments,
        })
    }

    /// Collapses a raw comment log `(author, day, is_negative)` into the
    /// per-reviewer timeline: reviewer-denominated counts deduplicate
    /// authors, comment-denominated counts keep every row. Negative days
    /// (pre-release buzz) are clamped to 0.
    pub fn from_comment_log<S: AsRef<str>>(log: &[(S, f64, bool)]) -> Result<Self> {
        use std::collections::BTreeMap;
        if log.is_empty() {
            return Err(Error::ContractViolation("empty comment log".into()));
        }
        let mut per_author: BTreeMap<&str, (f64, bool)> = BTreeMap::new();
        for (author, day, negative) in log {
            let day = day.max(0.0);
            let e = per_author.entry(author.as_ref()).or_insert((day, false));
            if day < e.0 {
                e.0 = day;
            }
            if *negative && day < FIRST_WEEK_DAYS {
                e.1 = true;
            }
        }
        let entries: Vec<(f64, bool)> = per_author.values().copied().collect();
        let reviewers = entries.len();
        ReviewTimeline::new(entries, reviewers, log.len())
    }

    pub fn first_week_commenters(&self) -> usize {
        self.review_timestamps
            .iter()
            .filter(|(d, _)| *d < FIRST_WEEK_DAYS)
            .count()
    }

    pub fn first_week_negatives(&self) -> usize {
        self.review_timestamps
            .iter()
            .filter(|(d, neg)| *d < FIRST_WEEK_DAYS && *neg)
            .count()
    }
}

/// Rates estimated from a timeline, with a flag recording whether the
/// gamma floor was applied.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateEstimate {
    pub params: SirParams,
    pub gamma_floored: bool,
}

/// One forward-Euler step of the unit-population dynamics.
///
/// The raw update conserves `s + i + r` exactly; the result is additionally
/// clamped to `[0, 1]` and renormalized so the simplex invariant holds for
/// any admissible step size.
pub fn euler_step(state: &SirState, params: &SirParams, dt: f64) -> Result<SirState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::ContractViolation(format!("dt = {dt} must be > 0")));
    }
    state.validate()?;
    let flow_si = params.beta * state.s * state.i * dt;
    let flow_ir = params.gamma * state.i * dt;
    let mut s = state.s - flow_si;
    let mut i = state.i + flow_si - flow_ir;
    let mut r = state.r + flow_ir;
    s = s.clamp(0.0, 1.0);
    i = i.clamp(0.0, 1.0);
    r = r.clamp(0.0, 1.0);
    let total = s + i + r;
    Ok(SirState {
        s: s / total,
        i: i / total,
        r: r / total,
        t: state.t + dt,
    })
}

/// Integrates from `initial` for `horizon` days at a fixed step `dt`,
/// returning `ceil(horizon / dt) + 1` states (the initial state included).
pub fn simulate(
    initial: &SirState,
    params: &SirParams,
    dt: f64,
    horizon: f64,
) -> Result<SirTrajectory> {
    if !(dt > 0.0) || !(horizon > 0.0) || dt > horizon {
        return Err(Error::ContractViolation(format!(
            "require 0 < dt <= horizon, got dt = {dt}, horizon = {horizon}"
        )));
    }
    initial.validate()?;
    // Guard against a ratio like 30/0.01 landing a hair above the integer.
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(*initial);
    let mut current = *initial;
    for _ in 0..steps {
        current = euler_step(&current, params, dt)?;
        states.push(current);
    }
    Ok(SirTrajectory { states, dt })
}

/// Residuals of the integral form `r(t) - r(0) = gamma * ∫ i dτ` evaluated
/// with trapezoidal quadrature; an oracle independent of the stepper.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    /// Largest residual over all prefixes of the trajectory.
    pub max_residual: f64,
    /// Residual at the final time.
    pub final_residual: f64,
}

/// Checks the integral form of the recovered compartment along a trajectory.
pub fn validate_trajectory(traj: &SirTrajectory, params: &SirParams) -> Result<ResidualReport> {
    if traj.states.len() < 3 {
        return Err(Error::ContractViolation(format!(
            "trajectory length {} < 3",
            traj.states.len()
        )));
    }
    let r0 = traj.states[0].r;
    let mut integral = 0.0;
    let mut max_residual: f64 = 0.0;
    let mut final_residual = 0.0;
    for w in traj.states.windows(2) {
        integral += 0.5 * (w[0].i + w[1].i) * traj.dt;
        final_residual = (w[1].r - r0 - params.gamma * integral).abs();
        max_residual = max_residual.max(final_residual);
    }
    Ok(ResidualReport {
        max_residual,
        final_residual,
    })
}

/// Initial compartments from first-week reviewer counts:
/// `i0` = first-week commenters / total reviewers, `r0` = first-week
/// negative reviewers / total reviewers, `s0` the remainder.
pub fn estimate_initial_conditions(timeline: &ReviewTimeline) -> Result<SirState> {
    let reviewers = timeline.total_reviewers as f64;
    let i0 = timeline.first_week_commenters() as f64 / reviewers;
    let r0 = timeline.first_week_negatives() as f64 / reviewers;
    let s0 = 1.0 - i0 - r0;
    if s0 < -1e-9 {
        return Err(Error::ContractViolation(format!(
            "i0 + r0 = {} > 1: inconsistent reviewer counts",
            i0 + r0
        )));
    }
    // Rounding can leave s0 a few ulps below zero when i0 + r0 is exactly 1.
    SirState::new(s0.max(0.0), i0, r0, 0.0)
}

/// Contact and recovery rates from comment-denominated ratios. A zero
/// negative count floors gamma at [`GAMMA_FLOOR`] and flags the estimate.
pub fn estimate_rates(timeline: &ReviewTimeline) -> Result<RateEstimate> {
    if timeline.total_comments == 0 {
        return Err(Error::ContractViolation("total_comments is zero".into()));
    }
    let comments = timeline.total_comments as f64;
    let beta = timeline.first_week_commenters() as f64 / comments;
    let raw_gamma = timeline.first_week_negatives() as f64 / comments;
    let gamma_floored = raw_gamma <= 0.0;
    let gamma = if gamma_floored {
        GAMMA_FLOOR
    } else {
        raw_gamma
    };
    Ok(RateEstimate {
        params: SirParams::new(beta, gamma)?,
        gamma_floored,
    })
}

/// Ratio features plus trajectory summaries. When `s0 = 0` the two ratio
/// features are undefined and reported as `None` for downstream imputation.
pub fn derived_features(
    initial: &SirState,
    params: &SirParams,
    traj: &SirTrajectory,
) -> SirFeatures {
    let (i0_s0_ratio, r0_s0_ratio) = if initial.s > 0.0 {
        (Some(initial.i / initial.s), Some(initial.r / initial.s))
    } else {
        (None, None)
    };
    SirFeatures {
        i0_s0_ratio,
        r0_s0_ratio,
        basic_reproduction_number: params.basic_reproduction_number(),
        effective_contact_rate: params.beta * initial.s,
        peak_infected: traj.peak_infected(),
        time_to_peak: traj.time_to_peak(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig4_state() -> SirState {
        SirState::new(0.82, 0.14, 0.04, 0.0).unwrap()
    }

    fn fig5_params() -> SirParams {
        SirParams::new(0.10, 0.03).unwrap()
    }

    #[test]
    fn euler_step_matches_hand_arithmetic() {
        let next = euler_step(&fig4_state(), &fig5_params(), 1.0).unwrap();
        assert!((next.s - 0.80852).abs() < 1e-12, "s = {}", next.s);
        assert!((next.i - 0.14728).abs() < 1e-12, "i = {}", next.i);
        assert!((next.r - 0.0442).abs() < 1e-12, "r = {}", next.r);
        assert!((next.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euler_step_all_susceptible_is_fixed_point() {
        let state = SirState::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let next = euler_step(&state, &fig5_params(), 1.0).unwrap();
        assert_eq!(next.s, 1.0);
        assert_eq!(next.i, 0.0);
        assert_eq!(next.r, 0.0);
    }

    #[test]
    fn euler_step_no_susceptibles_decays_exponentially() {
        let state = SirState::new(0.0, 0.5, 0.5, 0.0).unwrap();
        let params = SirParams::new(0.2, 0.1).unwrap();
        let next = euler_step(&state, &params, 1.0).unwrap();
        assert!((next.s - 0.0).abs() < 1e-15);
        assert!((next.i - 0.45).abs() < 1e-12);
        assert!((next.r - 0.55).abs() < 1e-12);
    }

    #[test]
    fn euler_step_rejects_bad_arguments() {
        assert!(euler_step(&fig4_state(), &fig5_params(), 0.0).is_err());
        assert!(euler_step(&fig4_state(), &fig5_params(), -1.0).is_err());
        let bad = SirState {
            s: 0.9,
            i: 0.9,
            r: -0.8,
            t: 0.0,
        };
        assert!(euler_step(&bad, &fig5_params(), 1.0).is_err());
    }

    #[test]
    fn simulate_length_and_conservation() {
        let traj = simulate(&fig4_state(), &fig5_params(), 0.01, 30.0).unwrap();
        assert_eq!(traj.states.len(), 3001);
        assert_eq!(traj.states[0], fig4_state());
        for state in &traj.states {
            assert!((state.s + state.i + state.r - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn simulate_rejects_bad_arguments() {
        assert!(simulate(&fig4_state(), &fig5_params(), 0.0, 10.0).is_err());
        assert!(simulate(&fig4_state(), &fig5_params(), 1.0, 0.0).is_err());
        assert!(simulate(&fig4_state(), &fig5_params(), 2.0, 1.0).is_err());
    }

    #[test]
    fn supercritical_infected_curve_rises_then_falls() {
        // beta/gamma = 3.33 > 1 with s0 = 0.82 above the 1/R0 threshold.
        let traj = simulate(&fig4_state(), &fig5_params(), 0.01, 90.0).unwrap();
        let i: Vec<f64> = traj.states.iter().map(|s| s.i).collect();
        let peak_idx = i
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(peak_idx > 0, "peak should be interior, not at t = 0");
        assert!(
            peak_idx < i.len() - 1,
            "peak should be reached within horizon"
        );
        assert!(i[peak_idx] > i[0]);
        assert!(*i.last().unwrap() < i[peak_idx]);
    }

    #[test]
    fn subcritical_infected_curve_is_nonincreasing() {
        let params = SirParams::new(0.0252, 0.03).unwrap();
        let traj = simulate(&fig4_state(), &params, 0.01, 90.0).unwrap();
        for w in traj.states.windows(2) {
            assert!(w[1].i <= w[0].i + 1e-12);
        }
    }

    #[test]
    fn validate_trajectory_zero_when_flat() {
        let state = SirState::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let traj = simulate(&state, &fig5_params(), 0.5, 5.0).unwrap();
        let report = validate_trajectory(&traj, &fig5_params()).unwrap();
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn validate_trajectory_residual_small_and_first_order() {
        let params = fig5_params();
        let fine = simulate(&fig4_state(), &params, 0.01, 30.0).unwrap();
        let report = validate_trajectory(&fine, &params).unwrap();
        assert!(
            report.max_residual <= 1e-3,
            "residual {}",
            report.max_residual
        );

        let coarse = simulate(&fig4_state(), &params, 0.02, 30.0).unwrap();
        let coarse_report = validate_trajectory(&coarse, &params).unwrap();
        let ratio = coarse_report.max_residual / report.max_residual;
        assert!(
            (2.0 / 1.5..=2.0 * 1.5).contains(&ratio),
            "halving dt should halve the residual within a factor 1.5, got {ratio}"
        );
    }

    #[test]
    fn validate_trajectory_needs_three_states() {
        let traj = SirTrajectory {
            states: vec![fig4_state(), fig4_state()],
            dt: 1.0,
        };
        assert!(validate_trajectory(&traj, &fig5_params()).is_err());
    }

    fn timeline(fw: usize, fw_neg: usize, reviewers: usize, comments: usize) -> ReviewTimeline {
        let mut entries = Vec::new();
        for k in 0..fw {
            entries.push((1.0, k < fw_neg));
        }
        ReviewTimeline::new(entries, reviewers, comments).unwrap()
    }

    #[test]
    fn initial_conditions_match_fig4_means() {
        let state = estimate_initial_conditions(&timeline(14, 4, 100, 200)).unwrap();
        assert!((state.s - 0.82).abs() < 1e-12);
        assert!((state.i - 0.14).abs() < 1e-12);
        assert!((state.r - 0.04).abs() < 1e-12);
        assert_eq!(state.t, 0.0);
    }

    #[test]
    fn initial_conditions_boundaries() {
        let quiet = ReviewTimeline::new(vec![(10.0, false)], 50, 60).unwrap();
        let state = estimate_initial_conditions(&quiet).unwrap();
        assert_eq!((state.s, state.i, state.r), (1.0, 0.0, 0.0));

        let loud = timeline(20, 0, 20, 40);
        let state = estimate_initial_conditions(&loud).unwrap();
        assert_eq!((state.s, state.i, state.r), (0.0, 1.0, 0.0));
    }

    #[test]
    fn initial_conditions_reject_inconsistent_counts() {
        let corrupt = timeline(10, 5, 10, 20);
        assert!(estimate_initial_conditions(&corrupt).is_err());
    }

    #[test]
    fn rates_match_paper_values() {
        let est = estimate_rates(&timeline(50, 15, 100, 500)).unwrap();
        assert!((est.params.beta - 0.10).abs() < 1e-12);
        assert!((est.params.gamma - 0.03).abs() < 1e-12);
        assert!(!est.gamma_floored);
        assert!((est.params.basic_reproduction_number() - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rates_floor_gamma_without_negatives() {
        let est = estimate_rates(&timeline(5, 0, 10, 50)).unwrap();
        assert_eq!(est.params.gamma, GAMMA_FLOOR);
        assert!(est.gamma_floored);
    }

    #[test]
    fn rates_beta_boundary() {
        // Every comment landed in the first week, one comment per reviewer.
        let est = estimate_rates(&timeline(10, 2, 10, 10)).unwrap();
        assert_eq!(est.params.beta, 1.0);
    }

    #[test]
    fn derived_features_match_ratio_arithmetic() {
        let initial = fig4_state();
        let params = fig5_params();
        let traj = simulate(&initial, &params, 0.01, 90.0).unwrap();
        let f = derived_features(&initial, &params, &traj);
        assert!((f.basic_reproduction_number - 10.0 / 3.0).abs() < 1e-9);
        assert!((f.effective_contact_rate - 0.082).abs() < 1e-12);
        assert!((f.i0_s0_ratio.unwrap() - 0.170732).abs() < 1e-6);
        assert!((f.r0_s0_ratio.unwrap() - 0.04 / 0.82).abs() < 1e-12);
        assert!(f.peak_infected >= initial.i);
        assert!(f.time_to_peak >= 0.0);
    }

    #[test]
    fn derived_features_undefined_when_no_susceptibles() {
        let initial = SirState::new(0.0, 0.6, 0.4, 0.0).unwrap();
        let params = SirParams::new(0.2, 0.1).unwrap();
        let traj = simulate(&initial, &params, 0.1, 10.0).unwrap();
        let f = derived_features(&initial, &params, &traj);
        assert!(f.i0_s0_ratio.is_none());
        assert!(f.r0_s0_ratio.is_none());
        assert_eq!(f.effective_contact_rate, 0.0);
    }

    #[test]
    fn comment_log_deduplicates_authors() {
        let log = vec![
            ("a", 1.0, false),
            ("a", 2.0, true),
            ("b", 9.0, true),
            ("c", -2.0, false),
        ];
        let tl = ReviewTimeline::from_comment_log(&log).unwrap();
        assert_eq!(tl.total_comments, 4);
        assert_eq!(tl.total_reviewers, 3);
        assert_eq!(tl.first_week_commenters(), 2); // a (day 1), c (clamped to 0)
        assert_eq!(tl.first_week_negatives(), 1); // a's day-2 negative
    }

    proptest! {
        #[test]
        fn conservation_and_monotonicity(
            s0 in 0.0f64..1.0,
            i_frac in 0.0f64..1.0,
            beta in 0.0f64..1.0,
            gamma in 1e-6f64..1.0,
            dt in 1e-4f64..0.1,
        ) {
            let i0 = (1.0 - s0) * i_frac;
            let r0 = 1.0 - s0 - i0;
            let initial = SirState::new(s0, i0, r0, 0.0).unwrap();
            let params = SirParams::new(beta, gamma).unwrap();
            let traj = simulate(&initial, &params, dt, 50.0 * dt).unwrap();
            for w in traj.states.windows(2) {
                prop_assert!((w[1].s + w[1].i + w[1].r - 1.0).abs() <= 1e-9);
                prop_assert!(w[1].s <= w[0].s + 1e-12, "s must not increase");
                prop_assert!(w[1].r >= w[0].r - 1e-12, "r must not decrease");
            }
        }

        #[test]
        fn threshold_sign_governs_initial_growth(
            s0 in 0.8f64..0.99,
            beta in 0.01f64..1.0,
            gamma in 0.01f64..1.0,
        ) {
            let i0 = (1.0 - s0) * 0.5;
            let r0 = 1.0 - s0 - i0;
            let initial = SirState::new(s0, i0, r0, 0.0).unwrap();
            let params = SirParams::new(beta, gamma).unwrap();
            let growth = beta * s0 - gamma;
            prop_assume!(growth.abs() > 1e-4);
            let next = euler_step(&initial, &params, 1e-3).unwrap();
            if growth > 0.0 {
                prop_assert!(next.i > initial.i);
            } else {
                prop_assert!(next.i < initial.i);
            }
        }

        #[test]
        fn estimators_are_pure(fw in 1usize..20, neg in 0usize..20, extra in 0usize..30) {
            let neg = neg.min(fw);
            // Keep i0 + r0 <= 1 so the estimator precondition holds.
            let reviewers = fw + neg + extra + 1;
            let comments = reviewers + extra;
            let tl = timeline(fw, neg, reviewers, comments);
            let a = estimate_initial_conditions(&tl).unwrap();
            let b = estimate_initial_conditions(&tl).unwrap();
            prop_assert_eq!(a, b);
            let ra = estimate_rates(&tl).unwrap();
            let rb = estimate_rates(&tl).unwrap();
            prop_assert_eq!(ra.params, rb.params);
        }
    }
}
