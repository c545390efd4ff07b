use proptest::prelude::*;
use rectwave::channels::{frequency_response, generate_channel, ChannelSpec};
use rectwave::multi_er::{
    cccp_linearize, constraint_violation, dcp_optimize, initial_point, ln_weighted_objective,
    penalized_objective, sampled_peak_ratio, saturation_system, CartesianPoint, DcpConfig,
    MultiErProblem,
};
use rectwave::qcqp::{solve, SolverOptions, SubproblemInstance};
use rectwave::rectenna::RectennaParams;
use rectwave::signals::FrequencyGrid;

const M: usize = 2;
const U: usize = 4;

fn problem(seed: u64, p_t: f64) -> MultiErProblem {
    let grid = FrequencyGrid::from_cycles(4, 62.5e3, U).unwrap();
    let mut spec = ChannelSpec::nlos(2, M, seed);
    spec.path_loss_db = vec![40.0, 35.0];
    let h = frequency_response(&generate_channel(&spec).unwrap(), &grid);
    let mut p = MultiErProblem::new(h, vec![0.4, 0.6], 2, p_t, RectennaParams::default()).unwrap();
    p.saturation_samples = 16;
    p
}

/// A point inside the power ball and the sampled breakdown limits.
fn feasible_point(prob: &MultiErProblem, raw: &[f64], fill: f64) -> CartesianPoint {
    let pt = CartesianPoint::from_vec(M, U, raw).unwrap();
    let power = pt.total_power();
    let pt = if power > 0.0 {
        pt.scaled((fill * prob.power_budget_w / power).sqrt())
    } else {
        pt
    };
    let peak = sampled_peak_ratio(&pt, prob, prob.saturation_samples).unwrap();
    if peak > 1.0 {
        pt.scaled(0.999 / peak)
    } else {
        pt
    }
}

/// `f1 = Psi / Psi_ref + mu sum_m KyFan_N(row energies)`.
fn convex_part(pt: &CartesianPoint, prob: &MultiErProblem, mu: f64, ln_ref: f64) -> f64 {
    penalized_objective(pt, prob, mu, ln_ref).unwrap() + mu * pt.total_power()
}

fn raw() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2 * M * U)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linearization_underestimates_convex_part(
        seed in 0u64..1000,
        a in raw(),
        b in raw(),
        fa in 0.01..1.0f64,
        fb in 0.01..1.0f64,
        mu in 0.0..5.0f64,
    ) {
        let prob = problem(seed, 10.0);
        let z0 = feasible_point(&prob, &a, fa);
        let z = feasible_point(&prob, &b, fb);
        let ln_ref = ln_weighted_objective(&z0, &prob).unwrap();
        let c = cccp_linearize(&z0, &prob, mu, ln_ref).unwrap();
        let step: f64 = c.iter().zip(z.to_vec().iter().zip(z0.to_vec())).map(|(ci, (x, y))| ci * (x - y)).sum();
        let lhs = convex_part(&z, &prob, mu, ln_ref);
        let rhs = convex_part(&z0, &prob, mu, ln_ref) + step;
        prop_assert!(lhs >= rhs - 1e-9 * lhs.abs().max(1.0), "{} < {}", lhs, rhs);
    }

    #[test]
    fn one_cccp_step_never_decreases_penalized_objective(
        seed in 0u64..1000,
        a in raw(),
        fill in 0.05..1.0f64,
        mu in 0.01..5.0f64,
    ) {
        let prob = problem(seed, 10.0);
        let z0 = feasible_point(&prob, &a, fill);
        let ln_ref = ln_weighted_objective(&z0, &prob).unwrap();
        let inst = SubproblemInstance {
            c: cccp_linearize(&z0, &prob, mu, ln_ref).unwrap(),
            mu,
            ball_radius_sq: prob.power_budget_w,
            halfspaces: saturation_system(&prob),
        };
        let z1 = CartesianPoint::from_vec(M, U, &solve(&inst, &SolverOptions::default()).unwrap().z).unwrap();
        let before = penalized_objective(&z0, &prob, mu, ln_ref).unwrap();
        let after = penalized_objective(&z1, &prob, mu, ln_ref).unwrap();
        prop_assert!(after >= before - 1e-9 * before.abs().max(1.0), "{} < {}", after, before);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dcp_output_respects_limits_on_a_denser_grid(seed in 0u64..1000, log_p in 0.0..2.5f64) {
        let mut prob = problem(seed, 10f64.powf(log_p));
        prob.saturation_samples = rectwave::multi_er::default_saturation_samples(prob.grid());
        let r = dcp_optimize(&prob, &DcpConfig::default(), &initial_point(&prob).unwrap()).unwrap();
        let q = prob.saturation_samples;
        let bound = rectwave::rectenna::breakdown_amplitude_limit(&prob.rectenna);
        prop_assert!(sampled_peak_ratio(&r.point, &prob, q).unwrap() <= 1.0 + 1e-8 / bound);
        prop_assert!(sampled_peak_ratio(&r.point, &prob, 16 * q).unwrap() < 1.02);
        prop_assert_eq!(constraint_violation(&r.point, prob.num_tones), 0.0);
        prop_assert!(r.point.total_power() <= prob.power_budget_w * (1.0 + 1e-8));
    }
}
