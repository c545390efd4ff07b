use proptest::prelude::*;
use rectwave::channels::{frequency_response, generate_channel, ChannelSpec};
use rectwave::quadrature::QuadratureConfig;
use rectwave::rectenna::RectennaParams;
use rectwave::signals::FrequencyGrid;
use rectwave::single_er::{
    allocation_psi, equal_allocation, frequency_mrt, scp_kkt_residual, scp_qclp,
    select_subcarriers, surrogate_objective, ScpConfig,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scp_ascends_and_ends_stationary(seed in 0u64..10_000, n in 1usize..6, log_p in -2.0..2.0f64) {
        let grid = FrequencyGrid::desk_scale();
        let p = RectennaParams::default();
        let q = QuadratureConfig::for_grid(&grid);
        let p_t = 10f64.powf(log_p);
        let ch = frequency_response(&generate_channel(&ChannelSpec::nlos(1, 2, seed)).unwrap(), &grid)
            .receiver(0)
            .unwrap();
        let sel = select_subcarriers(&ch.effective_gain(), n);
        let init = equal_allocation(&sel, p_t);
        let cfg = ScpConfig { eps: 0.0, max_iter: 20_000 };
        let (alloc, trace) = scp_qclp(&grid, &sel, &init, &p, &q, &cfg).unwrap();
        prop_assert!(trace.is_monotone(1e-12));
        prop_assert!((alloc.power() - p_t).abs() <= 1e-9 * p_t);
        let start = allocation_psi(&grid, &sel, &init, &p, &q).unwrap().ln;
        let end = allocation_psi(&grid, &sel, &alloc, &p, &q).unwrap().ln;
        prop_assert!(end >= start - 1e-12);
        let last = trace.delta.last().copied().unwrap_or(0.0);
        let ulp = f64::EPSILON * trace.ln_beta0.last().unwrap().abs().max(1.0);
        prop_assert!(trace.converged || last <= 4.0 * ulp, "last step {}", last);
        prop_assert!(scp_kkt_residual(&grid, &sel, &alloc, &p, &q).unwrap() < 1e-6);
    }

    #[test]
    fn frequency_mrt_beats_feasible_allocations(
        gains in prop::collection::vec(0.0..1.0f64, 8),
        x in prop::collection::vec(0.0..1.0f64, 8),
        n in 1usize..9,
    ) {
        let sel = select_subcarriers(&gains, n);
        let best = surrogate_objective(&sel.masked_gains, &frequency_mrt(&sel, 1.0).unwrap().x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 0.0);
        let scaled: Vec<f64> = x.iter().map(|v| v / norm).collect();
        prop_assert!(surrogate_objective(&sel.masked_gains, &scaled) <= best + 1e-12);
    }
}
