use std::f64::consts::TAU;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_saturation, ln_weighted_objective, CartesianPoint, MultiErProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSearchResult {
    pub best: CartesianPoint,
    /// `ln sum_k theta_k Psi_k` of the best draw.
    pub best_objective_ln: f64,
    pub best_draw: u64,
    pub draws: u64,
}

/// Draw `i` uses ChaCha20 stream `i` under `seed`, so results do not depend
/// on the thread count.
fn draw(prob: &MultiErProblem, seed: u64, i: u64) -> CartesianPoint {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(i);
    let (m_count, u_count) = (prob.num_antennas(), prob.num_subcarriers());
    let mut pt = CartesianPoint::zeros(m_count, u_count);
    for m in 0..m_count {
        for u in sample(&mut rng, u_count, prob.num_tones).into_iter() {
            let a: f64 = rng.gen();
            let phi: f64 = rng.gen::<f64>() * TAU;
            pt.sbar[m * u_count + u] = a * phi.cos();
            pt.shat[m * u_count + u] = a * phi.sin();
        }
    }
    let power = pt.total_power();
    let pt = if power > 0.0 {
        pt.scaled((prob.power_budget_w / power).sqrt())
    } else {
        pt
    };
    fit_saturation(&pt, prob)
}

/// Best of `draws` random feasible waveforms: `N` random tones per antenna,
/// uniform amplitudes and phases, full budget, scaled into the breakdown
/// limits. Ties go to the lower draw index.
pub fn random_search(prob: &MultiErProblem, draws: u64, seed: u64) -> Result<RandomSearchResult> {
    prob.validate()?;
    if draws == 0 {
        return Err(Error::InvalidParameter(
            "at least one draw is required".into(),
        ));
    }
    let (best_draw, best_objective_ln) = (0..draws)
        .into_par_iter()
        .map(|i| ln_weighted_objective(&draw(prob, seed, i), prob).map(|v| (i, v)))
        .try_reduce(
            || (u64::MAX, f64::NEG_INFINITY),
            |a, b| {
                Ok(match a.1.total_cmp(&b.1) {
                    std::cmp::Ordering::Less => b,
                    std::cmp::Ordering::Greater => a,
                    std::cmp::Ordering::Equal => {
                        if a.0 <= b.0 {
                            a
                        } else {
                            b
                        }
                    }
                })
            },
        )?;
    Ok(RandomSearchResult {
        best: draw(prob, seed, best_draw),
        best_objective_ln,
        best_draw,
        draws,
    })
}
