//! Sweep-derived example checks that sit outside the acceptance criteria:
//! per-operation bands measured over dedicated parameter ranges.

use helix_core::construct::{best_branching, scaling_terms, ScalingParams};
use helix_core::energy::{energy, EnergyKind};
use helix_core::field::{curl_residual, GridSpec};
use helix_core::geom::Rect;

#[test]
fn branching_band_at_half_theta_over_two_decades() {
    // theta = 1/2, sigma spanning [1e-4, 1e-2]: the measured energy over the
    // branching-regime term stays within a band of factor 20
    let theta = 0.5;
    let g = GridSpec::unit(2048).unwrap();
    let mut ratios = Vec::new();
    for k in 0..5 {
        let sigma = 1e-4 * (100.0f64).powf(k as f64 / 4.0);
        let p = ScalingParams::new(sigma, theta, sigma / 10.0).unwrap();
        let c = best_branching(&p, &g).unwrap();
        // gradient family: discretely curl-free
        assert!(curl_residual(&c.field, &c.measure).unwrap() <= 1e-10);
        let e = energy(EnergyKind::E1, &c.field, sigma, &Rect::unit()).unwrap();
        let denom = scaling_terms(&p)[1];
        ratios.push(e.total / denom);
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
    assert!(
        hi / lo <= 20.0,
        "band factor {} over [{lo}, {hi}] (ratios {ratios:?})",
        hi / lo
    );
}
