//! Random parameter and state generation for numerical studies.
//!
//! All samplers rejection-sample until the requested structural conditions
//! hold, so downstream code can rely on them without re-checking.

use nalgebra::Matrix2;
use rand::Rng;

use crate::analysis::check_assumptions;
use crate::model::{FullParams, FullState};

/// Draw a parameter set satisfying the sign conditions and the prey-free
/// predator extinction assumption.
pub fn sample_params_assumptions<R: Rng + ?Sized>(rng: &mut R) -> FullParams {
    loop {
        let mu_n = rng.random_range(0.2..2.0);
        let beta_n = mu_n + rng.random_range(0.1..3.0);
        let delta = 10f64.powf(rng.random_range(-3.0..-1.0));
        let kappa = 10f64.powf(rng.random_range(-2.0..0.0));
        let rho = 10f64.powf(rng.random_range(-1.0..0.5));
        let gamma = rng.random_range(0.5..5.0);
        let mu_p = rng.random_range(0.2..2.0);
        let beta_p = mu_p + rng.random_range(0.1..2.0);
        let eta = (beta_p - mu_p) + rng.random_range(0.5..5.0);
        let p = match FullParams::new(beta_n, mu_n, delta, kappa, rho, gamma, mu_p, eta, beta_p) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let r = check_assumptions(&p);
        if r.a21_holds && r.a22_holds {
            return p;
        }
    }
}

/// Draw a parameter set that additionally admits the interior equilibrium.
pub fn sample_params_interior<R: Rng + ?Sized>(rng: &mut R) -> FullParams {
    loop {
        let p = sample_params_assumptions(rng);
        if check_assumptions(&p).interior_exists {
            return p;
        }
    }
}

/// Draw a parameter set with a stable prey-only equilibrium E2 whose slowest
/// predator decay rate is at least `min_rate` (1/year).
///
/// The extinction theorem gives no rate; near the stability boundary the
/// approach to E2 is arbitrarily slow, so finite-horizon checks need a
/// spectral margin on the E2 predator block.
pub fn sample_params_extinction<R: Rng + ?Sized>(rng: &mut R, min_rate: f64) -> FullParams {
    loop {
        let p = sample_params_assumptions(rng);
        let r = check_assumptions(&p);
        if !r.e2_stable {
            continue;
        }
        if e2_predator_decay_rate(&p) >= min_rate {
            return p;
        }
    }
}

/// Slowest decay rate of the predator block of the Jacobian at E2 (positive
/// when E2 is stable).
pub fn e2_predator_decay_rate(p: &FullParams) -> f64 {
    let rkn = p.rho * p.kappa * p.prey_capacity();
    let m = Matrix2::new(
        -(p.mu_p + p.eta) - rkn,
        p.gamma,
        rkn + p.beta_p,
        p.beta_p - p.mu_p - p.gamma,
    );
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        -(0.5 * (tr + disc.sqrt()))
    } else {
        -(0.5 * tr)
    }
}

/// Draw an interior state, log-uniform around the prey capacity scale.
pub fn sample_interior_state<R: Rng + ?Sized>(rng: &mut R, p: &FullParams) -> FullState {
    let n_hat = p.prey_capacity();
    FullState {
        n: n_hat * 10f64.powf(rng.random_range(-2.0..0.3)),
        p_s: n_hat * 10f64.powf(rng.random_range(-3.0..-0.5)),
        p_h: n_hat * 10f64.powf(rng.random_range(-3.0..-0.5)),
    }
}
