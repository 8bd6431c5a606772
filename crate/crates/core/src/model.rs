//! Parameter and state records for the predator-prey models, their vector
//! fields, and the Jacobian of the full model.
//!
//! Two parameterizations of prey self-limitation coexist in the literature on
//! this model family: a quadratic crowding term `-delta * N^2` in the full
//! three-compartment model, and a carrying capacity `K` in the reduced
//! (Rosenzweig-MacArthur) form. [`FullParams`] carries `delta`, and
//! [`ReducedParams`] carries `K`; [`convert_logistic`] is the single bridge
//! between the two. Keeping the names apart prevents silent unit bugs.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate constants of the full model with searching (`P_S`) and handling
/// (`P_H`) predators, plus the optional consumption/transition exponents.
///
/// Units: rates in 1/year, `delta` in 1/(year * individual), `kappa` in
/// 1/(year * individual); `rho`, `l`, `m` dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullParams {
    /// Prey birth rate.
    pub beta_n: f64,
    /// Prey death rate.
    pub mu_n: f64,
    /// Quadratic crowding coefficient of the prey logistic term.
    pub delta: f64,
    /// Predation encounter coefficient.
    pub kappa: f64,
    /// Conversion factor searching -> handling (scales `kappa`).
    pub rho: f64,
    /// Handling -> searching return rate.
    pub gamma: f64,
    /// Predator death rate.
    pub mu_p: f64,
    /// Extra mortality of searching predators.
    pub eta: f64,
    /// Predator birth rate.
    pub beta_p: f64,
    /// Prey-consumption exponent (default 1).
    pub l: f64,
    /// State-transition exponent (default 1).
    pub m: f64,
}

impl FullParams {
    /// Build a parameter record with unit exponents, validating positivity.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta_n: f64,
        mu_n: f64,
        delta: f64,
        kappa: f64,
        rho: f64,
        gamma: f64,
        mu_p: f64,
        eta: f64,
        beta_p: f64,
    ) -> Result<Self> {
        let p = FullParams {
            beta_n,
            mu_n,
            delta,
            kappa,
            rho,
            gamma,
            mu_p,
            eta,
            beta_p,
            l: 1.0,
            m: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Replace the exponents, revalidating `l >= 1`, `m >= 1`.
    pub fn with_exponents(mut self, l: f64, m: f64) -> Result<Self> {
        self.l = l;
        self.m = m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("beta_n", self.beta_n),
            ("mu_n", self.mu_n),
            ("delta", self.delta),
            ("kappa", self.kappa),
            ("rho", self.rho),
            ("gamma", self.gamma),
            ("mu_p", self.mu_p),
            ("eta", self.eta),
            ("beta_p", self.beta_p),
        ];
        for (name, v) in rates {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be strictly positive, got {v}")));
            }
        }
        if !(self.l >= 1.0) {
            return Err(Error::invalid("l", format!("exponent must be >= 1, got {}", self.l)));
        }
        if !(self.m >= 1.0) {
            return Err(Error::invalid("m", format!("exponent must be >= 1, got {}", self.m)));
        }
        Ok(())
    }

    pub fn has_unit_exponents(&self) -> bool {
        self.l == 1.0 && self.m == 1.0
    }

    /// Prey level where logistic growth vanishes: `(beta_n - mu_n) / delta`.
    pub fn prey_capacity(&self) -> f64 {
        (self.beta_n - self.mu_n) / self.delta
    }

    /// Right-hand side of the full model, defined for any real state.
    ///
    /// Runge-Kutta stages may probe slightly negative states, so the power
    /// terms clamp `N` at zero for non-unit exponents instead of producing
    /// NaN. On the closed positive orthant this is exactly the model.
    pub fn vector_field(&self, y: &[f64; 3]) -> [f64; 3] {
        let [n, p_s, p_h] = *y;
        let n_l = pow_clamped(n, self.l);
        let n_m = pow_clamped(n, self.m);
        let transfer = self.rho * self.kappa * n_m * p_s;
        [
            (self.beta_n - self.mu_n) * n - self.delta * n * n - self.kappa * n_l * p_s,
            -(self.mu_p + self.eta) * p_s - transfer + self.gamma * p_h,
            -self.mu_p * p_h + transfer - self.gamma * p_h + self.beta_p * (p_s + p_h),
        ]
    }
}

/// `n^e` with clamping at zero so stage probes below the orthant stay finite;
/// the `e == 1` branch keeps the base model exactly linear in `n`.
fn pow_clamped(n: f64, e: f64) -> f64 {
    if e == 1.0 {
        n
    } else {
        n.max(0.0).powf(e)
    }
}

/// State of the full model: prey and the two predator compartments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub n: f64,
    pub p_s: f64,
    pub p_h: f64,
}

impl FullState {
    pub fn new(n: f64, p_s: f64, p_h: f64) -> Result<Self> {
        for (name, v) in [("n", n), ("p_s", p_s), ("p_h", p_h)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be nonnegative, got {v}")));
            }
        }
        Ok(FullState { n, p_s, p_h })
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.n, self.p_s, self.p_h]
    }

    pub fn from_array(y: [f64; 3]) -> Self {
        FullState { n: y[0], p_s: y[1], p_h: y[2] }
    }

    /// Total predators `P_S + P_H`.
    pub fn predators(&self) -> f64 {
        self.p_s + self.p_h
    }
}

/// Rate constants of the reduced (Rosenzweig-MacArthur form) model with
/// carrying-capacity parameterization and Holling-type saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub beta_n: f64,
    pub mu_n: f64,
    pub beta_p: f64,
    pub mu_p: f64,
    pub eta: f64,
    /// Prey carrying capacity (individuals).
    pub k: f64,
    /// Predation coefficient.
    pub kappa: f64,
    /// Handling-time factor: under the fast-exchange scaling `rho = chi/eps`
    /// and `gamma = 1/eps`.
    pub chi: f64,
    pub l: f64,
    pub m: f64,
}

impl ReducedParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta_n: f64,
        mu_n: f64,
        beta_p: f64,
        mu_p: f64,
        eta: f64,
        k: f64,
        kappa: f64,
        chi: f64,
    ) -> Result<Self> {
        let p = ReducedParams {
            beta_n,
            mu_n,
            beta_p,
            mu_p,
            eta,
            k,
            kappa,
            chi,
            l: 1.0,
            m: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_exponents(mut self, l: f64, m: f64) -> Result<Self> {
        self.l = l;
        self.m = m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("beta_n", self.beta_n),
            ("mu_n", self.mu_n),
            ("beta_p", self.beta_p),
            ("mu_p", self.mu_p),
            ("eta", self.eta),
            ("k", self.k),
            ("kappa", self.kappa),
            ("chi", self.chi),
        ];
        for (name, v) in rates {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be strictly positive, got {v}")));
            }
        }
        if self.beta_n <= self.mu_n {
            return Err(Error::invalid("beta_n", "requires beta_n > mu_n"));
        }
        if self.beta_p <= self.mu_p {
            return Err(Error::invalid("beta_p", "requires beta_p > mu_p"));
        }
        if self.beta_p - self.mu_p - self.eta >= 0.0 {
            return Err(Error::invalid("eta", "requires beta_p - mu_p - eta < 0"));
        }
        if !(self.l >= 1.0) || !(self.m >= 1.0) {
            return Err(Error::invalid("l", "exponents must be >= 1"));
        }
        Ok(())
    }

    /// Right-hand side of the reduced model, defined for any real state.
    pub fn vector_field(&self, y: &[f64; 2]) -> [f64; 2] {
        let [n, p] = *y;
        let n_l = pow_clamped(n, self.l);
        let n_m = pow_clamped(n, self.m);
        let sat = 1.0 + self.chi * self.kappa * n_m;
        [
            (self.beta_n - self.mu_n) * n * (1.0 - n / self.k) - self.kappa * n_l * p / sat,
            (self.beta_p - self.mu_p - self.eta) * p
                + self.eta * self.chi * self.kappa * n_m * p / sat,
        ]
    }

    /// Embed into [`FullParams`] for the fast-exchange system at scale
    /// `epsilon`: `rho = chi/epsilon`, `gamma = 1/epsilon`, quadratic
    /// crowding from [`convert_logistic`].
    pub fn embed_full(&self, epsilon: f64) -> Result<FullParams> {
        let (rho, gamma) = epsilon_embed(self.chi, epsilon)?;
        let delta = convert_logistic(self.beta_n, self.mu_n, self.k)?;
        FullParams::new(
            self.beta_n,
            self.mu_n,
            delta,
            self.kappa,
            rho,
            gamma,
            self.mu_p,
            self.eta,
            self.beta_p,
        )?
        .with_exponents(self.l, self.m)
    }
}

/// State of the reduced model: prey and total predators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub n: f64,
    pub p: f64,
}

impl ReducedState {
    pub fn new(n: f64, p: f64) -> Result<Self> {
        for (name, v) in [("n", n), ("p", p)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be nonnegative, got {v}")));
            }
        }
        Ok(ReducedState { n, p })
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.n, self.p]
    }
}

/// Time derivative of the full model at a valid state.
pub fn rhs_full(p: &FullParams, s: &FullState) -> [f64; 3] {
    p.vector_field(&s.to_array())
}

/// Time derivative of the reduced model at a valid state.
pub fn rhs_reduced(p: &ReducedParams, s: &ReducedState) -> [f64; 2] {
    p.vector_field(&s.to_array())
}

/// Entrywise partial derivatives of [`rhs_full`] with respect to the state.
///
/// Rows are (N', P_S', P_H'), columns are (N, P_S, P_H).
pub fn jacobian_full(p: &FullParams, s: &FullState) -> Matrix3<f64> {
    let n = s.n;
    let p_s = s.p_s;
    let n_l = pow_clamped(n, p.l);
    let n_m = pow_clamped(n, p.m);
    // d(n^e)/dn, with the unit-exponent branch exact at n = 0.
    let dn_l = if p.l == 1.0 { 1.0 } else { p.l * pow_clamped(n, p.l - 1.0) };
    let dn_m = if p.m == 1.0 { 1.0 } else { p.m * pow_clamped(n, p.m - 1.0) };

    Matrix3::new(
        (p.beta_n - p.mu_n) - 2.0 * p.delta * n - p.kappa * dn_l * p_s,
        -p.kappa * n_l,
        0.0,
        -p.rho * p.kappa * dn_m * p_s,
        -(p.mu_p + p.eta) - p.rho * p.kappa * n_m,
        p.gamma,
        p.rho * p.kappa * dn_m * p_s,
        p.rho * p.kappa * n_m + p.beta_p,
        p.beta_p - p.mu_p - p.gamma,
    )
}

/// Map the fast-exchange scale to the full-model rates:
/// `rho = chi/epsilon`, `gamma = 1/epsilon`.
pub fn epsilon_embed(chi: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(chi > 0.0) || !chi.is_finite() {
        return Err(Error::invalid("chi", format!("must be strictly positive, got {chi}")));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(
            "epsilon",
            format!("must be strictly positive, got {epsilon}"),
        ));
    }
    Ok((chi / epsilon, 1.0 / epsilon))
}

/// Quadratic crowding coefficient matching a carrying capacity:
/// `delta = (beta_n - mu_n) / k`, so that
/// `(beta_n - mu_n) * N - delta * N^2 = (beta_n - mu_n) * N * (1 - N/k)`.
pub fn convert_logistic(beta_n: f64, mu_n: f64, k: f64) -> Result<f64> {
    if beta_n <= mu_n {
        return Err(Error::invalid(
            "beta_n",
            format!("requires beta_n > mu_n, got beta_n = {beta_n}, mu_n = {mu_n}"),
        ));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid("k", format!("must be strictly positive, got {k}")));
    }
    Ok((beta_n - mu_n) / k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Canonical parameter set used throughout the test suite.
    pub(crate) fn canonical() -> FullParams {
        FullParams::new(2.0, 1.0, 0.01, 0.2, 0.5, 2.0, 1.0, 3.0, 1.5).unwrap()
    }

    #[test]
    fn rhs_full_vanishes_at_origin() {
        let p = canonical();
        let d = rhs_full(&p, &FullState::new(0.0, 0.0, 0.0).unwrap());
        assert_eq!(d, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn rhs_full_vanishes_at_interior_equilibrium() {
        // (60, 2, 10) solves the equilibrium system for the canonical set;
        // cross-checked by the Newton oracle in the analysis tests.
        let p = canonical();
        let d = rhs_full(&p, &FullState::new(60.0, 2.0, 10.0).unwrap());
        for c in d {
            assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rhs_full_vanishes_at_prey_capacity() {
        let p = canonical();
        assert_eq!(p.prey_capacity(), 100.0);
        let d = rhs_full(&p, &FullState::new(100.0, 0.0, 0.0).unwrap());
        assert_eq!(d, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn predator_bookkeeping_identity() {
        // (P_S' + P_H') = (beta_p - mu_p)(P_S + P_H) - eta * P_S exactly.
        let p = canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = FullState::new(
                rng.random_range(0.0..500.0),
                rng.random_range(0.0..50.0),
                rng.random_range(0.0..50.0),
            )
            .unwrap();
            let d = rhs_full(&p, &s);
            let lhs = d[1] + d[2];
            let rhs = (p.beta_p - p.mu_p) * s.predators() - p.eta * s.p_s;
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn orthant_faces_point_inward() {
        let p = canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = rng.random_range(0.0..100.0);
            let b = rng.random_range(0.0..100.0);
            // N = 0 face: N' = 0 identically.
            let d = p.vector_field(&[0.0, a, b]);
            assert_eq!(d[0], 0.0);
            // P_S = 0 face: P_S' = gamma * P_H >= 0.
            let d = p.vector_field(&[a, 0.0, b]);
            assert!(d[1] >= 0.0);
            assert_eq!(d[1], p.gamma * b);
            // P_H = 0 face: P_H' = transfer + births >= 0.
            let d = p.vector_field(&[a, b, 0.0]);
            assert!(d[2] >= 0.0);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let p = FullParams::new(
                rng.random_range(0.5..3.0),
                rng.random_range(0.1..0.4),
                rng.random_range(0.001..0.1),
                rng.random_range(0.01..1.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.5..4.0),
                rng.random_range(0.1..2.0),
                rng.random_range(0.5..5.0),
                rng.random_range(0.1..3.0),
            )
            .unwrap();
            let s = FullState::new(
                rng.random_range(1.0..200.0),
                rng.random_range(0.1..20.0),
                rng.random_range(0.1..20.0),
            )
            .unwrap();
            let j = jacobian_full(&p, &s);
            let fd = finite_difference_jacobian(&p, &s.to_array());
            for r in 0..3 {
                for c in 0..3 {
                    assert_relative_eq!(
                        j[(r, c)],
                        fd[r][c],
                        max_relative = 1e-6,
                        epsilon = 1e-8
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_generalized_exponents_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = canonical().with_exponents(2.0, 1.5).unwrap();
        for _ in 0..50 {
            let s = FullState::new(
                rng.random_range(0.5..50.0),
                rng.random_range(0.1..10.0),
                rng.random_range(0.1..10.0),
            )
            .unwrap();
            let j = jacobian_full(&p, &s);
            let fd = finite_difference_jacobian(&p, &s.to_array());
            for r in 0..3 {
                for c in 0..3 {
                    assert_relative_eq!(j[(r, c)], fd[r][c], max_relative = 1e-5, epsilon = 1e-7);
                }
            }
        }
    }

    /// Central-difference Jacobian oracle with step scaled per component.
    fn finite_difference_jacobian(p: &FullParams, y: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for c in 0..3 {
            let h = 1e-6 * y[c].abs().max(1.0);
            let mut hi = *y;
            let mut lo = *y;
            hi[c] += h;
            lo[c] -= h;
            let fhi = p.vector_field(&hi);
            let flo = p.vector_field(&lo);
            for r in 0..3 {
                out[r][c] = (fhi[r] - flo[r]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn jacobian_at_origin_is_block_with_prey_growth() {
        let p = canonical();
        let j = jacobian_full(&p, &FullState::new(0.0, 0.0, 0.0).unwrap());
        assert_eq!(j[(0, 0)], p.beta_n - p.mu_n);
        assert_eq!(j[(0, 1)], 0.0);
        assert_eq!(j[(1, 0)], 0.0);
        assert_eq!(j[(2, 0)], 0.0);
        // Lower-right block is the prey-free predator matrix.
        assert_eq!(j[(1, 1)], -(p.mu_p + p.eta));
        assert_eq!(j[(1, 2)], p.gamma);
        assert_eq!(j[(2, 1)], p.beta_p);
        assert_eq!(j[(2, 2)], p.beta_p - p.mu_p - p.gamma);
    }

    #[test]
    fn epsilon_embed_examples() {
        assert_eq!(epsilon_embed(0.11, 1e-4).unwrap(), (1100.0, 10000.0));
        assert_eq!(epsilon_embed(1.0, 1.0).unwrap(), (1.0, 1.0));
        let (rho, gamma) = epsilon_embed(0.11, 5e-3).unwrap();
        assert_relative_eq!(rho, 22.0, max_relative = 1e-14);
        assert_relative_eq!(gamma, 200.0, max_relative = 1e-14);
        assert!(epsilon_embed(0.0, 1.0).is_err());
        assert!(epsilon_embed(1.0, -0.5).is_err());
    }

    #[test]
    fn convert_logistic_examples() {
        assert_eq!(convert_logistic(2.0, 1.0, 100.0).unwrap(), 0.01);
        let d = convert_logistic(1.6567, 1.0, 303000.0).unwrap();
        assert_relative_eq!(d, 0.6567 / 303000.0, max_relative = 1e-15);
        assert!(convert_logistic(1.0, 1.0, 100.0).is_err());
    }

    #[test]
    fn embedded_full_system_is_the_scaled_system() {
        // rhs of the eps-scaled system and rhs_full with embedded rates are
        // the same function; spot-check on random states.
        let rp = ReducedParams::new(1.6567, 1.0, 8.5127, 1.0 / 7.0, 9.24, 303_000.0, 3.2e-5, 0.11)
            .unwrap();
        let eps = 5e-3;
        let fp = rp.embed_full(eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let y = [
                rng.random_range(0.0..3e5),
                rng.random_range(0.0..1e4),
                rng.random_range(0.0..1e4),
            ];
            let d = fp.vector_field(&y);
            let scaled = scaled_system_rhs(&rp, eps, &y);
            for c in 0..3 {
                assert_relative_eq!(d[c], scaled[c], max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    /// The fast-exchange system written out with explicit 1/eps terms.
    fn scaled_system_rhs(rp: &ReducedParams, eps: f64, y: &[f64; 3]) -> [f64; 3] {
        let [n, p_s, p_h] = *y;
        let r = rp.beta_n - rp.mu_n;
        [
            r * n * (1.0 - n / rp.k) - rp.kappa * n * p_s,
            -(rp.mu_p + rp.eta) * p_s - rp.chi / eps * rp.kappa * n * p_s + p_h / eps,
            -rp.mu_p * p_h + rp.chi / eps * rp.kappa * n * p_s - p_h / eps
                + rp.beta_p * (p_s + p_h),
        ]
    }

    #[test]
    fn reduced_rhs_at_carrying_capacity_with_no_predators() {
        let rp = ReducedParams::new(1.6567, 1.0, 8.5127, 1.0 / 7.0, 9.24, 303_000.0, 3.2e-5, 0.11)
            .unwrap();
        let d = rhs_reduced(&rp, &ReducedState::new(303_000.0, 0.0).unwrap());
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-9);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn reduced_rhs_origin_fixed_and_nullcline() {
        let rp = ReducedParams::new(2.0, 1.0, 1.5, 1.0, 3.0, 100.0, 0.2, 0.25).unwrap();
        assert_eq!(rhs_reduced(&rp, &ReducedState::new(0.0, 0.0).unwrap()), [0.0, 0.0]);

        // Predator nullcline by construction: pick n so that
        // eta*chi*kappa*n/(1 + chi*kappa*n) = mu_p + eta - beta_p.
        let target = rp.mu_p + rp.eta - rp.beta_p;
        let x = target / (rp.eta - target); // chi*kappa*n
        let n = x / (rp.chi * rp.kappa);
        let d = rhs_reduced(&rp, &ReducedState::new(n, 17.0).unwrap());
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(FullParams::new(2.0, 1.0, 0.0, 0.2, 0.5, 2.0, 1.0, 3.0, 1.5).is_err());
        assert!(FullParams::new(2.0, 1.0, 0.01, -0.2, 0.5, 2.0, 1.0, 3.0, 1.5).is_err());
        assert!(canonical().with_exponents(0.5, 1.0).is_err());
        assert!(FullState::new(-1.0, 0.0, 0.0).is_err());
        // Reduced invariants include the sign conditions on net rates.
        assert!(ReducedParams::new(1.0, 1.0, 1.5, 1.0, 3.0, 100.0, 0.2, 0.25).is_err());
        assert!(ReducedParams::new(2.0, 1.0, 1.5, 1.0, 0.4, 100.0, 0.2, 0.25).is_err());
    }
}
