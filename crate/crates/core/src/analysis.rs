//! Equilibria, assumption checks, and stability machinery for the full model.
//!
//! Everything here is closed-form except two scalar root-finds: the decay
//! rate `lambda_star` of the prey-free predator subsystem (bisection on a
//! monotone function) and nothing else. Eigenvalues of the 3x3 Jacobian come
//! from a Schur decomposition and are used both for reporting and as the
//! numeric cross-check of the Routh-Hurwitz closed forms.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{jacobian_full, rhs_full, FullParams, FullState};

/// Eigenvalues with `|Re| <= STABILITY_MARGIN` classify as marginal instead of
/// forcing a binary verdict; avoids flapping at bifurcation boundaries.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Absolute bisection tolerance for `lambda_star`.
pub const LAMBDA_STAR_TOL: f64 = 1e-12;

/// Outcome of evaluating the structural inequalities on a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionReport {
    /// Sign conditions on the net rates: `beta_n > mu_n`, `beta_p > mu_p`,
    /// `beta_p - mu_p - eta < 0` (positivity is enforced at construction).
    pub a21_holds: bool,
    /// Prey-free predator extinction: `det M > 0` for the subsystem matrix.
    pub a22_holds: bool,
    /// Existence of the unique interior equilibrium.
    pub interior_exists: bool,
    /// Local stability of the prey-only equilibrium E2 (`b > 0`).
    pub e2_stable: bool,
    /// The closed-form interior stability inequality. This is the `p2 > 0`
    /// part of the Routh-Hurwitz test; see [`routh_hurwitz_interior`] for the
    /// full verdict.
    pub interior_stable: bool,
}

/// Evaluate each structural inequality exactly as written.
pub fn check_assumptions(p: &FullParams) -> AssumptionReport {
    let bn = p.beta_n - p.mu_n;
    let bp = p.beta_p - p.mu_p;
    let bpe = p.beta_p - p.mu_p - p.eta;

    let a21_holds = bn > 0.0 && bp > 0.0 && bpe < 0.0;
    // (beta_p - mu_p - gamma) < -beta_p*gamma/(mu_p + eta)
    let a22_holds = p.beta_p - p.mu_p - p.gamma < -p.beta_p * p.gamma / (p.mu_p + p.eta);

    // Interior existence:
    // (beta_n-mu_n)(beta_p-mu_p)*kappa*rho + delta(beta_p-mu_p)(mu_p+eta)
    //   > -delta*gamma*(beta_p-mu_p-eta)
    let lhs = bn * bp * p.kappa * p.rho + p.delta * bp * (p.mu_p + p.eta);
    let rhs = -p.delta * p.gamma * bpe;
    let interior_exists = lhs > rhs;

    let e2_stable = e2_quadratic_b(p) > 0.0;

    // Interior stability closed form:
    // (beta_p-mu_p)[kappa*rho(beta_n-mu_n) + delta(eta+gamma)]
    //   < delta[2*gamma*eta - beta_p(beta_p-mu_p)]
    let lhs = bp * (p.kappa * p.rho * bn + p.delta * (p.eta + p.gamma));
    let rhs = p.delta * (2.0 * p.gamma * p.eta - p.beta_p * bp);
    let interior_stable = lhs < rhs;

    AssumptionReport {
        a21_holds,
        a22_holds,
        interior_exists,
        e2_stable,
        interior_stable,
    }
}

/// Constant term `b` of the quadratic factor of the characteristic equation
/// at E2; E2 is stable iff `b > 0` (the linear coefficient is positive under
/// the standing assumptions).
fn e2_quadratic_b(p: &FullParams) -> f64 {
    let n_hat = p.prey_capacity();
    let rkn = p.rho * p.kappa * n_hat;
    (p.mu_p + p.gamma - p.beta_p) * (p.mu_p + p.eta + rkn) - p.gamma * (rkn + p.beta_p)
}

/// Local classification of an equilibrium by the sign of the spectral bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Unstable,
    Marginal,
}

/// Eigenvalues of a 3x3 real matrix, sorted by descending real part.
pub fn eigenvalues3(m: &Matrix3<f64>) -> [Complex<f64>; 3] {
    let v = m.complex_eigenvalues();
    let mut out = [v[0], v[1], v[2]];
    out.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
    out
}

/// Largest real part of a spectrum.
pub fn spectral_bound(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Classify by the spectral bound with the marginal band.
pub fn classify(eigs: &[Complex<f64>]) -> Classification {
    let s = spectral_bound(eigs);
    if s > STABILITY_MARGIN {
        Classification::Unstable
    } else if s < -STABILITY_MARGIN {
        Classification::Stable
    } else {
        Classification::Marginal
    }
}

/// One equilibrium with its spectrum and classification.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumInfo {
    pub state: FullState,
    pub eigenvalues: [Complex<f64>; 3],
    pub classification: Classification,
}

/// The boundary equilibria E1 (extinction) and E2 (prey only), plus the
/// interior equilibrium E* when the existence inequality holds.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumReport {
    pub e1: EquilibriumInfo,
    pub e2: EquilibriumInfo,
    pub e_star: Option<EquilibriumInfo>,
}

fn info_at(p: &FullParams, state: FullState) -> EquilibriumInfo {
    let eigenvalues = eigenvalues3(&jacobian_full(p, &state));
    EquilibriumInfo {
        state,
        eigenvalues,
        classification: classify(&eigenvalues),
    }
}

/// Closed-form interior equilibrium `(N*, P_S*, P_H*)`. Only meaningful when
/// the existence inequality holds; all three components are then positive.
pub fn interior_equilibrium(p: &FullParams) -> FullState {
    let bn = p.beta_n - p.mu_n;
    let bp = p.beta_p - p.mu_p;
    let bpe = p.beta_p - p.mu_p - p.eta;
    let me = p.mu_p + p.eta;
    let kr = p.kappa * p.rho;

    let n = (-bp * me - p.gamma * bpe) / (bp * kr);
    let p_s = (p.delta * bp * me + p.delta * p.gamma * bpe + bn * bp * kr) / (bp * p.kappa * kr);
    let p_h = -bpe / bp * p_s;
    FullState { n, p_s, p_h }
}

/// Closed-form equilibria with eigenvalues and classifications.
///
/// Requires the standing assumptions and unit exponents; the closed forms are
/// for the base model. Use numeric root-finding for generalized exponents.
pub fn equilibria(p: &FullParams) -> Result<EquilibriumReport> {
    if !p.has_unit_exponents() {
        return Err(Error::UnsupportedExponents { l: p.l, m: p.m });
    }
    let report = check_assumptions(p);
    if !report.a21_holds || !report.a22_holds {
        return Err(Error::AssumptionViolated(
            "equilibria requires the sign conditions and predator extinction assumption".into(),
        ));
    }

    let e1 = info_at(p, FullState { n: 0.0, p_s: 0.0, p_h: 0.0 });
    let e2 = info_at(p, FullState { n: p.prey_capacity(), p_s: 0.0, p_h: 0.0 });
    let e_star = report
        .interior_exists
        .then(|| info_at(p, interior_equilibrium(p)));

    Ok(EquilibriumReport { e1, e2, e_star })
}

/// Characteristic-polynomial coefficients at the interior equilibrium and the
/// Routh-Hurwitz verdict.
#[derive(Debug, Clone, Copy)]
pub struct RouthHurwitz {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub stable: bool,
}

/// Closed-form coefficients of `lambda^3 + p1*lambda^2 + p2*lambda + p3` at
/// E*, and the stability verdict `p1 > 0 && p1*p2 - p3 > 0 && p3 > 0`.
pub fn routh_hurwitz_interior(p: &FullParams) -> Result<RouthHurwitz> {
    if !p.has_unit_exponents() {
        return Err(Error::UnsupportedExponents { l: p.l, m: p.m });
    }
    if !check_assumptions(p).interior_exists {
        return Err(Error::NoInteriorEquilibrium);
    }

    let bn = p.beta_n - p.mu_n;
    let bp = p.beta_p - p.mu_p;
    let bpe = p.beta_p - p.mu_p - p.eta;
    let bpg = p.beta_p - p.mu_p - p.gamma;
    let me = p.mu_p + p.eta;
    let kr = p.kappa * p.rho;

    let p1 = (-kr * bpg * bp - p.gamma * (p.delta + kr) * bpe - p.delta * bp * me) / (kr * bp);
    // The common factor is -det(M) for the prey-free subsystem matrix.
    let neg_det_m = bpg * me + p.gamma * p.beta_p;
    let p2 = neg_det_m
        * (bp * (p.delta * (p.beta_p + p.eta + p.gamma) + kr * bn)
            - 2.0 * p.delta * p.gamma * p.eta)
        / (kr * bp * bp);
    let p3 = neg_det_m * (-p.delta * bpg * me - p.gamma * p.delta * p.beta_p - kr * bp * bn)
        / (kr * bp);

    let stable = p1 > 0.0 && p1 * p2 - p3 > 0.0 && p3 > 0.0;
    Ok(RouthHurwitz { p1, p2, p3, stable })
}

/// Prey-free predator subsystem data: the 2x2 matrix, its decay rate, the
/// positive left eigenvector, and the dissipativity bound built from them.
#[derive(Debug, Clone, Copy)]
pub struct PredatorSubsystemData {
    /// Matrix of the prey-free predator dynamics `(P_S, P_H)'`.
    pub matrix: Matrix2<f64>,
    /// Unique decay rate in `(0, min(mu_p + eta, mu_p + gamma - beta_p))`
    /// with `psi(lambda_star) = 1`; equals minus the dominant eigenvalue.
    pub lambda_star: f64,
    /// Positive left eigenvector `(P~_S, P~_H)` normalized to `P~_S = 1`.
    pub left_vec: [f64; 2],
    /// Bound of the attracting region
    /// `D = { rho (P~_H - P~_S) N + P~_S P_S + P~_H P_H <= M }`.
    pub dissipativity_m: f64,
}

/// The prey-free predator matrix.
pub fn predator_matrix(p: &FullParams) -> Matrix2<f64> {
    Matrix2::new(
        -p.mu_p - p.eta,
        p.gamma,
        p.beta_p,
        p.beta_p - p.mu_p - p.gamma,
    )
}

/// `psi(lambda) = [(mu_p+eta) - lambda] * [(mu_p+gamma-beta_p) - lambda]
///                / (beta_p * gamma)`, decreasing on the bracket.
fn psi(p: &FullParams, lambda: f64) -> f64 {
    ((p.mu_p + p.eta) - lambda) * ((p.mu_p + p.gamma - p.beta_p) - lambda)
        / (p.beta_p * p.gamma)
}

/// Solve for the subsystem decay rate and assemble the dissipativity bound.
///
/// `n0` is the initial prey bound entering `N* = max(n0, N_hat)`; pass `None`
/// to use the prey capacity itself.
pub fn predator_subsystem(p: &FullParams, n0: Option<f64>) -> Result<PredatorSubsystemData> {
    if psi(p, 0.0) <= 1.0 {
        return Err(Error::AssumptionViolated(
            "prey-free predator subsystem is not strictly decaying (psi(0) <= 1)".into(),
        ));
    }
    let upper = (p.mu_p + p.eta).min(p.mu_p + p.gamma - p.beta_p);
    if upper <= 0.0 {
        return Err(Error::AssumptionViolated(
            "bracket for lambda_star is empty (mu_p + gamma - beta_p <= 0)".into(),
        ));
    }

    // psi is monotone decreasing with psi(0) > 1 and psi(upper) = 0, so the
    // root is bracketed; bisect to absolute tolerance.
    let mut lo = 0.0_f64;
    let mut hi = upper;
    while hi - lo > LAMBDA_STAR_TOL {
        let mid = 0.5 * (lo + hi);
        if psi(p, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda_star = 0.5 * (lo + hi);

    // beta_p * P~_H = [(mu_p+eta) - lambda*] P~_S, normalized to P~_S = 1.
    let left_vec = [1.0, (p.mu_p + p.eta - lambda_star) / p.beta_p];

    let n_hat = p.prey_capacity();
    let n_star = n0.unwrap_or(n_hat).max(n_hat);
    let dissipativity_m =
        p.rho * (left_vec[1] - left_vec[0]) * p.beta_n * n_star / p.mu_n.min(lambda_star);

    Ok(PredatorSubsystemData {
        matrix: predator_matrix(p),
        lambda_star,
        left_vec,
        dissipativity_m,
    })
}

/// Weighted population sum defining the dissipativity region `D`.
pub fn dissipativity_weighted_sum(p: &FullParams, data: &PredatorSubsystemData, y: &[f64; 3]) -> f64 {
    p.rho * (data.left_vec[1] - data.left_vec[0]) * y[0]
        + data.left_vec[0] * y[1]
        + data.left_vec[1] * y[2]
}

/// Coefficients `(c1, c2)` for the extinction Lyapunov function
/// `V = (N - N_hat) - N_hat ln(N / N_hat) + c1 P_S + c2 P_H`.
///
/// Chosen at the midpoint of the feasible interval under the constraint
/// `c2 = c1 + 1/rho`, so both descent inequalities hold strictly.
pub fn lyapunov_coefficients(p: &FullParams) -> Result<(f64, f64)> {
    let report = check_assumptions(p);
    if !report.a21_holds || !report.a22_holds {
        return Err(Error::AssumptionViolated(
            "Lyapunov construction requires the standing assumptions".into(),
        ));
    }
    if !report.e2_stable {
        return Err(Error::EmptyFeasibleInterval);
    }

    let n_hat = p.prey_capacity();
    // With c2 = c1 + 1/rho the two descent inequalities reduce to
    //   c1 > (kappa*N_hat + beta_p/rho) / (mu_p + eta - beta_p)   and
    //   c1 < (mu_p + gamma - beta_p) / (rho (beta_p - mu_p)),
    // and the interval is nonempty exactly when E2 is stable.
    let lo = (p.kappa * n_hat + p.beta_p / p.rho) / (p.mu_p + p.eta - p.beta_p);
    let hi = (p.mu_p + p.gamma - p.beta_p) / (p.rho * (p.beta_p - p.mu_p));
    if !(lo < hi) {
        return Err(Error::EmptyFeasibleInterval);
    }
    let c1 = 0.5 * (lo + hi);
    Ok((c1, c1 + 1.0 / p.rho))
}

/// Both descent inequalities evaluated at `(c1, c2)`; negative means strict
/// descent in the corresponding predator direction.
pub fn lyapunov_descent_terms(p: &FullParams, c1: f64, c2: f64) -> (f64, f64) {
    let n_hat = p.prey_capacity();
    let rkn = p.rho * p.kappa * n_hat;
    let s_term = -c1 * (p.mu_p + p.eta) - c1 * rkn + c2 * rkn + c2 * p.beta_p;
    let h_term = -c2 * p.mu_p + c1 * p.gamma - c2 * p.gamma + c2 * p.beta_p;
    (s_term, h_term)
}

/// Value of the extinction Lyapunov function at a state with `N > 0`.
pub fn lyapunov_value(p: &FullParams, c1: f64, c2: f64, s: &FullState) -> Result<f64> {
    if !(s.n > 0.0) {
        return Err(Error::invalid("n", "Lyapunov value diverges as N -> 0+"));
    }
    let n_hat = p.prey_capacity();
    Ok((s.n - n_hat) - n_hat * (s.n / n_hat).ln() + c1 * s.p_s + c2 * s.p_h)
}

/// Check the competitive sign structure of the Jacobian over random states in
/// the open positive orthant: `J12 <= 0, J13 = 0, J21 <= 0, J23 >= 0,
/// J31 >= 0, J32 >= 0`. Deterministic (internally seeded).
pub fn k_competitive_check(p: &FullParams, samples: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7);
    let n_hat = p.prey_capacity();
    for _ in 0..samples {
        // Log-uniform over several decades around the natural scale.
        let n = n_hat * 10f64.powf(rng.random_range(-3.0..1.0));
        let p_s = n_hat * 10f64.powf(rng.random_range(-4.0..0.0));
        let p_h = n_hat * 10f64.powf(rng.random_range(-4.0..0.0));
        let j = jacobian_full(p, &FullState { n, p_s, p_h });
        let ok = j[(0, 1)] <= 0.0
            && j[(0, 2)] == 0.0
            && j[(1, 0)] <= 0.0
            && j[(1, 2)] >= 0.0
            && j[(2, 0)] >= 0.0
            && j[(2, 1)] >= 0.0;
        if !ok {
            return false;
        }
    }
    true
}

/// Max-norm residual of the equilibrium system, for post-checks.
pub fn equilibrium_residual(p: &FullParams, s: &FullState) -> f64 {
    rhs_full(p, s).iter().fold(0.0_f64, |a, d| a.max(d.abs()))
}
