//! Competition kinetics between the two populations and the monotone
//! shift used by the contraction argument.
//!
//! The reaction enters the evolution equation on the left-hand side,
//! `d/dt u_i - c_i d2/dx_i2 u_i + F_i(u1, u2) = 0`, so a negative `F_i`
//! is growth. Two sign conventions are supported:
//! - [`Convention::Logistic`]: `F_i = -s_i (alpha_i - beta_i1 s1 -
//!   beta_i2 s2)`, self-limiting growth with bounded stationary states;
//! - [`Convention::Literal`]: `F_i = -(alpha_i s_i + s_i (beta_i1 s1 +
//!   beta_i2 s2))`, both terms amplify and densities grow without bound.
//!   Selectable for fidelity comparisons, not for stationary runs.
//!
//! Both satisfy `F_1(0, s2) = 0` and `F_2(s1, 0) = 0`: an absent
//! population stays absent, which underpins nonnegativity of solutions.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

/// Sign convention of the reaction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Self-limiting growth with competitive interaction (default).
    Logistic,
    /// Alternative form in which both terms amplify the density.
    Literal,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convention::Logistic => write!(f, "logistic"),
            Convention::Literal => write!(f, "literal"),
        }
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Convention::Logistic),
            "literal" => Ok(Convention::Literal),
            other => Err(Error::invalid(
                "convention",
                format!("expected 'logistic' or 'literal', got '{other}'"),
            )),
        }
    }
}

/// Continuous-model parameters: per-axis diffusion, conjugate-axis
/// regularization, growth rates, and the competition matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Trait diffusion of population 1 along `x1`.
    pub c1: f64,
    /// Trait diffusion of population 2 along `x2`.
    pub c2: f64,
    /// Conjugate-axis regularization weight (0 = degenerate problem).
    pub eps: f64,
    /// Intrinsic growth rates `(alpha_1, alpha_2)`.
    pub alpha: [f64; 2],
    /// Competition matrix; `beta[i][j]` is the pressure of population
    /// `j+1` on population `i+1`.
    pub beta: [[f64; 2]; 2],
    pub convention: Convention,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0) {
            return Err(Error::invalid("c1", format!("must be positive, got {}", self.c1)));
        }
        if !(self.c2 > 0.0) {
            return Err(Error::invalid("c2", format!("must be positive, got {}", self.c2)));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::invalid("eps", format!("must be nonnegative, got {}", self.eps)));
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !(a >= 0.0) {
                return Err(Error::invalid(
                    format!("alpha{}", i + 1),
                    format!("must be nonnegative, got {a}"),
                ));
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let b = self.beta[i][j];
                if !(b >= 0.0) {
                    return Err(Error::invalid(
                        format!("beta{}{}", i + 1, j + 1),
                        format!("must be nonnegative, got {b}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Reaction pair without domain checks; the formulas are polynomials
    /// and remain well defined for intermediate iterates that dip a few
    /// ulps below zero.
    pub fn reaction_raw(&self, s1: f64, s2: f64) -> (f64, f64) {
        let [a1, a2] = self.alpha;
        let b = &self.beta;
        match self.convention {
            Convention::Logistic => (
                -s1 * (a1 - b[0][0] * s1 - b[0][1] * s2),
                -s2 * (a2 - b[1][0] * s1 - b[1][1] * s2),
            ),
            Convention::Literal => (
                -(a1 * s1 + s1 * (b[0][0] * s1 + b[0][1] * s2)),
                -(a2 * s2 + s2 * (b[1][0] * s1 + b[1][1] * s2)),
            ),
        }
    }
}

/// Reaction pair `(F_1, F_2)` at one state; densities must be nonnegative.
pub fn reaction(s1: f64, s2: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if !(s1 >= 0.0) {
        return Err(Error::invalid("s1", format!("density must be nonnegative, got {s1}")));
    }
    if !(s2 >= 0.0) {
        return Err(Error::invalid("s2", format!("density must be nonnegative, got {s2}")));
    }
    Ok(params.reaction_raw(s1, s2))
}

/// Nodewise reaction over two density fields of equal length.
pub fn reaction_field(
    u1: &[f64],
    u2: &[f64],
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if u1.len() != u2.len() {
        return Err(Error::invalid(
            "fields",
            format!("length mismatch: {} vs {}", u1.len(), u2.len()),
        ));
    }
    let mut f1 = Vec::with_capacity(u1.len());
    let mut f2 = Vec::with_capacity(u1.len());
    for (&a, &b) in u1.iter().zip(u2) {
        let (x, y) = reaction(a, b, params)?;
        f1.push(x);
        f2.push(y);
    }
    Ok((f1, f2))
}

/// Trait diffusion induced by mutation: rate `mu` in [0,1] and step
/// scale `eps_m >= 0` give `c = mu * eps_m^2 / 2`.
pub fn mutation_to_diffusion(mu: f64, eps_m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::invalid("mu", format!("mutation rate must lie in [0,1], got {mu}")));
    }
    if !(eps_m >= 0.0) {
        return Err(Error::invalid(
            "eps_m",
            format!("mutation scale must be nonnegative, got {eps_m}"),
        ));
    }
    Ok(0.5 * mu * eps_m * eps_m)
}

/// Bound on all partial derivatives of the reaction over `[0, m]^2`:
/// `L = max_i (alpha_i + 2 beta_ii m + beta_ij m)`. Valid for both sign
/// conventions (their partials agree up to sign).
pub fn lipschitz_bound(params: &ModelParams, box_bound: f64) -> Result<f64> {
    if !(box_bound > 0.0) {
        return Err(Error::invalid(
            "box_bound",
            format!("must be positive, got {box_bound}"),
        ));
    }
    let b = &params.beta;
    let l1 = params.alpha[0] + (2.0 * b[0][0] + b[0][1]) * box_bound;
    let l2 = params.alpha[1] + (2.0 * b[1][1] + b[1][0]) * box_bound;
    Ok(l1.max(l2))
}

/// Shift data making the shifted reaction monotone on `[0, m]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftParams {
    /// Shift rate, `2 * lipschitz`.
    pub lambda: f64,
    /// Underlying derivative bound.
    pub lipschitz: f64,
    /// Box on which the bound was taken.
    pub box_bound: f64,
}

/// Monotone shift for the contraction argument: `lambda = 2 L`.
pub fn monotone_shift(params: &ModelParams, box_bound: f64) -> Result<ShiftParams> {
    let lipschitz = lipschitz_bound(params, box_bound)?;
    Ok(ShiftParams { lambda: 2.0 * lipschitz, lipschitz, box_bound })
}

/// Default invariant box: densities never exceed
/// `max(alpha) / min positive diagonal competition`, and the box must
/// contain the initial data.
pub fn default_box_bound(params: &ModelParams, initial_max: f64) -> Result<f64> {
    let diag = [params.beta[0][0], params.beta[1][1]];
    let min_diag = diag
        .iter()
        .copied()
        .filter(|&b| b > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_diag.is_finite() {
        return Err(Error::invalid(
            "beta",
            "no positive diagonal competition entry; cannot derive a density bound".to_string(),
        ));
    }
    let alpha_max = params.alpha[0].max(params.alpha[1]);
    Ok((alpha_max / min_diag).max(initial_max))
}

/// Shifted reaction `Fhat_i(t, s) = lambda s_i + exp(-lambda t) *
/// F_i(exp(lambda t) s1, exp(lambda t) s2)`.
///
/// Solving the shifted system and scaling back by `exp(lambda t)`
/// recovers the original problem; the shift makes the pair map monotone.
pub fn shifted_reaction(
    shift: &ShiftParams,
    t: f64,
    s1: f64,
    s2: f64,
    params: &ModelParams,
) -> (f64, f64) {
    let growth = (shift.lambda * t).exp();
    let decay = 1.0 / growth;
    let (f1, f2) = params.reaction_raw(growth * s1, growth * s2);
    (shift.lambda * s1 + decay * f1, shift.lambda * s2 + decay * f2)
}

/// Monotonicity slack `(Fhat(s) - Fhat(sigma)) . (s - sigma)` at time `t`.
pub fn monotonicity_slack(
    shift: &ShiftParams,
    t: f64,
    s: (f64, f64),
    sigma: (f64, f64),
    params: &ModelParams,
) -> f64 {
    let fs = shifted_reaction(shift, t, s.0, s.1, params);
    let fo = shifted_reaction(shift, t, sigma.0, sigma.1, params);
    (fs.0 - fo.0) * (s.0 - sigma.0) + (fs.1 - fo.1) * (s.1 - sigma.1)
}

/// Smallest slack over `samples` uniformly drawn state pairs in
/// `[0, box]^2 x [0, box]^2` at `t = 0`. Deterministic in `seed`.
pub fn sample_monotonicity(
    params: &ModelParams,
    shift: &ShiftParams,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = shift.box_bound;
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let s = (rng.gen::<f64>() * m, rng.gen::<f64>() * m);
        let sigma = (rng.gen::<f64>() * m, rng.gen::<f64>() * m);
        worst = worst.min(monotonicity_slack(shift, 0.0, s, sigma, params));
    }
    worst
}
