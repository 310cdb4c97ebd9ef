//! Infinite-bath free evolution in closed form.
//!
//! With the bath arc sent to infinity at fixed system length the restricted
//! overlaps of two spreading Gaussian packets reduce to complex error
//! functions. Everything here is overflow-free: the oscillating entries are
//! built from the damped kernel [`erf_scaled`], whose Gaussian prefactor
//! always dominates the error function growth for these arguments.

use crate::specfun::{erf_real, erf_scaled};
use crate::{Error, Result, C64};

/// Two Gaussian packets of common width on the infinite line, with a system
/// window of length `l_a` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreePairConfig {
    /// Center of the first packet.
    pub x1: f64,
    /// Center of the second packet.
    pub x2: f64,
    /// Common packet width.
    pub sigma: f64,
    /// Length of the system window.
    pub l_a: f64,
}

impl FreePairConfig {
    /// Validated constructor: positive width and window length.
    pub fn new(x1: f64, x2: f64, sigma: f64, l_a: f64) -> Result<Self> {
        let ok = sigma > 0.0
            && l_a > 0.0
            && sigma.is_finite()
            && l_a.is_finite()
            && x1.is_finite()
            && x2.is_finite();
        if !ok {
            return Err(Error::InvalidInput(format!(
                "pair config needs finite centers and sigma, l_a > 0, got \
                 x1 = {x1}, x2 = {x2}, sigma = {sigma}, l_a = {l_a}"
            )));
        }
        Ok(Self { x1, x2, sigma, l_a })
    }

    fn centers(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    /// Dispersed width `sqrt(t^2 / sigma^2 + sigma^2)`.
    pub fn sigma_t(&self, t: f64) -> f64 {
        (t * t / (self.sigma * self.sigma) + self.sigma * self.sigma).sqrt()
    }
}

/// Restricted overlap `<psi_i(t)| P_A |psi_j(t)>` of the freely evolving
/// packets, zero based indices.
///
/// The closed form is a Gaussian prefactor times a pair of complex error
/// functions; both are evaluated together through the damped kernel so no
/// intermediate can overflow. For `i = j` the value is real up to rounding.
pub fn pij_infinite(config: &FreePairConfig, i: usize, j: usize, t: f64) -> C64 {
    assert!(i < 2 && j < 2, "packet indices are 0 or 1");
    assert!(t >= 0.0, "time must be non-negative, got {t}");
    let c = config.centers();
    let (xi, xj) = (c[i], c[j]);
    let sigma = config.sigma;
    let sigma2 = sigma * sigma;
    let st = config.sigma_t(t);
    let dx = xi - xj;
    let sum = xi + xj;
    let la_plus = config.l_a + sum;
    let la_minus = config.l_a - sum;
    // damping exponent of the Gaussian prefactor e^{-dx^2 / (8 sigma^2)}
    let damp = dx * dx / (8.0 * sigma2);
    let denom = 8.0f64.sqrt() * st * sigma2;
    let z_plus = C64::new(la_plus * sigma2 / denom, t * dx / denom);
    let z_minus = C64::new(la_minus * sigma2 / denom, -t * dx / denom);
    0.5 * (erf_scaled(z_plus, damp) + erf_scaled(z_minus, damp))
}

/// Distance between the two packet states as seen through the system
/// window, in closed form.
///
/// The diagonal overlaps enter through real error functions and the
/// interference term through one damped complex pair, so this route shares
/// no code path with assembling [`pij_infinite`] entries; the two agree to
/// `1e-10` and the agreement is under test.
pub fn d_infinite(config: &FreePairConfig, t: f64) -> f64 {
    assert!(t >= 0.0, "time must be non-negative, got {t}");
    let sigma = config.sigma;
    let sigma2 = sigma * sigma;
    let st = config.sigma_t(t);
    let root8_st = 8.0f64.sqrt() * st;
    let mut diag = 0.0;
    for xj in config.centers() {
        let s = erf_real((config.l_a - 2.0 * xj) / root8_st)
            + erf_real((config.l_a + 2.0 * xj) / root8_st);
        diag += s * s;
    }
    let dx = config.x1 - config.x2;
    let sum = config.x1 + config.x2;
    let damp = dx * dx / (8.0 * sigma2);
    let denom = root8_st * sigma2;
    let z_plus = C64::new((config.l_a + sum) * sigma2 / denom, t * dx / denom);
    let z_minus = C64::new((config.l_a - sum) * sigma2 / denom, -t * dx / denom);
    let cross = erf_scaled(z_plus, damp) + erf_scaled(z_minus, damp);
    let d2 = 0.125 * diag - 0.25 * cross.norm_sqr();
    d2.max(0.0).sqrt()
}

/// Predicted onset time of the Markovian decay for packets released outside
/// the system window: the front travels at speed `2 / sigma` and must cover
/// `x1 + l_a / 2` before the window starts draining.
pub fn tau_m(config: &FreePairConfig) -> Result<f64> {
    require_outside(config)?;
    Ok(config.sigma * (config.x1 + 0.5 * config.l_a) / 2.0)
}

/// Whether a non-Markovian window is predicted at all: the packet must be
/// narrow enough that its initial spread has not already crossed the system
/// window, `sigma < (x1 + l_a / 2) / 2`, strictly.
pub fn nm_window_exists(config: &FreePairConfig) -> Result<bool> {
    require_outside(config)?;
    Ok(config.sigma < 0.5 * (config.x1 + 0.5 * config.l_a))
}

/// Outside placement check shared by the window predictors. The boundary
/// `x1 = l_a / 2` is admitted as the continuity limit.
fn require_outside(config: &FreePairConfig) -> Result<()> {
    if config.x1 < 0.5 * config.l_a {
        return Err(Error::InvalidInput(format!(
            "window predictors need the packet outside the system, \
             x1 >= l_a / 2, got x1 = {}, l_a = {}",
            config.x1, config.l_a
        )));
    }
    Ok(())
}
