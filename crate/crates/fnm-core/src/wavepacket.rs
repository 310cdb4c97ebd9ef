//! Initial Gaussian packets on the ring and their eigenbasis expansion.
//!
//! A packet is a bare Gaussian of width `sigma` centred at `x0`, normalized
//! over the ring window `[-L/2, L/2]`. Expansion coefficients against the
//! eigenmodes are evaluated in closed form from Gaussian segment integrals,
//! so no quadrature enters the production path.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::specfun::{erf_real, gaussian_segment_integral};
use crate::spectrum::{EigenMode, RingGeometry};
use crate::{Error, Result, C64};

/// Coefficient integrals ignore the packet beyond this many widths from the
/// center; the discarded mass is of order `1e-31` relative.
const TAIL_SIGMAS: f64 = 12.0;

/// Normalization constant `C` for a Gaussian of width `sigma` centred at
/// `x0` on a ring of circumference `l`, cut at `x = +-l/2`:
/// `C^2 sqrt(pi/2) sigma { Erf[(l - 2 x0)/(sqrt(8) sigma)] +
/// Erf[(l + 2 x0)/(sqrt(8) sigma)] } = 1`.
///
/// For `sigma` well below `l` this reduces to the open-line value
/// `(2 pi sigma^2)^(-1/4)` independently of the center.
pub fn normalization_constant(x0: f64, sigma: f64, l: f64) -> f64 {
    assert!(sigma > 0.0 && l > 0.0, "need sigma > 0 and l > 0");
    let denom = 8.0f64.sqrt() * sigma;
    let mass = (0.5 * PI).sqrt()
        * sigma
        * (erf_real((l - 2.0 * x0) / denom) + erf_real((l + 2.0 * x0) / denom));
    1.0 / mass.sqrt()
}

/// Normalized Gaussian packet at rest on the ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    /// Center position, strictly inside the ring window.
    pub x0: f64,
    /// Width parameter of `exp(-(x - x0)^2 / (4 sigma^2))`.
    pub sigma: f64,
    /// Ring normalization constant, dimension length^(-1/2).
    pub c: f64,
}

impl GaussianPacket {
    /// Build and normalize a packet on a ring of circumference `l`.
    pub fn new(x0: f64, sigma: f64, l: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "packet needs finite sigma > 0 and l > 0, got sigma = {sigma}, l = {l}"
            )));
        }
        if !(x0.is_finite() && x0.abs() < 0.5 * l) {
            return Err(Error::InvalidInput(format!(
                "packet center must satisfy |x0| < l/2, got x0 = {x0} on l = {l}"
            )));
        }
        Ok(Self {
            x0,
            sigma,
            c: normalization_constant(x0, sigma, l),
        })
    }

    /// Packet amplitude at ring coordinate `x` (wrapped into the cut window
    /// `[-l/2, l/2)` first). The amplitude is real and non-negative.
    pub fn eval(&self, x: f64, l: f64) -> f64 {
        let y = (x + 0.5 * l).rem_euclid(l) - 0.5 * l;
        let d = (y - self.x0) / (2.0 * self.sigma);
        self.c * (-d * d).exp()
    }
}

/// `<phi|psi>` for one eigenmode, in closed form.
///
/// The cut window splits into three pieces on which the mode is a single
/// two-wave branch: the far half of the bath arc (one period below the
/// canonical window), region A, and the near half of the bath arc. Each
/// piece contributes two Gaussian segment integrals.
pub fn expansion_coefficient(
    packet: &GaussianPacket,
    mode: &EigenMode,
    geo: &RingGeometry,
) -> C64 {
    let l = geo.circumference();
    let (a_lo, a_hi) = geo.region_a();
    let w_lo = (packet.x0 - TAIL_SIGMAS * packet.sigma).max(-0.5 * l);
    let w_hi = (packet.x0 + TAIL_SIGMAS * packet.sigma).min(0.5 * l);
    // on a piece whose canonical image is x + shift the mode reads
    // alpha e^{ik(x+shift)} + beta e^{-ik(x+shift)}
    let pieces = [
        (-0.5 * l, a_lo, mode.amp_b, l),
        (a_lo, a_hi, mode.amp_a, 0.0),
        (a_hi, 0.5 * l, mode.amp_b, 0.0),
    ];
    let mut acc = C64::new(0.0, 0.0);
    for (lo, hi, amp, shift) in pieces {
        let a = lo.max(w_lo);
        let b = hi.min(w_hi);
        if b <= a {
            continue;
        }
        let phase = C64::from_polar(1.0, -mode.k * shift);
        let g_plus = gaussian_segment_integral(a, b, mode.k, packet.x0, packet.sigma);
        let g_minus = gaussian_segment_integral(a, b, -mode.k, packet.x0, packet.sigma);
        acc += amp.0.conj() * phase * g_plus + amp.1.conj() * phase.conj() * g_minus;
    }
    acc * packet.c
}

/// Raw coefficient vector over a whole mode list, parallel over modes.
pub fn expansion_coefficients(
    packet: &GaussianPacket,
    modes: &[EigenMode],
    geo: &RingGeometry,
) -> Vec<C64> {
    modes
        .par_iter()
        .map(|m| expansion_coefficient(packet, m, geo))
        .collect()
}

/// Truncated eigenbasis expansion of one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedState {
    /// Retained coefficients keyed by index into the mode list the state
    /// was expanded against; omitted modes are implicitly zero.
    pub coeffs: BTreeMap<usize, C64>,
    /// Captured norm `sum |coeff|^2` of the retained set.
    pub fidelity: f64,
}

/// Keep coefficients in decreasing modulus order (ties broken by index)
/// until the captured norm reaches `fidelity_target`.
///
/// Fails with [`Error::InsufficientModes`] when even the full list falls
/// short, in which case the caller must enlarge the basis.
pub fn select_to_fidelity(raw: &[C64], fidelity_target: f64) -> Result<ExpandedState> {
    if !(fidelity_target > 0.0 && fidelity_target <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "fidelity target must lie in (0, 1], got {fidelity_target}"
        )));
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| {
        raw[j]
            .norm_sqr()
            .total_cmp(&raw[i].norm_sqr())
            .then(i.cmp(&j))
    });
    let mut coeffs = BTreeMap::new();
    let mut fidelity = 0.0;
    for &i in &order {
        if fidelity >= fidelity_target {
            break;
        }
        coeffs.insert(i, raw[i]);
        fidelity += raw[i].norm_sqr();
    }
    if fidelity < fidelity_target {
        return Err(Error::InsufficientModes {
            achieved: fidelity,
            target: fidelity_target,
        });
    }
    Ok(ExpandedState { coeffs, fidelity })
}

/// Expand a packet over `modes` and retain terms to `fidelity_target`.
pub fn expand(
    packet: &GaussianPacket,
    modes: &[EigenMode],
    geo: &RingGeometry,
    fidelity_target: f64,
) -> Result<ExpandedState> {
    let raw = expansion_coefficients(packet, modes, geo);
    select_to_fidelity(&raw, fidelity_target)
}

/// Rough mode count `(L / sigma) sqrt(-ln epsilon)` needed to expand a
/// packet of width `sigma` to infidelity `epsilon`, rounded up.
///
/// Reported as a positive count. Because of the rounding the count vanishes
/// only at `epsilon = 1` exactly; any smaller infidelity costs at least one
/// mode.
pub fn n_star_estimate(l: f64, sigma: f64, epsilon: f64) -> usize {
    assert!(
        sigma > 0.0 && l > 0.0 && epsilon > 0.0 && epsilon <= 1.0,
        "need sigma > 0, l > 0 and epsilon in (0, 1]"
    );
    ((l / sigma) * (-epsilon.ln()).sqrt()).ceil() as usize
}
