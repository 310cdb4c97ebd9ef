//! Exact eigenmodes of a particle on a ring with two delta barriers, and the
//! region-A overlap kernel built from them.
//!
//! The ring has circumference `L = L_A + L_B`. Region A is the arc
//! `[-L_A/2, L_A/2]`; delta barriers of strength `v1` and `v2` sit at its two
//! ends, `x = +L_A/2` and `x = -L_A/2`, so region B is the complementary arc.
//! With `H = -d^2/dx^2 + v1 d(x - L_A/2) + v2 d(x + L_A/2)` every eigenstate
//! at energy `E = k^2 > 0` is a pair of counter-propagating plane waves in
//! each region; a barrier maps the amplitude pair on one side to the other
//! through a 2x2 transfer matrix of unit determinant, and periodicity closes
//! the ring into a monodromy matrix whose trace must equal 2. The resulting
//! scalar quantization function, its root scan, and the unipotent structure
//! of the monodromy at a root (which hands us the eigenvector without
//! solving anything) are worked through in `docs/eigenproblem.md`.
//!
//! Everything downstream consumes the modes through Gram-type integrals over
//! a region, which reduce to elementary plane-wave integrals evaluated here
//! in closed form.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::{Error, Result, C64};

/// Relative spacing below which two roots of the quantization function are
/// considered the same root found twice.
const ROOT_MERGE_EPS: f64 = 1e-12;
/// Samples of the quantization function with `|f|` below this multiple of
/// the monodromy trace magnitude carry no usable sign.  The observed rounding
/// step of the trace is about a quarter of one unit in the last place of its
/// largest term, so one full unit leaves a factor of two against spurious
/// sign flips while keeping barely split root pairs resolvable.
const TANGENT_NOISE_FACTOR: f64 = f64::EPSILON;
/// Below this relative distance from the identity the monodromy at a root is
/// treated as the identity itself, i.e. a doubly degenerate level.
const DOUBLET_EPS: f64 = 1e-6;
/// The mode count must agree with the Weyl estimate `k_max L / pi` to this
/// absolute tolerance, otherwise the scan missed or invented roots.
const WEYL_TOLERANCE: f64 = 3.0;

// ---------------------------------------------------------------------------
// geometry

/// Ring split into an inner region A and a bath arc B by two delta barriers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingGeometry {
    /// Length of region A, centred on `x = 0`.
    pub l_a: f64,
    /// Length of the complementary arc B.
    pub l_b: f64,
    /// Barrier strength at `x = +L_A/2`.
    pub v1: f64,
    /// Barrier strength at `x = -L_A/2`.
    pub v2: f64,
}

impl RingGeometry {
    /// Validated constructor: both arcs must have positive length and the
    /// barrier strengths must be non-negative and finite.
    pub fn new(l_a: f64, l_b: f64, v1: f64, v2: f64) -> Result<Self> {
        let ok = l_a > 0.0
            && l_b > 0.0
            && v1 >= 0.0
            && v2 >= 0.0
            && l_a.is_finite()
            && l_b.is_finite()
            && v1.is_finite()
            && v2.is_finite();
        if !ok {
            return Err(Error::InvalidInput(format!(
                "ring geometry needs l_a, l_b > 0 and finite v1, v2 >= 0, got \
                 l_a = {l_a}, l_b = {l_b}, v1 = {v1}, v2 = {v2}"
            )));
        }
        Ok(Self { l_a, l_b, v1, v2 })
    }

    /// Total circumference `L_A + L_B`.
    pub fn circumference(&self) -> f64 {
        self.l_a + self.l_b
    }

    /// Endpoints of region A, `(-L_A/2, +L_A/2)`.
    pub fn region_a(&self) -> (f64, f64) {
        (-0.5 * self.l_a, 0.5 * self.l_a)
    }

    /// True when both barriers vanish and the spectrum is the free one.
    pub fn is_free(&self) -> bool {
        self.v1 == 0.0 && self.v2 == 0.0
    }

    /// Wrap a coordinate into the canonical window
    /// `[-L_A/2, -L_A/2 + L)`, which covers region A first and then B.
    pub fn canonical_x(&self, x: f64) -> f64 {
        let l = self.circumference();
        let lo = -0.5 * self.l_a;
        let mut y = (x - lo).rem_euclid(l) + lo;
        // rem_euclid can land exactly on the upper edge through rounding
        if y >= lo + l {
            y = lo;
        }
        y
    }
}

// ---------------------------------------------------------------------------
// transfer matrices

/// Dense 2x2 complex matrix, just enough algebra for the monodromy chain.
#[derive(Debug, Clone, Copy)]
struct Mat2 {
    a: C64,
    b: C64,
    c: C64,
    d: C64,
}

impl Mat2 {
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    fn apply(self, v: (C64, C64)) -> (C64, C64) {
        (self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }

    fn trace(self) -> C64 {
        self.a + self.d
    }

    fn sub_identity(self) -> Mat2 {
        Mat2 {
            a: self.a - 1.0,
            b: self.b,
            c: self.c,
            d: self.d - 1.0,
        }
    }

    fn frobenius(self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }
}

/// Transfer matrix across a delta barrier of strength `v` at `x_b`, mapping
/// the plane-wave amplitude pair `(alpha, beta)` on the left of the barrier
/// to the pair on the right. Continuity plus the derivative jump
/// `psi'(x_b^+) - psi'(x_b^-) = v psi(x_b)` give, with `g = v/(2ik)`,
/// ```text
/// [ 1+g        g e^{-2ik x_b} ]
/// [ -g e^{2ik x_b}    1-g     ]
/// ```
/// which has unit determinant for every real `k != 0`.
fn barrier_matrix(x_b: f64, v: f64, k: f64) -> Mat2 {
    let g = C64::new(0.0, -v / (2.0 * k));
    let phase = C64::from_polar(1.0, -2.0 * k * x_b);
    Mat2 {
        a: 1.0 + g,
        b: g * phase,
        c: -g * phase.conj(),
        d: 1.0 - g,
    }
}

/// Amplitude map for continuing a solution periodically: the same physical
/// wave seen from a base point shifted by `-L` picks up `e^{-ikL}` on the
/// right-mover and `e^{ikL}` on the left-mover.
fn wraparound_matrix(l: f64, k: f64) -> Mat2 {
    Mat2 {
        a: C64::from_polar(1.0, k * l),
        b: C64::new(0.0, 0.0),
        c: C64::new(0.0, 0.0),
        d: C64::from_polar(1.0, -k * l),
    }
}

/// One full trip around the ring starting from the region-A amplitudes:
/// across the barrier at `+L_A/2`, through B, across the barrier at
/// `-L_A/2`, and back onto region A via periodicity. An eigenstate is a
/// fixed point of this map.
fn monodromy(geo: &RingGeometry, k: f64) -> Mat2 {
    let (x_lo, x_hi) = geo.region_a();
    let m1 = barrier_matrix(x_hi, geo.v1, k);
    let m2 = barrier_matrix(x_lo, geo.v2, k);
    m2.mul(wraparound_matrix(geo.circumference(), k)).mul(m1)
}

/// Scalar whose zeros are the spectrum: `tr M(k) - 2`, real for real `k`
/// because the monodromy is similar to its own conjugate.
pub fn quantization_function(geo: &RingGeometry, k: f64) -> f64 {
    let tr = monodromy(geo, k).trace();
    debug_assert!(
        tr.im.abs() <= 1e-9 * (1.0 + tr.norm()),
        "monodromy trace grew an imaginary part: {tr}"
    );
    tr.re - 2.0
}

/// Magnitude scale of the terms entering the trace at wavenumber `k`; the
/// quantization function cannot be resolved below `eps` times this.
fn trace_scale(geo: &RingGeometry, k: f64) -> f64 {
    let g1 = geo.v1 / (2.0 * k);
    let g2 = geo.v2 / (2.0 * k);
    2.0 + 2.0 * (g1 + g2) + 4.0 * g1 * g2
}

// ---------------------------------------------------------------------------
// eigenmodes

/// Single eigenstate: wavenumber, energy and the plane-wave amplitude pairs
/// `(alpha, beta)` on the two regions, normalized to unit norm over the ring
/// with a deterministic global phase (largest amplitude real positive).
///
/// The wavefunction is `alpha e^{ikx} + beta e^{-ikx}` with the region-A pair
/// valid on `[-L_A/2, L_A/2]` and the region-B pair on
/// `[L_A/2, L_A/2 + L_B]`, both in the same global coordinate.
#[derive(Debug, Clone)]
pub struct EigenMode {
    pub k: f64,
    pub energy: f64,
    pub amp_a: (C64, C64),
    pub amp_b: (C64, C64),
}

impl EigenMode {
    /// Wavefunction value at `x` (any real coordinate; wrapped internally).
    pub fn eval(&self, geo: &RingGeometry, x: f64) -> C64 {
        let y = geo.canonical_x(x);
        let (amp, _) = self.branch(geo, y);
        amp.0 * C64::from_polar(1.0, self.k * y) + amp.1 * C64::from_polar(1.0, -self.k * y)
    }

    /// Derivative of the wavefunction at `x`, one-sided from within the
    /// region that contains the canonical image of `x`.
    pub fn eval_deriv(&self, geo: &RingGeometry, x: f64) -> C64 {
        let y = geo.canonical_x(x);
        let (amp, _) = self.branch(geo, y);
        let ik = C64::new(0.0, self.k);
        ik * (amp.0 * C64::from_polar(1.0, self.k * y) - amp.1 * C64::from_polar(1.0, -self.k * y))
    }

    fn branch(&self, geo: &RingGeometry, canonical: f64) -> ((C64, C64), bool) {
        if canonical <= 0.5 * geo.l_a {
            (self.amp_a, true)
        } else {
            (self.amp_b, false)
        }
    }
}

/// `int_a^b e^{i mu x} dx`, with the small-argument limit handled by a
/// series so that `mu -> 0` is exact instead of 0/0.
fn plane_wave_integral(mu: f64, a: f64, b: f64) -> C64 {
    let d = b - a;
    if (mu * d).abs() < 1e-8 {
        let q = mu * d;
        // int = d e^{i mu (a+b)/2} sinc(q/2); two series terms are ample here
        let sinc = 1.0 - q * q / 24.0;
        C64::from_polar(d * sinc, mu * 0.5 * (a + b))
    } else {
        let im = C64::new(0.0, mu);
        (C64::from_polar(1.0, mu * b) - C64::from_polar(1.0, mu * a)) / im
    }
}

/// `<u|v>` over `[a, b]` for two two-wave branches `u, v` at wavenumbers
/// `ku, kv`: four plane-wave cross terms.
fn segment_overlap(cu: (C64, C64), ku: f64, cv: (C64, C64), kv: f64, a: f64, b: f64) -> C64 {
    cu.0.conj() * cv.0 * plane_wave_integral(kv - ku, a, b)
        + cu.0.conj() * cv.1 * plane_wave_integral(-kv - ku, a, b)
        + cu.1.conj() * cv.0 * plane_wave_integral(kv + ku, a, b)
        + cu.1.conj() * cv.1 * plane_wave_integral(ku - kv, a, b)
}

/// `<u|v>` restricted to region A.
pub fn region_a_overlap(u: &EigenMode, v: &EigenMode, geo: &RingGeometry) -> C64 {
    let (lo, hi) = geo.region_a();
    segment_overlap(u.amp_a, u.k, v.amp_a, v.k, lo, hi)
}

/// `<u|v>` over the whole ring: region A plus the bath arc.
pub fn ring_overlap(u: &EigenMode, v: &EigenMode, geo: &RingGeometry) -> C64 {
    let (lo, hi) = geo.region_a();
    segment_overlap(u.amp_a, u.k, v.amp_a, v.k, lo, hi)
        + segment_overlap(u.amp_b, u.k, v.amp_b, v.k, hi, hi + geo.l_b)
}

/// Normalize to unit ring norm and fix the global phase: the amplitude of
/// largest modulus (ties broken by position) is rotated to the positive real
/// axis. Purely a convention, but it makes every run bit-reproducible.
fn normalize_and_fix_phase(mode: &mut EigenMode, geo: &RingGeometry) {
    let norm2 = ring_overlap(mode, mode, geo).re;
    debug_assert!(norm2 > 0.0, "mode has non-positive norm {norm2}");
    let scale = 1.0 / norm2.sqrt();
    for amp in [&mut mode.amp_a, &mut mode.amp_b] {
        amp.0 *= scale;
        amp.1 *= scale;
    }
    let candidates = [mode.amp_a.0, mode.amp_a.1, mode.amp_b.0, mode.amp_b.1];
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.norm_sqr() > best.norm_sqr() {
            best = *c;
        }
    }
    if best.norm_sqr() > 0.0 {
        let phase = best / best.norm();
        let rot = phase.conj();
        for amp in [&mut mode.amp_a, &mut mode.amp_b] {
            amp.0 *= rot;
            amp.1 *= rot;
        }
    }
}

/// Build the single eigenmode at a simple root `k`. The monodromy there is
/// unipotent with a one-dimensional fixed space, and for a unipotent matrix
/// the fixed space equals the column space of `M - I`; the larger column is
/// therefore the amplitude pair itself, no solving and no division.
fn single_mode(geo: &RingGeometry, k: f64) -> EigenMode {
    let m = monodromy(geo, k);
    let n = m.sub_identity();
    let col0 = (n.a, n.c);
    let col1 = (n.b, n.d);
    let amp_a = if col0.0.norm_sqr() + col0.1.norm_sqr() >= col1.0.norm_sqr() + col1.1.norm_sqr() {
        col0
    } else {
        col1
    };
    let m1 = barrier_matrix(0.5 * geo.l_a, geo.v1, k);
    let amp_b = m1.apply(amp_a);
    let mut mode = EigenMode {
        k,
        energy: k * k,
        amp_a,
        amp_b,
    };
    normalize_and_fix_phase(&mut mode, geo);
    mode
}

/// Build both members of a doubly degenerate level at `k`, where the
/// monodromy is the identity and every amplitude pair is an eigenstate.
///
/// The pair returned is the one that diagonalizes the region-A weight within
/// the degenerate plane: ring-orthonormal, with the A-dominant member first.
/// Any orthonormal pair would span the same space; this choice is canonical
/// and stable.
fn doublet_modes(geo: &RingGeometry, k: f64) -> [EigenMode; 2] {
    let m1 = barrier_matrix(0.5 * geo.l_a, geo.v1, k);
    let (lo, hi) = geo.region_a();
    let basis = [(C64::new(1.0, 0.0), C64::new(0.0, 0.0)), (C64::new(0.0, 0.0), C64::new(1.0, 0.0))];
    let bath = [m1.apply(basis[0]), m1.apply(basis[1])];
    // 2x2 Gram over the ring (G) and over region A alone (W)
    let mut g = [[C64::new(0.0, 0.0); 2]; 2];
    let mut w = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            w[i][j] = segment_overlap(basis[i], k, basis[j], k, lo, hi);
            g[i][j] = w[i][j] + segment_overlap(bath[i], k, bath[j], k, hi, hi + geo.l_b);
        }
    }
    // generalized eigenproblem W c = mu G c through the Cholesky factor of G
    let r11 = g[0][0].re.sqrt();
    let r12 = g[0][1] / r11;
    let r22 = (g[1][1].re - r12.norm_sqr()).sqrt();
    // B = R^{-dagger} W R^{-1}, Hermitian 2x2
    let b11 = w[0][0].re / (r11 * r11);
    let b12 = (w[0][1] - r12.conj() * (w[0][0].re / r11)) / (r11 * r22);
    let b22 = (w[1][1].re - 2.0 * (r12.conj() * w[0][1] / r11).re
        + r12.norm_sqr() * w[0][0].re / (r11 * r11))
        / (r22 * r22);
    let half_diff = 0.5 * (b11 - b22);
    let split = (half_diff * half_diff + b12.norm_sqr()).sqrt();
    let mus = [0.5 * (b11 + b22) + split, 0.5 * (b11 + b22) - split];
    // when the weight is a scalar inside the degenerate plane (for example
    // free doublets with sin(k L_A) = 0) every pair diagonalizes it and the
    // residual formula below would return the zero vector, so fall back to
    // the canonical basis
    let weight_scalar = split <= 1e-12 * (b11.abs() + b22.abs());
    let build = |mu: f64, which: usize| -> EigenMode {
        // eigenvector of the 2x2 Hermitian pencil, larger-residual formula
        let y = if weight_scalar {
            basis[which]
        } else if (mu - b22).abs() >= (mu - b11).abs() {
            (C64::new(mu - b22, 0.0), b12.conj())
        } else {
            (b12, C64::new(mu - b11, 0.0))
        };
        // back-substitute c = R^{-1} y
        let c1 = y.1 / r22;
        let c0 = (y.0 - r12 * c1) / r11;
        let amp_a = (c0, c1);
        let amp_b = m1.apply(amp_a);
        let mut mode = EigenMode {
            k,
            energy: k * k,
            amp_a,
            amp_b,
        };
        normalize_and_fix_phase(&mut mode, geo);
        mode
    };
    [build(mus[0], 0), build(mus[1], 1)]
}

/// Bisection to machine resolution; `flo` is the sign of `f` at `lo`.
fn bisect_root(geo: &RingGeometry, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = quantization_function(geo, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Ternary search for the minimum of `|f|` on `[lo, hi]`.
fn refine_abs_minimum(geo: &RingGeometry, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..240 {
        let third = (hi - lo) / 3.0;
        let m1 = lo + third;
        let m2 = hi - third;
        if m1 >= m2 {
            break;
        }
        if quantization_function(geo, m1).abs() <= quantization_function(geo, m2).abs() {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

/// Resolve everything hiding in a window the coarse grid flagged: simple
/// crossings, crossing pairs too close for the parent resolution, tangential
/// roots and degenerate levels. Subdivides 64-fold and recurses until the
/// structure is unambiguous or the window reaches machine scale.
///
/// This matters because nearly coincident roots are generic here: a split
/// doublet at weak coupling, or one level of each decoupled box falling on
/// the same wavenumber at strong coupling, can be separated by many orders
/// of magnitude less than the mean level spacing.
fn scan_window(
    geo: &RingGeometry,
    lo: f64,
    hi: f64,
    depth: u32,
    roots: &mut Vec<f64>,
    doublets: &mut Vec<f64>,
) {
    let floor = 1e-11 * hi.max(1e-6);
    if hi - lo <= floor || depth >= 14 {
        classify_bottom(geo, lo, hi, roots, doublets);
        return;
    }
    const N: usize = 64;
    let h = (hi - lo) / N as f64;
    let ks: Vec<f64> = (0..=N).map(|i| lo + i as f64 * h).collect();
    let fs: Vec<f64> = ks.iter().map(|&k| quantization_function(geo, k)).collect();
    // samples with |f| at the evaluation noise floor carry no usable sign;
    // near a degenerate level f can even flush to an exact 0.0 plateau
    let noise = TANGENT_NOISE_FACTOR * trace_scale(geo, 0.5 * (lo + hi));
    let quiet: Vec<bool> = fs.iter().map(|f| f.abs() <= noise).collect();

    // maximal runs of noise-floor samples, classified by their clean brackets
    let mut i = 0usize;
    while i <= N {
        if !quiet[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i <= N && quiet[i] {
            i += 1;
        }
        let end = i - 1;
        let left = start.checked_sub(1);
        let right = if end < N { Some(end + 1) } else { None };
        match (left, right) {
            (Some(a), Some(b)) if fs[a] * fs[b] < 0.0 => {
                // the function changes sign across the run: one root inside
                roots.push(bisect_root(geo, ks[a], ks[b], fs[a]));
            }
            _ => {
                // a dip to the noise floor with equal signs on both sides can
                // still hide a barely split root pair whose hump between the
                // roots fell inside the run at this grid spacing, so zoom in;
                // the recursion bottoms out in classify_bottom, which settles
                // degenerate level against single tangential root
                let wlo = left.map_or(lo, |a| ks[a]);
                let whi = right.map_or(hi, |b| ks[b]);
                scan_window(geo, wlo, whi, depth + 1, roots, doublets);
            }
        }
    }

    let clean_cell = |i: usize| !quiet[i] && !quiet[i + 1];
    let crossings: Vec<usize> = (0..N)
        .filter(|&i| clean_cell(i) && fs[i] * fs[i + 1] < 0.0)
        .collect();
    let dips: Vec<usize> = (1..N)
        .filter(|&i| {
            !quiet[i - 1]
                && !quiet[i]
                && !quiet[i + 1]
                && fs[i].abs() < fs[i - 1].abs()
                && fs[i].abs() < fs[i + 1].abs()
                && fs[i] * fs[i - 1] > 0.0
                && fs[i] * fs[i + 1] > 0.0
        })
        .collect();
    if crossings.len() == 1 && dips.is_empty() && quiet.iter().all(|q| !q) {
        roots.push(bisect_root(geo, ks[crossings[0]], ks[crossings[0] + 1], fs[crossings[0]]));
        return;
    }
    for &i in &crossings {
        if h <= floor {
            roots.push(bisect_root(geo, ks[i], ks[i + 1], fs[i]));
        } else {
            scan_window(geo, ks[i], ks[i + 1], depth + 1, roots, doublets);
        }
    }
    for &i in &dips {
        scan_window(geo, ks[i - 1], ks[i + 1], depth + 1, roots, doublets);
    }
}

/// Terminal classification of a window at machine scale: a crossing pair the
/// recursion could not separate, a tangential simple root, a degenerate
/// level, or a dip that never reaches zero.
fn classify_bottom(
    geo: &RingGeometry,
    lo: f64,
    hi: f64,
    roots: &mut Vec<f64>,
    doublets: &mut Vec<f64>,
) {
    let k_star = refine_abs_minimum(geo, lo, hi);
    let f_star = quantization_function(geo, k_star);
    let f_lo = quantization_function(geo, lo);
    let noise = TANGENT_NOISE_FACTOR * trace_scale(geo, k_star);
    if f_star.abs() > noise {
        if f_star != 0.0 && f_lo != 0.0 && f_star.signum() != f_lo.signum() {
            // the dip crosses zero twice inside the window
            roots.push(bisect_root(geo, lo, k_star, f_lo));
            roots.push(bisect_root(geo, k_star, hi, f_star));
        }
        // otherwise a dip that never reaches zero: not a root
        return;
    }
    let m = monodromy(geo, k_star);
    if m.sub_identity().frobenius() <= DOUBLET_EPS * m.frobenius() {
        doublets.push(k_star);
    } else {
        // tangential zero with a defective monodromy: simple level
        roots.push(k_star);
    }
}

/// Analytic spectrum of the barrier-free ring up to `k_max`: the constant
/// mode plus a doubly degenerate level at every `k_n = 2 pi n / L`, resolved
/// into the region-A-weight eigenpair like any other doublet.
fn free_modes(geo: &RingGeometry, k_max: f64) -> Vec<EigenMode> {
    let l = geo.circumference();
    let amp = C64::new(0.5 / l.sqrt(), 0.0);
    let mut modes = vec![EigenMode {
        k: 0.0,
        energy: 0.0,
        amp_a: (amp, amp),
        amp_b: (amp, amp),
    }];
    let mut n = 1u64;
    loop {
        let k = 2.0 * PI * n as f64 / l;
        if k > k_max {
            break;
        }
        modes.extend(doublet_modes(geo, k));
        n += 1;
    }
    modes
}

/// All eigenmodes with `k <= k_max`.
///
/// Scans the quantization function on a grid of spacing `0.1 pi / L` (ten
/// points per mean level spacing), bisects every sign change to machine
/// precision, and inspects every sign-preserving local minimum of `|f|` for
/// the three things it can hide: a pair of roots inside one grid cell, a
/// tangential root, or a doubly degenerate level. The final count is checked
/// against the Weyl estimate `k_max L / pi`; disagreement beyond
/// [`WEYL_TOLERANCE`] aborts with [`Error::SpectralDiagnostic`] rather than
/// silently handing back an incomplete basis.
///
/// Resolution limit: a root pair split more finely than one unit in the last
/// place of the monodromy trace (barrier strengths beyond roughly `1e9` with
/// exactly coinciding subring levels) is reported as a single root. Such an
/// isolated deficit stays within the Weyl tolerance.
pub fn find_modes(geo: &RingGeometry, k_max: f64) -> Result<Vec<EigenMode>> {
    if !(k_max > 0.0 && k_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "k_max must be positive and finite, got {k_max}"
        )));
    }
    if geo.is_free() {
        return check_weyl(free_modes(geo, k_max), geo, k_max);
    }
    let l = geo.circumference();
    let dk = 0.1 * PI / l;
    let k_start = 1e-8 * PI / l;
    let n_grid = ((k_max - k_start) / dk).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| (k_start + i as f64 * dk).min(k_max))
        .collect();
    let mut f: Vec<f64> = grid
        .iter()
        .map(|&k| quantization_function(geo, k))
        .collect();
    // an exact zero on a grid knot would confuse the sign bookkeeping; nudge
    for (i, fi) in f.iter_mut().enumerate() {
        if *fi == 0.0 {
            *fi = quantization_function(geo, grid[i] + 1e-9 * dk);
        }
    }

    let mut roots: Vec<f64> = Vec::new();
    let mut doublets: Vec<f64> = Vec::new();
    for i in 0..n_grid - 1 {
        if grid[i + 1] <= grid[i] {
            continue;
        }
        if f[i] * f[i + 1] < 0.0 {
            scan_window(geo, grid[i], grid[i + 1], 1, &mut roots, &mut doublets);
        }
    }
    for i in 1..n_grid - 1 {
        let dip = f[i].abs() < f[i - 1].abs()
            && f[i].abs() < f[i + 1].abs()
            && f[i] * f[i - 1] > 0.0
            && f[i] * f[i + 1] > 0.0;
        if dip {
            scan_window(geo, grid[i - 1], grid[i + 1], 1, &mut roots, &mut doublets);
        }
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|b, a| (*b - *a).abs() <= ROOT_MERGE_EPS * b.abs());
    doublets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    doublets.dedup_by(|b, a| (*b - *a).abs() <= ROOT_MERGE_EPS * b.abs());

    let mut modes: Vec<EigenMode> = roots.iter().map(|&k| single_mode(geo, k)).collect();
    for &k in &doublets {
        modes.extend(doublet_modes(geo, k));
    }
    modes.sort_by(|a, b| a.k.partial_cmp(&b.k).unwrap());
    check_weyl(modes, geo, k_max)
}

fn check_weyl(modes: Vec<EigenMode>, geo: &RingGeometry, k_max: f64) -> Result<Vec<EigenMode>> {
    let estimate = k_max * geo.circumference() / PI;
    let found = modes.len();
    if (found as f64 - estimate).abs() > WEYL_TOLERANCE {
        return Err(Error::SpectralDiagnostic {
            found,
            estimate,
            tolerance: WEYL_TOLERANCE,
        });
    }
    Ok(modes)
}

// ---------------------------------------------------------------------------
// overlap kernel

/// Hermitian matrix of region-A overlaps `<phi_i | P_A | phi_j>` between
/// eigenmodes. As a compression of an orthogonal projector onto an
/// orthonormal family it is a contraction: every eigenvalue lies in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct OverlapKernel {
    n: usize,
    data: Vec<C64>,
}

impl OverlapKernel {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    /// Row slice, used by the propagation hot loop.
    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Build the region-A overlap kernel for a family of modes. The strict upper
/// triangle is computed in parallel and mirrored, so Hermiticity holds
/// exactly; the diagonal is real by construction and clamped of its rounding
/// dust.
pub fn overlap_kernel(modes: &[EigenMode], geo: &RingGeometry) -> OverlapKernel {
    let n = modes.len();
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| region_a_overlap(&modes[i], &modes[j], geo))
                .collect()
        })
        .collect();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for (off, &v) in rows[i].iter().enumerate() {
            let j = i + off;
            if i == j {
                data[i * n + i] = C64::new(v.re, 0.0);
            } else {
                data[i * n + j] = v;
                data[j * n + i] = v.conj();
            }
        }
    }
    OverlapKernel { n, data }
}

// ---------------------------------------------------------------------------
// serialization

/// Write the mode table as CSV: one row per mode, shortest-roundtrip floats.
pub fn write_modes_csv<W: std::io::Write>(out: &mut W, modes: &[EigenMode]) -> std::io::Result<()> {
    writeln!(
        out,
        "index,k,E,alphaA_re,alphaA_im,betaA_re,betaA_im,alphaB_re,alphaB_im,betaB_re,betaB_im"
    )?;
    for (i, m) in modes.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            i,
            m.k,
            m.energy,
            m.amp_a.0.re,
            m.amp_a.0.im,
            m.amp_a.1.re,
            m.amp_a.1.im,
            m.amp_b.0.re,
            m.amp_b.0.im,
            m.amp_b.1.re,
            m.amp_b.1.im
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(l_a: f64, l_b: f64, v1: f64, v2: f64) -> RingGeometry {
        RingGeometry::new(l_a, l_b, v1, v2).unwrap()
    }

    /// Quadrature oracle for region overlaps: plain Simpson on the evaluated
    /// wavefunctions, nothing shared with the closed-form path.
    fn overlap_quadrature(
        u: &EigenMode,
        v: &EigenMode,
        geo: &RingGeometry,
        a: f64,
        b: f64,
        n: usize,
    ) -> C64 {
        let n = if n % 2 == 0 { n } else { n + 1 };
        let h = (b - a) / n as f64;
        let mut sum = C64::new(0.0, 0.0);
        for i in 0..=n {
            let x = a + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            sum += w * u.eval(geo, x).conj() * v.eval(geo, x);
        }
        sum * (h / 3.0)
    }

    #[test]
    fn geometry_validation_and_wrapping() {
        assert!(RingGeometry::new(-1.0, 2.0, 0.0, 0.0).is_err());
        assert!(RingGeometry::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(RingGeometry::new(1.0, 2.0, -0.5, 0.0).is_err());
        assert!(RingGeometry::new(1.0, 2.0, f64::NAN, 0.0).is_err());
        let g = geo(2.0, 4.0, 1.0, 3.0);
        assert_eq!(g.circumference(), 6.0);
        assert_eq!(g.region_a(), (-1.0, 1.0));
        assert!((g.canonical_x(-1.0 - 1e-9) - (5.0 - 1e-9)).abs() < 1e-12);
        assert!((g.canonical_x(7.0) - 1.0).abs() < 1e-12);
        assert!((g.canonical_x(-7.5) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn quantization_free_ring_is_shifted_cosine() {
        let g = geo(3.0, 7.0, 0.0, 0.0);
        for i in 1..200 {
            let k = 0.05 * i as f64;
            let want = 2.0 * (k * 10.0).cos() - 2.0;
            assert!(
                (quantization_function(&g, k) - want).abs() < 1e-9,
                "free quantization wrong at k = {k}"
            );
        }
    }

    #[test]
    fn quantization_single_barrier_closed_form() {
        // with one barrier the trace collapses to a textbook transcendental:
        // f = 2 cos(kL) + (v/k) sin(kL) - 2
        let g = geo(2.5, 5.5, 4.0, 0.0);
        let l = g.circumference();
        for i in 1..300 {
            let k = 0.04 * i as f64;
            let want = 2.0 * (k * l).cos() + (4.0 / k) * (k * l).sin() - 2.0;
            let got = quantization_function(&g, k);
            assert!(
                (got - want).abs() < 1e-9 * (1.0 + want.abs()),
                "single-barrier mismatch at k = {k}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn monodromy_has_unit_determinant_and_real_trace() {
        let g = geo(1.7, 3.9, 2.0, 11.0);
        for i in 1..100 {
            let k = 0.11 * i as f64;
            let m = monodromy(&g, k);
            let det = m.a * m.d - m.b * m.c;
            assert!((det - C64::new(1.0, 0.0)).norm() < 1e-12 * m.frobenius().powi(2).max(1.0));
            assert!(m.trace().im.abs() < 1e-12 * (1.0 + m.trace().norm()));
        }
    }

    #[test]
    fn free_spectrum_is_analytic() {
        let g = geo(2.0, 8.0, 0.0, 0.0);
        let modes = find_modes(&g, 5.0).unwrap();
        let l = 10.0;
        // constant mode + doublets at 2 pi n / L
        let n_levels = (5.0 * l / (2.0 * PI)).floor() as usize;
        assert_eq!(modes.len(), 1 + 2 * n_levels);
        assert_eq!(modes[0].k, 0.0);
        for (lvl, pair) in modes[1..].chunks(2).enumerate() {
            let k_want = 2.0 * PI * (lvl + 1) as f64 / l;
            for m in pair {
                assert!((m.k - k_want).abs() < 1e-12);
                assert!((m.energy - k_want * k_want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn modes_are_ring_orthonormal_with_barriers() {
        let g = geo(2.0, 7.7, 3.0, 8.5);
        let modes = find_modes(&g, 12.0).unwrap();
        assert!(modes.len() > 20);
        for i in 0..modes.len() {
            for j in i..modes.len() {
                let ov = ring_overlap(&modes[i], &modes[j], &g);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (ov - C64::new(want, 0.0)).norm() < 1e-10,
                    "Gram defect at ({i}, {j}): {ov}"
                );
            }
        }
    }

    #[test]
    fn eigenmode_satisfies_matching_conditions() {
        let g = geo(1.3, 4.1, 6.0, 2.5);
        let modes = find_modes(&g, 9.0).unwrap();
        let (x1, _) = (0.5 * g.l_a, ());
        let x2 = -0.5 * g.l_a;
        for m in &modes {
            let scale = 1.0 + m.k;
            // continuity at the barrier x = +L_A/2
            let from_a = m.amp_a.0 * C64::from_polar(1.0, m.k * x1)
                + m.amp_a.1 * C64::from_polar(1.0, -m.k * x1);
            let from_b = m.amp_b.0 * C64::from_polar(1.0, m.k * x1)
                + m.amp_b.1 * C64::from_polar(1.0, -m.k * x1);
            assert!((from_a - from_b).norm() < 1e-9, "discontinuous at +L_A/2, k = {}", m.k);
            // derivative jump v1 psi there
            let da = C64::new(0.0, m.k)
                * (m.amp_a.0 * C64::from_polar(1.0, m.k * x1)
                    - m.amp_a.1 * C64::from_polar(1.0, -m.k * x1));
            let db = C64::new(0.0, m.k)
                * (m.amp_b.0 * C64::from_polar(1.0, m.k * x1)
                    - m.amp_b.1 * C64::from_polar(1.0, -m.k * x1));
            assert!(
                ((db - da) - g.v1 * from_a).norm() < 1e-8 * scale,
                "derivative jump at +L_A/2 wrong for k = {}",
                m.k
            );
            // periodic closure at the second barrier: value continuous,
            // derivative jumps by v2 psi going from B back onto A
            let x_wrap = x1 + g.l_b;
            let b_val = m.amp_b.0 * C64::from_polar(1.0, m.k * x_wrap)
                + m.amp_b.1 * C64::from_polar(1.0, -m.k * x_wrap);
            let a_val = m.amp_a.0 * C64::from_polar(1.0, m.k * x2)
                + m.amp_a.1 * C64::from_polar(1.0, -m.k * x2);
            assert!((b_val - a_val).norm() < 1e-9, "discontinuous at -L_A/2, k = {}", m.k);
            let b_der = C64::new(0.0, m.k)
                * (m.amp_b.0 * C64::from_polar(1.0, m.k * x_wrap)
                    - m.amp_b.1 * C64::from_polar(1.0, -m.k * x_wrap));
            let a_der = C64::new(0.0, m.k)
                * (m.amp_a.0 * C64::from_polar(1.0, m.k * x2)
                    - m.amp_a.1 * C64::from_polar(1.0, -m.k * x2));
            assert!(
                ((a_der - b_der) - g.v2 * a_val).norm() < 1e-8 * scale,
                "derivative jump at -L_A/2 wrong for k = {}",
                m.k
            );
        }
    }

    #[test]
    fn weyl_count_tracks_estimate() {
        for (g, k_max) in [
            (geo(2.0, 7.7, 3.0, 8.5), 15.0),
            (geo(1.0, 1.5, 120.0, 0.3), 25.0),
            (geo(5.0, 2.0, 1e6, 1e6), 10.0),
        ] {
            let modes = find_modes(&g, k_max).unwrap();
            let estimate = k_max * g.circumference() / PI;
            assert!(
                (modes.len() as f64 - estimate).abs() <= WEYL_TOLERANCE,
                "count {} vs estimate {estimate}",
                modes.len()
            );
        }
    }

    #[test]
    fn strong_barriers_approach_box_spectra() {
        // at v -> infinity the ring decouples into hard boxes of lengths
        // L_A and L_B with spectra m pi / length
        let g = geo(1.0, 2.0, 1e8, 1e8);
        let modes = find_modes(&g, 9.0).unwrap();
        let mut expected: Vec<f64> = Vec::new();
        for m in 1..=2 {
            expected.push(m as f64 * PI / 1.0);
        }
        for m in 1..=5 {
            expected.push(m as f64 * PI / 2.0);
        }
        for want in expected {
            let nearest = modes
                .iter()
                .map(|m| (m.k - want).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(
                nearest < 1e-4 * want,
                "no mode near box level k = {want} (closest off by {nearest})"
            );
        }
    }

    #[test]
    fn vanishing_barriers_recover_free_doublets() {
        // weak enough that the monodromy is indistinguishable from the
        // identity at every surviving level: the doublet branch must fire
        let g = geo(2.0, 8.0, 1e-13, 1e-13);
        let free = find_modes(&geo(2.0, 8.0, 0.0, 0.0), 4.0).unwrap();
        let modes = find_modes(&g, 4.0).unwrap();
        // the constant mode of the free ring becomes a low-k root
        assert_eq!(modes.len(), free.len());
        for (m, f) in modes[1..].iter().zip(&free[1..]) {
            assert!(
                (m.k - f.k).abs() < 1e-7,
                "doublet drifted: {} vs free {}",
                m.k,
                f.k
            );
        }
    }

    #[test]
    fn small_barrier_roots_stay_near_free_levels() {
        // first-order perturbation bounds the shift of every level above the
        // lowest by (v1 + v2)/(k L); the remnant of the constant mode sits
        // near sqrt((v1 + v2)/L)
        let v = 1e-3;
        let g = geo(3.0, 12.0, v, v);
        let l = g.circumference();
        let modes = find_modes(&g, 3.0).unwrap();
        assert!((modes[0].k - (2.0 * v / l).sqrt()).abs() < 0.3 * modes[0].k);
        for m in &modes[1..] {
            let n_star = (m.k * l / (2.0 * PI)).round();
            let k_free = 2.0 * PI * n_star / l;
            let bound = 2.0 * (2.0 * v) / (m.k * l) + 1e-9;
            assert!(
                (m.k - k_free).abs() <= bound,
                "root {} strayed {} from free level {k_free} (bound {bound})",
                m.k,
                (m.k - k_free).abs()
            );
        }
    }

    #[test]
    fn doublet_pair_orders_region_a_weight_first() {
        let g = geo(2.0, 8.0, 0.0, 0.0);
        let modes = find_modes(&g, 4.0).unwrap();
        for pair in modes[1..].chunks(2) {
            let wa = region_a_overlap(&pair[0], &pair[0], &g).re;
            let wb = region_a_overlap(&pair[1], &pair[1], &g).re;
            assert!(wa >= wb - 1e-12, "doublet pair out of order: {wa} < {wb}");
            // complementary weights: the pair together carries 2 L_A / L
            assert!((wa + wb - 2.0 * g.l_a / g.circumference()).abs() < 1e-10);
        }
    }

    #[test]
    fn plane_wave_doublet_overlap_matches_projected_sinc() {
        // [reference value, rechecked by quadrature] complex exponentials on
        // the free ring have region-A overlap sin(L_A dk / 2) / (L dk / 2)
        let g = geo(2.0, 8.0, 0.0, 0.0);
        let l = g.circumference();
        let norm = C64::new(1.0 / l.sqrt(), 0.0);
        let zero = C64::new(0.0, 0.0);
        let mk = |n: u64| EigenMode {
            k: 2.0 * PI * n as f64 / l,
            energy: (2.0 * PI * n as f64 / l).powi(2),
            amp_a: (norm, zero),
            amp_b: (norm, zero),
        };
        let (u, v) = (mk(3), mk(5));
        let dk = u.k - v.k;
        let want = (0.5 * g.l_a * dk).sin() / (0.5 * l * dk);
        let got = region_a_overlap(&u, &v, &g);
        assert!((got - C64::new(want, 0.0)).norm() < 1e-12, "{got} vs {want}");
        let quad = overlap_quadrature(&u, &v, &g, -1.0, 1.0, 40_000);
        assert!((got - quad).norm() < 1e-10);
        // diagonal: the length fraction
        let diag = region_a_overlap(&u, &u, &g);
        assert!((diag - C64::new(g.l_a / l, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn overlaps_match_quadrature_with_barriers() {
        let g = geo(1.3, 4.1, 6.0, 2.5);
        let modes = find_modes(&g, 6.0).unwrap();
        let (lo, hi) = g.region_a();
        for (i, j) in [(0usize, 0usize), (0, 3), (2, 5), (4, 4), (1, 6)] {
            let got = region_a_overlap(&modes[i], &modes[j], &g);
            let want = overlap_quadrature(&modes[i], &modes[j], &g, lo, hi, 60_000);
            assert!(
                (got - want).norm() < 1e-9,
                "overlap ({i}, {j}) = {got} vs quadrature {want}"
            );
        }
    }

    #[test]
    fn kernel_is_hermitian_contraction() {
        let g = geo(2.0, 7.7, 3.0, 8.5);
        let modes = find_modes(&g, 10.0).unwrap();
        let kernel = overlap_kernel(&modes, &g);
        let n = kernel.dim();
        assert_eq!(n, modes.len());
        for i in 0..n {
            let d = kernel.get(i, i);
            assert_eq!(d.im, 0.0);
            assert!((-1e-12..=1.0 + 1e-12).contains(&d.re), "diagonal {d} escapes [0,1]");
            for j in 0..n {
                assert_eq!(kernel.get(i, j), kernel.get(j, i).conj());
                // Schwarz bound within the projector compression
                assert!(
                    kernel.get(i, j).norm_sqr()
                        <= kernel.get(i, i).re * kernel.get(j, j).re + 1e-12
                );
            }
        }
        // complement check: region A weight plus bath weight is the identity
        for i in 0..n {
            let bath = 1.0 - kernel.get(i, i).re;
            let (lo, _) = g.region_a();
            let direct = segment_overlap(
                modes[i].amp_b,
                modes[i].k,
                modes[i].amp_b,
                modes[i].k,
                -lo,
                -lo + g.l_b,
            )
            .re;
            assert!((bath - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn modes_csv_layout() {
        let g = geo(2.0, 8.0, 0.0, 0.0);
        let modes = find_modes(&g, 2.0).unwrap();
        let mut buf = Vec::new();
        write_modes_csv(&mut buf, &modes).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "index,k,E,alphaA_re,alphaA_im,betaA_re,betaA_im,alphaB_re,alphaB_im,betaB_re,betaB_im"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), modes.len());
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            assert_eq!(cells.len(), 11);
            assert_eq!(cells[0].parse::<usize>().unwrap(), i);
            let k: f64 = cells[1].parse().unwrap();
            assert_eq!(k, modes[i].k, "shortest-roundtrip parse must be exact");
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let g = geo(1.3, 4.1, 6.0, 2.5);
        let a = find_modes(&g, 8.0).unwrap();
        let b = find_modes(&g, 8.0).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.k.to_bits(), y.k.to_bits());
            assert_eq!(x.amp_a.0.re.to_bits(), y.amp_a.0.re.to_bits());
            assert_eq!(x.amp_a.1.im.to_bits(), y.amp_a.1.im.to_bits());
        }
    }
}
