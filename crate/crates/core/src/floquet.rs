//! Floquet data of the periodic problem: discriminant, multipliers,
//! quasimomentum, Floquet eigenvectors and the periodic parts φ±.
//!
//! Everything is computed from a possibly scaled monodromy
//! `M_s = e^{−sa} M(λ)` so that large |Im λ| does not overflow. The
//! multiplier is kept as `Log ρ = sa + Log ρ_s`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::{self, pauli::SIGMA3, C2Matrix, C2Vector};
use crate::propagator::{IntegratorOptions, Propagator, SpectralPoint, Trajectory};

/// Absolute distance of 𝔇 from ±2 below which the multipliers are treated as double.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Default number of uniform sample nodes for the periodic parts.
pub const DEFAULT_SAMPLES: usize = 2048;

/// Relative periodicity residual above which a warning is raised.
pub const PERIODICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetOptions {
    pub n_samples: usize,
    pub integrator: IntegratorOptions,
    /// φ₋ is taken from the reflected potential once `Im k · a` exceeds this.
    pub reflect_above: f64,
    /// Scaling exponent of the propagation; `None` picks
    /// [`SpectralPoint::default_shift`].
    pub shift: Option<f64>,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self { n_samples: DEFAULT_SAMPLES, integrator: IntegratorOptions::default(), reflect_above: 1.0, shift: None }
    }
}

/// Per-λ Floquet bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetData {
    pub lambda: Complex64,
    pub period: f64,
    /// Scaling exponent `s` of `monodromy_scaled`.
    pub shift: f64,
    /// `e^{−sa} M(λ)`.
    pub monodromy_scaled: C2Matrix,
    /// 𝔇 = Tr M(λ). Not representable (infinite) once `sa` exceeds ~709.
    pub discriminant: Complex64,
    /// Principal-branch logarithm of the multiplier ρ with |ρ| ≥ 1.
    pub log_rho: Complex64,
    /// Quasimomentum, `ρ = e^{−ika}`.
    pub k: Complex64,
    /// Unit eigenvector of M for ρ.
    pub v_plus: C2Vector,
    /// Unit eigenvector of M for 1/ρ.
    pub v_minus: C2Vector,
    /// Γ(M(λ)).
    pub gamma: f64,
    pub on_essential: bool,
}

impl FloquetData {
    pub fn rho(&self) -> Complex64 {
        self.log_rho.exp()
    }

    pub fn monodromy(&self) -> C2Matrix {
        self.monodromy_scaled.scale_real((self.shift * self.period).exp())
    }

    pub fn im_k(&self) -> f64 {
        self.k.im
    }

    /// `Log ρ_s = Log ρ − sa`, the multiplier of the scaled problem.
    pub fn log_rho_scaled(&self) -> Complex64 {
        self.log_rho - self.shift * self.period
    }

    pub fn det_v(&self) -> Complex64 {
        mat2::det_cols(&self.v_plus, &self.v_minus)
    }
}

/// Im k from 𝔇 in closed form:
/// `(1/2a) Arcosh(|𝔇|²/4 + √((1 − |𝔇|²/4)² + (Im 𝔇)²))`.
pub fn imk_formula(d: Complex64, a: f64) -> f64 {
    let r = d.norm();
    if r > 1e150 {
        // Arcosh X = ln 2X + O(X⁻²) and 2X = |𝔇|² (1 + O(|𝔇|⁻²))
        return r.ln() / a;
    }
    let u = 0.25 * r * r - 1.0;
    let y = d.im;
    let root = u.hypot(y);
    // δ = X − 1 without cancellation
    let delta = if u >= 0.0 {
        u + root
    } else if root + u.abs() > 0.0 {
        y * y / (root + u.abs())
    } else {
        0.0
    };
    let delta = delta.max(0.0);
    (delta + (delta * (2.0 + delta)).sqrt()).ln_1p() / (2.0 * a)
}

/// Floquet data with default options.
pub fn floquet_data(sp: &SpectralPoint<'_>) -> Result<FloquetData> {
    floquet_data_with(sp, &FloquetOptions::default())
}

pub fn floquet_data_with(sp: &SpectralPoint<'_>, opts: &FloquetOptions) -> Result<FloquetData> {
    let shift = opts.shift.unwrap_or_else(|| sp.default_shift());
    let a = sp.period();
    let ms = Propagator::new(*sp, shift, opts.integrator).at(a)?;
    floquet_from_monodromy(sp.lambda, a, shift, ms)
}

/// Floquet data from a given scaled monodromy `e^{−shift·a} M(λ)`.
pub fn floquet_from_monodromy(lambda: Complex64, a: f64, shift: f64, ms: C2Matrix) -> Result<FloquetData> {
    let e = (-shift * a).exp();
    let ds = ms.trace();
    let discriminant = ds * (shift * a).exp();

    // μ² − 𝔇_s μ + e^{−2sa} = 0
    let degenerate = (ds - 2.0 * e).norm().min((ds + 2.0 * e).norm()) <= DEGENERACY_TOL * e;
    if degenerate {
        return Err(Error::DegenerateMultiplier { lambda, discriminant });
    }
    let mut sq = ((ds - 2.0 * e) * (ds + 2.0 * e)).sqrt();
    if (ds.conj() * sq).re < 0.0 {
        sq = -sq;
    }
    let big = 0.5 * (ds + sq);
    let small = if big.norm() > 0.0 { e * e / big } else { 0.5 * (ds - sq) };
    let upper = lambda.im >= 0.0;
    let rho_s = if (big.norm() - small.norm()).abs() <= 1e-12 * big.norm() {
        // both multipliers on the same circle: Im ρ ≤ 0 in the upper half-plane
        let prefer_small = if upper { small.im < big.im } else { small.im > big.im };
        if prefer_small {
            small
        } else {
            big
        }
    } else {
        big
    };

    let mut log_rho_s = rho_s.ln();
    if rho_s.im == 0.0 && rho_s.re < 0.0 {
        log_rho_s.im = if upper { -std::f64::consts::PI } else { std::f64::consts::PI };
    }
    let log_rho = log_rho_s + shift * a;
    let k = Complex64::i() * log_rho / a;

    let ep = mat2::eig2(&ms);
    if !ep.distinct {
        return Err(Error::DegenerateMultiplier { lambda, discriminant });
    }
    let (wp, wm) = if (ep.mu1 - rho_s).norm() <= (ep.mu2 - rho_s).norm() { (ep.w1, ep.w2) } else { (ep.w2, ep.w1) };
    let v_plus = mat2::normalize(&wp);
    let v_minus = mat2::normalize(&wm);
    let gamma = mat2::gamma_of_vectors(&v_plus, &v_minus);

    let on_essential = shift == 0.0
        && lambda.im.abs() < 1e-12 * (1.0 + lambda.norm())
        && discriminant.im.abs() <= DEGENERACY_TOL
        && discriminant.re.abs() <= 2.0 + DEGENERACY_TOL;

    Ok(FloquetData { lambda, period: a, shift, monodromy_scaled: ms, discriminant, log_rho, k, v_plus, v_minus, gamma, on_essential })
}

/// A vector-valued function sampled on increasing nodes of [0, a].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub nodes: Vec<f64>,
    pub values: Vec<C2Vector>,
    /// Which nodes belong to the coarse half of the sampling.
    coarse: Vec<bool>,
}

impl SampledField {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(mat2::vnorm)
    }

    /// Sampled maximum of |φ| on the fine and the coarse node set.
    fn sampled_sups(&self) -> (f64, f64) {
        let mut fine = 0.0f64;
        let mut coarse = 0.0f64;
        for (v, &c) in self.values.iter().zip(&self.coarse) {
            let n = mat2::vnorm(v);
            fine = fine.max(n);
            if c {
                coarse = coarse.max(n);
            }
        }
        (fine, coarse)
    }

    /// Richardson-extrapolated sup; never below the sampled maximum.
    pub fn sup(&self) -> f64 {
        let (fine, coarse) = self.sampled_sups();
        fine + (fine - coarse) / 3.0
    }

    fn residual(&self) -> f64 {
        let first = self.values.first().expect("nonempty field");
        let last = self.values.last().expect("nonempty field");
        mat2::vnorm(&[last[0] - first[0], last[1] - first[1]])
    }
}

/// The a-periodic factors φ± of the Floquet solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicParts {
    pub phi_plus: SampledField,
    pub phi_minus: SampledField,
    pub sup_plus: f64,
    pub sup_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// |φ±(a) − φ±(0)|.
    pub residual_plus: f64,
    pub residual_minus: f64,
    /// φ₋ was obtained from the reflected potential.
    pub minus_reflected: bool,
}

impl PeriodicParts {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, res, sup) in [("phi_plus", self.residual_plus, self.sup_plus), ("phi_minus", self.residual_minus, self.sup_minus)] {
            if res > PERIODICITY_TOL * sup {
                out.push(format!("{name} periodicity residual {res:.3e} exceeds {PERIODICITY_TOL:.0e} of its sup {sup:.3e}"));
            }
        }
        out
    }
}

fn use_reflection(fd: &FloquetData, opts: &FloquetOptions) -> bool {
    fd.shift > 0.0 || fd.im_k() * fd.period > opts.reflect_above
}

/// `e^{−x Log ρ_s / a} Φ_s(x) v` along a trajectory.
fn floquet_field(traj: &Trajectory, rate: Complex64, a: f64, v: &C2Vector) -> SampledField {
    let values = traj
        .nodes
        .iter()
        .zip(&traj.matrices)
        .map(|(&x, m)| {
            let f = (-(x / a) * rate).exp();
            let u = m.apply(v);
            [u[0] * f, u[1] * f]
        })
        .collect();
    let coarse = traj.grid_index.iter().map(|g| g.is_none_or(|j| j % 2 == 0)).collect();
    SampledField { nodes: traj.nodes.clone(), values, coarse }
}

/// φ± on `2·n_samples − 1` nodes (the fine grid of one Richardson doubling).
pub fn periodic_parts(sp: &SpectralPoint<'_>, fd: &FloquetData) -> Result<PeriodicParts> {
    periodic_parts_with(sp, fd, &FloquetOptions::default())
}

pub fn periodic_parts_with(sp: &SpectralPoint<'_>, fd: &FloquetData, opts: &FloquetOptions) -> Result<PeriodicParts> {
    if opts.n_samples < 2 {
        return Err(Error::InvalidArgument(format!("n_samples must be at least 2, got {}", opts.n_samples)));
    }
    let a = fd.period;
    let n_fine = 2 * opts.n_samples - 1;
    let rate = fd.log_rho_scaled();
    let traj = Propagator::new(*sp, fd.shift, opts.integrator).trajectory(n_fine)?;
    let mut phi_plus = floquet_field(&traj, rate, a, &fd.v_plus);

    let minus_reflected = use_reflection(fd, opts);
    let mut phi_minus = if minus_reflected {
        // φ₋(x) = σ₃ φ̃₊(a − x) for q̃(x) = q(a − x) with ṽ₊ = σ₃ v₋
        let vt = SIGMA3.apply(&fd.v_minus);
        let reflected_pot;
        let traj_r = if sp.potential.is_reflection_symmetric() {
            traj
        } else {
            reflected_pot = sp.potential.reflected();
            let spr = SpectralPoint { potential: &reflected_pot, ..*sp };
            Propagator::new(spr, fd.shift, opts.integrator).trajectory(n_fine)?
        };
        let tilde = floquet_field(&traj_r, rate, a, &vt);
        SampledField {
            nodes: tilde.nodes.iter().rev().map(|y| a - y).collect(),
            values: tilde.values.iter().rev().map(|w| SIGMA3.apply(w)).collect(),
            coarse: tilde.coarse.into_iter().rev().collect(),
        }
    } else {
        let rate_minus = -(rate + 2.0 * fd.shift * a);
        floquet_field(&traj, rate_minus, a, &fd.v_minus)
    };

    let residual_plus = phi_plus.residual();
    let residual_minus = phi_minus.residual();
    phi_plus.values[0] = fd.v_plus;
    phi_minus.nodes[0] = 0.0;
    phi_minus.values[0] = fd.v_minus;

    let sup_plus = phi_plus.sup();
    let sup_minus = phi_minus.sup();
    let gamma_plus = (mat2::vnorm(&fd.v_plus) / sup_plus).min(1.0);
    let gamma_minus = (mat2::vnorm(&fd.v_minus) / sup_minus).min(1.0);
    Ok(PeriodicParts { phi_plus, phi_minus, sup_plus, sup_minus, gamma_plus, gamma_minus, residual_plus, residual_minus, minus_reflected })
}

/// (γ₊, γ₋).
pub fn gamma_pm(pp: &PeriodicParts) -> (f64, f64) {
    (pp.gamma_plus, pp.gamma_minus)
}

/// C(λ) = ‖φ₊‖_∞ ‖φ₋‖_∞ / |det(v₊, v₋)|.
pub fn c_lambda(pp: &PeriodicParts, fd: &FloquetData) -> Result<f64> {
    let det = fd.det_v().norm();
    if det == 0.0 {
        return Err(Error::DegenerateMultiplier { lambda: fd.lambda, discriminant: fd.discriminant });
    }
    Ok(pp.sup_plus * pp.sup_minus / det)
}

/// φ₊(x) at a single point of [0, a].
pub fn phi_plus_at(sp: &SpectralPoint<'_>, fd: &FloquetData, x: f64, opts: &FloquetOptions) -> Result<C2Vector> {
    let m = Propagator::new(*sp, fd.shift, opts.integrator).at(x)?;
    let f = (-(x / fd.period) * fd.log_rho_scaled()).exp();
    let u = m.apply(&fd.v_plus);
    Ok([u[0] * f, u[1] * f])
}

/// φ₋(x) at a single point of [0, a], normalised as in [`periodic_parts_with`].
pub fn phi_minus_at(sp: &SpectralPoint<'_>, fd: &FloquetData, x: f64, opts: &FloquetOptions) -> Result<C2Vector> {
    let a = fd.period;
    if !(0.0..=a).contains(&x) {
        return Err(Error::Domain { x, period: a });
    }
    let rate = fd.log_rho_scaled();
    if use_reflection(fd, opts) {
        let reflected = sp.potential.reflected();
        let spr = SpectralPoint { potential: &reflected, ..*sp };
        let y = a - x;
        let m = Propagator::new(spr, fd.shift, opts.integrator).at(y)?;
        let f = (-(y / a) * rate).exp();
        let w = m.apply(&SIGMA3.apply(&fd.v_minus));
        Ok(SIGMA3.apply(&[w[0] * f, w[1] * f]))
    } else {
        let m = Propagator::new(*sp, fd.shift, opts.integrator).at(x)?;
        let f = ((x / a) * (rate + 2.0 * fd.shift * a)).exp();
        let u = m.apply(&fd.v_minus);
        Ok([u[0] * f, u[1] * f])
    }
}
