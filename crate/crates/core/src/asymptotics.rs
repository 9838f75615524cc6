//! Large-|Im λ| behaviour along vertical lines λ = μ + iα: the scaled
//! fundamental system against its two-term reference, the quasimomentum,
//! Γ(M) and γ±, with fitted decay exponents.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::{self, FloquetOptions};
use crate::mat2::{self, pauli::SIGMA2, C2Matrix};
use crate::output::num;
use crate::potential::PeriodicPotential;
use crate::propagator::{IntegratorOptions, Propagator, SpectralPoint};

/// Error sequences whose every entry is below this are exact up to roundoff.
pub const EXACT_FLOOR: f64 = 1e-9;
/// A fitted exponent at or below this counts as O(1/α) decay.
pub const DECAY_THRESHOLD: f64 = -0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceForm {
    /// `½(e^{iθ} + e^{−2αx}e^{−iθ})𝕀 + ½(−e^{iθ} + e^{−2αx}e^{−iθ})σ₂`
    TwoTerm,
    /// `½e^{iθ}(𝕀 − σ₂)`
    OneTerm,
}

/// Reference for `e^{−αx} Φ(x, μ + iα)` with θ = Q(x) − μx.
pub fn phi_reference(pot: &PeriodicPotential, mu: f64, alpha: f64, x: f64, form: ReferenceForm) -> Result<C2Matrix> {
    let theta = pot.antiderivative(x)? - mu * x;
    let e1 = Complex64::from_polar(1.0, theta);
    let half = Complex64::new(0.5, 0.0);
    Ok(match form {
        ReferenceForm::TwoTerm => {
            let e2 = Complex64::from_polar((-2.0 * alpha * x).exp(), -theta);
            C2Matrix::identity().scale(half * (e1 + e2)) + SIGMA2.scale(half * (e2 - e1))
        }
        ReferenceForm::OneTerm => (C2Matrix::identity() - SIGMA2).scale(half * e1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRow {
    pub alpha: f64,
    pub phi_err: Option<f64>,
    pub k_err: Option<f64>,
    pub gamma_err: Option<f64>,
    pub gpm_err: Option<f64>,
    pub vpm_err: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Exponents {
    pub phi: Option<f64>,
    pub k: Option<f64>,
    pub gamma: Option<f64>,
    pub gpm: Option<f64>,
    pub vpm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub mu: f64,
    pub rows: Vec<AsymptoticRow>,
    pub exponents: Exponents,
}

/// Verdict on one error family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// All errors below [`EXACT_FLOOR`].
    Exact,
    Rate(f64),
    NotComputed,
}

impl Decay {
    pub fn passes(self) -> bool {
        match self {
            Decay::Exact => true,
            Decay::Rate(r) => r <= DECAY_THRESHOLD,
            Decay::NotComputed => false,
        }
    }
}

impl AsymptoticReport {
    pub fn alphas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.alpha).collect()
    }

    fn column(&self, pick: impl Fn(&AsymptoticRow) -> Option<f64>) -> Option<Vec<f64>> {
        self.rows.iter().map(pick).collect()
    }

    fn decay_of(&self, pick: impl Fn(&AsymptoticRow) -> Option<f64>) -> Decay {
        let Some(errs) = self.column(pick) else { return Decay::NotComputed };
        let tail = &errs[errs.len() / 2..];
        if tail.iter().all(|&e| e < EXACT_FLOOR) {
            return Decay::Exact;
        }
        match fit_exponent(&self.alphas(), &errs) {
            Some(r) => Decay::Rate(r),
            None => Decay::NotComputed,
        }
    }

    /// (phi, k, gamma, gpm, vpm) verdicts.
    pub fn verdicts(&self) -> [Decay; 5] {
        [
            self.decay_of(|r| r.phi_err),
            self.decay_of(|r| r.k_err),
            self.decay_of(|r| r.gamma_err),
            self.decay_of(|r| r.gpm_err),
            self.decay_of(|r| r.vpm_err),
        ]
    }

    fn merge(mut self, other: &AsymptoticReport) -> Self {
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            a.phi_err = a.phi_err.or(b.phi_err);
            a.k_err = a.k_err.or(b.k_err);
            a.gamma_err = a.gamma_err.or(b.gamma_err);
            a.gpm_err = a.gpm_err.or(b.gpm_err);
            a.vpm_err = a.vpm_err.or(b.vpm_err);
        }
        self.refit();
        self
    }

    fn refit(&mut self) {
        let alphas = self.alphas();
        let fit = |col: Option<Vec<f64>>| col.and_then(|e| fit_exponent(&alphas, &e));
        self.exponents = Exponents {
            phi: fit(self.column(|r| r.phi_err)),
            k: fit(self.column(|r| r.k_err)),
            gamma: fit(self.column(|r| r.gamma_err)),
            gpm: fit(self.column(|r| r.gpm_err)),
            vpm: fit(self.column(|r| r.vpm_err)),
        };
    }

    /// Rows `(alpha, phi_err, k_err, gamma_err, gpm_err, vpm_err)` and a
    /// trailing summary line with the fitted exponents.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        writeln!(w, "alpha,phi_err,k_err,gamma_err,gpm_err,vpm_err")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", num(r.alpha), opt(r.phi_err), opt(r.k_err), opt(r.gamma_err), opt(r.gpm_err), opt(r.vpm_err))?;
        }
        let e = &self.exponents;
        writeln!(w, "# exponents,{},{},{},{},{}", opt(e.phi), opt(e.k), opt(e.gamma), opt(e.gpm), opt(e.vpm))
    }
}

/// Least-squares slope of ln(err) against ln(α) over the last half of the
/// samples; `None` if fewer than two usable points remain.
pub fn fit_exponent(alphas: &[f64], errs: &[f64]) -> Option<f64> {
    let start = alphas.len() / 2;
    let pts: Vec<(f64, f64)> =
        alphas[start..].iter().zip(&errs[start..]).filter(|(_, &e)| e > 0.0 && e.is_finite()).map(|(&a, &e)| (a.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `α₀·2^j` for `j = 0..n`.
pub fn doubling_alphas(alpha0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| alpha0 * 2f64.powi(j as i32)).collect()
}

fn check_alphas(mass: f64, pot: &PeriodicPotential, alphas: &[f64]) -> Result<()> {
    let min = mass * mass * pot.period() + 1.0;
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("no alpha values given".into()));
    }
    for w in alphas.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument("alpha values must be increasing".into()));
        }
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a >= min && a.is_finite())) {
        return Err(Error::InvalidArgument(format!("alpha = {a} is below m^2 a + 1 = {min}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticOptions {
    /// Uniform x-nodes for the sup in the Φ comparison.
    pub n_x: usize,
    pub floquet: FloquetOptions,
    pub form: ReferenceForm,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        Self { n_x: 2048, floquet: FloquetOptions::default(), form: ReferenceForm::TwoTerm }
    }
}

fn tight() -> IntegratorOptions {
    IntegratorOptions { atol: 1e-13, rtol: 1e-12, ..IntegratorOptions::default() }
}

/// sup over the x-grid of ‖e^{−αx}Φ(x, μ+iα) − reference‖_F for each α.
pub fn verify_expansion(pot: &PeriodicPotential, mass: f64, mu: f64, alphas: &[f64], opts: &AsymptoticOptions) -> Result<AsymptoticReport> {
    check_alphas(mass, pot, alphas)?;
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let sp = SpectralPoint::new(Complex64::new(mu, alpha), mass, pot)?;
            let traj = Propagator::new(sp, alpha, tight()).trajectory(opts.n_x)?;
            let mut err = 0.0f64;
            for (&x, m) in traj.nodes.iter().zip(&traj.matrices) {
                let r = phi_reference(pot, mu, alpha, x, opts.form)?;
                err = err.max(mat2::frobenius_norm(&(*m - r)));
            }
            Ok(AsymptoticRow { alpha, phi_err: Some(err), k_err: None, gamma_err: None, gpm_err: None, vpm_err: None })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = AsymptoticReport { mu, rows, exponents: Exponents::default() };
    report.refit();
    Ok(report)
}

/// Quasimomentum, Γ(M), γ± and eigenvector deviations for each α.
pub fn verify_floquet_limits(
    pot: &PeriodicPotential,
    mass: f64,
    mu: f64,
    alphas: &[f64],
    opts: &AsymptoticOptions,
) -> Result<AsymptoticReport> {
    check_alphas(mass, pot, alphas)?;
    let a = pot.period();
    let qa = pot.antiderivative(a)?;
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let sp = SpectralPoint::new(Complex64::new(mu, alpha), mass, pot)?;
            let fo = FloquetOptions { shift: Some(alpha), integrator: tight(), ..opts.floquet };
            let fd = floquet::floquet_data_with(&sp, &fo)?;
            let pp = floquet::periodic_parts_with(&sp, &fd, &fo)?;
            let mut diff = fd.k - Complex64::new(mu - qa / a, alpha);
            let period = 2.0 * PI / a;
            diff.re -= period * (diff.re / period).round();
            let vpm = mat2::projective_distance(&fd.v_plus, &[one, -i]).max(mat2::projective_distance(&fd.v_minus, &[one, i]));
            Ok(AsymptoticRow {
                alpha,
                phi_err: None,
                k_err: Some(diff.norm()),
                gamma_err: Some((fd.gamma - 1.0).abs()),
                gpm_err: Some((pp.gamma_plus - 1.0).abs().max((pp.gamma_minus - 1.0).abs())),
                vpm_err: Some(vpm),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = AsymptoticReport { mu, rows, exponents: Exponents::default() };
    report.refit();
    Ok(report)
}

/// Both verifications merged into one report.
pub fn verify_asymptotics(
    pot: &PeriodicPotential,
    mass: f64,
    mu: f64,
    alphas: &[f64],
    opts: &AsymptoticOptions,
) -> Result<AsymptoticReport> {
    let expansion = verify_expansion(pot, mass, mu, alphas, opts)?;
    let limits = verify_floquet_limits(pot, mass, mu, alphas, opts)?;
    Ok(expansion.merge(&limits))
}
