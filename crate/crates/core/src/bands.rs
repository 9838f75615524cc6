//! Real-axis band structure: discriminant scan, band edges, edge
//! classification and the integrals I₁, I₂, I₃ behind M′(λ).

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat2::{self, C2Matrix};
use crate::output::num;
use crate::propagator::{monodromy, IntegratorOptions, Propagator, SpectralPoint};

/// ‖M − s𝕀‖_F below this is a full-periodic edge.
pub const FULL_PERIODIC_TOL: f64 = 1e-6;
/// Lower end of the band in which classification is refused.
pub const AMBIGUITY_FLOOR: f64 = 1e-8;
/// Allowed |𝔇(λ₀) − 2s| at an accepted edge.
pub const EDGE_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandOptions {
    /// Number of scan points across the window.
    pub n_scan: usize,
    /// Uniform nodes for the I-integrals.
    pub n_quad: usize,
    pub integrator: IntegratorOptions,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self { n_scan: 2000, n_quad: 4097, integrator: IntegratorOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// M(λ₀) = s𝕀
    FullPeriodic,
    /// M(λ₀) ≠ s𝕀
    Jordan,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::FullPeriodic => "full_periodic",
            EdgeKind::Jordan => "jordan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl IIntegrals {
    /// `[[I₁, I₂], [−I₃, −I₁]]`, so that M′ = M·J.
    pub fn matrix(&self) -> C2Matrix {
        C2Matrix::from_real(self.i1, self.i2, -self.i3, -self.i1)
    }

    /// I₂I₃ − I₁², positive by Cauchy–Schwarz.
    pub fn margin(&self) -> f64 {
        self.i2 * self.i3 - self.i1 * self.i1
    }

    pub fn gamma_limit(&self) -> f64 {
        2.0 * self.margin().max(0.0).sqrt() / (self.i2 + self.i3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEdge {
    pub lambda0: f64,
    /// 𝔇(λ₀) = 2·sign.
    pub sign: i8,
    pub kind: EdgeKind,
    pub gamma_limit: f64,
    pub integrals: IIntegrals,
    /// ‖M(λ₀) − s𝕀‖_F.
    pub distance: f64,
    /// 𝔇′(λ₀).
    pub d_prime: f64,
    /// K with Γ(M(λ₀ + t)) ≲ K√|t|; Jordan edges only.
    pub approach_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandStructure {
    pub window: (f64, f64),
    pub bands: Vec<(f64, f64)>,
    pub gaps: Vec<(f64, f64)>,
    /// All edges in increasing order, touch points included.
    pub edges: Vec<BandEdge>,
    pub warnings: Vec<String>,
}

impl BandStructure {
    fn edge_at(&self, lambda: f64) -> Option<&BandEdge> {
        self.edges.iter().find(|e| e.lambda0 == lambda)
    }

    /// Band table: one row per band with the kinds and Γ-limits of its ends.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "band_index,lambda_lo,lambda_hi,edge_kind_lo,edge_kind_hi,gamma_limit_lo,gamma_limit_hi")?;
        for (i, &(lo, hi)) in self.bands.iter().enumerate() {
            let describe = |x: f64| match self.edge_at(x) {
                Some(e) => (e.kind.as_str(), num(e.gamma_limit)),
                None => ("window", String::new()),
            };
            let (klo, glo) = describe(lo);
            let (khi, ghi) = describe(hi);
            writeln!(w, "{i},{},{},{klo},{khi},{glo},{ghi}", num(lo), num(hi))?;
        }
        Ok(())
    }
}

/// 𝔇(λ) = Tr M(λ).
pub fn discriminant(sp: &SpectralPoint<'_>) -> Result<Complex64> {
    Ok(monodromy(sp)?.trace())
}

fn real_discriminant(sp: &SpectralPoint<'_>, lambda: f64, opts: &IntegratorOptions) -> Result<f64> {
    let sp = sp.with_lambda(Complex64::new(lambda, 0.0));
    Ok(Propagator::new(sp, 0.0, *opts).at(sp.period())?.trace().re)
}

/// 𝔇′(λ) = Tr(M(λ)·J(λ)) at real λ.
pub fn discriminant_derivative(sp: &SpectralPoint<'_>, lambda: f64, n_nodes: usize, opts: &IntegratorOptions) -> Result<f64> {
    let sp = sp.with_lambda(Complex64::new(lambda, 0.0));
    let m = Propagator::new(sp, 0.0, *opts).at(sp.period())?;
    let ii = i_integrals(&sp, n_nodes, opts)?;
    Ok((m * ii.matrix()).trace().re)
}

fn bisect(mut lo: f64, mut hi: f64, mut f_lo: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let tol = 1e-11 * (1.0 + lo.abs().max(hi.abs()));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Composite Simpson on possibly non-uniform nodes.
pub fn simpson(xs: &[f64], fs: &[f64]) -> f64 {
    let n = xs.len();
    match n {
        0 | 1 => return 0.0,
        2 => return 0.5 * (xs[1] - xs[0]) * (fs[0] + fs[1]),
        _ => {}
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = xs[i + 1] - xs[i];
        let h1 = xs[i + 2] - xs[i + 1];
        let s = h0 + h1;
        total += s / 6.0 * ((2.0 - h1 / h0) * fs[i] + s * s / (h0 * h1) * fs[i + 1] + (2.0 - h0 / h1) * fs[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        // last interval from the parabola through the final three nodes
        let h0 = xs[n - 2] - xs[n - 3];
        let h1 = xs[n - 1] - xs[n - 2];
        total += fs[n - 1] * (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1)) + fs[n - 2] * (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0)
            - fs[n - 3] * h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
    }
    total
}

/// I₁, I₂, I₃ at real λ by Simpson's rule on every smooth piece of q.
pub fn i_integrals(sp: &SpectralPoint<'_>, n_nodes: usize, opts: &IntegratorOptions) -> Result<IIntegrals> {
    if sp.lambda.im != 0.0 {
        return Err(Error::InvalidArgument(format!("I-integrals need real lambda, got {}", sp.lambda)));
    }
    let traj = Propagator::new(*sp, 0.0, *opts).trajectory(n_nodes)?;
    let mut breaks = sp.potential.breakpoints();
    breaks.push(sp.period());
    let mut cuts = vec![0usize];
    for (i, x) in traj.nodes.iter().enumerate().skip(1) {
        if breaks.binary_search_by(|b| b.total_cmp(x)).is_ok() {
            cuts.push(i);
        }
    }
    if *cuts.last().unwrap() != traj.len() - 1 {
        cuts.push(traj.len() - 1);
    }

    let (mut f1, mut f2, mut f3) = (Vec::new(), Vec::new(), Vec::new());
    for m in &traj.matrices {
        let (u1, u2, v1, v2) = (m.a11.re, m.a21.re, m.a12.re, m.a22.re);
        f1.push(u1 * v1 + u2 * v2);
        f2.push(v1 * v1 + v2 * v2);
        f3.push(u1 * u1 + u2 * u2);
    }
    let mut out = IIntegrals { i1: 0.0, i2: 0.0, i3: 0.0 };
    for w in cuts.windows(2) {
        let r = w[0]..=w[1];
        let xs = &traj.nodes[r.clone()];
        out.i1 += simpson(xs, &f1[r.clone()]);
        out.i2 += simpson(xs, &f2[r.clone()]);
        out.i3 += simpson(xs, &f3[r]);
    }
    Ok(out)
}

/// ‖(M(λ+h) − M(λ−h))/2h − M(λ)·J(λ)‖_F at real λ.
pub fn mprime_check(sp: &SpectralPoint<'_>, h: f64, n_nodes: usize, opts: &IntegratorOptions) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let at = |l: Complex64| Propagator::new(sp.with_lambda(l), 0.0, *opts).at(sp.period());
    let mp = at(sp.lambda + h)?;
    let mm = at(sp.lambda - h)?;
    let m = at(sp.lambda)?;
    let fd = (mp - mm).scale_real(0.5 / h);
    let ii = i_integrals(sp, n_nodes, opts)?;
    Ok(mat2::frobenius_norm(&(fd - m * ii.matrix())))
}

/// Default finite-difference step of [`mprime_check`].
pub fn default_mprime_step(lambda: f64) -> f64 {
    1e-5 * (1.0 + lambda.abs())
}

/// Classifies a candidate edge λ₀ with 𝔇(λ₀) ≈ 2s.
pub fn classify_edge(sp: &SpectralPoint<'_>, lambda0: f64, sign: i8, opts: &BandOptions) -> Result<BandEdge> {
    let s = f64::from(sign);
    let sp0 = sp.with_lambda(Complex64::new(lambda0, 0.0));
    let m = Propagator::new(sp0, 0.0, opts.integrator).at(sp.period())?;
    let residual = (m.trace() - 2.0 * s).norm();
    if residual > EDGE_RESIDUAL_TOL {
        return Err(Error::NotAnEdge { lambda: lambda0, sign, residual });
    }
    let distance = mat2::frobenius_norm(&(m - C2Matrix::identity().scale_real(s)));
    if (AMBIGUITY_FLOOR..FULL_PERIODIC_TOL).contains(&distance) {
        return Err(Error::ClassificationAmbiguous { lambda: lambda0, distance });
    }
    let integrals = i_integrals(&sp0, opts.n_quad, &opts.integrator)?;
    let d_prime = (m * integrals.matrix()).trace().re;
    let (kind, gamma_limit, approach_constant) = if distance < AMBIGUITY_FLOOR {
        (EdgeKind::FullPeriodic, integrals.gamma_limit(), None)
    } else {
        // |√(𝔇² − 4)| ≈ 2√|𝔇′(λ₀)|·√|t| next to a simple edge
        let k = 2.0 * d_prime.abs().sqrt() / m.a12.norm().max(m.a21.norm());
        (EdgeKind::Jordan, 0.0, Some(k))
    };
    Ok(BandEdge { lambda0, sign, kind, gamma_limit, integrals, distance, d_prime, approach_constant })
}

/// Γ(M(λ₀ + t)) for each offset; `None` where M has a double eigenvalue.
pub fn gamma_near(sp: &SpectralPoint<'_>, lambda0: f64, offsets: &[Complex64]) -> Result<Vec<Option<f64>>> {
    offsets
        .iter()
        .map(|&t| {
            let m = monodromy(&sp.with_lambda(Complex64::new(lambda0, 0.0) + t))?;
            Ok(mat2::gamma_of_matrix(&m))
        })
        .collect()
}

/// Scans 𝔇 over a real window and assembles bands, gaps and edges.
pub fn scan_bands(sp: &SpectralPoint<'_>, window: (f64, f64), opts: &BandOptions) -> Result<BandStructure> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("scan window [{lo}, {hi}] is empty")));
    }
    if opts.n_scan < 100 {
        return Err(Error::InvalidArgument(format!("n_scan must be at least 100, got {}", opts.n_scan)));
    }
    let n = opts.n_scan;
    let step = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|j| if j + 1 == n { hi } else { lo + j as f64 * step }).collect();
    let iopts = opts.integrator;
    let d: Vec<f64> = grid.par_iter().map(|&l| real_discriminant(sp, l, &iopts)).collect::<Result<_>>()?;
    let d_of = |l: f64| real_discriminant(sp, l, &iopts);

    // (λ, s, cell) for every sign change of 𝔇 ∓ 2 between samples
    let mut brackets = Vec::new();
    for j in 0..n - 1 {
        for sign in [1i8, -1] {
            let s = 2.0 * f64::from(sign);
            let (a, b) = (d[j] - s, d[j + 1] - s);
            if a == 0.0 || (a > 0.0) != (b > 0.0) {
                brackets.push((j, sign));
            }
        }
    }
    let mut roots: Vec<(f64, i8, usize)> = brackets
        .par_iter()
        .map(|&(j, sign)| {
            let s = 2.0 * f64::from(sign);
            if d[j] == s {
                return Ok((grid[j], sign, j));
            }
            let r = bisect(grid[j], grid[j + 1], d[j] - s, |l| Ok(d_of(l)? - s))?;
            Ok((r, sign, j))
        })
        .collect::<Result<_>>()?;

    // interior extrema of the samples: touch points or gaps hidden in one cell
    let extrema: Vec<usize> = (1..n - 1).filter(|&j| (d[j] - d[j - 1]) * (d[j + 1] - d[j]) <= 0.0 && d[j].abs() > 1.5).collect();
    let refined: Vec<Option<(f64, f64)>> = extrema
        .par_iter()
        .map(|&j| {
            let dp = |l: f64| discriminant_derivative(sp, l, opts.n_quad, &iopts);
            let (a, b) = (grid[j - 1], grid[j + 1]);
            let fa = dp(a)?;
            let fb = dp(b)?;
            if (fa > 0.0) == (fb > 0.0) && fa != 0.0 && fb != 0.0 {
                return Ok(None);
            }
            let x = if fa == 0.0 { a } else { bisect(a, b, fa, dp)? };
            Ok(Some((x, d_of(x)?)))
        })
        .collect::<Result<_>>()?;

    let mut touch = Vec::new();
    let mut warnings = Vec::new();
    for (&j, r) in extrema.iter().zip(&refined) {
        let Some((x, dx)) = *r else { continue };
        if dx.abs() < 2.0 - EDGE_RESIDUAL_TOL {
            continue;
        }
        let sign: i8 = if dx > 0.0 { 1 } else { -1 };
        let s = 2.0 * f64::from(sign);
        if (dx - s).abs() <= EDGE_RESIDUAL_TOL {
            touch.push((x, sign));
            continue;
        }
        // a gap between two roots that the samples straddle on one side only
        for (a, b) in [(grid[j - 1], x), (x, grid[j + 1])] {
            let end = if a == x { b } else { a };
            let fe = d_of(end)? - s;
            if (fe > 0.0) == (dx - s > 0.0) {
                continue;
            }
            let r = bisect(a, b, d_of(a)? - s, |l| Ok(d_of(l)? - s))?;
            let cell = (((r - lo) / step).floor() as usize).min(n - 2);
            if !roots.iter().any(|&(q, sg, _)| sg == sign && (q - r).abs() <= 1e-9 * (1.0 + r.abs())) {
                roots.push((r, sign, cell));
            }
        }
    }
    touch.sort_by(|p, q| p.0.total_cmp(&q.0));
    touch.dedup_by(|p, q| (p.0 - q.0).abs() <= 1e-9 * (1.0 + p.0.abs()));
    // sign changes produced by roundoff right at a touch point
    roots.retain(|&(r, _, _)| !touch.iter().any(|&(t, _)| (t - r).abs() <= 1e-7 * (1.0 + r.abs())));
    roots.sort_by(|p, q| p.0.total_cmp(&q.0));

    for w in roots.windows(2) {
        if w[0].2 == w[1].2 {
            warnings.push(format!("scan resolution: edges {} and {} fall in one scan cell; increase n_scan", num(w[0].0), num(w[1].0)));
        }
    }

    let mut candidates: Vec<(f64, i8, bool)> =
        roots.iter().map(|&(r, s, _)| (r, s, false)).chain(touch.iter().map(|&(t, s)| (t, s, true))).collect();
    candidates.sort_by(|p, q| p.0.total_cmp(&q.0));
    let edges: Vec<BandEdge> = candidates.par_iter().map(|&(l, s, _)| classify_edge(sp, l, s, opts)).collect::<Result<_>>()?;

    // walk the window toggling band/gap at every edge that is not a touch point
    let mut in_band = d[0].abs() <= 2.0;
    let mut start = lo;
    let (mut bands, mut gaps) = (Vec::new(), Vec::new());
    for (e, &(_, _, is_touch)) in edges.iter().zip(&candidates) {
        if is_touch {
            continue;
        }
        let x = e.lambda0;
        if x > start {
            if in_band { &mut bands } else { &mut gaps }.push((start, x));
        }
        start = x;
        in_band = !in_band;
    }
    if hi > start {
        if in_band { &mut bands } else { &mut gaps }.push((start, hi));
    }
    Ok(BandStructure { window, bands, gaps, edges, warnings })
}
