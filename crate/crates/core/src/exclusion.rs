//! Exclusion thresholds F_p(λ), the Green's kernel of the unperturbed
//! operator, and rasterised exclusion maps with level-set contours.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bands::BandStructure;
use crate::error::{Error, Result};
use crate::floquet::{self, FloquetData, FloquetOptions, PeriodicParts};
use crate::mat2::{self, C2Matrix};
use crate::output::num;
use crate::propagator::SpectralPoint;

/// The factor `(Im k)^{(p−1)/p} (p/(2(p−1)))^{(p−1)/p}` that turns F₁ into F_p.
pub fn p_factor(im_k: f64, p: f64) -> f64 {
    if p == 1.0 {
        return 1.0;
    }
    let e = (p - 1.0) / p;
    (e * (im_k.ln() + (p / (2.0 * (p - 1.0))).ln())).exp()
}

/// F_p(λ): ‖V‖_p below this certifies that λ is not an eigenvalue of H₀ + V.
pub fn threshold_f(fd: &FloquetData, pp: &PeriodicParts, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be a finite number >= 1, got {p}")));
    }
    if fd.on_essential {
        return Err(Error::EssentialSpectrum { lambda: fd.lambda });
    }
    let f1 = fd.gamma * pp.gamma_plus * pp.gamma_minus;
    Ok(f1 * p_factor(fd.im_k(), p))
}

/// Floquet data, periodic parts and F_p at one point.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub floquet: FloquetData,
    pub parts: PeriodicParts,
    /// `None` on the essential spectrum.
    pub f_p: Option<f64>,
    pub c_lambda: f64,
}

pub fn evaluate_point(sp: &SpectralPoint<'_>, p: f64, opts: &FloquetOptions) -> Result<PointEval> {
    let fd = floquet::floquet_data_with(sp, opts)?;
    let pp = floquet::periodic_parts_with(sp, &fd, opts)?;
    let f_p = if fd.on_essential { None } else { Some(threshold_f(&fd, &pp, p)?) };
    let c_lambda = floquet::c_lambda(&pp, &fd)?;
    Ok(PointEval { floquet: fd, parts: pp, f_p, c_lambda })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensEval {
    pub x: f64,
    pub t: f64,
    pub lambda: Complex64,
    pub g: C2Matrix,
    pub frob: f64,
    /// `e^{−Im k|t−x|} |φ(x)| |φ(t)| / |det(v₊, v₋)|`.
    pub frob_closed_form: f64,
}

/// G(x, t, λ) for real x ≠ t, built from the periodic parts.
pub fn greens_kernel(sp: &SpectralPoint<'_>, fd: &FloquetData, x: f64, t: f64, opts: &FloquetOptions) -> Result<GreensEval> {
    if x == t {
        return Err(Error::DiagonalEvaluation { x });
    }
    if fd.on_essential {
        return Err(Error::EssentialSpectrum { lambda: fd.lambda });
    }
    let pot = sp.potential;
    let (xr, tr) = (pot.reduce(x), pot.reduce(t));
    let (left, right) = if t > x {
        (floquet::phi_plus_at(sp, fd, xr, opts)?, floquet::phi_minus_at(sp, fd, tr, opts)?)
    } else {
        (floquet::phi_minus_at(sp, fd, xr, opts)?, floquet::phi_plus_at(sp, fd, tr, opts)?)
    };
    let det = fd.det_v();
    let d = (t - x).abs();
    let factor = -(Complex64::i() * fd.k * d).exp() / det;
    let g = C2Matrix::outer(&left, &right).scale(factor);
    let frob_closed_form = (-fd.im_k() * d).exp() * mat2::vnorm(&left) * mat2::vnorm(&right) / det.norm();
    Ok(GreensEval { x, t, lambda: fd.lambda, g, frob: mat2::frobenius_norm(&g), frob_closed_form })
}

/// `C(λ)·(4/(r′ Im k))^{2/r′}` bounding R_r(λ): L^r → L^{r′}.
pub fn resolvent_bound(fd: &FloquetData, pp: &PeriodicParts, r: f64) -> Result<f64> {
    if !(r > 1.0 && r <= 2.0) {
        return Err(Error::InvalidArgument(format!("r must lie in (1, 2], got {r}")));
    }
    if fd.on_essential || fd.im_k() <= 0.0 {
        return Err(Error::EssentialSpectrum { lambda: fd.lambda });
    }
    let rp = r / (r - 1.0);
    Ok(floquet::c_lambda(pp, fd)? * (4.0 / (rp * fd.im_k())).powf(2.0 / rp))
}

/// Rectangle `[re_lo, re_hi] × [im_lo, im_hi]` of the λ-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Window {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Result<Self> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ok(re) || !ok(im) {
            return Err(Error::InvalidArgument(format!("window {re:?} x {im:?} is empty")));
        }
        Ok(Self { re, im })
    }

    fn coord(range: (f64, f64), i: usize, n: usize) -> f64 {
        if i + 1 == n {
            range.1
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFlag {
    Ok,
    Essential,
    Degenerate,
    /// Any other numerical failure at this node.
    Failed,
}

impl CellFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::Essential => "essential",
            CellFlag::Degenerate => "degenerate",
            CellFlag::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lambda: Complex64,
    pub flag: CellFlag,
    pub f_p: Option<f64>,
    pub im_k: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_plus: Option<f64>,
    pub gamma_minus: Option<f64>,
}

/// F_p sampled on the `nx × ny` nodes of a window (edges included).
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionGrid {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub p: f64,
    /// Row-major in Im λ: `cells[j·nx + i]` sits at (re_i, im_j).
    pub cells: Vec<Cell>,
}

fn evaluate_cell(sp: &SpectralPoint<'_>, lambda: Complex64, p: f64, opts: &FloquetOptions) -> Cell {
    let empty = |flag| Cell { lambda, flag, f_p: None, im_k: None, gamma: None, gamma_plus: None, gamma_minus: None };
    let fd = match floquet::floquet_data_with(&sp.with_lambda(lambda), opts) {
        Ok(fd) => fd,
        Err(Error::DegenerateMultiplier { .. }) => return empty(CellFlag::Degenerate),
        Err(_) => return empty(CellFlag::Failed),
    };
    let Ok(pp) = floquet::periodic_parts_with(&sp.with_lambda(lambda), &fd, opts) else {
        return empty(CellFlag::Failed);
    };
    let (flag, f_p) = if fd.on_essential {
        (CellFlag::Essential, None)
    } else {
        match threshold_f(&fd, &pp, p) {
            Ok(f) => (CellFlag::Ok, Some(f)),
            Err(_) => return empty(CellFlag::Failed),
        }
    };
    Cell {
        lambda,
        flag,
        f_p,
        im_k: Some(fd.im_k()),
        gamma: Some(fd.gamma),
        gamma_plus: Some(pp.gamma_plus),
        gamma_minus: Some(pp.gamma_minus),
    }
}

impl ExclusionGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.nx + i]
    }

    /// Nodes with F_p > vnorm, certified free of eigenvalues.
    pub fn excluded_count(&self, vnorm: f64) -> usize {
        self.cells.iter().filter(|c| c.f_p.is_some_and(|f| f > vnorm)).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re_lambda,im_lambda,F_p,Im_k,Gamma,gamma_plus,gamma_minus,flag")?;
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                num(c.lambda.re),
                num(c.lambda.im),
                opt(c.f_p),
                opt(c.im_k),
                opt(c.gamma),
                opt(c.gamma_plus),
                opt(c.gamma_minus),
                c.flag.as_str()
            )?;
        }
        Ok(())
    }
}

/// Evaluates F_p over the window in parallel; per-node failures become flags.
pub fn exclusion_grid(
    sp: &SpectralPoint<'_>,
    window: Window,
    nx: usize,
    ny: usize,
    p: f64,
    opts: &FloquetOptions,
) -> Result<ExclusionGrid> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("grid needs nx, ny >= 2, got {nx} x {ny}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be a finite number >= 1, got {p}")));
    }
    let cells = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            let lambda = Complex64::new(Window::coord(window.re, i, nx), Window::coord(window.im, j, ny));
            evaluate_cell(sp, lambda, p, opts)
        })
        .collect();
    Ok(ExclusionGrid { window, nx, ny, p, cells })
}

/// A grid edge: horizontal from (i, j) to (i+1, j) or vertical from (i, j) to (i, j+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeId {
    H(usize, usize),
    V(usize, usize),
}

/// Level-set polylines of F_p at `level` by marching squares.
///
/// Squares with a corner that is not `ok` are skipped; saddles are split
/// according to the mean of the four corners.
pub fn contours(grid: &ExclusionGrid, level: f64) -> Vec<Vec<Complex64>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let value = |i: usize, j: usize| grid.cell(i, j).f_p;
    let point = |e: EdgeId| -> Complex64 {
        let ((i0, j0), (i1, j1)) = match e {
            EdgeId::H(i, j) => ((i, j), (i + 1, j)),
            EdgeId::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (f0, f1) = (value(i0, j0).unwrap(), value(i1, j1).unwrap());
        let s = if f1 == f0 { 0.5 } else { ((level - f0) / (f1 - f0)).clamp(0.0, 1.0) };
        let (z0, z1) = (grid.cell(i0, j0).lambda, grid.cell(i1, j1).lambda);
        z0 + (z1 - z0) * s
    };

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [value(i, j), value(i + 1, j), value(i + 1, j + 1), value(i, j + 1)];
            if corners.iter().any(Option::is_none) {
                continue;
            }
            let f: Vec<f64> = corners.iter().map(|c| c.unwrap()).collect();
            let above: Vec<bool> = f.iter().map(|&v| v > level).collect();
            // edges of the square: bottom, right, top, left
            let sides = [EdgeId::H(i, j), EdgeId::V(i + 1, j), EdgeId::H(i, j + 1), EdgeId::V(i, j)];
            let crossed: Vec<usize> = (0..4).filter(|&s| above[s] != above[(s + 1) % 4]).collect();
            match crossed.len() {
                2 => segments.push((sides[crossed[0]], sides[crossed[1]])),
                4 => {
                    let centre_above = f.iter().sum::<f64>() / 4.0 > level;
                    // pair each side with the neighbour that keeps the centre's region connected
                    if centre_above == above[0] {
                        segments.push((sides[0], sides[1]));
                        segments.push((sides[2], sides[3]));
                    } else {
                        segments.push((sides[3], sides[0]));
                        segments.push((sides[1], sides[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut incident: BTreeMap<EdgeId, Vec<usize>> = BTreeMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(k);
        incident.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start: EdgeId, used: &mut Vec<bool>| -> Vec<Complex64> {
        let mut pts = vec![point(start)];
        let mut at = start;
        while let Some(&k) = incident[&at].iter().find(|&&k| !used[k]) {
            used[k] = true;
            let (a, b) = segments[k];
            at = if a == at { b } else { a };
            pts.push(point(at));
        }
        pts
    };
    // open chains start at edges touched by a single segment
    let starts: Vec<EdgeId> = incident.iter().filter(|(_, v)| v.len() == 1).map(|(e, _)| *e).collect();
    for e in starts {
        if incident[&e].iter().all(|&k| used[k]) {
            continue;
        }
        lines.push(walk(e, &mut used));
    }
    for k in 0..segments.len() {
        if !used[k] {
            lines.push(walk(segments[k].0, &mut used));
        }
    }
    lines
}

/// Contour polylines as CSV rows `(contour_id, vertex_index, re, im)`.
pub fn write_contours_csv<W: Write>(lines: &[Vec<Complex64>], mut w: W) -> io::Result<()> {
    writeln!(w, "contour_id,vertex_index,re,im")?;
    for (id, line) in lines.iter().enumerate() {
        for (k, z) in line.iter().enumerate() {
            writeln!(w, "{id},{k},{},{}", num(z.re), num(z.im))?;
        }
    }
    Ok(())
}

/// Static SVG of the window with the contours and, if given, the bands on the real axis.
pub fn write_svg<W: Write>(window: &Window, lines: &[Vec<Complex64>], bands: Option<&BandStructure>, mut w: W) -> io::Result<()> {
    let (width, height) = (800.0, 800.0 * (window.im.1 - window.im.0) / (window.re.1 - window.re.0));
    let height = height.clamp(200.0, 1600.0);
    let sx = |re: f64| (re - window.re.0) / (window.re.1 - window.re.0) * width;
    let sy = |im: f64| (window.im.1 - im) / (window.im.1 - window.im.0) * height;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    )?;
    writeln!(w, r##"<rect width="100%" height="100%" fill="#ffffff" stroke="#000000"/>"##)?;
    if window.im.0 <= 0.0 && window.im.1 >= 0.0 {
        let y = sy(0.0);
        writeln!(w, r##"<line x1="0" y1="{y:.3}" x2="{width:.0}" y2="{y:.3}" stroke="#999999" stroke-width="1"/>"##)?;
        if let Some(bs) = bands {
            for &(lo, hi) in &bs.bands {
                let (a, b) = (sx(lo.max(window.re.0)), sx(hi.min(window.re.1)));
                if b > a {
                    writeln!(w, r##"<line x1="{a:.3}" y1="{y:.3}" x2="{b:.3}" y2="{y:.3}" stroke="#d62728" stroke-width="4"/>"##)?;
                }
            }
        }
    }
    for line in lines {
        let pts: Vec<String> = line.iter().map(|z| format!("{:.3},{:.3}", sx(z.re), sy(z.im))).collect();
        writeln!(w, r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##, pts.join(" "))?;
    }
    writeln!(w, "</svg>")
}

/// Grid plus the level set at `vnorm`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionMap {
    pub grid: ExclusionGrid,
    pub vnorm: f64,
    pub contours: Vec<Vec<Complex64>>,
}

pub fn exclusion_map(
    sp: &SpectralPoint<'_>,
    window: Window,
    nx: usize,
    ny: usize,
    p: f64,
    vnorm: f64,
    opts: &FloquetOptions,
) -> Result<ExclusionMap> {
    if !(vnorm >= 0.0 && vnorm.is_finite()) {
        return Err(Error::InvalidArgument(format!("vnorm must be finite and >= 0, got {vnorm}")));
    }
    let grid = exclusion_grid(sp, window, nx, ny, p, opts)?;
    let contours = contours(&grid, vnorm);
    Ok(ExclusionMap { grid, vnorm, contours })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PeriodicPotential;
    use crate::propagator::fundamental_system;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn opts() -> FloquetOptions {
        FloquetOptions { n_samples: 257, ..Default::default() }
    }

    #[test]
    fn free_threshold_at_zero() {
        let pot = PeriodicPotential::zero(1.0).unwrap();
        let sp = SpectralPoint::new(c(0.0, 0.0), 1.0, &pot).unwrap();
        let e1 = evaluate_point(&sp, 1.0, &opts()).unwrap();
        assert!((e1.f_p.unwrap() - 1.0).abs() < 1e-12);
        let e2 = evaluate_point(&sp, 2.0, &opts()).unwrap();
        assert!((e2.f_p.unwrap() - 1.0).abs() < 1e-12);
        assert!((resolvent_bound(&e1.floquet, &e1.parts, 2.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn p_factor_is_continuous_at_one() {
        assert_eq!(p_factor(0.3, 1.0), 1.0);
        assert!((p_factor(0.3, 1.0 + 1e-9) - 1.0).abs() < 1e-7);
        assert!((p_factor(1.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((p_factor(4.0, 2.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn essential_and_degenerate_points() {
        let pot = PeriodicPotential::zero(1.0).unwrap();
        let sp = SpectralPoint::new(c(3.0, 0.0), 1.0, &pot).unwrap();
        let e = evaluate_point(&sp, 1.0, &opts()).unwrap();
        assert!(e.f_p.is_none());
        assert!(matches!(threshold_f(&e.floquet, &e.parts, 1.0), Err(Error::EssentialSpectrum { .. })));
        assert!(matches!(resolvent_bound(&e.floquet, &e.parts, 2.0), Err(Error::EssentialSpectrum { .. })));
    }

    #[test]
    fn greens_kernel_identities() {
        let pot = PeriodicPotential::piecewise_constant(1.0, vec![0.0, 0.4], vec![1.0, -0.5]).unwrap();
        let sp = SpectralPoint::new(c(0.4, 0.6), 0.7, &pot).unwrap();
        let o = opts();
        let fd = floquet::floquet_data_with(&sp, &o).unwrap();
        let g = greens_kernel(&sp, &fd, 0.3, 1.7, &o).unwrap();
        assert!((g.frob - g.frob_closed_form).abs() < 1e-12 * g.frob);
        assert!(matches!(greens_kernel(&sp, &fd, 0.3, 0.3, &o), Err(Error::DiagonalEvaluation { .. })));

        // periodicity of φ±: shifting both points by a period leaves G unchanged
        let g2 = greens_kernel(&sp, &fd, 2.3, 3.7, &o).unwrap();
        assert!(mat2::frobenius_norm(&(g.g - g2.g)) < 1e-10 * g.frob);

        // decay along the line
        let f = |d: f64| greens_kernel(&sp, &fd, 0.25, 0.25 + d, &o).unwrap().frob;
        let ratio = f(2.0) / f(1.0);
        assert!((ratio - (-fd.im_k()).exp()).abs() < 1e-10);
    }

    #[test]
    fn greens_columns_solve_the_equation() {
        let pot = PeriodicPotential::piecewise_constant(1.0, vec![0.0, 0.5], vec![0.8, -0.3]).unwrap();
        let sp = SpectralPoint::new(c(0.2, 0.9), 0.6, &pot).unwrap();
        let o = opts();
        let fd = floquet::floquet_data_with(&sp, &o).unwrap();
        let t = 0.9;
        let gx = |x: f64| greens_kernel(&sp, &fd, x, t, &o).unwrap().g;
        for &x in &[0.2, 0.35, 0.7] {
            let h = 1e-5;
            let d = (gx(x + h) - gx(x - h)).scale_real(0.5 / h);
            let (pc, nc) = sp.coefficients(pot.eval(x));
            let a = C2Matrix::new(Complex64::new(0.0, 0.0), pc, nc, Complex64::new(0.0, 0.0));
            let res = mat2::frobenius_norm(&(d - a * gx(x)));
            assert!(res < 1e-5 * mat2::frobenius_norm(&gx(x)).max(1.0), "{x}: {res}");
        }
        // consistency with Φ: G(x, t) for t > x is −e^{ik(t−x)} φ₊(x)φ₋(t)ᵀ / det
        let phi = fundamental_system(&sp, 0.2).unwrap();
        let u = phi.apply(&fd.v_plus);
        let gk = greens_kernel(&sp, &fd, 0.2, 0.6, &o).unwrap().g;
        let rho_fac = (Complex64::i() * fd.k * 0.2).exp();
        let phip = [u[0] * rho_fac, u[1] * rho_fac];
        let phim = floquet::phi_minus_at(&sp, &fd, 0.6, &o).unwrap();
        let expected = C2Matrix::outer(&phip, &phim).scale(-(Complex64::i() * fd.k * 0.4).exp() / fd.det_v());
        assert!(mat2::frobenius_norm(&(gk - expected)) < 1e-10);
    }

    #[test]
    fn grid_basics_and_empty_contours_at_one() {
        let pot = PeriodicPotential::zero(1.0).unwrap();
        let sp = SpectralPoint::new(c(0.0, 0.0), 1.0, &pot).unwrap();
        let w = Window::new((-3.0, 3.0), (-2.0, 2.0)).unwrap();
        let m = exclusion_map(&sp, w, 13, 9, 1.0, 1.0, &opts()).unwrap();
        assert_eq!(m.grid.cells.len(), 117);
        assert_eq!(m.grid.excluded_count(1.0), 0);
        assert!(m.contours.is_empty());
        // the real axis row: bands are essential, the gap (−1, 1) is not
        for i in 0..13 {
            let cell = m.grid.cell(i, 4);
            assert_eq!(cell.lambda.im, 0.0);
            let expect = if cell.lambda.re.abs() > 1.0 {
                CellFlag::Essential
            } else if cell.lambda.re.abs() == 1.0 {
                CellFlag::Degenerate
            } else {
                CellFlag::Ok
            };
            assert_eq!(cell.flag, expect, "{}", cell.lambda);
        }
        for cell in &m.grid.cells {
            if let Some(f) = cell.f_p {
                assert!(f > 0.0 && f <= 1.0);
            }
        }
        let zero = contours(&m.grid, 0.0);
        assert!(zero.is_empty());
        assert_eq!(m.grid.excluded_count(0.0), m.grid.cells.iter().filter(|c| c.flag == CellFlag::Ok).count());
    }

    #[test]
    fn contour_of_a_cone_is_closed() {
        let w = Window::new((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let n = 21;
        let mut cells = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let z = c(Window::coord(w.re, i, n), Window::coord(w.im, j, n));
                cells.push(Cell {
                    lambda: z,
                    flag: CellFlag::Ok,
                    f_p: Some(1.0 - z.norm()),
                    im_k: None,
                    gamma: None,
                    gamma_plus: None,
                    gamma_minus: None,
                });
            }
        }
        let grid = ExclusionGrid { window: w, nx: n, ny: n, p: 1.0, cells };
        let lines = contours(&grid, 0.5);
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.first(), line.last());
        for z in line {
            assert!((z.norm() - 0.5).abs() < 0.01);
        }
        let mut out = Vec::new();
        write_contours_csv(&lines, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), line.len() + 1);
        let mut svg = Vec::new();
        write_svg(&w, &lines, None, &mut svg).unwrap();
        assert!(String::from_utf8(svg).unwrap().contains("<polyline"));
    }

    #[test]
    fn open_contour_reaches_the_boundary() {
        let w = Window::new((0.0, 1.0), (0.0, 1.0)).unwrap();
        let n = 5;
        let mut cells = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let z = c(Window::coord(w.re, i, n), Window::coord(w.im, j, n));
                cells.push(Cell {
                    lambda: z,
                    flag: CellFlag::Ok,
                    f_p: Some(z.re),
                    im_k: None,
                    gamma: None,
                    gamma_plus: None,
                    gamma_minus: None,
                });
            }
        }
        let grid = ExclusionGrid { window: w, nx: n, ny: n, p: 1.0, cells };
        let lines = contours(&grid, 0.6);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), n);
        for z in &lines[0] {
            assert!((z.re - 0.6).abs() < 1e-12);
        }
    }
}
