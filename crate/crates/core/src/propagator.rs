//! Canonical fundamental system Φ(x, λ) of the periodic Dirac equation.
//!
//! In first-order form the equation reads
//!
//! ```text
//! u'(x) = [[0, m − q(x) + λ], [m + q(x) − λ, 0]] u(x),    Φ(0, λ) = 𝕀.
//! ```
//!
//! Piecewise-constant potentials are stepped with the closed-form matrix
//! exponential of each piece, which makes them reference cases accurate to
//! roundoff. Smooth and sampled potentials go through an embedded
//! Dormand–Prince 5(4) integrator.
//!
//! Every routine accepts a real `shift` s ≥ 0 and then returns the scaled
//! solution e^{−s x} Φ(x, λ), obtained by integrating the shifted generator
//! directly. This keeps Φ representable when Im λ · a runs into the
//! hundreds or thousands.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::C2Matrix;
use crate::potential::PeriodicPotential;

/// Unscaled propagation is used while |Im λ|·a stays below this.
pub const SCALING_THRESHOLD: f64 = 300.0;

/// A spectral parameter together with the operator data it refers to.
#[derive(Debug, Clone, Copy)]
pub struct SpectralPoint<'a> {
    pub lambda: Complex64,
    pub mass: f64,
    pub potential: &'a PeriodicPotential,
}

impl<'a> SpectralPoint<'a> {
    pub fn new(lambda: Complex64, mass: f64, potential: &'a PeriodicPotential) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidArgument(format!("mass must be finite and >= 0, got {mass}")));
        }
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
        }
        Ok(Self { lambda, mass, potential })
    }

    pub fn period(&self) -> f64 {
        self.potential.period()
    }

    pub fn with_lambda(&self, lambda: Complex64) -> Self {
        Self { lambda, ..*self }
    }

    /// Coefficients (p, n) of the generator `[[0, p], [n, 0]]` for a
    /// potential value `q`.
    pub fn coefficients(&self, q: f64) -> (Complex64, Complex64) {
        let m = self.mass;
        (m - q + self.lambda, m + q - self.lambda)
    }

    /// The shift that [`floquet`](crate::floquet) uses by default: zero
    /// unless |Im λ|·a exceeds [`SCALING_THRESHOLD`], then |Im λ|.
    pub fn default_shift(&self) -> f64 {
        let alpha = self.lambda.im.abs();
        if alpha * self.period() > SCALING_THRESHOLD {
            alpha
        } else {
            0.0
        }
    }
}

/// Tolerances of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    /// Use the Runge–Kutta path even for piecewise-constant potentials.
    pub adaptive_only: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { atol: 1e-12, rtol: 1e-11, max_steps: 2_000_000, adaptive_only: false }
    }
}

/// `(hz)^{2k}`-series of cosh and sinh/ω, used when `|h²pn|` is small.
fn cosh_sinhc_series(z: Complex64, h: f64) -> (Complex64, Complex64) {
    // cosh(hω) = Σ zᵏ/(2k)!,  sinh(hω)/ω = h Σ zᵏ/(2k+1)!,  z = h²pn
    let mut ch = Complex64::new(1.0, 0.0);
    let mut sh = Complex64::new(1.0, 0.0);
    let mut term_c = Complex64::new(1.0, 0.0);
    let mut term_s = Complex64::new(1.0, 0.0);
    for k in 1..=14 {
        let kf = k as f64;
        term_c = term_c * z / ((2.0 * kf - 1.0) * (2.0 * kf));
        term_s = term_s * z / ((2.0 * kf) * (2.0 * kf + 1.0));
        ch += term_c;
        sh += term_s;
    }
    (ch, sh * h)
}

/// Below this |h²pn| the exponential is summed as a power series.
const SERIES_RADIUS: f64 = 1.0;

fn step_from(c: Complex64, s: Complex64, p: Complex64, n: Complex64) -> C2Matrix {
    C2Matrix::new(c, s * p, s * n, c)
}

fn step_series(p: Complex64, n: Complex64, h: f64, shift: f64) -> C2Matrix {
    let decay = (-shift * h).exp();
    let (ch, sh) = cosh_sinhc_series(p * n * (h * h), h);
    step_from(ch * decay, sh * decay, p, n)
}

fn step_exponential(p: Complex64, n: Complex64, h: f64, shift: f64) -> C2Matrix {
    let mut omega = (p * n).sqrt();
    if omega.re < 0.0 {
        omega = -omega;
    }
    let grow = (omega * h - shift * h).exp();
    let shrink = (-omega * h - shift * h).exp();
    step_from(0.5 * (grow + shrink), 0.5 * (grow - shrink) / omega, p, n)
}

/// `exp(h·([[0, p], [n, 0]] − s𝕀))` in closed form.
pub fn constant_step_shifted(p: Complex64, n: Complex64, h: f64, shift: f64) -> C2Matrix {
    if (p * n).norm() * h * h < SERIES_RADIUS {
        step_series(p, n, h, shift)
    } else {
        step_exponential(p, n, h, shift)
    }
}

/// `exp(h·[[0, p], [n, 0]])`: cosh(hω)𝕀 + sinh(hω)/ω·[[0, p], [n, 0]], ω = √(pn).
pub fn constant_step(p: Complex64, n: Complex64, h: f64) -> C2Matrix {
    constant_step_shifted(p, n, h, 0.0)
}

/// Φ on a set of nodes in [0, a], computed by continuation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub lambda: Complex64,
    /// Scaling exponent: `matrices[i] = e^{−shift·nodes[i]} Φ(nodes[i], λ)`.
    pub shift: f64,
    pub nodes: Vec<f64>,
    pub matrices: Vec<C2Matrix>,
    /// Position of each node on the uniform grid, `None` for inserted breakpoints.
    pub grid_index: Vec<Option<usize>>,
}

impl Trajectory {
    /// max |det Φ(x) − 1| over the nodes (after undoing the scaling).
    pub fn max_det_drift(&self) -> f64 {
        self.nodes.iter().zip(&self.matrices).map(|(&x, m)| (m.det() * (2.0 * self.shift * x).exp() - 1.0).norm()).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn last(&self) -> &C2Matrix {
        self.matrices.last().expect("trajectory has at least two nodes")
    }
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Propagates Φ for one spectral point and one scaling exponent.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    sp: SpectralPoint<'a>,
    shift: f64,
    opts: IntegratorOptions,
    /// Interior nodes where q may be non-smooth, plus a.
    segment_ends: Vec<f64>,
}

/// Mutable state carried along one sweep.
struct SweepState {
    h_guess: f64,
    cached: Option<(f64, f64, C2Matrix)>,
}

impl<'a> Propagator<'a> {
    pub fn new(sp: SpectralPoint<'a>, shift: f64, opts: IntegratorOptions) -> Self {
        let a = sp.period();
        let mut segment_ends: Vec<f64> = sp.potential.breakpoints().into_iter().filter(|&b| b > 0.0).collect();
        segment_ends.push(a);
        Self { sp, shift, opts, segment_ends }
    }

    pub fn spectral_point(&self) -> &SpectralPoint<'a> {
        &self.sp
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn generator(&self, x: f64) -> C2Matrix {
        let (p, n) = self.sp.coefficients(self.sp.potential.eval(x));
        let s = Complex64::new(-self.shift, 0.0);
        C2Matrix::new(s, p, n, s)
    }

    /// Advance `y` from `x0` to `x1`, both inside one smooth segment.
    fn advance(&self, y: C2Matrix, x0: f64, x1: f64, state: &mut SweepState) -> Result<C2Matrix> {
        let h = x1 - x0;
        if h <= 0.0 {
            return Ok(y);
        }
        if self.sp.potential.is_piecewise_constant() && !self.opts.adaptive_only {
            let q = self.sp.potential.eval(0.5 * (x0 + x1));
            if let Some((cq, ch, e)) = state.cached {
                if cq == q && ch == h {
                    return Ok(e * y);
                }
            }
            let (p, n) = self.sp.coefficients(q);
            let e = constant_step_shifted(p, n, h, self.shift);
            state.cached = Some((q, h, e));
            return Ok(e * y);
        }
        self.dopri5(y, x0, x1, state)
    }

    fn dopri5(&self, y0: C2Matrix, x0: f64, x1: f64, state: &mut SweepState) -> Result<C2Matrix> {
        let IntegratorOptions { atol, rtol, max_steps, .. } = self.opts;
        let mut x = x0;
        let mut y = y0;
        let mut k: [C2Matrix; 7] = [C2Matrix::zero(); 7];
        k[0] = self.generator(x) * y;
        let mut h_prop = state.h_guess;
        if h_prop.is_nan() || h_prop <= 0.0 {
            h_prop = (0.1 / (self.generator(x).max_abs() + 1e-300)).min(x1 - x0);
        }
        let mut last_rejected = false;
        let mut steps = 0usize;
        while x < x1 {
            steps += 1;
            if steps > max_steps {
                return Err(Error::StepSizeUnderflow { x, step: h_prop, lambda: self.sp.lambda });
            }
            let final_step = x + 1.01 * h_prop >= x1;
            let h = if final_step { x1 - x } else { h_prop };
            for s in 1..7 {
                let mut acc = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        acc = acc + kj.scale_real(h * a);
                    }
                }
                let xs = if s >= 5 && final_step { x1 } else { x + DP_C[s] * h };
                k[s] = self.generator(xs) * acc;
            }
            // the last stage is evaluated at the 5th-order solution (FSAL)
            let y_new = {
                let mut acc = y;
                for (j, kj) in k.iter().enumerate().take(6) {
                    let a = DP_A[6][j];
                    if a != 0.0 {
                        acc = acc + kj.scale_real(h * a);
                    }
                }
                acc
            };
            let mut err = C2Matrix::zero();
            for (j, kj) in k.iter().enumerate() {
                if DP_E[j] != 0.0 {
                    err = err + kj.scale_real(h * DP_E[j]);
                }
            }
            let (yo, yn, ee) = (y.entries(), y_new.entries(), err.entries());
            let sum: f64 = (0..4)
                .map(|i| {
                    let sc = atol + rtol * yo[i].norm().max(yn[i].norm());
                    (ee[i].norm() / sc).powi(2)
                })
                .sum();
            let err_norm = (sum / 4.0).sqrt();
            if !err_norm.is_finite() {
                return Err(Error::Overflow(format!("integrator state diverged at x = {x}, lambda = {}", self.sp.lambda)));
            }
            let fac = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
            if err_norm <= 1.0 {
                x = if final_step { x1 } else { x + h };
                y = y_new;
                k[0] = k[6];
                let grow = if last_rejected { fac.min(1.0) } else { fac };
                // a truncated final step says little about the natural step size
                if !final_step || h >= h_prop {
                    h_prop = h * grow;
                }
                last_rejected = false;
            } else {
                h_prop = h * fac.min(1.0);
                last_rejected = true;
                if h_prop < 1e-14 * (1.0 + x.abs()) {
                    return Err(Error::StepSizeUnderflow { x, step: h_prop, lambda: self.sp.lambda });
                }
            }
        }
        state.h_guess = h_prop;
        Ok(y)
    }

    fn new_state(&self) -> SweepState {
        SweepState { h_guess: 0.0, cached: None }
    }

    /// Scaled Φ at a single point `x ∈ [0, a]`.
    pub fn at(&self, x: f64) -> Result<C2Matrix> {
        let a = self.sp.period();
        if !(0.0..=a).contains(&x) {
            return Err(Error::Domain { x, period: a });
        }
        let mut state = self.new_state();
        let mut y = C2Matrix::identity();
        let mut pos = 0.0;
        for &end in &self.segment_ends {
            let stop = end.min(x);
            if stop > pos {
                y = self.advance(y, pos, stop, &mut state)?;
                pos = stop;
            }
            if end >= x {
                break;
            }
        }
        check_finite(&y, self.sp.lambda)?;
        Ok(y)
    }

    /// Scaled Φ on `n_nodes` uniform points of [0, a] together with every
    /// breakpoint of the potential.
    pub fn trajectory(&self, n_nodes: usize) -> Result<Trajectory> {
        if n_nodes < 2 {
            return Err(Error::InvalidArgument(format!("trajectory needs at least 2 nodes, got {n_nodes}")));
        }
        let a = self.sp.period();
        let step = a / (n_nodes - 1) as f64;
        let merge_tol = 1e-12 * a;
        let mut nodes: Vec<(f64, Option<usize>)> =
            (0..n_nodes).map(|j| (if j + 1 == n_nodes { a } else { j as f64 * step }, Some(j))).collect();
        for &b in &self.segment_ends[..self.segment_ends.len() - 1] {
            let nearest = (b / step).round() as usize;
            let on_grid = nearest < n_nodes && (nodes[nearest].0 - b).abs() <= merge_tol;
            if on_grid {
                // snap the grid node onto the breakpoint
                nodes[nearest].0 = b;
            } else {
                nodes.push((b, None));
            }
        }
        nodes.sort_by(|p, q| p.0.total_cmp(&q.0));

        let mut state = self.new_state();
        let mut matrices = Vec::with_capacity(nodes.len());
        let mut y = C2Matrix::identity();
        matrices.push(y);
        for w in nodes.windows(2) {
            y = self.advance(y, w[0].0, w[1].0, &mut state)?;
            matrices.push(y);
        }
        check_finite(&y, self.sp.lambda)?;
        Ok(Trajectory {
            lambda: self.sp.lambda,
            shift: self.shift,
            nodes: nodes.iter().map(|n| n.0).collect(),
            grid_index: nodes.iter().map(|n| n.1).collect(),
            matrices,
        })
    }
}

fn check_finite(y: &C2Matrix, lambda: Complex64) -> Result<()> {
    if y.is_finite() {
        Ok(())
    } else {
        Err(Error::Overflow(format!("fundamental system is not representable at lambda = {lambda}; use a scaled evaluation")))
    }
}

/// Φ(x, λ) for `x ∈ [0, a]`, unscaled.
pub fn fundamental_system(sp: &SpectralPoint<'_>, x: f64) -> Result<C2Matrix> {
    Propagator::new(*sp, 0.0, IntegratorOptions::default()).at(x)
}

/// e^{−shift·x} Φ(x, λ).
pub fn fundamental_system_scaled(sp: &SpectralPoint<'_>, x: f64, shift: f64, opts: IntegratorOptions) -> Result<C2Matrix> {
    Propagator::new(*sp, shift, opts).at(x)
}

/// The monodromy matrix M(λ) = Φ(a, λ).
pub fn monodromy(sp: &SpectralPoint<'_>) -> Result<C2Matrix> {
    fundamental_system(sp, sp.period())
}

/// Φ on `n_nodes` uniform nodes plus breakpoints, unscaled.
pub fn trajectory(sp: &SpectralPoint<'_>, n_nodes: usize) -> Result<Trajectory> {
    Propagator::new(*sp, 0.0, IntegratorOptions::default()).trajectory(n_nodes)
}
