//! The real periodic background potential and the non-periodic perturbation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{operator_norm, C2Matrix};

/// Shape of one period of q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialShape {
    Zero,
    Constant {
        value: f64,
    },
    /// `values[i]` on `[breakpoints[i], breakpoints[i + 1])`, the last piece
    /// running up to the period.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `mean + Σₙ cos[n−1]·cos(2πnx/a) + sin[n−1]·sin(2πnx/a)`.
    Fourier {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Values on the uniform grid `j·a/N`, `j = 0..N`, linearly interpolated
    /// and continued periodically.
    Sampled {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PotentialSpec {
    period: f64,
    #[serde(flatten)]
    shape: PotentialShape,
}

/// A real a-periodic potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct PeriodicPotential {
    period: f64,
    shape: PotentialShape,
}

impl TryFrom<PotentialSpec> for PeriodicPotential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        PeriodicPotential::new(spec.period, spec.shape)
    }
}

impl From<PeriodicPotential> for PotentialSpec {
    fn from(p: PeriodicPotential) -> Self {
        PotentialSpec { period: p.period, shape: p.shape }
    }
}

fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

impl PeriodicPotential {
    pub fn new(period: f64, shape: PotentialShape) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidPotential(format!("period must be positive and finite, got {period}")));
        }
        match &shape {
            PotentialShape::Zero => {}
            PotentialShape::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidPotential("constant value is not finite".into()));
                }
            }
            PotentialShape::PiecewiseConstant { breakpoints, values } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return Err(Error::InvalidPotential(format!(
                        "need one value per breakpoint ({} breakpoints, {} values)",
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if !all_finite(breakpoints) || !all_finite(values) {
                    return Err(Error::InvalidPotential("non-finite breakpoint or value".into()));
                }
                if breakpoints[0] != 0.0 {
                    return Err(Error::InvalidPotential("first breakpoint must be 0".into()));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidPotential("breakpoints must be strictly increasing".into()));
                }
                if *breakpoints.last().unwrap() >= period {
                    return Err(Error::InvalidPotential("last breakpoint must be below the period".into()));
                }
            }
            PotentialShape::Fourier { mean, cos, sin } => {
                if !mean.is_finite() || !all_finite(cos) || !all_finite(sin) {
                    return Err(Error::InvalidPotential("non-finite Fourier coefficient".into()));
                }
            }
            PotentialShape::Sampled { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidPotential("sampled potential needs at least one value".into()));
                }
                if !all_finite(values) {
                    return Err(Error::InvalidPotential("non-finite sample".into()));
                }
            }
        }
        Ok(Self { period, shape })
    }

    pub fn zero(period: f64) -> Result<Self> {
        Self::new(period, PotentialShape::Zero)
    }

    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::new(period, PotentialShape::Constant { value })
    }

    pub fn piecewise_constant(period: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(period, PotentialShape::PiecewiseConstant { breakpoints, values })
    }

    pub fn fourier(period: f64, mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        Self::new(period, PotentialShape::Fourier { mean, cos, sin })
    }

    pub fn sampled(period: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(period, PotentialShape::Sampled { values })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn shape(&self) -> &PotentialShape {
        &self.shape
    }

    /// True when q is constant between consecutive breakpoints, so the
    /// propagator can step with exact exponentials.
    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self.shape, PotentialShape::Zero | PotentialShape::Constant { .. } | PotentialShape::PiecewiseConstant { .. })
    }

    /// Points of `[0, a)` where q may fail to be smooth, always starting with 0.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            PotentialShape::PiecewiseConstant { breakpoints, .. } => breakpoints.clone(),
            PotentialShape::Sampled { values } => {
                let n = values.len();
                (0..n).map(|j| j as f64 * self.period / n as f64).collect()
            }
            _ => vec![0.0],
        }
    }

    /// `x mod a` in `[0, a)`.
    pub fn reduce(&self, x: f64) -> f64 {
        let r = x.rem_euclid(self.period);
        if r >= self.period {
            0.0
        } else {
            r
        }
    }

    /// q(x), continued periodically.
    pub fn eval(&self, x: f64) -> f64 {
        let a = self.period;
        let x = self.reduce(x);
        match &self.shape {
            PotentialShape::Zero => 0.0,
            PotentialShape::Constant { value } => *value,
            PotentialShape::PiecewiseConstant { breakpoints, values } => {
                let idx = breakpoints.partition_point(|&b| b <= x).saturating_sub(1);
                values[idx]
            }
            PotentialShape::Fourier { mean, cos, sin } => {
                let w = 2.0 * PI * x / a;
                let mut q = *mean;
                for (n, c) in cos.iter().enumerate() {
                    q += c * ((n + 1) as f64 * w).cos();
                }
                for (n, s) in sin.iter().enumerate() {
                    q += s * ((n + 1) as f64 * w).sin();
                }
                q
            }
            PotentialShape::Sampled { values } => {
                let n = values.len();
                let t = x / a * n as f64;
                let j = (t.floor() as usize).min(n - 1);
                let frac = t - j as f64;
                values[j] + frac * (values[(j + 1) % n] - values[j])
            }
        }
    }

    /// Q(x) = ∫₀ˣ q for `x ∈ [0, a]`.
    pub fn antiderivative(&self, x: f64) -> Result<f64> {
        let a = self.period;
        if !(0.0..=a).contains(&x) {
            return Err(Error::Domain { x, period: a });
        }
        Ok(match &self.shape {
            PotentialShape::Zero => 0.0,
            PotentialShape::Constant { value } => value * x,
            PotentialShape::PiecewiseConstant { breakpoints, values } => {
                let mut total = 0.0;
                for (i, (&b, &v)) in breakpoints.iter().zip(values).enumerate() {
                    if b >= x {
                        break;
                    }
                    let end = breakpoints.get(i + 1).copied().unwrap_or(a).min(x);
                    total += v * (end - b);
                }
                total
            }
            PotentialShape::Fourier { mean, cos, sin } => {
                let w = 2.0 * PI / a;
                let mut total = mean * x;
                for (n, c) in cos.iter().enumerate() {
                    let k = (n + 1) as f64 * w;
                    total += c * (k * x).sin() / k;
                }
                for (n, s) in sin.iter().enumerate() {
                    let k = (n + 1) as f64 * w;
                    total += s * (1.0 - (k * x).cos()) / k;
                }
                total
            }
            PotentialShape::Sampled { values } => {
                // trapezoid rule, exact for the linear interpolant
                let n = values.len();
                let h = a / n as f64;
                let mut total = 0.0;
                let mut left = 0.0;
                for j in 0..n {
                    let right = (j + 1) as f64 * h;
                    let v0 = values[j];
                    let v1 = values[(j + 1) % n];
                    if right <= x {
                        total += 0.5 * h * (v0 + v1);
                        left = right;
                    } else {
                        let t = x - left;
                        let vx = v0 + (v1 - v0) * t / h;
                        total += 0.5 * t * (v0 + vx);
                        break;
                    }
                }
                total
            }
        })
    }

    /// The mirrored potential `x ↦ q(a − x)`.
    pub fn reflected(&self) -> Self {
        let a = self.period;
        let shape = match &self.shape {
            PotentialShape::PiecewiseConstant { breakpoints, values } => {
                let k = breakpoints.len();
                let mut bps = Vec::with_capacity(k);
                let mut vals = Vec::with_capacity(k);
                bps.push(0.0);
                vals.push(values[k - 1]);
                for i in (1..k).rev() {
                    bps.push(a - breakpoints[i]);
                    vals.push(values[i - 1]);
                }
                PotentialShape::PiecewiseConstant { breakpoints: bps, values: vals }
            }
            PotentialShape::Fourier { mean, cos, sin } => {
                PotentialShape::Fourier { mean: *mean, cos: cos.clone(), sin: sin.iter().map(|s| -s).collect() }
            }
            PotentialShape::Sampled { values } => {
                let n = values.len();
                PotentialShape::Sampled { values: (0..n).map(|j| values[(n - j) % n]).collect() }
            }
            other => other.clone(),
        };
        Self { period: a, shape }
    }

    /// True when `reflected()` is the same potential.
    pub fn is_reflection_symmetric(&self) -> bool {
        matches!(self.shape, PotentialShape::Zero | PotentialShape::Constant { .. })
    }
}

/// Relative tolerance on the Richardson error estimate in [`PerturbationField::vnorm_p`].
pub const VNORM_QUAD_TOL: f64 = 1e-6;

/// The non-periodic perturbation V, seen only through its p-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationField {
    NormOnly {
        p: f64,
        norm: f64,
    },
    /// Samples of V on a uniform grid over `[x_min, x_max]`; V vanishes
    /// outside that interval.
    Explicit {
        p: f64,
        x_min: f64,
        x_max: f64,
        samples: Vec<C2Matrix>,
    },
}

impl PerturbationField {
    pub fn norm_only(p: f64, norm: f64) -> Result<Self> {
        let v = Self::NormOnly { p, norm };
        v.validate()?;
        Ok(v)
    }

    pub fn explicit(p: f64, x_min: f64, x_max: f64, samples: Vec<C2Matrix>) -> Result<Self> {
        let v = Self::Explicit { p, x_min, x_max, samples };
        v.validate()?;
        Ok(v)
    }

    /// Samples `f` on `n` uniform points of `[x_min, x_max]`.
    pub fn from_fn(p: f64, x_min: f64, x_max: f64, n: usize, f: impl Fn(f64) -> C2Matrix) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidPerturbation("need at least 2 samples".into()));
        }
        let h = (x_max - x_min) / (n - 1) as f64;
        let samples = (0..n).map(|j| f(x_min + j as f64 * h)).collect();
        Self::explicit(p, x_min, x_max, samples)
    }

    pub fn p(&self) -> f64 {
        match self {
            Self::NormOnly { p, .. } | Self::Explicit { p, .. } => *p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidPerturbation(format!("p must be a finite number >= 1, got {p}")));
        }
        match self {
            Self::NormOnly { norm, .. } => {
                if !(norm.is_finite() && *norm >= 0.0) {
                    return Err(Error::InvalidPerturbation(format!("norm must be finite and >= 0, got {norm}")));
                }
            }
            Self::Explicit { x_min, x_max, samples, .. } => {
                if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
                    return Err(Error::InvalidPerturbation("support interval must be finite and nonempty".into()));
                }
                if samples.len() < 3 || samples.len() % 2 == 0 {
                    return Err(Error::InvalidPerturbation(format!(
                        "need an odd number (>= 3) of samples for the Richardson check, got {}",
                        samples.len()
                    )));
                }
                if !samples.iter().all(C2Matrix::is_finite) {
                    return Err(Error::InvalidPerturbation("non-finite sample".into()));
                }
            }
        }
        Ok(())
    }

    /// ‖V‖_p = (∫ ‖V(x)‖ᵖ dx)^{1/p} with ‖·‖ the pointwise operator norm.
    ///
    /// Explicit fields are integrated with the trapezoid rule on the full and
    /// the half grid; the Richardson-extrapolated value is returned and the
    /// difference serves as the error estimate.
    pub fn vnorm_p(&self) -> Result<f64> {
        self.validate()?;
        match self {
            Self::NormOnly { norm, .. } => Ok(*norm),
            Self::Explicit { p, x_min, x_max, samples } => {
                let f: Vec<f64> = samples.iter().map(|v| operator_norm(v).powf(*p)).collect();
                let n = f.len();
                let h = (x_max - x_min) / (n - 1) as f64;
                let trap = |stride: usize| {
                    let inner: f64 = f[stride..n - 1].iter().step_by(stride).sum();
                    stride as f64 * h * (0.5 * (f[0] + f[n - 1]) + inner)
                };
                let fine = trap(1);
                let coarse = trap(2);
                let integral = fine + (fine - coarse) / 3.0;
                if integral == 0.0 {
                    return Ok(0.0);
                }
                let estimate = ((fine - coarse) / 3.0).abs() / integral.abs();
                if estimate > VNORM_QUAD_TOL {
                    return Err(Error::QuadratureNonConvergence { estimate, tolerance: VNORM_QUAD_TOL });
                }
                Ok(integral.max(0.0).powf(1.0 / p))
            }
        }
    }
}
