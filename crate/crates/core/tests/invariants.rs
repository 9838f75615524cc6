mod common;

use common::{c, random_potential, rng};
use num_complex::Complex64;
use periodic_dirac::exclusion;
use periodic_dirac::floquet::{self, FloquetOptions};
use periodic_dirac::mat2::{self, C2Matrix};
use periodic_dirac::propagator::{fundamental_system, fundamental_system_scaled, monodromy, IntegratorOptions};
use periodic_dirac::{PeriodicPotential, SpectralPoint};
use proptest::prelude::*;

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| c(a, b))
}

fn matrix() -> impl Strategy<Value = C2Matrix> {
    (complex(3.0), complex(3.0), complex(3.0), complex(3.0)).prop_map(|(a, b, c, d)| C2Matrix::new(a, b, c, d))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gamma_invariant_under_shift_and_scale(a in matrix(), s in complex(5.0), k in complex(4.0)) {
        prop_assume!(k.norm() > 0.1);
        let ep = mat2::eig2(&a);
        prop_assume!(ep.distinct && (ep.mu1 - ep.mu2).norm() > 1e-3 * (1.0 + ep.mu1.norm()));
        let g = mat2::gamma_of_matrix(&a).unwrap();
        let b = a.scale(k) + C2Matrix::diag(s, s);
        let h = mat2::gamma_of_matrix(&b).unwrap();
        prop_assert!((g - h).abs() < 1e-7, "{g} vs {h}");
        prop_assert!((0.0..=1.0).contains(&g));
    }

    #[test]
    fn eig2_residuals(a in matrix()) {
        let ep = mat2::eig2(&a);
        prop_assume!(ep.distinct);
        let scale = mat2::frobenius_norm(&a).max(1e-12);
        for (mu, w) in [(ep.mu1, ep.w1), (ep.mu2, ep.w2)] {
            let aw = a.apply(&w);
            let r = mat2::vnorm(&[aw[0] - mu * w[0], aw[1] - mu * w[1]]) / mat2::vnorm(&w);
            prop_assert!(r <= 1e-9 * scale, "residual {r}");
        }
        prop_assert!((ep.mu1 + ep.mu2 - a.trace()).norm() <= 1e-10 * (1.0 + scale));
        prop_assert!(ep.mu1.norm() >= ep.mu2.norm() * (1.0 - 1e-12));
    }

    #[test]
    fn operator_norm_bounds(a in matrix(), b in matrix()) {
        let na = mat2::operator_norm(&a);
        let nb = mat2::operator_norm(&b);
        prop_assert!(mat2::operator_norm(&(a * b)) <= na * nb * (1.0 + 1e-12) + 1e-14);
        prop_assert!(na <= mat2::frobenius_norm(&a) * (1.0 + 1e-14));
        prop_assert!(na * std::f64::consts::SQRT_2 >= mat2::frobenius_norm(&a) * (1.0 - 1e-12));
        let v = [c(1.0, 0.3), c(-0.2, 0.9)];
        prop_assert!(mat2::vnorm(&a.apply(&v)) <= na * mat2::vnorm(&v) * (1.0 + 1e-12));
    }

    #[test]
    fn vnorm_is_homogeneous(v0 in complex(10.0), v1 in complex(10.0), k in complex(10.0)) {
        let n = mat2::vnorm(&[v0, v1]);
        let nk = mat2::vnorm(&[k * v0, k * v1]);
        prop_assert!((nk - k.norm() * n).abs() <= 1e-12 * (1.0 + nk));
    }

    #[test]
    fn projective_distance_ignores_scale(v0 in complex(2.0), v1 in complex(2.0), k in complex(3.0)) {
        prop_assume!(k.norm() > 0.1 && mat2::vnorm(&[v0, v1]) > 0.1);
        let d = mat2::projective_distance(&[v0, v1], &[k * v0, k * v1]);
        prop_assert!(d < 1e-7, "{d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unimodular_and_conjugation_symmetric(seed in 0u64..1_000_000, which in 0usize..3, re in -50.0..50.0f64, im in -2.0..2.0f64, m in 0.0..2.0f64, frac in 0.0..1.0f64) {
        let l = c(re, im);
        let pot = random_potential(&mut rng(seed), which);
        let x = frac * pot.period();
        let sp = SpectralPoint::new(l, m, &pot).unwrap();
        let phi = fundamental_system(&sp, x).unwrap();
        let phi_bar = fundamental_system(&sp.with_lambda(l.conj()), x).unwrap();
        // det is formed from products of size |Φ|², so that sets the roundoff scale
        prop_assert!((phi.det() - 1.0).norm() <= 1e-9 * mat2::frobenius_norm(&phi).powi(2).max(1.0));
        prop_assert!(mat2::frobenius_norm(&(phi_bar - phi.conj())) <= 1e-10 * mat2::frobenius_norm(&phi).max(1.0));
    }

    #[test]
    fn constant_shift_is_spectral_translation(l in complex(8.0), shift in -3.0..3.0f64, m in 0.0..2.0f64, v1 in -2.0..2.0f64, v2 in -2.0..2.0f64) {
        let pot = PeriodicPotential::piecewise_constant(1.3, vec![0.0, 0.5], vec![v1, v2]).unwrap();
        let moved = PeriodicPotential::piecewise_constant(1.3, vec![0.0, 0.5], vec![v1 + shift, v2 + shift]).unwrap();
        let d = monodromy(&SpectralPoint::new(l, m, &pot).unwrap()).unwrap();
        let e = monodromy(&SpectralPoint::new(l + shift, m, &moved).unwrap()).unwrap();
        prop_assert!(mat2::frobenius_norm(&(d - e)) <= 1e-9 * mat2::frobenius_norm(&d).max(1.0));

        let f = PeriodicPotential::fourier(0.9, 0.2, vec![v1], vec![v2]).unwrap();
        let g = PeriodicPotential::fourier(0.9, 0.2 + shift, vec![v1], vec![v2]).unwrap();
        let d = monodromy(&SpectralPoint::new(l, m, &f).unwrap()).unwrap();
        let e = monodromy(&SpectralPoint::new(l + shift, m, &g).unwrap()).unwrap();
        prop_assert!(mat2::frobenius_norm(&(d - e)) <= 1e-8 * mat2::frobenius_norm(&d).max(1.0));
    }

    #[test]
    fn exact_steps_match_adaptive(seed in 0u64..1_000_000, l in complex(10.0), m in 0.0..2.0f64) {
        let pot = common::random_piecewise(&mut rng(seed), 1.0);
        let sp = SpectralPoint::new(l, m, &pot).unwrap();
        let exact = monodromy(&sp).unwrap();
        let opts = IntegratorOptions { adaptive_only: true, ..Default::default() };
        let rk = fundamental_system_scaled(&sp, 1.0, 0.0, opts).unwrap();
        prop_assert!(mat2::frobenius_norm(&(exact - rk)) <= 1e-8 * mat2::frobenius_norm(&exact).max(1.0));
    }

    #[test]
    fn threshold_is_conjugation_symmetric(seed in 0u64..1_000_000, which in 0usize..3, re in -6.0..6.0f64, im in 0.05..3.0f64, p in 1.0..4.0f64) {
        let pot = random_potential(&mut rng(seed), which);
        let opts = FloquetOptions { n_samples: 512, ..Default::default() };
        let sp = SpectralPoint::new(c(re, im), 0.7, &pot).unwrap();
        let up = exclusion::evaluate_point(&sp, p, &opts).unwrap().f_p.unwrap();
        let down = exclusion::evaluate_point(&sp.with_lambda(c(re, -im)), p, &opts).unwrap().f_p.unwrap();
        prop_assert!(rel(up, down) <= 1e-6, "{up} vs {down}");
    }

    #[test]
    fn f1_is_reciprocal_of_c(seed in 0u64..1_000_000, which in 0usize..3, re in -6.0..6.0f64, im in 0.05..3.0f64) {
        let pot = random_potential(&mut rng(seed), which);
        let sp = SpectralPoint::new(c(re, im), 0.5, &pot).unwrap();
        let fd = floquet::floquet_data(&sp).unwrap();
        let pp = floquet::periodic_parts(&sp, &fd).unwrap();
        let f1 = exclusion::threshold_f(&fd, &pp, 1.0).unwrap();
        let cl = floquet::c_lambda(&pp, &fd).unwrap();
        prop_assert!((f1 * cl - 1.0).abs() <= 1e-9, "F1 C = {}", f1 * cl);
        prop_assert!(f1 <= 1.0 + 1e-9);
    }

    #[test]
    fn imk_is_nonnegative(seed in 0u64..1_000_000, which in 0usize..3, l in complex(30.0)) {
        let pot = random_potential(&mut rng(seed), which);
        let sp = SpectralPoint::new(l, 1.0, &pot).unwrap();
        let fd = floquet::floquet_data(&sp).unwrap();
        prop_assert!(fd.im_k() >= 0.0);
        prop_assert!(fd.rho().norm() >= 1.0 - 1e-12);
    }
}
