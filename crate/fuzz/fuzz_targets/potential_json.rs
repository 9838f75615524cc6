#![no_main]
use libfuzzer_sys::fuzz_target;
use periodic_dirac::PeriodicPotential;

fuzz_target!(|data: &[u8]| {
    let Ok(pot) = serde_json::from_slice::<PeriodicPotential>(data) else { return };
    let a = pot.period();
    for j in 0..=8 {
        let x = a * j as f64 / 8.0;
        let _ = pot.eval(x);
        let _ = pot.antiderivative(x);
    }
    let _ = pot.eval(-1.5 * a);
    let _ = pot.reflected();
    let _ = pot.breakpoints();
});
