//! Replays the checked-in fuzz corpus through the same checks as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use periodic_dirac::PeriodicPotential;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).map(|p| (p.clone(), fs::read(&p).unwrap())).collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for (path, data) in seeds("config_parse") {
        let text = std::str::from_utf8(&data).unwrap();
        match pdirac::config::parse(text) {
            Ok(cfg) => {
                assert_eq!(pdirac::config::parse(&cfg.to_json()).unwrap(), cfg, "{}", path.display());
                accepted += 1;
            }
            Err(pdirac::ConfigError::Invalid { line, .. }) => assert!(line >= 1, "{}", path.display()),
            Err(e) => panic!("{}: {e}", path.display()),
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn potential_seeds() {
    for (path, data) in seeds("potential_json") {
        let pot: PeriodicPotential = serde_json::from_slice(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let a = pot.period();
        for j in 0..=8 {
            let x = a * j as f64 / 8.0;
            assert!(pot.eval(x).is_finite());
            assert!(pot.antiderivative(x).unwrap().is_finite());
        }
    }
}

#[test]
fn lambda_seeds() {
    for (path, data) in seeds("lambda_arg") {
        let z = pdirac::parse_lambda(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(pdirac::parse_lambda(&format!("{:e},{:e}", z.re, z.im)), Ok(z));
    }
}
