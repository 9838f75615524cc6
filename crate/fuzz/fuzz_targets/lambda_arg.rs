#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(z) = pdirac::parse_lambda(s) {
        assert!(z.re.is_finite() && z.im.is_finite());
        assert_eq!(pdirac::parse_lambda(&format!("{:e},{:e}", z.re, z.im)), Ok(z));
    }
});
