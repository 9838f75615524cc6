#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match pdirac::config::parse(text) {
        Ok(cfg) => {
            // anything accepted must survive a dump and reparse unchanged
            let again = pdirac::config::parse(&cfg.to_json()).expect("dumped config reparses");
            assert_eq!(again, cfg);
        }
        Err(pdirac::ConfigError::Invalid { line, column, .. }) => {
            assert!(line >= 1 || (line == 0 && column == 0));
        }
        Err(e) => panic!("unexpected error class: {e}"),
    }
});
