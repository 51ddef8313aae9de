#![no_main]

use cutmix::study::{config_from_text, parse_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(pairs) = parse_config(text) else { return };
    for (k, v) in &pairs {
        assert!(!k.is_empty());
        assert_eq!(k.trim(), k);
        assert_eq!(v.trim(), v);
    }
    if let Ok(cfg) = config_from_text(text) {
        let _ = cfg.validate();
    }
});
