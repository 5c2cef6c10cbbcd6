#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_aoi::harness::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_toml(text) {
        // anything accepted must survive a serialise/parse round trip
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again.hash().unwrap(), cfg.hash().unwrap());
    }
});
