#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_aoi::harness::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = Scenario::from_json(data) {
        let again = Scenario::from_json(s.to_json().unwrap().as_bytes()).unwrap();
        assert_eq!(again, s);
    }
});
