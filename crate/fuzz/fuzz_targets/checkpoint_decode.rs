#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_aoi::nn::Checkpoint;

fuzz_target!(|data: &[u8]| {
    // the format has exactly one encoding per value
    if let Ok(ck) = Checkpoint::decode(data) {
        assert_eq!(ck.encode(), data);
    }
});
