#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_aoi::trajectory::EpisodeLog;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = EpisodeLog::from_slice(data) {
        assert_eq!(EpisodeLog::from_slice(&log.to_jsonl()).unwrap(), log);
    }
});
