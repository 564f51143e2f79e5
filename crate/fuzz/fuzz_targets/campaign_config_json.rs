#![no_main]

use libfuzzer_sys::fuzz_target;
use opcalc::campaign::CampaignConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(v) = CampaignConfig::from_json(s) {
        let once = v.to_json();
        let back = CampaignConfig::from_json(&once).expect("emitted JSON parses");
        assert_eq!(back.to_json(), once);
    }
});
