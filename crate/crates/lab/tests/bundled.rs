use std::fs;
use std::path::Path;

use dbr_lab::bundled::{bundled_scenarios, Bundled};
use dbr_core::domain::Scenario;
use dbr_core::offline::OfflineScenario;
use dbr_core::online::OnlineScenario;

#[test]
fn shipped_files_match_the_generators() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for (name, scenario) in bundled_scenarios() {
        let text = fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
        let loaded = match &scenario {
            Bundled::Regression(_) => Bundled::Regression(Scenario::from_json(&text).unwrap()),
            Bundled::Offline(_) => Bundled::Offline(OfflineScenario::from_json(&text).unwrap()),
            Bundled::Online(_) => Bundled::Online(OnlineScenario::from_json(&text).unwrap()),
        };
        assert_eq!(loaded, scenario, "{name}");
        assert_eq!(text.trim_end(), scenario.to_json(), "{name}");
    }
}

#[test]
fn every_sample_config_validates() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        dbr_lab::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 7);
}
