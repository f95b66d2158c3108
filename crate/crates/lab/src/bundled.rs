//! Named scenarios shipped with the repository under `scenarios/`.

use std::fs;
use std::path::{Path, PathBuf};

use dbr_core::catalog::{benchmark_scenario, realizable_scenario};
use dbr_core::domain::{make_scenario_amplification, make_scenario_linf_inconsistency, Scenario};
use dbr_core::offline::{make_amplification_mdp, make_random_offline_scenario, AmplificationMdpSpec, OfflineScenario};
use dbr_core::online::{
    make_coverage_family, make_random_episodic_scenario, CoverageFamilySpec, OnlineScenario, RandomEpisodicSpec,
};

use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Bundled {
    Regression(Scenario),
    Offline(OfflineScenario),
    Online(OnlineScenario),
}

impl Bundled {
    pub fn to_json(&self) -> String {
        match self {
            Bundled::Regression(s) => s.to_json(),
            Bundled::Offline(s) => s.to_json(),
            Bundled::Online(s) => s.to_json(),
        }
    }
}

pub const AMPLIFICATION_MDP_SIZES: [f64; 3] = [4.0, 16.0, 64.0];
pub const COVERAGE_ARMS: [usize; 3] = [2, 8, 32];

pub fn amplification_mdp(c_conc: f64) -> OfflineScenario {
    make_amplification_mdp(&AmplificationMdpSpec {
        c_conc,
        ..AmplificationMdpSpec::default()
    })
    .expect("bundled spec is valid")
}

pub fn coverage_family(arms: usize) -> OnlineScenario {
    make_coverage_family(&CoverageFamilySpec {
        arms,
        ..CoverageFamilySpec::default()
    })
    .expect("bundled spec is valid")
}

pub fn random_episodic() -> OnlineScenario {
    make_random_episodic_scenario(&RandomEpisodicSpec::default()).expect("bundled spec is valid")
}

/// Every bundled scenario with its file stem, in a fixed order.
pub fn bundled_scenarios() -> Vec<(String, Bundled)> {
    let mut out = vec![
        (
            "amplification".to_string(),
            Bundled::Regression(make_scenario_amplification(0.1, 25.0, 0.45, 1000).expect("valid")),
        ),
        (
            "star".to_string(),
            Bundled::Regression(make_scenario_amplification(0.1, 16.0, 0.4, 1600).expect("valid")),
        ),
        ("linf_inconsistency".to_string(), Bundled::Regression(make_scenario_linf_inconsistency())),
        ("benchmark".to_string(), Bundled::Regression(benchmark_scenario())),
        ("realizable".to_string(), Bundled::Regression(realizable_scenario())),
    ];
    for c in AMPLIFICATION_MDP_SIZES {
        out.push((format!("amplification_mdp_c{c}"), Bundled::Offline(amplification_mdp(c))));
    }
    out.push((
        "random_offline".to_string(),
        Bundled::Offline(make_random_offline_scenario(5, 3, 0.9, 6, 1).expect("valid")),
    ));
    out.push(("random_episodic".to_string(), Bundled::Online(random_episodic())));
    for k in COVERAGE_ARMS {
        out.push((format!("coverage_k{k}"), Bundled::Online(coverage_family(k))));
    }
    out
}

/// Writes every bundled scenario as `<name>.json` into `dir`.
pub fn export(dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    bundled_scenarios()
        .into_iter()
        .map(|(name, s)| {
            let path = dir.join(format!("{name}.json"));
            fs::write(&path, s.to_json() + "\n").map_err(|e| LabError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
