//! Configurations shipped with the binary.

use homodyne_core::config::{parse_config_str, RunConfig};
use homodyne_core::Result;

pub const PRESETS: &[(&str, &str)] = &[
    ("fig3a", include_str!("../presets/fig3a.ini")),
    ("fig3b", include_str!("../presets/fig3b.ini")),
    ("fig4", include_str!("../presets/fig4.ini")),
    ("fig5", include_str!("../presets/fig5.ini")),
    ("rabi", include_str!("../presets/rabi.ini")),
    ("rigid", include_str!("../presets/rigid.ini")),
];

pub fn text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load(name: &str) -> Option<Result<RunConfig>> {
    text(name).map(parse_config_str)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_validates() {
        for (name, text) in PRESETS {
            let cfg = parse_config_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&cfg.name, name);
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn fig3a_matches_the_figure_parameters() {
        use homodyne_core::model::derived_rates;
        let cfg = load("fig3a").unwrap().unwrap();
        assert_eq!(cfg.trap.n_atoms, 10_000);
        assert_eq!(cfg.cavity.xi, 0.01);
        assert_eq!(cfg.initial.bloch(cfg.trap.spin()).jy, 1667.0);
        let r = derived_rates(&cfg.trap, &cfg.cavity, 0.0).unwrap();
        assert_eq!(r.omega_prime, 25.0);
        assert!((r.omega_eff - 30.0).abs() < 1e-9, "{}", r.omega_eff);
        assert_eq!(load("fig3b").unwrap().unwrap().initial.bloch(5000.0).jy, 0.001);
    }
}
