//! Registered figure recipes. Each one is an ordinary config file under
//! `configs/`, compiled in so `reproduce` works from any directory.

pub const FIGURES: [(&str, &str); 7] = [
    ("fig2a", include_str!("../configs/fig2a.toml")),
    ("fig2b", include_str!("../configs/fig2b.toml")),
    ("fig2c", include_str!("../configs/fig2c.toml")),
    ("fig2d", include_str!("../configs/fig2d.toml")),
    ("fig3", include_str!("../configs/fig3.toml")),
    ("fig4", include_str!("../configs/fig4.toml")),
    ("fig5", include_str!("../configs/fig5.toml")),
];

pub fn lookup(id: &str) -> Option<&'static str> {
    FIGURES.iter().find(|(name, _)| *name == id).map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    FIGURES.iter().map(|(name, _)| *name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn every_recipe_parses() {
        for (name, text) in FIGURES {
            ExperimentConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e:#}"));
        }
        assert!(lookup("fig2b").is_some());
        assert!(lookup("fig9").is_none());
    }
}
