//! TOML configuration files.
//!
//! Every section and key is optional; missing ones take the built-in
//! defaults. Unknown keys are errors.
//!
//! ```toml
//! [world]
//! users = 1000
//!
//! [topology.edge_cloud]
//! propagation_ms = 40.0
//! bandwidth_mbps = 10000.0
//! ```

use std::path::Path;

use fogverse_core::Config;

use crate::{Error, Result};

/// Parses and validates a config document. `origin` only labels errors.
pub fn parse_config(text: &str, origin: &Path) -> Result<Config> {
    let cfg: Config =
        toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_path_buf(), source: Box::new(e) })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Read { path: path.to_path_buf(), source: e })?;
    parse_config(&text, path)
}

/// Defaults when `path` is `None`.
pub fn load_or_default(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => load_config(p),
        None => Ok(Config::default()),
    }
}

/// The fully resolved config as TOML.
pub fn to_toml(cfg: &Config) -> String {
    toml::to_string(cfg).expect("config serialises")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(parse_config("", Path::new("x")).unwrap(), Config::default());
    }

    #[test]
    fn partial_override() {
        let cfg = parse_config(
            "[world]\nusers = 7\n[topology.fog_edge]\npropagation_ms = 1.0\nbandwidth_mbps = 10.0\n",
            Path::new("x"),
        )
        .unwrap();
        assert_eq!(cfg.world.users, 7);
        assert_eq!(cfg.topology.fog_edge.bandwidth_mbps, 10.0);
        assert_eq!(cfg.world.width, Config::default().world.width);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("[world]\nuser = 7\n", Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("user"), "{err}");
        assert!(parse_config("[nope]\n", Path::new("x")).is_err());
    }

    #[test]
    fn invalid_value_names_key() {
        match parse_config("[ledger]\nbatch_size = 0\n", Path::new("x")) {
            Err(Error::Config(e)) => assert_eq!(e.key, "ledger.batch_size"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn service_model_spelling() {
        let cfg = parse_config("[workload]\nservice = \"exponential\"\n", Path::new("x")).unwrap();
        assert_eq!(cfg.workload.service, fogverse_core::workload::ServiceModel::Exponential);
    }

    #[test]
    fn resolved_toml_round_trips() {
        let mut cfg = Config::default();
        cfg.world.users = 123;
        cfg.workload.tx_rate_per_user_s = 0.1 / 3.0;
        assert_eq!(parse_config(&to_toml(&cfg), Path::new("x")).unwrap(), cfg);
    }
}
