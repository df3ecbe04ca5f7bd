use std::path::Path;

use mimo_switch::{Pattern, Scheme, SimConfig};

use crate::args::Common;
use crate::commands::CliError;

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// `base`, then the TOML file, then flags.
pub fn resolve(base: SimConfig, args: &Common) -> Result<SimConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => overlay_file(base, path)?,
        None => base,
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(k) = args.channels {
        cfg.channels = k;
        cfg.sdp_channels = cfg.sdp_channels.map(|s| s.min(k));
    }
    if let Some(snr) = &args.snr {
        cfg.snr_points_db = snr.clone();
    }
    if let Some(p) = &args.pattern {
        cfg.pattern = p.parse::<Pattern>().map_err(CliError::from)?;
    }
    if let Some(n) = args.stations {
        cfg.n = n;
    }
    if let Some(names) = &args.schemes {
        cfg.schemes = names
            .iter()
            .map(|s| s.trim().parse::<Scheme>())
            .collect::<Result<_, _>>()
            .map_err(CliError::from)?;
    }
    cfg.validate().map_err(CliError::from)?;
    Ok(cfg)
}

fn overlay_file(base: SimConfig, path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let overlay: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut table = toml::Table::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
    merge(&mut table, overlay);
    table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))
}
