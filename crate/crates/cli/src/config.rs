//! Option resolution: command-line flags override the config file, which
//! overrides built-in defaults.

use std::path::{Path, PathBuf};

use lindstedt_core::{Error, Result};
use serde::Deserialize;

/// Environment variable naming the root directory for outputs when neither
/// the --out flag nor the config file sets one.
pub const OUT_ENV: &str = "LINDSTEDT_OUT";

/// Keys accepted in the TOML config file; every one mirrors a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub omega: Option<String>,
    pub digits: Option<u32>,
    pub orders: Option<usize>,
    pub grid_exp: Option<u32>,
    pub rho: Option<Vec<String>>,
    pub sobolev_r: Option<Vec<u32>>,
    pub fit_lo: Option<usize>,
    pub fit_hi: Option<usize>,
    pub eps: Option<Vec<String>>,
    pub norm_convention: Option<String>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved run options.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub omega: String,
    pub digits: u32,
    pub orders: usize,
    pub grid_exp: u32,
    pub rho: Vec<String>,
    pub sobolev_r: Vec<u32>,
    pub fit_lo: usize,
    pub fit_hi: usize,
    pub eps: Vec<String>,
    pub norm_convention: String,
    pub out: Option<PathBuf>,
}

/// Flag values as they came from clap; None means "not given".
#[derive(Debug, Default, Clone)]
pub struct FlagValues {
    pub omega: Option<String>,
    pub digits: Option<u32>,
    pub orders: Option<usize>,
    pub grid_exp: Option<u32>,
    pub rho: Vec<String>,
    pub sobolev_r: Vec<u32>,
    pub fit_lo: Option<usize>,
    pub fit_hi: Option<usize>,
    pub eps: Vec<String>,
    pub norm_convention: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn resolve(flags: FlagValues, file: FileConfig) -> Resolved {
    Resolved {
        omega: flags
            .omega
            .or(file.omega)
            .unwrap_or_else(|| "golden".into()),
        digits: flags.digits.or(file.digits).unwrap_or(600),
        orders: flags.orders.or(file.orders).unwrap_or(500),
        grid_exp: flags.grid_exp.or(file.grid_exp).unwrap_or(13),
        rho: if !flags.rho.is_empty() {
            flags.rho
        } else {
            file.rho.unwrap_or_else(|| {
                ["1e-1", "1e-2", "1e-3", "1e-4", "1e-5", "1e-6", "1e-7"]
                    .map(String::from)
                    .to_vec()
            })
        },
        sobolev_r: if !flags.sobolev_r.is_empty() {
            flags.sobolev_r
        } else {
            file.sobolev_r.unwrap_or_else(|| vec![1, 2, 3, 4, 5, 6])
        },
        fit_lo: flags.fit_lo.or(file.fit_lo).unwrap_or(100),
        fit_hi: flags.fit_hi.or(file.fit_hi).unwrap_or(300),
        eps: if !flags.eps.is_empty() {
            flags.eps
        } else {
            file.eps
                .unwrap_or_else(|| vec!["1e-2".into(), "1e-3".into()])
        },
        norm_convention: flags
            .norm_convention
            .or(file.norm_convention)
            .unwrap_or_else(|| "sqrt".into()),
        out: flags
            .out
            .or(file.out)
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)),
    }
}
