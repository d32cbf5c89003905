//! Line-oriented `key = value` experiment configuration.

use std::path::{Path, PathBuf};

use crate::diagnostics::SpectrumMode;
use crate::error::{Ar1Error, Result};
use crate::estimation::TruncationRule;
use crate::model::{ModelParams, PsdPolicy};
use crate::wavelet::WaveletBasisSpec;

pub const SEED_ENV: &str = "BANACH_AR1_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initializer {
    /// `X_0` drawn from a Gaussian with covariance `C`, resampled until every
    /// standardized coordinate lies within three standard deviations.
    TruncatedGaussian,
    /// `X_0` reached after `burn_in` steps from zero.
    BurnIn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub wavelet: WaveletBasisSpec,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub truncation_rule: TruncationRule,
    pub burn_in: usize,
    pub initializer: Initializer,
    pub noise_psd: PsdPolicy,
    pub spectrum: SpectrumMode,
    pub spline_mode: bool,
    pub coarse_step: f64,
    /// Points per axis of the covariance kernel surface.
    pub kernel_points: usize,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let model = ModelParams::default();
        ExperimentConfig {
            model,
            wavelet: WaveletBasisSpec::default(),
            sample_sizes: vec![500, 2000, 8000],
            replications: 50,
            truncation_rule: TruncationRule::LogCeil,
            burn_in: 500,
            initializer: Initializer::TruncatedGaussian,
            noise_psd: PsdPolicy::Clip,
            spectrum: SpectrumMode::True,
            spline_mode: false,
            coarse_step: 0.0372,
            kernel_points: 64,
            output_dir: PathBuf::from("out"),
            master_seed: model.seed,
        }
    }
}

impl ExperimentConfig {
    pub fn beta_exponent(&self) -> f64 {
        self.model.beta_exponent
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.master_seed = seed;
        self.model.seed = seed;
    }

    /// Applies `BANACH_AR1_SEED` when it is set.
    pub fn apply_env_seed(&mut self) -> Result<()> {
        match std::env::var(SEED_ENV) {
            Ok(raw) => {
                let seed = raw.trim().parse::<u64>().map_err(|_| Ar1Error::Config {
                    line: 0,
                    message: format!("{SEED_ENV} = {raw:?} is not an unsigned 64-bit integer"),
                })?;
                self.set_seed(seed);
                Ok(())
            }
            Err(std::env::VarError::NotPresent) => Ok(()),
            Err(e) => Err(Ar1Error::Config {
                line: 0,
                message: format!("{SEED_ENV}: {e}"),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.wavelet.validate()?;
        if self.wavelet.grid_len() != self.model.grid_len {
            return Err(Ar1Error::InvalidParameter(format!(
                "grid_len = {} does not match max_level = {} (needs {})",
                self.model.grid_len,
                self.wavelet.max_level,
                self.wavelet.grid_len()
            )));
        }
        if self.sample_sizes.is_empty() {
            return Err(Ar1Error::InvalidParameter("sample_sizes is empty".into()));
        }
        if self.sample_sizes[0] < 2 {
            return Err(Ar1Error::InvalidParameter(format!(
                "sample size {} is below 2",
                self.sample_sizes[0]
            )));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Ar1Error::InvalidParameter(
                "sample_sizes must be strictly ascending".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Ar1Error::InvalidParameter("replications must be at least 1".into()));
        }
        if let TruncationRule::Fixed(0) = self.truncation_rule {
            return Err(Ar1Error::InvalidParameter("fixed truncation must be at least 1".into()));
        }
        if !(self.coarse_step > 0.0 && self.coarse_step < 1.0) {
            return Err(Ar1Error::InvalidParameter(format!(
                "coarse_step = {} must lie in (0, 1)",
                self.coarse_step
            )));
        }
        if self.kernel_points < 2 {
            return Err(Ar1Error::InvalidParameter("kernel_points must be at least 2".into()));
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Ar1Error::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut grid_len: Option<(usize, usize)> = None;
    let mut max_level: Option<(u32, usize)> = None;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Ar1Error::Config {
            line,
            message: format!("expected `key = value`, found {content:?}"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Ar1Error::Config {
                line,
                message: format!("missing value for `{key}`"),
            });
        }
        if seen.iter().any(|k| k == key) {
            return Err(Ar1Error::Config {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        seen.push(key.to_string());

        let err = |message: String| Ar1Error::Config { line, message };
        let float = || {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("`{key}` expects a number, found {value:?}")))
        };
        let int = || {
            value
                .parse::<usize>()
                .map_err(|_| err(format!("`{key}` expects a non-negative integer, found {value:?}")))
        };
        let flag = || match value {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(err(format!("`{key}` expects true or false, found {value:?}"))),
        };

        match key {
            "gamma" => cfg.model.gamma = float()?,
            "beta" => cfg.model.beta_exponent = float()?,
            "width" => cfg.model.width = float()?,
            "modes" => cfg.model.modes = int()?,
            "grid_len" => grid_len = Some((int()?, line)),
            "wavelet_order" => cfg.wavelet.order = int()?,
            "coarse_level" => cfg.wavelet.coarse_level = int()? as u32,
            "max_level" => max_level = Some((int()? as u32, line)),
            "sample_sizes" => {
                cfg.sample_sizes = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(format!("`sample_sizes` expects a comma list of integers, found {value:?}")))?;
            }
            "replications" => cfg.replications = int()?,
            "truncation" => {
                cfg.truncation_rule = if value == "log_ceil" {
                    TruncationRule::LogCeil
                } else if let Some(k) = value.strip_prefix("fixed:") {
                    TruncationRule::Fixed(k.trim().parse().map_err(|_| {
                        err(format!("`truncation = fixed:K` needs an integer K, found {value:?}"))
                    })?)
                } else {
                    return Err(err(format!(
                        "`truncation` expects log_ceil or fixed:K, found {value:?}"
                    )));
                }
            }
            "burn_in" => cfg.burn_in = int()?,
            "initializer" => {
                cfg.initializer = match value {
                    "truncated_gaussian" => Initializer::TruncatedGaussian,
                    "burn_in" => Initializer::BurnIn,
                    _ => {
                        return Err(err(format!(
                            "`initializer` expects truncated_gaussian or burn_in, found {value:?}"
                        )))
                    }
                }
            }
            "noise_psd" => {
                cfg.noise_psd = match value {
                    "clip" => PsdPolicy::Clip,
                    "strict" => PsdPolicy::Strict,
                    _ => return Err(err(format!("`noise_psd` expects clip or strict, found {value:?}"))),
                }
            }
            "spectrum" => {
                cfg.spectrum = SpectrumMode::parse(value).ok_or_else(|| {
                    err(format!("`spectrum` expects true, nominal or empirical, found {value:?}"))
                })?
            }
            "spline_mode" => cfg.spline_mode = flag()?,
            "coarse_step" => cfg.coarse_step = float()?,
            "kernel_points" => cfg.kernel_points = int()?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "seed" => {
                let seed = value
                    .parse::<u64>()
                    .map_err(|_| err(format!("`seed` expects an unsigned 64-bit integer, found {value:?}")))?;
                cfg.set_seed(seed);
            }
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }

    // grid_len and max_level describe the same grid; either may be given
    match (grid_len, max_level) {
        (Some((len, line)), Some((m, _))) => {
            if !len.is_power_of_two() || len.trailing_zeros() != m + 1 {
                return Err(Ar1Error::Config {
                    line,
                    message: format!("grid_len = {len} is inconsistent with max_level = {m}"),
                });
            }
            cfg.model.grid_len = len;
            cfg.wavelet.max_level = m;
        }
        (Some((len, line)), None) => {
            if !len.is_power_of_two() || len < 4 {
                return Err(Ar1Error::Config {
                    line,
                    message: format!("grid_len = {len} is not a power of two >= 4"),
                });
            }
            cfg.model.grid_len = len;
            cfg.wavelet.max_level = len.trailing_zeros() - 1;
        }
        (None, Some((m, line))) => {
            if !(1..30).contains(&m) {
                return Err(Ar1Error::Config {
                    line,
                    message: format!("max_level = {m} is out of range"),
                });
            }
            cfg.wavelet.max_level = m;
            cfg.model.grid_len = 1 << (m + 1);
        }
        (None, None) => {}
    }

    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.model.beta_exponent, 0.6);
        assert_eq!(cfg.model.gamma, 1.21);
        assert_eq!(cfg.wavelet.coarse_level, 2);
        assert_eq!(cfg.wavelet.max_level, 10);
        assert_eq!(cfg.model.grid_len, 2048);
        assert_eq!(cfg.truncation_rule, TruncationRule::LogCeil);
    }

    #[test]
    fn sets_fields() {
        let cfg = parse_config_str(
            "# comment\nreplications = 250\nsample_sizes = 100, 200\ntruncation = fixed:4  # trailing\nseed = 99\ngrid_len = 256\nspline_mode = true\n",
        )
        .unwrap();
        assert_eq!(cfg.replications, 250);
        assert_eq!(cfg.sample_sizes, vec![100, 200]);
        assert_eq!(cfg.truncation_rule, TruncationRule::Fixed(4));
        assert_eq!(cfg.master_seed, 99);
        assert_eq!(cfg.model.seed, 99);
        assert_eq!(cfg.wavelet.max_level, 7);
        assert!(cfg.spline_mode);
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        let e = parse_config_str("replications = 3\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Ar1Error::Config { line: 2, .. }), "{e}");
        let e = parse_config_str("\n\nno equals sign").unwrap_err();
        assert!(matches!(e, Ar1Error::Config { line: 3, .. }));
        let e = parse_config_str("modes = ten").unwrap_err();
        assert!(matches!(e, Ar1Error::Config { line: 1, .. }));
        let e = parse_config_str("seed = 1\nseed = 2").unwrap_err();
        assert!(matches!(e, Ar1Error::Config { line: 2, .. }));
        assert!(parse_config_str("beta = 0.3").is_err());
        assert!(parse_config_str("sample_sizes = 800, 200").is_err());
        assert!(parse_config_str("replications = 0").is_err());
        assert!(parse_config_str("grid_len = 256\nmax_level = 9").is_err());
        assert!(parse_config_str("grid_len = 300").is_err());
    }
}
