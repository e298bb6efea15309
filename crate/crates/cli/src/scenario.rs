use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use capa_core::{make_config, CorrelationKernel, SystemConfig};

use crate::error::CliError;
use crate::Overrides;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Sinc,
    Jakes,
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sinc" => Ok(Model::Sinc),
            "jakes" | "ray" | "rays" => Ok(Model::Jakes),
            other => Err(format!("unknown model '{other}' (expected sinc or jakes)")),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Sinc => "sinc",
            Model::Jakes => "jakes",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    Kl,
    Grid,
    Ray,
    /// Discrete array; `None` means "use --energy-fraction".
    Discrete(Option<f64>),
}

impl FromStr for Sampler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "kl" => Ok(Sampler::Kl),
            "grid" => Ok(Sampler::Grid),
            "ray" | "rays" => Ok(Sampler::Ray),
            "discrete" => Ok(Sampler::Discrete(None)),
            _ => match s.strip_prefix("discrete:") {
                Some(f) => f
                    .parse::<f64>()
                    .map(|v| Sampler::Discrete(Some(v)))
                    .map_err(|_| format!("bad energy fraction in sampler '{s}'")),
                None => Err(format!(
                    "unknown sampler '{s}' (expected kl, grid, ray or discrete[:fraction])"
                )),
            },
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Kl => f.write_str("kl"),
            Sampler::Grid => f.write_str("grid"),
            Sampler::Ray => f.write_str("ray"),
            Sampler::Discrete(Some(v)) => write!(f, "discrete:{v}"),
            Sampler::Discrete(None) => f.write_str("discrete"),
        }
    }
}

/// Fully resolved scenario: defaults, then the config file, then flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub model: Model,
    pub width_m: f64,
    pub freq_hz: f64,
    pub snr_db: f64,
    pub modes: usize,
    pub rays: usize,
    pub reps: usize,
    pub seed: u64,
    pub sampler: Sampler,
    pub energy_fraction: f64,
    pub elements: usize,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub points: usize,
    pub x_max: Option<f64>,
    pub th_min_db: f64,
    pub th_max_db: f64,
    pub th_step_db: f64,
    pub mc: bool,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            model: Model::Sinc,
            width_m: 1.0,
            freq_hz: 800e6,
            snr_db: 0.0,
            modes: 100,
            rays: 200,
            reps: 1_000_000,
            seed: 1,
            sampler: Sampler::Kl,
            energy_fraction: 0.5,
            elements: 8,
            grid: None,
            out: None,
            points: 1001,
            x_max: None,
            th_min_db: -30.0,
            th_max_db: 5.0,
            th_step_db: 0.5,
            mc: false,
        }
    }
}

/// Reads `key = value` lines; `#` starts a comment. Keys are normalized to
/// snake case.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}:{}: expected key=value, got '{raw}'",
                path.display(),
                i + 1
            )));
        };
        map.insert(k.trim().replace('-', "_").to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(map)
}

fn take<T: FromStr>(
    file: &mut BTreeMap<String, String>,
    key: &str,
    flag: Option<T>,
    target: &mut T,
) -> Result<(), CliError>
where
    T::Err: fmt::Display,
{
    let from_file = file.remove(key);
    if let Some(v) = flag {
        *target = v;
    } else if let Some(s) = from_file {
        *target = s
            .parse()
            .map_err(|e| CliError::Config(format!("config key '{key}': cannot parse '{s}': {e}")))?;
    }
    Ok(())
}

impl ScenarioSpec {
    pub fn resolve(flags: &Overrides, mut file: BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut s = ScenarioSpec::default();
        take(&mut file, "model", flags.model, &mut s.model)?;
        take(&mut file, "width", flags.width, &mut s.width_m)?;
        take(&mut file, "freq", flags.freq, &mut s.freq_hz)?;
        take(&mut file, "snr_db", flags.snr_db, &mut s.snr_db)?;
        take(&mut file, "modes", flags.modes, &mut s.modes)?;
        take(&mut file, "rays", flags.rays, &mut s.rays)?;
        take(&mut file, "reps", flags.reps, &mut s.reps)?;
        take(&mut file, "seed", flags.seed, &mut s.seed)?;
        take(&mut file, "sampler", flags.sampler, &mut s.sampler)?;
        take(
            &mut file,
            "energy_fraction",
            flags.energy_fraction,
            &mut s.energy_fraction,
        )?;
        take(&mut file, "elements", flags.elements, &mut s.elements)?;
        take(&mut file, "points", flags.points, &mut s.points)?;
        take(&mut file, "th_min", flags.th_min, &mut s.th_min_db)?;
        take(&mut file, "th_max", flags.th_max, &mut s.th_max_db)?;
        take(&mut file, "th_step", flags.th_step, &mut s.th_step_db)?;
        take(&mut file, "mc", flags.mc.then_some(true), &mut s.mc)?;

        let mut grid = s.grid.unwrap_or(0);
        take(&mut file, "grid", flags.grid, &mut grid)?;
        s.grid = (grid > 0).then_some(grid);
        let mut x_max = f64::NAN;
        take(&mut file, "x_max", flags.x_max, &mut x_max)?;
        s.x_max = (!x_max.is_nan()).then_some(x_max);
        let mut out = String::new();
        take(
            &mut file,
            "out",
            flags.out.as_ref().map(|p| p.display().to_string()),
            &mut out,
        )?;
        s.out = (!out.is_empty()).then(|| PathBuf::from(out));

        if let Some(k) = file.keys().next() {
            return Err(CliError::Config(format!("unknown config key '{k}'")));
        }
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.reps == 0 {
            return bad("--reps must be at least 1".into());
        }
        if self.points < 2 {
            return bad("--points must be at least 2".into());
        }
        if !(self.th_step_db > 0.0) || !(self.th_max_db >= self.th_min_db) {
            return bad(format!(
                "threshold grid [{}, {}] step {} is empty",
                self.th_min_db, self.th_max_db, self.th_step_db
            ));
        }
        if let Some(x) = self.x_max {
            if !(x > 0.0) {
                return bad(format!("--x-max must be positive, got {x}"));
            }
        }
        let f = self.discrete_fraction();
        if !(f > 0.0 && f <= 1.0) {
            return bad(format!("energy fraction must be in (0, 1], got {f}"));
        }
        if self.elements == 0 {
            return bad("--elements must be at least 1".into());
        }
        if self.sampler == Sampler::Ray && self.model != Model::Jakes {
            return bad("the ray sampler needs --model jakes".into());
        }
        self.system_config()?;
        Ok(())
    }

    pub fn discrete_fraction(&self) -> f64 {
        match self.sampler {
            Sampler::Discrete(Some(f)) => f,
            _ => self.energy_fraction,
        }
    }

    pub fn system_config(&self) -> Result<SystemConfig, CliError> {
        Ok(make_config(
            self.width_m,
            self.freq_hz,
            self.snr_db,
            self.modes,
            self.rays,
            self.seed,
        )?)
    }

    pub fn kernel(&self) -> Result<CorrelationKernel, CliError> {
        let cfg = self.system_config()?;
        Ok(match self.model {
            Model::Sinc => CorrelationKernel::sinc(cfg),
            Model::Jakes => CorrelationKernel::jakes(cfg),
        })
    }

    /// Config echo for CSV headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let cfg = self.system_config().ok();
        let mut v = vec![
            ("model".to_string(), self.model.to_string()),
            ("width_m".into(), crate::output::num(self.width_m)),
            ("freq_hz".into(), crate::output::num(self.freq_hz)),
            ("snr_db_at_1m".into(), crate::output::num(self.snr_db)),
            ("modes".into(), self.modes.to_string()),
            ("rays".into(), self.rays.to_string()),
            ("seed".into(), self.seed.to_string()),
        ];
        if let Some(c) = cfg {
            v.push(("wavelength_m".into(), crate::output::num(c.wavelength)));
            v.push(("beta".into(), crate::output::num(c.beta)));
        }
        v
    }
}
