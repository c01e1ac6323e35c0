//! Delayed-stimulus surrogate of the cardiac conduction system.

use super::Stimulus;
use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Electrically separate domain of the whole-heart model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chamber {
    Ra,
    La,
    Ventricles,
}

impl fmt::Display for Chamber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chamber::Ra => "ra",
            Chamber::La => "la",
            Chamber::Ventricles => "ventricles",
        })
    }
}

impl FromStr for Chamber {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ra" => Ok(Chamber::Ra),
            "la" => Ok(Chamber::La),
            "ventricles" | "biv" | "v" => Ok(Chamber::Ventricles),
            _ => Err(Error::Config(format!("unknown chamber '{s}'"))),
        }
    }
}

/// AV-node delay (ms) built into the ventricular start times.
pub const AVN_DELAY: f64 = 90.0;

/// Sites of the conduction-system surrogate with their onset (ms).
pub const WHOLE_HEART_TIMES: [(&str, Chamber, f64); 9] = [
    ("SAN", Chamber::Ra, 0.0),
    ("BB", Chamber::La, 28.0),
    ("FO", Chamber::La, 42.0),
    ("CSM", Chamber::La, 80.0),
    ("AL", Chamber::Ventricles, 160.0),
    ("SL", Chamber::Ventricles, 160.0),
    ("PL", Chamber::Ventricles, 160.0),
    ("SR", Chamber::Ventricles, 165.0),
    ("ER", Chamber::Ventricles, 165.0),
];

/// Named anatomical point in the coordinates of its chamber's mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub name: String,
    pub chamber: Chamber,
    pub center: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub sites: Vec<Site>,
    /// Chambers to include.
    pub chambers: Vec<Chamber>,
    pub radius: f64,
    pub duration: f64,
    pub amplitude: f64,
}

impl ScheduleConfig {
    pub fn new(sites: Vec<Site>, chambers: Vec<Chamber>) -> Self {
        ScheduleConfig {
            sites,
            chambers,
            radius: Stimulus::DEFAULT_RADIUS,
            duration: Stimulus::DEFAULT_DURATION,
            amplitude: Stimulus::DEFAULT_AMPLITUDE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledStimulus {
    pub name: String,
    pub chamber: Chamber,
    pub stimulus: Stimulus,
}

/// Timed stimuli for the included chambers. Onsets are shifted so that the
/// earliest included site fires at t = 0; an LA-only schedule therefore
/// starts with BB at 0.
pub fn whole_heart_schedule(cfg: &ScheduleConfig) -> Result<Vec<ScheduledStimulus>> {
    if cfg.chambers.is_empty() {
        return Err(Error::Config("schedule includes no chamber".into()));
    }
    let rows: Vec<_> = WHOLE_HEART_TIMES.iter().filter(|(_, c, _)| cfg.chambers.contains(c)).collect();
    let t0 = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let mut out = Vec::with_capacity(rows.len());
    for (name, chamber, t) in rows {
        let site = cfg
            .sites
            .iter()
            .find(|s| s.name.eq_ignore_ascii_case(name) && s.chamber == *chamber)
            .ok_or_else(|| Error::Config(format!("missing site '{name}' in {chamber}")))?;
        let stimulus = Stimulus {
            center: site.center,
            radius: cfg.radius,
            start: t - t0,
            duration: cfg.duration,
            amplitude: cfg.amplitude,
        };
        stimulus.validate()?;
        out.push(ScheduledStimulus { name: name.to_string(), chamber: *chamber, stimulus });
    }
    Ok(out)
}

fn spherical(r: f64, theta: f64, phi: f64) -> [f64; 3] {
    [r * theta.sin() * phi.cos(), r * theta.sin() * phi.sin(), r * theta.cos()]
}

/// Sites on the default idealized atria and biventricle.
pub fn default_sites() -> Vec<Site> {
    let s = |name: &str, chamber, center| Site { name: name.into(), chamber, center };
    vec![
        s("SAN", Chamber::Ra, spherical(1.9, 0.6, 2.6)),
        s("BB", Chamber::La, spherical(1.9, 1.0, -2.2)),
        s("FO", Chamber::La, spherical(1.9, 1.6, -1.6)),
        s("CSM", Chamber::La, spherical(1.9, 2.3, -0.9)),
        s("AL", Chamber::Ventricles, [0.8, 0.8, -1.5]),
        s("SL", Chamber::Ventricles, [1.1, 0.0, -1.5]),
        s("PL", Chamber::Ventricles, [-0.45, -1.1, -0.8]),
        s("SR", Chamber::Ventricles, [1.9, 0.0, -1.5]),
        s("ER", Chamber::Ventricles, [2.8, 0.0, -1.5]),
    ]
}
