//! Model constants, the plain-text config format, and the per-RA workload
//! rates derived from them.
//!
//! Everything is stored in SI-ish units after loading: times in seconds,
//! sizes in bytes, rates in events per second. Speeds stay in km/hr and the
//! call rate per terminal stays per hour because the rate formulas carry the
//! 3600 conversion explicitly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: cannot parse value {value:?} for {key}")]
    Value {
        line: usize,
        key: String,
        value: String,
    },
    #[error("{key} {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// All model constants. Field names follow the symbols of the location
/// database model; see [`KEYS`] for the config spelling.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// DB2s per DB0.
    pub n0: u32,
    /// DB2s per DB1.
    pub n1: u32,
    pub r1: f64,
    pub r2: f64,
    /// km/hr
    pub v1: f64,
    /// km/hr
    pub v2: f64,
    /// RA boundary length, km.
    pub boundary_km: f64,
    /// RA area, km².
    pub area_km2: f64,
    /// Calls originated per terminal per hour.
    pub xi: f64,
    /// Users per km².
    pub rho: f64,
    pub q0: f64,
    pub q1: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// Total subscribers.
    pub nt: u64,
    /// Max items per T-node.
    pub y1: usize,
    /// Min items per interior T-node.
    pub y2: usize,
    pub kappa: f64,
    /// Memory access time, s.
    pub ts: f64,
    /// Disk block access time, s.
    pub tb: f64,
    /// Unit comparison/traversal time, s.
    pub tc: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Bytes per index entry.
    pub ei: f64,
    /// Bytes per service profile.
    pub m: f64,
    /// Storage capacity of DB0, DB1, DB2 in bytes.
    pub phi: [f64; 3],
    /// Node pointer size, bytes.
    pub a1: f64,
    /// Min/max element pointer size, bytes.
    pub a2: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n0: 128,
            n1: 16,
            r1: 0.4,
            r2: 0.1,
            v1: 5.6,
            v2: 56.0,
            boundary_km: 30.3,
            area_km2: 57.4,
            xi: 1.4,
            rho: 415.0,
            q0: 0.05,
            q1: 0.15,
            p0: 0.01,
            p1: 0.04,
            p2: 0.45,
            nt: 1_000_000_000,
            y1: 15,
            y2: 8,
            kappa: 0.95,
            ts: 10e-6,
            tb: 20e-3,
            tc: 1e-6,
            c1: 10.0,
            c2: 100.0,
            c3: 20.0,
            // not given in the numerical example
            c4: 1.0,
            ei: 8.0,
            m: 512.0,
            phi: [TIB; 3],
            a1: 8.0,
            a2: 8.0,
        }
    }
}

const TIB: f64 = 1_099_511_627_776.0;

/// Config keys, in the order [`SystemParams::to_config_string`] writes them.
pub const KEYS: &[&str] = &[
    "n0",
    "n1",
    "r1",
    "r2",
    "v1_kmh",
    "v2_kmh",
    "L_km",
    "A_km2",
    "xi_per_hr",
    "rho_users_per_km2",
    "q0",
    "q1",
    "p0",
    "p1",
    "p2",
    "Nt",
    "Y1",
    "Y2",
    "kappa",
    "Ts_us",
    "Tb_ms",
    "Tc_us",
    "c1",
    "c2",
    "c3",
    "c4",
    "Ei_bytes",
    "M_bytes",
    "a1_bytes",
    "a2_bytes",
    "Phi0_bytes",
    "Phi1_bytes",
    "Phi2_bytes",
];

/// Per-RA workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadRates {
    /// Location updates per second.
    pub lambda_u: f64,
    /// Call originations per second.
    pub lambda_c: f64,
}

/// Arrival rate at one DB0, one DB1 and one DB2, events per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRates {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LevelRates {
    pub fn get(&self, level: Level) -> f64 {
        match level {
            Level::Db0 => self.lambda0,
            Level::Db1 => self.lambda1,
            Level::Db2 => self.lambda2,
        }
    }
}

/// Database tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Db0,
    Db1,
    Db2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Db0, Level::Db1, Level::Db2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: u8) -> Option<Level> {
        match i {
            0 => Some(Level::Db0),
            1 => Some(Level::Db1),
            2 => Some(Level::Db2),
            _ => None,
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DB{}", self.index())
    }
}

impl SystemParams {
    /// Reads a config file. Keys not present keep their defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParamsError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ParamsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ParamsError> {
        let mut p = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ParamsError::Syntax {
                line,
                text: raw.to_string(),
            })?;
            p.set(line, key.trim(), value.trim())?;
        }
        p.validate()?;
        Ok(p)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ParamsError> {
        let bad = || ParamsError::Value {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        let real = || value.parse::<f64>().map_err(|_| bad());
        let count = || -> Result<u64, ParamsError> {
            if let Ok(v) = value.parse::<u64>() {
                return Ok(v);
            }
            // accept `1e9` style integers
            let v = value.parse::<f64>().map_err(|_| bad())?;
            if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(bad())
            }
        };
        let small = || -> Result<u32, ParamsError> { u32::try_from(count()?).map_err(|_| bad()) };
        match key {
            "n0" => self.n0 = small()?,
            "n1" => self.n1 = small()?,
            "r1" => self.r1 = real()?,
            "r2" => self.r2 = real()?,
            "v1_kmh" => self.v1 = real()?,
            "v2_kmh" => self.v2 = real()?,
            "L_km" => self.boundary_km = real()?,
            "A_km2" => self.area_km2 = real()?,
            "xi_per_hr" => self.xi = real()?,
            "rho_users_per_km2" | "rho" => self.rho = real()?,
            "q0" => self.q0 = real()?,
            "q1" => self.q1 = real()?,
            "p0" => self.p0 = real()?,
            "p1" => self.p1 = real()?,
            "p2" => self.p2 = real()?,
            "Nt" => self.nt = count()?,
            "Y1" => self.y1 = small()? as usize,
            "Y2" => self.y2 = small()? as usize,
            "kappa" => self.kappa = real()?,
            "Ts_us" => self.ts = from_unit(value, 6).ok_or_else(bad)?,
            "Tb_ms" => self.tb = from_unit(value, 3).ok_or_else(bad)?,
            "Tc_us" => self.tc = from_unit(value, 6).ok_or_else(bad)?,
            "c1" => self.c1 = real()?,
            "c2" => self.c2 = real()?,
            "c3" => self.c3 = real()?,
            "c4" => self.c4 = real()?,
            "Ei_bytes" => self.ei = real()?,
            "M_bytes" => self.m = real()?,
            "a1_bytes" => self.a1 = real()?,
            "a2_bytes" => self.a2 = real()?,
            "Phi0_bytes" => self.phi[0] = real()?,
            "Phi1_bytes" => self.phi[1] = real()?,
            "Phi2_bytes" => self.phi[2] = real()?,
            _ => {
                return Err(ParamsError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Writes every key in a form [`SystemParams::parse`] reads back
    /// field-for-field.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        // `{:?}` on f64 prints the shortest round-tripping representation
        put("n0", self.n0.to_string());
        put("n1", self.n1.to_string());
        put("r1", format!("{:?}", self.r1));
        put("r2", format!("{:?}", self.r2));
        put("v1_kmh", format!("{:?}", self.v1));
        put("v2_kmh", format!("{:?}", self.v2));
        put("L_km", format!("{:?}", self.boundary_km));
        put("A_km2", format!("{:?}", self.area_km2));
        put("xi_per_hr", format!("{:?}", self.xi));
        put("rho_users_per_km2", format!("{:?}", self.rho));
        put("q0", format!("{:?}", self.q0));
        put("q1", format!("{:?}", self.q1));
        put("p0", format!("{:?}", self.p0));
        put("p1", format!("{:?}", self.p1));
        put("p2", format!("{:?}", self.p2));
        put("Nt", self.nt.to_string());
        put("Y1", self.y1.to_string());
        put("Y2", self.y2.to_string());
        put("kappa", format!("{:?}", self.kappa));
        put("Ts_us", to_unit(self.ts, 6));
        put("Tb_ms", to_unit(self.tb, 3));
        put("Tc_us", to_unit(self.tc, 6));
        put("c1", format!("{:?}", self.c1));
        put("c2", format!("{:?}", self.c2));
        put("c3", format!("{:?}", self.c3));
        put("c4", format!("{:?}", self.c4));
        put("Ei_bytes", format!("{:?}", self.ei));
        put("M_bytes", format!("{:?}", self.m));
        put("a1_bytes", format!("{:?}", self.a1));
        put("a2_bytes", format!("{:?}", self.a2));
        put("Phi0_bytes", format!("{:?}", self.phi[0]));
        put("Phi1_bytes", format!("{:?}", self.phi[1]));
        put("Phi2_bytes", format!("{:?}", self.phi[2]));
        out
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        fn unit(key: &'static str, v: f64) -> Result<(), ParamsError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ParamsError::Invalid {
                    key,
                    reason: "out of [0,1]".into(),
                })
            }
        }
        fn positive(key: &'static str, v: f64) -> Result<(), ParamsError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ParamsError::Invalid {
                    key,
                    reason: format!("must be positive, got {v}"),
                })
            }
        }
        fn non_negative(key: &'static str, v: f64) -> Result<(), ParamsError> {
            if v >= 0.0 {
                Ok(())
            } else {
                Err(ParamsError::Invalid {
                    key,
                    reason: format!("must be non-negative, got {v}"),
                })
            }
        }
        let sum = |key: &'static str, s: f64| {
            if s <= 1.0 + 1e-12 {
                Ok(())
            } else {
                Err(ParamsError::Invalid {
                    key,
                    reason: format!("sum {s} exceeds 1"),
                })
            }
        };

        for (k, v) in [
            ("r1", self.r1),
            ("r2", self.r2),
            ("q0", self.q0),
            ("q1", self.q1),
            ("p0", self.p0),
            ("p1", self.p1),
            ("p2", self.p2),
        ] {
            unit(k, v)?;
        }
        sum("r1 + r2", self.r1 + self.r2)?;
        sum("q0 + q1", self.q0 + self.q1)?;
        sum("p0 + p1 + p2", self.p0 + self.p1 + self.p2)?;

        if self.n1 == 0 {
            return Err(ParamsError::Invalid {
                key: "n1",
                reason: "must be at least 1".into(),
            });
        }
        if self.n0 < self.n1 || self.n0 % self.n1 != 0 {
            return Err(ParamsError::Invalid {
                key: "n0",
                reason: format!("must be a multiple of n1 = {}", self.n1),
            });
        }
        for (k, v) in [
            ("v1_kmh", self.v1),
            ("v2_kmh", self.v2),
            ("xi_per_hr", self.xi),
            ("rho_users_per_km2", self.rho),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("Ei_bytes", self.ei),
            ("M_bytes", self.m),
            ("a1_bytes", self.a1),
            ("a2_bytes", self.a2),
            ("Phi0_bytes", self.phi[0]),
            ("Phi1_bytes", self.phi[1]),
            ("Phi2_bytes", self.phi[2]),
        ] {
            non_negative(k, v)?;
        }
        for (k, v) in [
            ("L_km", self.boundary_km),
            ("A_km2", self.area_km2),
            ("Ts_us", self.ts),
            ("Tb_ms", self.tb),
            ("Tc_us", self.tc),
        ] {
            positive(k, v)?;
        }
        if self.nt == 0 {
            return Err(ParamsError::Invalid {
                key: "Nt",
                reason: "must be positive".into(),
            });
        }
        if self.y1 == 0 {
            return Err(ParamsError::Invalid {
                key: "Y1",
                reason: "must be at least 1".into(),
            });
        }
        if self.y2 == 0 || self.y2 > self.y1 {
            return Err(ParamsError::Invalid {
                key: "Y2",
                reason: format!("must lie in [1, Y1 = {}]", self.y1),
            });
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(ParamsError::Invalid {
                key: "kappa",
                reason: "must lie in (0,1]".into(),
            });
        }
        Ok(())
    }

    /// Copy with a different user density.
    pub fn with_rho(&self, rho: f64) -> Self {
        Self {
            rho,
            ..self.clone()
        }
    }

    /// Number of DB1s under one DB0.
    pub fn db1_count(&self) -> u32 {
        self.n0 / self.n1
    }

    /// Users residing in one DB_i area: ρ·A per RA times the RAs covered.
    pub fn residents(&self, level: Level) -> f64 {
        let per_ra = self.rho * self.area_km2;
        match level {
            Level::Db0 => per_ra * f64::from(self.n0),
            Level::Db1 => per_ra * f64::from(self.n1),
            Level::Db2 => per_ra,
        }
    }

    pub fn workload(&self) -> WorkloadRates {
        WorkloadRates {
            lambda_u: location_update_rate(self),
            lambda_c: call_origination_rate(self),
        }
    }
}

/// Location updates per second generated in one RA.
pub fn location_update_rate(p: &SystemParams) -> f64 {
    p.rho * p.boundary_km * (p.v1 * p.r1 + p.v2 * p.r2) / (3600.0 * std::f64::consts::PI)
}

/// Calls per second originated in one RA.
pub fn call_origination_rate(p: &SystemParams) -> f64 {
    p.rho * p.xi * p.area_km2 / 3600.0
}

/// Arrival rate at each database tier.
pub fn arrival_rates(p: &SystemParams, w: WorkloadRates) -> LevelRates {
    let WorkloadRates { lambda_u, lambda_c } = w;
    let (q0, q1, p0, p1, p2) = (p.q0, p.q1, p.p0, p.p1, p.p2);
    LevelRates {
        lambda0: f64::from(p.n0) * ((2.0 * q0 + q1) * lambda_u + (2.0 * p0 + p1) * lambda_c),
        lambda1: f64::from(p.n1)
            * ((1.0 + q0 + q1) * lambda_u + (2.0 * p0 + 2.0 * p1 + p2) * lambda_c),
        lambda2: 2.0 * lambda_u + (1.0 + p0 + p1 + p2) * lambda_c,
    }
}

// Unit scaling done on the decimal text so that writing then reading a
// value gives back the same f64; `x * 1e-6` is not always exact.
fn to_unit(seconds: f64, pow10: i32) -> String {
    let sci = format!("{seconds:e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse::<i32>().expect("integer exponent") + pow10;
    let (sign, body) = match mantissa.strip_prefix('-') {
        Some(b) => ("-", b),
        None => ("", mantissa),
    };
    let digits = body.replace('.', "");
    let point = 1 + exp;
    let len = digits.len() as i32;
    let text = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point >= len {
        format!("{}{}", digits, "0".repeat((point - len) as usize))
    } else {
        format!(
            "{}.{}",
            &digits[..point as usize],
            &digits[point as usize..]
        )
    };
    format!("{sign}{text}")
}

fn from_unit(text: &str, pow10: i32) -> Option<f64> {
    text.parse::<f64>().ok()?;
    let scaled = match text.split_once(['e', 'E']) {
        Some((m, e)) => format!("{m}e{}", e.parse::<i32>().ok()? - pow10),
        None => format!("{text}e{}", -pow10),
    };
    scaled.parse().ok()
}
