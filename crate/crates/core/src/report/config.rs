//! Run configuration: TOML on disk, JSON in the summary echo.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hessian::RenormConfig;
use crate::leaves::LeafKind;
use crate::series::Leaf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Series,
    Char,
    Spectrum,
    Scan,
    Lg,
    Leaves,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Series => "series",
            Command::Char => "char",
            Command::Spectrum => "spectrum",
            Command::Scan => "scan",
            Command::Lg => "lg",
            Command::Leaves => "leaves",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSection {
    /// Powers `U^p`, `p = 1..=p_max`.
    pub p_max: usize,
    /// Coefficients `m = 0..=m_max` are written.
    pub m_max: usize,
}

impl Default for SeriesSection {
    fn default() -> Self {
        SeriesSection { p_max: 10, m_max: 30 }
    }
}

/// Path `ζ_vary = ζ_c (1 - δ)` with the other entries of `zeta` held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub vary: usize,
    /// Critical value of the varied entry; located on `bracket` when absent.
    pub critical: Option<f64>,
    pub bracket: Option<[f64; 2]>,
    pub delta_hi: f64,
    pub delta_lo: f64,
    pub points: usize,
    pub q: Vec<u32>,
    pub k_max: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            vary: 0,
            critical: None,
            bracket: None,
            delta_hi: 1e-1,
            delta_lo: 1e-4,
            points: 13,
            q: vec![1],
            k_max: 8,
        }
    }
}

/// Spectral scan at `T = T_c - τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproachSection {
    pub tau_hi: f64,
    pub tau_lo: f64,
    pub points: usize,
    pub q: Vec<u32>,
}

impl Default for ApproachSection {
    fn default() -> Self {
        ApproachSection { tau_hi: 1e-1, tau_lo: 1e-4, points: 13, q: vec![1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LgSection {
    pub r0: f64,
    /// Initial real coefficients `a_n`.
    pub a0: Vec<f64>,
    pub dt: f64,
    pub t_max: f64,
    pub n_quad: usize,
    pub cons_tol: f64,
    pub approach: Option<ApproachSection>,
}

impl Default for LgSection {
    fn default() -> Self {
        LgSection { r0: 1.0, a0: vec![0.05], dt: 0.25, t_max: 10.0, n_quad: 512, cons_tol: 1e-8, approach: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        crate::leaves::linspace(self.lo, self.hi, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeavesSection {
    pub kind: LeafKind,
    pub b: Axis,
    /// `c` for the pole leaf, `γ` for the log leaf.
    pub y: Axis,
    pub gamma_c: bool,
    pub gamma_c_tol: f64,
}

/// Default b axis for the log leaf, inside `0 < b < 1`.
pub const LOG_B_AXIS: Axis = Axis { lo: 0.025, hi: 0.975, n: 36 };

impl Default for LeavesSection {
    fn default() -> Self {
        LeavesSection {
            kind: LeafKind::Pole,
            b: Axis { lo: -0.9, hi: 0.9, n: 36 },
            y: Axis { lo: 0.01, hi: 0.5, n: 50 },
            gamma_c: false,
            gamma_c_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub leaf: Vec<u32>,
    /// Real parameters `ζ_n`, one per exponent.
    pub zeta: Vec<f64>,
    /// Series order for dominance certification and characteristic checks.
    pub order: usize,
    pub out: Option<String>,
    pub threads: Option<usize>,
    pub series: SeriesSection,
    pub renorm: RenormConfig,
    pub scan: ScanSection,
    pub lg: LgSection,
    pub leaves: LeavesSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Series,
            leaf: vec![2],
            zeta: vec![0.2],
            order: 400,
            out: None,
            threads: None,
            series: SeriesSection::default(),
            renorm: RenormConfig::default(),
            scan: ScanSection::default(),
            lg: LgSection::default(),
            leaves: LeavesSection::default(),
        }
    }
}

fn config_error(path: String, inner: &str) -> Error {
    let expected = match inner.find("expected ") {
        Some(i) => inner[i + "expected ".len()..].lines().next().unwrap_or("").trim().to_string(),
        None => inner.lines().next().unwrap_or("").trim().to_string(),
    };
    let key = if path.is_empty() || path == "." { "<root>".into() } else { path };
    Error::Config { key, expected }
}

impl RunConfig {
    /// Ready-to-run defaults for each command.
    pub fn demo(command: Command) -> RunConfig {
        let mut c = RunConfig { command, ..RunConfig::default() };
        match command {
            Command::Series | Command::Char | Command::Spectrum => {}
            Command::Scan => {
                c.leaf = vec![3, 6];
                c.zeta = vec![0.0, 0.01];
                c.scan.bracket = Some([0.05, 0.2]);
                c.scan.q = vec![1, 2];
            }
            Command::Lg => {
                c.leaf = vec![3];
                c.zeta = vec![];
                c.lg.t_max = 60.0;
            }
            Command::Leaves => {}
        }
        c
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let de = toml::Deserializer::parse(text).map_err(|e| config_error(String::new(), e.message()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            config_error(path, inner.message())
        })
    }

    pub fn from_json_str(text: &str) -> Result<RunConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(path, &e.into_inner().to_string())
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn leaf(&self) -> Result<Leaf> {
        Leaf::new(self.leaf.clone()).map_err(|_| Error::Config {
            key: "leaf".into(),
            expected: "a nonempty list of distinct exponents >= 2".into(),
        })
    }

    /// Range checks mirroring the module preconditions.
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, e: &str| Err(Error::Config { key: k.into(), expected: e.into() });
        if self.threads == Some(0) {
            return bad("threads", "an integer >= 1");
        }
        if self.command != Command::Leaves {
            let leaf = self.leaf()?;
            let zeta_needed = self.command != Command::Lg;
            if zeta_needed && self.zeta.len() != leaf.len() {
                return bad("zeta", &format!("{} real values, one per exponent", leaf.len()));
            }
            if self.zeta.iter().any(|z| !z.is_finite()) {
                return bad("zeta", "finite real values");
            }
        }
        if self.order < 50 {
            return bad("order", "an integer >= 50");
        }
        match self.command {
            Command::Series => {
                if self.series.p_max < 1 {
                    return bad("series.p_max", "an integer >= 1");
                }
                if self.series.m_max > self.order {
                    return bad("series.m_max", "an integer <= order");
                }
            }
            Command::Char => {}
            Command::Spectrum => self.validate_renorm()?,
            Command::Scan => {
                self.validate_renorm()?;
                let sc = &self.scan;
                if sc.vary >= self.leaf.len() {
                    return bad("scan.vary", &format!("an index < {}", self.leaf.len()));
                }
                if sc.critical.is_none() && sc.bracket.is_none() {
                    return bad("scan.bracket", "a bracket [lo, hi] when scan.critical is absent");
                }
                if let Some(c) = sc.critical {
                    if !(c.is_finite() && c != 0.0) {
                        return bad("scan.critical", "a finite nonzero number");
                    }
                }
                if let Some([lo, hi]) = sc.bracket {
                    if !(lo.is_finite() && hi.is_finite() && lo != hi) {
                        return bad("scan.bracket", "two distinct finite numbers");
                    }
                }
                if !(sc.delta_hi < 1.0 && sc.delta_lo > 0.0 && sc.delta_lo < sc.delta_hi) {
                    return bad("scan.delta_lo", "0 < delta_lo < delta_hi < 1");
                }
                if sc.points < 1 {
                    return bad("scan.points", "an integer >= 1");
                }
                self.validate_q_list("scan.q", &sc.q)?;
                if sc.k_max < 1 {
                    return bad("scan.k_max", "an integer >= 1");
                }
            }
            Command::Lg => {
                let lg = &self.lg;
                let leaf = self.leaf()?;
                if lg.a0.len() != leaf.len() {
                    return bad("lg.a0", &format!("{} real values, one per exponent", leaf.len()));
                }
                if !(lg.r0 > 0.0 && lg.r0.is_finite()) {
                    return bad("lg.r0", "a positive number");
                }
                if !(lg.dt > 0.0 && lg.dt.is_finite()) {
                    return bad("lg.dt", "a positive number");
                }
                if !(lg.t_max >= lg.dt && lg.t_max.is_finite()) {
                    return bad("lg.t_max", "a finite number >= dt");
                }
                if lg.n_quad < 16 {
                    return bad("lg.n_quad", "an integer >= 16");
                }
                if !(lg.cons_tol > 0.0 && lg.cons_tol < 1.0) {
                    return bad("lg.cons_tol", "a number in (0, 1)");
                }
                if let Some(ap) = &lg.approach {
                    self.validate_renorm()?;
                    if !(ap.tau_lo > 0.0 && ap.tau_lo < ap.tau_hi) {
                        return bad("lg.approach.tau_lo", "0 < tau_lo < tau_hi");
                    }
                    if ap.points < 1 {
                        return bad("lg.approach.points", "an integer >= 1");
                    }
                    self.validate_q_list("lg.approach.q", &ap.q)?;
                }
            }
            Command::Leaves => {
                let lv = &self.leaves;
                for (k, ax) in [("leaves.b", &lv.b), ("leaves.y", &lv.y)] {
                    if !(ax.lo.is_finite() && ax.hi.is_finite() && ax.lo <= ax.hi) {
                        return bad(k, "an axis {lo, hi, n} with finite lo <= hi");
                    }
                }
                if !(lv.gamma_c_tol >= 1e-6) {
                    return bad("leaves.gamma_c_tol", "a number >= 1e-6");
                }
            }
        }
        Ok(())
    }

    fn validate_renorm(&self) -> Result<()> {
        let s = self.leaf()?.s();
        self.renorm.validate_for(s).map_err(|e| match e {
            Error::Config { key, expected } => Error::Config { key: format!("renorm.{key}"), expected },
            other => other,
        })
    }

    fn validate_q_list(&self, key: &str, q: &[u32]) -> Result<()> {
        let s = self.leaf()?.s();
        if q.is_empty() || q.iter().any(|&v| v < 1 || v > s) {
            return Err(Error::Config { key: key.into(), expected: format!("a nonempty list of blocks in 1..={s}") });
        }
        for &v in q {
            self.renorm.with_q(v).validate_for(s).map_err(|e| match e {
                Error::Config { key, expected } => Error::Config { key: format!("renorm.{key}"), expected },
                other => other,
            })?;
        }
        Ok(())
    }
}
