//! Command-line surface. Flags override values read from `--config`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{Axis, Command, RunConfig};
use crate::error::{Error, Result};
use crate::hessian::GramMethod;
use crate::leaves::LeafKind;

pub const THREADS_ENV: &str = "TODA_SPECTRA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "toda-spectra", version, about = "Series, characteristic points and block spectra for polynomial conformal leaves")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out/<command>`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (falls back to TODA_SPECTRA_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Taylor-branch power tables R_p(m).
    Series {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        p_max: Option<usize>,
        #[arg(long)]
        m_max: Option<usize>,
    },
    /// Characteristic points and dominant-orbit data.
    Char {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Spectrum of one renormalized Gram block.
    Spectrum {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        renorm: RenormArgs,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Approach scan zeta_vary = zeta_c (1 - delta).
    Scan {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        renorm: RenormArgs,
        #[arg(long)]
        vary: Option<usize>,
        #[arg(long)]
        critical: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bracket: Option<Vec<f64>>,
        #[arg(long)]
        delta_hi: Option<f64>,
        #[arg(long)]
        delta_lo: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long = "q-list", value_delimiter = ',')]
        q_list: Option<Vec<u32>>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Laplacian growth run with threshold detection.
    Lg {
        #[arg(long, value_delimiter = ',')]
        leaf: Option<Vec<u32>>,
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a0: Option<Vec<f64>>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        /// Also scan the approach to T_c (default tau grid and q = 1).
        #[arg(long)]
        approach: bool,
    },
    /// Phase diagrams of the single-pole and single-log leaves.
    Leaves {
        #[arg(long, conflicts_with = "log")]
        pole: bool,
        #[arg(long)]
        log: bool,
        /// b axis as lo,hi,n.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Option<Vec<f64>>,
        /// c (pole) or gamma (log) axis as lo,hi,n.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        gamma_c: bool,
    },
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long, value_delimiter = ',')]
    pub leaf: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub zeta: Option<Vec<f64>>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenormArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "J")]
    pub j_max: Option<usize>,
    #[arg(long)]
    pub q: Option<u32>,
    /// tail_sum, contour or auto.
    #[arg(long)]
    pub method: Option<String>,
}

impl Sub {
    pub fn command(&self) -> Command {
        match self {
            Sub::Series { .. } => Command::Series,
            Sub::Char { .. } => Command::Char,
            Sub::Spectrum { .. } => Command::Spectrum,
            Sub::Scan { .. } => Command::Scan,
            Sub::Lg { .. } => Command::Lg,
            Sub::Leaves { .. } => Command::Leaves,
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn axis(key: &str, v: Option<Vec<f64>>) -> Result<Option<Axis>> {
    let Some(v) = v else { return Ok(None) };
    let n = v.get(2).copied().unwrap_or(f64::NAN);
    if v.len() != 3 || !(n >= 0.0 && n.fract() == 0.0) {
        return Err(Error::Config { key: key.into(), expected: "lo,hi,n with a nonnegative integer n".into() });
    }
    Ok(Some(Axis { lo: v[0], hi: v[1], n: n as usize }))
}

fn apply_point(cfg: &mut RunConfig, p: PointArgs) {
    set(&mut cfg.leaf, p.leaf);
    set(&mut cfg.zeta, p.zeta);
    set(&mut cfg.order, p.order);
}

fn apply_renorm(cfg: &mut RunConfig, r: RenormArgs) -> Result<()> {
    set(&mut cfg.renorm.beta, r.beta);
    set(&mut cfg.renorm.alpha, r.alpha);
    set(&mut cfg.renorm.j_max, r.j_max);
    set(&mut cfg.renorm.q, r.q);
    if let Some(m) = r.method {
        cfg.renorm.method = match m.as_str() {
            "tail_sum" => GramMethod::TailSum,
            "contour" => GramMethod::Contour,
            "auto" => GramMethod::Auto,
            _ => return Err(Error::Config { key: "renorm.method".into(), expected: "one of tail_sum, contour, auto".into() }),
        };
    }
    Ok(())
}

impl Cli {
    /// Merge file values, flags and the thread environment variable.
    pub fn resolve(self, env_threads: Option<String>) -> Result<(RunConfig, PathBuf)> {
        let command = self.command.command();
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config { key: "--config".into(), expected: format!("a readable file ({e})") })?;
                RunConfig::from_toml_str(&text)?
            }
            None => RunConfig::demo(command),
        };
        cfg.command = command;
        match self.command {
            Sub::Series { point, p_max, m_max } => {
                apply_point(&mut cfg, point);
                set(&mut cfg.series.p_max, p_max);
                set(&mut cfg.series.m_max, m_max);
            }
            Sub::Char { point } => apply_point(&mut cfg, point),
            Sub::Spectrum { point, renorm, k_max } => {
                apply_point(&mut cfg, point);
                apply_renorm(&mut cfg, renorm)?;
                set(&mut cfg.scan.k_max, k_max);
            }
            Sub::Scan { point, renorm, vary, critical, bracket, delta_hi, delta_lo, points, q_list, k_max } => {
                apply_point(&mut cfg, point);
                apply_renorm(&mut cfg, renorm)?;
                set(&mut cfg.scan.vary, vary);
                if critical.is_some() {
                    cfg.scan.critical = critical;
                }
                if let Some(b) = bracket {
                    if b.len() != 2 {
                        return Err(Error::Config { key: "scan.bracket".into(), expected: "lo,hi".into() });
                    }
                    cfg.scan.bracket = Some([b[0], b[1]]);
                }
                set(&mut cfg.scan.delta_hi, delta_hi);
                set(&mut cfg.scan.delta_lo, delta_lo);
                set(&mut cfg.scan.points, points);
                set(&mut cfg.scan.q, q_list);
                set(&mut cfg.scan.k_max, k_max);
            }
            Sub::Lg { leaf, r0, a0, dt, t_max, approach } => {
                set(&mut cfg.leaf, leaf);
                set(&mut cfg.lg.r0, r0);
                set(&mut cfg.lg.a0, a0);
                set(&mut cfg.lg.dt, dt);
                set(&mut cfg.lg.t_max, t_max);
                if approach && cfg.lg.approach.is_none() {
                    cfg.lg.approach = Some(Default::default());
                }
            }
            Sub::Leaves { pole, log, b, grid, gamma_c } => {
                if pole {
                    cfg.leaves.kind = LeafKind::Pole;
                }
                if log {
                    cfg.leaves.kind = LeafKind::Log;
                    // The pole default spans b < 0, which the log leaf rejects.
                    if b.is_none() && cfg.leaves.b == super::config::LeavesSection::default().b {
                        cfg.leaves.b = super::config::LOG_B_AXIS;
                    }
                }
                set(&mut cfg.leaves.b, axis("leaves.b", b)?);
                set(&mut cfg.leaves.y, axis("leaves.y", grid)?);
                cfg.leaves.gamma_c |= gamma_c;
            }
        }
        if let Some(n) = self.threads {
            cfg.threads = Some(n);
        } else if let Some(v) = env_threads {
            let n = v.trim().parse::<usize>().map_err(|_| Error::Config {
                key: THREADS_ENV.into(),
                expected: "a positive integer".into(),
            })?;
            cfg.threads = Some(n);
        }
        if let Some(out) = self.out {
            cfg.out = Some(out.to_string_lossy().into_owned());
        }
        let out = PathBuf::from(cfg.out.clone().unwrap_or_else(|| format!("out/{}", command.name())));
        cfg.validate()?;
        Ok((cfg, out))
    }
}

/// Entry point behind the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (cfg, out) = match cli.resolve(std::env::var(THREADS_ENV).ok()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match super::compute(&cfg).and_then(|art| {
        let files = super::write_artifacts(&out, &cfg, &art)?;
        Ok((art, files))
    }) {
        Ok((art, files)) => {
            if let Some(w) = art.results.get("warnings").and_then(|w| w.as_array()) {
                for m in w.iter().filter_map(|m| m.as_str()) {
                    eprintln!("warning: {m}");
                }
            }
            println!("{}: wrote {} files to {}, {} failed points", cfg.command.name(), files.len(), out.display(), art.failed());
            art.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
