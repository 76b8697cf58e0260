use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use cavity_bands::{FourierPotential, FreqVector};
use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Band energies on a uniform k-grid.
    Bands,
    /// Minimal gap E2 - E1 against B, next to the perturbative formula.
    GapScan,
    /// Chern number of a band group.
    Chern,
    /// Berry curvature map of one band.
    Curvature,
    /// Dirac cone fit at k0 = (1/2, 1/2).
    Dirac,
    /// Convergence of the full model to the effective one in J.
    Jstudy,
    /// Parent overlap against its closed form.
    Overlap,
    /// Reflection symmetries and level pairing at k0.
    Symmetry,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::GapScan => "gap-scan",
            Command::Chern => "chern",
            Command::Curvature => "curvature",
            Command::Dirac => "dirac",
            Command::Jstudy => "jstudy",
            Command::Overlap => "overlap",
            Command::Symmetry => "symmetry",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Command::Chern | Command::Dirac | Command::Symmetry => "json",
            _ => "csv",
        }
    }

    /// Field at which `ell` is read: `2πℓ`, or `(2ℓ+1)π` for the symmetric points.
    fn field_from_ell(self, ell: i64) -> f64 {
        match self {
            Command::Dirac | Command::Symmetry => (2 * ell + 1) as f64 * PI,
            _ => 2.0 * PI * ell as f64,
        }
    }
}

/// Run configuration as read from JSON; every key is optional and unknown keys are rejected.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(rename = "V0")]
    pub v0: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    #[serde(rename = "B_min")]
    pub b_min: Option<f64>,
    #[serde(rename = "B_max")]
    pub b_max: Option<f64>,
    pub steps: Option<usize>,
    pub ell: Option<i64>,
    #[serde(rename = "N")]
    pub n: Option<i64>,
    #[serde(rename = "Nw")]
    pub nw: Option<usize>,
    #[serde(rename = "Ng")]
    pub ng: Option<usize>,
    pub grid: Option<usize>,
    pub theta: Option<f64>,
    #[serde(rename = "J_values")]
    pub j_values: Option<Vec<f64>>,
    pub band_set: Option<Vec<usize>>,
    pub k: Option<[f64; 2]>,
    pub count: Option<usize>,
    pub pairs: Option<usize>,
    pub seed: Option<u64>,
    pub potential: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Command-line overrides of [`RunConfig`].
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Potential strength V0 of V0 (cos x1 + cos x2).
    #[arg(long = "V0")]
    pub v0: Option<f64>,
    /// Smoothed coupling gamma = V0 exp(-B/4), instead of V0.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Magnetic field B.
    #[arg(long = "B")]
    pub b: Option<f64>,
    /// First field of a gap scan.
    #[arg(long = "B-min")]
    pub b_min: Option<f64>,
    /// Last field of a gap scan.
    #[arg(long = "B-max")]
    pub b_max: Option<f64>,
    /// Number of intervals of a gap scan.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Field index: B = 2 pi ell, or (2 ell + 1) pi for dirac and symmetry.
    #[arg(long)]
    pub ell: Option<i64>,
    /// Plane-wave cutoff, modes |m_i| <= N.
    #[arg(long = "N")]
    pub n: Option<i64>,
    /// Highest Hermite level of the full model.
    #[arg(long = "Nw")]
    pub nw: Option<usize>,
    /// k-grid side for chern and curvature.
    #[arg(long = "Ng")]
    pub ng: Option<usize>,
    /// k-grid side for bands, coarse grid for gap-scan.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Gauge parameter in [0, 1].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Comma-separated J values for jstudy.
    #[arg(long = "J-values", value_delimiter = ',')]
    pub j_values: Option<Vec<f64>>,
    /// Comma-separated 1-based bands: group for chern, pair for dirac, list for jstudy.
    #[arg(long = "bands", value_delimiter = ',')]
    pub band_set: Option<Vec<usize>>,
    /// Quasi-momentum k1,k2 for jstudy.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub k: Option<Vec<f64>>,
    /// Number of bands written by the bands command.
    #[arg(long)]
    pub count: Option<usize>,
    /// Number of random (k, k') pairs for overlap.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Seed of the random k-points.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file of Fourier coefficients [{"n1", "n2", "re", "im"}, ...] replacing the standard potential.
    #[arg(long)]
    pub potential: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn apply(&mut self, f: Flags) -> anyhow::Result<()> {
        macro_rules! take {
            ($($field:ident),*) => { $( if f.$field.is_some() { self.$field = f.$field; } )* };
        }
        take!(v0, gamma, b, b_min, b_max, steps, ell, n, nw, ng, grid, theta, j_values, band_set, count, pairs, seed, potential);
        if let Some(k) = f.k {
            self.k = Some([k[0], k[1]]);
        }
        Ok(())
    }

    /// Fills defaults for `command` and checks every field that will be used.
    pub fn resolve(mut self) -> anyhow::Result<Resolved> {
        let Some(command) = self.command else { bail!("no command given on the command line or in the config") };
        use Command::*;
        if self.b.is_some() && self.ell.is_some() {
            bail!("give either B or ell, not both");
        }
        if self.v0.is_some() && self.gamma.is_some() {
            bail!("give either V0 or gamma, not both");
        }
        if self.potential.is_some() && (self.v0.is_some() || self.gamma.is_some()) {
            bail!("a potential file replaces V0 and gamma");
        }
        if command == GapScan && (self.b.is_some() || self.ell.is_some()) {
            bail!("gap-scan takes B_min, B_max and steps instead of B or ell");
        }
        if self.potential.is_some() && matches!(command, GapScan | Overlap) {
            bail!("{} does not take a potential file", command.name());
        }
        if let Some(ell) = self.ell {
            if ell < 0 {
                bail!("ell must be >= 0, got {ell}");
            }
            self.b = Some(command.field_from_ell(ell));
        }
        let default_b = command.field_from_ell(1);
        let b = *self.b.get_or_insert(default_b);
        if !(b >= 0.0 && b.is_finite()) {
            bail!("B must be finite and >= 0, got {b}");
        }
        let default_v0 = match command {
            Chern => 0.05,
            Jstudy => 0.3,
            _ => 0.1,
        };
        if let Some(g) = self.gamma.take() {
            if command == GapScan {
                bail!("gap-scan takes V0, since gamma varies with B");
            }
            self.v0 = Some(g * (b / 4.0).exp());
        }
        if self.potential.is_none() && command != Overlap {
            self.v0.get_or_insert(default_v0);
        }
        let theta = *self.theta.get_or_insert(match command {
            Curvature => 0.5,
            _ => 0.0,
        });
        if !(0.0..=1.0).contains(&theta) {
            bail!("theta must lie in [0, 1], got {theta}");
        }
        let n = *self.n.get_or_insert(match command {
            Chern => 8,
            GapScan | Dirac => 5,
            Jstudy => 3,
            _ => 6,
        });
        if n < 2 {
            bail!("N must be >= 2, got {n}");
        }
        match command {
            Bands => {
                positive("grid", *self.grid.get_or_insert(32))?;
                let count = *self.count.get_or_insert(8);
                let dim = ((2 * n + 1) * (2 * n + 1)) as usize;
                if count == 0 || count > dim {
                    bail!("count must lie in 1..={dim}, got {count}");
                }
            }
            GapScan => {
                let (lo, hi) = (*self.b_min.get_or_insert(0.0), *self.b_max.get_or_insert(25.0));
                if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
                    bail!("need 0 <= B_min <= B_max, got {lo}, {hi}");
                }
                positive("steps", *self.steps.get_or_insert(200))?;
                positive("grid", *self.grid.get_or_insert(16))?;
                self.b = None;
            }
            Chern | Curvature => {
                let ng = *self.ng.get_or_insert(24);
                if ng < 4 {
                    bail!("Ng must be >= 4, got {ng}");
                }
                let set = self.band_set.get_or_insert_with(|| vec![1]);
                match (command, set.as_slice()) {
                    (Chern, [a] | [a, _]) if *a >= 1 && set.last() >= Some(a) => {}
                    (Curvature, [a]) if *a >= 1 => {}
                    _ => bail!("invalid band set {set:?} for {}", command.name()),
                }
            }
            Dirac => {
                let set = self.band_set.get_or_insert_with(|| vec![1, 2]);
                if !matches!(set.as_slice(), [a, b] if *a >= 1 && *b == a + 1) {
                    bail!("dirac needs an adjacent pair of 1-based bands, got {set:?}");
                }
            }
            Jstudy => {
                positive("Nw", *self.nw.get_or_insert(8))?;
                let js = self.j_values.get_or_insert_with(|| vec![50.0, 100.0, 200.0, 400.0]);
                if js.len() < 2 || js.iter().any(|j| !(*j > 0.0 && j.is_finite())) {
                    bail!("J_values needs at least two positive values, got {js:?}");
                }
                let set = self.band_set.get_or_insert_with(|| vec![1, 2, 3]);
                if set.is_empty() || set.contains(&0) {
                    bail!("band list must be nonempty and 1-based, got {set:?}");
                }
                self.k.get_or_insert([0.25, 0.4]);
            }
            Overlap => {
                if positive("Nw", *self.nw.get_or_insert(60))? < 40 {
                    bail!("overlap needs Nw >= 40");
                }
                positive("pairs", *self.pairs.get_or_insert(20))?;
                self.seed.get_or_insert(0);
            }
            Symmetry => {}
        }
        if let Some(t) = self.threads {
            positive("threads", t)?;
        }
        let potential = match &self.potential {
            Some(path) => Some(load_potential(path)?),
            None => None,
        };
        let output = self
            .output_path
            .get_or_insert_with(|| PathBuf::from(format!("{}.{}", command.name(), command.extension())))
            .clone();
        Ok(Resolved { command, config: self, potential, output })
    }
}

fn positive(name: &str, v: usize) -> anyhow::Result<usize> {
    if v == 0 {
        bail!("{name} must be >= 1");
    }
    Ok(v)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientRecord {
    n1: i64,
    n2: i64,
    re: f64,
    #[serde(default)]
    im: f64,
}

pub fn load_potential(path: &Path) -> anyhow::Result<FourierPotential> {
    let text = fs::read_to_string(path).with_context(|| format!("reading potential {}", path.display()))?;
    let records: Vec<CoefficientRecord> =
        serde_json::from_str(&text).with_context(|| format!("parsing potential {}", path.display()))?;
    Ok(FourierPotential::from_coefficients(
        records.into_iter().map(|r| (FreqVector::new(r.n1, r.n2), Complex64::new(r.re, r.im))),
    )?)
}

/// A validated configuration with all defaults filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub command: Command,
    pub config: RunConfig,
    pub potential: Option<FourierPotential>,
    pub output: PathBuf,
}

impl Resolved {
    pub fn b(&self) -> f64 {
        self.config.b.unwrap_or(0.0)
    }

    /// The unsmoothed crystal potential `V`.
    pub fn crystal_potential(&self) -> FourierPotential {
        match &self.potential {
            Some(p) => p.clone(),
            None => FourierPotential::standard(self.config.v0.unwrap_or(0.0)),
        }
    }
}
