//! The JSON run configuration.
//!
//! Matrices are nested arrays of rows; each entry is a real number or a `[re, im]` pair.
//! Row-major, first site most significant for multi-site matrices.

use std::f64::consts::LN_2;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dense::{c, CMatrix};
use crate::error::{Error, Result};
use crate::kamflow::{
    DecaySchedule, FlowConfig, FlowMode, DEFAULT_EPSILON_THRESHOLD, DEFAULT_KMAX, DEFAULT_NMAX, DEFAULT_VTOL,
};
use crate::lattice::{SiteSet, Volume};
use crate::markov::{MarkovProblem, MarkovTerm, WeightedSite};
use crate::opalgebra::{LocalOperator, SiteSpace, Space, DEFAULT_DROP_THRESHOLD};
use crate::verify::{CheckKind, SuiteConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Flow,
    Verify,
    Markov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

pub type MatrixDoc = Vec<Vec<Entry>>;

pub fn matrix_from_doc(field: &str, doc: &MatrixDoc) -> Result<CMatrix> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, Vec::len);
    if rows == 0 || doc.iter().any(|r| r.len() != cols) {
        return Err(Error::schema(field, "matrix rows must be nonempty and of equal length"));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| match doc[i][j] {
        Entry::Real(x) => c(x, 0.0),
        Entry::Complex([re, im]) => c(re, im),
    }))
}

pub fn matrix_to_doc(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeDoc {
    pub extents: Vec<usize>,
    #[serde(default)]
    pub steiner_limit: Option<usize>,
}

/// One site: either `h` or `diagonal` energies, with an optional declared gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDoc {
    #[serde(default)]
    pub h: Option<MatrixDoc>,
    #[serde(default)]
    pub diagonal: Option<Vec<f64>>,
    #[serde(default)]
    pub gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub sites: Vec<usize>,
    pub matrix: MatrixDoc,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDoc {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Defaults to `kappa + 0.5`.
    #[serde(default)]
    pub kappa_prime: Option<f64>,
    #[serde(default = "default_vtol")]
    pub vtol: f64,
    #[serde(default = "default_nmax")]
    pub nmax: usize,
    #[serde(default)]
    pub mode: FlowMode,
    #[serde(default = "default_drop")]
    pub drop_threshold: f64,
    #[serde(default = "default_kmax")]
    pub kmax: usize,
    #[serde(default = "default_epsilon_threshold")]
    pub epsilon_threshold: f64,
}

fn default_kappa() -> f64 {
    LN_2
}
fn default_vtol() -> f64 {
    DEFAULT_VTOL
}
fn default_nmax() -> usize {
    DEFAULT_NMAX
}
fn default_drop() -> f64 {
    DEFAULT_DROP_THRESHOLD
}
fn default_kmax() -> usize {
    DEFAULT_KMAX
}
fn default_epsilon_threshold() -> f64 {
    DEFAULT_EPSILON_THRESHOLD
}

impl Default for FlowDoc {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl FlowDoc {
    pub fn kappa_prime(&self) -> f64 {
        self.kappa_prime.unwrap_or(self.kappa + 0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyDoc {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "all_checks")]
    pub checks: Vec<CheckKind>,
    #[serde(default = "one")]
    pub bound_scale: f64,
}

fn default_instances() -> usize {
    100
}
fn all_checks() -> Vec<CheckKind> {
    CheckKind::ALL.to_vec()
}

impl Default for VerifyDoc {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpDoc {
    pub rate: f64,
    pub op: MatrixDoc,
}

/// A Markov site or term: a rate table (classical), a natural-basis generator, or a
/// Lindblad form with `hamiltonian` and `jumps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    #[serde(default)]
    pub sites: Option<Vec<usize>>,
    #[serde(default)]
    pub rates: Option<MatrixDoc>,
    #[serde(default)]
    pub generator: Option<MatrixDoc>,
    #[serde(default)]
    pub hamiltonian: Option<MatrixDoc>,
    #[serde(default)]
    pub jumps: Vec<JumpDoc>,
    /// Reference measure of a classical site.
    #[serde(default)]
    pub nu: Option<Vec<f64>>,
    /// Reference state of a quantum site.
    #[serde(default)]
    pub rho: Option<MatrixDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovDoc {
    pub sites: Vec<GeneratorDoc>,
    #[serde(default)]
    pub terms: Vec<GeneratorDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub volume: Option<VolumeDoc>,
    #[serde(default)]
    pub sites: Vec<SiteDoc>,
    #[serde(default)]
    pub perturbation: Vec<TermDoc>,
    #[serde(default)]
    pub flow: FlowDoc,
    #[serde(default)]
    pub verify: VerifyDoc,
    #[serde(default)]
    pub markov: Option<MarkovDoc>,
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Command-line overrides of configuration values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<FlowMode>,
    pub vtol: Option<f64>,
    pub nmax: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let f = &self.flow;
        DecaySchedule::new(f.kappa, f.kappa_prime())?;
        if !(f.vtol > 0.0) {
            return Err(Error::schema("vtol", "must be positive"));
        }
        if f.nmax == 0 {
            return Err(Error::schema("nmax", "must be at least 1"));
        }
        if !(f.drop_threshold >= 0.0) {
            return Err(Error::schema("drop_threshold", "must be non-negative"));
        }
        if !(self.verify.bound_scale > 0.0) {
            return Err(Error::schema("bound_scale", "must be positive"));
        }
        match self.kind {
            Kind::Flow => {
                self.volume()?;
                if self.sites.is_empty() {
                    return Err(Error::schema("sites", "a flow needs at least one site"));
                }
                self.space()?;
            }
            Kind::Markov => {
                self.volume()?;
                if self.markov.is_none() {
                    return Err(Error::schema("markov", "missing for kind `markov`"));
                }
            }
            Kind::Verify => {}
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(mode) = o.mode {
            self.flow.mode = mode;
        }
        if let Some(vtol) = o.vtol {
            self.flow.vtol = vtol;
        }
        if let Some(nmax) = o.nmax {
            self.flow.nmax = nmax;
        }
        self.validate()
    }

    pub fn volume(&self) -> Result<Volume> {
        let doc = self.volume.as_ref().ok_or_else(|| Error::schema("volume", "missing"))?;
        let v = Volume::new(doc.extents.clone()).map_err(|e| Error::schema("volume.extents", e.to_string()))?;
        Ok(match doc.steiner_limit {
            Some(limit) => v.with_steiner_limit(limit),
            None => v,
        })
    }

    pub fn space(&self) -> Result<Arc<Space>> {
        let sites = self
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| site_from_doc(i, s))
            .collect::<Result<Vec<_>>>()?;
        let space = Space::new(self.volume()?, sites)?;
        Ok(space.with_drop_threshold(self.flow.drop_threshold))
    }

    pub fn perturbation(&self, space: &Arc<Space>) -> Result<LocalOperator> {
        let mut total = LocalOperator::zero(space);
        for (i, t) in self.perturbation.iter().enumerate() {
            let field = format!("perturbation[{i}]");
            let m = matrix_from_doc(&field, &t.matrix)? * c(t.scale, 0.0);
            if t.sites.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::schema(format!("{field}.sites"), "must be strictly ascending"));
            }
            let support: SiteSet = t.sites.iter().copied().collect();
            let term = LocalOperator::decompose(space, support, &m).map_err(|e| Error::schema(&field, e.to_string()))?;
            total = &total + &term;
        }
        Ok(total)
    }

    pub fn flow_config(&self) -> Result<FlowConfig> {
        let space = self.space()?;
        let f = &self.flow;
        let mut cfg = FlowConfig::new(self.perturbation(&space)?, f.kappa, f.kappa_prime())?
            .with_mode(f.mode)
            .with_vtol(f.vtol)
            .with_nmax(f.nmax);
        cfg.kmax = f.kmax;
        cfg.epsilon_threshold = f.epsilon_threshold;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            instances: self.verify.instances,
            checks: self.verify.checks.clone(),
            bound_scale: self.verify.bound_scale,
        }
    }

    pub fn markov_problem(&self) -> Result<MarkovProblem> {
        let doc = self.markov.as_ref().ok_or_else(|| Error::schema("markov", "missing"))?;
        let classical = doc.sites.first().is_some_and(|s| s.rates.is_some());
        let sites = doc
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| weighted_site_from_doc(i, s))
            .collect::<Result<Vec<_>>>()?;
        let volume = self.volume()?;
        let dims: Vec<usize> = if sites.len() == 1 {
            vec![sites[0].dim(); volume.num_sites()]
        } else {
            sites.iter().map(WeightedSite::dim).collect()
        };
        let terms = doc
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| term_from_doc(i, t, &dims, classical))
            .collect::<Result<Vec<_>>>()?;
        let f = &self.flow;
        let mut problem = MarkovProblem::new(volume, sites, terms, f.kappa, f.kappa_prime())?;
        problem.vtol = f.vtol;
        problem.nmax = f.nmax;
        problem.mode = f.mode;
        Ok(problem)
    }
}

fn site_from_doc(i: usize, s: &SiteDoc) -> Result<SiteSpace> {
    let field = format!("sites[{i}]");
    let site = match (&s.h, &s.diagonal) {
        (Some(h), None) => SiteSpace::new(matrix_from_doc(&format!("{field}.h"), h)?),
        (None, Some(d)) => SiteSpace::diagonal(d),
        _ => return Err(Error::schema(field, "exactly one of `h` and `diagonal` is required")),
    }?;
    match s.gap {
        Some(g) => site.with_gap(g).map_err(|e| Error::schema(format!("{field}.gap"), e.to_string())),
        None => Ok(site),
    }
}

fn jumps_from_doc(field: &str, jumps: &[JumpDoc]) -> Result<Vec<(f64, CMatrix)>> {
    jumps
        .iter()
        .enumerate()
        .map(|(k, j)| Ok((j.rate, matrix_from_doc(&format!("{field}.jumps[{k}]"), &j.op)?)))
        .collect()
}

fn weighted_site_from_doc(i: usize, s: &GeneratorDoc) -> Result<WeightedSite> {
    let field = format!("markov.sites[{i}]");
    let rho = s.rho.as_ref().map(|r| matrix_from_doc(&format!("{field}.rho"), r)).transpose()?;
    match (&s.rates, &s.generator, &s.hamiltonian) {
        (Some(q), None, None) => WeightedSite::classical(matrix_from_doc(&field, q)?, s.nu.clone()),
        (None, Some(l), None) => WeightedSite::quantum(rho, matrix_from_doc(&field, l)?),
        (None, None, Some(h)) => {
            WeightedSite::lindblad(rho, &matrix_from_doc(&field, h)?, &jumps_from_doc(&field, &s.jumps)?)
        }
        _ => Err(Error::schema(field, "exactly one of `rates`, `generator` and `hamiltonian` is required")),
    }
}

fn term_from_doc(i: usize, t: &GeneratorDoc, dims: &[usize], classical: bool) -> Result<MarkovTerm> {
    let field = format!("markov.terms[{i}]");
    let sites = t.sites.clone().ok_or_else(|| Error::schema(format!("{field}.sites"), "missing"))?;
    if let Some(&x) = sites.iter().find(|&&x| x >= dims.len()) {
        return Err(Error::schema(format!("{field}.sites"), format!("site {x} outside volume")));
    }
    match (&t.rates, &t.generator, &t.hamiltonian) {
        (Some(q), None, None) if classical => MarkovTerm::new(sites, matrix_from_doc(&field, q)?),
        (None, Some(l), None) => MarkovTerm::new(sites, matrix_from_doc(&field, l)?),
        (None, None, Some(h)) if !classical => {
            let local: Vec<usize> = sites.iter().map(|&x| dims[x]).collect();
            MarkovTerm::lindblad(sites, &local, &matrix_from_doc(&field, h)?, &jumps_from_doc(&field, &t.jumps)?)
        }
        _ => Err(Error::schema(field, "expected `rates` (classical), `generator`, or `hamiltonian` (quantum)")),
    }
}
