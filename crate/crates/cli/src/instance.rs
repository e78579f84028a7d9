//! JSON instance and solution documents.
//!
//! Matrices are stored as separate row-major real and imaginary arrays so
//! that any JSON reader can load them without a complex-number convention.
//! Floats are written in the shortest form that parses back to the same
//! double.

use std::fs;
use std::path::Path;

use cmop_core::sample::{random_instance, PRNG_ID};
use cmop_core::{ComplexMatrix, ProblemInstance};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const INSTANCE_FORMAT: &str = "cmop-instance";
pub const SOLUTION_FORMAT: &str = "cmop-solution";
pub const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_M: usize = 10;
pub const DEFAULT_N: usize = 5;
pub const DEFAULT_K: usize = 8;
pub const DEFAULT_RANGE: f64 = 10.0;
pub const DEFAULT_ETA: f64 = 2.0;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format: String,
    pub version: u32,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prng: Option<String>,
    pub h_re: Vec<Vec<f64>>,
    pub h_im: Vec<Vec<f64>>,
    pub a_re: Vec<Vec<f64>>,
    pub a_im: Vec<Vec<f64>>,
}

/// Seeded reference instance: every real and imaginary component of `H`
/// and `A` uniform in `[-range, range]`.
pub fn gen_instance(m: usize, n: usize, k: usize, range: f64, eta: f64, seed: u64) -> CliResult<InstanceFile> {
    for (name, v) in [("m", m), ("n", n), ("k", k)] {
        if v == 0 {
            return Err(CliError::Input(format!("{name}: must be at least 1")));
        }
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(CliError::Input(format!("range: must be positive and finite, got {range}")));
    }
    let inst = random_instance(m, n, k, range, eta, seed)?;
    let mut file = InstanceFile::from_instance(&inst);
    file.seed = Some(seed);
    file.range = Some(range);
    file.prng = Some(PRNG_ID.to_string());
    Ok(file)
}

impl InstanceFile {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        let (h_re, h_im) = split(inst.h());
        let (a_re, a_im) = split(inst.a());
        Self {
            format: INSTANCE_FORMAT.to_string(),
            version: FORMAT_VERSION,
            m: inst.m(),
            n: inst.n(),
            k: inst.k(),
            eta: inst.eta(),
            seed: None,
            range: None,
            prng: None,
            h_re,
            h_im,
            a_re,
            a_im,
        }
    }

    /// Checks every declared shape and value; messages start with the name
    /// of the offending field.
    pub fn validate(&self) -> Result<(), String> {
        if self.format != INSTANCE_FORMAT {
            return Err(format!("format: expected \"{INSTANCE_FORMAT}\", found \"{}\"", self.format));
        }
        if self.version != FORMAT_VERSION {
            return Err(format!("version: unsupported version {}", self.version));
        }
        for (name, v) in [("m", self.m), ("n", self.n), ("k", self.k)] {
            if v == 0 {
                return Err(format!("{name}: must be at least 1"));
            }
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(format!("eta: must be positive and finite, got {}", self.eta));
        }
        if let Some(r) = self.range {
            if !(r > 0.0 && r.is_finite()) {
                return Err(format!("range: must be positive and finite, got {r}"));
            }
        }
        check_grid("h_re", &self.h_re, self.m, self.n)?;
        check_grid("h_im", &self.h_im, self.m, self.n)?;
        check_grid("a_re", &self.a_re, self.m, self.k)?;
        check_grid("a_im", &self.a_im, self.m, self.k)?;
        Ok(())
    }

    pub fn to_instance(&self) -> Result<ProblemInstance, String> {
        self.validate()?;
        let h = join(&self.h_re, &self.h_im, self.m, self.n).map_err(|e| format!("h_re: {e}"))?;
        let a = join(&self.a_re, &self.a_im, self.m, self.k).map_err(|e| format!("a_re: {e}"))?;
        ProblemInstance::new(h, a, self.eta).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| CliError::format(path, e.to_string()))?;
        file.validate().map_err(|e| CliError::format(path, e))?;
        Ok(file)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }
}

pub fn load_instance(path: &Path) -> CliResult<ProblemInstance> {
    InstanceFile::read(path)?
        .to_instance()
        .map_err(|e| CliError::format(path, e))
}

/// A solver output as written by `solve -o` and read by `check --w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub format: String,
    pub version: u32,
    pub method: String,
    pub n: usize,
    pub k: usize,
    pub objective: f64,
    pub iterations: usize,
    pub stop_reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub lipschitz: f64,
    pub w_re: Vec<Vec<f64>>,
    pub w_im: Vec<Vec<f64>>,
}

impl SolutionFile {
    pub fn new(method: &str, w: &ComplexMatrix, objective: f64, iterations: usize, stop_reason: &str, alpha: Option<f64>, lipschitz: f64) -> Self {
        let (w_re, w_im) = split(w);
        Self {
            format: SOLUTION_FORMAT.to_string(),
            version: FORMAT_VERSION,
            method: method.to_string(),
            n: w.rows(),
            k: w.cols(),
            objective,
            iterations,
            stop_reason: stop_reason.to_string(),
            alpha,
            lipschitz,
            w_re,
            w_im,
        }
    }

    pub fn matrix(&self) -> Result<ComplexMatrix, String> {
        if self.format != SOLUTION_FORMAT {
            return Err(format!("format: expected \"{SOLUTION_FORMAT}\", found \"{}\"", self.format));
        }
        check_grid("w_re", &self.w_re, self.n, self.k)?;
        check_grid("w_im", &self.w_im, self.n, self.k)?;
        join(&self.w_re, &self.w_im, self.n, self.k).map_err(|e| format!("w_re: {e}"))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        fs::write(path, s).map_err(|e| CliError::io(path, e))
    }

    pub fn read_matrix(path: &Path) -> CliResult<ComplexMatrix> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: Self = serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
        file.matrix().map_err(|e| CliError::format(path, e))
    }
}

fn split(x: &ComplexMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..x.rows()).map(|r| x.row(r).iter().map(|z| z.re).collect()).collect();
    let im = (0..x.rows()).map(|r| x.row(r).iter().map(|z| z.im).collect()).collect();
    (re, im)
}

fn join(re: &[Vec<f64>], im: &[Vec<f64>], rows: usize, cols: usize) -> cmop_core::Result<ComplexMatrix> {
    let flat_re: Vec<f64> = re.iter().flatten().copied().collect();
    let flat_im: Vec<f64> = im.iter().flatten().copied().collect();
    ComplexMatrix::from_parts(rows, cols, &flat_re, &flat_im)
}

fn check_grid(name: &str, grid: &[Vec<f64>], rows: usize, cols: usize) -> Result<(), String> {
    if grid.len() != rows {
        return Err(format!("{name}: expected {rows} rows, found {}", grid.len()));
    }
    for (r, row) in grid.iter().enumerate() {
        if row.len() != cols {
            return Err(format!("{name}[{r}]: expected {cols} columns, found {}", row.len()));
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(format!("{name}[{r}][{c}]: value is not finite"));
        }
    }
    Ok(())
}
