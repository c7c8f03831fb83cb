//! Experiment files: an `[experiment]` header followed by `key = value`
//! lines. `#` starts a comment. In sweep files a value may be a list
//! `[a, b, c]`, and the sweep runs the cartesian product of all lists.

use anyhow::{anyhow, bail, Context, Result};
use fracdecay::decay::WindowPolicy;
use fracdecay::grid::InitialCondition;
use fracdecay::operators::{KernelNormalization, PTerm, VectorPotential};
use fracdecay::time::{CaputoNormalization, Scheme, SimulationConfig, TimeDerivativeSpec};
use fracdecay::{DiffusionOperator, Grid};
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

/// One `key = value` line; `values` has several entries only for lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub values: Vec<String>,
    pub is_list: bool,
}

pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    let mut header = false;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("line {}", no + 1);
        if line.starts_with('[') && !line.contains('=') {
            if line != "[experiment]" {
                bail!("{}: unknown section {line}, expected [experiment]", at());
            }
            if header {
                bail!("{}: duplicate [experiment] header", at());
            }
            header = true;
            continue;
        }
        if !header {
            bail!("{}: expected [experiment] header before any key", at());
        }
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("{}: expected key = value", at()))?;
        let key = key.trim().to_string();
        let value = value.trim();
        if key.is_empty() {
            bail!("{}: empty key", at());
        }
        if out.iter().any(|e| e.key == key) {
            bail!("{}: duplicate key '{key}'", at());
        }
        let entry = if let Some(inner) = value.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| anyhow!("{}: unterminated list for '{key}'", at()))?;
            let values: Vec<String> =
                inner.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            Entry { key, values, is_list: true }
        } else {
            Entry { key, values: vec![value.to_string()], is_list: false }
        };
        out.push(entry);
    }
    if !header {
        bail!("missing [experiment] header");
    }
    Ok(out)
}

/// Cartesian product of the list entries, in file order with the last list
/// varying fastest. Each cell maps every key to one value; the second item
/// lists the swept `key=value` pairs.
pub fn expand(entries: &[Entry]) -> Result<Vec<(BTreeMap<String, String>, Vec<(String, String)>)>> {
    if let Some(e) = entries.iter().find(|e| e.is_list && e.values.is_empty()) {
        bail!("empty range for '{}'", e.key);
    }
    let mut cells = vec![(BTreeMap::new(), Vec::new())];
    for e in entries {
        let mut next = Vec::with_capacity(cells.len() * e.values.len());
        for (map, swept) in &cells {
            for v in &e.values {
                let mut m: BTreeMap<String, String> = map.clone();
                m.insert(e.key.clone(), v.clone());
                let mut s: Vec<(String, String)> = swept.clone();
                if e.is_list {
                    s.push((e.key.clone(), v.clone()));
                }
                next.push((m, s));
            }
        }
        cells = next;
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub outdir: PathBuf,
    pub seed: u64,
    pub sim: SimulationConfig,
    pub fit_window: WindowPolicy,
}

const KEYS: &[&str] = &[
    "name", "outdir", "seed", "dim", "n", "nx", "ny", "x_min", "x_max", "y_min", "y_max", "operator", "d", "sigma",
    "p", "m", "m0", "b", "a", "a_matrix", "terms", "axes", "lambda1", "lambda2", "alpha", "normalization", "kernel",
    "scheme", "c_stab", "u0", "amplitude", "radius", "passes", "smoothness", "nonnegative", "u0_seed", "dt",
    "t_final", "s_list", "record_every", "energy", "fit_window", "snapshots",
];

struct Keys<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Keys<'_> {
    fn raw(&self, k: &str) -> Option<&str> {
        self.map.get(k).map(String::as_str)
    }

    fn f64_or(&self, k: &str, default: f64) -> Result<f64> {
        match self.raw(k) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("'{k}' must be a number, got '{v}'")),
        }
    }

    fn f64_req(&self, k: &str) -> Result<f64> {
        let v = self.raw(k).ok_or_else(|| anyhow!("missing required key '{k}'"))?;
        v.parse().with_context(|| format!("'{k}' must be a number, got '{v}'"))
    }

    fn usize_or(&self, k: &str, default: usize) -> Result<usize> {
        match self.raw(k) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("'{k}' must be a nonnegative integer, got '{v}'")),
        }
    }

    fn bool_or(&self, k: &str, default: bool) -> Result<bool> {
        match self.raw(k) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => bail!("'{k}' must be true or false, got '{v}'"),
        }
    }

    fn floats(&self, k: &str) -> Result<Option<Vec<f64>>> {
        self.raw(k)
            .map(|v| {
                v.split([' ', ';', ','])
                    .filter(|x| !x.is_empty())
                    .map(|x| x.parse::<f64>().with_context(|| format!("bad number '{x}' in '{k}'")))
                    .collect()
            })
            .transpose()
    }

    /// `a:b:c; d:e:f` groups of `width` numbers.
    fn groups(&self, k: &str, width: usize) -> Result<Option<Vec<Vec<f64>>>> {
        let Some(v) = self.raw(k) else { return Ok(None) };
        let mut out = Vec::new();
        for g in v.split(';').map(str::trim).filter(|g| !g.is_empty()) {
            let nums: Vec<f64> = g
                .split(':')
                .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number '{x}' in '{k}'")))
                .collect::<Result<_>>()?;
            if nums.len() != width {
                bail!("'{k}' entries need {width} colon-separated numbers, got '{g}'");
            }
            out.push(nums);
        }
        Ok(Some(out))
    }
}

fn potential(k: &Keys) -> Result<VectorPotential> {
    let a0 = match k.floats("a")? {
        None => [0.0, 0.0],
        Some(v) if v.len() == 1 => [v[0], 0.0],
        Some(v) if v.len() == 2 => [v[0], v[1]],
        Some(_) => bail!("'a' takes one or two components"),
    };
    match k.floats("a_matrix")? {
        None => Ok(VectorPotential::Constant(a0)),
        Some(m) if m.len() == 4 => Ok(VectorPotential::Linear { a0, m: [[m[0], m[1]], [m[2], m[3]]] }),
        Some(_) => bail!("'a_matrix' takes four entries m11, m12, m21, m22"),
    }
}

fn operator(k: &Keys, dim: usize) -> Result<DiffusionOperator> {
    let name = k.raw("operator").ok_or_else(|| anyhow!("missing required key 'operator'"))?;
    let sigma = k.f64_or("sigma", 0.5)?;
    Ok(match name {
        "laplacian" => DiffusionOperator::Laplacian { d: k.f64_or("d", 1.0)? },
        "fractional_laplacian" => DiffusionOperator::FractionalLaplacian { sigma, d: k.f64_or("d", 1.0)? },
        "p_laplacian" => DiffusionOperator::PLaplacianPower { p: k.f64_or("p", 3.0)?, m: k.f64_or("m", 1.0)? },
        "fractional_p_laplacian" => DiffusionOperator::FractionalPLaplacian { sigma, p: k.f64_or("p", 3.0)? },
        "sum_fractional_p_laplacians" => {
            let terms = k.groups("terms", 3)?.ok_or_else(|| anyhow!("'terms' is required (beta:sigma:p; ...)"))?;
            DiffusionOperator::SumFractionalPLaplacians {
                terms: terms.into_iter().map(|t| PTerm { beta: t[0], sigma: t[1], p: t[2] }).collect(),
            }
        }
        "anisotropic_fractional" => {
            let axes = match k.groups("axes", 2)? {
                Some(a) => a.into_iter().map(|t| (t[0], t[1])).collect(),
                None => vec![(1.0, sigma); dim],
            };
            DiffusionOperator::AnisotropicFractional { axes }
        }
        "porous_medium_1" => DiffusionOperator::PorousMediumI { sigma, m: k.f64_or("m", 2.0)? },
        "porous_medium_2" => DiffusionOperator::PorousMediumII { sigma },
        "kirchhoff" => DiffusionOperator::KirchhoffClassical { m0: k.f64_or("m0", 1.0)?, b: k.f64_or("b", 1.0)? },
        "fractional_kirchhoff" => {
            DiffusionOperator::KirchhoffFractional { sigma, m0: k.f64_or("m0", 1.0)?, b: k.f64_or("b", 1.0)? }
        }
        "magnetic" => DiffusionOperator::Magnetic { a: potential(k)? },
        "fractional_magnetic" => DiffusionOperator::FractionalMagnetic { sigma, a: potential(k)? },
        "mean_curvature" => DiffusionOperator::MeanCurvature,
        "fractional_mean_curvature" => DiffusionOperator::FractionalMeanCurvature { sigma },
        other => bail!("unknown operator '{other}'"),
    })
}

fn initial(k: &Keys, seed: u64) -> Result<InitialCondition> {
    let amplitude = k.f64_or("amplitude", 1.0)?;
    let seed = k.raw("u0_seed").map(str::parse).transpose().context("'u0_seed' must be an integer")?.unwrap_or(seed);
    let smoothness = k.usize_or("smoothness", 2)?;
    Ok(match k.raw("u0").unwrap_or("eigenfunction") {
        "eigenfunction" => InitialCondition::Eigenfunction { amplitude },
        "bump" => InitialCondition::Bump { amplitude, radius: k.f64_or("radius", 0.6)? },
        "indicator" => InitialCondition::SmoothedIndicator { amplitude, passes: k.usize_or("passes", 3)? },
        "random" => InitialCondition::Random { amplitude, seed, smoothness, nonnegative: k.bool_or("nonnegative", false)? },
        "random_complex" => InitialCondition::RandomComplex { amplitude, seed, smoothness },
        "zero" => InitialCondition::Zero,
        other => bail!("unknown initial condition '{other}' (eigenfunction|bump|indicator|random|random_complex|zero)"),
    })
}

pub fn window(spec: &str) -> Result<WindowPolicy> {
    if spec == "last_half" {
        return Ok(WindowPolicy::LastHalfLogTime);
    }
    let (a, b) = spec.split_once(':').ok_or_else(|| anyhow!("fit window must be last_half or a:b, got '{spec}'"))?;
    let a: f64 = a.trim().parse().with_context(|| format!("bad fit window start '{a}'"))?;
    let b: f64 = b.trim().parse().with_context(|| format!("bad fit window end '{b}'"))?;
    Ok(WindowPolicy::Range(a, b))
}

impl ExperimentConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let known: BTreeSet<&str> = KEYS.iter().copied().collect();
        if let Some(k) = map.keys().find(|k| !known.contains(k.as_str())) {
            bail!("unknown key '{k}'");
        }
        let k = Keys { map };
        let name = k.raw("name").ok_or_else(|| anyhow!("missing required key 'name'"))?.to_string();
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            bail!("'name' must be a plain directory name, got '{name}'");
        }
        let seed = k.raw("seed").map(str::parse).transpose().context("'seed' must be an integer")?.unwrap_or(0);
        let dim = k.usize_or("dim", 1)?;
        let n = k.usize_or("n", 99)?;
        let grid = match dim {
            1 => Grid::new_1d(k.f64_or("x_min", 0.0)?, k.f64_or("x_max", 1.0)?, k.usize_or("nx", n)?)?,
            2 => Grid::new_2d(
                (k.f64_or("x_min", 0.0)?, k.f64_or("x_max", 1.0)?),
                (k.f64_or("y_min", 0.0)?, k.f64_or("y_max", 1.0)?),
                [k.usize_or("nx", n)?, k.usize_or("ny", n)?],
            )?,
            other => bail!("'dim' must be 1 or 2, got {other}"),
        };
        let op = operator(&k, dim)?;
        let lambda1 = k.f64_or("lambda1", 0.0)?;
        let lambda2 = k.f64_or("lambda2", 1.0 - lambda1)?;
        let normalization: CaputoNormalization = k.raw("normalization").unwrap_or("standard").parse()?;
        let td = TimeDerivativeSpec::new(lambda1, lambda2, k.f64_or("alpha", 0.5)?, normalization)?;
        let mut sim =
            SimulationConfig::new(grid, op, td, initial(&k, seed)?, k.f64_req("dt")?, k.f64_req("t_final")?);
        if let Some(s) = k.floats("s_list")? {
            sim.s_list = s;
        }
        sim.record_every = k.usize_or("record_every", 1)?;
        sim.kernel = k.raw("kernel").unwrap_or("bare").parse::<KernelNormalization>()?;
        sim.scheme = k.raw("scheme").unwrap_or("auto").parse::<Scheme>()?;
        sim.c_stab = k.f64_or("c_stab", 0.2)?;
        if k.bool_or("energy", true)? {
            sim.energy_s = sim.s_list.first().copied();
        }
        sim.keep_snapshots = k.bool_or("snapshots", false)?;
        sim.validate()?;
        Ok(Self {
            name,
            outdir: PathBuf::from(k.raw("outdir").unwrap_or("out")),
            seed,
            sim,
            fit_window: window(k.raw("fit_window").unwrap_or("last_half"))?,
        })
    }

    /// Parses a single experiment; lists are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        if let Some(e) = entries.iter().find(|e| e.is_list) {
            bail!("'{}' is a list; ranged keys belong in sweep files", e.key);
        }
        let map = entries.into_iter().map(|e| (e.key, e.values.into_iter().next().unwrap_or_default())).collect();
        Self::from_map(&map)
    }
}
