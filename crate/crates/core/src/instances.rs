//! Deterministic M-matrix instance families.
//!
//! All randomness comes from ChaCha8 seeded with the spec's seed; the matrix
//! uses stream 0 and the right-hand side stream 1, so changing `b_mode` never
//! changes `A`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CertifiedMatrix, SparseSymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    GridLaplacian,
    ErGraphLaplacian,
    RandomDd,
    Diagonal,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::GridLaplacian,
        Family::ErGraphLaplacian,
        Family::RandomDd,
        Family::Diagonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::GridLaplacian => "grid-laplacian",
            Family::ErGraphLaplacian => "er-graph-laplacian",
            Family::RandomDd => "random-dd",
            Family::Diagonal => "diagonal",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown instance family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BMode {
    Zero,
    Ones,
    /// Independent uniform signs.
    RandomPm,
    /// Uniform on `[-1, 1]^n`, rescaled to `b_norm`.
    ScaledRandom,
}

impl FromStr for BMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(BMode::Zero),
            "ones" => Ok(BMode::Ones),
            "random-pm" => Ok(BMode::RandomPm),
            "scaled-random" => Ok(BMode::ScaledRandom),
            other => Err(Error::InvalidConfig(format!("unknown b mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    /// Identity shift for the Laplacian families; log-spread of the entries
    /// for the diagonal family; unused by random-dd.
    pub gamma: f64,
    /// Edge probability. Zero picks a family default.
    pub density: f64,
    pub b_mode: BMode,
    pub b_norm: f64,
}

impl InstanceSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            seed,
            gamma: 0.1,
            density: 0.0,
            b_mode: BMode::ScaledRandom,
            b_norm: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("instance size must be positive".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if matches!(self.family, Family::GridLaplacian | Family::ErGraphLaplacian) && self.gamma <= 0.0 {
            return Err(Error::InvalidConfig(
                "Laplacian families need gamma > 0 to be positive definite".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::InvalidConfig(format!("density must lie in [0, 1], got {}", self.density)));
        }
        if !(self.b_norm >= 0.0 && self.b_norm.is_finite()) {
            return Err(Error::InvalidConfig(format!("b_norm must be >= 0, got {}", self.b_norm)));
        }
        Ok(())
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates a certified matrix and right-hand side. The ER family may
/// return fewer than `n` rows (largest connected component).
pub fn generate(spec: &InstanceSpec) -> Result<(CertifiedMatrix, Vec<f64>)> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, 0);
    let a = match spec.family {
        Family::GridLaplacian => grid_laplacian(spec.n, spec.gamma),
        Family::ErGraphLaplacian => er_laplacian(spec.n, spec.density, spec.gamma, &mut rng),
        Family::RandomDd => random_dd(spec.n, spec.density, &mut rng),
        Family::Diagonal => {
            let d: Vec<f64> = (0..spec.n)
                .map(|_| (spec.gamma * rng.gen_range(-1.0..=1.0)).exp())
                .collect();
            Ok(SparseSymMatrix::from_diagonal(&d))
        }
    }?;
    let b = right_hand_side(a.n(), spec.b_mode, spec.b_norm, &mut rng_for(spec.seed, 1));
    let certified = CertifiedMatrix::new(a).map_err(|e| Error::CertificationFailed(Box::new(e)))?;
    Ok((certified, b))
}

fn right_hand_side(n: usize, mode: BMode, norm: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match mode {
        BMode::Zero => vec![0.0; n],
        BMode::Ones => vec![1.0; n],
        BMode::RandomPm => (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect(),
        BMode::ScaledRandom => {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vn == 0.0 {
                v
            } else {
                v.into_iter().map(|x| x * norm / vn).collect()
            }
        }
    }
}

/// Laplacian of an unweighted graph plus `gamma I`.
fn laplacian(n: usize, edges: &[(usize, usize)], gamma: f64) -> Result<SparseSymMatrix> {
    let mut degree = vec![0.0; n];
    for &(i, j) in edges {
        degree[i] += 1.0;
        degree[j] += 1.0;
    }
    let entries = degree
        .iter()
        .enumerate()
        .map(|(i, d)| (i, i, d + gamma))
        .chain(edges.iter().map(|&(i, j)| (i, j, -1.0)));
    SparseSymMatrix::from_triplets(n, entries)
}

/// Rows are the largest divisor of `n` not exceeding `sqrt(n)`.
pub fn grid_shape(n: usize) -> (usize, usize) {
    let rows = (1..=n).take_while(|r| r * r <= n).filter(|r| n % r == 0).last().unwrap_or(1);
    (rows, n / rows)
}

fn grid_laplacian(n: usize, gamma: f64) -> Result<SparseSymMatrix> {
    let (rows, cols) = grid_shape(n);
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    laplacian(n, &edges, gamma)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn er_laplacian(n: usize, density: f64, gamma: f64, rng: &mut ChaCha8Rng) -> Result<SparseSymMatrix> {
    let p = if density > 0.0 {
        density
    } else if n > 1 {
        (3.0 * (n as f64).ln() / n as f64).min(1.0)
    } else {
        0.0
    };
    let mut edges = Vec::new();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut size = vec![0usize; n];
    for &r in &roots {
        size[r] += 1;
    }
    // Largest component; ties go to the smallest root.
    let best = (0..n).max_by_key(|&r| (size[r], std::cmp::Reverse(r))).unwrap_or(0);
    let mut index = vec![usize::MAX; n];
    let mut m = 0;
    for i in 0..n {
        if roots[i] == best {
            index[i] = m;
            m += 1;
        }
    }
    let kept: Vec<(usize, usize)> = edges
        .into_iter()
        .filter(|&(i, _)| roots[i] == best)
        .map(|(i, j)| (index[i], index[j]))
        .collect();
    laplacian(m, &kept, gamma)
}

const DD_MARGIN: f64 = 0.05;

fn random_dd(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Result<SparseSymMatrix> {
    let p = if density > 0.0 { density } else { (8.0 / n as f64).min(1.0) };
    let mut entries = Vec::new();
    let mut rowsum = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                let w: f64 = rng.gen_range(0.1..=1.0);
                entries.push((i, j, w));
                rowsum[i] += w;
                rowsum[j] += w;
            }
        }
    }
    let s = rowsum.iter().copied().fold(1.0, f64::max) / (1.0 - DD_MARGIN);
    let diag = (0..n).map(|i| (i, i, s));
    let off = entries.into_iter().map(|(i, j, w)| (i, j, -w));
    SparseSymMatrix::from_triplets(n, diag.chain(off))
}

/// A small symmetric M-matrix `s I - C` that is generally not diagonally
/// dominant: `C >= 0` is random and `s` sits just above `rho(C)`. Used by
/// the dense property sweeps.
pub fn random_small_mmatrix<R: Rng>(n: usize, rng: &mut R) -> SparseSymMatrix {
    let density: f64 = rng.gen_range(0.2..=1.0);
    let mut c = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = rng.gen_range(0.0..=1.0);
        for j in (i + 1)..n {
            if rng.gen::<f64>() < density {
                let w = rng.gen_range(0.0..=1.0);
                c[(i, j)] = w;
                c[(j, i)] = w;
            }
        }
    }
    let rho = c.clone().symmetric_eigen().eigenvalues.max().max(0.1);
    let margin = 10f64.powf(rng.gen_range(-2.0..=0.0));
    let scale = 10f64.powf(rng.gen_range(-1.0..=1.0));
    let s = rho * (1.0 + margin);
    let mut entries = Vec::new();
    for i in 0..n {
        entries.push((i, i, scale * (s - c[(i, i)])));
        for j in 0..i {
            if c[(i, j)] != 0.0 {
                entries.push((i, j, -scale * c[(i, j)]));
            }
        }
    }
    SparseSymMatrix::from_triplets(n, entries).expect("valid construction")
}
