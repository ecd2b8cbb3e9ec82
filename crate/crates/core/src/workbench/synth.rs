use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dictionary::{ConceptDictionary, ConceptEntry};
use crate::rng::SeedTree;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "layers")]
    pub num_layers: usize,
    pub support_size: usize,
    pub coeff_range: (f64, f64),
    pub noise_sigma: f64,
    /// `(num_subspaces, subspace_dim)`: atoms are drawn inside planted subspaces.
    pub subspace_structure: Option<(usize, usize)>,
    /// Planted signals generated per layer.
    pub samples_per_layer: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 100,
            d: 64,
            num_layers: 1,
            support_size: 3,
            coeff_range: (0.5, 1.0),
            noise_sigma: 0.0,
            subspace_structure: None,
            samples_per_layer: 10,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.n == 0 || self.d == 0 || self.num_layers == 0 {
            return bad("n, d and layers must be positive".into());
        }
        if self.support_size > self.n {
            return bad(format!("support size {} exceeds n = {}", self.support_size, self.n));
        }
        let (lo, hi) = self.coeff_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("invalid coefficient range ({lo}, {hi})"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be non-negative, got {}", self.noise_sigma));
        }
        if let Some((k, m)) = self.subspace_structure {
            if k == 0 || m == 0 || m > self.d || k > self.n {
                return bad(format!("invalid subspace structure ({k}, {m}) for n = {}, d = {}", self.n, self.d));
            }
        }
        Ok(())
    }

    /// Subspace index of atom `j`; atoms are split into contiguous, near-equal groups.
    pub fn group_of(&self, j: usize) -> Option<usize> {
        self.subspace_structure.map(|(k, _)| j * k / self.n)
    }
}

/// One planted signal `z = D c* + ε` at a given layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSample {
    pub layer_id: u32,
    pub z: DVector<f64>,
    pub truth: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dictionary: ConceptDictionary<f64>,
    pub samples: Vec<PlantedSample>,
    /// Planted subspace of each atom, when subspace structure is requested.
    pub groups: Option<Vec<usize>>,
}

pub fn concept_name(j: usize) -> String {
    format!("c{j:04}")
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn unit_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in m.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    m
}

/// Draws a dictionary with unit atoms and planted sparse signals. Layers are
/// numbered `0..L`; every stream is derived from `spec.seed`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let root = SeedTree::new(spec.seed);
    let (lo, hi) = spec.coeff_range;
    let mut layers = Vec::with_capacity(spec.num_layers);
    let mut samples = Vec::new();
    for l in 0..spec.num_layers {
        let mut rng = root.child("atoms").index(l as u64).rng();
        let atoms = match spec.subspace_structure {
            None => gaussian_matrix(spec.d, spec.n, &mut rng),
            Some((k, m)) => {
                let bases: Vec<DMatrix<f64>> = (0..k).map(|_| gaussian_matrix(spec.d, m, &mut rng).qr().q()).collect();
                let mut atoms = DMatrix::zeros(spec.d, spec.n);
                for j in 0..spec.n {
                    let w: DVector<f64> = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
                    atoms.set_column(j, &(&bases[j * k / spec.n] * w));
                }
                atoms
            }
        };
        let atoms = unit_columns(atoms);

        let sample_tree = root.child("samples").index(l as u64);
        for i in 0..spec.samples_per_layer {
            let mut rng = sample_tree.index(i as u64).rng();
            let mut truth = DVector::zeros(spec.n);
            let mut support = index::sample(&mut rng, spec.n, spec.support_size).into_vec();
            support.sort_unstable();
            for j in support {
                truth[j] = if lo == hi { lo } else { rng.random_range(lo..hi) };
            }
            let mut z = &atoms * &truth;
            if spec.noise_sigma > 0.0 {
                for v in z.iter_mut() {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    *v += spec.noise_sigma * e;
                }
            }
            samples.push(PlantedSample {
                layer_id: l as u32,
                z,
                truth,
            });
        }
        layers.push(atoms);
    }
    let entries = (0..spec.n)
        .map(|j| ConceptEntry {
            concept_id: j,
            name: concept_name(j),
            stimulus_count: 0,
        })
        .collect();
    let dictionary = ConceptDictionary::new(entries, (0..spec.num_layers as u32).collect(), layers)?;
    let groups = spec
        .subspace_structure
        .map(|_| (0..spec.n).map(|j| spec.group_of(j).unwrap_or(0)).collect());
    Ok(SyntheticData {
        dictionary,
        samples,
        groups,
    })
}

/// Points drawn from a union of mutually orthogonal subspaces, for clustering.
/// Returns unit columns and their true labels.
pub fn planted_subspace_points(
    d: usize,
    num_subspaces: usize,
    subspace_dim: usize,
    points_per_subspace: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    if num_subspaces * subspace_dim > d || subspace_dim == 0 || points_per_subspace == 0 {
        return Err(Error::InvalidParams(format!(
            "cannot fit {num_subspaces} orthogonal {subspace_dim}-dimensional subspaces in {d} dimensions"
        )));
    }
    let mut rng = SeedTree::new(seed).child("subspaces").rng();
    let q = gaussian_matrix(d, num_subspaces * subspace_dim, &mut rng).qr().q();
    let n = num_subspaces * points_per_subspace;
    let mut pts = DMatrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    for s in 0..num_subspaces {
        let basis = q.columns(s * subspace_dim, subspace_dim);
        for p in 0..points_per_subspace {
            let w: DVector<f64> = DVector::from_fn(subspace_dim, |_, _| StandardNormal.sample(&mut rng));
            let mut x = basis * w.normalize();
            for v in x.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += noise_sigma * e;
            }
            pts.set_column(s * points_per_subspace + p, &x.normalize());
            labels.push(s);
        }
    }
    Ok((pts, labels))
}

/// `n` points near a rank-`rank` subspace of `R^d`, as columns, with Gaussian noise.
pub fn planted_low_rank(d: usize, n: usize, rank: usize, noise_sigma: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = SeedTree::new(seed).child("low-rank").rng();
    let left = gaussian_matrix(d, rank, &mut rng);
    let right = gaussian_matrix(rank, n, &mut rng);
    let mut x = left * right;
    for v in x.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += noise_sigma * e;
    }
    x
}
