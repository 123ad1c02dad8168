use std::io::Write;

use rand::Rng;
use serde::Serialize;

use super::FrequencyBinning;
use crate::error::{Error, Result};
use crate::rng;
use crate::store::EmbeddingSet;

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 10_000;

/// Top two principal components of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit-length components, each with its largest-magnitude coordinate
    /// positive.
    pub components: [Vec<f64>; 2],
    /// Eigenvalues of the sample covariance (divisor `n - 1`).
    pub eigenvalues: [f64; 2],
    /// Eigenvalues as fractions of the total variance.
    pub explained_variance: [f64; 2],
    pub total_variance: f64,
}

impl Pca {
    pub fn project(&self, x: &[f64]) -> [f64; 2] {
        let c = |p: &[f64]| {
            x.iter()
                .zip(&self.mean)
                .zip(p)
                .map(|((a, m), b)| (a - m) * b)
                .sum()
        };
        [c(&self.components[0]), c(&self.components[1])]
    }
}

fn mat_vec(c: &[f64], d: usize, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = c[i * d..(i + 1) * d]
            .iter()
            .zip(v)
            .map(|(a, b)| a * b)
            .sum();
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn fix_sign(v: &mut [f64]) {
    let big = v
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Leading eigenpair of the symmetric PSD matrix `c` by power iteration,
/// started from `start` and kept orthogonal to `avoid`.
fn power_iteration(c: &[f64], d: usize, mut v: Vec<f64>, avoid: Option<&[f64]>) -> (Vec<f64>, f64) {
    let orth = |v: &mut Vec<f64>| {
        if let Some(p) = avoid {
            let s: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(p).for_each(|(a, b)| *a -= s * b);
        }
    };
    orth(&mut v);
    normalize(&mut v);
    let mut w = vec![0.0; d];
    let mut converged = false;
    for _ in 0..MAX_ITER {
        mat_vec(c, d, &v, &mut w);
        orth(&mut w);
        if normalize(&mut w) == 0.0 {
            // v lies in the null space: eigenvalue 0
            converged = true;
            break;
        }
        let delta = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut v, &mut w);
        if delta < TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "power iteration stopped after {MAX_ITER} iterations without meeting tolerance {TOL}"
        );
    }
    mat_vec(c, d, &v, &mut w);
    let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
    (v, lambda.max(0.0))
}

/// Top-two PCA of `points` via the sample covariance: power iteration,
/// deflation, then a second power iteration.
pub fn principal_components(points: &[Vec<f64>]) -> Result<Pca> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 3 vectors, got {n}"
        )));
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: d,
        });
    }
    if d < 2 {
        return Err(Error::InsufficientData(
            "PCA needs at least 2 dimensions".into(),
        ));
    }
    let mut mean = vec![0.0; d];
    for p in points {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for p in points {
        centered
            .iter_mut()
            .zip(p.iter().zip(&mean))
            .for_each(|(c, (x, m))| *c = x - m);
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            for (dst, cj) in cov[i * d..(i + 1) * d].iter_mut().zip(&centered) {
                *dst += ci * cj;
            }
        }
    }
    cov.iter_mut().for_each(|x| *x /= (n - 1) as f64);
    let total: f64 = (0..d).map(|i| cov[i * d + i]).sum();

    let mut r = rng::seeded(0x9ca);
    let mut start = || {
        (0..d)
            .map(|_| r.random_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    let (mut p1, l1) = power_iteration(&cov, d, start(), None);
    // deflate
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] -= l1 * p1[i] * p1[j];
        }
    }
    let (mut p2, l2) = power_iteration(&cov, d, start(), Some(&p1));
    normalize(&mut p2);
    fix_sign(&mut p1);
    fix_sign(&mut p2);
    let frac = |l: f64| if total > 0.0 { l / total } else { 0.0 };
    Ok(Pca {
        mean,
        components: [p1, p2],
        eigenvalues: [l1, l2],
        explained_variance: [frac(l1), frac(l2)],
        total_variance: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaPoint {
    pub word: String,
    pub bin: u32,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Centroid {
    pub bin: u32,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub points: Vec<PcaPoint>,
    pub centroids: Vec<Centroid>,
    pub pca: Pca,
}

#[derive(Serialize)]
struct PcaRow<'a> {
    word: &'a str,
    bin: u32,
    pc1: f64,
    pc2: f64,
    is_centroid: bool,
}

impl PcaProjection {
    pub fn explained_variance(&self) -> [f64; 2] {
        self.pca.explained_variance
    }

    /// Header `word,bin,pc1,pc2,is_centroid`; centroid rows follow the
    /// sampled words and carry an empty word.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(PcaRow {
                word: &p.word,
                bin: p.bin,
                pc1: p.pc1,
                pc2: p.pc2,
                is_centroid: false,
            })?;
        }
        for c in &self.centroids {
            w.serialize(PcaRow {
                word: "",
                bin: c.bin,
                pc1: c.pc1,
                pc2: c.pc2,
                is_centroid: true,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples up to `words_per_bin` words from each bin, L2-normalizes their
/// target vectors and projects them onto the top two components of that
/// sample. Centroids are per-bin means of the projections.
pub fn pca_stratified(
    set: &EmbeddingSet,
    binning: &FrequencyBinning,
    words_per_bin: usize,
    seed: u64,
) -> Result<PcaProjection> {
    if binning.len() != set.len() {
        return Err(Error::DimensionMismatch {
            left: binning.len(),
            right: set.len(),
        });
    }
    let mut r = rng::seeded(seed);
    let mut chosen: Vec<(u32, u32)> = Vec::new();
    for (k, &bin) in binning.bins().iter().enumerate() {
        let members = binning.members(k);
        let mut idx =
            rand::seq::index::sample(&mut r, members.len(), words_per_bin.min(members.len()))
                .into_vec();
        idx.sort_unstable();
        chosen.extend(idx.into_iter().map(|i| (members[i], bin)));
    }
    let mut points = Vec::with_capacity(chosen.len());
    for &(id, _) in &chosen {
        let v: Vec<f64> = set
            .target()
            .row(id as usize)
            .iter()
            .map(|&x| x as f64)
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::UndefinedSimilarity {
                word: Some(set.words()[id as usize].clone()),
            });
        }
        points.push(v.into_iter().map(|x| x / norm).collect::<Vec<f64>>());
    }
    let pca = principal_components(&points)?;
    let projected: Vec<PcaPoint> = chosen
        .iter()
        .zip(&points)
        .map(|(&(id, bin), p)| {
            let [pc1, pc2] = pca.project(p);
            PcaPoint {
                word: set.words()[id as usize].clone(),
                bin,
                pc1,
                pc2,
            }
        })
        .collect();
    let centroids = binning
        .bins()
        .iter()
        .filter_map(|&bin| {
            let members: Vec<&PcaPoint> = projected.iter().filter(|p| p.bin == bin).collect();
            (!members.is_empty()).then(|| {
                let n = members.len() as f64;
                Centroid {
                    bin,
                    pc1: members.iter().map(|p| p.pc1).sum::<f64>() / n,
                    pc2: members.iter().map(|p| p.pc2).sum::<f64>() / n,
                }
            })
        })
        .collect();
    Ok(PcaProjection {
        points: projected,
        centroids,
        pca,
    })
}
