//! Frequency-stratified similarity analysis: log10 frequency bins, pair
//! sampling per bin combination, similarity heatmaps, the RMSE summary with
//! its permutation baseline, stratified PCA and hyperparameter regression.

mod pca;
mod regression;

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats;
use crate::store::{EmbeddingSet, Metric};

pub use pca::{pca_stratified, principal_components, Centroid, Pca, PcaPoint, PcaProjection};
pub use regression::{design_from_settings, regress_rmse, Design};

/// `floor(log10 count)`; a zero count shares bin 0 with counts 1..=9.
pub fn frequency_bin(count: u64) -> u32 {
    count.max(1).ilog10()
}

/// Partition of a vocabulary by [`frequency_bin`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyBinning {
    bin_of: Vec<u32>,
    bins: Vec<u32>,
    members: Vec<Vec<u32>>,
}

impl FrequencyBinning {
    /// Bins word IDs `0..counts.len()` by their counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty("vocabulary"));
        }
        let bin_of: Vec<u32> = counts.iter().map(|&c| frequency_bin(c)).collect();
        let mut bins: Vec<u32> = bin_of.clone();
        bins.sort_unstable();
        bins.dedup();
        let mut members = vec![Vec::new(); bins.len()];
        for (id, b) in bin_of.iter().enumerate() {
            let k = bins.binary_search(b).expect("bin listed");
            members[k].push(id as u32);
        }
        Ok(Self {
            bin_of,
            bins,
            members,
        })
    }

    /// Number of words binned.
    pub fn len(&self) -> usize {
        self.bin_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_of.is_empty()
    }

    /// Bin label of word `id`.
    pub fn bin_of(&self, id: usize) -> u32 {
        self.bin_of[id]
    }

    /// Occupied bin labels, ascending.
    pub fn bins(&self) -> &[u32] {
        &self.bins
    }

    /// Word IDs of the `k`-th occupied bin (not the bin label).
    pub fn members(&self, k: usize) -> &[u32] {
        &self.members[k]
    }

    pub fn members_of_bin(&self, bin: u32) -> Option<&[u32]> {
        self.bins
            .binary_search(&bin)
            .ok()
            .map(|k| &self.members[k][..])
    }
}

pub fn assign_bins(vocab: &Vocabulary) -> Result<FrequencyBinning> {
    FrequencyBinning::from_counts(vocab.counts())
}

/// Sampled word pairs for one bin combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPairs {
    pub bin_row: u32,
    pub bin_col: u32,
    pub pairs: Vec<(u32, u32)>,
    /// Fewer distinct pairs existed than were requested.
    pub shortfall: bool,
}

/// Pairs for every cell `(i, j)` with `i <= j`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSample {
    pub n_per_cell: usize,
    pub cells: Vec<CellPairs>,
}

/// Draws up to `n_per_cell` distinct pairs per cell, uniformly without
/// replacement. Pairs never repeat a word, and in diagonal cells `(u, v)`
/// and `(v, u)` count as the same pair.
pub fn sample_pairs(binning: &FrequencyBinning, n_per_cell: usize, seed: u64) -> PairSample {
    let nb = binning.bins().len();
    let mut cells = Vec::with_capacity(nb * (nb + 1) / 2);
    for i in 0..nb {
        for j in i..nb {
            let (a, b) = (binning.members(i), binning.members(j));
            let total = if i == j {
                a.len() * a.len().saturating_sub(1) / 2
            } else {
                a.len() * b.len()
            };
            let take = total.min(n_per_cell);
            let mut r = rng::derive(seed, cells.len() as u64);
            let mut picks = rand::seq::index::sample(&mut r, total, take).into_vec();
            picks.sort_unstable();
            let pairs = picks
                .into_iter()
                .map(|k| {
                    if i == j {
                        let (x, y) = triangle_pair(a.len(), k);
                        (a[x], a[y])
                    } else {
                        (a[k / b.len()], b[k % b.len()])
                    }
                })
                .collect();
            cells.push(CellPairs {
                bin_row: binning.bins()[i],
                bin_col: binning.bins()[j],
                pairs,
                shortfall: total < n_per_cell,
            });
        }
    }
    PairSample { n_per_cell, cells }
}

/// Maps `k` in `0..m(m-1)/2` to the `k`-th pair `(x, y)`, `x < y`, in
/// lexicographic order.
fn triangle_pair(m: usize, k: usize) -> (usize, usize) {
    // pairs before row x: x*m - x(x+1)/2
    let start = |x: usize| x * m - x * (x + 1) / 2;
    let (mut lo, mut hi) = (0usize, m - 2);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if start(mid) <= k {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let x = lo;
    (x, x + 1 + (k - start(x)))
}

/// One heatmap cell with its retained pair similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatCell {
    pub bin_row: u32,
    pub bin_col: u32,
    pub values: Vec<f64>,
    pub shortfall: bool,
}

impl HeatCell {
    /// Mean of the pair values, `None` when the cell has no pairs.
    pub fn mean(&self) -> Option<f64> {
        (!self.values.is_empty()).then(|| stats::mean(&self.values))
    }
}

/// Mean similarity per bin combination. Only cells `i <= j` are stored;
/// lookups mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    metric: Metric,
    bins: Vec<u32>,
    cells: Vec<HeatCell>,
}

#[derive(Serialize)]
struct HeatmapRow {
    bin_row: u32,
    bin_col: u32,
    mean_sim: f64,
    n_pairs: usize,
    shortfall: bool,
}

impl Heatmap {
    /// Builds a heatmap from upper-triangle cells given row-major over
    /// `bins`.
    pub fn from_cells(metric: Metric, bins: Vec<u32>, cells: Vec<HeatCell>) -> Result<Self> {
        let nb = bins.len();
        if cells.len() != nb * (nb + 1) / 2 {
            return Err(Error::DimensionMismatch {
                left: cells.len(),
                right: nb * (nb + 1) / 2,
            });
        }
        let mut k = 0;
        for i in 0..nb {
            for j in i..nb {
                let c = &cells[k];
                if (c.bin_row, c.bin_col) != (bins[i], bins[j]) {
                    return Err(Error::Config(format!(
                        "cell {k} is ({}, {}), expected ({}, {})",
                        c.bin_row, c.bin_col, bins[i], bins[j]
                    )));
                }
                k += 1;
            }
        }
        Ok(Self {
            metric,
            bins,
            cells,
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn bins(&self) -> &[u32] {
        &self.bins
    }

    /// Upper-triangle cells, row-major.
    pub fn cells(&self) -> &[HeatCell] {
        &self.cells
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let nb = self.bins.len();
        i * nb - i * (i + 1) / 2 + j
    }

    /// Cell by bin positions (not labels); symmetric.
    pub fn cell(&self, i: usize, j: usize) -> &HeatCell {
        &self.cells[self.index(i, j)]
    }

    /// Mean of cell `(i, j)`; `NaN` for an empty cell.
    pub fn cell_mean(&self, i: usize, j: usize) -> f64 {
        self.cell(i, j).mean().unwrap_or(f64::NAN)
    }

    /// Full symmetric matrix of cell means.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let nb = self.bins.len();
        (0..nb)
            .map(|i| (0..nb).map(|j| self.cell_mean(i, j)).collect())
            .collect()
    }

    /// Means of the occupied upper-triangle cells.
    pub fn occupied_means(&self) -> Vec<f64> {
        self.cells.iter().filter_map(HeatCell::mean).collect()
    }

    /// Unweighted mean over occupied cell means.
    pub fn grand_mean(&self) -> Option<f64> {
        let m = self.occupied_means();
        (!m.is_empty()).then(|| stats::mean(&m))
    }

    /// Header `bin_row,bin_col,mean_sim,n_pairs,shortfall`, all bins×bins
    /// cells in row-major order. Empty cells carry `NaN`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let nb = self.bins.len();
        for i in 0..nb {
            for j in 0..nb {
                let c = self.cell(i, j);
                w.serialize(HeatmapRow {
                    bin_row: self.bins[i],
                    bin_col: self.bins[j],
                    mean_sim: self.cell_mean(i, j),
                    n_pairs: c.values.len(),
                    shortfall: c.shortfall,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Similarities of every sampled pair under `metric`, on target rows.
pub fn heatmap(set: &EmbeddingSet, sample: &PairSample, metric: Metric) -> Result<Heatmap> {
    let mut bins: Vec<u32> = sample.cells.iter().map(|c| c.bin_row).collect();
    bins.dedup();
    let cells = sample
        .cells
        .iter()
        .map(|c| {
            let values = c
                .pairs
                .iter()
                .map(|&(u, v)| {
                    for id in [u, v] {
                        if id as usize >= set.len() {
                            return Err(Error::DimensionMismatch {
                                left: id as usize,
                                right: set.len(),
                            });
                        }
                    }
                    set.similarity_ids(u as usize, v as usize, metric)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(HeatCell {
                bin_row: c.bin_row,
                bin_col: c.bin_col,
                values,
                shortfall: c.shortfall,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Heatmap::from_cells(metric, bins, cells)
}

/// Bins `vocab`, samples pairs and builds the heatmap in one step.
pub fn similarity_heatmap(
    set: &EmbeddingSet,
    vocab: &Vocabulary,
    metric: Metric,
    n_per_cell: usize,
    seed: u64,
) -> Result<Heatmap> {
    set.check_aligned(vocab)?;
    let binning = assign_bins(vocab)?;
    heatmap(set, &sample_pairs(&binning, n_per_cell, seed), metric)
}

fn rmse_of(means: &[f64]) -> f64 {
    let g = stats::mean(means);
    (stats::sum(means.iter().map(|m| (m - g) * (m - g))) / means.len() as f64).sqrt()
}

/// Root mean squared deviation of the occupied cell means from the grand
/// mean.
pub fn rmse(heatmap: &Heatmap) -> Result<f64> {
    let m = heatmap.occupied_means();
    if m.is_empty() {
        return Err(Error::Empty("heatmap has no occupied cells"));
    }
    Ok(rmse_of(&m))
}

/// RMSE of `n_permutations` heatmaps whose pair values are pooled,
/// shuffled and dealt back to the cells with their original counts.
pub fn permutation_baseline(heatmap: &Heatmap, n_permutations: usize, seed: u64) -> Vec<f64> {
    let mut pool: Vec<f64> = heatmap
        .cells
        .iter()
        .flat_map(|c| c.values.iter().copied())
        .collect();
    let sizes: Vec<usize> = heatmap
        .cells
        .iter()
        .map(|c| c.values.len())
        .filter(|&n| n > 0)
        .collect();
    if sizes.is_empty() {
        return vec![0.0; n_permutations];
    }
    let mut r = rng::seeded(seed);
    let mut means = vec![0.0; sizes.len()];
    (0..n_permutations)
        .map(|_| {
            pool.shuffle(&mut r);
            let mut at = 0;
            for (m, &n) in means.iter_mut().zip(&sizes) {
                *m = stats::mean(&pool[at..at + n]);
                at += n;
            }
            rmse_of(&means)
        })
        .collect()
}

/// One line of the RMSE table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub setting_id: String,
    pub metric: Metric,
    pub rmse_actual: f64,
    pub baseline_q50: f64,
    pub baseline_q99: f64,
    pub baseline_max: f64,
    pub n_perm: usize,
}

/// Actual RMSE of a heatmap together with its permutation replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseResult {
    pub setting_id: String,
    pub metric: Metric,
    pub rmse_actual: f64,
    pub rmse_baseline: Vec<f64>,
}

impl RmseResult {
    pub fn compute(
        setting_id: &str,
        heatmap: &Heatmap,
        n_permutations: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            setting_id: setting_id.to_owned(),
            metric: heatmap.metric(),
            rmse_actual: rmse(heatmap)?,
            rmse_baseline: permutation_baseline(heatmap, n_permutations, seed),
        })
    }

    /// Actual RMSE above every replicate.
    pub fn exceeds_baseline(&self) -> bool {
        self.rmse_baseline.iter().all(|&b| self.rmse_actual > b)
    }

    pub fn summary(&self) -> RmseRow {
        let mut s = self.rmse_baseline.clone();
        s.sort_by(f64::total_cmp);
        let q = |p| {
            if s.is_empty() {
                f64::NAN
            } else {
                stats::quantile_sorted(&s, p)
            }
        };
        RmseRow {
            setting_id: self.setting_id.clone(),
            metric: self.metric,
            rmse_actual: self.rmse_actual,
            baseline_q50: q(0.5),
            baseline_q99: q(0.99),
            baseline_max: s.last().copied().unwrap_or(f64::NAN),
            n_perm: s.len(),
        }
    }
}

/// Header `setting_id,metric,rmse_actual,baseline_q50,baseline_q99,baseline_max,n_perm`.
pub fn write_rmse_csv<W: Write>(rows: &[RmseRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rmse_csv<R: Read>(input: R) -> Result<Vec<RmseRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        rows.push(rec.map_err(|e| Error::parse(format!("line {}", i + 2), e.to_string()))?);
    }
    Ok(rows)
}
