//! Corpus-level preparation and comparison: z-scoring of timbre vectors,
//! the triangular-split tonal difference profile and group-separation
//! summaries of placements.

use std::collections::{BTreeMap, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::som::{Placement, SomGrid, UMatrix};
use crate::tonal::TONAL_BINS;
use crate::timbre::TimbreVector;

/// Per-dimension mean and population std used to project vectors onto an
/// existing map. A zero std maps that dimension to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn fit(corpus: &[Vec<f64>]) -> Result<Self> {
        if corpus.len() < 2 {
            return Err(Error::EmptyInput(format!(
                "normalization needs at least 2 pieces, got {}",
                corpus.len()
            )));
        }
        let dim = corpus[0].len();
        if let Some(v) = corpus.iter().find(|v| v.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: v.len(),
            });
        }
        let n = corpus.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in corpus {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; dim];
        for v in corpus {
            for k in 0..dim {
                std[k] += (v[k] - mean[k]).powi(2);
            }
        }
        for (k, s) in std.iter_mut().enumerate() {
            *s = (*s / n).sqrt();
            if *s <= 1e-12 * mean[k].abs().max(1.0) {
                warn!("dimension {k} has zero variance across the corpus; mapped to 0");
                *s = 0.0;
            }
        }
        Ok(Normalization { mean, std })
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                actual: v.len(),
            });
        }
        Ok(v.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s == 0.0 { 0.0 } else { (x - m) / s })
            .collect())
    }
}

/// Z-scores every timbre dimension over the corpus.
pub fn normalize_timbre(corpus: &[TimbreVector]) -> Result<(Vec<Vec<f64>>, Normalization)> {
    let raw: Vec<Vec<f64>> = corpus.iter().map(|t| t.to_array().to_vec()).collect();
    let norm = Normalization::fit(&raw)?;
    let out = raw.iter().map(|v| norm.apply(v)).collect::<Result<_>>()?;
    Ok((out, norm))
}

/// Which lattice diagonal separates the two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Diagonal {
    /// Top-left to bottom-right. "Upper" is strictly above it, the
    /// diagonal itself belongs to "lower".
    #[default]
    Main,
    /// Top-right to bottom-left. "Lower" is on or below-right of it:
    /// `r (cols-1) + c (rows-1) >= (rows-1)(cols-1)`, i.e. `r + c >= rows - 1`
    /// on square maps.
    Anti,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SplitRule {
    pub diagonal: Diagonal,
    /// Exchanges the two sides.
    pub swap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl SplitRule {
    pub fn side(&self, rows: usize, cols: usize, r: usize, c: usize) -> Side {
        let (rm, cm) = (rows.saturating_sub(1), cols.saturating_sub(1));
        let upper = match self.diagonal {
            Diagonal::Main => c * rm > r * cm,
            Diagonal::Anti => r * cm + c * rm < rm * cm,
        };
        if upper != self.swap {
            Side::Upper
        } else {
            Side::Lower
        }
    }

    pub const ALL: [SplitRule; 4] = [
        SplitRule { diagonal: Diagonal::Main, swap: false },
        SplitRule { diagonal: Diagonal::Main, swap: true },
        SplitRule { diagonal: Diagonal::Anti, swap: false },
        SplitRule { diagonal: Diagonal::Anti, swap: true },
    ];
}

/// Split that puts as much of `upper_group` and as little of everything else
/// on the upper side as possible; earlier entries of [`SplitRule::ALL`] win
/// ties.
pub fn orient_split(grid: &SomGrid, placements: &[Placement], labels: &[String], upper_group: &str) -> Result<SplitRule> {
    check_labels(placements, labels)?;
    let n_in = labels.iter().filter(|l| *l == upper_group).count();
    let n_out = labels.len() - n_in;
    if n_in == 0 {
        return Err(Error::Parameter(format!("group {upper_group} has no placements")));
    }
    let score = |rule: &SplitRule| {
        let (mut a, mut b) = (0usize, 0usize);
        for (p, l) in placements.iter().zip(labels) {
            if rule.side(grid.rows, grid.cols, p.row, p.col) == Side::Upper {
                if l == upper_group {
                    a += 1;
                } else {
                    b += 1;
                }
            }
        }
        a as f64 / n_in as f64 - if n_out > 0 { b as f64 / n_out as f64 } else { 0.0 }
    };
    let mut best = SplitRule::ALL[0];
    let mut best_score = score(&best);
    for rule in &SplitRule::ALL[1..] {
        let s = score(rule);
        if s > best_score {
            best = *rule;
            best_score = s;
        }
    }
    Ok(best)
}

/// What is averaged per triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeanSource {
    /// Histograms of the pieces placed in each triangle.
    #[default]
    Pieces,
    /// Weight vectors of the neurons in each triangle.
    Neurons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceProfile {
    /// Upper mean minus lower mean, 1200 bins.
    pub delta: Vec<f64>,
    pub std_upper: Vec<f64>,
    pub std_lower: Vec<f64>,
    /// Bin 0 is kept in the vectors but left out of plots and CSV unless
    /// asked for.
    pub omit_fundamental: bool,
    pub fundamental_delta: f64,
    pub upper_count: usize,
    pub lower_count: usize,
    pub rule: SplitRule,
    pub source: MeanSource,
}

fn mean_std(rows: &[&[f64]], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for r in rows {
        for k in 0..dim {
            var[k] += (r[k] - mean[k]).powi(2);
        }
    }
    (mean, var.into_iter().map(|v| (v / n).sqrt()).collect())
}

/// Mean tonal system per triangle and their difference.
pub fn triangular_split_diff(
    grid: &SomGrid,
    placements: &[Placement],
    histograms: &HashMap<String, Vec<f64>>,
    rule: SplitRule,
    source: MeanSource,
) -> Result<DifferenceProfile> {
    if grid.dim != TONAL_BINS {
        return Err(Error::Dimension {
            expected: TONAL_BINS,
            actual: grid.dim,
        });
    }
    let mut upper: Vec<&[f64]> = Vec::new();
    let mut lower: Vec<&[f64]> = Vec::new();
    let mut placed_sides = (0usize, 0usize);
    for p in placements {
        let side = rule.side(grid.rows, grid.cols, p.row, p.col);
        match side {
            Side::Upper => placed_sides.0 += 1,
            Side::Lower => placed_sides.1 += 1,
        }
        if source == MeanSource::Pieces {
            let h = histograms
                .get(&p.id)
                .ok_or_else(|| Error::Store(format!("no tonal system stored for placed piece {}", p.id)))?;
            if h.len() != TONAL_BINS {
                return Err(Error::Dimension {
                    expected: TONAL_BINS,
                    actual: h.len(),
                });
            }
            match side {
                Side::Upper => upper.push(h),
                Side::Lower => lower.push(h),
            }
        }
    }
    if placed_sides.0 == 0 {
        return Err(Error::EmptyTriangle("upper-right"));
    }
    if placed_sides.1 == 0 {
        return Err(Error::EmptyTriangle("lower-left"));
    }
    if source == MeanSource::Neurons {
        for n in 0..grid.neurons() {
            let (r, c) = grid.position(n);
            match rule.side(grid.rows, grid.cols, r, c) {
                Side::Upper => upper.push(grid.weight_at(n)),
                Side::Lower => lower.push(grid.weight_at(n)),
            }
        }
    }
    let (mu, su) = mean_std(&upper, TONAL_BINS);
    let (ml, sl) = mean_std(&lower, TONAL_BINS);
    let delta: Vec<f64> = mu.iter().zip(&ml).map(|(a, b)| a - b).collect();
    Ok(DifferenceProfile {
        fundamental_delta: delta[0],
        delta,
        std_upper: su,
        std_lower: sl,
        omit_fundamental: true,
        upper_count: upper.len(),
        lower_count: lower.len(),
        rule,
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub count: usize,
    pub centroid_row: f64,
    pub centroid_col: f64,
}

/// Ridge height between groups against the u-matrix level where pieces sit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryContrast {
    /// Median over cross-group piece pairs of the highest u-matrix value on
    /// the lattice segment joining their neurons.
    pub crossing_median: f64,
    /// Median u-matrix value over the distinct neurons holding placements.
    pub occupied_median: f64,
    /// `crossing_median / occupied_median`; infinite when the occupied
    /// neurons are perfectly flat.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub groups: Vec<GroupSummary>,
    pub intra_mean_distance: f64,
    pub inter_mean_distance: f64,
    pub purity: f64,
    pub boundary: Option<BoundaryContrast>,
}

fn check_labels(placements: &[Placement], labels: &[String]) -> Result<()> {
    if placements.len() != labels.len() {
        return Err(Error::Dimension {
            expected: placements.len(),
            actual: labels.len(),
        });
    }
    Ok(())
}

fn lattice_distance(a: &Placement, b: &Placement) -> f64 {
    let dr = a.row as f64 - b.row as f64;
    let dc = a.col as f64 - b.col as f64;
    (dr * dr + dc * dc).sqrt()
}

/// Fraction of pieces whose nearest same-label piece is strictly closer than
/// their nearest other-label piece.
pub fn purity(placements: &[Placement], labels: &[String]) -> f64 {
    let n = placements.len();
    let mut pure = 0usize;
    for i in 0..n {
        let (mut same, mut other) = (f64::INFINITY, f64::INFINITY);
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = lattice_distance(&placements[i], &placements[j]);
            if labels[i] == labels[j] {
                same = same.min(d);
            } else {
                other = other.min(d);
            }
        }
        if same < other {
            pure += 1;
        }
    }
    pure as f64 / n as f64
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Highest u-matrix value on the straight lattice path from `a` to `b`,
/// endpoints included.
pub fn crossing_height(u: &UMatrix, a: &Placement, b: &Placement) -> f64 {
    let (dr, dc) = (b.row as f64 - a.row as f64, b.col as f64 - a.col as f64);
    let steps = 2 * (dr.abs().max(dc.abs()) as usize).max(1);
    (0..=steps)
        .map(|s| {
            let t = s as f64 / steps as f64;
            let r = (a.row as f64 + t * dr).round() as usize;
            let c = (a.col as f64 + t * dc).round() as usize;
            u.at(r, c)
        })
        .fold(0.0, f64::max)
}

pub fn boundary_contrast(umatrix: &UMatrix, placements: &[Placement], labels: &[String]) -> Option<BoundaryContrast> {
    let mut crossings = Vec::new();
    for i in 0..placements.len() {
        for j in i + 1..placements.len() {
            if labels[i] != labels[j] {
                crossings.push(crossing_height(umatrix, &placements[i], &placements[j]));
            }
        }
    }
    let occupied: std::collections::BTreeSet<(usize, usize)> =
        placements.iter().map(|p| (p.row, p.col)).collect();
    if crossings.is_empty() || occupied.is_empty() {
        return None;
    }
    let crossing_median = median(crossings);
    let occupied_median = median(occupied.iter().map(|&(r, c)| umatrix.at(r, c)).collect());
    Some(BoundaryContrast {
        crossing_median,
        occupied_median,
        ratio: if occupied_median > 0.0 {
            crossing_median / occupied_median
        } else {
            f64::INFINITY
        },
    })
}

/// Lattice centroids, intra/inter-group mean distances, purity and the
/// u-matrix boundary contrast.
pub fn separation_report(placements: &[Placement], labels: &[String], umatrix: Option<&UMatrix>) -> Result<SeparationReport> {
    check_labels(placements, labels)?;
    let mut by_group: BTreeMap<&str, Vec<&Placement>> = BTreeMap::new();
    for (p, l) in placements.iter().zip(labels) {
        by_group.entry(l.as_str()).or_default().push(p);
    }
    if by_group.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "separation needs at least 2 groups with placements, got {}",
            by_group.len()
        )));
    }
    let groups = by_group
        .iter()
        .map(|(g, ps)| GroupSummary {
            group: (*g).to_owned(),
            count: ps.len(),
            centroid_row: ps.iter().map(|p| p.row as f64).sum::<f64>() / ps.len() as f64,
            centroid_col: ps.iter().map(|p| p.col as f64).sum::<f64>() / ps.len() as f64,
        })
        .collect();

    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..placements.len() {
        for j in i + 1..placements.len() {
            let d = lattice_distance(&placements[i], &placements[j]);
            if labels[i] == labels[j] {
                intra += d;
                n_intra += 1;
            } else {
                inter += d;
                n_inter += 1;
            }
        }
    }
    let intra = if n_intra > 0 { intra / n_intra as f64 } else { 0.0 };
    let inter = inter / n_inter as f64;

    let first = &placements[0];
    let purity = if placements.iter().all(|p| (p.row, p.col) == (first.row, first.col)) {
        warn!("all pieces share one neuron; purity set to 0");
        0.0
    } else {
        purity(placements, labels)
    };
    Ok(SeparationReport {
        groups,
        intra_mean_distance: intra,
        inter_mean_distance: inter,
        purity,
        boundary: umatrix.and_then(|u| boundary_contrast(u, placements, labels)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::som::u_matrix;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn place(id: &str, row: usize, col: usize) -> Placement {
        Placement {
            id: id.into(),
            row,
            col,
            correlation: 1.0,
        }
    }

    fn tv(values: [f64; 8]) -> TimbreVector {
        TimbreVector::from_array(values)
    }

    #[test]
    fn z_scores_have_unit_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let corpus: Vec<TimbreVector> = (0..25)
            .map(|_| tv(std::array::from_fn(|k| rng.gen_range(0.0..10.0) * (k + 1) as f64)))
            .collect();
        let (z, norm) = normalize_timbre(&corpus).unwrap();
        for k in 0..8 {
            let m: f64 = z.iter().map(|v| v[k]).sum::<f64>() / 25.0;
            let s: f64 = (z.iter().map(|v| (v[k] - m).powi(2)).sum::<f64>() / 25.0).sqrt();
            assert!(m.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        }
        assert_eq!(norm.apply(&corpus[3].to_array()).unwrap(), z[3]);
    }

    #[test]
    fn identical_pieces_normalize_to_zero() {
        let corpus = vec![tv([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]); 4];
        let (z, norm) = normalize_timbre(&corpus).unwrap();
        assert!(z.iter().flatten().all(|&x| x == 0.0));
        assert!(norm.std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn two_pieces_give_plus_minus_one() {
        let a = tv([1.0, 5.0, 0.0, 0.0, 2.0, 2.0, 9.0, 1.0]);
        let b = tv([3.0, 5.0, 1.0, 0.0, 0.0, 2.0, 8.0, 4.0]);
        let (z, _) = normalize_timbre(&[a, b]).unwrap();
        assert_eq!(z[0], vec![-1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, -1.0]);
        assert_eq!(z[1], vec![1.0, 0.0, 1.0, 0.0, -1.0, 0.0, -1.0, 1.0]);
        assert!(normalize_timbre(&[a]).is_err());
    }

    #[test]
    fn split_partitions_and_swaps() {
        for (rows, cols) in [(26, 26), (15, 15), (4, 7), (2, 2)] {
            for diagonal in [Diagonal::Main, Diagonal::Anti] {
                let rule = SplitRule { diagonal, swap: false };
                let swapped = SplitRule { diagonal, swap: true };
                let mut upper = 0;
                for r in 0..rows {
                    for c in 0..cols {
                        let s = rule.side(rows, cols, r, c);
                        assert_ne!(s, swapped.side(rows, cols, r, c));
                        upper += (s == Side::Upper) as usize;
                    }
                }
                assert!(upper > 0 && upper < rows * cols);
            }
        }
        let main = SplitRule::default();
        assert_eq!(main.side(26, 26, 0, 25), Side::Upper);
        assert_eq!(main.side(26, 26, 25, 0), Side::Lower);
        assert_eq!(main.side(26, 26, 7, 7), Side::Lower);
        let anti = SplitRule { diagonal: Diagonal::Anti, swap: false };
        assert_eq!(anti.side(26, 26, 0, 0), Side::Upper);
        assert_eq!(anti.side(26, 26, 0, 25), Side::Lower);
        assert_eq!(anti.side(26, 26, 25, 25), Side::Lower);
    }

    fn tonal_grid() -> SomGrid {
        SomGrid::init(4, 4, TONAL_BINS, 3).unwrap()
    }

    fn bump(center: usize) -> Vec<f64> {
        (0..TONAL_BINS)
            .map(|b| (-((b as f64 - center as f64) / 4.0).powi(2)).exp())
            .collect()
    }

    #[test]
    fn difference_profile_signs_and_antisymmetry() {
        let grid = tonal_grid();
        let ps = vec![place("u1", 0, 3), place("u2", 0, 2), place("l1", 3, 0), place("l2", 2, 1)];
        let mut h = HashMap::new();
        h.insert("u1".to_string(), bump(720));
        h.insert("u2".to_string(), bump(721));
        h.insert("l1".to_string(), bump(702));
        h.insert("l2".to_string(), bump(701));
        let d = triangular_split_diff(&grid, &ps, &h, SplitRule::default(), MeanSource::Pieces).unwrap();
        assert!(d.delta[720] > 0.5 && d.delta[702] < -0.5);
        assert_eq!((d.upper_count, d.lower_count), (2, 2));
        let swapped = SplitRule { swap: true, ..SplitRule::default() };
        let e = triangular_split_diff(&grid, &ps, &h, swapped, MeanSource::Pieces).unwrap();
        for (a, b) in d.delta.iter().zip(&e.delta) {
            assert_eq!(*a, -*b);
        }
        assert_eq!(d.std_upper, e.std_lower);

        let same: HashMap<String, Vec<f64>> = h.keys().map(|k| (k.clone(), bump(500))).collect();
        let z = triangular_split_diff(&grid, &ps, &same, SplitRule::default(), MeanSource::Pieces).unwrap();
        assert!(z.delta.iter().all(|&x| x == 0.0));

        let n = triangular_split_diff(&grid, &ps, &h, SplitRule::default(), MeanSource::Neurons).unwrap();
        assert_eq!(n.upper_count + n.lower_count, 16);
    }

    #[test]
    fn equal_spreads_give_matching_std_profiles() {
        let grid = tonal_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ps = Vec::new();
        let mut h = HashMap::new();
        for i in 0..400 {
            let upper = i % 2 == 0;
            let id = format!("p{i}");
            let base = if upper { 720.0 } else { 702.0 };
            let amp = 1.0 + rng.gen_range(-0.3..0.3);
            let v: Vec<f64> = (0..TONAL_BINS)
                .map(|b| amp * (-((b as f64 - base) / 6.0).powi(2)).exp())
                .collect();
            h.insert(id.clone(), v);
            ps.push(if upper { place(&id, 0, 3) } else { place(&id, 3, 0) });
        }
        let d = triangular_split_diff(&grid, &ps, &h, SplitRule::default(), MeanSource::Pieces).unwrap();
        let (a, b) = (d.std_upper[720], d.std_lower[702]);
        assert!((a - b).abs() / b < 0.05, "{a} {b}");
    }

    #[test]
    fn empty_triangle_is_named() {
        let grid = tonal_grid();
        let ps = vec![place("a", 3, 0)];
        let h: HashMap<String, Vec<f64>> = [("a".to_string(), bump(3))].into();
        let err = triangular_split_diff(&grid, &ps, &h, SplitRule::default(), MeanSource::Pieces).unwrap_err();
        assert!(err.to_string().contains("upper-right"));
    }

    #[test]
    fn orientation_follows_the_named_group() {
        let grid = tonal_grid();
        let ps = vec![place("a", 3, 3), place("b", 0, 0)];
        let labels = vec!["A".to_string(), "B".to_string()];
        let rule = orient_split(&grid, &ps, &labels, "A").unwrap();
        assert_eq!(rule.side(4, 4, 3, 3), Side::Upper);
        assert_eq!(rule.side(4, 4, 0, 0), Side::Lower);
        assert!(orient_split(&grid, &ps, &labels, "C").is_err());
    }

    #[test]
    fn opposite_corners_are_pure() {
        let mut ps = Vec::new();
        let mut labels = Vec::new();
        for i in 0..5 {
            ps.push(place(&format!("a{i}"), i % 2, i / 2));
            labels.push("A".to_string());
            ps.push(place(&format!("b{i}"), 9 - i % 2, 9 - i / 2));
            labels.push("B".to_string());
        }
        let rep = separation_report(&ps, &labels, None).unwrap();
        assert_eq!(rep.purity, 1.0);
        assert!(rep.inter_mean_distance > rep.intra_mean_distance);
        assert_eq!(rep.groups.len(), 2);
        assert_eq!(rep.groups[0].group, "A");
        assert!(separation_report(&ps, &vec!["A".to_string(); 10], None).is_err());
    }

    #[test]
    fn shuffled_labels_sit_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ps: Vec<Placement> = (0..60)
            .map(|i| place(&format!("p{i}"), rng.gen_range(0..26), rng.gen_range(0..26)))
            .collect();
        let mut labels: Vec<String> = (0..60).map(|i| if i < 30 { "A" } else { "B" }.to_string()).collect();
        let mut total = 0.0;
        for _ in 0..100 {
            labels.shuffle(&mut rng);
            total += purity(&ps, &labels);
        }
        let mean = total / 100.0;
        assert!((mean - 0.5).abs() < 0.06, "{mean}");
    }

    #[test]
    fn single_neuron_layout_is_degenerate() {
        let ps = vec![place("a", 2, 2), place("b", 2, 2), place("c", 2, 2)];
        let labels = vec!["A".to_string(), "B".to_string(), "A".to_string()];
        let rep = separation_report(&ps, &labels, None).unwrap();
        assert_eq!(rep.purity, 0.0);
        assert_eq!((rep.intra_mean_distance, rep.inter_mean_distance), (0.0, 0.0));
    }

    #[test]
    fn boundary_sees_the_ridge() {
        let mut g = SomGrid::init(6, 6, 2, 0).unwrap();
        for n in 0..36 {
            let v = if n % 6 < 3 { [0.0, 1.0] } else { [1.0, 0.0] };
            g.weights[n * 2..n * 2 + 2].copy_from_slice(&v);
        }
        let ps = vec![place("a", 2, 0), place("b", 3, 5)];
        let labels = vec!["A".to_string(), "B".to_string()];
        let u = u_matrix(&g);
        let b = boundary_contrast(&u, &ps, &labels).unwrap();
        assert!((b.crossing_median - 2f64.sqrt() / 4.0).abs() < 1e-12);
        assert_eq!(b.occupied_median, 0.0);
        assert!(b.ratio.is_infinite());
        assert_eq!(crossing_height(&u, &ps[0], &ps[0]), 0.0);
    }
}
