//! Set-valued maps between finite sets.
//!
//! Semicontinuity is tested on a finite metric grid in containment form: a
//! correspondence is upper semicontinuous at scale `delta` when every value
//! within `delta` of `x` is contained in `F(x)`, and lower semicontinuous when
//! `F(x)` is contained in every value within `delta` of `x`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::hull;
use crate::measure::Labels;

/// Subset of a finite codomain, as indices into its label list.
pub type ActionSet = BTreeSet<usize>;

const METRIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricGrid {
    points: Vec<String>,
    dist: Vec<Vec<f64>>,
}

impl MetricGrid {
    pub fn new(points: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidMetric("distance table is not square".into()));
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::InvalidMetric(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidMetric(format!("bad distance at ({i}, {j})")));
                }
                if i != j && d == 0.0 {
                    return Err(Error::InvalidMetric(format!("points {i} and {j} coincide")));
                }
                if (d - dist[j][i]).abs() > METRIC_TOL {
                    return Err(Error::InvalidMetric(format!("asymmetric at ({i}, {j})")));
                }
                for (k, (&ik, &jk)) in dist[i].iter().zip(&dist[j]).enumerate() {
                    if ik > d + jk + METRIC_TOL {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails for ({i}, {j}, {k})"
                        )));
                    }
                }
            }
        }
        Ok(Self { points, dist })
    }

    /// Points on the real line with the absolute-difference metric.
    pub fn line(positions: &[f64]) -> Result<Self> {
        let points = positions.iter().map(|p| format!("{p}")).collect();
        let dist = positions
            .iter()
            .map(|a| positions.iter().map(|b| (a - b).abs()).collect())
            .collect();
        Self::new(points, dist)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a][b]
    }

    /// Sorted distinct positive distances.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut ds: Vec<f64> = self.dist.iter().flatten().copied().filter(|d| *d > 0.0).collect();
        ds.sort_by(f64::total_cmp);
        ds.dedup();
        ds
    }

    /// Smallest distance between a point of `set` and a point outside it;
    /// infinite when either side is empty.
    pub fn separation(&self, set: &BTreeSet<usize>) -> f64 {
        let mut best = f64::INFINITY;
        for &a in set {
            for b in (0..self.len()).filter(|b| !set.contains(b)) {
                best = best.min(self.dist[a][b]);
            }
        }
        best
    }

    /// Pairs `(x, x')` with `x != x'` and `dist(x, x') < delta`.
    pub fn close_pairs(&self, delta: f64) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n)
            .flat_map(move |a| (0..n).map(move |b| (a, b)))
            .filter(move |&(a, b)| a != b && self.dist[a][b] < delta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    domain: Vec<String>,
    codomain: Labels,
    values: Vec<ActionSet>,
    metric: Option<MetricGrid>,
    partition: Option<Vec<usize>>,
}

impl Correspondence {
    pub fn new(domain: Vec<String>, codomain: Labels, values: Vec<ActionSet>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Precondition(format!(
                "{} values for {} domain points",
                values.len(),
                domain.len()
            )));
        }
        if values.iter().flatten().any(|&y| y >= codomain.len()) {
            return Err(Error::NotSubset);
        }
        Ok(Self {
            domain,
            codomain,
            values,
            metric: None,
            partition: None,
        })
    }

    /// Correspondence on the points `0..n` named `x0, x1, ...`.
    pub fn from_fn(n: usize, codomain: Labels, f: impl Fn(usize) -> ActionSet) -> Result<Self> {
        let domain = (0..n).map(|i| format!("x{i}")).collect();
        Self::new(domain, codomain, (0..n).map(f).collect())
    }

    pub fn with_metric(mut self, metric: MetricGrid) -> Result<Self> {
        if metric.len() != self.domain.len() {
            return Err(Error::InvalidMetric("metric size differs from domain".into()));
        }
        self.metric = Some(metric);
        Ok(self)
    }

    /// Attaches a sigma partition given as a cell index per domain point.
    pub fn with_partition(mut self, cell_of: Vec<usize>) -> Result<Self> {
        if cell_of.len() != self.domain.len() {
            return Err(Error::Precondition("partition size differs from domain".into()));
        }
        self.partition = Some(cell_of);
        Ok(self)
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn codomain(&self) -> &Labels {
        &self.codomain
    }

    pub fn values(&self) -> &[ActionSet] {
        &self.values
    }

    pub fn value(&self, x: usize) -> &ActionSet {
        &self.values[x]
    }

    pub fn metric(&self) -> Option<&MetricGrid> {
        self.metric.as_ref()
    }

    pub fn partition(&self) -> Option<&[usize]> {
        self.partition.as_deref()
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn full_codomain(&self) -> ActionSet {
        (0..self.codomain.len()).collect()
    }

    /// Fails with the first domain point whose value is empty.
    pub fn require_nonempty(&self) -> Result<()> {
        match self.values.iter().position(|v| v.is_empty()) {
            Some(x) => Err(Error::EmptyValue(self.domain[x].clone())),
            None => Ok(()),
        }
    }

    fn check_subset(&self, set: &ActionSet) -> Result<()> {
        if set.iter().any(|&y| y >= self.codomain.len()) {
            return Err(Error::NotSubset);
        }
        Ok(())
    }

    fn same_shape(&self, other: &Correspondence) -> Result<()> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    /// `{x : F(x) ⊆ set}`.
    pub fn upper_inverse(&self, set: &ActionSet) -> Result<BTreeSet<usize>> {
        self.check_subset(set)?;
        Ok((0..self.len()).filter(|&x| self.values[x].is_subset(set)).collect())
    }

    /// `{x : F(x) ∩ set ≠ ∅}`.
    pub fn lower_inverse(&self, set: &ActionSet) -> Result<BTreeSet<usize>> {
        self.check_subset(set)?;
        Ok((0..self.len()).filter(|&x| !self.values[x].is_disjoint(set)).collect())
    }

    /// True iff every fibre `{t : y ∈ F(t)}` is a union of sigma cells.
    pub fn is_measurable(&self) -> Result<bool> {
        let cells = self.partition.as_ref().ok_or(Error::MissingPartition)?;
        Ok(is_cell_constant(cells, &self.values))
    }

    /// True iff `set` is a union of sigma cells.
    pub fn is_cell_union(&self, set: &BTreeSet<usize>) -> Result<bool> {
        let cells = self.partition.as_ref().ok_or(Error::MissingPartition)?;
        Ok((0..self.len())
            .all(|a| (0..self.len()).all(|b| cells[a] != cells[b] || set.contains(&a) == set.contains(&b))))
    }

    fn grid(&self, delta: f64) -> Result<&MetricGrid> {
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::NonPositiveDelta(delta));
        }
        self.metric.as_ref().ok_or(Error::MissingMetric)
    }

    pub fn usc_modulus(&self, delta: f64) -> Result<bool> {
        let grid = self.grid(delta)?;
        Ok(grid
            .close_pairs(delta)
            .all(|(x, near)| self.values[near].is_subset(&self.values[x])))
    }

    pub fn lsc_modulus(&self, delta: f64) -> Result<bool> {
        let grid = self.grid(delta)?;
        Ok(grid
            .close_pairs(delta)
            .all(|(x, near)| self.values[x].is_subset(&self.values[near])))
    }

    /// Largest distinct grid distance at which [`usc_modulus`] holds, or
    /// infinity when it holds at every scale.
    ///
    /// [`usc_modulus`]: Correspondence::usc_modulus
    pub fn max_usc_modulus(&self) -> Result<f64> {
        self.max_modulus(|c, d| c.usc_modulus(d))
    }

    pub fn max_lsc_modulus(&self) -> Result<f64> {
        self.max_modulus(|c, d| c.lsc_modulus(d))
    }

    fn max_modulus(&self, test: impl Fn(&Self, f64) -> Result<bool>) -> Result<f64> {
        let grid = self.metric.as_ref().ok_or(Error::MissingMetric)?;
        let ds = grid.distinct_distances();
        let Some(&largest) = ds.last() else {
            return Ok(f64::INFINITY);
        };
        // any delta above the largest distance covers every pair
        if test(self, largest * 2.0)? {
            return Ok(f64::INFINITY);
        }
        let mut best = ds[0];
        for &d in &ds {
            if test(self, d)? {
                best = d;
            } else {
                break;
            }
        }
        Ok(best)
    }

    /// `F1` off `region` and `F2` on it; requires `F2(x) ⊆ F1(x)` on `region`.
    pub fn glue(f1: &Correspondence, f2: &Correspondence, region: &BTreeSet<usize>) -> Result<Correspondence> {
        f1.same_shape(f2)?;
        if let Some(&x) = region.iter().find(|&&x| x >= f1.len()) {
            return Err(Error::IndexOutOfRange {
                what: "domain point",
                index: x,
                len: f1.len(),
            });
        }
        if let Some(&x) = region.iter().find(|&&x| !f2.values[x].is_subset(&f1.values[x])) {
            return Err(Error::Precondition(format!(
                "F2 not contained in F1 at `{}`",
                f1.domain[x]
            )));
        }
        let mut out = f1.clone();
        for &x in region {
            out.values[x] = f2.values[x].clone();
        }
        Ok(out)
    }

    pub fn intersect(&self, other: &Correspondence) -> Result<Correspondence> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v = v.intersection(w).copied().collect();
        }
        Ok(out)
    }

    /// Pointwise closure. Finite codomains are discrete, so this is the identity.
    pub fn close_values(&self) -> Correspondence {
        self.clone()
    }

    /// Pointwise convex hull under an embedding of the codomain into `R^d`.
    pub fn hull_values(&self, embedding: &[Vec<f64>]) -> Result<HullValues> {
        if embedding.len() != self.codomain.len() {
            return Err(Error::Precondition("embedding must cover the codomain".into()));
        }
        let dim = embedding.first().map_or(0, |v| v.len());
        if embedding.iter().any(|v| v.len() != dim) {
            return Err(Error::Precondition("embedding vectors differ in dimension".into()));
        }
        Ok(HullValues {
            generators: self
                .values
                .iter()
                .map(|v| v.iter().map(|&y| embedding[y].clone()).collect())
                .collect(),
        })
    }
}

/// Convex-hull-valued map represented by its generators at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct HullValues {
    pub generators: Vec<Vec<Vec<f64>>>,
}

impl HullValues {
    /// Membership of `point` in the hull at `x`, measured in half the L1 norm.
    pub fn contains(&self, x: usize, point: &[f64], tol: f64) -> Result<bool> {
        let gens = &self.generators[x];
        if gens.is_empty() {
            return Ok(false);
        }
        Ok(hull::hull_distance(gens, point)? <= tol)
    }
}

pub(crate) fn is_cell_constant(cells: &[usize], values: &[ActionSet]) -> bool {
    let mut rep: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    cells.iter().enumerate().all(|(t, &c)| {
        let first = *rep.entry(c).or_insert(t);
        values[first] == values[t]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::labels;

    fn set(xs: &[usize]) -> ActionSet {
        xs.iter().copied().collect()
    }

    fn two_point(v0: &[usize], v1: &[usize]) -> Correspondence {
        Correspondence::new(
            vec!["x1".into(), "x2".into()],
            labels(&["0", "1"]),
            vec![set(v0), set(v1)],
        )
        .unwrap()
    }

    #[test]
    fn upper_inverse_examples() {
        let f = Correspondence::new(vec!["x".into()], labels(&["0", "1"]), vec![set(&[0])]).unwrap();
        assert_eq!(f.upper_inverse(&set(&[0, 1])).unwrap(), set(&[0]));
        let f = two_point(&[0, 1], &[1]);
        assert_eq!(f.upper_inverse(&f.full_codomain()).unwrap(), set(&[0, 1]));
        assert_eq!(f.upper_inverse(&set(&[1])).unwrap(), set(&[1]));
        assert_eq!(f.upper_inverse(&set(&[2])), Err(Error::NotSubset));
    }

    #[test]
    fn lower_inverse_examples() {
        let f = two_point(&[0, 1], &[1]);
        assert!(f.lower_inverse(&set(&[])).unwrap().is_empty());
        assert_eq!(f.lower_inverse(&set(&[0])).unwrap(), set(&[0]));
        assert_eq!(f.lower_inverse(&f.full_codomain()).unwrap(), set(&[0, 1]));
    }

    #[test]
    fn measurability_examples() {
        let f = two_point(&[0], &[1]);
        assert_eq!(f.is_measurable(), Err(Error::MissingPartition));
        assert!(f.clone().with_partition(vec![0, 1]).unwrap().is_measurable().unwrap());
        assert!(!f.with_partition(vec![0, 0]).unwrap().is_measurable().unwrap());
        let g = two_point(&[0, 1], &[0, 1]).with_partition(vec![0, 0]).unwrap();
        assert!(g.is_measurable().unwrap());
    }

    #[test]
    fn usc_examples() {
        let grid = MetricGrid::line(&[0.0, 1.0]).unwrap();
        let constant = two_point(&[0], &[0]).with_metric(grid.clone()).unwrap();
        assert!(constant.usc_modulus(100.0).unwrap());
        let f = two_point(&[0], &[0, 1]).with_metric(grid.clone()).unwrap();
        assert!(!f.usc_modulus(1.5).unwrap());
        assert!(f.usc_modulus(0.5).unwrap());
        assert_eq!(f.max_usc_modulus().unwrap(), 1.0);
        assert_eq!(constant.max_usc_modulus().unwrap(), f64::INFINITY);
        assert_eq!(f.usc_modulus(0.0), Err(Error::NonPositiveDelta(0.0)));
        assert_eq!(two_point(&[0], &[0]).usc_modulus(1.0), Err(Error::MissingMetric));
    }

    #[test]
    fn lsc_examples() {
        let grid = MetricGrid::line(&[0.0, 1.0]).unwrap();
        let constant = two_point(&[1], &[1]).with_metric(grid.clone()).unwrap();
        assert!(constant.lsc_modulus(7.0).unwrap());
        let f = two_point(&[0, 1], &[0]).with_metric(grid).unwrap();
        assert!(!f.lsc_modulus(1.5).unwrap());
        let single = Correspondence::new(vec!["x".into()], labels(&["a"]), vec![set(&[0])])
            .unwrap()
            .with_metric(MetricGrid::line(&[0.0]).unwrap())
            .unwrap();
        assert!(single.lsc_modulus(1.0).unwrap());
    }

    #[test]
    fn glue_examples() {
        let f1 = Correspondence::from_fn(3, labels(&["a", "b"]), |_| set(&[0, 1])).unwrap();
        let f2 = Correspondence::from_fn(3, labels(&["a", "b"]), |_| set(&[0])).unwrap();
        assert_eq!(Correspondence::glue(&f1, &f2, &set(&[])).unwrap(), f1);
        assert_eq!(Correspondence::glue(&f1, &f2, &set(&[0, 1, 2])).unwrap(), f2);
        let g = Correspondence::glue(&f1, &f2, &set(&[0])).unwrap();
        assert_eq!(g.values(), &[set(&[0]), set(&[0, 1]), set(&[0, 1])]);
        assert!(matches!(
            Correspondence::glue(&f2, &f1, &set(&[1])),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn intersect_examples() {
        let ys = labels(&["a", "b", "c"]);
        let f = Correspondence::from_fn(2, ys.clone(), |x| if x == 0 { set(&[0, 1]) } else { set(&[2]) }).unwrap();
        assert_eq!(f.intersect(&f).unwrap(), f);
        let full = Correspondence::from_fn(2, ys.clone(), |_| set(&[0, 1, 2])).unwrap();
        assert_eq!(f.intersect(&full).unwrap(), f);
        let g = Correspondence::from_fn(2, ys, |_| set(&[1, 2])).unwrap();
        assert_eq!(f.intersect(&g).unwrap().value(0), &set(&[1]));
        let other = Correspondence::from_fn(3, labels(&["a", "b", "c"]), |_| set(&[0])).unwrap();
        assert_eq!(f.intersect(&other), Err(Error::DomainMismatch));
        assert_eq!(f.close_values(), f);
    }

    #[test]
    fn hull_values_membership() {
        let f = two_point(&[0, 1], &[1]);
        let emb = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let h = f.hull_values(&emb).unwrap();
        assert!(h.contains(0, &[0.5, 0.5], 1e-9).unwrap());
        assert!(!h.contains(1, &[0.5, 0.5], 1e-9).unwrap());
        assert!(f.hull_values(&emb[..1]).is_err());
    }

    #[test]
    fn metric_validation() {
        assert!(MetricGrid::new(vec!["a".into(), "b".into()], vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        let bad_triangle = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(MetricGrid::new(vec!["a".into(), "b".into(), "c".into()], bad_triangle).is_err());
        let grid = MetricGrid::line(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(grid.separation(&set(&[2])), 2.0);
        assert_eq!(grid.separation(&set(&[])), f64::INFINITY);
    }
}
