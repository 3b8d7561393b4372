//! Finite probability spaces, product spaces over player coordinates, and
//! distributions on finite action sets.
//!
//! Sigma-algebras are represented by partitions of the atom set. A refined
//! space splits every atom into equal sub-atoms and every cell into matching
//! sub-cells, so refinement is the knob that approximates an atomless space.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that weights form a probability vector.
pub const WEIGHT_TOL: f64 = 1e-9;

/// Shared, ordered label set (atoms of a factor, actions of a player).
pub type Labels = Arc<[String]>;

pub fn labels<S: AsRef<str>>(items: &[S]) -> Labels {
    items.iter().map(|s| s.as_ref().to_string()).collect()
}

fn check_probability_vector(weights: &[f64]) -> std::result::Result<(), String> {
    if weights.is_empty() {
        return Err("no atoms".into());
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(format!("weight {w} is negative or not finite"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(format!("weights sum to {total}, expected 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteProbSpace {
    atoms: Vec<String>,
    weights: Vec<f64>,
    cell_of: Vec<usize>,
    cell_labels: Vec<String>,
}

impl FiniteProbSpace {
    /// Space with the finest partition: every atom is its own cell.
    pub fn new(atoms: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let cell_labels = atoms.clone();
        let cell_of = (0..atoms.len()).collect();
        Self::from_parts(atoms, weights, cell_of, cell_labels)
    }

    /// Space whose cells are the groups of atoms sharing a label. Cells are
    /// numbered in order of first appearance.
    pub fn with_cell_labels(atoms: Vec<String>, weights: Vec<f64>, labels: &[String]) -> Result<Self> {
        if labels.len() != atoms.len() {
            return Err(Error::InvalidSpace(format!(
                "{} cell labels for {} atoms",
                labels.len(),
                atoms.len()
            )));
        }
        let mut cell_labels: Vec<String> = Vec::new();
        let mut cell_of = Vec::with_capacity(atoms.len());
        for label in labels {
            let idx = match cell_labels.iter().position(|l| l == label) {
                Some(idx) => idx,
                None => {
                    cell_labels.push(label.clone());
                    cell_labels.len() - 1
                }
            };
            cell_of.push(idx);
        }
        Self::from_parts(atoms, weights, cell_of, cell_labels)
    }

    /// Fully explicit constructor. Distinct cells may share a label (sub-cells
    /// produced by [`FiniteProbSpace::refine`] keep their parent's label).
    pub fn from_parts(
        atoms: Vec<String>,
        weights: Vec<f64>,
        cell_of: Vec<usize>,
        cell_labels: Vec<String>,
    ) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        check_probability_vector(&weights).map_err(Error::InvalidSpace)?;
        let mut seen = std::collections::HashSet::new();
        for a in &atoms {
            if !seen.insert(a.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate atom `{a}`")));
            }
        }
        if cell_of.len() != atoms.len() {
            return Err(Error::InvalidSpace("cell assignment length mismatch".into()));
        }
        let mut used = vec![false; cell_labels.len()];
        for &c in &cell_of {
            if c >= cell_labels.len() {
                return Err(Error::InvalidSpace(format!("cell index {c} out of range")));
            }
            used[c] = true;
        }
        if used.iter().any(|u| !u) {
            return Err(Error::InvalidSpace("empty sigma cell".into()));
        }
        Ok(Self {
            atoms,
            weights,
            cell_of,
            cell_labels,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        let atoms = (0..n).map(|i| format!("t{i}")).collect();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> f64 {
        self.weights[atom]
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == name)
    }

    pub fn cell_of(&self, atom: usize) -> usize {
        self.cell_of[atom]
    }

    pub fn cell_assignment(&self) -> &[usize] {
        &self.cell_of
    }

    pub fn num_cells(&self) -> usize {
        self.cell_labels.len()
    }

    pub fn cell_label(&self, cell: usize) -> &str {
        &self.cell_labels[cell]
    }

    pub fn cell_labels(&self) -> &[String] {
        &self.cell_labels
    }

    pub fn cell_members(&self, cell: usize) -> Vec<usize> {
        (0..self.len()).filter(|&t| self.cell_of[t] == cell).collect()
    }

    pub fn cell_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.num_cells()];
        for (t, &c) in self.cell_of.iter().enumerate() {
            w[c] += self.weights[t];
        }
        w
    }

    pub fn is_finest(&self) -> bool {
        self.num_cells() == self.len()
    }

    /// Largest atom weight; zero would mean atomless.
    pub fn atomicity_level(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest weight of a sigma cell, i.e. of an atom of the measure algebra.
    pub fn max_cell_weight(&self) -> f64 {
        self.cell_weights().into_iter().fold(0.0, f64::max)
    }

    /// Splits every atom into `k` equal sub-atoms. Cell `c` becomes the `k`
    /// sub-cells `(c, j)`, the `j`-th holding the `j`-th sub-atom of each of
    /// its atoms; sub-cells keep the label of `c`.
    pub fn refine(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroRefinement);
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let mut atoms = Vec::with_capacity(self.len() * k);
        let mut weights = Vec::with_capacity(self.len() * k);
        let mut cell_of = Vec::with_capacity(self.len() * k);
        for (t, atom) in self.atoms.iter().enumerate() {
            for j in 0..k {
                atoms.push(format!("{atom}.{j}"));
                weights.push(self.weights[t] / k as f64);
                cell_of.push(self.cell_of[t] * k + j);
            }
        }
        let cell_labels = self
            .cell_labels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.clone(), k))
            .collect();
        Self::from_parts(atoms, weights, cell_of, cell_labels)
    }

    /// Image measure of the space under `f`, supported on `support`.
    pub fn pushforward<F>(&self, support: &Labels, f: F) -> Result<Distribution>
    where
        F: Fn(usize) -> Option<usize>,
    {
        let mut mass = vec![0.0; support.len()];
        for t in 0..self.len() {
            let y = f(t).ok_or_else(|| Error::UndefinedMap(self.atoms[t].clone()))?;
            if y >= support.len() {
                return Err(Error::IndexOutOfRange {
                    what: "action",
                    index: y,
                    len: support.len(),
                });
            }
            mass[y] += self.weights[t];
        }
        Ok(Distribution {
            support: support.clone(),
            mass,
        })
    }
}

/// Probability vector on a finite ordered support.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    support: Labels,
    mass: Vec<f64>,
}

impl Distribution {
    pub fn new(support: Labels, mass: Vec<f64>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} masses for {} support points",
                mass.len(),
                support.len()
            )));
        }
        check_probability_vector(&mass).map_err(Error::InvalidDistribution)?;
        Ok(Self { support, mass })
    }

    pub(crate) fn from_raw(support: Labels, mass: Vec<f64>) -> Self {
        debug_assert_eq!(support.len(), mass.len());
        Self { support, mass }
    }

    pub fn point_mass(support: Labels, at: usize) -> Result<Self> {
        if at >= support.len() {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: at,
                len: support.len(),
            });
        }
        let mut mass = vec![0.0; support.len()];
        mass[at] = 1.0;
        Ok(Self { support, mass })
    }

    pub fn support(&self) -> &Labels {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_of(&self, label: &str) -> Option<f64> {
        self.support.iter().position(|s| s == label).map(|i| self.mass[i])
    }

    pub fn same_support(&self, other: &Distribution) -> bool {
        Arc::ptr_eq(&self.support, &other.support) || self.support == other.support
    }

    pub fn tv_distance(&self, other: &Distribution) -> Result<f64> {
        tv_distance(self, other)
    }
}

/// Total-variation distance `1/2 * sum |p(y) - q(y)|`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if !p.same_support(q) {
        return Err(Error::SupportMismatch);
    }
    Ok(tv_raw(&p.mass, &q.mass))
}

pub(crate) fn tv_raw(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Which component of a player's block a projection reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    /// Layout `(z_1, ..., z_n)`: the player's own coordinate.
    Plain,
    /// Layout `(z_1, x_1, ..., z_n, x_n)`: the type coordinate `z_i`.
    Type,
    /// Layout `(z_1, x_1, ..., z_n, x_n)`: the shock coordinate `x_i`.
    Shock,
}

impl Coordinate {
    pub fn index(self, player: usize) -> usize {
        match self {
            Coordinate::Plain => player,
            Coordinate::Type => 2 * player,
            Coordinate::Shock => 2 * player + 1,
        }
    }
}

/// Returns the component of a joint atom selected by `player` and `coord`.
pub fn coordinate_projection(omega: &[usize], player: usize, coord: Coordinate) -> Result<usize> {
    let idx = coord.index(player);
    omega.get(idx).copied().ok_or(Error::IndexOutOfRange {
        what: "player",
        index: player,
        len: match coord {
            Coordinate::Plain => omega.len(),
            _ => omega.len() / 2,
        },
    })
}

/// Joint law on the full Cartesian product of factor atom sets. The joint is
/// stored densely in row-major order (last factor varies fastest); atoms of
/// zero weight are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpace {
    factors: Vec<Labels>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub independent: bool,
    /// Total-variation distance between the joint and the product of the
    /// group marginals.
    pub tv_deviation: f64,
    /// Largest atom-wise discrepancy between the same two laws.
    pub atom_deviation: f64,
}

impl ProductSpace {
    /// Builds the joint from sparse `(tuple, weight)` entries; tuples not
    /// listed get weight zero. Repeated tuples accumulate.
    pub fn new(factors: Vec<Labels>, entries: &[(Vec<usize>, f64)]) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|f| f.is_empty()) {
            return Err(Error::InvalidSpace("every factor needs at least one atom".into()));
        }
        let size = factors.iter().map(|f| f.len()).product();
        let mut weights = vec![0.0; size];
        let mut space = Self {
            factors,
            weights: Vec::new(),
        };
        for (tuple, w) in entries {
            let idx = space.flat_index(tuple)?;
            weights[idx] += *w;
        }
        check_probability_vector(&weights).map_err(Error::InvalidSpace)?;
        space.weights = weights;
        Ok(space)
    }

    /// Dense constructor; `weights` in row-major order.
    pub fn from_dense(factors: Vec<Labels>, weights: Vec<f64>) -> Result<Self> {
        let size: usize = factors.iter().map(|f| f.len()).product();
        if factors.is_empty() || size == 0 || weights.len() != size {
            return Err(Error::InvalidSpace("dense joint has wrong size".into()));
        }
        check_probability_vector(&weights).map_err(Error::InvalidSpace)?;
        Ok(Self { factors, weights })
    }

    /// Product measure of the given factor laws.
    pub fn product(factors: &[(Labels, Vec<f64>)]) -> Result<Self> {
        let labels: Vec<Labels> = factors.iter().map(|(l, _)| l.clone()).collect();
        for (l, w) in factors {
            if l.len() != w.len() {
                return Err(Error::InvalidSpace("factor weight length mismatch".into()));
            }
            check_probability_vector(w).map_err(Error::InvalidSpace)?;
        }
        let mut weights = vec![1.0];
        for (_, w) in factors {
            weights = weights.iter().flat_map(|a| w.iter().map(move |b| a * b)).collect();
        }
        Self::from_dense(labels, weights)
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, i: usize) -> &Labels {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[Labels] {
        &self.factors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn flat_index(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.factors.len() {
            return Err(Error::InvalidSpace(format!(
                "atom tuple has {} coordinates, expected {}",
                tuple.len(),
                self.factors.len()
            )));
        }
        let mut idx = 0;
        for (c, f) in tuple.iter().zip(&self.factors) {
            if *c >= f.len() {
                return Err(Error::IndexOutOfRange {
                    what: "factor atom",
                    index: *c,
                    len: f.len(),
                });
            }
            idx = idx * f.len() + c;
        }
        Ok(idx)
    }

    pub fn tuple(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = flat % f.len();
            flat /= f.len();
        }
        out
    }

    /// Iterates `(tuple, weight)` over every joint atom, zero weights included.
    pub fn atoms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.weights.iter().enumerate().map(|(k, w)| (self.tuple(k), *w))
    }

    pub fn marginal(&self, i: usize) -> Result<Distribution> {
        if i >= self.factors.len() {
            return Err(Error::IndexOutOfRange {
                what: "coordinate",
                index: i,
                len: self.factors.len(),
            });
        }
        let mut mass = vec![0.0; self.factors[i].len()];
        for (tuple, w) in self.atoms() {
            mass[tuple[i]] += w;
        }
        Ok(Distribution::from_raw(self.factors[i].clone(), mass))
    }

    /// Law of the sub-tuple on `coords`, row-major over those coordinates.
    fn group_marginal(&self, coords: &[usize]) -> Vec<f64> {
        let size = coords.iter().map(|&c| self.factors[c].len()).product();
        let mut mass = vec![0.0; size];
        for (tuple, w) in self.atoms() {
            let mut idx = 0;
            for &c in coords {
                idx = idx * self.factors[c].len() + tuple[c];
            }
            mass[idx] += w;
        }
        mass
    }

    /// Tests whether the random elements given by the coordinate groups are
    /// mutually independent. Groups must be nonempty and disjoint; coordinates
    /// outside every group are integrated out.
    pub fn is_mutually_independent(&self, grouping: &[Vec<usize>], tol: f64) -> Result<IndependenceReport> {
        if grouping.is_empty() {
            return Err(Error::InvalidGrouping("no groups".into()));
        }
        let mut seen = vec![false; self.factors.len()];
        for group in grouping {
            if group.is_empty() {
                return Err(Error::InvalidGrouping("empty group".into()));
            }
            for &c in group {
                if c >= self.factors.len() {
                    return Err(Error::InvalidGrouping(format!("coordinate {c} out of range")));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::InvalidGrouping(format!("coordinate {c} repeated")));
                }
            }
        }
        let covered: Vec<usize> = grouping.iter().flatten().copied().collect();
        let joint = self.group_marginal(&covered);
        let marginals: Vec<Vec<f64>> = grouping.iter().map(|g| self.group_marginal(g)).collect();
        let mut product = vec![1.0];
        for m in &marginals {
            product = product.iter().flat_map(|a| m.iter().map(move |b| a * b)).collect();
        }
        let tv_deviation = tv_raw(&joint, &product);
        let atom_deviation = joint
            .iter()
            .zip(&product)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(IndependenceReport {
            independent: tv_deviation <= tol,
            tv_deviation,
            atom_deviation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn space(ws: &[f64]) -> FiniteProbSpace {
        let atoms = (0..ws.len()).map(|i| format!("a{i}")).collect();
        FiniteProbSpace::new(atoms, ws.to_vec()).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(coordinate_projection(&[3, 7], 0, Coordinate::Plain).unwrap(), 3);
        assert_eq!(coordinate_projection(&[5], 0, Coordinate::Plain).unwrap(), 5);
        assert_eq!(coordinate_projection(&[0, 1, 2, 3], 1, Coordinate::Shock).unwrap(), 3);
        assert_eq!(coordinate_projection(&[0, 1, 2, 3], 1, Coordinate::Type).unwrap(), 2);
        assert!(coordinate_projection(&[0, 1], 2, Coordinate::Plain).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let ys = labels(&["0", "1"]);
        let d = space(&[0.5, 0.5]).pushforward(&ys, |_| Some(0)).unwrap();
        assert_eq!(d.mass(), &[1.0, 0.0]);
        let d = space(&[0.5, 0.5]).pushforward(&ys, Some).unwrap();
        assert_eq!(d.mass(), &[0.5, 0.5]);
        let d = space(&[0.2, 0.3, 0.5])
            .pushforward(&ys, |t| Some(usize::from(t == 2)))
            .unwrap();
        assert_abs_diff_eq!(d.mass()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mass()[1], 0.5, epsilon = 1e-15);
        let err = space(&[0.5, 0.5]).pushforward(&ys, |t| (t == 0).then_some(0));
        assert_eq!(err, Err(Error::UndefinedMap("a1".into())));
    }

    #[test]
    fn refine_examples() {
        let s = FiniteProbSpace::new(vec!["a".into()], vec![1.0]).unwrap();
        let r = s.refine(4).unwrap();
        assert_eq!(r.weights(), &[0.25; 4]);
        assert_eq!(r.num_cells(), 4);
        assert!(r.cell_labels().iter().all(|l| l == "a"));

        let s = space(&[0.5, 0.5]);
        assert_eq!(s.refine(1).unwrap(), s);

        let r = space(&[0.3, 0.7]).refine(2).unwrap();
        assert_eq!(r.weights(), &[0.15, 0.15, 0.35, 0.35]);
        assert_eq!(space(&[1.0]).refine(0), Err(Error::ZeroRefinement));
    }

    #[test]
    fn refine_nests_coarse_cells() {
        let s =
            FiniteProbSpace::with_cell_labels(vec!["x".into(), "y".into()], vec![0.5, 0.5], &["c".into(), "c".into()])
                .unwrap();
        let r = s.refine(2).unwrap();
        // sub-cell j holds the j-th piece of both x and y
        assert_eq!(r.cell_assignment(), &[0, 1, 0, 1]);
        assert_eq!(r.cell_weights(), vec![0.5, 0.5]);
    }

    #[test]
    fn tv_examples() {
        let ys = labels(&["0", "1"]);
        let d0 = Distribution::point_mass(ys.clone(), 0).unwrap();
        let d1 = Distribution::point_mass(ys.clone(), 1).unwrap();
        assert_eq!(tv_distance(&d0, &d0).unwrap(), 0.0);
        assert_eq!(tv_distance(&d0, &d1).unwrap(), 1.0);
        let p = Distribution::new(ys.clone(), vec![0.5, 0.5]).unwrap();
        let q = Distribution::new(ys, vec![0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(tv_distance(&p, &q).unwrap(), 0.2, epsilon = 1e-15);
        let other = Distribution::point_mass(labels(&["a", "b"]), 0).unwrap();
        assert_eq!(tv_distance(&p, &other), Err(Error::SupportMismatch));
    }

    #[test]
    fn independence_examples() {
        let coin = labels(&["H", "T"]);
        let prod = ProductSpace::product(&[(coin.clone(), vec![0.5, 0.5]), (coin.clone(), vec![0.5, 0.5])]).unwrap();
        let r = prod.is_mutually_independent(&[vec![0], vec![1]], 1e-12).unwrap();
        assert!(r.independent);
        assert_eq!(r.tv_deviation, 0.0);

        let corr = ProductSpace::new(vec![coin.clone(), coin], &[(vec![0, 0], 0.5), (vec![1, 1], 0.5)]).unwrap();
        let r = corr.is_mutually_independent(&[vec![0], vec![1]], 1e-12).unwrap();
        assert!(!r.independent);
        assert_eq!(r.atom_deviation, 0.25);
        assert_eq!(r.tv_deviation, 0.5);

        let r = corr.is_mutually_independent(&[vec![0, 1]], 0.0).unwrap();
        assert!(r.independent);

        assert!(corr.is_mutually_independent(&[vec![0], vec![0]], 0.0).is_err());
        assert!(corr.is_mutually_independent(&[vec![0], vec![]], 0.0).is_err());
        assert!(corr.is_mutually_independent(&[vec![2]], 0.0).is_err());
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(FiniteProbSpace::new(vec!["a".into()], vec![0.9]).is_err());
        assert!(FiniteProbSpace::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
        assert!(FiniteProbSpace::new(vec!["a".into(), "b".into()], vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(labels(&["a"]), vec![0.5]).is_err());
    }

    #[test]
    fn zero_weight_atoms_are_kept() {
        let s = space(&[0.0, 1.0]);
        assert_eq!(s.refine(3).unwrap().len(), 6);
        let coin = labels(&["H", "T"]);
        let p = ProductSpace::new(vec![coin.clone(), coin], &[(vec![0, 1], 1.0)]).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.marginal(0).unwrap().mass(), &[1.0, 0.0]);
    }
}
