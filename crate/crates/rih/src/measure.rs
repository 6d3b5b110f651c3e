//! Finitely supported measures, CDF staircases, and the Kolmogorov metric.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// A finite positive measure given by weighted atoms, kept sorted by
/// position with equal positions merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn dirac(x: f64) -> Self {
        AtomicMeasure { atoms: vec![Atom { position: x, weight: 1.0 }] }
    }

    pub fn from_atoms(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.retain(|p| p.1 > 0.0);
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut atoms: Vec<Atom> = Vec::with_capacity(pairs.len());
        for (position, weight) in pairs {
            match atoms.last_mut() {
                Some(last) if last.position == position => last.weight += weight,
                _ => atoms.push(Atom { position, weight }),
            }
        }
        AtomicMeasure { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total mass, accumulated with Neumaier compensation so the check is
    /// more accurate than what it is checking.
    pub fn total_mass(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for a in &self.atoms {
            let t = sum + a.weight;
            if sum.abs() >= a.weight.abs() {
                comp += (sum - t) + a.weight;
            } else {
                comp += (a.weight - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    pub fn max_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).fold(0.0, f64::max)
    }

    /// Right-continuous CDF: mass at or below x.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.position <= x)
            .map(|a| a.weight)
            .sum()
    }

    pub fn to_staircase(&self) -> Staircase {
        let mut xs = Vec::with_capacity(self.atoms.len());
        let mut ys = Vec::with_capacity(self.atoms.len());
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.weight;
            xs.push(a.position);
            ys.push(acc);
        }
        Staircase { xs, ys }
    }
}

/// A nondecreasing right-continuous step function with limit 0 at minus
/// infinity; jump points and cumulative values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Staircase {
    /// Builds from (x, cumulative value) pairs; xs must be strictly
    /// increasing and ys nondecreasing.
    pub fn from_cumulative(points: Vec<(f64, f64)>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        let (xs, ys) = points.into_iter().unzip();
        Staircase { xs, ys }
    }

    pub fn jump_points(&self) -> &[f64] {
        &self.xs
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.xs.partition_point(|&p| p <= x) {
            0 => 0.0,
            i => self.ys[i - 1],
        }
    }

    /// Left limit at x: the value just below x.
    pub fn left_limit(&self, x: f64) -> f64 {
        match self.xs.partition_point(|&p| p < x) {
            0 => 0.0,
            i => self.ys[i - 1],
        }
    }

    pub fn final_value(&self) -> f64 {
        self.ys.last().copied().unwrap_or(0.0)
    }
}

/// Kolmogorov (sup) distance between two staircases; the sup of the
/// difference of right-continuous steps is attained at a jump point.
pub fn kolmogorov_distance(a: &Staircase, b: &Staircase) -> f64 {
    let mut best = 0.0f64;
    for &x in a.xs.iter().chain(b.xs.iter()) {
        best = best.max((a.value(x) - b.value(x)).abs());
        best = best.max((a.left_limit(x) - b.left_limit(x)).abs());
    }
    best
}

/// Sup over the line of (a - b); positive when a sits above b.
pub fn sup_difference(a: &Staircase, b: &Staircase) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for &x in a.xs.iter().chain(b.xs.iter()) {
        best = best.max(a.value(x) - b.value(x));
        best = best.max(a.left_limit(x) - b.left_limit(x));
    }
    if best == f64::NEG_INFINITY {
        0.0
    } else {
        best
    }
}

/// Pointwise CDF domination: CDF(a) >= CDF(b) everywhere (a stochastically
/// below b), with slack for accumulated rounding.
pub fn cdf_dominates(a: &Staircase, b: &Staircase, slack: f64) -> bool {
    sup_difference(b, a) <= slack
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merging_and_mass() {
        let m = AtomicMeasure::from_atoms(vec![(1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]);
        assert_eq!(m.len(), 2);
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(m.cdf(0.5), 0.5);
        assert_eq!(m.cdf(1.0), 1.0);
    }

    #[test]
    fn kolmogorov_reference_values() {
        let a = AtomicMeasure::dirac(0.0).to_staircase();
        let b = AtomicMeasure::dirac(1.0).to_staircase();
        assert_eq!(kolmogorov_distance(&a, &a), 0.0);
        assert_eq!(kolmogorov_distance(&a, &b), 1.0);

        // uniform staircase against itself shifted by one cell
        let u = AtomicMeasure::from_atoms((0..4).map(|i| (i as f64, 0.25)).collect());
        let v = AtomicMeasure::from_atoms((1..5).map(|i| (i as f64, 0.25)).collect());
        let d = kolmogorov_distance(&u.to_staircase(), &v.to_staircase());
        assert!((d - 0.25).abs() < 1e-15);
    }

    #[test]
    fn domination_detects_order() {
        let lo = AtomicMeasure::from_atoms(vec![(0.0, 0.5), (1.0, 0.5)]);
        let hi = AtomicMeasure::from_atoms(vec![(0.5, 0.5), (2.0, 0.5)]);
        assert!(cdf_dominates(&lo.to_staircase(), &hi.to_staircase(), 0.0));
        assert!(!cdf_dominates(&hi.to_staircase(), &lo.to_staircase(), 0.0));
    }

    #[test]
    fn left_limits() {
        let s = AtomicMeasure::from_atoms(vec![(0.0, 0.5), (1.0, 0.5)]).to_staircase();
        assert_eq!(s.left_limit(1.0), 0.5);
        assert_eq!(s.value(1.0), 1.0);
        assert_eq!(s.left_limit(-5.0), 0.0);
    }
}
