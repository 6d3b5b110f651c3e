//! The Markov operator of a random system, a certified stationary-measure
//! solver built on stochastic-order bracketing, endpoint tail certificates,
//! a seeded Monte Carlo oracle, and the singular-support and full-support
//! diagnostics.
//!
//! Solver scheme: two atomic chains start as point masses at the window
//! edges. Each step applies the operator, widens every image by its
//! certified evaluation error, and rounds positions directionally onto a
//! lattice: down in the chain whose CDF runs high, up in the other. Both
//! operations preserve stochastic order, so the chain CDFs bracket the CDF
//! of any stationary measure supported in the window; the tail certificate
//! bounds the unwindowed mass of the true stationary measure, closing the
//! argument. Convergence has no a priori rate, so all stopping is a
//! posteriori on the bracket gap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cantor::GridCantorSet;
use crate::conjugacy::line_to_unit;
use crate::error::{Error, Result};
use crate::exact::{rat, rat_to_f64, rat_to_string};
use crate::measure::{sup_difference, AtomicMeasure, Staircase};
use crate::system::RandomSystem;

/// One application of the Markov operator to an atomic measure: the
/// weighted union of the two pushforwards. Mass is preserved to rounding.
pub fn apply_markov(sys: &RandomSystem, mu: &AtomicMeasure) -> Result<AtomicMeasure> {
    let mut atoms = Vec::with_capacity(2 * mu.len());
    for a in mu.atoms() {
        let (v0, _) = sys.f0.eval_with_error(a.position, 1e-11)?;
        let (v1, _) = sys.f1.eval_with_error(a.position, 1e-11)?;
        atoms.push((v0, a.weight * sys.p));
        atoms.push((v1, a.weight * (1.0 - sys.p)));
    }
    Ok(AtomicMeasure::from_atoms(atoms))
}

/// The contraction factor of the endpoint tail bound: values below one make
/// the set of measures with CDF below M x^alpha invariant.
pub fn xi(alpha: f64, beta: f64, p: f64, lambda0: f64, lambda1: f64) -> f64 {
    (p + beta) * (-alpha * lambda0.ln()).exp()
        + (1.0 - (p + beta)) * (-alpha * lambda1.ln()).exp()
}

/// Certificate that the stationary measure assigns at most M x^alpha to the
/// unit-coordinate neighborhoods of both endpoints, valid on a d_m ball of
/// the given radius around the system.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailCertificate {
    pub m: f64,
    pub alpha: f64,
    /// Slope bounds (lambda_0, lambda_1) used at the endpoint 0.
    pub lambda_at_zero: (f64, f64),
    /// Slope bounds used at the endpoint 1.
    pub lambda_at_one: (f64, f64),
    /// Unit-coordinate window edge: the bound certifiably propagates on
    /// (0, x0) and the mirrored right neighborhood.
    pub x0: f64,
    pub ball_radius: f64,
}

fn side_alpha(p: f64, lambda0: f64, lambda1: f64) -> Result<f64> {
    let avg = p * lambda0.ln() + (1.0 - p) * lambda1.ln();
    if avg <= 0.0 {
        return Err(Error::InvalidSystem(
            "no slope pair with positive averaged log".into(),
        ));
    }
    let xi0 = |a: f64| xi(a, 0.0, p, lambda0, lambda1);
    let mut alpha = if xi0(1.0) < 1.0 {
        1.0
    } else {
        let mut lo = 1e-9;
        if xi0(lo) >= 1.0 {
            return Err(Error::InvalidSystem("contraction fails arbitrarily close to zero".into()));
        }
        let mut hi = 1.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if xi0(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    alpha *= 0.5;
    while xi0(alpha) > 1.0 - 1e-3 && alpha > 1e-6 {
        alpha *= 0.5;
    }
    Ok(alpha)
}

/// Builds the tail certificate following the invariance recipe at both
/// endpoints: slopes strictly below the endpoint derivatives (shrunk by a
/// tenth of the exponent), the largest workable exponent halved for margin,
/// the window edge where the slope bounds hold exactly on the translation
/// tails, and a coefficient making the bound vacuous past the edge.
pub fn tail_certificate(sys: &RandomSystem) -> Result<TailCertificate> {
    let report = sys.validate();
    if !report.is_valid() {
        return Err(Error::InvalidSystem(report.first_failure().unwrap_or_default()));
    }
    let p = sys.p;
    let (d00, d01) = (sys.f0.endpoint_derivatives(), sys.f1.endpoint_derivatives());

    let shrink0 = (-report.lyap.lambda_minus / 10.0).exp();
    let lambda_at_zero = (d00.0 * shrink0, d01.0 * shrink0);
    let shrink1 = (-report.lyap.lambda_plus / 10.0).exp();
    let lambda_at_one = (d00.1 * shrink1, d01.1 * shrink1);

    let alpha0 = side_alpha(p, lambda_at_zero.0, lambda_at_zero.1)?;
    let alpha1 = side_alpha(p, lambda_at_one.0, lambda_at_one.1)?;
    let alpha = alpha0.min(alpha1);

    // Radius past which both maps and their inverses are exact translations
    // on the relevant side.
    let mut r_left = 0.5f64;
    let mut r_right = 0.5f64;
    for m in [&sys.f0, &sys.f1] {
        if let Some((x_lo, x_hi)) = m.compact_support() {
            r_left = r_left.max(-x_lo).max(-(x_lo + m.left_offset()));
            r_right = r_right.max(x_hi).max(x_hi + m.right_offset());
        }
    }
    let x0_left = 0.5 * (-(r_left + 0.5)).exp();
    let x0_right = 0.5 * (-(r_right + 0.5)).exp();
    let x0 = x0_left.min(x0_right);
    let m = 1.05 * x0.powf(-alpha);

    let delta = |l0: f64, l1: f64| -> f64 {
        let coeff = ((-alpha * l0.ln()).exp() - (-alpha * l1.ln()).exp()).abs();
        let slack = 1.0 - xi(alpha, 0.0, p, l0, l1);
        if coeff < 1e-300 {
            1.0
        } else {
            slack / coeff
        }
    };
    let ball_radius = (report.lyap.lambda_minus / 20.0)
        .min(report.lyap.lambda_plus / 20.0)
        .min(delta(lambda_at_zero.0, lambda_at_zero.1))
        .min(delta(lambda_at_one.0, lambda_at_one.1));

    if !(m.is_finite() && alpha > 0.0 && x0 > 0.0 && ball_radius > 0.0) {
        return Err(Error::InvalidSystem("degenerate tail certificate".into()));
    }
    Ok(TailCertificate { m, alpha, lambda_at_zero, lambda_at_one, x0, ball_radius })
}

impl TailCertificate {
    /// Real-coordinate window outside which the stationary measure has mass
    /// at most tau per side, for the requested tau.
    pub fn window(&self, tau_target: f64) -> Result<(f64, f64, f64)> {
        let x_w = (tau_target / self.m).powf(1.0 / self.alpha);
        if !(x_w > 0.0) || x_w > self.x0 {
            return Err(Error::Solver(format!(
                "tail target {tau_target} unreachable with certificate edge {}",
                self.x0
            )));
        }
        let tau = self.m * x_w.powf(self.alpha);
        let edge = (2.0 * x_w).ln();
        Ok((edge, -edge, tau))
    }
}

/// Quantization lattice for the solver chains. Uniform spacing everywhere,
/// or the endpoint set of a grid Cantor set up to a generation (used for
/// systems built by the linked-box construction, whose mass lives on that
/// set).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Lattice {
    Uniform { spacing: f64 },
    CantorAligned { cell_width: f64, origin: f64, generation: u32 },
}

impl Lattice {
    pub fn for_grid(grid: &GridCantorSet, generation: u32) -> Self {
        Lattice::CantorAligned {
            cell_width: rat_to_f64(&grid.cell_width),
            origin: rat_to_f64(&grid.origin),
            generation,
        }
    }

    fn resolution(&self) -> f64 {
        match self {
            Lattice::Uniform { spacing } => *spacing,
            Lattice::CantorAligned { cell_width, generation, .. } => {
                cell_width * 3f64.powi(-(*generation as i32))
            }
        }
    }

    fn refine(&mut self) {
        match self {
            Lattice::Uniform { spacing } => *spacing *= 0.5,
            Lattice::CantorAligned { generation, .. } => *generation += 1,
        }
    }

    fn describe(&self) -> String {
        match self {
            Lattice::Uniform { spacing } => format!("uniform spacing {spacing:.3e}"),
            Lattice::CantorAligned { cell_width, generation, .. } => {
                format!("cantor cells {cell_width:.3e} to generation {generation}")
            }
        }
    }

    fn round_down(&self, x: f64) -> f64 {
        match self {
            Lattice::Uniform { spacing } => {
                let mut v = (x / spacing).floor() * spacing;
                while v > x {
                    v -= spacing;
                }
                v
            }
            Lattice::CantorAligned { cell_width, origin, generation } => {
                let (mut lo, mut hi) = cell_bounds(x, *cell_width, *origin);
                for _ in 0..*generation {
                    let len = (hi - lo) / 3.0;
                    let g1 = lo + len;
                    let g2 = hi - len;
                    if x < g1 {
                        hi = g1;
                    } else if x > g2 {
                        lo = g2;
                    } else {
                        return g1;
                    }
                }
                lo
            }
        }
    }

    fn round_up(&self, x: f64) -> f64 {
        match self {
            Lattice::Uniform { spacing } => {
                let mut v = (x / spacing).ceil() * spacing;
                while v < x {
                    v += spacing;
                }
                v
            }
            Lattice::CantorAligned { cell_width, origin, generation } => {
                let (mut lo, mut hi) = cell_bounds(x, *cell_width, *origin);
                for _ in 0..*generation {
                    let len = (hi - lo) / 3.0;
                    let g1 = lo + len;
                    let g2 = hi - len;
                    if x < g1 {
                        hi = g1;
                    } else if x > g2 {
                        lo = g2;
                    } else {
                        return g2;
                    }
                }
                hi
            }
        }
    }
}

fn cell_bounds(x: f64, w: f64, origin: f64) -> (f64, f64) {
    let k = ((x - origin) / w).floor();
    let lo = origin + k * w;
    (lo, lo + w)
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    /// Quantization lattice; a uniform default derived from the window when
    /// absent.
    pub lattice: Option<Lattice>,
    pub max_iterations: usize,
    pub check_every: usize,
    /// Checks without improvement before the lattice is refined.
    pub stall_checks: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 5e-3,
            lattice: None,
            max_iterations: 50_000,
            check_every: 8,
            stall_checks: 8,
        }
    }
}

/// A certified bracket for the CDF of the unique stationary measure: the
/// true CDF lies between `lower - tau` and `upper + tau` pointwise, where
/// the staircases come from the two bracketing chains.
#[derive(Clone, Debug)]
pub struct CdfEnvelope {
    /// Chain started at the lower window edge: its CDF is the upper bound.
    pub from_low: AtomicMeasure,
    /// Chain started at the upper window edge: its CDF is the lower bound.
    pub from_high: AtomicMeasure,
    pub window: (f64, f64),
    pub cert: TailCertificate,
    /// Certified unwindowed stationary mass per side.
    pub tau: f64,
    pub tol: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gap: f64,
    pub lattice: String,
    pub max_atom_weight: f64,
}

impl CdfEnvelope {
    pub fn lower(&self) -> Staircase {
        self.from_high.to_staircase()
    }

    pub fn upper(&self) -> Staircase {
        self.from_low.to_staircase()
    }

    /// Certified CDF bounds at a point.
    pub fn cdf_bounds(&self, x: f64) -> (f64, f64) {
        let lo = (self.lower().value(x) - self.tau).max(0.0);
        let hi = (self.upper().value(x) + self.tau).min(1.0);
        (lo, hi)
    }

    /// Certified lower bound on the stationary mass of the closed interval.
    pub fn interval_mass_lower(&self, a: f64, b: f64) -> f64 {
        let lo = self.lower().value(b) - self.tau;
        let hi = self.upper().left_limit(a) + self.tau;
        (lo - hi).max(0.0)
    }

    /// Certified upper bound on the stationary mass of the closed interval.
    pub fn interval_mass_upper(&self, a: f64, b: f64) -> f64 {
        let hi = self.upper().value(b) + self.tau;
        let lo = (self.lower().left_limit(a) - self.tau).max(0.0);
        (hi - lo).clamp(0.0, 1.0)
    }

    /// The mid-staircase, for comparisons against empirical CDFs.
    pub fn midpoint(&self) -> Staircase {
        let lower = self.lower();
        let upper = self.upper();
        let mut xs: Vec<f64> =
            lower.jump_points().iter().chain(upper.jump_points()).copied().collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let pts = xs
            .into_iter()
            .map(|x| (x, 0.5 * (lower.value(x) + upper.value(x))))
            .collect();
        Staircase::from_cumulative(pts)
    }
}

enum Direction {
    Down,
    Up,
}

fn step_chain(
    sys: &RandomSystem,
    mu: &AtomicMeasure,
    dir: &Direction,
    lattice: &Lattice,
    etol: f64,
) -> Result<AtomicMeasure> {
    let mut atoms = Vec::with_capacity(2 * mu.len());
    for a in mu.atoms() {
        for (map, prob) in [(&sys.f0, sys.p), (&sys.f1, 1.0 - sys.p)] {
            let (v, e) = map.eval_with_error(a.position, etol)?;
            let pos = match dir {
                Direction::Down => lattice.round_down(v - e),
                Direction::Up => lattice.round_up(v + e),
            };
            atoms.push((pos, a.weight * prob));
        }
    }
    Ok(consolidate(AtomicMeasure::from_atoms(atoms), dir))
}

/// Merges negligible atoms into their neighbor in the rounding direction.
/// Moving mass down (resp. up) keeps the chain on the same side of the
/// stochastic order, so the bracket stays valid; only the reported gap can
/// widen, by at most the total weight moved.
fn consolidate(mu: AtomicMeasure, dir: &Direction) -> AtomicMeasure {
    const NEGLIGIBLE: f64 = 1e-13;
    if !mu.atoms().iter().any(|a| a.weight < NEGLIGIBLE) {
        return mu;
    }
    let atoms = mu.atoms();
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    match dir {
        Direction::Down => {
            // dust joins its left neighbor; leading dust stays put
            for a in atoms {
                match out.last_mut() {
                    Some(last) if a.weight < NEGLIGIBLE => last.1 += a.weight,
                    _ => out.push((a.position, a.weight)),
                }
            }
        }
        Direction::Up => {
            // dust joins its right neighbor; trailing dust stays put
            for a in atoms.iter().rev() {
                match out.last_mut() {
                    Some(last) if a.weight < NEGLIGIBLE => last.1 += a.weight,
                    _ => out.push((a.position, a.weight)),
                }
            }
            out.reverse();
        }
    }
    AtomicMeasure::from_atoms(out)
}

/// Solves for the stationary CDF with the default options at the given
/// tolerance.
pub fn stationary_solve(sys: &RandomSystem, tol: f64) -> Result<CdfEnvelope> {
    stationary_solve_with(sys, &SolveOptions { tol, ..Default::default() })
}

/// Full solver entry point.
pub fn stationary_solve_with(sys: &RandomSystem, opts: &SolveOptions) -> Result<CdfEnvelope> {
    if opts.tol <= 0.0 {
        return Err(Error::Domain("solver tolerance must be positive".into()));
    }
    let report = sys.validate();
    if !report.is_valid() {
        return Err(Error::InvalidSystem(report.first_failure().unwrap_or_default()));
    }
    let cert = tail_certificate(sys)?;
    let (w_lo, w_hi, tau) = cert.window(opts.tol / 8.0)?;
    let mut lattice = opts.lattice.clone().unwrap_or(Lattice::Uniform {
        spacing: (w_hi - w_lo) / 2048.0,
    });

    // from_low runs high in CDF and is rounded down; from_high the reverse
    let mut low = AtomicMeasure::dirac(lattice.round_down(w_lo));
    let mut high = AtomicMeasure::dirac(lattice.round_up(w_hi));

    let trace = std::env::var_os("RIH_TRACE").is_some();
    let mut best_gap = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut stall = 0usize;
    let mut refines = 0u32;
    let mut converged = false;
    let mut iterations = 0usize;

    while iterations < opts.max_iterations {
        let etol = (lattice.resolution() / 4.0).max(1e-13);
        low = step_chain(sys, &low, &Direction::Down, &lattice, etol)?;
        high = step_chain(sys, &high, &Direction::Up, &lattice, etol)?;
        iterations += 1;

        if iterations % opts.check_every == 0 {
            gap = sup_difference(&low.to_staircase(), &high.to_staircase());
            if trace {
                eprintln!(
                    "iter {iterations}: gap {gap:.6}, atoms {}+{}, lattice {}",
                    low.len(),
                    high.len(),
                    lattice.describe()
                );
            }
            if gap + 2.0 * tau <= opts.tol {
                converged = true;
                break;
            }
            if gap < best_gap * 0.995 {
                best_gap = gap;
                stall = 0;
            } else {
                stall += 1;
                if stall >= opts.stall_checks && refines < 6 {
                    lattice.refine();
                    refines += 1;
                    stall = 0;
                }
            }
        }
    }

    let max_atom_weight = low.max_weight().max(high.max_weight());
    Ok(CdfEnvelope {
        from_low: low,
        from_high: high,
        window: (w_lo, w_hi),
        cert,
        tau,
        tol: opts.tol,
        iterations,
        converged,
        gap,
        lattice: lattice.describe(),
        max_atom_weight,
    })
}

/// Seeded Markov chain simulation: x <- F_i(x) with i Bernoulli(p), one
/// stream per seed via a counter-based generator. Returns the empirical
/// distribution of the positions after burn-in.
pub fn monte_carlo_cdf(
    sys: &RandomSystem,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<AtomicMeasure> {
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0f64;
    let w = 1.0 / n_samples as f64;
    let mut atoms = Vec::with_capacity(n_samples);
    for step in 0..burn_in + n_samples {
        let take_low = rng.gen::<f64>() < sys.p;
        let map = if take_low { &sys.f0 } else { &sys.f1 };
        x = map.eval(x, 1e-9)?;
        if step >= burn_in {
            atoms.push((x, w));
        }
    }
    Ok(AtomicMeasure::from_atoms(atoms))
}

/// Mass of the chains on the generation-`depth` cover of the grid Cantor
/// set across the window, against the exact Lebesgue length of the cover.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverMassReport {
    pub depth: u32,
    pub cell_count: u64,
    pub window_span: f64,
    pub cover_length: f64,
    /// (2/3)^depth, exactly.
    pub cover_fraction: String,
    pub cover_fraction_f64: f64,
    pub mass_from_low: f64,
    pub mass_from_high: f64,
    /// min of the chain masses minus the unwindowed allowance: a lower
    /// bound on the cover mass of both bracketing measures.
    pub mass_lower_bound: f64,
    pub tau: f64,
}

/// Computes the cover-mass report for an envelope solved on a Cantor
/// lattice. Atoms sit on lattice points, so one part in 10^9 of slack
/// classifies them exactly.
pub fn cover_mass(env: &CdfEnvelope, grid: &GridCantorSet, depth: u32) -> CoverMassReport {
    let w = rat_to_f64(&grid.cell_width);
    let origin = rat_to_f64(&grid.origin);
    let k_lo = ((env.window.0 - origin) / w).ceil() as i64;
    let k_hi = ((env.window.1 - origin) / w).floor() as i64;
    let cell_count = (k_hi - k_lo).max(0) as u64;
    let slack = 1e-9 * w.max(1.0);

    let in_cover = |x: f64| -> bool {
        let k = ((x - origin) / w).floor();
        let ki = k as i64;
        if ki < k_lo || ki >= k_hi {
            return false;
        }
        let (mut lo, mut hi) = (origin + k * w, origin + (k + 1.0) * w);
        for _ in 0..depth {
            let len = (hi - lo) / 3.0;
            let g1 = lo + len;
            let g2 = hi - len;
            if x < g1 - slack {
                hi = g1;
            } else if x > g2 + slack {
                lo = g2;
            } else if x <= g1 + slack || x >= g2 - slack {
                // on a gap endpoint: endpoints belong to the closed pieces
                return true;
            } else {
                return false;
            }
        }
        true
    };

    let mass_of = |mu: &AtomicMeasure| -> f64 {
        mu.atoms().iter().filter(|a| in_cover(a.position)).map(|a| a.weight).sum()
    };
    let mass_from_low = mass_of(&env.from_low);
    let mass_from_high = mass_of(&env.from_high);

    let fraction = rat(2, 3).pow(depth as i32);
    let cover_length =
        cell_count as f64 * w * rat_to_f64(&fraction);
    CoverMassReport {
        depth,
        cell_count,
        window_span: cell_count as f64 * w,
        cover_length,
        cover_fraction: rat_to_string(&fraction),
        cover_fraction_f64: rat_to_f64(&fraction),
        mass_from_low,
        mass_from_high,
        mass_lower_bound: (mass_from_low.min(mass_from_high) - 2.0 * env.tau).max(0.0),
        tau: env.tau,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellMass {
    pub lo: f64,
    pub hi: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// Certified per-cell mass bounds on a uniform grid over the window: lower
/// CDF increments minus the envelope allowances.
pub fn support_grid_mass(env: &CdfEnvelope, lo: f64, hi: f64, cells: usize) -> Vec<CellMass> {
    assert!(cells > 0 && hi > lo);
    let width = (hi - lo) / cells as f64;
    let lower = env.lower();
    let upper = env.upper();
    (0..cells)
        .map(|i| {
            let a = lo + width * i as f64;
            let b = a + width;
            // mass of [a, b): left limits at both ends
            let lb = (lower.left_limit(b) - env.tau) - (upper.left_limit(a) + env.tau);
            let ub = (upper.left_limit(b) + env.tau)
                - (lower.left_limit(a) - env.tau).max(0.0);
            CellMass {
                lo: a,
                hi: b,
                lower_bound: lb.max(0.0),
                upper_bound: ub.clamp(0.0, 1.0),
            }
        })
        .collect()
}

/// Unit-coordinate tail bound check: the envelope's upper CDF obeys
/// M x^alpha near the left window edge (mirrored on the right).
pub fn tail_bound_holds(env: &CdfEnvelope, samples: usize) -> bool {
    let upper = env.upper();
    let lower = env.lower();
    let span = env.window.1 - env.window.0;
    for i in 0..samples {
        let x = env.window.0 + span * 0.05 * (i as f64 + 0.5) / samples as f64;
        let u = line_to_unit(x).value();
        let bound = env.cert.m * u.powf(env.cert.alpha);
        if upper.value(x) + env.tau > bound + 1e-9 {
            return false;
        }
        let xr = env.window.1 - span * 0.05 * (i as f64 + 0.5) / samples as f64;
        let ur = 1.0 - line_to_unit(xr).value();
        let bound_r = env.cert.m * ur.powf(env.cert.alpha);
        if 1.0 - (lower.value(xr) - env.tau) > bound_r + 1e-9 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::symmetric_drift_system;

    #[test]
    fn markov_step_on_a_point_mass() {
        let sys = symmetric_drift_system();
        let mu = AtomicMeasure::dirac(0.5);
        let nu = apply_markov(&sys, &mu).unwrap();
        assert_eq!(nu.len(), 2);
        let f0 = sys.f0.eval(0.5, 1e-12).unwrap();
        let f1 = sys.f1.eval(0.5, 1e-12).unwrap();
        assert_eq!(nu.atoms()[0].position, f0);
        assert_eq!(nu.atoms()[1].position, f1);
        assert!((nu.atoms()[0].weight - 0.5).abs() < 1e-15);
        assert!((nu.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mass_conserved_over_ten_steps() {
        let sys = symmetric_drift_system();
        let mut mu = AtomicMeasure::dirac(0.0);
        for _ in 0..10 {
            mu = apply_markov(&sys, &mu).unwrap();
        }
        assert!((mu.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn xi_reference_value() {
        // derivatives (1/2, 4), slopes (0.45, 3.5), alpha = 0.2
        let v = xi(0.2, 0.0, 0.5, 0.45, 3.5);
        assert!((v - 0.9757).abs() < 1e-4, "{v}");
        // alpha = 0 sits exactly on the boundary
        assert!((xi(0.0, 0.0, 0.5, 0.45, 3.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn certificate_for_the_symmetric_system() {
        let sys = symmetric_drift_system();
        let cert = tail_certificate(&sys).unwrap();
        assert!(cert.alpha > 0.0 && cert.alpha <= 1.0);
        assert!(cert.m * cert.x0.powf(cert.alpha) > 1.0);
        let v = xi(cert.alpha, 0.0, sys.p, cert.lambda_at_zero.0, cert.lambda_at_zero.1);
        assert!(v < 1.0);
        assert!(cert.lambda_at_zero.0 < sys.f0.endpoint_derivatives().0);
        assert!(cert.ball_radius > 0.0);
    }

    #[test]
    fn window_hits_the_tail_target() {
        let sys = symmetric_drift_system();
        let cert = tail_certificate(&sys).unwrap();
        let (lo, hi, tau) = cert.window(1e-3).unwrap();
        assert!(lo < 0.0 && hi > 0.0);
        assert!(tau <= 1e-3 * (1.0 + 1e-9));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let sys = symmetric_drift_system();
        let a = monte_carlo_cdf(&sys, 2000, 100, 42).unwrap();
        let b = monte_carlo_cdf(&sys, 2000, 100, 42).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_cdf(&sys, 2000, 100, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn monte_carlo_median_is_near_zero() {
        let sys = symmetric_drift_system();
        let mu = monte_carlo_cdf(&sys, 100_000, 1000, 7).unwrap();
        let med = mu.to_staircase();
        assert!((med.value(0.0) - 0.5).abs() < 0.02);
    }

    #[test]
    fn solver_brackets_the_symmetric_median() {
        let sys = symmetric_drift_system();
        let env = stationary_solve(&sys, 0.02).unwrap();
        assert!(env.converged, "gap {} after {} iterations", env.gap, env.iterations);
        let (lo, hi) = env.cdf_bounds(0.0);
        assert!(lo <= 0.5 + 0.02 && hi >= 0.5 - 0.02, "median bracket [{lo}, {hi}]");
        // envelope is ordered
        assert!(sup_difference(&env.lower(), &env.upper()) <= 1e-12);
        assert!(tail_bound_holds(&env, 20));
    }

    #[test]
    fn lattice_rounding_directions() {
        let u = Lattice::Uniform { spacing: 0.25 };
        assert!(u.round_down(0.3) <= 0.3);
        assert!(u.round_up(0.3) >= 0.3);
        assert_eq!(u.round_down(0.5), 0.5);
        let c = Lattice::CantorAligned { cell_width: 1.0, origin: 0.0, generation: 2 };
        let d = c.round_down(0.5);
        let up = c.round_up(0.5);
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
        assert!((up - 2.0 / 3.0).abs() < 1e-12);
        // dust point at depth 2
        let d2 = c.round_down(0.12);
        let u2 = c.round_up(0.12);
        assert!((d2 - 1.0 / 9.0).abs() < 1e-12);
        assert!((u2 - 2.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn order_preservation_under_the_operator() {
        let sys = symmetric_drift_system();
        let lo = AtomicMeasure::from_atoms(vec![(-1.0, 0.5), (0.5, 0.5)]);
        let hi = AtomicMeasure::from_atoms(vec![(-0.5, 0.5), (1.5, 0.5)]);
        let a = apply_markov(&sys, &lo).unwrap();
        let b = apply_markov(&sys, &hi).unwrap();
        assert!(crate::measure::cdf_dominates(&a.to_staircase(), &b.to_staircase(), 1e-12));
    }
}
