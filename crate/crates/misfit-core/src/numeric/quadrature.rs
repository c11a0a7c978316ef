//! Deterministic expectation grids for one-dimensional densities.
//!
//! An [`ExpectationGrid`] freezes nodes and weights of a composite
//! Gauss-Legendre rule with the density folded into the weights, so that
//! `E[psi] = sum_i w_i * psi(t_i)` for any smooth integrand. Panels are
//! refined adaptively against the density itself, which keeps repeated
//! expectations (optimizer sweeps, sandwich entries) cheap.

/// 16-point Gauss-Legendre abscissae (positive half) on [-1, 1].
const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.755404408355003,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];

/// 16-point Gauss-Legendre weights matching `GL16_X`.
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

fn gl16_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..8 {
        acc += GL16_W[i] * (f(c - h * GL16_X[i]) + f(c + h * GL16_X[i]));
    }
    acc * h
}

/// Fixed nodes/weights approximating integration against a density on
/// `[lo, hi]`. `mass` records the integral of the density over the grid;
/// a defect versus 1 measures the truncation of the support.
#[derive(Debug, Clone)]
pub struct ExpectationGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lo: f64,
    hi: f64,
    mass: f64,
}

impl ExpectationGrid {
    /// Build the grid by adaptively bisecting panels until the density (and
    /// its first moment) integrates stably to `tol` on every panel.
    pub fn build(density: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Self {
        assert!(hi > lo && lo.is_finite() && hi.is_finite());
        let mut panels = vec![(lo, hi)];
        let mut accepted: Vec<(f64, f64)> = Vec::new();
        let moment = |t: f64| density(t) * (1.0 + t.abs());
        // Seed with a uniform split so sharp peaks are not missed by the
        // first error estimate.
        let seed_split = 32;
        panels = (0..seed_split)
            .map(|i| {
                let a = lo + (hi - lo) * i as f64 / seed_split as f64;
                let b = lo + (hi - lo) * (i + 1) as f64 / seed_split as f64;
                (a, b)
            })
            .collect();
        let mut depth_guard = 0usize;
        while let Some((a, b)) = panels.pop() {
            depth_guard += 1;
            assert!(
                depth_guard < 1_000_000,
                "quadrature panel refinement ran away"
            );
            let mid = 0.5 * (a + b);
            let coarse = gl16_panel(&moment, a, b);
            let fine = gl16_panel(&moment, a, mid) + gl16_panel(&moment, mid, b);
            if (coarse - fine).abs() <= tol.max(1e-16 * fine.abs()) || (b - a) < 1e-13 * (hi - lo) {
                accepted.push((a, mid));
                accepted.push((mid, b));
            } else {
                panels.push((a, mid));
                panels.push((mid, b));
            }
        }
        accepted.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

        let mut nodes = Vec::with_capacity(accepted.len() * 16);
        let mut weights = Vec::with_capacity(accepted.len() * 16);
        for &(a, b) in &accepted {
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for i in 0..8 {
                for &t in &[c - h * GL16_X[i], c + h * GL16_X[i]] {
                    nodes.push(t);
                    weights.push(GL16_W[i] * h * density(t));
                }
            }
        }
        let mass: f64 = weights.iter().sum();
        ExpectationGrid {
            nodes,
            weights,
            lo,
            hi,
            mass,
        }
    }

    /// Expectation of a scalar integrand.
    pub fn expect(&self, psi: &dyn Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * psi(t))
            .sum()
    }

    /// Total density mass captured by the grid.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Re-express the grid in a transformed variable, keeping the weights.
    /// Used when integration ran in a substituted coordinate.
    pub fn map_nodes(mut self, f: impl Fn(f64) -> f64) -> Self {
        for t in &mut self.nodes {
            *t = f(*t);
        }
        self.lo = f(self.lo);
        self.hi = f(self.hi);
        self
    }
}

/// Adaptive Simpson integration, used where a one-off integral is needed
/// rather than a reusable grid (e.g. cumulative distribution functions).
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 48)
}
