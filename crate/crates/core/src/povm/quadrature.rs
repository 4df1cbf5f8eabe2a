use crate::error::{Error, Result};
use crate::fockspace::FockSpace;
use crate::povm::region::PhaseBox;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            deriv = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let step = pn / deriv;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn self_test(n: usize) -> Result<()> {
    let (x, w) = gauss_legendre(n);
    for degree in 0..(2 * n) {
        let approx: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| w * x.powi(degree as i32))
            .sum();
        let exact = if degree % 2 == 0 {
            2.0 / (degree + 1) as f64
        } else {
            0.0
        };
        if (approx - exact).abs() > 1e-13 {
            return Err(Error::Quadrature(format!(
                "{n}-point rule misses x^{degree}: {approx} vs {exact}"
            )));
        }
    }
    Ok(())
}

/// Tensor Gauss-Legendre rule: node count per phase-space coordinate plus the
/// bounding box every integration region must lie in.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<usize>,
    bounds: PhaseBox,
}

/// Default half-width `sqrt(2 n_cut) + 6`: Husimi tails of the truncated states
/// fall below ~1e-8 outside it.
pub fn default_half_width(n_cut: usize) -> f64 {
    (2.0 * n_cut as f64).sqrt() + 6.0
}

impl QuadratureRule {
    pub fn new(nodes: Vec<usize>, bounds: PhaseBox) -> Result<Self> {
        if nodes.len() != bounds.bounds().len() {
            return Err(Error::Quadrature(format!(
                "{} node counts for {} coordinates",
                nodes.len(),
                bounds.bounds().len()
            )));
        }
        if let Some(&n) = nodes.iter().find(|&&n| n < 2) {
            return Err(Error::Quadrature(format!("node count {n} below 2")));
        }
        let mut distinct = nodes.clone();
        distinct.sort_unstable();
        distinct.dedup();
        for n in distinct {
            self_test(n)?;
        }
        Ok(QuadratureRule { nodes, bounds })
    }

    pub fn uniform(d: usize, nodes: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![nodes; 2 * d], PhaseBox::cube(d, half_width)?)
    }

    /// `nodes` per coordinate on the default box for `space`.
    pub fn for_space(space: &FockSpace, nodes: usize) -> Result<Self> {
        Self::uniform(space.d(), nodes, default_half_width(space.n_cut()))
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn bounds(&self) -> &PhaseBox {
        &self.bounds
    }

    pub fn d(&self) -> usize {
        self.bounds.d()
    }

    /// Nodes and weights of coordinate `coord` mapped to `[lo, hi]`.
    pub fn axis(&self, coord: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(self.nodes[coord]);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        (
            x.iter().map(|x| mid + half * x).collect(),
            w.iter().map(|w| w * half).collect(),
        )
    }

    /// Tensor grid over `domain`: per-coordinate nodes and weights.
    pub fn grid(&self, domain: &PhaseBox) -> TensorGrid {
        let axes = domain
            .bounds()
            .iter()
            .enumerate()
            .map(|(c, &(lo, hi))| self.axis(c, lo, hi))
            .collect();
        TensorGrid { axes }
    }
}

#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl TensorGrid {
    pub fn len(&self) -> usize {
        self.axes.iter().map(|(x, _)| x.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates and weight of the `flat`-th node (last coordinate fastest).
    pub fn node(&self, mut flat: usize, coords: &mut [f64]) -> f64 {
        let mut w = 1.0;
        for (c, (x, wx)) in self.axes.iter().enumerate().rev() {
            let i = flat % x.len();
            flat /= x.len();
            coords[c] = x[i];
            w *= wx[i];
        }
        w
    }
}
