use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galilei::{act, GalileiElement, PhasePoint};

/// Axis-aligned box in phase space; `bounds` are ordered `q_1..q_d, p_1..p_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    bounds: Vec<(f64, f64)>,
}

impl PhaseBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != 2 && bounds.len() != 6 {
            return Err(Error::InvalidRegion(format!(
                "a box needs 2 or 6 intervals, got {}",
                bounds.len()
            )));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidRegion(format!(
                    "empty or invalid interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(PhaseBox { bounds })
    }

    pub fn from_qp(q: &[(f64, f64)], p: &[(f64, f64)]) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::InvalidRegion(
                "q and p interval counts differ".into(),
            ));
        }
        Self::new(q.iter().chain(p).copied().collect())
    }

    /// `[-half_width, half_width]^(2d)`.
    pub fn cube(d: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![(-half_width, half_width); 2 * d])
    }

    pub fn d(&self) -> usize {
        self.bounds.len() / 2
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        self.bounds
            .iter()
            .zip(coords)
            .all(|(&(lo, hi), &x)| x >= lo && x <= hi)
    }

    /// `true` if `other` lies inside `self` (up to a relative slack of 1e-12).
    pub fn covers(&self, other: &PhaseBox) -> bool {
        self.bounds
            .iter()
            .zip(&other.bounds)
            .all(|(&(lo, hi), &(olo, ohi))| {
                let slack = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
                olo >= lo - slack && ohi <= hi + slack
            })
    }

    pub fn disjoint_from(&self, other: &PhaseBox) -> bool {
        self.bounds
            .iter()
            .zip(&other.bounds)
            .any(|(&(lo, hi), &(olo, ohi))| hi <= olo || ohi <= lo)
    }

    fn distance_to(&self, coords: &[f64]) -> f64 {
        self.bounds
            .iter()
            .zip(coords)
            .map(|(&(lo, hi), &x)| {
                let gap = if x < lo {
                    lo - x
                } else if x > hi {
                    x - hi
                } else {
                    0.0
                };
                gap * gap
            })
            .sum::<f64>()
            .sqrt()
    }

    fn hull(&self, other: &PhaseBox) -> PhaseBox {
        PhaseBox {
            bounds: self
                .bounds
                .iter()
                .zip(&other.bounds)
                .map(|(&(a, b), &(c, e))| (a.min(c), b.max(e)))
                .collect(),
        }
    }
}

/// Integration domain: a box, a Euclidean ball in `(q, p)`, or a finite union.
/// The empty union is the empty set.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseRegion {
    Box(PhaseBox),
    Ball { center: PhasePoint, radius: f64 },
    Union(Vec<PhaseRegion>),
}

impl PhaseRegion {
    pub fn boxed(q: &[(f64, f64)], p: &[(f64, f64)]) -> Result<Self> {
        Ok(PhaseRegion::Box(PhaseBox::from_qp(q, p)?))
    }

    pub fn ball(center: PhasePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRegion(format!(
                "ball radius {radius} must be positive"
            )));
        }
        Ok(PhaseRegion::Ball { center, radius })
    }

    pub fn union(members: Vec<PhaseRegion>) -> Result<Self> {
        let d = members.iter().filter_map(|m| m.d()).collect::<Vec<_>>();
        if d.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidRegion(
                "union members of different dimension".into(),
            ));
        }
        Ok(PhaseRegion::Union(members))
    }

    pub fn empty() -> Self {
        PhaseRegion::Union(Vec::new())
    }

    /// Spatial dimension, `None` for an empty union.
    pub fn d(&self) -> Option<usize> {
        match self {
            PhaseRegion::Box(b) => Some(b.d()),
            PhaseRegion::Ball { center, .. } => Some(center.d()),
            PhaseRegion::Union(m) => m.iter().find_map(|r| r.d()),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            PhaseRegion::Union(m) => m.iter().all(|r| r.is_empty()),
            _ => false,
        }
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        match self {
            PhaseRegion::Box(b) => b.contains(coords),
            PhaseRegion::Ball { center, radius } => {
                let c = center.coords();
                c.iter()
                    .zip(coords)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    <= radius * radius
            }
            PhaseRegion::Union(m) => m.iter().any(|r| r.contains(coords)),
        }
    }

    /// Smallest enclosing box, `None` for the empty set.
    pub fn bounding_box(&self) -> Option<PhaseBox> {
        match self {
            PhaseRegion::Box(b) => Some(b.clone()),
            PhaseRegion::Ball { center, radius } => Some(PhaseBox {
                bounds: center
                    .coords()
                    .iter()
                    .map(|c| (c - radius, c + radius))
                    .collect(),
            }),
            PhaseRegion::Union(m) => m
                .iter()
                .filter_map(|r| r.bounding_box())
                .reduce(|a, b| a.hull(&b)),
        }
    }

    /// Members of nested unions, flattened; a non-union is its own single member.
    pub fn flat_members(&self) -> Vec<&PhaseRegion> {
        match self {
            PhaseRegion::Union(m) => m.iter().flat_map(|r| r.flat_members()).collect(),
            other => vec![other],
        }
    }

    /// Conservative disjointness test (overlaps of measure zero count as disjoint).
    pub fn disjoint_from(&self, other: &PhaseRegion) -> bool {
        use PhaseRegion::*;
        match (self, other) {
            (Union(_), _) | (_, Union(_)) => self
                .flat_members()
                .iter()
                .all(|a| other.flat_members().iter().all(|b| a.disjoint_from(b))),
            (Box(a), Box(b)) => a.disjoint_from(b),
            (
                Ball {
                    center: c1,
                    radius: r1,
                },
                Ball {
                    center: c2,
                    radius: r2,
                },
            ) => {
                let dist = c1
                    .coords()
                    .iter()
                    .zip(c2.coords())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist >= r1 + r2
            }
            (Ball { center, radius }, Box(b)) | (Box(b), Ball { center, radius }) => {
                b.distance_to(&center.coords()) >= *radius
            }
        }
    }

    /// `alpha_g(Z)`. Balls map to balls for every `g` (the action is an isometry
    /// of `(q, p)` space); boxes only under rotations that permute axes with signs.
    pub fn transformed(&self, g: &GalileiElement, mass: f64) -> Result<PhaseRegion> {
        match self {
            PhaseRegion::Ball { center, radius } => Ok(PhaseRegion::Ball {
                center: act(g, center, mass),
                radius: *radius,
            }),
            PhaseRegion::Union(m) => Ok(PhaseRegion::Union(
                m.iter()
                    .map(|r| r.transformed(g, mass))
                    .collect::<Result<_>>()?,
            )),
            PhaseRegion::Box(b) => {
                let d = b.d();
                let r = g.r();
                let mut q = Vec::with_capacity(d);
                let mut p = Vec::with_capacity(d);
                for i in 0..d {
                    let row: Vec<f64> = (0..d).map(|j| r[(i, j)]).collect();
                    let nonzero: Vec<usize> = (0..d).filter(|&j| row[j].abs() > 1e-12).collect();
                    if nonzero.len() != 1 || (row[nonzero[0]].abs() - 1.0).abs() > 1e-12 {
                        return Err(Error::RegionNotRepresentable(
                            "a box maps to a box only under axis-permuting rotations".into(),
                        ));
                    }
                    let j = nonzero[0];
                    let sign = row[j].signum();
                    let map = |(lo, hi): (f64, f64), shift: f64| {
                        let (a, b) = (shift + sign * lo, shift + sign * hi);
                        (a.min(b), a.max(b))
                    };
                    q.push(map(b.bounds[j], g.a()[i]));
                    p.push(map(b.bounds[d + j], mass * g.v()[i]));
                }
                PhaseRegion::boxed(&q, &p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galilei::rotation_matrix;

    #[test]
    fn rejects_degenerate_regions() {
        assert!(PhaseRegion::boxed(&[(1.0, 1.0)], &[(0.0, 1.0)]).is_err());
        assert!(PhaseRegion::ball(PhasePoint::origin(1), 0.0).is_err());
        assert!(PhaseRegion::boxed(&[(0.0, 1.0)], &[]).is_err());
        let mixed = vec![
            PhaseRegion::ball(PhasePoint::origin(1), 1.0).unwrap(),
            PhaseRegion::ball(PhasePoint::origin(3), 1.0).unwrap(),
        ];
        assert!(PhaseRegion::union(mixed).is_err());
    }

    #[test]
    fn empty_union() {
        let e = PhaseRegion::empty();
        assert!(e.is_empty());
        assert_eq!(e.bounding_box(), None);
        assert!(!e.contains(&[0.0, 0.0]));
    }

    #[test]
    fn disjointness() {
        let a = PhaseRegion::boxed(&[(0.0, 1.0)], &[(0.0, 1.0)]).unwrap();
        let b = PhaseRegion::boxed(&[(1.0, 2.0)], &[(0.0, 1.0)]).unwrap();
        let c = PhaseRegion::boxed(&[(0.5, 2.0)], &[(0.5, 1.0)]).unwrap();
        let ball = PhaseRegion::ball(PhasePoint::new(&[3.0], &[0.5]).unwrap(), 1.1).unwrap();
        assert!(a.disjoint_from(&b));
        assert!(!a.disjoint_from(&c));
        assert!(ball.disjoint_from(&a));
        assert!(!ball.disjoint_from(&b));
    }

    #[test]
    fn ball_follows_the_action() {
        let ball = PhaseRegion::ball(PhasePoint::new(&[1.0], &[0.0]).unwrap(), 0.5).unwrap();
        let g =
            GalileiElement::from_parts(&[0.5], &[2.0], nalgebra::DMatrix::identity(1, 1)).unwrap();
        match ball.transformed(&g, 3.0).unwrap() {
            PhaseRegion::Ball { center, radius } => {
                assert_eq!(center.coords(), vec![1.5, 6.0]);
                assert_eq!(radius, 0.5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn box_under_quarter_turn() {
        let b =
            PhaseRegion::boxed(&[(1.0, 2.0), (0.0, 0.5), (-1.0, 1.0)], &[(0.0, 1.0); 3]).unwrap();
        let rz = rotation_matrix([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2).map(|x| x.round());
        let g = GalileiElement::rotation(rz).unwrap();
        let out = b.transformed(&g, 1.0).unwrap();
        // (x, y, z) -> (-y, x, z)
        let expected = PhaseRegion::boxed(
            &[(-0.5, 0.0), (1.0, 2.0), (-1.0, 1.0)],
            &[(-1.0, 0.0), (0.0, 1.0), (0.0, 1.0)],
        )
        .unwrap();
        assert_eq!(out, expected);
        let tilted = GalileiElement::rotation(rotation_matrix([0.0, 0.0, 1.0], 0.3)).unwrap();
        assert!(matches!(
            b.transformed(&tilted, 1.0),
            Err(Error::RegionNotRepresentable(_))
        ));
    }
}
