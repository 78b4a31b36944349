//! Domain models for regions of C^n, n in {1, 2}: a membership predicate,
//! a closure predicate, a bounding box, a diameter bound, and a seeded
//! boundary sampler.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Point, MAX_COMPLEX_DIM};

#[derive(Clone, Copy, Debug)]
pub struct BoundingBox {
    lo: [f64; 2 * MAX_COMPLEX_DIM],
    hi: [f64; 2 * MAX_COMPLEX_DIM],
    dim: usize,
}

impl BoundingBox {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<BoundingBox> {
        if lo.len() != hi.len() || (lo.len() != 2 && lo.len() != 4) {
            return Err(Error::InvalidParameter(format!(
                "bounding box needs 2 or 4 matching coordinates, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        let mut l = [0.0; 2 * MAX_COMPLEX_DIM];
        let mut h = [0.0; 2 * MAX_COMPLEX_DIM];
        for i in 0..lo.len() {
            if !(lo[i] < hi[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "bounding box axis {i} is degenerate: [{}, {}]",
                    lo[i], hi[i]
                )));
            }
            l[i] = lo[i];
            h[i] = hi[i];
        }
        Ok(BoundingBox { lo: l, hi: h, dim: lo.len() / 2 })
    }

    pub fn complex_dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.complex_dim() != self.dim {
            return false;
        }
        p.coords()
            .iter()
            .enumerate()
            .all(|(i, &x)| self.lo[i] <= x && x <= self.hi[i])
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Point {
        let mut coords = [0.0; 2 * MAX_COMPLEX_DIM];
        for i in 0..2 * self.dim {
            coords[i] = rng.gen_range(self.lo[i]..self.hi[i]);
        }
        Point::from_coords(&coords[..2 * self.dim]).expect("box dimension is valid")
    }

    /// Euclidean diagonal; an upper bound for the diameter of anything inside.
    pub fn diagonal(&self) -> f64 {
        (0..2 * self.dim)
            .map(|i| (self.hi[i] - self.lo[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn enclosing_ball_extension(&self, center: &Point, radius: f64) -> BoundingBox {
        let mut out = *self;
        for i in 0..2 * self.dim {
            out.lo[i] = out.lo[i].min(center.coords()[i] - radius);
            out.hi[i] = out.hi[i].max(center.coords()[i] + radius);
        }
        out
    }
}

pub type RegionFn = Arc<dyn Fn(&Point) -> bool + Send + Sync>;
pub type BoundarySampler = Arc<dyn Fn(u64, usize) -> Vec<Point> + Send + Sync>;

/// A bounded region with enough structure to run sampled certificates:
/// open membership, a closure predicate (membership plus boundary), an
/// enclosing box, a diameter upper bound that is also >= every sampled
/// pairwise distance, and a deterministic boundary sampler.
#[derive(Clone)]
pub struct DomainModel {
    pub name: String,
    pub bbox: BoundingBox,
    pub diameter: f64,
    membership: RegionFn,
    closure: RegionFn,
    boundary: BoundarySampler,
}

impl fmt::Debug for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainModel")
            .field("name", &self.name)
            .field("diameter", &self.diameter)
            .field("complex_dim", &self.bbox.complex_dim())
            .finish()
    }
}

impl DomainModel {
    pub fn new(
        name: impl Into<String>,
        bbox: BoundingBox,
        diameter: f64,
        membership: RegionFn,
        closure: RegionFn,
        boundary: BoundarySampler,
    ) -> Result<DomainModel> {
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "domain diameter must be finite and positive, got {diameter}"
            )));
        }
        Ok(DomainModel {
            name: name.into(),
            bbox,
            diameter,
            membership,
            closure,
            boundary,
        })
    }

    pub fn complex_dim(&self) -> usize {
        self.bbox.complex_dim()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.complex_dim() == self.bbox.complex_dim() && (self.membership)(p)
    }

    pub fn contains_closure(&self, p: &Point) -> bool {
        p.complex_dim() == self.bbox.complex_dim() && (self.closure)(p)
    }

    /// Rejection sampling from the bounding box.
    pub fn sample_interior(&self, rng: &mut impl Rng, n: usize) -> Result<Vec<Point>> {
        let mut out = Vec::with_capacity(n);
        let budget = 500 * n + 100_000;
        for _ in 0..budget {
            if out.len() == n {
                return Ok(out);
            }
            let p = self.bbox.sample(rng);
            if (self.membership)(&p) {
                out.push(p);
            }
        }
        if out.len() == n {
            Ok(out)
        } else {
            Err(Error::EmptyDomain(self.name.clone()))
        }
    }

    pub fn sample_boundary(&self, seed: u64, n: usize) -> Vec<Point> {
        (self.boundary)(seed, n)
    }

    /// The same region with an open ball adjoined. `new_diameter` is the
    /// caller's bound for the union (the old bound plus the ball radius is
    /// always safe when the center lies in the closure).
    pub fn extended_with_ball(&self, center: Point, radius: f64, new_diameter: f64) -> DomainModel {
        let member = Arc::clone(&self.membership);
        let closure = Arc::clone(&self.closure);
        let old_boundary = Arc::clone(&self.boundary);
        let member_for_boundary = Arc::clone(&self.membership);
        let dim = self.bbox.complex_dim();

        let m2 = Arc::clone(&member);
        let new_membership: RegionFn =
            Arc::new(move |p: &Point| m2(p) || p.dist(&center) < radius);
        let c2 = Arc::clone(&closure);
        let new_closure: RegionFn =
            Arc::new(move |p: &Point| c2(p) || p.dist(&center) <= radius);

        // keep old boundary points not swallowed by the ball, and add ball
        // sphere points that fall outside the old region
        let new_boundary: BoundarySampler = Arc::new(move |seed: u64, n: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
            let mut out: Vec<Point> = old_boundary(seed, n)
                .into_iter()
                .filter(|q| q.dist(&center) >= radius)
                .collect();
            let mut tries = 0;
            while out.len() < n && tries < 100 * n + 1000 {
                tries += 1;
                let q = sphere_point(&mut rng, &center, radius, dim);
                if !member_for_boundary(&q) {
                    out.push(q);
                }
            }
            out.truncate(n);
            out
        });

        DomainModel {
            name: format!("{}+ball", self.name),
            bbox: self.bbox.enclosing_ball_extension(&center, radius),
            diameter: new_diameter,
            membership: new_membership,
            closure: new_closure,
            boundary: new_boundary,
        }
    }
}

/// Uniform point on the sphere |p - center| = radius.
pub fn sphere_point(rng: &mut impl Rng, center: &Point, radius: f64, dim: usize) -> Point {
    let mut coords = [0.0f64; 2 * MAX_COMPLEX_DIM];
    loop {
        let mut norm_sq = 0.0;
        for c in coords.iter_mut().take(2 * dim) {
            // Box-Muller style gaussian from two uniforms
            let u: f64 = rng.gen_range(1e-12..1.0);
            let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            *c = (-2.0 * u.ln()).sqrt() * v.cos();
            norm_sq += *c * *c;
        }
        if norm_sq > 1e-20 {
            let scale = radius / norm_sq.sqrt();
            let mut out = *center;
            for (i, &c) in coords.iter().enumerate().take(2 * dim) {
                out.set(i, center.coords()[i] + scale * c);
            }
            return out;
        }
    }
}

/// Uniform point in the open ball |p - center| < radius.
pub fn ball_point(rng: &mut impl Rng, center: &Point, radius: f64, dim: usize) -> Point {
    let on_sphere = sphere_point(rng, center, radius, dim);
    let u: f64 = rng.gen_range(0.0..1.0f64);
    let r = u.powf(1.0 / (2.0 * dim as f64));
    let mut out = *center;
    for i in 0..2 * dim {
        let d = on_sphere.coords()[i] - center.coords()[i];
        out.set(i, center.coords()[i] + r * d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_square() -> DomainModel {
        let bbox = BoundingBox::new(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let member: RegionFn =
            Arc::new(|p: &Point| p.re(0).abs() < 1.0 && p.im(0).abs() < 1.0);
        let closure: RegionFn =
            Arc::new(|p: &Point| p.re(0).abs() <= 1.0 && p.im(0).abs() <= 1.0);
        let boundary: BoundarySampler = Arc::new(|seed, n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| Point::c1(1.0, rng.gen_range(-1.0..1.0)))
                .collect()
        });
        DomainModel::new("toy", bbox, 8.0f64.sqrt(), member, closure, boundary).unwrap()
    }

    #[test]
    fn interior_samples_are_members() {
        let dom = toy_square();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = dom.sample_interior(&mut rng, 200).unwrap();
        assert_eq!(pts.len(), 200);
        assert!(pts.iter().all(|p| dom.contains(p)));
    }

    #[test]
    fn empty_predicate_reports_empty_domain() {
        let bbox = BoundingBox::new(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let member: RegionFn = Arc::new(|_: &Point| false);
        let closure: RegionFn = Arc::new(|_: &Point| false);
        let boundary: BoundarySampler = Arc::new(|_, _| Vec::new());
        let dom = DomainModel::new("void", bbox, 1.0, member, closure, boundary).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            dom.sample_interior(&mut rng, 5),
            Err(Error::EmptyDomain(_))
        ));
    }

    #[test]
    fn ball_extension_adds_membership() {
        let dom = toy_square();
        let c = Point::c1(1.0, 0.0);
        let ext = dom.extended_with_ball(c, 0.25, dom.diameter + 0.25);
        assert!(!dom.contains(&Point::c1(1.1, 0.0)));
        assert!(ext.contains(&Point::c1(1.1, 0.0)));
        assert!(ext.contains(&Point::c1(0.5, 0.5)));
        assert!(!ext.contains(&Point::c1(1.3, 0.0)));
        assert!(ext.contains_closure(&Point::c1(1.25, 0.0)));
    }

    #[test]
    fn sphere_and_ball_sampling_respect_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = Point::c2((0.5, 0.0), (-0.25, 1.0));
        for _ in 0..200 {
            let s = sphere_point(&mut rng, &c, 0.75, 2);
            assert!((s.dist(&c) - 0.75).abs() < 1e-12);
            let b = ball_point(&mut rng, &c, 0.75, 2);
            assert!(b.dist(&c) < 0.75 + 1e-12);
        }
    }

    #[test]
    fn boundary_sampler_is_seed_deterministic() {
        let dom = toy_square();
        let a = dom.sample_boundary(9, 50);
        let b = dom.sample_boundary(9, 50);
        assert_eq!(a.len(), 50);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.coords(), q.coords());
        }
    }
}
