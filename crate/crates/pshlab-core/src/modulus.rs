//! Moduli of continuity: parametric forms, tables estimated from sampled
//! functions, least concave majorants, and generalized inverses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{sphere_point, DomainModel};
use crate::error::{Error, Result};
use crate::eval::Evaluator;

/// A nondecreasing bound omega with omega(0) = 0 and |u(z) - u(w)| <=
/// omega(|z - w|). Tables are piecewise linear through an implicit (0, 0)
/// anchor and extend as a constant beyond their last point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulus {
    Linear { c: f64 },
    Power { c: f64, beta: f64 },
    Table { points: Vec<(f64, f64)>, concave: bool },
    Sum { parts: Vec<Modulus> },
}

impl Modulus {
    pub fn linear(c: f64) -> Result<Modulus> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "linear modulus slope must be finite and >= 0, got {c}"
            )));
        }
        Ok(Modulus::Linear { c })
    }

    pub fn power(c: f64, beta: f64) -> Result<Modulus> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power modulus scale must be finite and >= 0, got {c}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power modulus exponent must be finite and > 0, got {beta}"
            )));
        }
        Ok(Modulus::Power { c, beta })
    }

    /// Table from strictly increasing positive abscissae and nondecreasing
    /// nonnegative values. The concavity flag is computed, not asserted.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Modulus> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty modulus table".into()));
        }
        let mut prev_t = 0.0;
        let mut prev_w = 0.0;
        for &(t, w) in &points {
            if !(t > prev_t) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "table abscissae must be finite and strictly increasing, got {t} after {prev_t}"
                )));
            }
            if !(w >= prev_w) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "table values must be finite and nondecreasing, got {w} after {prev_w}"
                )));
            }
            prev_t = t;
            prev_w = w;
        }
        let concave = table_is_concave(&points);
        Ok(Modulus::Table { points, concave })
    }

    pub fn sum(parts: Vec<Modulus>) -> Result<Modulus> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("empty modulus sum".into()));
        }
        Ok(Modulus::Sum { parts })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Modulus::Linear { c } => c * t,
            Modulus::Power { c, beta } => {
                if *beta == 1.0 {
                    c * t
                } else {
                    c * t.powf(*beta)
                }
            }
            Modulus::Table { points, .. } => eval_table(points, t),
            Modulus::Sum { parts } => parts.iter().map(|p| p.eval(t)).sum(),
        }
    }

    pub fn is_concave(&self) -> bool {
        match self {
            Modulus::Linear { .. } => true,
            Modulus::Power { beta, .. } => *beta <= 1.0,
            Modulus::Table { concave, .. } => *concave,
            Modulus::Sum { parts } => parts.iter().all(|p| p.is_concave()),
        }
    }

    /// Pointwise scaling by a nonnegative factor.
    pub fn scaled(&self, factor: f64) -> Modulus {
        match self {
            Modulus::Linear { c } => Modulus::Linear { c: c * factor },
            Modulus::Power { c, beta } => Modulus::Power { c: c * factor, beta: *beta },
            Modulus::Table { points, concave } => Modulus::Table {
                points: points.iter().map(|&(t, w)| (t, w * factor)).collect(),
                concave: *concave,
            },
            Modulus::Sum { parts } => Modulus::Sum {
                parts: parts.iter().map(|p| p.scaled(factor)).collect(),
            },
        }
    }

    /// Right-continuous generalized inverse sup{t >= 0 : omega(t) <= y},
    /// clamped to the table range for tables. The returned t satisfies
    /// omega(t) <= y, the direction the patch budgets need.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "modulus inverse needs y >= 0, got {y}"
            )));
        }
        let t = match self {
            Modulus::Linear { c } => {
                if *c == 0.0 {
                    f64::INFINITY
                } else {
                    y / c
                }
            }
            Modulus::Power { c, beta } => {
                if *c == 0.0 {
                    f64::INFINITY
                } else {
                    (y / c).powf(1.0 / beta)
                }
            }
            Modulus::Table { points, .. } => invert_table(points, y),
            Modulus::Sum { parts } => {
                let mut hi = f64::INFINITY;
                for p in parts {
                    hi = hi.min(p.inverse(y)?);
                }
                if !hi.is_finite() {
                    hi
                } else if self.eval(hi) <= y {
                    hi
                } else {
                    let mut lo = 0.0;
                    let mut hi = hi;
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if self.eval(mid) <= y {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                }
            }
        };
        Ok(nudge_below(self, t, y))
    }
}

/// Shrink t by ulps until omega(t) <= y; roundoff in eval can otherwise
/// leave the bisection result a hair above the target.
fn nudge_below(m: &Modulus, mut t: f64, y: f64) -> f64 {
    if !t.is_finite() || t <= 0.0 {
        return t.max(0.0);
    }
    for _ in 0..8 {
        if m.eval(t) <= y {
            return t;
        }
        t = next_down(t);
    }
    t
}

fn next_down(x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return x;
    }
    f64::from_bits(x.to_bits() - 1)
}

fn eval_table(points: &[(f64, f64)], t: f64) -> f64 {
    // partition_point gives the first index with t_i >= t
    let idx = points.partition_point(|&(ti, _)| ti < t);
    if idx == points.len() {
        return points[points.len() - 1].1;
    }
    let (t1, w1) = points[idx];
    if t1 == t {
        return w1;
    }
    let (t0, w0) = if idx == 0 { (0.0, 0.0) } else { points[idx - 1] };
    w0 + (t - t0) / (t1 - t0) * (w1 - w0)
}

fn invert_table(points: &[(f64, f64)], y: f64) -> f64 {
    let last = points[points.len() - 1];
    if y >= last.1 {
        return last.0;
    }
    // largest knot with value <= y; y < last value, so a later knot exceeds y
    let k = points.iter().rposition(|&(_, w)| w <= y);
    let (t0, w0) = k.map_or((0.0, 0.0), |i| points[i]);
    let (t1, w1) = points[k.map_or(0, |i| i + 1)];
    if w1 <= w0 {
        return t0;
    }
    t0 + (y - w0) / (w1 - w0) * (t1 - t0)
}

fn table_is_concave(points: &[(f64, f64)]) -> bool {
    let mut prev = (0.0, 0.0);
    let mut prev_slope = f64::INFINITY;
    for &(t, w) in points {
        let slope = (w - prev.1) / (t - prev.0);
        if slope > prev_slope * (1.0 + 1e-12) + 1e-300 {
            return false;
        }
        prev_slope = slope;
        prev = (t, w);
    }
    true
}

/// Raw distance-binned oscillation table sampled from a function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalModulus {
    /// (bin upper edge, max |u(p) - u(q)| over sampled pairs with
    /// distance <= edge); strictly increasing edges, nondecreasing values
    pub table: Vec<(f64, f64)>,
    pub pair_count: usize,
    pub seed: u64,
}

impl EmpiricalModulus {
    pub fn to_modulus(&self) -> Result<Modulus> {
        Modulus::table(self.table.clone())
    }
}

/// Sample `pairs` point pairs from the domain interior and record the max
/// oscillation per distance bin, accumulated so the table is nondecreasing.
///
/// Half the pairs are unconstrained and fix the distance range; the rest
/// are split evenly across the bins as steps of a prescribed length from a
/// fresh base point, because unconstrained pairs almost never land at small
/// separations and a table that starves near zero understates the modulus
/// exactly where it is needed most. Bin edges are packed cubically toward
/// zero for the same reason.
pub fn estimate_modulus(
    u: &Evaluator,
    dom: &DomainModel,
    pairs: usize,
    bins: usize,
    seed: u64,
) -> Result<EmpiricalModulus> {
    if pairs < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 sample pairs, got {pairs}"
        )));
    }
    if bins < 1 {
        return Err(Error::InvalidParameter("need at least 1 bin".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = dom.complex_dim();
    let free = (pairs / 2).max(1);
    let pts = dom.sample_interior(&mut rng, 2 * free)?;
    let mut obs = Vec::with_capacity(pairs);
    let mut d_max: f64 = 0.0;
    for pq in pts.chunks_exact(2) {
        let d = pq[0].dist(&pq[1]);
        let delta = (u.eval_checked(&pq[0])? - u.eval_checked(&pq[1])?).abs();
        if !delta.is_finite() {
            return Err(Error::EvaluatorFailure { at: pq[0].coords().to_vec() });
        }
        d_max = d_max.max(d);
        obs.push((d, delta));
    }
    if d_max <= 0.0 {
        return Err(Error::InvalidParameter(
            "all sampled pairs coincide; cannot bin distances".into(),
        ));
    }
    let edges: Vec<f64> = (1..=bins)
        .map(|k| d_max * (k as f64 / bins as f64).powi(3))
        .collect();
    let quota = ((pairs - free) / bins).max(1);
    for k in 0..bins {
        let lo = if k == 0 { 0.0 } else { edges[k - 1] };
        let hi = edges[k];
        for _ in 0..quota {
            let z = dom.sample_interior(&mut rng, 1)?.remove(0);
            let t = rng.gen_range(lo..hi);
            // a base point near the boundary rejects outward steps, so
            // retry the direction rather than the base
            for _ in 0..8 {
                let w = sphere_point(&mut rng, &z, t, dim);
                if dom.contains(&w) {
                    let delta = (u.eval_checked(&z)? - u.eval_checked(&w)?).abs();
                    if !delta.is_finite() {
                        return Err(Error::EvaluatorFailure { at: z.coords().to_vec() });
                    }
                    obs.push((z.dist(&w), delta));
                    break;
                }
            }
        }
    }
    let mut w = vec![0.0f64; bins];
    for (d, delta) in obs {
        let idx = edges.partition_point(|&e| e < d).min(bins - 1);
        if delta > w[idx] {
            w[idx] = delta;
        }
    }
    for i in 1..bins {
        if w[i] < w[i - 1] {
            w[i] = w[i - 1];
        }
    }
    let table = edges.into_iter().zip(w).collect();
    Ok(EmpiricalModulus { table, pair_count: pairs, seed })
}

/// Least concave nondecreasing majorant through (0, 0) of the table,
/// computed as the upper hull of (0, 0) and the table points. Collinear
/// points are kept as hull vertices so dominance at table points is exact.
pub fn concave_majorant(m: &EmpiricalModulus) -> Result<Modulus> {
    let mut hull: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for &p in &m.table {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // b strictly below the chord a->p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross > 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let points: Vec<(f64, f64)> = hull.into_iter().skip(1).collect();
    let m = Modulus::table(points)?;
    debug_assert!(m.is_concave());
    Ok(match m {
        Modulus::Table { points, .. } => Modulus::Table { points, concave: true },
        other => other,
    })
}

/// Scalar measure functions applied to cover radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiFn {
    /// t^delta; delta = 1 is kept exact
    Power { delta: f64 },
    Modulus { omega: Modulus },
    /// omega(t) * log(1/t), clamped to 0 for t >= 1
    ModulusLog { omega: Modulus },
}

impl PhiFn {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            PhiFn::Power { delta } => {
                if *delta == 1.0 {
                    t
                } else if *delta == 0.0 {
                    1.0
                } else {
                    t.powf(*delta)
                }
            }
            PhiFn::Modulus { omega } => omega.eval(t),
            PhiFn::ModulusLog { omega } => omega.eval(t) * (-t.ln()).max(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use proptest::prelude::*;

    fn table_of(pts: &[(f64, f64)]) -> Modulus {
        Modulus::table(pts.to_vec()).unwrap()
    }

    #[test]
    fn parametric_eval_and_inverse() {
        let lin = Modulus::linear(1.0).unwrap();
        assert_eq!(lin.eval(0.3), 0.3);
        assert_eq!(lin.inverse(0.25).unwrap(), 0.25);
        let root = Modulus::power(1.0, 0.5).unwrap();
        assert!((root.eval(0.25) - 0.5).abs() < 1e-15);
        assert!((root.inverse(0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(root.is_concave());
        assert!(!Modulus::power(1.0, 2.0).unwrap().is_concave());
    }

    #[test]
    fn table_eval_interpolates_from_zero_anchor() {
        let m = table_of(&[(1.0, 2.0)]);
        assert_eq!(m.eval(0.5), 1.0);
        assert_eq!(m.eval(1.0), 2.0);
        assert_eq!(m.eval(3.0), 2.0); // constant extension
        assert_eq!(m.eval(0.0), 0.0);
        assert_eq!(m.eval(-1.0), 0.0);
    }

    #[test]
    fn table_inverse_handles_plateaus() {
        let m = table_of(&[(0.1, 0.0), (0.2, 0.5), (0.3, 0.5), (0.4, 1.0)]);
        // rises through 0.25 on (0.1, 0.2)
        assert!((m.inverse(0.25).unwrap() - 0.15).abs() < 1e-12);
        // plateau at 0.5 ends at t = 0.3
        assert!((m.inverse(0.5).unwrap() - 0.3).abs() < 1e-12);
        // clamped to table range
        assert_eq!(m.inverse(7.0).unwrap(), 0.4);
        // below the first rise: sup of the flat zero stretch
        assert!((m.inverse(0.0).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn inverse_result_never_overshoots() {
        let m = table_of(&[(0.13, 0.07), (0.29, 0.31), (1.7, 0.9)]);
        for &y in &[0.0, 0.05, 0.07, 0.1, 0.31, 0.4, 0.89, 0.9, 2.0] {
            let t = m.inverse(y).unwrap();
            assert!(m.eval(t) <= y, "omega({t}) = {} > {y}", m.eval(t));
        }
    }

    #[test]
    fn table_inverse_matches_brute_scan() {
        let m = table_of(&[(0.05, 0.01), (0.3, 0.01), (0.5, 0.6), (0.9, 0.61), (1.0, 0.8)]);
        for &y in &[0.005, 0.01, 0.3, 0.6, 0.605, 0.79] {
            let t = m.inverse(y).unwrap();
            // brute force: largest grid t with omega(t) <= y
            let mut brute = 0.0;
            for i in 0..=100_000 {
                let s = i as f64 * 1e-5;
                if m.eval(s) <= y {
                    brute = s;
                }
            }
            assert!(
                (t - brute).abs() <= 2e-5,
                "y={y}: inverse {t} vs brute {brute}"
            );
        }
    }

    #[test]
    fn sum_inverse_by_bisection() {
        let m = Modulus::sum(vec![
            Modulus::linear(1.0).unwrap(),
            Modulus::linear(2.0).unwrap(),
        ])
        .unwrap();
        let t = m.inverse(0.3).unwrap();
        assert!((t - 0.1).abs() < 1e-12);
        assert!(m.eval(t) <= 0.3);
    }

    #[test]
    fn zero_modulus_inverse_is_unbounded() {
        let z = Modulus::linear(0.0).unwrap();
        assert_eq!(z.inverse(0.5).unwrap(), f64::INFINITY);
        assert_eq!(z.eval(123.0), 0.0);
    }

    #[test]
    fn estimate_constant_function_is_zero() {
        let dom = gallery::unit_disc();
        let u = Evaluator::Const(3.5);
        let m = estimate_modulus(&u, &dom, 500, 16, 7).unwrap();
        assert!(m.table.iter().all(|&(_, w)| w == 0.0));
    }

    #[test]
    fn estimate_lipschitz_function_tracks_slope() {
        let dom = gallery::unit_disc();
        let u = Evaluator::Re { var: 0 };
        let m = estimate_modulus(&u, &dom, 4000, 16, 11).unwrap();
        for &(t, w) in &m.table {
            // |Re z - Re w| <= |z - w| exactly
            assert!(w <= t * (1.0 + 1e-12), "w={w} above Lipschitz cap at t={t}");
        }
        // the sup is essentially attained in the upper bins
        let (t, w) = m.table[m.table.len() - 1];
        assert!(w >= 0.8 * t, "top bin w={w} far below t={t}");
    }

    #[test]
    fn majorant_of_convex_table_is_the_final_chord() {
        let emp = EmpiricalModulus {
            table: vec![(0.25, 0.0625), (0.5, 0.25), (0.75, 0.5625), (1.0, 1.0)],
            pair_count: 4,
            seed: 0,
        };
        let m = concave_majorant(&emp).unwrap();
        assert!((m.eval(0.5) - 0.5).abs() < 1e-15);
        match &m {
            Modulus::Table { points, concave } => {
                assert_eq!(points.len(), 1);
                assert_eq!(points[0], (1.0, 1.0));
                assert!(*concave);
            }
            other => panic!("expected table, got {other:?}"),
        }
    }

    #[test]
    fn majorant_two_point_example() {
        let emp = EmpiricalModulus {
            table: vec![(0.5, 0.1), (1.0, 1.0)],
            pair_count: 2,
            seed: 0,
        };
        let m = concave_majorant(&emp).unwrap();
        assert_eq!(m.eval(0.5), 0.5);
        assert!(m.eval(0.5) >= 0.1);
    }

    #[test]
    fn majorant_keeps_collinear_vertices() {
        let emp = EmpiricalModulus {
            table: vec![(0.25, 0.25), (0.5, 0.5), (1.0, 1.0)],
            pair_count: 3,
            seed: 0,
        };
        let m = concave_majorant(&emp).unwrap();
        match &m {
            Modulus::Table { points, .. } => assert_eq!(points.len(), 3),
            other => panic!("expected table, got {other:?}"),
        }
        assert_eq!(m.eval(0.25), 0.25);
    }

    #[test]
    fn phi_power_one_is_exact() {
        let phi = PhiFn::Power { delta: 1.0 };
        let r = (2.0f64).powi(-9);
        assert_eq!(phi.eval(r), r);
        let phi0 = PhiFn::Power { delta: 0.5 };
        assert!((phi0.eval(0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phi_modulus_log_clamps_above_one() {
        let phi = PhiFn::ModulusLog { omega: Modulus::linear(1.0).unwrap() };
        assert_eq!(phi.eval(2.0), 0.0);
        let t = 0.25f64;
        assert!((phi.eval(t) - t * (1.0 / t).ln()).abs() < 1e-15);
    }

    #[test]
    fn scaled_halves_exactly() {
        let m = table_of(&[(0.3, 0.2), (0.9, 0.7)]);
        let half = m.scaled(0.5);
        for i in 0..=30 {
            let t = i as f64 / 30.0;
            assert_eq!(half.eval(t), m.eval(t) * 0.5);
        }
    }

    fn arb_table() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((1e-3f64..1.0, 0.0f64..1.0), 1..24).prop_map(|raw| {
            let mut ts: Vec<f64> = raw.iter().map(|&(t, _)| t).collect();
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            let mut w = 0.0;
            ts.iter()
                .zip(raw.iter())
                .map(|(&t, &(_, inc))| {
                    w += inc;
                    (t, w)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn majorant_dominates_and_is_concave(table in arb_table()) {
            let emp = EmpiricalModulus { table: table.clone(), pair_count: table.len(), seed: 0 };
            let m = concave_majorant(&emp).unwrap();
            for &(t, w) in &table {
                prop_assert!(m.eval(t) >= w, "majorant {} below table {} at {}", m.eval(t), w, t);
            }
            prop_assert!(m.is_concave());
            // hull vertices are input points: dominance there is equality,
            // so lowering any vertex would break dominance (minimality)
            if let Modulus::Table { points, .. } = &m {
                for &(t, w) in points {
                    prop_assert!(table.iter().any(|&(ti, wi)| ti == t && wi == w));
                }
            }
            // discrete second differences stay nonpositive on a uniform grid
            let t_max = table[table.len() - 1].0;
            let vals: Vec<f64> = (0..=64).map(|i| m.eval(t_max * i as f64 / 64.0)).collect();
            for i in 1..64 {
                prop_assert!(vals[i + 1] - 2.0 * vals[i] + vals[i - 1] <= 1e-12);
            }
        }

        #[test]
        fn majorant_is_subadditive_under_dilation(table in arb_table()) {
            let emp = EmpiricalModulus { table: table.clone(), pair_count: table.len(), seed: 0 };
            let m = concave_majorant(&emp).unwrap();
            let t_max = table[table.len() - 1].0;
            for &c in &[1.25, 1.5, 2.0, 4.0] {
                for i in 1..=32 {
                    let t = t_max * i as f64 / 32.0;
                    prop_assert!(
                        m.eval(c * t) <= c * m.eval(t) + 1e-12,
                        "omega({c}t) > {c} omega(t) at t={t}"
                    );
                }
            }
        }

        #[test]
        fn inverse_stays_below_target(table in arb_table(), y in 0.0f64..2.0) {
            let m = Modulus::table(table).unwrap();
            let t = m.inverse(y).unwrap();
            prop_assert!(m.eval(t) <= y);
        }
    }
}
