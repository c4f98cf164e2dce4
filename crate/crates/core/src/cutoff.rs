//! Smooth cutoff functions between nested regions, with measured derivative
//! bounds.

use crate::bridge::{bridge, window};
use crate::error::{Error, Result};
use crate::lattice::{Field, Lattice};
use crate::region::{mask_distance, Region, Shape};
use crate::spectral::derivative;

/// Configuration for cutoff construction. The transition is always the
/// C-infinity bridge; `orders` says how many derivative bounds to measure.
#[derive(Debug, Clone, Copy)]
pub struct CutoffProfile {
    pub orders: usize,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile { orders: 4 }
    }
}

/// A cutoff field eta (1 on the inner region, 0 outside the outer region)
/// together with measured sup |d^N eta| and the normalized constants
/// C_N = sup |d^N eta| * width^N.
#[derive(Debug, Clone)]
pub struct Cutoff {
    pub field: Field,
    pub width: f64,
    pub sup_derivatives: Vec<f64>,
    pub constants: Vec<f64>,
}

/// Build a smooth cutoff with eta = 1 on `inner` and eta = 0 outside
/// `outer`. Concentric ball, annulus, cube and complement pairs get exact
/// analytic bridges; anything else falls back to a distance-based bridge.
pub fn make_cutoff(inner: &Region, outer: &Region, profile: CutoffProfile) -> Result<Cutoff> {
    if !inner.is_subset_of(outer) {
        let violations = inner
            .mask()
            .iter()
            .zip(outer.mask())
            .filter(|(i, o)| **i && !**o)
            .count();
        return Err(Error::CutoffContainment { violations });
    }
    let lat = inner.lattice().clone();
    let (field, width) = build(&lat, inner.shape(), outer.shape());
    let mut sup_derivatives = Vec::new();
    let mut constants = Vec::new();
    let mut current = vec![field.clone()];
    for n in 1..=profile.orders {
        // all order-n partials: differentiate every order-(n-1) partial along
        // every axis and take the pointwise maximum
        let mut next = Vec::new();
        let mut sup: f64 = 0.0;
        for f in &current {
            for axis in 0..lat.dim() {
                let d = derivative(f, axis)?;
                sup = sup.max(d.sup_norm());
                next.push(d);
            }
        }
        sup_derivatives.push(sup);
        constants.push(sup * width.powi(n as i32));
        current = next;
        if n >= 2 {
            // keep the combinatorial growth in check: axis-pure higher
            // partials dominate the bridge's sup norms
            current.truncate(lat.dim() * lat.dim());
        }
    }
    Ok(Cutoff { field, width, sup_derivatives, constants })
}

fn build(lat: &Lattice, inner: &Shape, outer: &Shape) -> (Field, f64) {
    match (inner, outer) {
        (Shape::Ball { center: c1, radius: r1 }, Shape::Ball { center: c2, radius: r2 })
            if c1 == c2 && r2 > r1 =>
        {
            let w = r2 - r1;
            let (c, r1, r2) = (c1.clone(), *r1, *r2);
            let f = Field::from_fn(lat, |x| {
                let rho = lat.distance(x, &c);
                1.0 - bridge((rho - r1) / (r2 - r1))
            });
            (f, w)
        }
        (
            Shape::Annulus { center: c1, r_inner: a1, r_outer: b1 },
            Shape::Annulus { center: c2, r_inner: a2, r_outer: b2 },
        ) if c1 == c2 && a2 <= a1 && b1 <= b2 => {
            let w = (a1 - a2).min(b2 - b1).max(f64::MIN_POSITIVE);
            let (c, a1, a2, b1, b2) = (c1.clone(), *a1, *a2, *b1, *b2);
            let f = Field::from_fn(lat, |x| {
                let rho = lat.distance(x, &c);
                window(rho, a2, a1, b1, b2)
            });
            (f, w)
        }
        (Shape::Cube { corner: k1, side: s1 }, Shape::Cube { corner: k2, side: s2 })
            if s2 > s1 =>
        {
            let w = (s2 - s1) / 2.0;
            let (k1, s1, k2, s2) = (k1.clone(), *s1, k2.clone(), *s2);
            let f = Field::from_fn(lat, |x| {
                let mut v = 1.0;
                for j in 0..x.len() {
                    // coordinates relative to the outer cube, unwrapped
                    let t = lat.wrap(x[j] - k2[j]);
                    let lo1 = lat.wrap(k1[j] - k2[j]);
                    let hi1 = lo1 + s1;
                    v *= window(t, 0.0, lo1, hi1, s2);
                }
                v
            });
            (f, w)
        }
        (Shape::Complement(i1), Shape::Complement(o1)) => {
            // eta = 1 outside i1, 0 inside o1: complement of the cutoff from
            // o1 up to i1
            let (g, w) = build(lat, o1, i1);
            (g.map(|v| num_complex::Complex64::new(1.0 - v.re, 0.0)), w)
        }
        _ => {
            // distance-based fallback (Lipschitz profile, adequate for
            // diagnostics; the analytic pairs above cover every hot path)
            let inner_mask = Region::new(lat, inner.clone());
            let outer_mask = Region::new(lat, outer.clone());
            let d_in = mask_distance(lat, inner_mask.mask());
            let outside: Vec<bool> = outer_mask.mask().iter().map(|m| !m).collect();
            let d_out = mask_distance(lat, &outside);
            let mut f = Field::zeros(lat, crate::lattice::FieldKind::RealScalar);
            let mut width: f64 = 0.0;
            for i in 0..lat.spatial_points() {
                let t = if d_in[i] == 0.0 {
                    1.0
                } else if d_out[i] == 0.0 {
                    0.0
                } else {
                    d_out[i] / (d_in[i] + d_out[i])
                };
                if d_in[i] > 0.0 && d_out[i] > 0.0 {
                    width = width.max(d_in[i] + d_out[i]);
                }
                f.comp_mut(0)[i] = num_complex::Complex64::new(bridge(t), 0.0);
            }
            (f, width.max(lat.spacing()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn lat() -> Lattice {
        Lattice::spatial(2, 128, 16.0)
    }

    #[test]
    fn cutoff_is_one_inside_zero_outside() {
        let l = lat();
        let inner = Region::ball(&l, &[8.0, 8.0], 2.0);
        let outer = Region::ball(&l, &[8.0, 8.0], 4.0);
        let c = make_cutoff(&inner, &outer, CutoffProfile::default()).unwrap();
        for i in 0..l.spatial_points() {
            let v = c.field.comp(0)[i].re;
            assert!((0.0..=1.0).contains(&v));
            if inner.contains_index(i) {
                assert!((v - 1.0).abs() < 1e-15);
            }
            if !outer.contains_index(i) {
                assert!(v.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn containment_violation_rejected() {
        let l = lat();
        let inner = Region::ball(&l, &[8.0, 8.0], 4.0);
        let outer = Region::ball(&l, &[8.0, 8.0], 2.0);
        assert!(matches!(
            make_cutoff(&inner, &outer, CutoffProfile::default()),
            Err(Error::CutoffContainment { .. })
        ));
    }

    #[test]
    fn gradient_bound_scales_with_width() {
        // concentric balls r, 2r: sup|d eta| <= C / r with C stable in r
        let l = lat();
        let mut cs = Vec::new();
        for r in [1.0, 2.0] {
            let inner = Region::ball(&l, &[8.0, 8.0], r);
            let outer = Region::ball(&l, &[8.0, 8.0], 2.0 * r);
            let c = make_cutoff(&inner, &outer, CutoffProfile { orders: 1 }).unwrap();
            cs.push(c.sup_derivatives[0] * r);
        }
        let rel = (cs[0] - cs[1]).abs() / cs[0];
        assert!(rel < 0.05, "C values {cs:?}");
    }

    #[test]
    fn partition_identity_pointwise() {
        let l = lat();
        let inner = Region::ball(&l, &[8.0, 8.0], 2.0);
        let outer = Region::ball(&l, &[8.0, 8.0], 3.0);
        let c = make_cutoff(&inner, &outer, CutoffProfile { orders: 1 }).unwrap();
        for v in c.field.comp(0) {
            let eta2 = v.re * v.re;
            assert!((eta2 + (1.0 - eta2) - 1.0).abs() < 1e-15);
        }
    }
}
