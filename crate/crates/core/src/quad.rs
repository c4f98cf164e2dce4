//! Quadrature and interpolation: rectangle-rule region integrals, periodic
//! multilinear/cubic interpolation, Gauss-Legendre nodes and sphere-flux
//! quadrature.

use num_complex::Complex64;

use crate::lattice::Field;
use crate::region::Region;

/// Rectangle-rule integral of a scalar field over a region: h^d times the
/// masked sample sum. Spatial fields only.
pub fn integrate(field: &Field, region: &Region) -> Complex64 {
    assert!(!field.lattice().is_space_time(), "integrate is spatial");
    assert_eq!(field.num_components(), 1, "integrate needs a scalar field");
    let mask = region.mask();
    let mut s = Complex64::new(0.0, 0.0);
    for (i, v) in field.comp(0).iter().enumerate() {
        if mask[i] {
            s += v;
        }
    }
    s * field.lattice().cell_volume()
}

pub fn integrate_real(field: &Field, region: &Region) -> f64 {
    integrate(field, region).re
}

/// Integral over the whole box.
pub fn integrate_box(field: &Field) -> Complex64 {
    assert_eq!(field.num_components(), 1);
    let s: Complex64 = field.comp(0).iter().sum();
    s * field.lattice().cell_volume()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpKind {
    /// Multilinear: exact at lattice points, reproduces linears, O(h^2).
    Linear,
    /// Catmull-Rom cubic: O(h^4) on smooth data.
    Cubic,
}

/// Interpolate every component of a spatial field at a physical point
/// (wrapped into the periodic box).
pub fn interpolate(field: &Field, point: &[f64], kind: InterpKind) -> Vec<Complex64> {
    let lat = field.lattice();
    assert!(!lat.is_space_time(), "interpolate is spatial");
    let d = lat.dim();
    let n = lat.n();
    let h = lat.spacing();

    let mut base = vec![0i64; d];
    let mut frac = vec![0.0; d];
    for j in 0..d {
        let u = lat.wrap(point[j]) / h;
        let f = u.floor();
        base[j] = f as i64;
        frac[j] = u - f;
    }

    match kind {
        InterpKind::Linear => {
            let corners = 1usize << d;
            let mut out = vec![Complex64::new(0.0, 0.0); field.num_components()];
            let mut coords = vec![0usize; d];
            for corner in 0..corners {
                let mut w = 1.0;
                for j in 0..d {
                    let off = (corner >> j) & 1;
                    w *= if off == 1 { frac[j] } else { 1.0 - frac[j] };
                    coords[j] = ((base[j] + off as i64).rem_euclid(n as i64)) as usize;
                }
                if w == 0.0 {
                    continue;
                }
                let idx = lat.spatial_index(&coords);
                for (c, o) in out.iter_mut().enumerate() {
                    *o += w * field.comp(c)[idx];
                }
            }
            out
        }
        InterpKind::Cubic => {
            // separable Catmull-Rom: 4 nodes per axis at offsets -1..2
            let wts: Vec<[f64; 4]> = (0..d)
                .map(|j| {
                    let t = frac[j];
                    let t2 = t * t;
                    let t3 = t2 * t;
                    [
                        0.5 * (-t3 + 2.0 * t2 - t),
                        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
                        0.5 * (t3 - t2),
                    ]
                })
                .collect();
            let mut out = vec![Complex64::new(0.0, 0.0); field.num_components()];
            let stencil = 4usize.pow(d as u32);
            let mut coords = vec![0usize; d];
            for s in 0..stencil {
                let mut w = 1.0;
                let mut rem = s;
                for j in 0..d {
                    let off = (rem % 4) as i64 - 1;
                    rem /= 4;
                    w *= wts[j][(off + 1) as usize];
                    coords[j] = ((base[j] + off).rem_euclid(n as i64)) as usize;
                }
                if w == 0.0 {
                    continue;
                }
                let idx = lat.spatial_index(&coords);
                for (c, o) in out.iter_mut().enumerate() {
                    *o += w * field.comp(c)[idx];
                }
            }
            out
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration from the Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Surface area of the sphere of radius r in d dimensions.
pub fn sphere_area(d: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    match d {
        2 => 2.0 * PI * r,
        3 => 4.0 * PI * r * r,
        4 => 2.0 * PI * PI * r * r * r,
        _ => panic!("sphere_area: d must be 2..4"),
    }
}

/// Volume of the ball of radius r in d dimensions.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    match d {
        2 => PI * r * r,
        3 => 4.0 / 3.0 * PI * r.powi(3),
        4 => PI * PI / 2.0 * r.powi(4),
        _ => panic!("ball_volume: d must be 2..4"),
    }
}

/// Unit direction samples with quadrature weights summing to the sphere
/// area in d dimensions (product Gauss rules; trapezoid on the circle).
pub fn sphere_quadrature(d: usize, resolution: usize) -> Vec<(Vec<f64>, f64)> {
    use std::f64::consts::PI;
    let mut out = Vec::new();
    match d {
        2 => {
            let m = 4 * resolution;
            let w = 2.0 * PI / m as f64;
            for i in 0..m {
                let th = 2.0 * PI * i as f64 / m as f64;
                out.push((vec![th.cos(), th.sin()], w));
            }
        }
        3 => {
            let (nodes, wts) = gauss_legendre(resolution);
            let m = 2 * resolution;
            let wphi = 2.0 * PI / m as f64;
            for (ct, wt) in nodes.iter().zip(&wts) {
                let st = (1.0 - ct * ct).sqrt();
                for i in 0..m {
                    let phi = 2.0 * PI * i as f64 / m as f64;
                    out.push((vec![st * phi.cos(), st * phi.sin(), *ct], wt * wphi));
                }
            }
        }
        4 => {
            // angles: psi in [0,pi] weight sin^2, theta in [0,pi] weight sin,
            // phi in [0,2pi)
            let (ns, ws) = gauss_legendre(resolution);
            let m = 2 * resolution;
            let wphi = 2.0 * PI / m as f64;
            for (u, wu) in ns.iter().zip(&ws) {
                // substitute psi: u in [-1,1] -> psi = pi(u+1)/2, Jacobian pi/2
                let psi = PI * (u + 1.0) / 2.0;
                let wpsi = wu * PI / 2.0 * psi.sin() * psi.sin();
                for (ct, wt) in ns.iter().zip(&ws) {
                    let st = (1.0 - ct * ct).sqrt();
                    for i in 0..m {
                        let phi = 2.0 * PI * i as f64 / m as f64;
                        let dir = vec![
                            psi.sin() * st * phi.cos(),
                            psi.sin() * st * phi.sin(),
                            psi.sin() * ct,
                            psi.cos(),
                        ];
                        out.push((dir, wpsi * wt * wphi));
                    }
                }
            }
        }
        _ => panic!("sphere_quadrature: d must be 2..4"),
    }
    out
}

/// Flux of a vector field through the sphere of radius r around a center,
/// by interpolated surface quadrature.
pub fn sphere_flux(field: &Field, center: &[f64], r: f64, resolution: usize) -> f64 {
    let lat = field.lattice();
    let d = lat.dim();
    assert_eq!(field.num_components(), d, "flux needs a vector field");
    let quad = sphere_quadrature(d, resolution);
    let mut flux = 0.0;
    for (dir, w) in &quad {
        let mut p = vec![0.0; d];
        for j in 0..d {
            p[j] = center[j] + r * dir[j];
        }
        let vals = interpolate(field, &p, InterpKind::Linear);
        let dot: f64 = vals.iter().zip(dir).map(|(v, u)| v.re * u).sum();
        flux += dot * w;
    }
    flux * r.powi(d as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FieldKind, Lattice};

    #[test]
    fn ball_area_converges_to_analytic() {
        // integral of 1 over a ball of radius 1 in d=2 at n=128, L=8: within 2%
        let lat = Lattice::spatial(2, 128, 8.0);
        let one = Field::from_fn(&lat, |_| 1.0);
        let ball = Region::ball(&lat, &[4.0, 4.0], 1.0);
        let got = integrate_real(&one, &ball);
        assert!((got - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.02);
        // refinement improves it
        let lat2 = Lattice::spatial(2, 256, 8.0);
        let one2 = Field::from_fn(&lat2, |_| 1.0);
        let ball2 = Region::ball(&lat2, &[4.0, 4.0], 1.0);
        let got2 = integrate_real(&one2, &ball2);
        assert!((got2 - std::f64::consts::PI).abs() < (got - std::f64::consts::PI).abs() + 1e-3);
    }

    #[test]
    fn zero_integrates_to_zero() {
        let lat = Lattice::spatial(2, 32, 8.0);
        let z = Field::zeros(&lat, FieldKind::RealScalar);
        assert_eq!(integrate_real(&z, &Region::whole(&lat)), 0.0);
    }

    #[test]
    fn aligned_cube_is_exact() {
        let lat = Lattice::spatial(2, 32, 8.0);
        let one = Field::from_fn(&lat, |_| 1.0);
        let cube = Region::cube(&lat, &[1.0, 1.0], 2.0);
        // lattice-aligned: exactly (2/h)^2 cells
        assert!((integrate_real(&one, &cube) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_exact_at_lattice_points_and_on_linears() {
        let lat = Lattice::spatial(2, 32, 8.0);
        let f = Field::from_fn(&lat, |x| 2.0 * x[0] + 1.0);
        let at_node = interpolate(&f, &[2.0, 3.0], InterpKind::Linear)[0].re;
        assert!((at_node - 5.0).abs() < 1e-13);
        // within one cell a linear is reproduced exactly
        let h = lat.spacing();
        let v = interpolate(&f, &[2.0 + 0.3 * h, 3.0 + 0.7 * h], InterpKind::Linear)[0].re;
        assert!((v - (2.0 * (2.0 + 0.3 * h) + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn interpolation_second_order() {
        // Richardson: halving h cuts the smooth-field error by about 4
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let lat = Lattice::spatial(2, n, 8.0);
            let k = 2.0 * std::f64::consts::PI / 8.0;
            let f = Field::from_fn(&lat, |x| (k * x[0]).sin() * (k * x[1]).cos());
            let p = [3.137, 2.642];
            let got = interpolate(&f, &p, InterpKind::Linear)[0].re;
            let want = (k * p[0]).sin() * (k * p[1]).cos();
            errs.push((got - want).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.6, "order={order} errs={errs:?}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((integral - 2.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_quadrature_total_weight() {
        for d in [2usize, 3, 4] {
            let q = sphere_quadrature(d, 16);
            let total: f64 = q.iter().map(|(_, w)| w).sum();
            assert!((total - sphere_area(d, 1.0)).abs() < 1e-6 * sphere_area(d, 1.0), "d={d}");
        }
    }
}
