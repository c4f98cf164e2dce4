//! Energy-concentration quantities: the threshold delta_0, the concentration
//! scale r_c, the tail radius r_0, and the improved Hardy inequality probe.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::data::covariant_gradient;
use crate::data::EnergyProfile;
use crate::error::Result;
use crate::fft;
use crate::lattice::{Field, Lattice};
use crate::region::Region;

/// Default universal constant c in delta_0 = c^2 eps^2 min(1, eps^4 E^{-2}).
pub const DELTA0_DEFAULT_C: f64 = 1e-2;

/// delta_0(E, eps) = c^2 eps^2 min(1, eps^4 / E^2).
pub fn delta0(total_energy: f64, eps: f64, c: f64) -> f64 {
    assert!(total_energy > 0.0 && eps > 0.0);
    c * c * eps * eps * (1.0f64).min(eps.powi(4) / (total_energy * total_energy))
}

/// Max over centers of the profile mass inside a ball of radius r, by FFT
/// convolution with the ball indicator. Returns (max value, argmax index).
fn max_ball_energy(profile: &EnergyProfile, r: f64) -> (f64, usize) {
    let lat = profile.rho.lattice();
    let shape = lat.shape();
    let center = vec![0.0; lat.dim()];
    let mut ball = vec![Complex64::new(0.0, 0.0); lat.spatial_points()];
    for (i, v) in ball.iter_mut().enumerate() {
        let x = lat.position(i);
        if lat.distance(&x, &center) < r {
            *v = Complex64::new(1.0, 0.0);
        }
    }
    let mut rho_hat = profile.rho.comp(0).to_vec();
    fft::forward(&mut rho_hat, &shape);
    fft::forward(&mut ball, &shape);
    for (a, b) in rho_hat.iter_mut().zip(&ball) {
        *a *= b;
    }
    fft::inverse(&mut rho_hat, &shape);
    let w = lat.cell_volume();
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, v) in rho_hat.iter().enumerate() {
        let val = v.re * w;
        if val > best {
            best = val;
            arg = i;
        }
    }
    (best, arg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub r_c: f64,
    pub delta0: f64,
    /// true when the total energy is below delta0 (r_c = +infinity sentinel).
    pub unbounded: bool,
}

/// Energy concentration scale: sup of radii r such that every ball of radius
/// r carries energy < delta0. Geometric grid with ratio 2^{1/8} refined by 20
/// bisection steps; ties resolve toward the smaller radius.
pub fn concentration_scale(profile: &EnergyProfile, delta0: f64) -> ConcentrationReport {
    if profile.total < delta0 {
        return ConcentrationReport { r_c: f64::INFINITY, delta0, unbounded: true };
    }
    let lat = profile.rho.lattice();
    let r_min = 2.0 * lat.spacing();
    let r_max = 0.499 * lat.box_len();
    let ratio = 2.0f64.powf(1.0 / 8.0);

    let passes = |r: f64| max_ball_energy(profile, r).0 < delta0;

    // bracket on the geometric grid (max ball energy is nondecreasing in r)
    let mut lo = 0.0;
    let mut hi = f64::NAN;
    let mut r = r_min;
    while r <= r_max {
        if passes(r) {
            lo = r;
        } else {
            hi = r;
            break;
        }
        r *= ratio;
    }
    if hi.is_nan() {
        // every ball up to half the box passes: r_c is at least r_max
        return ConcentrationReport { r_c: r_max, delta0, unbounded: false };
    }
    if lo == 0.0 {
        lo = 0.0;
    }
    let mut a = lo;
    let mut b = hi;
    for _ in 0..20 {
        let mid = 0.5 * (a + b);
        if mid <= 0.0 {
            break;
        }
        if passes(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    ConcentrationReport { r_c: a, delta0, unbounded: false }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub r0: f64,
    pub x0: Vec<f64>,
    pub delta0: f64,
}

/// Tail radius: the smallest r0 such that some ball of radius r0/54 holds
/// all but delta0 of the energy; returns (r0, x0).
pub fn tail_radius(profile: &EnergyProfile, delta0: f64) -> TailReport {
    let lat = profile.rho.lattice();
    let target = profile.total - delta0;
    if target <= 0.0 {
        return TailReport { r0: 0.0, x0: vec![lat.box_len() / 2.0; lat.dim()], delta0 };
    }
    let s_min = lat.spacing();
    let s_max = 0.499 * lat.box_len();
    let ratio = 2.0f64.powf(1.0 / 8.0);
    let holds = |s: f64| {
        let (v, arg) = max_ball_energy(profile, s);
        (v > target, arg)
    };
    let mut lo = 0.0;
    let mut hi = f64::NAN;
    let mut arg_hi = 0usize;
    let mut s = s_min;
    while s <= s_max {
        let (ok, arg) = holds(s);
        if ok {
            hi = s;
            arg_hi = arg;
            break;
        }
        lo = s;
        s *= ratio;
    }
    if hi.is_nan() {
        // even the half-box ball misses the target: report the max radius
        let (_, arg) = max_ball_energy(profile, s_max);
        return TailReport { r0: 54.0 * s_max, x0: lat.position(arg), delta0 };
    }
    let mut a = lo.max(s_min * 0.5);
    let mut b = hi;
    for _ in 0..20 {
        let mid = 0.5 * (a + b);
        let (ok, arg) = holds(mid);
        if ok {
            b = mid;
            arg_hi = arg;
        } else {
            a = mid;
        }
    }
    TailReport { r0: 54.0 * b, x0: lat.position(arg_hi), delta0 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardyReport {
    /// || |x-x0|^{-1} f ||_{L2(2B)}
    pub lhs: f64,
    /// || D f ||_{L2(sigma0 B)}
    pub rhs_near: f64,
    /// sigma0^{-(d-2)/2} || D f ||_{L2(complement of sigma0 B)}
    pub rhs_far: f64,
    pub ratio: f64,
    /// The annulus variant: lhs on 2B minus the closed ball.
    pub lhs_annulus: f64,
    pub ratio_annulus: f64,
}

/// Measure both sides of the improved Hardy inequality for a ball B and
/// sigma0 >= 2 (d >= 3).
pub fn hardy_check(f: &Field, a: &Field, ball: &Region, sigma0: f64) -> Result<HardyReport> {
    let lat = f.lattice().clone();
    assert!(lat.dim() >= 3, "hardy_check needs d >= 3");
    assert!(sigma0 >= 2.0);
    let (center, radius) = match ball.shape() {
        crate::region::Shape::Ball { center, radius } => (center.clone(), *radius),
        other => panic!("hardy_check needs a ball, got {other:?}"),
    };
    let two_b = ball.dilate(2.0);
    let sigma_b = ball.dilate(sigma0);
    let _ = radius;

    // weighted LHS: |x-x0|^{-1} f, distance floored at h/2 at the center cell
    let h = lat.spacing();
    let mut weighted = f.clone();
    for i in 0..lat.spatial_points() {
        let x = lat.position(i);
        let r = lat.distance(&x, &center).max(0.5 * h);
        for c in 0..weighted.num_components() {
            weighted.comp_mut(c)[i] *= 1.0 / r;
        }
    }
    let lhs = weighted.l2_norm_masked(two_b.mask());
    let ann_mask: Vec<bool> = two_b
        .mask()
        .iter()
        .zip(ball.mask())
        .map(|(o, i)| *o && !*i)
        .collect();
    let lhs_annulus = weighted.l2_norm_masked(&ann_mask);

    // covariant gradient magnitude
    let grads = covariant_gradient(f, a)?;
    let mut df2 = Field::zeros(&lat, crate::lattice::FieldKind::RealScalar);
    for gj in &grads {
        for (o, v) in df2.comp_mut(0).iter_mut().zip(gj.comp(0)) {
            o.re += v.norm_sqr();
        }
    }
    let mut df = df2.clone();
    for v in df.comp_mut(0).iter_mut() {
        *v = Complex64::new(v.re.sqrt(), 0.0);
    }
    let rhs_near = df.l2_norm_masked(sigma_b.mask());
    let far_mask: Vec<bool> = sigma_b.mask().iter().map(|m| !m).collect();
    let d = lat.dim() as f64;
    let rhs_far = sigma0.powf(-(d - 2.0) / 2.0) * df.l2_norm_masked(&far_mask);
    let denom = (rhs_near + rhs_far).max(f64::MIN_POSITIVE);
    Ok(HardyReport {
        lhs,
        rhs_near,
        rhs_far,
        ratio: if lhs == 0.0 { 0.0 } else { lhs / denom },
        lhs_annulus,
        ratio_annulus: if lhs_annulus == 0.0 { 0.0 } else { lhs_annulus / denom },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FieldKind;
    use crate::quad::ball_volume;

    #[test]
    fn delta0_formula_cases() {
        let c = DELTA0_DEFAULT_C;
        let eps = 0.3f64;
        // E = eps^2: min argument is 1
        let d1 = delta0(eps * eps, eps, c);
        assert!((d1 - c * c * eps * eps).abs() < 1e-15);
        // E = 10 eps^2: min argument is eps^4 / (100 eps^4) = 1/100
        let d2 = delta0(10.0 * eps * eps, eps, c);
        assert!((d2 - c * c * eps * eps / 100.0).abs() < 1e-16);
        // monotone nonincreasing in E
        let mut prev = f64::INFINITY;
        for e in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let v = delta0(e, eps, c);
            assert!(v <= prev + 1e-18);
            prev = v;
        }
    }

    #[test]
    fn uniform_profile_closed_form() {
        // rho = rho0 on the box: r_c solves rho0 vol(B_r) = delta0
        let lat = Lattice::spatial(2, 128, 16.0);
        let rho0 = 0.05;
        let rho = Field::from_fn(&lat, |_| rho0);
        let total = rho0 * lat.volume();
        let profile = EnergyProfile { rho, total };
        let d0 = 0.2;
        let report = concentration_scale(&profile, d0);
        let want = (d0 / (rho0 * ball_volume(2, 1.0))).sqrt();
        assert!(
            (report.r_c - want).abs() < 0.02 * want,
            "got {} want {want}",
            report.r_c
        );
    }

    #[test]
    fn small_total_energy_gives_infinite_scale() {
        let lat = Lattice::spatial(2, 64, 16.0);
        let rho = Field::from_fn(&lat, |_| 1e-9);
        let profile = EnergyProfile { rho, total: 1e-9 * lat.volume() };
        let r = concentration_scale(&profile, 1.0);
        assert!(r.unbounded && r.r_c.is_infinite());
    }

    #[test]
    fn two_bump_tail_center_between_bumps() {
        let lat = Lattice::spatial(2, 128, 16.0);
        let c1 = [5.0, 8.0];
        let c2 = [11.0, 8.0];
        let rho = Field::from_fn(&lat, |x| {
            let r1 = lat.distance(x, &c1);
            let r2 = lat.distance(x, &c2);
            (-8.0 * r1 * r1).exp() + (-8.0 * r2 * r2).exp()
        });
        let total = rho.comp(0).iter().map(|v| v.re).sum::<f64>() * lat.cell_volume();
        let profile = EnergyProfile { rho, total };
        let report = tail_radius(&profile, 0.02 * total);
        // the covering ball must hold both bumps: radius >= half separation
        assert!(report.r0 / 54.0 > 2.5, "r0/54 = {}", report.r0 / 54.0);
        // center roughly between the bumps
        assert!((report.x0[0] - 8.0).abs() < 2.0, "x0={:?}", report.x0);
    }

    #[test]
    fn hardy_zero_field_and_gaussian() {
        let lat = Lattice::spatial(3, 64, 16.0);
        let ball = Region::ball(&lat, &[8.0, 8.0, 8.0], 1.5);
        let zero = Field::zeros(&lat, FieldKind::ComplexScalar);
        let a = Field::zeros(&lat, FieldKind::RealVector);
        let rep = hardy_check(&zero, &a, &ball, 2.0).unwrap();
        assert_eq!(rep.ratio, 0.0);

        let f = Field::from_fn_complex(&lat, |x| {
            let r = lat.distance(x, &[8.0, 8.0, 8.0]);
            Complex64::new((-0.5 * r * r).exp(), 0.0)
        });
        let rep = hardy_check(&f, &a, &ball, 2.0).unwrap();
        assert!(rep.ratio.is_finite() && rep.ratio > 0.0);
        // scale invariance: rescale f and B together
        let f2 = Field::from_fn_complex(&lat, |x| {
            let r = lat.distance(x, &[8.0, 8.0, 8.0]) / 2.0;
            Complex64::new((-0.5 * r * r).exp(), 0.0)
        });
        let ball2 = Region::ball(&lat, &[8.0, 8.0, 8.0], 3.0);
        let rep2 = hardy_check(&f2, &a, &ball2, 2.0).unwrap();
        let rel = (rep.ratio - rep2.ratio).abs() / rep.ratio;
        assert!(rel < 0.06, "ratio {} vs {}", rep.ratio, rep2.ratio);
    }
}
