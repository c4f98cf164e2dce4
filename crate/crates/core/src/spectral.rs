//! Spectral calculus: Fourier-multiplier derivatives, inverse Laplacian and
//! the dyadic frequency projections P_k, Q_j, S_l, T_j.

use num_complex::Complex64;

use crate::bridge::{m_le, m_shell};
use crate::error::{Error, Result};
use crate::fft;
use crate::lattice::{Field, Lattice};

/// Frequency data of one mode.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    /// |xi|, modulus of the spatial frequency vector.
    pub xi_norm: f64,
    /// Time frequency (0 on spatial lattices).
    pub tau: f64,
    /// True when every frequency component vanishes.
    pub is_zero: bool,
}

/// Apply a scalar Fourier multiplier to every component.
pub fn apply_multiplier(field: &Field, f: impl Fn(&Mode, &[f64]) -> Complex64) -> Field {
    let lat = field.lattice().clone();
    let shape = lat.shape();
    let naxes = shape.len();
    let has_time = lat.is_space_time();
    let freqs: Vec<Vec<f64>> = (0..naxes).map(|a| lat.frequencies(a)).collect();

    // Precompute the multiplier once, reuse for all components.
    let npoints = lat.num_points();
    let mut mult = vec![Complex64::new(0.0, 0.0); npoints];
    let mut idx = vec![0usize; naxes];
    let mut xi = vec![0.0; naxes];
    for (flat, m) in mult.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..naxes).rev() {
            idx[a] = rem % shape[a];
            rem /= shape[a];
        }
        let mut xi2 = 0.0;
        let mut tau = 0.0;
        let mut all_zero = true;
        for a in 0..naxes {
            let w = freqs[a][idx[a]];
            xi[a] = w;
            if w != 0.0 {
                all_zero = false;
            }
            if has_time && a == 0 {
                tau = w;
            } else {
                xi2 += w * w;
            }
        }
        let mode = Mode { xi_norm: xi2.sqrt(), tau, is_zero: all_zero };
        *m = f(&mode, &xi);
    }

    let mut out = field.clone();
    for c in 0..out.num_components() {
        let buf = out.comp_mut(c);
        fft::forward(buf, &shape);
        for (v, m) in buf.iter_mut().zip(&mult) {
            *v *= m;
        }
        fft::inverse(buf, &shape);
    }
    if field.kind().is_real() && multiplier_preserves_real(&mult, &shape) {
        out.realize();
    }
    out
}

/// A multiplier keeps real fields real iff m(-xi) = conj(m(xi)). All our
/// multipliers are either even real (projections) or odd imaginary
/// (derivatives); checking a few conjugate pairs is enough to decide.
fn multiplier_preserves_real(mult: &[Complex64], shape: &[usize]) -> bool {
    let naxes = shape.len();
    let npoints: usize = shape.iter().product();
    let probe = [1usize, 7, 13, npoints / 3 + 1];
    for &flat in &probe {
        let flat = flat % npoints;
        let mut idx = vec![0usize; naxes];
        let mut rem = flat;
        for a in (0..naxes).rev() {
            idx[a] = rem % shape[a];
            rem /= shape[a];
        }
        let mut mirror = 0usize;
        for a in 0..naxes {
            let m = if idx[a] == 0 { 0 } else { shape[a] - idx[a] };
            mirror = mirror * shape[a] + m;
        }
        if (mult[flat] - mult[mirror].conj()).norm() > 1e-12 {
            return false;
        }
    }
    true
}

/// Spectral partial derivative along a public axis (0..dim spatial, dim =
/// time). Exact for band-limited fields; Nyquist modes carry frequency 0 by
/// the lattice convention, so real fields stay real.
pub fn derivative(field: &Field, axis: usize) -> Result<Field> {
    let lat = field.lattice();
    let sa = lat.storage_axis(axis)?;
    Ok(apply_multiplier(field, |_, xi| Complex64::new(0.0, xi[sa])))
}

/// Gradient of a scalar field (spatial axes only).
pub fn gradient(field: &Field) -> Result<Vec<Field>> {
    (0..field.lattice().dim()).map(|j| derivative(field, j)).collect()
}

/// Spatial divergence of a vector field.
pub fn divergence(field: &Field) -> Result<Field> {
    let d = field.lattice().dim();
    assert_eq!(field.num_components(), d, "divergence needs a vector field");
    let mut out: Option<Field> = None;
    for j in 0..d {
        let dj = derivative(&field.component_field(j), j)?;
        out = Some(match out {
            None => dj,
            Some(acc) => acc.add(&dj),
        });
    }
    Ok(out.unwrap())
}

/// The components (da)_{jk} = d_j a_k - d_k a_j for j < k, with their index
/// pairs.
pub fn curl_components(a: &Field) -> Result<Vec<((usize, usize), Field)>> {
    let d = a.lattice().dim();
    let mut out = Vec::new();
    for j in 0..d {
        for k in (j + 1)..d {
            let djk = derivative(&a.component_field(k), j)?;
            let dkj = derivative(&a.component_field(j), k)?;
            out.push(((j, k), djk.sub(&dkj)));
        }
    }
    Ok(out)
}

/// Spatial Laplacian.
pub fn laplacian(field: &Field) -> Field {
    apply_multiplier(field, |m, _| Complex64::new(-m.xi_norm * m.xi_norm, 0.0))
}

/// Result of `inv_laplacian`: the solution and the discarded per-slice means.
pub struct InvLaplacian {
    pub field: Field,
    pub slice_means: Vec<Complex64>,
}

/// (-Delta)^{-1} with the spatial zero mode projected out; the discarded
/// means (one per time slice) are returned as metadata.
pub fn inv_laplacian(field: &Field) -> InvLaplacian {
    let slices = field.lattice().num_slices();
    let sp = field.lattice().spatial_points() as f64;
    let mut slice_means = Vec::with_capacity(slices);
    for s in 0..slices {
        let r = field.slice_range(s);
        let mut m = Complex64::new(0.0, 0.0);
        for c in 0..field.num_components() {
            m += field.comp(c)[r.clone()].iter().sum::<Complex64>();
        }
        slice_means.push(m / (sp * field.num_components() as f64));
    }
    let out = apply_multiplier(field, |m, _| {
        if m.xi_norm == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0 / (m.xi_norm * m.xi_norm), 0.0)
        }
    });
    InvLaplacian { field: out, slice_means }
}

/// The wave operator `Box = -d_t^2 + Delta` (space-time lattices).
pub fn dalembertian(field: &Field) -> Result<Field> {
    if !field.lattice().is_space_time() {
        return Err(Error::NotSpaceTime);
    }
    Ok(apply_multiplier(field, |m, _| {
        Complex64::new(m.tau * m.tau - m.xi_norm * m.xi_norm, 0.0)
    }))
}

/// Which dyadic frequency projection to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpKind {
    /// Spatial shells in |xi|.
    P,
    /// Modulation shells in ||tau| - |xi|| (distance to the light cone).
    Q,
    /// Space-time shells in |(tau, xi)|.
    S,
    /// Temporal shells in |tau|.
    T,
}

impl LpKind {
    fn argument(&self, m: &Mode) -> f64 {
        match self {
            LpKind::P => m.xi_norm,
            LpKind::Q => (m.tau.abs() - m.xi_norm).abs(),
            LpKind::S => (m.tau * m.tau + m.xi_norm * m.xi_norm).sqrt(),
            LpKind::T => m.tau.abs(),
        }
    }

    fn needs_time(&self) -> bool {
        !matches!(self, LpKind::P)
    }
}

/// Dyadic index range resolvable for a projection kind on a lattice.
pub fn dyadic_range(lat: &Lattice, kind: LpKind) -> (i32, i32) {
    let (ks_min, ks_max) = lat.dyadic_range();
    match kind {
        LpKind::P => (ks_min, ks_max),
        LpKind::T => lat.dyadic_range_time(),
        LpKind::Q | LpKind::S => {
            let (kt_min, kt_max) = lat.dyadic_range_time();
            (ks_min.min(kt_min), ks_max.max(kt_max) + 1)
        }
    }
}

/// Littlewood-Paley projection with catch-all end blocks: the bottom block
/// uses m_{<=k_min} (zero modes handled per kind) and the top block absorbs
/// everything above 2^{k_max-1}, so the blocks sum to the identity (minus the
/// spatial mean for P, minus the constant mode for S).
pub fn lp_project(field: &Field, kind: LpKind, index: i32) -> Result<Field> {
    if kind.needs_time() && !field.lattice().is_space_time() {
        return Err(Error::NotSpaceTime);
    }
    let (k_min, k_max) = dyadic_range(field.lattice(), kind);
    Ok(apply_multiplier(field, |m, _| {
        let r = kind.argument(m);
        let drop_zero = match kind {
            LpKind::P => m.xi_norm == 0.0,
            LpKind::S => m.is_zero,
            LpKind::Q | LpKind::T => false,
        };
        if drop_zero {
            return Complex64::new(0.0, 0.0);
        }
        let w = if index <= k_min {
            m_le(k_min, r)
        } else if index >= k_max {
            1.0 - m_le(k_max - 1, r)
        } else {
            m_shell(index, r)
        };
        Complex64::new(w, 0.0)
    }))
}

/// Smooth spatial low-pass P_{<=k} (keeps the mean).
pub fn lowpass(field: &Field, k: i32) -> Field {
    apply_multiplier(field, |m, _| Complex64::new(m_le(k, m.xi_norm), 0.0))
}

/// Project out the unresolved corner modes (every axis at 0 or Nyquist,
/// excluding the mean itself). These are the only modes on which the
/// reduced-band calculus cannot solve div e = rho; dropping them from a
/// source makes the gradient construction an exact right inverse.
pub fn project_resolved(field: &Field) -> Field {
    let lat = field.lattice().clone();
    let shape = lat.shape();
    let naxes = shape.len();
    let npoints = lat.num_points();
    let mut out = field.clone();
    for c in 0..out.num_components() {
        let buf = out.comp_mut(c);
        fft::forward(buf, &shape);
        // walk the 2^naxes corner modes
        for corner in 1..(1usize << naxes) {
            let mut flat = 0usize;
            for a in 0..naxes {
                let idx = if (corner >> a) & 1 == 1 { shape[a] / 2 } else { 0 };
                flat = flat * shape[a] + idx;
            }
            buf[flat] = Complex64::new(0.0, 0.0);
        }
        fft::inverse(buf, &shape);
        let _ = npoints;
    }
    if field.kind().is_real() {
        out.realize();
    }
    out
}

/// Subtract the spatial mean (per time slice).
pub fn remove_mean(field: &Field) -> Field {
    apply_multiplier(field, |m, _| {
        if m.xi_norm == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FieldKind;
    use std::f64::consts::PI;

    fn lat2() -> Lattice {
        Lattice::spatial(2, 64, 8.0)
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let f = Field::from_fn(&lat2(), |_| 3.25);
        let d = derivative(&f, 0).unwrap();
        assert!(d.l2_norm() < 1e-13);
    }

    #[test]
    fn derivative_of_single_mode_is_exact() {
        let l = lat2();
        let k = 2.0 * PI / l.box_len();
        let f = Field::from_fn(&l, |x| (k * x[0]).sin());
        let d = derivative(&f, 0).unwrap();
        let expect = Field::from_fn(&l, |x| k * (k * x[0]).cos());
        let err = d.sub(&expect).sup_norm();
        assert!(err < 1e-12, "err={err}");
    }

    #[test]
    fn mixed_partials_commute() {
        let l = lat2();
        let k = 2.0 * PI / l.box_len();
        let f = Field::from_fn(&l, |x| {
            (k * x[0]).sin() * (2.0 * k * x[1]).cos() + 0.3 * (3.0 * k * (x[0] + x[1])).sin()
        });
        let d01 = derivative(&derivative(&f, 0).unwrap(), 1).unwrap();
        let d10 = derivative(&derivative(&f, 1).unwrap(), 0).unwrap();
        let denom = d01.l2_norm().max(1e-30);
        assert!(d01.sub(&d10).l2_norm() / denom < 1e-12);
    }

    #[test]
    fn inv_laplacian_eigenfunction() {
        let l = lat2();
        let k = 2.0 * PI / l.box_len();
        let f = Field::from_fn(&l, |x| (k * x[0]).sin());
        let inv = inv_laplacian(&f);
        let expect = f.scale(1.0 / (k * k));
        assert!(inv.field.sub(&expect).sup_norm() < 1e-12);
    }

    #[test]
    fn inv_laplacian_round_trip() {
        let l = lat2();
        let k = 2.0 * PI / l.box_len();
        let f = Field::from_fn(&l, |x| {
            (k * x[0]).sin() * (k * 2.0 * x[1]).cos() + 0.2 * (3.0 * k * x[1]).sin()
        });
        let mean_removed = remove_mean(&f);
        let inv = inv_laplacian(&f);
        // inv_laplacian is (-Delta)^{-1}: -Delta applied to it recovers the
        // mean-free part
        let back = laplacian(&inv.field).scale(-1.0);
        let rel = back.sub(&mean_removed).l2_norm() / mean_removed.l2_norm();
        assert!(rel < 1e-11, "rel={rel}");
    }

    #[test]
    fn zero_field_inv_laplacian() {
        let f = Field::zeros(&lat2(), FieldKind::RealScalar);
        let inv = inv_laplacian(&f);
        assert!(inv.field.l2_norm() == 0.0);
    }

    #[test]
    fn lp_blocks_telescope_to_identity_minus_mean() {
        let l = lat2();
        let k = 2.0 * PI / l.box_len();
        let f = Field::from_fn(&l, |x| {
            1.7 + (k * x[0]).sin()
                + 0.5 * (5.0 * k * x[1]).cos()
                + 0.1 * (11.0 * k * (x[0] - x[1])).sin()
        });
        let (k_min, k_max) = l.dyadic_range();
        let mut sum = Field::zeros(&l, FieldKind::RealScalar);
        for k in k_min..=k_max {
            sum = sum.add(&lp_project(&f, LpKind::P, k).unwrap());
        }
        let target = remove_mean(&f);
        let rel = sum.sub(&target).l2_norm() / target.l2_norm();
        assert!(rel < 1e-10, "rel={rel}");
    }

    #[test]
    fn lp_on_constant_vanishes() {
        let l = lat2();
        let f = Field::from_fn(&l, |_| 2.0);
        let (k_min, k_max) = l.dyadic_range();
        for k in k_min..=k_max {
            assert!(lp_project(&f, LpKind::P, k).unwrap().l2_norm() < 1e-13);
        }
    }

    #[test]
    fn lp_far_blocks_are_orthogonal() {
        let l = lat2();
        let k0 = 2.0 * PI / l.box_len();
        let f = Field::from_fn(&l, |x| {
            (k0 * x[0]).sin() + (k0 * 9.0 * x[1]).sin() + (k0 * 20.0 * x[0]).cos()
        });
        let (k_min, k_max) = l.dyadic_range();
        for k in k_min..=k_max {
            for kp in k_min..=k_max {
                if (k - kp).abs() >= 2 {
                    let a = lp_project(&f, LpKind::P, k).unwrap();
                    let b = lp_project(&a, LpKind::P, kp).unwrap();
                    assert!(b.l2_norm() < 1e-12 * f.l2_norm().max(1.0), "k={k} kp={kp}");
                }
            }
        }
    }

    #[test]
    fn q_projection_requires_space_time() {
        let f = Field::from_fn(&lat2(), |_| 1.0);
        assert!(matches!(lp_project(&f, LpKind::Q, 0), Err(Error::NotSpaceTime)));
    }

    #[test]
    fn parseval_physical_vs_frequency() {
        let l = lat2();
        let k = 2.0 * PI / l.box_len();
        let f = Field::from_fn(&l, |x| (k * x[0]).sin() + 0.3 * (2.0 * k * x[1]).cos());
        let phys = f.l2_norm();
        // Frequency-space value via Parseval on the raw buffer.
        let shape = l.shape();
        let mut buf = f.comp(0).to_vec();
        fft::forward(&mut buf, &shape);
        let n = l.num_points() as f64;
        let freq = (buf.iter().map(|v| v.norm_sqr()).sum::<f64>() / n * f.quad_weight()).sqrt();
        assert!((phys - freq).abs() < 1e-12 * phys);
    }
}
