//! MKG initial data sets: the Gauss constraint, energy functionals, gauge
//! transforms, Coulomb projection and constraint repair.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Field, FieldKind, Lattice};
use crate::quad::{integrate_box, integrate_real};
use crate::region::Region;
use crate::spectral::{curl_components, derivative, divergence, gradient, inv_laplacian};

/// The quadruple (a, e, f, g): spatial 1-forms a, e and complex scalars f, g
/// with a Gauss-constraint residual attached on demand.
#[derive(Debug, Clone)]
pub struct InitialDataSet {
    pub a: Field,
    pub e: Field,
    pub f: Field,
    pub g: Field,
}

impl InitialDataSet {
    pub fn new(a: Field, e: Field, f: Field, g: Field) -> InitialDataSet {
        assert_eq!(a.kind(), FieldKind::RealVector);
        assert_eq!(e.kind(), FieldKind::RealVector);
        a.same_lattice(&e).unwrap();
        a.same_lattice(&f).unwrap();
        a.same_lattice(&g).unwrap();
        InitialDataSet { a, e, f, g }
    }

    pub fn zeros(lattice: &Lattice) -> InitialDataSet {
        InitialDataSet {
            a: Field::zeros(lattice, FieldKind::RealVector),
            e: Field::zeros(lattice, FieldKind::RealVector),
            f: Field::zeros(lattice, FieldKind::ComplexScalar),
            g: Field::zeros(lattice, FieldKind::ComplexScalar),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        self.a.lattice()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.e.is_finite() && self.f.is_finite() && self.g.is_finite()
    }
}

/// Pointwise Im(f conj(g)) as a real scalar field (the matter charge
/// density).
pub fn charge_density(f: &Field, g: &Field) -> Field {
    let mut out = Field::zeros(f.lattice(), FieldKind::RealScalar);
    for (o, (fv, gv)) in out
        .comp_mut(0)
        .iter_mut()
        .zip(f.comp(0).iter().zip(g.comp(0)))
    {
        *o = Complex64::new((fv * gv.conj()).im, 0.0);
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussStats {
    /// L2 norm of the residual field.
    pub l2: f64,
    /// Spatial mean of the residual (the topological charge defect on the
    /// torus; exactly zero for data with balanced charge).
    pub mean: f64,
    /// L2 norm of the mean-free part.
    pub l2_mean_free: f64,
    /// Scale used for relative comparisons: ||div e||_2 + ||Im(f conj g)||_2.
    pub scale: f64,
}

impl GaussStats {
    pub fn relative(&self) -> f64 {
        self.l2 / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Gauss residual r = div e - Im(f conj(g)) and its statistics.
pub fn gauss_residual(data: &InitialDataSet) -> Result<(Field, GaussStats)> {
    let div_e = divergence(&data.e)?;
    let rho = charge_density(&data.f, &data.g);
    let r = div_e.sub(&rho);
    let mean = r.mean().re;
    let vol = r.lattice().volume();
    let l2 = r.l2_norm();
    let l2_mean = mean.abs() * vol.sqrt();
    let l2_mean_free = (l2 * l2 - l2_mean * l2_mean).max(0.0).sqrt();
    let scale = div_e.l2_norm() + rho.l2_norm();
    Ok((r, GaussStats { l2, mean, l2_mean_free, scale }))
}

/// Gauss residual measured only on a spatial mask (valid region of excised
/// data); the scale is masked identically.
pub fn gauss_residual_masked(data: &InitialDataSet, mask: &[bool]) -> Result<(Field, GaussStats)> {
    let div_e = divergence(&data.e)?;
    let rho = charge_density(&data.f, &data.g);
    let r = div_e.sub(&rho);
    let cells = mask.iter().filter(|&&m| m).count().max(1);
    let mean: f64 = r
        .comp(0)
        .iter()
        .enumerate()
        .filter(|(i, _)| mask[*i])
        .map(|(_, v)| v.re)
        .sum::<f64>()
        / cells as f64;
    let l2 = r.l2_norm_masked(mask);
    let area = cells as f64 * r.lattice().cell_volume();
    let l2_mean = mean.abs() * area.sqrt();
    let l2_mean_free = (l2 * l2 - l2_mean * l2_mean).max(0.0).sqrt();
    let scale = div_e.l2_norm_masked(mask) + rho.l2_norm_masked(mask);
    Ok((r, GaussStats { l2, mean, l2_mean_free, scale }))
}

/// Covariant derivative components D_j f = d_j f + i a_j f.
pub fn covariant_gradient(f: &Field, a: &Field) -> Result<Vec<Field>> {
    let d = f.lattice().dim();
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let mut dj = derivative(f, j)?;
        for (v, (fv, av)) in dj
            .comp_mut(0)
            .iter_mut()
            .zip(f.comp(0).iter().zip(a.comp(j)))
        {
            *v += Complex64::new(0.0, av.re) * fv;
        }
        out.push(dj);
    }
    Ok(out)
}

/// Pointwise energy density
/// rho = 1/2 (|da|^2 + |e|^2 + |D f|^2 + |g|^2).
pub fn energy_density(data: &InitialDataSet) -> Result<Field> {
    let lat = data.lattice();
    let mut rho = Field::zeros(lat, FieldKind::RealScalar);
    let acc = rho.comp_mut(0);
    for (_, w) in curl_components(&data.a)? {
        for (o, v) in acc.iter_mut().zip(w.comp(0)) {
            o.re += v.norm_sqr();
        }
    }
    for c in 0..data.e.num_components() {
        for (o, v) in acc.iter_mut().zip(data.e.comp(c)) {
            o.re += v.norm_sqr();
        }
    }
    for dj in covariant_gradient(&data.f, &data.a)? {
        for (o, v) in acc.iter_mut().zip(dj.comp(0)) {
            o.re += v.norm_sqr();
        }
    }
    for (o, v) in acc.iter_mut().zip(data.g.comp(0)) {
        o.re += v.norm_sqr();
    }
    for o in acc.iter_mut() {
        o.re *= 0.5;
    }
    Ok(rho)
}

/// Local energy on a region.
pub fn energy(data: &InitialDataSet, region: &Region) -> Result<f64> {
    Ok(integrate_real(&energy_density(data)?, region))
}

/// The energy profile rho >= 0 with its box total.
#[derive(Debug, Clone)]
pub struct EnergyProfile {
    pub rho: Field,
    pub total: f64,
}

pub fn energy_profile(data: &InitialDataSet) -> Result<EnergyProfile> {
    let rho = energy_density(data)?;
    let total = integrate_box(&rho).re;
    Ok(EnergyProfile { rho, total })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeNormalization {
    None,
    /// Zero mean over the whole box.
    ZeroMean,
}

/// A gauge transformation chi acting by Gamma_chi[a,e,f,g] =
/// [a - d chi, e, e^{i chi} f, e^{i chi} g].
#[derive(Debug, Clone)]
pub struct GaugeTransform {
    pub chi: Field,
    pub normalization: GaugeNormalization,
}

impl GaugeTransform {
    pub fn new(chi: Field) -> GaugeTransform {
        assert_eq!(chi.num_components(), 1);
        GaugeTransform { chi, normalization: GaugeNormalization::None }
    }

    pub fn constant(lattice: &Lattice, c: f64) -> GaugeTransform {
        GaugeTransform::new(Field::from_fn(lattice, |_| c))
    }

    /// The G^2 semi-norm ||d chi||_4 + ||d^2 chi||_2.
    pub fn g2_seminorm(&self) -> Result<f64> {
        let grads = gradient(&self.chi)?;
        let d = self.chi.lattice().dim();
        let mut sup4 = 0.0;
        let mut l2_second = 0.0;
        for (j, gj) in grads.iter().enumerate() {
            sup4 += gj.lp_norm(4.0).powi(4);
            for k in j..d {
                let g2 = derivative(gj, k)?;
                let w = if k == j { 1.0 } else { 2.0 };
                l2_second += w * g2.l2_norm().powi(2);
            }
        }
        Ok(sup4.powf(0.25) + l2_second.sqrt())
    }
}

/// Apply Gamma_chi to a data set (spatial chi).
pub fn gauge_apply(chi: &GaugeTransform, data: &InitialDataSet) -> Result<InitialDataSet> {
    let grads = gradient(&chi.chi)?;
    let mut a = data.a.clone();
    for (j, gj) in grads.iter().enumerate() {
        for (v, w) in a.comp_mut(j).iter_mut().zip(gj.comp(0)) {
            *v -= w.re;
        }
    }
    let f = data.f.mul_phase(&chi.chi);
    let g = data.g.mul_phase(&chi.chi);
    Ok(InitialDataSet { a, e: data.e.clone(), f, g })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoulombReport {
    pub div_before: f64,
    pub div_after: f64,
    pub g2_seminorm: f64,
    pub a_h1: f64,
    /// Measured constant in ||chi||_G2 <= C ||a||_H1dot.
    pub constant: f64,
}

/// Project to the global Coulomb gauge: chi = (-Delta)^{-1} div a, so that
/// a' = a - d chi is divergence-free; returns the transformed data, the
/// gauge, and the measured bound.
pub fn coulomb_project(data: &InitialDataSet) -> Result<(InitialDataSet, GaugeTransform, CoulombReport)> {
    let div_a = divergence(&data.a)?;
    // chi = -(-Delta)^{-1} div a, so Delta chi = div a and div(a - d chi) = 0
    let chi_field = inv_laplacian(&div_a).field.scale(-1.0);
    let mut chi = GaugeTransform::new(chi_field);
    chi.normalization = GaugeNormalization::ZeroMean;
    let out = gauge_apply(&chi, data)?;
    let div_after = divergence(&out.a)?.l2_norm();
    let g2 = chi.g2_seminorm()?;
    let mut a_h1 = 0.0;
    for j in 0..data.a.num_components() {
        for gj in gradient(&data.a.component_field(j))? {
            a_h1 += gj.l2_norm().powi(2);
        }
    }
    let a_h1 = a_h1.sqrt();
    let report = CoulombReport {
        div_before: div_a.l2_norm(),
        div_after,
        g2_seminorm: g2,
        a_h1,
        constant: if a_h1 > 0.0 { g2 / a_h1 } else { 0.0 },
    };
    Ok((out, chi, report))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepairReport {
    pub defect_before: f64,
    pub defect_mean: f64,
    pub residual_after: f64,
}

/// Repair the Gauss constraint by the gradient correction
/// e_j = e_raw_j + (-Delta)^{-1} d_j (div e_raw - Im(f conj g)).
///
/// On the torus a nonzero mean of the defect cannot be repaired by any
/// periodic field (divergence theorem); it is reported, and exceeding
/// `mean_threshold` (relative to the defect scale) is an error.
pub fn gauss_repair(
    a: Field,
    e_raw: Field,
    f: Field,
    g: Field,
    mean_threshold: f64,
) -> Result<(InitialDataSet, RepairReport)> {
    let div_e = divergence(&e_raw)?;
    let rho = charge_density(&f, &g);
    let defect = div_e.sub(&rho);
    let defect_mean = defect.mean().re;
    let scale = (defect.l2_norm() + rho.l2_norm() + e_raw.l2_norm()) / e_raw.lattice().volume().sqrt();
    if defect_mean.abs() > mean_threshold * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NetCharge { mean: defect_mean, threshold: mean_threshold * scale });
    }
    // e <- e_raw - grad (-Delta)^{-1} defect; div then picks up the mean-free
    // part of the defect with the right sign to cancel it.
    let u = inv_laplacian(&defect).field;
    let grads = gradient(&u)?;
    let mut e = e_raw;
    for (j, gj) in grads.iter().enumerate() {
        for (v, w) in e.comp_mut(j).iter_mut().zip(gj.comp(0)) {
            *v += w.re;
        }
    }
    let data = InitialDataSet::new(a, e, f, g);
    let (_, stats) = gauss_residual(&data)?;
    Ok((
        data,
        RepairReport { defect_before: defect.l2_norm(), defect_mean, residual_after: stats.l2 },
    ))
}

/// The H^1 data norm
/// sup_j ||(a_j, e_j)||_{(H1dot ∩ L4) x L2} + ||(f, g)||_{(H1dot ∩ L4) x L2},
/// evaluated with masked rectangle-rule quadratures (restriction-infimum
/// norms are replaced by masked norms throughout).
pub fn h1_norm_masked(data: &InitialDataSet, mask: &[bool]) -> Result<f64> {
    let d = data.lattice().dim();
    let mut sup = 0.0f64;
    for j in 0..d {
        let aj = data.a.component_field(j);
        let ej = data.e.component_field(j);
        let v = h1dot_l4_masked(&aj, mask)? + ej.l2_norm_masked(mask);
        sup = sup.max(v);
    }
    let fg = h1dot_l4_masked(&data.f, mask)? + data.g.l2_norm_masked(mask);
    Ok(sup + fg)
}

pub fn h1_norm(data: &InitialDataSet) -> Result<f64> {
    let mask = vec![true; data.lattice().spatial_points()];
    h1_norm_masked(data, &mask)
}

fn h1dot_l4_masked(u: &Field, mask: &[bool]) -> Result<f64> {
    let mut h1 = 0.0;
    for gj in gradient(u)? {
        h1 += gj.l2_norm_masked(mask).powi(2);
    }
    Ok(h1.sqrt() + u.lp_norm_masked(4.0, mask))
}

/// The printed H^0 semi-norm ||a||_2 + ||f||_2 (e and g carry no weight in
/// the paper's definition; the asymmetry is intentional).
pub fn h0_seminorm(data: &InitialDataSet) -> f64 {
    data.a.l2_norm() + data.f.l2_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use std::f64::consts::PI;

    fn lat() -> Lattice {
        Lattice::spatial(2, 64, 16.0)
    }

    #[test]
    fn zero_data_zero_residual_zero_energy() {
        let data = InitialDataSet::zeros(&lat());
        let (_, stats) = gauss_residual(&data).unwrap();
        assert_eq!(stats.l2, 0.0);
        assert_eq!(energy(&data, &Region::whole(&lat())).unwrap(), 0.0);
    }

    #[test]
    fn residual_equals_div_e_for_zero_matter() {
        let l = lat();
        let k = 2.0 * PI / l.box_len();
        let mut data = InitialDataSet::zeros(&l);
        data.e = Field::vector_from_fn(&l, |x| vec![(k * x[0]).sin(), (k * x[1]).cos()]);
        let (r, _) = gauss_residual(&data).unwrap();
        let div_e = divergence(&data.e).unwrap();
        assert!(r.sub(&div_e).l2_norm() < 1e-14);
    }

    #[test]
    fn single_mode_energy_value() {
        // a = e = g = 0, f = sin(2 pi x1 / L): energy = 1/2 (2 pi/L)^2 L^d / 2
        let l = lat();
        let k = 2.0 * PI / l.box_len();
        let mut data = InitialDataSet::zeros(&l);
        data.f = Field::from_fn_complex(&l, |x| Complex64::new((k * x[0]).sin(), 0.0));
        let got = energy(&data, &Region::whole(&l)).unwrap();
        let want = 0.5 * k * k * l.volume() / 2.0;
        assert!((got - want).abs() < 1e-10 * want, "got={got} want={want}");
    }

    #[test]
    fn gauge_group_law_and_inverse() {
        let l = lat();
        let data = synth::random_admissible(&l, 7, 4.0, 1.0).unwrap();
        let chi1 = GaugeTransform::new(synth::random_scalar(&l, 11, 3.0, 0.7));
        let chi2 = GaugeTransform::new(synth::random_scalar(&l, 12, 3.0, 0.5));
        // inverse
        let fwd = gauge_apply(&chi1, &data).unwrap();
        let back = gauge_apply(
            &GaugeTransform::new(chi1.chi.scale(-1.0)),
            &fwd,
        )
        .unwrap();
        assert!(back.a.sub(&data.a).sup_norm() < 1e-13);
        assert!(back.f.sub(&data.f).sup_norm() < 1e-13);
        // group law
        let lhs = gauge_apply(&chi1, &gauge_apply(&chi2, &data).unwrap()).unwrap();
        let sum = GaugeTransform::new(chi1.chi.add(&chi2.chi));
        let rhs = gauge_apply(&sum, &data).unwrap();
        assert!(lhs.a.sub(&rhs.a).sup_norm() < 1e-12);
        assert!(lhs.f.sub(&rhs.f).sup_norm() < 1e-12);
        assert!(lhs.g.sub(&rhs.g).sup_norm() < 1e-12);
    }

    #[test]
    fn constant_gauge_only_rotates_phase() {
        let l = lat();
        let data = synth::random_admissible(&l, 3, 4.0, 1.0).unwrap();
        let chi = GaugeTransform::constant(&l, 0.7);
        let out = gauge_apply(&chi, &data).unwrap();
        assert!(out.a.sub(&data.a).sup_norm() < 1e-13);
        let rot = data.f.map(|v| v * Complex64::new(0.0, 0.7).exp());
        assert!(out.f.sub(&rot).sup_norm() < 1e-13);
    }

    #[test]
    fn gauge_invariance_of_energy_and_residual() {
        let l = lat();
        let data = synth::random_admissible(&l, 21, 3.0, 1.0).unwrap();
        let chi = GaugeTransform::new(synth::random_scalar(&l, 22, 2.0, 0.8));
        let shifted = gauge_apply(&chi, &data).unwrap();
        let e0 = energy(&data, &Region::whole(&l)).unwrap();
        let e1 = energy(&shifted, &Region::whole(&l)).unwrap();
        assert!((e0 - e1).abs() < 1e-10 * e0, "e0={e0} e1={e1}");
        // pointwise densities agree
        let r0 = energy_density(&data).unwrap();
        let r1 = energy_density(&shifted).unwrap();
        assert!(r0.sub(&r1).sup_norm() < 1e-10 * r0.sup_norm());
        let (_, s0) = gauss_residual(&data).unwrap();
        let (_, s1) = gauss_residual(&shifted).unwrap();
        assert!((s0.l2 - s1.l2).abs() < 1e-12 * s0.scale.max(1.0));
    }

    #[test]
    fn coulomb_annihilates_gradients_and_is_idempotent() {
        let l = lat();
        // pure gradient a = d psi
        let psi = synth::random_scalar(&l, 5, 3.0, 1.0);
        let grads = gradient(&psi).unwrap();
        let mut data = InitialDataSet::zeros(&l);
        for (j, gj) in grads.iter().enumerate() {
            data.a.comp_mut(j).copy_from_slice(gj.comp(0));
        }
        let (out, _, report) = coulomb_project(&data).unwrap();
        assert!(out.a.l2_norm() < 1e-10 * data.a.l2_norm().max(1e-30));
        assert!(report.div_after < 1e-12 * report.div_before.max(1e-30));

        // random a: idempotence and curl preservation
        let data2 = synth::random_admissible(&l, 31, 4.0, 1.0).unwrap();
        let (once, _, _) = coulomb_project(&data2).unwrap();
        let (twice, chi2, _) = coulomb_project(&once).unwrap();
        assert!(twice.a.sub(&once.a).sup_norm() < 1e-11 * once.a.sup_norm().max(1e-30));
        assert!(chi2.chi.l2_norm() < 1e-10 * once.a.l2_norm().max(1e-30));
        let c0 = curl_components(&data2.a).unwrap();
        let c1 = curl_components(&once.a).unwrap();
        for ((_, w0), (_, w1)) in c0.iter().zip(&c1) {
            assert!(w0.sub(w1).l2_norm() < 1e-10 * w0.l2_norm().max(1e-30));
        }
    }

    #[test]
    fn repair_fixes_consistent_data_and_rejects_net_charge() {
        let l = lat();
        // consistent input passes through unchanged
        let data = synth::random_admissible(&l, 41, 4.0, 1.0).unwrap();
        let (repaired, report) = gauss_repair(
            data.a.clone(),
            data.e.clone(),
            data.f.clone(),
            data.g.clone(),
            1e-8,
        )
        .unwrap();
        assert!(repaired.e.sub(&data.e).sup_norm() < 1e-11 * data.e.sup_norm().max(1e-30));
        let scale = data.e.l2_norm() + data.f.lp_norm(4.0) * data.g.l2_norm();
        assert!(report.residual_after < 1e-10 * scale);

        // f, g with nonzero net Im(f conj g): obstruction reported
        let f = Field::from_fn_complex(&l, |x| {
            let r2 = (x[0] - 8.0).powi(2) + (x[1] - 8.0).powi(2);
            Complex64::new((-r2).exp(), 0.0)
        });
        let g = f.map(|v| v * Complex64::new(0.0, -1.0));
        let e = Field::zeros(&l, FieldKind::RealVector);
        let a = Field::zeros(&l, FieldKind::RealVector);
        assert!(matches!(
            gauss_repair(a, e, f, g, 1e-8),
            Err(Error::NetCharge { .. })
        ));
    }

    #[test]
    fn repaired_zero_e_with_balanced_charges() {
        let l = lat();
        // f, g compactly supported with cancelling charge densities
        let bump = |x: &[f64], c: (f64, f64)| {
            let r2 = (x[0] - c.0).powi(2) + (x[1] - c.1).powi(2);
            (-r2).exp()
        };
        // f covers both bumps; g's phase flips between them, so
        // Im(f conj g) = -(b1^2 - b2^2) integrates to zero exactly
        let f = Field::from_fn_complex(&l, |x| {
            Complex64::new(bump(x, (5.0, 8.0)) + bump(x, (11.0, 8.0)), 0.0)
        });
        let g = Field::from_fn_complex(&l, |x| {
            Complex64::new(0.0, bump(x, (5.0, 8.0)) - bump(x, (11.0, 8.0)))
        });
        let (data, _) = gauss_repair(
            Field::zeros(&l, FieldKind::RealVector),
            Field::zeros(&l, FieldKind::RealVector),
            f,
            g,
            1e-6,
        )
        .unwrap();
        let (_, stats) = gauss_residual(&data).unwrap();
        assert!(stats.relative() < 1e-10, "rel={}", stats.relative());
    }
}
