//! Seeded synthetic fields and data sets for tests, probes and the CLI
//! generator: band-limited random fields and exactly admissible MKG data.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bridge::{bump_profile, plateau};
use crate::data::{charge_density, InitialDataSet};
use crate::error::Result;
use crate::fft;
use crate::lattice::{Field, FieldKind, Lattice};
use crate::spectral::{gradient, inv_laplacian};

/// Band-limited random real scalar: Gaussian spectrum with a smooth cap at
/// physical frequency `k_cut`, normalized to the requested sup amplitude.
pub fn random_scalar(lat: &Lattice, seed: u64, k_cut: f64, amplitude: f64) -> Field {
    let mut f = random_complex_scalar(lat, seed, k_cut, amplitude);
    // Hermitian-symmetrize by taking the real part, then rescale.
    for v in f.comp_mut(0).iter_mut() {
        *v = Complex64::new(v.re, 0.0);
    }
    let sup = f.sup_norm();
    if sup > 0.0 {
        f = f.scale(amplitude / sup);
    }
    let mut out = Field::zeros(lat, FieldKind::RealScalar);
    out.comp_mut(0).copy_from_slice(f.comp(0));
    out
}

/// Band-limited random complex scalar with sup norm `amplitude`.
pub fn random_complex_scalar(lat: &Lattice, seed: u64, k_cut: f64, amplitude: f64) -> Field {
    let shape = lat.shape();
    let naxes = shape.len();
    let freqs: Vec<Vec<f64>> = (0..naxes).map(|a| lat.frequencies(a)).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let np = lat.num_points();
    let mut buf = vec![Complex64::new(0.0, 0.0); np];
    for (flat, v) in buf.iter_mut().enumerate() {
        let mut rem = flat;
        let mut w2 = 0.0;
        let mut at_nyquist = false;
        for a in (0..naxes).rev() {
            let i = rem % shape[a];
            rem /= shape[a];
            if i == shape[a] / 2 {
                at_nyquist = true;
            }
            let w = freqs[a][i];
            w2 += w * w;
        }
        let w = w2.sqrt();
        // smooth spectral envelope: flat to k_cut/2, bridge to zero at k_cut;
        // unresolved Nyquist planes stay empty
        let env = if at_nyquist { 0.0 } else { plateau(w / k_cut) };
        if env > 0.0 {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            *v = Complex64::new(re, im) * env;
        }
    }
    fft::inverse(&mut buf, &shape);
    let mut f = Field::from_components(lat, FieldKind::ComplexScalar, vec![buf]);
    let sup = f.sup_norm();
    if sup > 0.0 {
        f = f.scale(amplitude / sup);
    }
    f
}

/// Band-limited random real vector field.
pub fn random_vector(lat: &Lattice, seed: u64, k_cut: f64, amplitude: f64) -> Field {
    let d = lat.dim();
    let comps: Vec<Vec<Complex64>> = (0..d)
        .map(|j| {
            random_scalar(lat, seed.wrapping_add(1000 + j as u64), k_cut, amplitude)
                .comp(0)
                .to_vec()
        })
        .collect();
    Field::from_components(lat, FieldKind::RealVector, comps)
}

/// Random data set satisfying the Gauss constraint to spectral accuracy:
/// a, f band-limited random; g adjusted so the total charge vanishes
/// exactly; e = (solenoidal random) + gradient part solving the constraint.
pub fn random_admissible(lat: &Lattice, seed: u64, k_cut: f64, amplitude: f64) -> Result<InitialDataSet> {
    let a = random_vector(lat, seed, k_cut, amplitude);
    let f = random_complex_scalar(lat, seed.wrapping_add(17), k_cut, amplitude);
    let mut g = random_complex_scalar(lat, seed.wrapping_add(29), k_cut, amplitude);
    // remove the net charge: g <- g - i lambda f makes
    // Im(f conj g') = Im(f conj g) - lambda |f|^2
    let rho = charge_density(&f, &g);
    let total_rho: f64 = rho.comp(0).iter().map(|v| v.re).sum();
    let f2: f64 = f.comp(0).iter().map(|v| v.norm_sqr()).sum();
    if f2 > 0.0 {
        let lambda = total_rho / f2;
        for (gv, fv) in g.comp_mut(0).iter_mut().zip(f.comp(0)) {
            *gv -= Complex64::new(0.0, -lambda) * fv;
        }
    }
    let rho = charge_density(&f, &g);

    // e: divergence-free random part plus the gradient part with div = rho
    let raw = random_vector(lat, seed.wrapping_add(43), k_cut, amplitude);
    let div_raw = crate::spectral::divergence(&raw)?;
    let fix_raw = inv_laplacian(&div_raw).field;
    let mut e = raw.clone();
    for (j, gj) in gradient(&fix_raw)?.iter().enumerate() {
        for (v, w) in e.comp_mut(j).iter_mut().zip(gj.comp(0)) {
            *v += w.re; // raw - grad(Delta^{-1} div raw): solenoidal
        }
    }
    let u = inv_laplacian(&rho).field;
    for (j, gj) in gradient(&u)?.iter().enumerate() {
        for (v, w) in e.comp_mut(j).iter_mut().zip(gj.comp(0)) {
            *v -= w.re; // -grad (-Delta)^{-1} rho has divergence rho
        }
    }
    Ok(InitialDataSet::new(a, e, f, g))
}

/// Smooth normalized bump (unit L2 mass of zeta^2) supported in a ball.
pub fn unit_bump(lat: &Lattice, center: &[f64], radius: f64) -> Field {
    let c = center.to_vec();
    let mut z = Field::from_fn(lat, |x| {
        let r = lat.distance(x, &c);
        bump_profile(r / radius)
    });
    let norm = z.l2_norm();
    if norm > 0.0 {
        z = z.scale(1.0 / norm);
    }
    z
}

/// Smooth bump normalized to unit integral (mass 1).
pub fn unit_mass_bump(lat: &Lattice, center: &[f64], radius: f64) -> Field {
    let c = center.to_vec();
    let mut z = Field::from_fn(lat, |x| {
        let r = lat.distance(x, &c);
        bump_profile(r / radius)
    });
    let mass: f64 = z.comp(0).iter().map(|v| v.re).sum::<f64>() * lat.cell_volume();
    if mass != 0.0 {
        z = z.scale(1.0 / mass);
    }
    z
}

/// Named generator presets for the CLI and the covering tests. All presets
/// have g = 0 (zero charge density) and a = e = 0, so the constraint holds
/// exactly and the energy profile is 1/2 |df|^2.
pub fn preset(lat: &Lattice, name: &str, seed: u64) -> Result<InitialDataSet> {
    let l = lat.box_len();
    let c = l / 2.0;
    let mut data = InitialDataSet::zeros(lat);
    match name {
        "uniform" => {
            // energy spread over a central ball: a wide plateau bump
            let prof = unit_bump(lat, &vec![c; lat.dim()], 0.35 * l);
            data.f = complex_from_real(&prof.scale(3.0));
        }
        "two-bumps" => {
            let b1 = unit_bump(lat, &vec![c - 0.22 * l; lat.dim()], 0.08 * l);
            let b2 = unit_bump(lat, &vec![c + 0.22 * l; lat.dim()], 0.08 * l);
            data.f = complex_from_real(&b1.add(&b2).scale(2.0));
        }
        "ring" => {
            let center = vec![c; lat.dim()];
            let f = Field::from_fn(lat, |x| {
                let r = lat.distance(x, &center);
                let t = (r - 0.25 * l).abs() / (0.08 * l);
                plateau(t)
            });
            data.f = complex_from_real(&f.scale(2.5));
        }
        "random" => {
            return random_admissible(lat, seed, 4.0 * std::f64::consts::PI / l * 4.0, 1.0);
        }
        other => {
            return Err(crate::error::Error::Invalid(format!("unknown preset {other:?}")));
        }
    }
    Ok(data)
}

fn complex_from_real(f: &Field) -> Field {
    Field::from_components(f.lattice(), FieldKind::ComplexScalar, vec![f.comp(0).to_vec()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gauss_residual;

    #[test]
    fn admissible_data_is_admissible() {
        let lat = Lattice::spatial(2, 64, 16.0);
        let data = random_admissible(&lat, 1234, 3.0, 1.0).unwrap();
        let (_, stats) = gauss_residual(&data).unwrap();
        assert!(stats.relative() < 1e-11, "rel={}", stats.relative());
        assert!(data.is_finite());
    }

    #[test]
    fn deterministic_given_seed() {
        let lat = Lattice::spatial(2, 32, 8.0);
        let f1 = random_scalar(&lat, 99, 3.0, 1.0);
        let f2 = random_scalar(&lat, 99, 3.0, 1.0);
        assert_eq!(f1, f2);
        let f3 = random_scalar(&lat, 100, 3.0, 1.0);
        assert!(f1.sub(&f3).sup_norm() > 0.0);
    }

    #[test]
    fn unit_bump_l2_normalized() {
        let lat = Lattice::spatial(2, 128, 16.0);
        let z = unit_bump(&lat, &[8.0, 8.0], 1.5);
        assert!((z.l2_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn presets_are_admissible() {
        let lat = Lattice::spatial(2, 64, 16.0);
        for name in ["uniform", "two-bumps", "ring", "random"] {
            let data = preset(&lat, name, 7).unwrap();
            let (_, stats) = gauss_residual(&data).unwrap();
            assert!(stats.relative() < 1e-10, "{name}: {}", stats.relative());
        }
    }
}
