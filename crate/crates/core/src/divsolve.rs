//! Support-preserving solution operator for the divergence equation on
//! star-shaped domains, the annulus sector decomposition, and their
//! composition.
//!
//! The operator averages ray-transport solutions over a normalized bump
//! zeta supported in a ball B with respect to which the hull is star-shaped:
//!
//!   V_j[h](x) = - Int dy zeta(y) (x-y)^j Int_1^inf s^{d-1} h(y + s(x-y)) ds,
//!
//! which solves div V[h] = h - (Int h) zeta and is supported in the union of
//! convex hulls Conv({x} u B) over x in supp h. Writing y = x - rho w for a
//! unit direction w and t = (s-1) rho for the arc length beyond x turns the
//! double integral into
//!
//!   V_j(x) = - Int dw w_j sum_m C(d-1,m)
//!              [Int rho^{d-1-m} zeta(x - rho w) d rho] [Int t^m h(x + t w) dt],
//!
//! a smooth direction integral of two separated line integrals: the
//! |x-y|^{1-d} kernel singularity cancels against the polar Jacobian, so
//! plain product quadrature converges fast.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::bump_profile;
use crate::error::{Error, Result};
use crate::lattice::{Field, FieldKind, Lattice};
use crate::quad::{gauss_legendre, integrate_box, interpolate, sphere_quadrature, InterpKind};
use crate::region::Region;
use crate::synth::unit_mass_bump;

/// Quadrature configuration for the direction/line integrals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RayQuadrature {
    /// Resolution of the direction quadrature (see `sphere_quadrature`).
    pub omega_resolution: usize,
    /// Gauss-Legendre nodes per source-line panel.
    pub nodes_per_panel: usize,
    /// Source-line panel length in cells.
    pub panel_cells: f64,
    /// Cubic instead of multilinear sampling of the source along rays.
    pub cubic: bool,
}

impl RayQuadrature {
    pub fn for_dim(d: usize) -> RayQuadrature {
        match d {
            2 => RayQuadrature { omega_resolution: 24, nodes_per_panel: 6, panel_cells: 2.0, cubic: true },
            3 => RayQuadrature { omega_resolution: 10, nodes_per_panel: 5, panel_cells: 2.5, cubic: true },
            _ => RayQuadrature { omega_resolution: 6, nodes_per_panel: 4, panel_cells: 3.0, cubic: false },
        }
    }
}

impl Default for RayQuadrature {
    fn default() -> Self {
        RayQuadrature::for_dim(2)
    }
}

/// The normalized averaging bump: an analytic profile on a ball, scaled so
/// its continuum integral is 1.
#[derive(Debug, Clone)]
pub struct StarBump {
    pub center: Vec<f64>,
    pub radius: f64,
    amplitude: f64,
}

impl StarBump {
    pub fn new(lat: &Lattice, center: &[f64], radius: f64) -> StarBump {
        // normalize: Int zeta = amp * sigma_{d-1} Int_0^R profile(r/R) r^{d-1} dr
        let d = lat.dim();
        let (nodes, weights) = gauss_legendre(64);
        let mut radial = 0.0;
        for (t, w) in nodes.iter().zip(&weights) {
            let r = radius * 0.5 * (t + 1.0);
            radial += w * radius * 0.5 * bump_profile(r / radius) * r.powi(d as i32 - 1);
        }
        let total = crate::quad::sphere_area(d, 1.0) * radial;
        StarBump { center: center.to_vec(), radius, amplitude: 1.0 / total }
    }

    pub fn eval(&self, lat: &Lattice, y: &[f64]) -> f64 {
        let r = lat.distance(y, &self.center);
        self.amplitude * bump_profile(r / self.radius)
    }

    /// The bump sampled on the lattice (for diagnostics and mass checks).
    pub fn field(&self, lat: &Lattice) -> Field {
        let this = self.clone();
        let lat2 = lat.clone();
        Field::from_fn(lat, move |x| this.eval(&lat2, x))
    }
}

/// Bounding ball of a declared region (analytic where possible, mask-based
/// fallback). The quadrature geometry depends only on this ball, never on
/// the source samples, so the operator is exactly linear in the source.
fn region_ball(region: &Region) -> (Vec<f64>, f64) {
    use crate::region::Shape;
    let lat = region.lattice();
    match region.shape() {
        Shape::Ball { center, radius } => (center.clone(), *radius),
        Shape::Annulus { center, r_outer, .. } => (center.clone(), *r_outer),
        Shape::Sector { center, r_outer, .. } => (center.clone(), *r_outer),
        Shape::Cube { corner, side } => {
            let c: Vec<f64> = corner.iter().map(|v| v + side / 2.0).collect();
            (c, side / 2.0 * (lat.dim() as f64).sqrt())
        }
        _ => {
            let d = lat.dim();
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for (i, m) in region.mask().iter().enumerate() {
                if *m {
                    let p = lat.position(i);
                    for j in 0..d {
                        lo[j] = lo[j].min(p[j]);
                        hi[j] = hi[j].max(p[j]);
                    }
                }
            }
            let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let mut r2 = 0.0f64;
            for j in 0..d {
                r2 += (hi[j] - c[j]) * (hi[j] - c[j]);
            }
            (c, r2.sqrt())
        }
    }
}

/// Interval of u >= 0 on which p + u*dir lies in the ball (c, radius).
fn ray_ball_interval(p: &[f64], dir: &[f64], c: &[f64], radius: f64) -> Option<(f64, f64)> {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut cc = -radius * radius;
    for j in 0..p.len() {
        let dp = p[j] - c[j];
        a += dir[j] * dir[j];
        b += 2.0 * dir[j] * dp;
        cc += dp * dp;
    }
    if a == 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * cc;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let lo = ((-b - sq) / (2.0 * a)).max(0.0);
    let hi = (-b + sq) / (2.0 * a);
    if hi <= lo {
        None
    } else {
        Some((lo, hi))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// The Bogovskii operator: solve div v = h - (Int h) zeta with support
/// control. `bump` is the normalized averaging bump in a ball with respect
/// to which `hull` is star-shaped; h must be supported in the hull. The
/// result is exactly zero outside the hull's one-cell dilation (the rays
/// cannot meet the source there), and exactly linear in h.
pub fn bogovskii(h: &Field, bump: &StarBump, hull: &Region, quad: RayQuadrature) -> Result<Field> {
    let lat = h.lattice().clone();
    let d = lat.dim();
    assert_eq!(h.num_components(), 1, "bogovskii takes a scalar source");

    // support check: h must live inside the declared hull (one-cell margin)
    let grown = crate::region::mask_dilate(&lat, hull.mask(), 1);
    let floor = 1e-13 * h.sup_norm().max(f64::MIN_POSITIVE);
    let violations = h
        .comp(0)
        .iter()
        .enumerate()
        .filter(|(i, v)| v.norm() > floor && !grown[*i])
        .count();
    if violations > 0 {
        return Err(Error::SupportViolation { cells: violations });
    }

    let mut out = Field::zeros(&lat, FieldKind::RealVector);
    if h.sup_norm() == 0.0 {
        return Ok(out);
    }
    let (src_c, src_r) = region_ball(hull);
    let src_r = src_r + lat.spacing();

    // evaluation mask: hull plus margin (provably zero beyond)
    let eval_mask = crate::region::mask_dilate(&lat, hull.mask(), 2);
    let eval_pts: Vec<usize> = (0..lat.spatial_points()).filter(|&i| eval_mask[i]).collect();

    let dirs = sphere_quadrature(d, quad.omega_resolution);
    let (gl_nodes, gl_weights) = gauss_legendre(quad.nodes_per_panel);
    let (zeta_nodes, zeta_weights) = gauss_legendre(8);
    let zeta_panel = bump.radius / 6.0;
    let interp = if quad.cubic { InterpKind::Cubic } else { InterpKind::Linear };
    let panel_len = quad.panel_cells * lat.spacing();
    let binoms: Vec<f64> = (0..d).map(|m| binomial(d - 1, m)).collect();

    let results: Vec<(usize, Vec<f64>)> = eval_pts
        .par_iter()
        .map(|&ix| {
            let x = lat.position(ix);
            let mut acc = vec![0.0f64; d];
            let mut back = vec![0.0f64; d];
            let mut mz = vec![0.0f64; d];
            let mut mh = vec![0.0f64; d];
            for (w, wdir) in &dirs {
                // zeta moments along the backward ray x - rho w
                for j in 0..d {
                    back[j] = -w[j];
                }
                let Some((ra, rb)) = ray_ball_interval(&x, &back, &bump.center, bump.radius)
                else {
                    continue;
                };
                mz.iter_mut().for_each(|v| *v = 0.0);
                let mut y = vec![0.0; d];
                let mut za = ra;
                while za < rb {
                    let zb = (za + zeta_panel).min(rb);
                    let half = 0.5 * (zb - za);
                    let mid = 0.5 * (za + zb);
                    for (t, gw) in zeta_nodes.iter().zip(&zeta_weights) {
                        let rho = mid + half * t;
                        for j in 0..d {
                            y[j] = x[j] - rho * w[j];
                        }
                        let zv = bump.eval(&lat, &y);
                        if zv != 0.0 {
                            let base = gw * half * zv;
                            for p in 0..d {
                                // mz[p] accumulates rho^{d-1-p}
                                mz[p] += base * rho.powi((d - 1 - p) as i32);
                            }
                        }
                    }
                    za = zb;
                }
                if mz.iter().all(|v| *v == 0.0) {
                    continue;
                }
                // source moments along the forward ray x + t w
                let Some((ta, tb)) = ray_ball_interval(&x, w, &src_c, src_r) else {
                    continue;
                };
                mh.iter_mut().for_each(|v| *v = 0.0);
                let mut a = ta;
                let mut p = vec![0.0; d];
                while a < tb {
                    let b = (a + panel_len).min(tb);
                    let half = 0.5 * (b - a);
                    let mid = 0.5 * (a + b);
                    for (t, gw) in gl_nodes.iter().zip(&gl_weights) {
                        let tt = mid + half * t;
                        for j in 0..d {
                            p[j] = x[j] + tt * w[j];
                        }
                        let hv = interpolate(h, &p, interp)[0].re;
                        if hv != 0.0 {
                            let base = gw * half * hv;
                            for m in 0..d {
                                mh[m] += base * tt.powi(m as i32);
                            }
                        }
                    }
                    a = b;
                }
                let mut dot = 0.0;
                for m in 0..d {
                    dot += binoms[m] * mz[m] * mh[m];
                }
                if dot != 0.0 {
                    for j in 0..d {
                        acc[j] -= wdir * w[j] * dot;
                    }
                }
            }
            (ix, acc)
        })
        .collect();
    for (ix, acc) in results {
        for j in 0..d {
            out.comp_mut(j)[ix] = Complex64::new(acc[j], 0.0);
        }
    }
    Ok(out)
}

/// Geometry of one annulus sector: the base sector, its angular double, and
/// the star-center ball for the Bogovskii bump.
#[derive(Debug, Clone)]
pub struct SectorGeometry {
    pub sector: Region,
    pub double: Region,
    pub bump: StarBump,
    pub axis: Vec<f64>,
}

/// Unit directions for K sectors: uniform angles in d=2, a deterministic
/// repulsion-spread set in d >= 3, ordered so consecutive sectors overlap.
pub fn sector_axes(d: usize, k: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    if d == 2 {
        return (0..k)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / k as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
    }
    let mut dirs: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut v: Vec<f64> = (0..d)
                .map(|j| {
                    let t = ((i * d + j) as f64 + 0.5) * 0.754877666246693;
                    (t - t.floor()) * 2.0 - 1.0
                })
                .collect();
            normalize(&mut v);
            v
        })
        .collect();
    for _ in 0..400 {
        let snapshot = dirs.clone();
        for (i, v) in dirs.iter_mut().enumerate() {
            for (j, dj) in snapshot.iter().enumerate() {
                if i == j {
                    continue;
                }
                let dot: f64 = v.iter().zip(dj).map(|(a, b)| a * b).sum();
                let scale = 0.05 * (1.0 + dot).max(0.0);
                for m in 0..d {
                    v[m] -= scale * dj[m];
                }
            }
            normalize(v);
        }
    }
    let mut ordered = vec![dirs.swap_remove(0)];
    while !dirs.is_empty() {
        let last = ordered.last().unwrap();
        let (best, _) = dirs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let dot: f64 = last.iter().zip(v).map(|(a, b)| a * b).sum();
                (i, dot)
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        ordered.push(dirs.swap_remove(best));
    }
    ordered
}

fn normalize(v: &mut [f64]) {
    let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    } else {
        v[0] = 1.0;
    }
}

/// Build K overlapping sectors covering an annulus, with doubles and
/// star-center bumps, and verify star-shapedness empirically.
pub fn build_sectors(
    lat: &Lattice,
    center: &[f64],
    r_inner: f64,
    r_outer: f64,
    k: usize,
) -> Result<Vec<SectorGeometry>> {
    use std::f64::consts::PI;
    if k < 3 {
        return Err(Error::Invalid("need at least 3 sectors".into()));
    }
    let d = lat.dim();
    let axes = sector_axes(d, k);
    // coverage half-angle: every annulus direction must be within `base` of
    // some axis
    let mut worst: f64 = 0.0;
    for (dir, _) in sphere_quadrature(d, 24) {
        let mut best = PI;
        for ax in &axes {
            let dot: f64 = dir.iter().zip(ax).map(|(a, b)| a * b).sum();
            best = best.min(dot.clamp(-1.0, 1.0).acos());
        }
        worst = worst.max(best);
    }
    let base = (worst * 1.15).max(if d == 2 { PI / k as f64 } else { 0.0 });
    let mut out = Vec::with_capacity(k);
    for ax in axes {
        let sector = Region::new(
            lat,
            crate::region::Shape::Sector {
                center: center.to_vec(),
                r_inner,
                r_outer,
                axis: ax.clone(),
                half_angle: base,
            },
        );
        let double = Region::new(lat, sector.shape().widen_sector(2.0));
        // star ball: slightly outward of mid-radius along the axis
        let r_mid = r_inner + 0.6 * (r_outer - r_inner);
        let ball_r = (0.25 * (r_outer - r_inner)).min(0.5 * r_mid * base.sin());
        let ball_c: Vec<f64> = center
            .iter()
            .zip(&ax)
            .map(|(c, a)| lat.wrap(c + r_mid * a))
            .collect();
        star_shape_check(lat, &double, &ball_c, ball_r)?;
        let bump = StarBump::new(lat, &ball_c, ball_r);
        out.push(SectorGeometry { sector, double, bump, axis: ax });
    }
    Ok(out)
}

/// Sampled verification that the region is star-shaped with respect to the
/// ball: segments from region sample points to ball points must stay inside
/// (with a one-cell geometric slack for the mask discretization).
fn star_shape_check(lat: &Lattice, region: &Region, ball_c: &[f64], ball_r: f64) -> Result<()> {
    let d = lat.dim();
    let slack = lat.spacing();
    let grown = match region.shape() {
        crate::region::Shape::Sector { center, r_inner, r_outer, axis, half_angle } => {
            crate::region::Shape::Sector {
                center: center.clone(),
                r_inner: (r_inner - slack).max(0.0),
                r_outer: r_outer + slack,
                axis: axis.clone(),
                half_angle: (half_angle + slack / r_inner).min(std::f64::consts::PI),
            }
        }
        other => other.clone(),
    };
    let mask = region.mask();
    let sp = lat.spatial_points();
    let stride = (sp / 600).max(1);
    for i in (0..sp).step_by(stride) {
        if !mask[i] {
            continue;
        }
        let x = lat.position(i);
        let mut bpts = vec![ball_c.to_vec()];
        for j in 0..d {
            for sgn in [-1.0, 1.0] {
                let mut p = ball_c.to_vec();
                p[j] += sgn * 0.7 * ball_r;
                bpts.push(p);
            }
        }
        for b in &bpts {
            for step in 1..20 {
                let t = step as f64 / 20.0;
                let mut z = vec![0.0; d];
                for j in 0..d {
                    let dx = lat.min_image(x[j] - b[j]);
                    z[j] = lat.wrap(b[j] + t * dx);
                }
                if !grown.contains(lat, &z) {
                    return Err(Error::Invalid(format!(
                        "sector not star-shaped w.r.t. its ball (segment exits near {z:?}); \
                         increase the sector count"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Split a mean-zero source supported in the annulus into per-sector pieces
/// h_k with zero integral and supp h_k inside the doubled sector:
/// h_k = eta_k h - zeta_k Int(sum_{j<=k} eta_j h) + zeta_{k-1} Int(sum_{j<k} eta_j h),
/// the last piece closing the telescope.
pub fn sector_split(
    h: &Field,
    lat: &Lattice,
    sectors: &[SectorGeometry],
    mass_tol: f64,
) -> Result<Vec<Field>> {
    let k = sectors.len();
    let total = integrate_box(h).re;
    let scale = h.lp_norm(1.0).max(f64::MIN_POSITIVE);
    if total.abs() > mass_tol * scale {
        return Err(Error::NonzeroMass { integral: total, tol: mass_tol * scale });
    }
    // partition of unity eta_k subordinate to the doubles: smooth angular
    // bumps around each axis normalized pointwise
    let d = lat.dim();
    let mut bumps: Vec<Field> = Vec::with_capacity(k);
    for geo in sectors {
        let (ax, half, center) = match geo.double.shape() {
            crate::region::Shape::Sector { axis, half_angle, center, .. } => {
                (axis.clone(), *half_angle, center.clone())
            }
            _ => unreachable!(),
        };
        let b = Field::from_fn(lat, |x| {
            let mut disp = vec![0.0; d];
            for j in 0..d {
                disp[j] = lat.min_image(x[j] - center[j]);
            }
            let r: f64 = disp.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r == 0.0 {
                return 0.0;
            }
            let dot: f64 = disp.iter().zip(&ax).map(|(a, b)| a * b).sum();
            let ang = (dot / r).clamp(-1.0, 1.0).acos();
            // 1 well inside the double, 0 at its angular edge
            crate::bridge::bridge((half - ang) / (0.35 * half))
        });
        bumps.push(b);
    }
    let sp = lat.spatial_points();
    let mut etas: Vec<Field> = bumps.clone();
    for i in 0..sp {
        let mut s = 0.0;
        for b in &bumps {
            s += b.comp(0)[i].re;
        }
        if s > 0.0 {
            for (eb, b) in etas.iter_mut().zip(&bumps) {
                eb.comp_mut(0)[i] = Complex64::new(b.comp(0)[i].re / s, 0.0);
            }
        }
    }

    // unit-mass bumps in consecutive overlaps 2A_k n 2A_{k+1}
    let mut overlap_bumps: Vec<Field> = Vec::with_capacity(k - 1);
    for i in 0..k - 1 {
        let m = sectors[i].double.intersect_mask(&sectors[i + 1].double);
        overlap_bumps.push(overlap_unit_bump(lat, &m)?);
    }

    let etah: Vec<Field> = etas.iter().map(|e| h.mul_scalar(e)).collect();
    let masses: Vec<f64> = etah.iter().map(|f| integrate_box(f).re).collect();
    let mut pieces = Vec::with_capacity(k);
    let mut prefix = 0.0;
    for i in 0..k {
        let mut piece = etah[i].clone();
        if i < k - 1 {
            let run = prefix + masses[i];
            piece = piece.sub(&overlap_bumps[i].scale(run));
            if i > 0 {
                piece = piece.add(&overlap_bumps[i - 1].scale(prefix));
            }
        } else {
            piece = piece.add(&overlap_bumps[i - 1].scale(prefix));
        }
        prefix += masses[i];
        pieces.push(piece);
    }
    Ok(pieces)
}

/// Unit-mass smooth bump supported inside a mask: a bump around the cell
/// farthest from the mask boundary, radius three quarters that distance.
fn overlap_unit_bump(lat: &Lattice, mask: &[bool]) -> Result<Field> {
    let outside: Vec<bool> = mask.iter().map(|m| !m).collect();
    let dist = crate::region::mask_distance(lat, &outside);
    let mut best = 0.0;
    let mut arg = None;
    for (i, &m) in mask.iter().enumerate() {
        if m && dist[i] > best {
            best = dist[i];
            arg = Some(i);
        }
    }
    let Some(arg) = arg else {
        return Err(Error::Invalid("empty sector overlap".into()));
    };
    if best < 1.5 * lat.spacing() {
        return Err(Error::Invalid(
            "sector overlap too thin for a balancing bump; increase resolution or widen sectors"
                .into(),
        ));
    }
    let center = lat.position(arg);
    Ok(unit_mass_bump(lat, &center, 0.75 * best))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivSolveReport {
    pub sectors: usize,
    pub source_l2: f64,
    pub residual_l2: f64,
    pub relative_residual: f64,
    /// Largest |v| found outside the annulus grown by one cell.
    pub support_leak: f64,
    /// Measured ||v||_2 / ||h||_{4/3}.
    pub l2_over_l43: f64,
}

/// Solve div v = h on an annulus with support preserved, by sector
/// splitting plus per-sector Bogovskii solves.
pub fn solve_div_annulus(
    h: &Field,
    lat: &Lattice,
    center: &[f64],
    r_inner: f64,
    r_outer: f64,
    k: usize,
    quad: RayQuadrature,
    mass_tol: f64,
) -> Result<(Field, DivSolveReport)> {
    let sectors = build_sectors(lat, center, r_inner, r_outer, k)?;
    // clip stray spectral tails to the declared support (sources built with
    // spectral operators are never exactly compact); the clipped mass is
    // balanced through the first overlap bump so the split stays mean-free
    let annulus = Region::annulus(lat, center, r_inner, r_outer);
    let clip = annulus.mask().to_vec();
    let mut h = h.clone();
    for (i, keep) in clip.iter().enumerate() {
        if !keep {
            h.comp_mut(0)[i] = Complex64::new(0.0, 0.0);
        }
    }
    let stray = integrate_box(&h).re;
    if stray != 0.0 {
        let fix = overlap_unit_bump(lat, &sectors[0].double.intersect_mask(&sectors[1].double))?;
        h = h.sub(&fix.scale(stray));
    }
    let h = &h;
    let pieces = sector_split(h, lat, &sectors, mass_tol)?;
    let mut v = Field::zeros(lat, FieldKind::RealVector);
    for (piece, geo) in pieces.iter().zip(&sectors) {
        let part = bogovskii(piece, &geo.bump, &geo.double, quad)?;
        v = v.add(&part);
    }
    let div = crate::spectral::divergence(&v)?;
    let resid = div.sub(h);
    let grown = crate::region::mask_dilate(lat, annulus.mask(), 3);
    let mut leak = 0.0f64;
    for i in 0..lat.spatial_points() {
        if !grown[i] {
            for c in 0..v.num_components() {
                leak = leak.max(v.comp(c)[i].norm());
            }
        }
    }
    let h_l2 = h.l2_norm();
    let report = DivSolveReport {
        sectors: k,
        source_l2: h_l2,
        residual_l2: resid.l2_norm(),
        relative_residual: resid.l2_norm() / h_l2.max(f64::MIN_POSITIVE),
        support_leak: leak,
        l2_over_l43: v.l2_norm() / h.lp_norm(4.0 / 3.0).max(f64::MIN_POSITIVE),
    };
    Ok((v, report))
}
