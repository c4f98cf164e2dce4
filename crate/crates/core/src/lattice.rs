//! Periodic lattices and sampled fields.
//!
//! A `Lattice` is a d-dimensional periodic grid, d in {2,3,4}, with `n`
//! points per spatial axis (a power of two) and physical side `box_len`.
//! A space-time lattice carries one extra (slowest-varying) time axis with
//! its own point count and extent. Samples are stored row-major with the
//! time axis first, one contiguous buffer per component.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub n_t: usize,
    pub t_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    n: usize,
    box_len: f64,
    time: Option<TimeAxis>,
}

impl Lattice {
    pub fn spatial(dim: usize, n: usize, box_len: f64) -> Lattice {
        assert!((2..=4).contains(&dim), "dim must be 2, 3 or 4");
        assert!(n.is_power_of_two(), "n must be a power of two");
        assert!(box_len > 0.0);
        Lattice { dim, n, box_len, time: None }
    }

    pub fn space_time(dim: usize, n: usize, box_len: f64, n_t: usize, t_len: f64) -> Lattice {
        assert!(n_t.is_power_of_two(), "n_t must be a power of two");
        assert!(t_len > 0.0);
        let mut l = Lattice::spatial(dim, n, box_len);
        l.time = Some(TimeAxis { n_t, t_len });
        l
    }

    /// Drop the time axis (lattice of a single slice).
    pub fn slice_lattice(&self) -> Lattice {
        Lattice { time: None, ..self.clone() }
    }

    pub fn with_resolution(&self, n: usize) -> Lattice {
        let mut l = self.clone();
        assert!(n.is_power_of_two());
        l.n = n;
        l
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    /// Grid spacing h = L/n. Exact in the stored representation: h is derived,
    /// never stored.
    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    pub fn time(&self) -> Option<TimeAxis> {
        self.time
    }

    pub fn is_space_time(&self) -> bool {
        self.time.is_some()
    }

    pub fn dt(&self) -> f64 {
        let t = self.time.expect("dt on a spatial lattice");
        t.t_len / t.n_t as f64
    }

    /// Number of storage axes (time axis included when present).
    pub fn num_axes(&self) -> usize {
        self.dim + self.time.is_some() as usize
    }

    /// Storage shape, slowest axis first (time, then x1..xd).
    pub fn shape(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.num_axes());
        if let Some(t) = self.time {
            s.push(t.n_t);
        }
        s.extend(std::iter::repeat(self.n).take(self.dim));
        s
    }

    pub fn num_points(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn spatial_points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn num_slices(&self) -> usize {
        self.time.map_or(1, |t| t.n_t)
    }

    /// Cell volume h^d (spatial).
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.box_len.powi(self.dim as i32)
    }

    /// Map a public axis index (0..dim spatial, ==dim time) to the storage
    /// axis.
    pub fn storage_axis(&self, axis: usize) -> Result<usize> {
        let max = self.num_axes();
        if axis < self.dim {
            Ok(axis + self.time.is_some() as usize)
        } else if axis == self.dim && self.time.is_some() {
            Ok(0)
        } else {
            Err(Error::AxisOutOfRange { axis, max })
        }
    }

    /// Physical length of a storage axis.
    pub fn axis_len(&self, storage_axis: usize) -> f64 {
        if self.time.is_some() && storage_axis == 0 {
            self.time.unwrap().t_len
        } else {
            self.box_len
        }
    }

    /// FFT frequencies for one storage axis, standard order. The unpaired
    /// Nyquist mode is treated as unresolved and reported as 0, so that the
    /// whole spectral calculus (derivatives, inverse Laplacian, projections)
    /// is built from one consistent frequency assignment and identities like
    /// div grad (-Delta)^{-1} = id - mean hold exactly on the grid.
    pub fn frequencies(&self, storage_axis: usize) -> Vec<f64> {
        let np = self.shape()[storage_axis];
        let len = self.axis_len(storage_axis);
        let base = 2.0 * std::f64::consts::PI / len;
        (0..np)
            .map(|i| {
                if i == np / 2 {
                    return 0.0;
                }
                let m = if i < np / 2 { i as i64 } else { i as i64 - np as i64 };
                base * m as f64
            })
            .collect()
    }

    /// Dyadic range [k_min, k_max] of the spatial frequency grid:
    /// k_min = ceil(log2(2 pi / L)), k_max = floor(log2(pi n / L)).
    pub fn dyadic_range(&self) -> (i32, i32) {
        let lo = 2.0 * std::f64::consts::PI / self.box_len;
        let hi = std::f64::consts::PI * self.n as f64 / self.box_len;
        (lo.log2().ceil() as i32, hi.log2().floor() as i32)
    }

    /// Dyadic range of the time frequency grid.
    pub fn dyadic_range_time(&self) -> (i32, i32) {
        let t = self.time.expect("time dyadic range on a spatial lattice");
        let lo = 2.0 * std::f64::consts::PI / t.t_len;
        let hi = std::f64::consts::PI * t.n_t as f64 / t.t_len;
        (lo.log2().ceil() as i32, hi.log2().floor() as i32)
    }

    /// Spatial coordinates of the point with the given spatial flat index.
    pub fn position(&self, spatial_flat: usize) -> Vec<f64> {
        let h = self.spacing();
        let mut out = vec![0.0; self.dim];
        let mut rem = spatial_flat;
        for j in (0..self.dim).rev() {
            out[j] = (rem % self.n) as f64 * h;
            rem /= self.n;
        }
        out
    }

    /// Flat spatial index from per-axis integer coordinates (wrapped).
    pub fn spatial_index(&self, coords: &[usize]) -> usize {
        let mut idx = 0usize;
        for &c in coords {
            idx = idx * self.n + (c % self.n);
        }
        idx
    }

    /// Signed displacement with minimum image convention.
    pub fn min_image(&self, d: f64) -> f64 {
        d - self.box_len * (d / self.box_len).round()
    }

    /// Periodic distance between two points.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = self.min_image(x - y);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Wrap a physical coordinate into [0, L).
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.box_len;
        let mut y = x % l;
        if y < 0.0 {
            y += l;
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    RealScalar,
    ComplexScalar,
    RealVector,
    ComplexVector,
}

impl FieldKind {
    pub fn components(&self, dim: usize) -> usize {
        match self {
            FieldKind::RealScalar | FieldKind::ComplexScalar => 1,
            FieldKind::RealVector | FieldKind::ComplexVector => dim,
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, FieldKind::RealScalar | FieldKind::RealVector)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::RealScalar => "real-scalar",
            FieldKind::ComplexScalar => "complex-scalar",
            FieldKind::RealVector => "real-vector",
            FieldKind::ComplexVector => "complex-vector",
        }
    }
}

/// A sampled field on a lattice: one contiguous complex buffer per component.
/// Real kinds keep imaginary parts at zero; spectral round trips re-realize.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    lattice: Lattice,
    kind: FieldKind,
    comps: Vec<Vec<Complex64>>,
}

impl Field {
    pub fn zeros(lattice: &Lattice, kind: FieldKind) -> Field {
        let nc = kind.components(lattice.dim());
        let len = lattice.num_points();
        Field {
            lattice: lattice.clone(),
            kind,
            comps: vec![vec![Complex64::new(0.0, 0.0); len]; nc],
        }
    }

    /// Real scalar field from a function of the spatial position.
    pub fn from_fn(lattice: &Lattice, f: impl Fn(&[f64]) -> f64) -> Field {
        let mut out = Field::zeros(lattice, FieldKind::RealScalar);
        let sp = lattice.spatial_points();
        let slices = lattice.num_slices();
        for s in 0..slices {
            for i in 0..sp {
                let x = lattice.position(i);
                out.comps[0][s * sp + i] = Complex64::new(f(&x), 0.0);
            }
        }
        out
    }

    /// Complex scalar field from a function of the spatial position.
    pub fn from_fn_complex(lattice: &Lattice, f: impl Fn(&[f64]) -> Complex64) -> Field {
        let mut out = Field::zeros(lattice, FieldKind::ComplexScalar);
        let sp = lattice.spatial_points();
        for s in 0..lattice.num_slices() {
            for i in 0..sp {
                let x = lattice.position(i);
                out.comps[0][s * sp + i] = f(&x);
            }
        }
        out
    }

    /// Real vector field from a function returning all components.
    pub fn vector_from_fn(lattice: &Lattice, f: impl Fn(&[f64]) -> Vec<f64>) -> Field {
        let mut out = Field::zeros(lattice, FieldKind::RealVector);
        let sp = lattice.spatial_points();
        for s in 0..lattice.num_slices() {
            for i in 0..sp {
                let x = lattice.position(i);
                let v = f(&x);
                for (c, val) in v.iter().enumerate() {
                    out.comps[c][s * sp + i] = Complex64::new(*val, 0.0);
                }
            }
        }
        out
    }

    pub fn from_components(lattice: &Lattice, kind: FieldKind, comps: Vec<Vec<Complex64>>) -> Field {
        assert_eq!(comps.len(), kind.components(lattice.dim()));
        for c in &comps {
            assert_eq!(c.len(), lattice.num_points());
        }
        Field { lattice: lattice.clone(), kind, comps }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut Vec<Complex64> {
        &mut self.comps[c]
    }

    /// Borrow the single component of a scalar field.
    pub fn scalar(&self) -> &[Complex64] {
        assert_eq!(self.comps.len(), 1, "scalar() on a vector field");
        &self.comps[0]
    }

    /// Extract one component as a scalar field.
    pub fn component_field(&self, c: usize) -> Field {
        let kind = if self.kind.is_real() { FieldKind::RealScalar } else { FieldKind::ComplexScalar };
        Field { lattice: self.lattice.clone(), kind, comps: vec![self.comps[c].clone()] }
    }

    pub fn same_lattice(&self, other: &Field) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch(format!(
                "{:?} vs {:?}",
                self.lattice.shape(),
                other.lattice.shape()
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Field {
        let mut out = self.clone();
        for c in &mut out.comps {
            for v in c.iter_mut() {
                *v = f(*v);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a - b)
    }

    pub fn axpy(&mut self, alpha: f64, other: &Field) {
        for (c, oc) in self.comps.iter_mut().zip(&other.comps) {
            for (v, w) in c.iter_mut().zip(oc) {
                *v += alpha * w;
            }
        }
    }

    fn zip(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
        self.same_lattice(other).expect("lattice mismatch");
        assert_eq!(self.comps.len(), other.comps.len());
        let mut out = self.clone();
        if other.kind != self.kind && !other.kind.is_real() {
            out.kind = other.kind;
        }
        for (c, oc) in out.comps.iter_mut().zip(&other.comps) {
            for (v, w) in c.iter_mut().zip(oc) {
                *v = f(*v, *w);
            }
        }
        out
    }

    /// Pointwise multiply every component by a real scalar field (a cutoff).
    pub fn mul_scalar(&self, w: &Field) -> Field {
        assert_eq!(w.num_components(), 1);
        let ws = &w.comps[0];
        let mut out = self.clone();
        for c in &mut out.comps {
            for (v, m) in c.iter_mut().zip(ws) {
                *v *= m.re;
            }
        }
        out
    }

    /// Pointwise multiply a complex field by `e^{i chi}` for a real field chi.
    pub fn mul_phase(&self, chi: &Field) -> Field {
        assert_eq!(chi.num_components(), 1);
        let mut out = self.clone();
        out.kind = match self.kind {
            FieldKind::RealScalar | FieldKind::ComplexScalar => FieldKind::ComplexScalar,
            _ => FieldKind::ComplexVector,
        };
        for c in &mut out.comps {
            for (v, m) in c.iter_mut().zip(&chi.comps[0]) {
                let phase = Complex64::new(0.0, m.re).exp();
                *v *= phase;
            }
        }
        out
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    /// Force imaginary parts to zero (after a spectral round trip on a real
    /// kind).
    pub fn realize(&mut self) {
        for c in &mut self.comps {
            for v in c.iter_mut() {
                v.im = 0.0;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    /// Global L2 norm with the rectangle-rule weight h^d (and dt on
    /// space-time lattices).
    pub fn l2_norm(&self) -> f64 {
        let w = self.quad_weight();
        let mut s = 0.0;
        for c in &self.comps {
            for v in c {
                s += v.norm_sqr();
            }
        }
        (s * w).sqrt()
    }

    /// Global Lp norm, p finite.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let w = self.quad_weight();
        let np = self.lattice.num_points();
        let mut s = 0.0;
        for i in 0..np {
            let mut m2 = 0.0;
            for c in &self.comps {
                m2 += c[i].norm_sqr();
            }
            s += m2.sqrt().powf(p);
        }
        (s * w).powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        let np = self.lattice.num_points();
        let mut best: f64 = 0.0;
        for i in 0..np {
            let mut m2 = 0.0;
            for c in &self.comps {
                m2 += c[i].norm_sqr();
            }
            best = best.max(m2);
        }
        best.sqrt()
    }

    /// L2 norm over spatial points selected by `mask` (space-time fields sum
    /// the same spatial mask on every slice).
    pub fn l2_norm_masked(&self, mask: &[bool]) -> f64 {
        let sp = self.lattice.spatial_points();
        assert_eq!(mask.len(), sp);
        let w = self.quad_weight();
        let mut s = 0.0;
        for c in &self.comps {
            for (i, v) in c.iter().enumerate() {
                if mask[i % sp] {
                    s += v.norm_sqr();
                }
            }
        }
        (s * w).sqrt()
    }

    pub fn lp_norm_masked(&self, p: f64, mask: &[bool]) -> f64 {
        let sp = self.lattice.spatial_points();
        let np = self.lattice.num_points();
        let w = self.quad_weight();
        let mut s = 0.0;
        for i in 0..np {
            if !mask[i % sp] {
                continue;
            }
            let mut m2 = 0.0;
            for c in &self.comps {
                m2 += c[i].norm_sqr();
            }
            s += m2.sqrt().powf(p);
        }
        (s * w).powf(1.0 / p)
    }

    pub fn sup_norm_masked(&self, mask: &[bool]) -> f64 {
        let sp = self.lattice.spatial_points();
        let np = self.lattice.num_points();
        let mut best: f64 = 0.0;
        for i in 0..np {
            if !mask[i % sp] {
                continue;
            }
            let mut m2 = 0.0;
            for c in &self.comps {
                m2 += c[i].norm_sqr();
            }
            best = best.max(m2);
        }
        best.sqrt()
    }

    /// Quadrature weight of one grid point: h^d, times dt for space-time.
    pub fn quad_weight(&self) -> f64 {
        let mut w = self.lattice.cell_volume();
        if self.lattice.is_space_time() {
            w *= self.lattice.dt();
        }
        w
    }

    /// Mean of a scalar field (per the whole lattice).
    pub fn mean(&self) -> Complex64 {
        assert_eq!(self.comps.len(), 1);
        let n = self.lattice.num_points() as f64;
        self.comps[0].iter().sum::<Complex64>() / n
    }

    /// View of one time slice of a space-time scalar buffer.
    pub fn slice_range(&self, s: usize) -> std::ops::Range<usize> {
        let sp = self.lattice.spatial_points();
        s * sp..(s + 1) * sp
    }

    /// Extract time slice `s` as a field on the slice lattice.
    pub fn time_slice(&self, s: usize) -> Field {
        let r = self.slice_range(s);
        let comps = self.comps.iter().map(|c| c[r.clone()].to_vec()).collect();
        Field { lattice: self.lattice.slice_lattice(), kind: self.kind, comps }
    }
}

/// Max pointwise modulus of the difference on masked spatial points.
pub fn max_abs_diff_masked(a: &Field, b: &Field, mask: &[bool]) -> f64 {
    let sp = a.lattice().spatial_points();
    let mut best: f64 = 0.0;
    for c in 0..a.num_components() {
        for (i, (x, y)) in a.comp(c).iter().zip(b.comp(c)).enumerate() {
            if mask[i % sp] {
                best = best.max((x - y).norm());
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_derived_quantities() {
        let l = Lattice::spatial(2, 256, 16.0);
        assert_eq!(l.spacing(), 16.0 / 256.0);
        assert_eq!(l.spacing() * l.n() as f64, l.box_len());
        let (kmin, kmax) = l.dyadic_range();
        // 2 pi / 16 = 0.3927 -> ceil(log2) = -1; pi * 256 / 16 = 50.27 -> floor(log2) = 5
        assert_eq!((kmin, kmax), (-1, 5));
    }

    #[test]
    fn space_time_shape_and_axes() {
        let l = Lattice::space_time(2, 64, 16.0, 32, 8.0);
        assert_eq!(l.shape(), vec![32, 64, 64]);
        assert_eq!(l.storage_axis(0).unwrap(), 1); // x1
        assert_eq!(l.storage_axis(2).unwrap(), 0); // time
        assert!(l.storage_axis(3).is_err());
    }

    #[test]
    fn min_image_wraps() {
        let l = Lattice::spatial(2, 16, 8.0);
        assert_eq!(l.min_image(7.0), -1.0);
        assert_eq!(l.min_image(-7.0), 1.0);
        assert_eq!(l.min_image(3.0), 3.0);
    }

    #[test]
    fn field_norm_matches_hand_value() {
        let l = Lattice::spatial(2, 8, 4.0);
        let f = Field::from_fn(&l, |_| 2.0);
        // ||2||_2 over a box of volume 16 = sqrt(4 * 16) = 8
        assert!((f.l2_norm() - 8.0).abs() < 1e-13);
        assert!((f.lp_norm(4.0) - (16.0f64).powf(0.25) * 2.0).abs() < 1e-12);
    }
}
