//! Geometric regions on a periodic lattice, with cell-center masks.

use serde::{Deserialize, Serialize};

use crate::lattice::Lattice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_inner: f64, r_outer: f64 },
    Cube { corner: Vec<f64>, side: f64 },
    /// Annular sector: the annulus restricted to the cone of half-angle
    /// `half_angle` around `axis`.
    Sector { center: Vec<f64>, r_inner: f64, r_outer: f64, axis: Vec<f64>, half_angle: f64 },
    Complement(Box<Shape>),
    WholeBox,
}

impl Shape {
    pub fn contains(&self, lat: &Lattice, x: &[f64]) -> bool {
        match self {
            Shape::Ball { center, radius } => lat.distance(x, center) < *radius,
            Shape::Annulus { center, r_inner, r_outer } => {
                let r = lat.distance(x, center);
                *r_inner <= r && r < *r_outer
            }
            Shape::Cube { corner, side } => {
                // a cube may exceed the box half-width; compare against the
                // displacement wrapped to [0, L)
                x.iter().zip(corner).all(|(xi, ci)| {
                    let d = lat.wrap(xi - ci);
                    d < *side
                })
            }
            Shape::Sector { center, r_inner, r_outer, axis, half_angle } => {
                let mut d = vec![0.0; x.len()];
                for (i, (xi, ci)) in x.iter().zip(center).enumerate() {
                    d[i] = lat.min_image(xi - ci);
                }
                let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r < *r_inner || r >= *r_outer {
                    return false;
                }
                if r == 0.0 {
                    return false;
                }
                let dot: f64 = d.iter().zip(axis).map(|(a, b)| a * b).sum();
                let cos = (dot / r).clamp(-1.0, 1.0);
                cos.acos() <= *half_angle
            }
            Shape::Complement(inner) => !inner.contains(lat, x),
            Shape::WholeBox => true,
        }
    }

    /// Dilation `c K` about the center of mass of the shape.
    pub fn dilate(&self, c: f64) -> Shape {
        match self {
            Shape::Ball { center, radius } => {
                Shape::Ball { center: center.clone(), radius: c * radius }
            }
            Shape::Annulus { center, r_inner, r_outer } => Shape::Annulus {
                center: center.clone(),
                r_inner: c * r_inner,
                r_outer: c * r_outer,
            },
            Shape::Cube { corner, side } => {
                let half = side / 2.0;
                let new_side = c * side;
                let corner = corner.iter().map(|v| v + half - new_side / 2.0).collect();
                Shape::Cube { corner, side: new_side }
            }
            Shape::Sector { center, r_inner, r_outer, axis, half_angle } => Shape::Sector {
                center: center.clone(),
                r_inner: c * r_inner,
                r_outer: c * r_outer,
                axis: axis.clone(),
                half_angle: *half_angle,
            },
            Shape::Complement(inner) => Shape::Complement(Box::new(inner.dilate(1.0 / c))),
            Shape::WholeBox => Shape::WholeBox,
        }
    }

    /// Sector with the cone angle scaled (radii unchanged): the `2A_k`
    /// doubling used by the annulus decomposition.
    pub fn widen_sector(&self, factor: f64) -> Shape {
        match self {
            Shape::Sector { center, r_inner, r_outer, axis, half_angle } => Shape::Sector {
                center: center.clone(),
                r_inner: *r_inner,
                r_outer: *r_outer,
                axis: axis.clone(),
                half_angle: (half_angle * factor).min(std::f64::consts::PI),
            },
            _ => panic!("widen_sector on a non-sector shape"),
        }
    }
}

/// A shape plus its boolean cell-center mask on a specific lattice.
#[derive(Debug, Clone)]
pub struct Region {
    shape: Shape,
    lattice: Lattice,
    mask: Vec<bool>,
}

impl Region {
    pub fn new(lattice: &Lattice, shape: Shape) -> Region {
        let lat = lattice.slice_lattice();
        let sp = lat.spatial_points();
        let mut mask = vec![false; sp];
        for (i, m) in mask.iter_mut().enumerate() {
            let x = lat.position(i);
            *m = shape.contains(&lat, &x);
        }
        Region { shape, lattice: lat, mask }
    }

    pub fn ball(lattice: &Lattice, center: &[f64], radius: f64) -> Region {
        Region::new(lattice, Shape::Ball { center: center.to_vec(), radius })
    }

    pub fn annulus(lattice: &Lattice, center: &[f64], r_inner: f64, r_outer: f64) -> Region {
        Region::new(lattice, Shape::Annulus { center: center.to_vec(), r_inner, r_outer })
    }

    pub fn cube(lattice: &Lattice, corner: &[f64], side: f64) -> Region {
        Region::new(lattice, Shape::Cube { corner: corner.to_vec(), side })
    }

    pub fn whole(lattice: &Lattice) -> Region {
        Region::new(lattice, Shape::WholeBox)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn num_cells(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn contains_index(&self, spatial_flat: usize) -> bool {
        self.mask[spatial_flat]
    }

    pub fn dilate(&self, c: f64) -> Region {
        Region::new(&self.lattice, self.shape.dilate(c))
    }

    pub fn complement(&self) -> Region {
        let shape = Shape::Complement(Box::new(self.shape.clone()));
        let mask = self.mask.iter().map(|m| !m).collect();
        Region { shape, lattice: self.lattice.clone(), mask }
    }

    pub fn intersect_mask(&self, other: &Region) -> Vec<bool> {
        self.mask.iter().zip(&other.mask).map(|(a, b)| a & b).collect()
    }

    pub fn is_subset_of(&self, outer: &Region) -> bool {
        self.mask.iter().zip(&outer.mask).all(|(i, o)| !i || *o)
    }
}

/// Neighbor offsets (axis steps only) used by mask morphology.
fn axis_neighbors(lat: &Lattice, idx: usize) -> Vec<usize> {
    let d = lat.dim();
    let n = lat.n();
    let mut coords = vec![0usize; d];
    let mut rem = idx;
    for j in (0..d).rev() {
        coords[j] = rem % n;
        rem /= n;
    }
    let mut out = Vec::with_capacity(2 * d);
    for j in 0..d {
        for step in [-1i64, 1] {
            let mut c = coords.clone();
            c[j] = ((c[j] as i64 + step).rem_euclid(n as i64)) as usize;
            out.push(lat.spatial_index(&c));
        }
    }
    out
}

/// Erode a mask by `cells` axis steps.
pub fn mask_erode(lat: &Lattice, mask: &[bool], cells: usize) -> Vec<bool> {
    let mut cur = mask.to_vec();
    for _ in 0..cells {
        let mut next = cur.clone();
        for i in 0..cur.len() {
            if cur[i] && axis_neighbors(lat, i).iter().any(|&nb| !cur[nb]) {
                next[i] = false;
            }
        }
        cur = next;
    }
    cur
}

/// Dilate a mask by `cells` axis steps.
pub fn mask_dilate(lat: &Lattice, mask: &[bool], cells: usize) -> Vec<bool> {
    let mut cur = mask.to_vec();
    for _ in 0..cells {
        let mut next = cur.clone();
        for i in 0..cur.len() {
            if !cur[i] && axis_neighbors(lat, i).iter().any(|&nb| cur[nb]) {
                next[i] = true;
            }
        }
        cur = next;
    }
    cur
}

/// Approximate Euclidean distance (in physical units) from every cell to a
/// source set, by Dijkstra over the full neighbor stencil.
pub fn mask_distance(lat: &Lattice, source: &[bool]) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let d = lat.dim();
    let n = lat.n();
    let h = lat.spacing();
    let sp = lat.spatial_points();
    let mut dist = vec![f64::INFINITY; sp];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    for i in 0..sp {
        if source[i] {
            dist[i] = 0.0;
            heap.push(Reverse((0, i)));
        }
    }
    // full 3^d - 1 stencil with Euclidean step costs
    let mut offsets: Vec<(Vec<i64>, f64)> = Vec::new();
    let mut stack = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for prefix in stack {
            for step in [-1i64, 0, 1] {
                let mut p: Vec<i64> = prefix.clone();
                p.push(step);
                next.push(p);
            }
        }
        stack = next;
    }
    for off in stack {
        let norm2: i64 = off.iter().map(|v| v * v).sum();
        if norm2 > 0 {
            offsets.push((off.clone(), (norm2 as f64).sqrt() * h));
        }
    }

    let key = |x: f64| (x * 1e12) as u64;
    while let Some(Reverse((dk, i))) = heap.pop() {
        if dk > key(dist[i]) {
            continue;
        }
        let mut coords = vec![0usize; d];
        let mut rem = i;
        for j in (0..d).rev() {
            coords[j] = rem % n;
            rem /= n;
        }
        for (off, cost) in &offsets {
            let mut c = coords.clone();
            for j in 0..d {
                c[j] = ((c[j] as i64 + off[j]).rem_euclid(n as i64)) as usize;
            }
            let ni = lat.spatial_index(&c);
            let nd = dist[i] + cost;
            if nd < dist[ni] {
                dist[ni] = nd;
                heap.push(Reverse((key(nd), ni)));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_mask_area_converges() {
        // area of a unit disk via cell counting, n = 128 vs analytic
        let lat = Lattice::spatial(2, 128, 8.0);
        let r = Region::ball(&lat, &[4.0, 4.0], 1.0);
        let area = r.num_cells() as f64 * lat.cell_volume();
        assert!((area - std::f64::consts::PI).abs() < 0.05);
    }

    #[test]
    fn dilation_preserves_center() {
        let lat = Lattice::spatial(2, 64, 8.0);
        let c = Region::cube(&lat, &[3.0, 3.0], 2.0);
        let d = c.dilate(2.0);
        match d.shape() {
            Shape::Cube { corner, side } => {
                assert_eq!(*side, 4.0);
                assert_eq!(corner[0], 2.0);
            }
            _ => panic!(),
        }
        assert!(c.is_subset_of(&d));
    }

    #[test]
    fn annulus_between_balls() {
        let lat = Lattice::spatial(2, 64, 8.0);
        let ann = Region::annulus(&lat, &[4.0, 4.0], 1.0, 2.0);
        let inner = Region::ball(&lat, &[4.0, 4.0], 1.0);
        let outer = Region::ball(&lat, &[4.0, 4.0], 2.0);
        assert!(ann.is_subset_of(&outer));
        assert_eq!(ann.intersect_mask(&inner).iter().filter(|&&m| m).count(), 0);
    }

    #[test]
    fn erode_then_subset() {
        let lat = Lattice::spatial(2, 64, 8.0);
        let b = Region::ball(&lat, &[4.0, 4.0], 2.0);
        let eroded = mask_erode(&lat, b.mask(), 2);
        for i in 0..eroded.len() {
            assert!(!eroded[i] || b.mask()[i]);
        }
        assert!(eroded.iter().filter(|&&m| m).count() < b.num_cells());
    }

    #[test]
    fn distance_from_point() {
        let lat = Lattice::spatial(2, 64, 8.0);
        let mut src = vec![false; lat.spatial_points()];
        src[lat.spatial_index(&[32, 32])] = true;
        let dist = mask_distance(&lat, &src);
        let i = lat.spatial_index(&[36, 32]);
        let expect = 4.0 * lat.spacing();
        assert!((dist[i] - expect).abs() < 0.3 * expect);
    }
}
