#[test]
fn dbg_sectors() {
    use mkg_core::lattice::*;
    use mkg_core::region::*;
    use mkg_core::divsolve::*;
    use mkg_core::bridge::*;
    use mkg_core::spectral::divergence;
    let l = Lattice::spatial(2, 128, 16.0);
    let c = [8.0, 8.0];
    let h0 = l.spacing();
    let (ri, ro) = (1.5 - 2.0*h0, 3.0 + 2.0*h0);
    let sectors = build_sectors(&l, &c, ri, ro, 8).unwrap();
    let psi = Field::from_fn(&l, |x| {
        let r = l.distance(x, &c);
        if r <= 1.5 || r >= 3.0 { return 0.0; }
        let u = (r - 1.5) / 1.5;
        bump_profile((2.0 * u - 1.0).abs())
    });
    let mut h = mkg_core::spectral::laplacian(&psi);
    let ann = Region::annulus(&l, &c, ri, ro);
    for (i, keep) in ann.mask().iter().enumerate() { if !keep { h.comp_mut(0)[i] = num_complex::Complex64::new(0.0,0.0); } }
    let stray: f64 = h.comp(0).iter().map(|v| v.re).sum::<f64>() * l.cell_volume();
    eprintln!("stray mass {stray:e}, h l2 {:.3}", h.l2_norm());
    let m01 = sectors[0].double.intersect_mask(&sectors[1].double);
    let outside: Vec<bool> = m01.iter().map(|m| !m).collect();
    let dist = mask_distance(&l, &outside);
    let (mut best, mut arg) = (0.0, 0usize);
    for (i, &mm) in m01.iter().enumerate() { if mm && dist[i] > best { best = dist[i]; arg = i; } }
    let fixb = mkg_core::synth::unit_mass_bump(&l, &l.position(arg), 0.75*best);
    let h = h.sub(&fixb.scale(stray));
    let pieces = sector_split(&h, &l, &sectors, 1e-6).unwrap();
    let q = RayQuadrature::for_dim(2);
    for (k, (p, geo)) in pieces.iter().zip(&sectors).enumerate() {
        let v = bogovskii(p, &geo.bump, &geo.double, q).unwrap();
        let div = divergence(&v).unwrap();
        let rel = div.sub(p).l2_norm() / p.l2_norm().max(1e-30);
        let (bc, br) = (&geo.bump.center, geo.bump.radius);
        eprintln!("sector {k}: piece l2={:.3} rel={rel:.2e} ball r={br:.2} at {:?}", p.l2_norm(), bc);
    }
}
