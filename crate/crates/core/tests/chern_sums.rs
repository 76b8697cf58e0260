use std::f64::consts::PI;

use cavity_bands::topology::{chern_from_frames, BandFrames, KGrid, GAP_TOL};
use cavity_bands::{EffectiveParams, PlaneWaveBasis};

fn cherns(gamma: f64, b: f64, theta: f64, sets: &[(usize, usize)]) -> Vec<i64> {
    let p = EffectiveParams::from_gamma(gamma, b, theta).unwrap();
    let frames = BandFrames::compute_sets(&p, sets, KGrid::new(12).unwrap(), &PlaneWaveBasis::new(4).unwrap()).unwrap();
    frames
        .iter()
        .map(|f| {
            let r = chern_from_frames(f, GAP_TOL).unwrap();
            assert!(r.valid, "{:?} not isolated", f.band_set);
            r.chern
        })
        .collect()
}

#[test]
fn chern_numbers_add_over_band_groups() {
    for theta in [0.0, 0.5] {
        let c = cherns(0.1, 2.0 * PI, theta, &[(1, 1), (2, 3), (1, 3)]);
        assert_eq!(c, vec![1, 2, 3], "θ={theta}");
    }
}

#[test]
fn zero_field_bands_are_trivial() {
    assert_eq!(cherns(0.1, 0.0, 0.0, &[(1, 1), (2, 3)]), vec![0, 0]);
}

#[test]
fn compute_sets_matches_single_set() {
    let p = EffectiveParams::from_gamma(0.1, 2.0 * PI, 0.0).unwrap();
    let (grid, pw) = (KGrid::new(6).unwrap(), PlaneWaveBasis::new(3).unwrap());
    let many = BandFrames::compute_sets(&p, &[(1, 1), (2, 3)], grid, &pw).unwrap();
    let one = BandFrames::compute(&p, (2, 3), grid, &pw).unwrap();
    assert_eq!(many[1].gaps, one.gaps);
    assert_eq!(
        chern_from_frames(&many[1], GAP_TOL).unwrap().raw,
        chern_from_frames(&one, GAP_TOL).unwrap().raw
    );
}
