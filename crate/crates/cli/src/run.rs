use cavity_bands::analysis::{
    default_directions, dirac_fit, gap_scan, symmetry_check, GapSearch, DEFAULT_RADII, K0,
};
use cavity_bands::full_model::{j_convergence_study, FitStatus, ProductBasis, DEFAULT_DIM_CAP};
use cavity_bands::hamiltonian::bands;
use cavity_bands::linalg::cluster_degeneracies;
use cavity_bands::topology::{berry_curvature_map, chern_number, parent_overlap_check, KGrid, GAP_TOL};
use cavity_bands::{BlochMomentum, EffectiveParams, PlaneWaveBasis, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, Resolved};
use crate::output::{num, Csv, Product};

pub fn run(r: &Resolved) -> Result<Product> {
    match r.command {
        Command::Bands => run_bands(r),
        Command::GapScan => run_gap_scan(r),
        Command::Chern => run_chern(r),
        Command::Curvature => run_curvature(r),
        Command::Dirac => run_dirac(r),
        Command::Jstudy => run_jstudy(r),
        Command::Overlap => run_overlap(r),
        Command::Symmetry => run_symmetry(r),
    }
}

fn basis(r: &Resolved) -> Result<PlaneWaveBasis> {
    PlaneWaveBasis::new(r.config.n.unwrap_or(2))
}

fn effective(r: &Resolved) -> Result<EffectiveParams> {
    let b = r.b();
    EffectiveParams::new(r.crystal_potential().heat_smooth(b)?, b, r.config.theta.unwrap_or(0.0))
}

fn ok(body: String, summary: Value) -> Result<Product> {
    Ok(Product { body, summary, failure: None })
}

fn run_bands(r: &Resolved) -> Result<Product> {
    let (p, pw) = (effective(r)?, basis(r)?);
    let (g, count) = (r.config.grid.unwrap_or(1), r.config.count.unwrap_or(1));
    let ks: Vec<BlochMomentum> =
        (0..g * g).map(|i| BlochMomentum::new((i / g) as f64 / g as f64, (i % g) as f64 / g as f64)).collect();
    let energies: Vec<Vec<f64>> = ks.par_iter().map(|&k| bands(&p, k, &pw, count)).collect::<Result<_>>()?;
    let labels: Vec<String> = (1..=count).map(|j| format!("E{j}")).collect();
    let mut header = vec!["k1", "k2"];
    header.extend(labels.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for (k, e) in ks.iter().zip(&energies) {
        csv.row([num(k.k1), num(k.k2)].into_iter().chain(e.iter().map(|&x| num(x))));
    }
    ok(csv.into_string(), json!({ "points": ks.len(), "bands": count }))
}

fn run_gap_scan(r: &Resolved) -> Result<Product> {
    let c = &r.config;
    let (lo, hi, steps) = (c.b_min.unwrap_or(0.0), c.b_max.unwrap_or(0.0), c.steps.unwrap_or(1));
    let b_values: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let search = GapSearch { coarse: c.grid.unwrap_or(16), ..GapSearch::default() };
    let scan = gap_scan(c.v0.unwrap_or(0.0), &b_values, search, &basis(r)?)?;
    let mut csv = Csv::new(&["B", "g_numeric", "g_perturbative", "k1_min", "k2_min"]);
    for i in 0..b_values.len() {
        let k = scan.k_argmin[i];
        csv.row([num(b_values[i]), num(scan.g_numeric[i]), num(scan.g_perturbative[i]), num(k.k1), num(k.k2)]);
    }
    let worst = scan.g_numeric.iter().zip(&scan.g_perturbative).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ok(csv.into_string(), json!({ "fields": b_values.len(), "max_abs_deviation": worst }))
}

fn band_range(r: &Resolved) -> (usize, usize) {
    let set = r.config.band_set.clone().unwrap_or_else(|| vec![1]);
    (set[0], *set.last().unwrap_or(&set[0]))
}

fn run_chern(r: &Resolved) -> Result<Product> {
    let band_set = band_range(r);
    let ng = r.config.ng.unwrap_or(4);
    let report = chern_number(&effective(r)?, band_set, KGrid::new(ng)?, &basis(r)?)?;
    let body = json!({
        "chern": report.chern,
        "raw": report.raw,
        "min_gap": report.min_gap,
        "valid": report.valid,
        "band_set": [band_set.0, band_set.1],
        "Ng": ng,
        "max_sewing_loss": report.max_sewing_loss,
    });
    let failure = (!report.valid).then(|| format!("gap closed: min gap {:e} <= {GAP_TOL:e}", report.min_gap));
    Ok(Product { body: serde_json::to_string_pretty(&body).expect("json") + "\n", summary: body, failure })
}

fn run_curvature(r: &Resolved) -> Result<Product> {
    let band = band_range(r).0;
    let map = berry_curvature_map(&effective(r)?, band, KGrid::new(r.config.ng.unwrap_or(4))?, &basis(r)?)?;
    let mut csv = Csv::new(&["k1", "k2", "curvature"]);
    for ((k1, k2), v) in map.centers.iter().zip(&map.values) {
        csv.row([num(*k1), num(*k2), num(*v)]);
    }
    let summary = json!({
        "integral": map.integral(),
        "chern": map.report.chern,
        "mass_near_integer_lines": map.mass_fraction_near_lines(0.0, 0.1),
        "mass_near_half_integer_lines": map.mass_fraction_near_lines(0.5, 0.1),
    });
    ok(csv.into_string(), summary)
}

fn run_dirac(r: &Resolved) -> Result<Product> {
    let set = r.config.band_set.clone().unwrap_or_else(|| vec![1, 2]);
    let fit = dirac_fit(&effective(r)?, (set[0], set[1]), &DEFAULT_RADII, &default_directions(), &basis(r)?)?;
    let body = json!({
        "E0": fit.e0,
        "pair": [fit.pair.0, fit.pair.1],
        "directional_slopes": fit.directional_slopes.iter().map(|(d, s)| json!({ "direction": d, "slope": s })).collect::<Vec<_>>(),
        "quadratic_form": fit.quadratic_form,
        "eigenvalues": fit.eigenvalues(),
        "positive_definite": fit.positive_definite(),
        "warnings": fit.warnings,
    });
    ok(serde_json::to_string_pretty(&body).expect("json") + "\n", json!({ "positive_definite": fit.positive_definite() }))
}

fn run_jstudy(r: &Resolved) -> Result<Product> {
    let c = &r.config;
    let k = c.k.unwrap_or([0.25, 0.4]);
    let study = j_convergence_study(
        &r.crystal_potential(),
        r.b(),
        BlochMomentum::new(k[0], k[1]),
        c.band_set.as_deref().unwrap_or(&[1]),
        c.j_values.as_deref().unwrap_or(&[]),
        &ProductBasis::new(basis(r)?, c.nw.unwrap_or(1)),
        DEFAULT_DIM_CAP,
    )?;
    let mut csv = Csv::new(&["J", "band", "E_full", "E_eff", "abs_diff"]);
    for row in &study.rows {
        csv.row([num(row.j), row.band.to_string(), num(row.e_full), num(row.e_eff), num(row.abs_diff)]);
    }
    let fits: Vec<Value> = study
        .fits
        .iter()
        .map(|f| match f.status {
            FitStatus::Fitted { slope, intercept } => {
                json!({ "band": f.band, "slope": slope, "intercept": intercept, "monotone": f.monotone })
            }
            FitStatus::BelowNoise => json!({ "band": f.band, "below_noise": true, "monotone": f.monotone }),
        })
        .collect();
    ok(csv.into_string(), json!({ "fits": fits }))
}

fn run_overlap(r: &Resolved) -> Result<Product> {
    let c = &r.config;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed.unwrap_or(0));
    let pairs: Vec<(BlochMomentum, BlochMomentum)> = (0..c.pairs.unwrap_or(1))
        .map(|_| (BlochMomentum::new(rng.gen(), rng.gen()), BlochMomentum::new(rng.gen(), rng.gen())))
        .collect();
    let nw = c.nw.unwrap_or(60);
    let results = pairs.par_iter().map(|&(k, kp)| parent_overlap_check(r.b(), k, kp, nw)).collect::<Result<Vec<_>>>()?;
    let mut csv = Csv::new(&["k1", "k2", "k1p", "k2p", "re_numerical", "im_numerical", "re_closed", "im_closed", "deviation"]);
    for ((k, kp), o) in pairs.iter().zip(&results) {
        csv.row([
            num(k.k1),
            num(k.k2),
            num(kp.k1),
            num(kp.k2),
            num(o.numerical.re),
            num(o.numerical.im),
            num(o.closed_form.re),
            num(o.closed_form.im),
            num(o.deviation),
        ]);
    }
    let worst = results.iter().map(|o| o.deviation).fold(0.0, f64::max);
    ok(csv.into_string(), json!({ "max_deviation": worst }))
}

fn run_symmetry(r: &Resolved) -> Result<Product> {
    let (p, pw) = (effective(r)?, basis(r)?);
    let report = symmetry_check(&p, &pw)?;
    let levels = bands(&p, K0, &pw, 8.min(pw.dim()))?;
    let clusters: Vec<usize> = cluster_degeneracies(&levels, 1e-9).iter().map(Vec::len).collect();
    let (c0, c1) = report.relative_commutators();
    let body = json!({
        "s0_square_defect": report.s0_square_defect,
        "s1_square_defect": report.s1_square_defect,
        "anticommutator": report.anticommutator,
        "commutator_s0": report.commutator_s0,
        "commutator_s1": report.commutator_s1,
        "relative_commutator_s0": c0,
        "relative_commutator_s1": c1,
        "levels_at_k0": levels,
        "cluster_sizes": clusters,
    });
    ok(serde_json::to_string_pretty(&body).expect("json") + "\n", json!({ "relative_commutators": [c0, c1] }))
}
