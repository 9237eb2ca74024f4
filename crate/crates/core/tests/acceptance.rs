//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svbrdf_core::augment::{draw_albedo_scale, draw_roughness_multiplier, patch_plan, AugmentPlan};
use svbrdf_core::brdf::{distribution_term, fresnel_term, R_MIN};
use svbrdf_core::dcrf::{dcrf_energy, dcrf_solve_traced, DcrfPreset, DcrfProblem, RefineTarget};
use svbrdf_core::diff::{central_difference, near_shading_boundary, pixel_gradient, GradTolerance, ParamKind};
use svbrdf_core::estimators::{fit_svbrdf_gd, roughness_grid_search_detailed, FitConfig, GridSearchConfig};
use svbrdf_core::io::{read_pfm, write_pfm, PfmImage};
use svbrdf_core::losses::{l2_map_loss, normal_bin_weights};
use svbrdf_core::photometric::{
    angular_error_deg, lambertian_ps, random_light_directions, render_directional_lambertian, PsObservationSet,
};
use svbrdf_core::scene::{render_image, sample_flash_position, tonemap_image, SceneConfig};
use svbrdf_core::synthetic::{smooth_random_maps, striped_roughness_maps};
use svbrdf_core::{Grid, Rgb, SvbrdfMaps, Vec3};

// Written to the raw handle so the line shows up without --nocapture.
fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    let _ = writeln!(
        std::io::stdout().lock(),
        "criterion {id} {name}: {} ({detail}; {:.2}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_1_microfacet_identities() {
    let t0 = Instant::now();
    // Midpoint rule over theta = (pi/2) u^2, which clusters samples near the
    // narrow peak of low roughness lobes.
    let integral = |r: f64| {
        let n = 20_000;
        let mut s = 0.0;
        for k in 0..n {
            let u = (k as f64 + 0.5) / n as f64;
            let theta = std::f64::consts::FRAC_PI_2 * u * u;
            let dtheta = std::f64::consts::PI * u / n as f64;
            s += distribution_term(theta.cos(), r) * theta.cos() * theta.sin() * dtheta;
        }
        2.0 * std::f64::consts::PI * s
    };
    let mut worst: f64 = 0.0;
    for r in [0.1, 0.3, 0.6, 1.0] {
        worst = worst.max((integral(r) - 1.0).abs());
    }
    let f_zero = fresnel_term(0.0, 0.05);
    let oracle = 0.05 + 0.95 * 2f64.powf(-12.53789);
    let f_one = fresnel_term(1.0, 0.05);
    let elapsed = t0.elapsed();
    let pass = worst < 0.02 && (f_zero - 1.0).abs() < 1e-12 && (f_one - oracle).abs() < 1e-9 && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        "microfacet identities",
        pass,
        &format!("max |int D - 1| = {worst:.2e}, F(0) = {f_zero}, |F(1) - oracle| = {:.1e}", (f_one - oracle).abs()),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_2_normal_bin_weights() {
    let t0 = Instant::now();
    let w = normal_bin_weights(&[0.592, 0.278, 0.130]).unwrap();
    let rounded: Vec<f64> = w.iter().map(|v| (v * 1000.0).round() / 1000.0).collect();
    let pass = rounded == vec![0.869, 1.060, 1.469];
    report(2, "normal-bin weights", pass, &format!("{rounded:?}"), t0.elapsed());
    assert!(pass);
}

#[test]
fn criterion_3_gradient_correctness() {
    let t0 = Instant::now();
    let size = 16;
    let step = 1e-4;
    let tol = GradTolerance::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut skipped = 0;
    let mut failures = 0;
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs_small: f64 = 0.0;
    let mut attempts = 0;
    while checked < 1000 {
        attempts += 1;
        let seed: u64 = rng.random();
        let maps = smooth_random_maps(seed, size, size, if rng.random::<bool>() { 0.05 } else { 0.5 });
        let light = sample_flash_position(seed, &SceneConfig::collocated(size, size), 0.1);
        let config = SceneConfig::collocated(size, size).with_light(light);
        let (row, col) = (rng.random_range(0..size), rng.random_range(0..size));
        let kind = ParamKind::ALL[rng.random_range(0..ParamKind::ALL.len())];
        let params = maps.params_at(row * size + col);
        if near_shading_boundary(&params, &config, row, col, 4.0 * step) {
            skipped += 1;
            continue;
        }
        let analytic = kind.column(&pixel_gradient(&params, &config, row, col));
        let numeric = central_difference(&params, &config, row, col, kind, step);
        for c in 0..3 {
            let (a, n) = (analytic[c], numeric[c]);
            let scale = a.abs().max(n.abs());
            if scale < tol.small_gradient {
                worst_abs_small = worst_abs_small.max((a - n).abs());
            } else {
                worst_rel = worst_rel.max((a - n).abs() / scale);
            }
            if !tol.accepts(a, n) {
                failures += 1;
            }
        }
        checked += 1;
    }
    let elapsed = t0.elapsed();
    let pass = failures == 0 && elapsed.as_secs_f64() < 30.0;
    report(
        3,
        "gradient correctness",
        pass,
        &format!(
            "{checked} samples ({attempts} drawn, {skipped} near a clamp), {failures} failing channels, max rel {worst_rel:.2e}, max abs (small) {worst_abs_small:.2e}"
        ),
        elapsed,
    );
    assert!(pass);
}

/// Inputs of one random refinement problem.
struct DcrfInputs {
    image: Grid<Rgb>,
    albedo: Grid<Rgb>,
    normal: Grid<Vec3>,
    rough: Grid<f64>,
    grid_rough: Grid<f64>,
}

fn random_inputs(rng: &mut ChaCha8Rng, n: usize) -> DcrfInputs {
    let mut color = || Grid::from_fn(n, n, |_, _| Rgb::new(rng.random(), rng.random(), rng.random()));
    let image = color();
    let albedo = color();
    let normal = Grid::from_fn(n, n, |_, _| {
        Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), 1.0).normalize()
    });
    let rough = Grid::from_fn(n, n, |_, _| rng.random_range(R_MIN..1.0));
    let grid_rough = Grid::from_fn(n, n, |_, _| rng.random_range(R_MIN..1.0));
    DcrfInputs {
        image,
        albedo,
        normal,
        rough,
        grid_rough,
    }
}

fn random_preset(rng: &mut ChaCha8Rng, target: RefineTarget) -> DcrfPreset {
    let base = match target {
        RefineTarget::Diffuse => DcrfPreset::diffuse(),
        RefineTarget::Normal => DcrfPreset::normal(),
        RefineTarget::Roughness => DcrfPreset::roughness(),
    };
    let mut theta: Vec<f64> = base.coefficients().iter().map(|_| rng.random_range(0.05..1.0)).collect();
    if target == RefineTarget::Normal {
        theta[1] = 0.0;
    }
    // Pairwise terms strong enough to matter on an 8x8 grid.
    for b in theta[2..].iter_mut() {
        *b *= 0.05;
    }
    base.with_coefficients(&theta).unwrap()
}

fn build(preset: &DcrfPreset, x: &DcrfInputs) -> DcrfProblem {
    match preset.target {
        RefineTarget::Diffuse => preset.diffuse_problem(&x.albedo, &x.image).unwrap(),
        RefineTarget::Normal => preset.normal_problem(&x.normal, &x.albedo).unwrap(),
        RefineTarget::Roughness => preset.roughness_problem(&x.rough, &x.grid_rough, &x.albedo, &x.image).unwrap(),
    }
}

/// Feature vectors, unary weights and targets rebuilt from the raw inputs.
struct Oracle {
    feats: Vec<Vec<Vec<f64>>>,
    alphas: Vec<Vec<f64>>,
    targets: Vec<Vec<Vec<f64>>>,
}

fn oracle_terms(preset: &DcrfPreset, x: &DcrfInputs) -> Oracle {
    let n = x.image.width();
    let npx = n * n;
    let theta = preset.normalized().unwrap().coefficients();
    let (a0, a1) = (theta[0], theta[1]);
    let pos = |i: usize| vec![(i % n) as f64 / (n - 1) as f64, (i / n) as f64 / (n - 1) as f64];
    let centered = |i: usize| {
        let px = 2.0 * (i % n) as f64 / (n - 1) as f64 - 1.0;
        let py = 1.0 - 2.0 * (i / n) as f64 / (n - 1) as f64;
        px * px + py * py
    };
    let cmin = |i: usize| {
        let p = x.image.as_slice()[i];
        p.x.min(p.y).min(p.z)
    };
    let rgb = |c: Rgb| vec![c.x, c.y, c.z];
    let mut feats = vec![Vec::new(); npx];
    let (alphas, targets): (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) = match preset.target {
        RefineTarget::Diffuse => {
            for (i, f) in feats.iter_mut().enumerate() {
                let p = x.image.as_slice()[i];
                let s = p.x + p.y + p.z;
                f.push(pos(i));
                f.push(rgb(p / s));
                f.push(rgb(x.albedo.as_slice()[i]));
            }
            let alpha = (0..npx)
                .map(|i| {
                    let sp = 1.0 - (-centered(i) / 0.25).exp();
                    let co = 1.0 - (-(cmin(i) - 1.0).powi(2) / 0.0064).exp();
                    a0 * sp.max(co) + a1
                })
                .collect();
            (vec![alpha], vec![(0..npx).map(|i| rgb(x.albedo.as_slice()[i])).collect()])
        }
        RefineTarget::Normal => {
            for (i, f) in feats.iter_mut().enumerate() {
                let (r, c) = (i / n, i % n);
                let here = x.albedo[(r, c)];
                let dx = if c + 1 < n { (x.albedo[(r, c + 1)] - here) * n as f64 } else { Rgb::zeros() };
                let dy = if r + 1 < n { (x.albedo[(r + 1, c)] - here) * n as f64 } else { Rgb::zeros() };
                f.push(pos(i));
                f.push(vec![dx.x, dx.y, dx.z, dy.x, dy.y, dy.z]);
            }
            (
                vec![vec![a0; npx]],
                vec![(0..npx).map(|i| rgb(x.normal.as_slice()[i])).collect()],
            )
        }
        RefineTarget::Roughness => {
            for (i, f) in feats.iter_mut().enumerate() {
                f.push(pos(i));
                f.push(rgb(x.albedo.as_slice()[i]));
            }
            let alpha1 = (0..npx)
                .map(|i| {
                    let sp = (-centered(i) / 0.25).exp();
                    let co = (-(cmin(i) - 1.0).powi(2) / 0.04).exp();
                    a1 * sp.max(co)
                })
                .collect();
            (
                vec![vec![a0; npx], alpha1],
                vec![
                    (0..npx).map(|i| vec![x.rough.as_slice()[i]]).collect(),
                    (0..npx).map(|i| vec![x.grid_rough.as_slice()[i]]).collect(),
                ],
            )
        }
    };
    Oracle { feats, alphas, targets }
}

/// Pairwise weight. Every kernel starts with position (slot 0); kernel `k`
/// pairs it with oracle feature slot `k`.
fn oracle_weight(preset: &DcrfPreset, o: &Oracle, i: usize, j: usize) -> f64 {
    let theta = preset.normalized().unwrap().coefficients();
    let mut w = 0.0;
    for (k, spec) in preset.kernels.iter().enumerate() {
        let mut e = 0.0;
        for (slot, f) in spec.features.iter().enumerate() {
            let idx = if slot == 0 { 0 } else { k };
            let d2: f64 = o.feats[i][idx].iter().zip(&o.feats[j][idx]).map(|(a, b)| (a - b).powi(2)).sum();
            e += d2 / (2.0 * f.std * f.std);
        }
        w += theta[2 + k] * (-e).exp();
    }
    w
}

fn dense_solution(preset: &DcrfPreset, x: &DcrfInputs) -> Vec<Vec<f64>> {
    let o = oracle_terms(preset, x);
    let npx = o.feats.len();
    let ch = o.targets[0][0].len();
    let mut a = DMatrix::<f64>::zeros(npx, npx);
    for i in 0..npx {
        let alpha: f64 = o.alphas.iter().map(|al| al[i]).sum();
        a[(i, i)] += alpha;
        for j in 0..npx {
            if i != j {
                let w = oracle_weight(preset, &o, i, j);
                a[(i, i)] += 2.0 * w;
                a[(i, j)] -= 2.0 * w;
            }
        }
    }
    let lu = a.lu();
    (0..ch)
        .map(|c| {
            let b = DVector::from_fn(npx, |i, _| {
                o.alphas.iter().zip(&o.targets).map(|(al, t)| al[i] * t[i][c]).sum::<f64>()
            });
            lu.solve(&b).unwrap().iter().copied().collect()
        })
        .collect()
}

#[test]
fn criterion_4_dcrf_solver() {
    let t0 = Instant::now();
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut monotone_ok = true;
    let mut worst_dense: f64 = 0.0;
    let mut zero_beta_exact = true;
    let mut worst_unary: f64 = 0.0;
    let mut problems = 0;
    for target in [RefineTarget::Diffuse, RefineTarget::Normal, RefineTarget::Roughness] {
        for _ in 0..20 {
            let inputs = random_inputs(&mut rng, n);
            let preset = random_preset(&mut rng, target);
            let mut problem = build(&preset, &inputs);
            problem.iterations = 20_000;
            problem.tolerance = 1e-13;

            let out = dcrf_solve_traced(&problem, true).unwrap();
            for pair in out.energies.windows(2) {
                // Allow only floating-point rounding of the energy sum.
                if pair[1] > pair[0] * (1.0 + 8.0 * f64::EPSILON) {
                    monotone_ok = false;
                }
            }
            let dense = dense_solution(&preset, &inputs);
            for (c, col) in dense.iter().enumerate() {
                for (i, v) in col.iter().enumerate() {
                    worst_dense = worst_dense.max((out.field.at(i)[c] - v).abs());
                }
            }
            assert!(dcrf_energy(&out.field, &problem).unwrap().is_finite());

            let mut theta = preset.coefficients();
            theta[2..].iter_mut().for_each(|b| *b = 0.0);
            let flat = build(&preset.with_coefficients(&theta).unwrap(), &inputs);
            let solved = dcrf_solve_traced(&flat, false).unwrap().field;
            let unary = flat.unary_solution();
            if solved.data.iter().zip(&unary.data).any(|(a, b)| a.to_bits() != b.to_bits()) {
                zero_beta_exact = false;
            }
            // The unary minimizer itself, recomputed from the raw inputs.
            let o = oracle_terms(&preset.with_coefficients(&theta).unwrap(), &inputs);
            for i in 0..n * n {
                let total: f64 = o.alphas.iter().map(|a| a[i]).sum();
                for c in 0..solved.channels {
                    let expected =
                        o.alphas.iter().zip(&o.targets).map(|(a, t)| a[i] * t[i][c]).sum::<f64>() / total;
                    worst_unary = worst_unary.max((solved.at(i)[c] - expected).abs());
                }
            }
            problems += 1;
        }
    }
    let elapsed = t0.elapsed();
    let pass = monotone_ok && worst_dense < 1e-6 && zero_beta_exact && worst_unary < 1e-14;
    report(
        4,
        "dcrf solver",
        pass,
        &format!(
            "{problems} problems, energy monotone: {monotone_ok}, max |gs - dense| = {worst_dense:.2e}, zero-beta equals unary solution: {zero_beta_exact} (vs recomputed {worst_unary:.1e})"
        ),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_5_roughness_grid_search() {
    let t0 = Instant::now();
    let size = 32;
    let config = SceneConfig::collocated(size, size);
    let levels = [0.2, 0.4, 0.7];
    let maps = striped_roughness_maps(size, size, &levels, 0.05);
    let observed = render_image(&maps, &config, true).unwrap();
    let gs = GridSearchConfig::default();
    // With one collocated light the lobe height is not monotone in roughness
    // away from the highlight center, so some pixels admit a second exact fit.
    // The final residual at every miss is reported to show this.
    let out = roughness_grid_search_detailed(&observed, &maps.albedo, &maps.normal, maps.f0, &config, &gs).unwrap();
    let residual = out.level_objectives.last().unwrap();
    let half = 0.5 * gs.finest_spacing();
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut misses = 0;
    for ((est, truth), res) in out.roughness.iter().zip(maps.roughness.iter()).zip(residual.iter()) {
        let e = (est - truth).abs();
        worst = worst.max(e);
        if e > half {
            misses += 1;
            worst_residual = worst_residual.max(*res);
        }
    }
    let elapsed = t0.elapsed();
    let pass = misses == 0 && elapsed.as_secs_f64() < 10.0;
    report(
        5,
        "roughness grid search",
        pass,
        &format!(
            "{misses}/{} pixels off by more than {half:.2e}, max error {worst:.3}, largest residual at a miss {worst_residual:.1e}",
            size * size
        ),
        elapsed,
    );
    assert!(pass);
}

fn perturbed(gt: &SvbrdfMaps, seed: u64) -> SvbrdfMaps {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = gt.clone();
    for a in m.albedo.as_mut_slice() {
        *a = a.map(|v| (v + rng.random_range(-0.1..=0.1)).max(0.0));
    }
    for n in m.normal.as_mut_slice() {
        // Tilt by up to 10 degrees about a random tangent axis.
        let angle = rng.random_range(0.0..=10f64.to_radians());
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let t1 = n.cross(&helper).normalize();
        let t2 = n.cross(&t1);
        let axis = t1 * phi.cos() + t2 * phi.sin();
        *n = (*n * angle.cos() + axis.cross(n) * angle.sin()).normalize();
    }
    for r in m.roughness.as_mut_slice() {
        *r = (*r + rng.random_range(-0.1..=0.1)).clamp(R_MIN, 1.0);
    }
    m
}

#[test]
fn criterion_6_fitter_self_consistency() {
    let t0 = Instant::now();
    let size = 32;
    let config = SceneConfig::collocated(size, size);
    let gt = smooth_random_maps(11, size, size, 0.05);
    let observed = render_image(&gt, &config, true).unwrap();
    let init = perturbed(&gt, 12);
    let out = fit_svbrdf_gd(&observed, &init, &config, &FitConfig::default()).unwrap();
    let first = out.trace[0];
    let last = *out.trace.last().unwrap();
    let albedo_l2 = l2_map_loss(&out.maps.albedo, &gt.albedo).unwrap();
    let check = l2_map_loss(&tonemap_image(&render_image(&out.maps, &config, true).unwrap()), &tonemap_image(&observed))
        .unwrap();
    let elapsed = t0.elapsed();
    let pass = last * 10.0 <= first
        && albedo_l2 < 1e-3
        && (check - last).abs() <= 1e-12 * first.max(1.0)
        && out.trace.windows(2).all(|p| p[1] <= p[0])
        && elapsed.as_secs_f64() < 120.0;
    report(
        6,
        "fitter self-consistency",
        pass,
        &format!(
            "loss {first:.3e} -> {last:.3e} ({:.1}x) in {} iterations, albedo l2 {albedo_l2:.2e}",
            first / last.max(f64::MIN_POSITIVE),
            out.trace.len() - 1
        ),
        elapsed,
    );
    assert!(pass);
}

fn sphere(n: usize) -> (Grid<Vec3>, Vec<usize>) {
    let mut inside = Vec::new();
    let normal = Grid::from_fn(n, n, |r, c| {
        let x = 2.0 * (c as f64 + 0.5) / n as f64 - 1.0;
        let y = 1.0 - 2.0 * (r as f64 + 0.5) / n as f64;
        let rho2 = x * x + y * y;
        if rho2 < 0.95 * 0.95 {
            inside.push(r * n + c);
            Vec3::new(x, y, (1.0 - rho2).sqrt())
        } else {
            Vec3::z()
        }
    });
    (normal, inside)
}

fn mean_error(est: &Grid<Vec3>, truth: &Grid<Vec3>, pixels: &[usize]) -> f64 {
    pixels
        .iter()
        .map(|&i| angular_error_deg(&est.as_slice()[i], &truth.as_slice()[i]))
        .sum::<f64>()
        / pixels.len() as f64
}

#[test]
fn criterion_7_photometric_stereo() {
    let t0 = Instant::now();
    let n = 48;
    let (normal, inside) = sphere(n);
    let albedo = Grid::filled(n, n, Rgb::new(0.7, 0.5, 0.3));
    // A dome within 30 degrees of the view axis. Over the full hemisphere,
    // attached shadows near the silhouette outnumber the 5 darkest trimmed.
    let lights = random_light_directions(52, 5, 30.0);
    let images = render_directional_lambertian(&albedo, &normal, &lights).unwrap();
    let clean = lambertian_ps(&PsObservationSet {
        images: images.clone(),
        light_dirs: lights.clone(),
        trim_high: 5,
        trim_low: 5,
    })
    .unwrap();
    let clean_err = mean_error(&clean.normal, &normal, &inside);

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut corrupted = images;
    for i in 0..n * n {
        for k in 0..52 {
            if rng.random::<f64>() < 0.1 {
                let px = &mut corrupted[k].as_mut_slice()[i];
                *px += Rgb::repeat(rng.random_range(2.0..5.0));
            }
        }
    }
    let solve = |th: usize, tl: usize| {
        lambertian_ps(&PsObservationSet {
            images: corrupted.clone(),
            light_dirs: lights.clone(),
            trim_high: th,
            trim_low: tl,
        })
        .unwrap()
    };
    let trimmed = mean_error(&solve(5, 5).normal, &normal, &inside);
    let untrimmed = mean_error(&solve(0, 0).normal, &normal, &inside);
    let elapsed = t0.elapsed();
    let pass = clean_err < 0.5 && trimmed < untrimmed;
    report(
        7,
        "photometric stereo",
        pass,
        &format!("clean {clean_err:.3} deg; with outliers trimmed {trimmed:.2} deg vs untrimmed {untrimmed:.2} deg"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_8_augmentation_arithmetic() {
    let t0 = Instant::now();
    let count = patch_plan(&AugmentPlan::default(), 4096, 4096).unwrap().len();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draws = 10_000;
    let albedo: Vec<f64> = (0..draws).map(|_| draw_albedo_scale(&mut rng)).collect();
    let rough: Vec<f64> = (0..draws).map(|_| draw_roughness_multiplier(&mut rng)).collect();
    let mean = albedo.iter().sum::<f64>() / draws as f64;
    let rmean = rough.iter().sum::<f64>() / draws as f64;
    let rstd = (rough.iter().map(|v| (v - rmean).powi(2)).sum::<f64>() / (draws - 1) as f64).sqrt();
    let pass = count == 270 && (1.09..=1.11).contains(&mean) && (0.19..=0.21).contains(&rstd);
    report(
        8,
        "augmentation arithmetic",
        pass,
        &format!("{count} descriptors, albedo scale mean {mean:.4}, roughness multiplier std {rstd:.4}"),
        t0.elapsed(),
    );
    assert!(pass);
}

#[test]
fn criterion_9_renderer_linearity_determinism_pfm() {
    let t0 = Instant::now();
    let size = 24;
    let maps = smooth_random_maps(21, size, size, 0.05);
    let base = SceneConfig::collocated(size, size);
    let a = render_image(&maps, &base, true).unwrap();
    let mut scaled = base.clone();
    let s = 3.7;
    scaled.light_intensity = base.light_intensity.map(|v| v * s);
    let b = render_image(&maps, &scaled, true).unwrap();
    let mut worst_rel: f64 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        for c in 0..3 {
            if x[c] > 0.0 {
                worst_rel = worst_rel.max((y[c] - s * x[c]).abs() / (s * x[c]));
            }
        }
    }
    let again = render_image(&maps, &base, true).unwrap();
    let identical = a.iter().zip(again.iter()).all(|(x, y)| (0..3).all(|c| x[c].to_bits() == y[c].to_bits()));

    let pfm = PfmImage::from_color(&a);
    let mut bytes = Vec::new();
    write_pfm(&mut bytes, &pfm).unwrap();
    let back = read_pfm(&bytes[..]).unwrap();
    let mut bytes2 = Vec::new();
    write_pfm(&mut bytes2, &back).unwrap();
    let pfm_exact = back.data.iter().zip(&pfm.data).all(|(x, y)| x.to_bits() == y.to_bits()) && bytes == bytes2;

    let pass = worst_rel < 1e-9 && identical && pfm_exact;
    report(
        9,
        "renderer linearity, determinism, pfm",
        pass,
        &format!("max relative scaling error {worst_rel:.1e}, repeat bit-identical: {identical}, pfm bit-exact: {pfm_exact}"),
        t0.elapsed(),
    );
    assert!(pass);
}
