use svbrdf_web::{brdf_lobe, dcrf_denoise, render_preview};

#[test]
fn preview_is_rgba_and_deterministic() {
    let a = render_preview(24, 0.4, 0.05, 0.5, 0.3, -0.2);
    assert_eq!(a.len(), 24 * 24 * 4);
    assert!(a.chunks(4).all(|p| p[3] == 255));
    assert_eq!(a, render_preview(24, 0.4, 0.05, 0.5, 0.3, -0.2));
    assert_ne!(a, render_preview(24, 0.4, 0.05, 0.5, -0.3, 0.2));
}

#[test]
fn lobe_peaks_at_mirror_direction() {
    let samples = 181;
    let lobe = brdf_lobe(0.2, 0.05, 30.0, samples);
    let peak = lobe
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| ((k as f64 + 0.5) / samples as f64 - 0.5) * 180.0)
        .unwrap();
    assert!((peak - 30.0).abs() < 2.0, "{peak}");
    let broad = brdf_lobe(0.9, 0.05, 30.0, samples);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    assert!(max(&broad) < max(&lobe));
}

#[test]
fn denoise_moves_toward_clean_albedo() {
    let size = 16;
    let out = dcrf_denoise(size, 0.2, 50.0, 4);
    assert_eq!(out.len(), 2 * size * size * 4);
    let clean = dcrf_denoise(size, 0.0, 0.0, 4);
    let err = |half: usize| -> f64 {
        let mut e = 0.0;
        for r in 0..size {
            for c in 0..size {
                let i = (r * 2 * size + half * size + c) * 4;
                let j = (r * 2 * size + c) * 4;
                for k in 0..3 {
                    e += (out[i + k] as f64 - clean[j + k] as f64).powi(2);
                }
            }
        }
        e
    };
    assert!(err(1) < 0.75 * err(0), "refined {} noisy {}", err(1), err(0));
}
