//! Supervision losses on SVBRDF maps and their renderings.
//!
//! All reductions are means over pixels so values do not depend on
//! resolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, MapValue, NormalMap, SvbrdfMaps};
use crate::scene::{render_image, tonemap_image, SceneConfig};
use crate::Vec3;

/// Coefficients of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub lambda_d: f64,
    pub lambda_n: f64,
    pub lambda_r: f64,
    pub lambda_rec: f64,
    pub lambda_cls: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_d: 1.0,
            lambda_n: 1.0,
            lambda_r: 1.0,
            lambda_rec: 1.0,
            lambda_cls: 0.0005,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_d, self.lambda_n, self.lambda_r, self.lambda_rec, self.lambda_cls];
        if all.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("loss weights must be non-negative"));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            lambda_d: self.lambda_d * s,
            lambda_n: self.lambda_n * s,
            lambda_r: self.lambda_r * s,
            lambda_rec: self.lambda_rec * s,
            lambda_cls: self.lambda_cls * s,
        }
    }
}

/// Angle bins of target normals (measured from `+z`) with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalBinTable {
    /// Interior bin edges in degrees, ascending.
    pub boundaries_deg: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Default for NormalBinTable {
    /// Bins `[0, 10)`, `[10, 25)`, `[25, 90]` with the dataset frequencies
    /// 0.592, 0.278 and 0.130.
    fn default() -> Self {
        Self::from_probabilities(vec![10.0, 25.0], vec![0.592, 0.278, 0.130])
            .expect("default normal bin table is valid")
    }
}

impl NormalBinTable {
    pub fn from_probabilities(boundaries_deg: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != boundaries_deg.len() + 1 {
            return Err(Error::invalid("need one more probability than bin boundary"));
        }
        let weights = normal_bin_weights(&probabilities)?;
        Ok(Self {
            boundaries_deg,
            probabilities,
            weights,
        })
    }

    /// A table whose bins all carry weight `w`.
    pub fn uniform(w: f64) -> Self {
        Self {
            boundaries_deg: vec![],
            probabilities: vec![1.0],
            weights: vec![w],
        }
    }

    pub fn bin_of(&self, normal: &Vec3) -> usize {
        let cos = (normal.z / normal.norm()).clamp(-1.0, 1.0);
        let theta = cos.acos().to_degrees();
        self.boundaries_deg.iter().take_while(|b| theta >= **b).count()
    }

    pub fn weight_for(&self, normal: &Vec3) -> f64 {
        self.weights[self.bin_of(normal)]
    }
}

/// `W_i = 0.7 + 1 / (10 P_i)`.
pub fn normal_bin_weights(probabilities: &[f64]) -> Result<Vec<f64>> {
    probabilities
        .iter()
        .map(|&p| {
            if p > 0.0 {
                Ok(0.7 + 1.0 / (10.0 * p))
            } else {
                Err(Error::invalid(format!("bin probability {p} must be positive")))
            }
        })
        .collect()
}

/// Mean over pixels and channels of squared differences.
pub fn l2_map_loss<T: MapValue>(predicted: &Grid<T>, target: &Grid<T>) -> Result<f64> {
    predicted.ensure_dims(target.dims())?;
    if predicted.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = predicted
        .iter()
        .zip(target.iter())
        .map(|(a, b)| a.squared_distance(b))
        .sum();
    Ok(sum / (predicted.len() * T::CHANNELS) as f64)
}

/// Mean over pixels of `W(bin of target) * |predicted - target|^2`.
pub fn weighted_normal_loss(predicted: &NormalMap, target: &NormalMap, table: &NormalBinTable) -> Result<f64> {
    predicted.ensure_dims(target.dims())?;
    if predicted.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = predicted
        .iter()
        .zip(target.iter())
        .map(|(p, t)| table.weight_for(t) * (p - t).norm_squared())
        .sum();
    Ok(sum / predicted.len() as f64)
}

/// Mean, over the scene light and every novel light, of the L2 distance
/// between tonemapped renderings of `pred` and `gt`.
pub fn recon_loss(pred: &SvbrdfMaps, gt: &SvbrdfMaps, config: &SceneConfig, novel_lights: &[Vec3]) -> Result<f64> {
    let mut lights = Vec::with_capacity(novel_lights.len() + 1);
    lights.push(config.light());
    lights.extend_from_slice(novel_lights);
    let mut total = 0.0;
    for light in &lights {
        if !(light.z > 0.0) {
            return Err(Error::invalid("novel lights must lie in the upper hemisphere"));
        }
        let cfg = config.clone().with_light(*light);
        let a = tonemap_image(&render_image(pred, &cfg, true)?);
        let b = tonemap_image(&render_image(gt, &cfg, true)?);
        total += l2_map_loss(&a, &b)?;
    }
    Ok(total / lights.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub albedo: f64,
    pub normal: f64,
    pub roughness: f64,
    pub recon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cls: Option<f64>,
    pub total: f64,
}

/// `lambda_d L_d + lambda_n L_n + lambda_r L_r + lambda_rec L_rec`.
pub fn total_loss(
    pred: &SvbrdfMaps,
    gt: &SvbrdfMaps,
    weights: &LossWeights,
    table: &NormalBinTable,
    config: &SceneConfig,
    novel_lights: &[Vec3],
) -> Result<LossBreakdown> {
    weights.validate()?;
    let albedo = l2_map_loss(&pred.albedo, &gt.albedo)?;
    let normal = weighted_normal_loss(&pred.normal, &gt.normal, table)?;
    let roughness = l2_map_loss(&pred.roughness, &gt.roughness)?;
    // Skip the renders when they cannot contribute.
    let recon = if weights.lambda_rec > 0.0 {
        recon_loss(pred, gt, config, novel_lights)?
    } else {
        0.0
    };
    let total = weights.lambda_d * albedo
        + weights.lambda_n * normal
        + weights.lambda_r * roughness
        + weights.lambda_rec * recon;
    Ok(LossBreakdown {
        albedo,
        normal,
        roughness,
        recon,
        cls: None,
        total,
    })
}

/// [`total_loss`] plus `lambda_cls` times the classifier cross entropy.
#[allow(clippy::too_many_arguments)]
pub fn total_loss_cls(
    pred: &SvbrdfMaps,
    gt: &SvbrdfMaps,
    weights: &LossWeights,
    table: &NormalBinTable,
    config: &SceneConfig,
    novel_lights: &[Vec3],
    class_probs: &[f64],
    label: usize,
    class_weights: Option<&[f64]>,
) -> Result<LossBreakdown> {
    let mut out = total_loss(pred, gt, weights, table, config, novel_lights)?;
    let cls = cross_entropy(class_probs, label, class_weights)?;
    out.cls = Some(cls);
    out.total += weights.lambda_cls * cls;
    Ok(out)
}

/// Probability floor inside the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// `-w[label] ln p[label]`, with optional per-class weights (uniform 1 by
/// default).
pub fn cross_entropy(class_probs: &[f64], label: usize, class_weights: Option<&[f64]>) -> Result<f64> {
    if label >= class_probs.len() {
        return Err(Error::invalid(format!(
            "label {label} out of range for {} classes",
            class_probs.len()
        )));
    }
    let w = match class_weights {
        Some(ws) if ws.len() != class_probs.len() => {
            return Err(Error::invalid("class weight vector length mismatch"))
        }
        Some(ws) => ws[label],
        None => 1.0,
    };
    let ce = -class_probs[label].max(PROB_FLOOR).ln();
    // -ln(1) is -0.0
    Ok(w * ce.max(0.0))
}

/// Class weights inversely proportional to example counts, normalized to
/// average 1.
pub fn inverse_frequency_weights(counts: &[usize]) -> Result<Vec<f64>> {
    if counts.iter().any(|c| *c == 0) {
        return Err(Error::invalid("class counts must be positive"));
    }
    let inv: Vec<f64> = counts.iter().map(|c| 1.0 / *c as f64).collect();
    let mean = inv.iter().sum::<f64>() / inv.len() as f64;
    Ok(inv.iter().map(|w| w / mean).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use crate::Rgb;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn l2_examples() {
        let a = Grid::filled(3, 3, 0.0);
        let b = Grid::filled(3, 3, 1.0);
        assert_eq!(l2_map_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(l2_map_loss(&a, &b).unwrap(), 1.0);
        let p = Grid::from_vec(2, 1, vec![0.0, 0.5]).unwrap();
        let t = Grid::from_vec(2, 1, vec![1.0, 0.5]).unwrap();
        assert_eq!(l2_map_loss(&p, &t).unwrap(), 0.5);
        let c = Grid::filled(3, 2, 0.0);
        assert!(matches!(l2_map_loss(&a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bin_weights_match_table() {
        let w = normal_bin_weights(&[0.592, 0.278, 0.130]).unwrap();
        let rounded: Vec<f64> = w.iter().map(|x| (x * 1000.0).round() / 1000.0).collect();
        assert_eq!(rounded, vec![0.869, 1.060, 1.469]);
        assert!(normal_bin_weights(&[0.5, 0.0]).is_err());
        let table = NormalBinTable::default();
        assert!((table.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn weighted_normal_examples() {
        let table = NormalBinTable::default();
        let target = Grid::filled(1, 1, Vec3::z());
        assert_eq!(weighted_normal_loss(&target, &target, &table).unwrap(), 0.0);
        let pred = Grid::filled(1, 1, Vec3::new(0.3, 0.0, 0.9));
        let s = (Vec3::new(0.3, 0.0, 0.9) - Vec3::z()).norm_squared();
        assert_relative_eq!(
            weighted_normal_loss(&pred, &target, &table).unwrap(),
            table.weights[0] * s,
            epsilon = 1e-15
        );
        let tilted = Vec3::new(30f64.to_radians().sin(), 0.0, 30f64.to_radians().cos());
        assert_eq!(table.bin_of(&tilted), 2);
        assert_relative_eq!(table.weight_for(&tilted), 1.469, epsilon = 1e-3);
        assert_eq!(table.bin_of(&Vec3::new(15f64.to_radians().sin(), 0.0, 15f64.to_radians().cos())), 1);
    }

    #[test]
    fn equal_weights_reduce_to_scaled_l2() {
        // weighted_normal_loss sums the three components per pixel while
        // l2_map_loss averages them, hence the channel factor.
        let a = synthetic::smooth_random_maps(1, 6, 6, 0.05).normal;
        let b = synthetic::smooth_random_maps(2, 6, 6, 0.05).normal;
        let w = 1.7;
        let lhs = weighted_normal_loss(&a, &b, &NormalBinTable::uniform(w)).unwrap();
        let rhs = w * 3.0 * l2_map_loss(&a, &b).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn recon_examples() {
        let config = SceneConfig::collocated(8, 8);
        let gt = synthetic::smooth_random_maps(3, 8, 8, 0.05);
        let pred = synthetic::smooth_random_maps(4, 8, 8, 0.05);
        let lights = [Vec3::new(1.0, 0.5, 2.0), Vec3::new(-0.5, 0.2, 1.5)];
        assert_eq!(recon_loss(&gt, &gt, &config, &lights).unwrap(), 0.0);
        let ab = recon_loss(&pred, &gt, &config, &lights).unwrap();
        let ba = recon_loss(&gt, &pred, &config, &lights).unwrap();
        assert_eq!(ab, ba);
        let rev = [lights[1], lights[0]];
        assert_relative_eq!(recon_loss(&pred, &gt, &config, &rev).unwrap(), ab, max_relative = 1e-12);
    }

    #[test]
    fn coinciding_novel_light_does_not_increase_loss() {
        // No light intensity: renders depend on albedo only, so maps that
        // differ only in roughness render identically under every light.
        let mut config = SceneConfig::collocated(8, 8);
        config.light_intensity = [0.0; 3];
        config.ambient = [0.5; 3];
        let a = SvbrdfMaps::uniform(8, 8, Rgb::repeat(0.4), 0.3, 0.0);
        let b = SvbrdfMaps::uniform(8, 8, Rgb::repeat(0.4), 0.9, 0.0);
        let base = recon_loss(&a, &b, &config, &[]).unwrap();
        let more = recon_loss(&a, &b, &config, &[Vec3::new(0.3, 0.1, 2.0)]).unwrap();
        assert!(more <= base);
    }

    #[test]
    fn total_loss_projection_and_homogeneity() {
        let config = SceneConfig::collocated(8, 8);
        let gt = synthetic::smooth_random_maps(5, 8, 8, 0.05);
        let pred = synthetic::smooth_random_maps(6, 8, 8, 0.05);
        let table = NormalBinTable::default();
        let zero = total_loss(&gt, &gt, &LossWeights::default(), &table, &config, &[]).unwrap();
        assert_eq!(zero.total, 0.0);
        let only_d = LossWeights {
            lambda_d: 1.0,
            lambda_n: 0.0,
            lambda_r: 0.0,
            lambda_rec: 0.0,
            lambda_cls: 0.0,
        };
        let t = total_loss(&pred, &gt, &only_d, &table, &config, &[]).unwrap();
        assert_eq!(t.total, l2_map_loss(&pred.albedo, &gt.albedo).unwrap());
        let w = LossWeights::default();
        let one = total_loss(&pred, &gt, &w, &table, &config, &[]).unwrap();
        let two = total_loss(&pred, &gt, &w.scaled(2.0), &table, &config, &[]).unwrap();
        assert_relative_eq!(two.total, 2.0 * one.total, max_relative = 1e-12);
    }

    #[test]
    fn cross_entropy_examples() {
        let onehot = [0.0, 1.0, 0.0];
        assert_eq!(cross_entropy(&onehot, 1, None).unwrap(), 0.0);
        let uniform = [1.0 / 8.0; 8];
        assert_relative_eq!(cross_entropy(&uniform, 3, None).unwrap(), 8f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(cross_entropy(&[0.5, 0.5], 0, None).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(cross_entropy(&[0.5, 0.5], 2, None).is_err());
        assert_relative_eq!(
            cross_entropy(&[0.5, 0.5], 0, Some(&[2.0, 1.0])).unwrap(),
            2.0 * 2f64.ln(),
            epsilon = 1e-15
        );
        // Floor keeps the value finite.
        assert!(cross_entropy(&[1.0, 0.0], 1, None).unwrap().is_finite());
    }

    #[test]
    fn cls_term_added() {
        let config = SceneConfig::collocated(4, 4);
        let gt = synthetic::smooth_random_maps(7, 4, 4, 0.05);
        let w = LossWeights::default();
        let out = total_loss_cls(&gt, &gt, &w, &NormalBinTable::default(), &config, &[], &[0.5, 0.5], 1, None).unwrap();
        assert_relative_eq!(out.total, 0.0005 * 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn inverse_frequency() {
        let w = inverse_frequency_weights(&[10, 30]).unwrap();
        assert_relative_eq!(w[0] / w[1], 3.0, epsilon = 1e-12);
        assert!(inverse_frequency_weights(&[0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn l2_non_negative_and_zero_only_on_equality(
            a in proptest::collection::vec(-2.0f64..2.0, 12),
            b in proptest::collection::vec(-2.0f64..2.0, 12),
        ) {
            let ga = Grid::from_vec(3, 4, a.clone()).unwrap();
            let gb = Grid::from_vec(3, 4, b.clone()).unwrap();
            let l = l2_map_loss(&ga, &gb).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert_eq!(l == 0.0, a == b);
        }
    }
}
