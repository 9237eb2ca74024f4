//! Named refiner configurations and coefficient handling.

use serde::{Deserialize, Serialize};

use super::{
    centered_positions, diffuse_unary_weight_map, roughness_unary_weight_map, DcrfProblem, FeatureKind,
    FeatureMaps, Field, KernelSpec, SweepMode, Unary,
};
use crate::error::{Error, Result};
use crate::grid::{ColorMap, Grid, NormalMap, RadianceImage, ScalarMap};

/// The map a preset refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineTarget {
    Diffuse,
    Normal,
    Roughness,
}

/// Unary scale factors.
///
/// * diffuse: `a0`, `a1` of the diffuse weight map;
/// * normal: uniform weight `a0` (`a1` must be 0);
/// * roughness: constant weight `a0` on the prediction and scale `a1` on
///   the grid-search weight map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnaryCoefficients {
    pub a0: f64,
    #[serde(default)]
    pub a1: f64,
}

/// JSON-serializable refiner settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcrfPreset {
    pub name: String,
    pub target: RefineTarget,
    pub unary: UnaryCoefficients,
    pub kernels: Vec<KernelSpec>,
    pub iterations: usize,
    pub tolerance: f64,
    #[serde(default)]
    pub mode: SweepMode,
    #[serde(default)]
    pub truncation: Option<f64>,
}

const DEFAULT_BETA: f64 = 0.002;

impl DcrfPreset {
    /// Kernels: position (0.04); position (0.06) with normalized input color
    /// (0.2); position (0.06) with predicted diffuse (0.1).
    pub fn diffuse() -> Self {
        use FeatureKind::*;
        Self {
            name: "diffuse".into(),
            target: RefineTarget::Diffuse,
            unary: UnaryCoefficients { a0: 1.0, a1: 0.05 },
            kernels: vec![
                KernelSpec::new(&[(Position, 0.04)], DEFAULT_BETA),
                KernelSpec::new(&[(Position, 0.06), (NormalizedColor, 0.2)], DEFAULT_BETA),
                KernelSpec::new(&[(Position, 0.06), (PredictedDiffuse, 0.1)], DEFAULT_BETA),
            ],
            iterations: 100,
            tolerance: 1e-6,
            mode: SweepMode::GaussSeidel,
            truncation: None,
        }
    }

    /// Kernels: position (0.03); position (0.06) with diffuse gradient (0.1).
    pub fn normal() -> Self {
        use FeatureKind::*;
        Self {
            name: "normal".into(),
            target: RefineTarget::Normal,
            unary: UnaryCoefficients { a0: 1.0, a1: 0.0 },
            kernels: vec![
                KernelSpec::new(&[(Position, 0.03)], DEFAULT_BETA),
                KernelSpec::new(&[(Position, 0.06), (DiffuseGradient, 0.1)], DEFAULT_BETA),
            ],
            iterations: 100,
            tolerance: 1e-6,
            mode: SweepMode::GaussSeidel,
            truncation: None,
        }
    }

    /// Kernels: position (0.04); position (0.06) with refined diffuse (0.2).
    pub fn roughness() -> Self {
        use FeatureKind::*;
        Self {
            name: "roughness".into(),
            target: RefineTarget::Roughness,
            unary: UnaryCoefficients { a0: 0.5, a1: 1.0 },
            kernels: vec![
                KernelSpec::new(&[(Position, 0.04)], DEFAULT_BETA),
                KernelSpec::new(&[(Position, 0.06), (RefinedDiffuse, 0.2)], DEFAULT_BETA),
            ],
            iterations: 100,
            tolerance: 1e-6,
            mode: SweepMode::GaussSeidel,
            truncation: None,
        }
    }

    pub fn named(name: &str) -> Option<Self> {
        match name {
            "diffuse" => Some(Self::diffuse()),
            "normal" => Some(Self::normal()),
            "roughness" => Some(Self::roughness()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("preset serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.target == RefineTarget::Normal && self.unary.a1 != 0.0 {
            return Err(Error::invalid("normal presets take a single unary coefficient"));
        }
        if self.kernels.iter().any(|k| k.features.is_empty()) {
            return Err(Error::invalid("every kernel needs at least one feature"));
        }
        if self.iterations == 0 || !(self.tolerance > 0.0) {
            return Err(Error::invalid("iterations and tolerance must be positive"));
        }
        Ok(())
    }

    /// `[a0, a1, beta_1, ..., beta_k]`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut v = vec![self.unary.a0, self.unary.a1];
        v.extend(self.kernels.iter().map(|k| k.beta));
        v
    }

    pub fn with_coefficients(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != 2 + self.kernels.len() {
            return Err(Error::invalid(format!(
                "preset {} takes {} coefficients, got {}",
                self.name,
                2 + self.kernels.len(),
                theta.len()
            )));
        }
        let mut out = self.clone();
        out.unary = UnaryCoefficients {
            a0: theta[0],
            a1: theta[1],
        };
        for (k, b) in out.kernels.iter_mut().zip(&theta[2..]) {
            k.beta = *b;
        }
        Ok(out)
    }

    /// Same preset with coefficients clipped at zero and rescaled to sum 1.
    pub fn normalized(&self) -> Result<Self> {
        self.with_coefficients(&normalize_coefficients(&self.coefficients())?)
    }

    fn problem(&self, unaries: Vec<Unary>, features: FeatureMaps) -> Result<DcrfProblem> {
        let norm = self.normalized()?;
        let mut p = DcrfProblem::new(unaries, norm.kernels, features);
        p.iterations = self.iterations;
        p.tolerance = self.tolerance;
        p.mode = self.mode;
        p.truncation = self.truncation;
        Ok(p)
    }

    fn expect_target(&self, t: RefineTarget) -> Result<()> {
        if self.target != t {
            return Err(Error::invalid(format!(
                "preset {} refines {:?}, not {:?}",
                self.name, self.target, t
            )));
        }
        Ok(())
    }

    /// Diffuse refinement of `predicted` guided by the observed image.
    pub fn diffuse_problem(&self, predicted: &ColorMap, input_image: &RadianceImage) -> Result<DcrfProblem> {
        self.expect_target(RefineTarget::Diffuse)?;
        let (h, w) = predicted.dims();
        let c = normalize_coefficients(&self.coefficients())?;
        let weight = diffuse_unary_weight_map(&centered_positions(h, w), input_image, c[0], c[1])?;
        let features = FeatureMaps::new(h, w)
            .with_normalized_color(input_image)?
            .with_predicted_diffuse(predicted)?;
        self.problem(
            vec![Unary {
                target: Field::from_vectors(predicted),
                weight,
            }],
            features,
        )
    }

    /// Normal refinement guided by gradients of the refined diffuse map.
    pub fn normal_problem(&self, predicted: &NormalMap, refined_diffuse: &ColorMap) -> Result<DcrfProblem> {
        self.expect_target(RefineTarget::Normal)?;
        let (h, w) = predicted.dims();
        let c = normalize_coefficients(&self.coefficients())?;
        let features = FeatureMaps::new(h, w).with_diffuse_gradient(refined_diffuse)?;
        let mut p = self.problem(
            vec![Unary {
                target: Field::from_vectors(predicted),
                weight: Grid::filled(h, w, c[0]),
            }],
            features,
        )?;
        p.renormalize = true;
        Ok(p)
    }

    /// Roughness refinement fusing a prediction with a grid-search estimate.
    pub fn roughness_problem(
        &self,
        predicted: &ScalarMap,
        grid_search: &ScalarMap,
        refined_diffuse: &ColorMap,
        input_image: &RadianceImage,
    ) -> Result<DcrfProblem> {
        self.expect_target(RefineTarget::Roughness)?;
        let (h, w) = predicted.dims();
        grid_search.ensure_dims((h, w))?;
        let c = normalize_coefficients(&self.coefficients())?;
        let (alpha0, alpha1) = roughness_unary_weight_map(&centered_positions(h, w), input_image, c[0])?;
        let features = FeatureMaps::new(h, w).with_refined_diffuse(refined_diffuse)?;
        self.problem(
            vec![
                Unary {
                    target: Field::from_scalar(predicted),
                    weight: alpha0,
                },
                Unary {
                    target: Field::from_scalar(grid_search),
                    weight: alpha1.map(|a| a * c[1]),
                },
            ],
            features,
        )
    }
}

/// `theta_i / sum(theta)` after clipping negatives to zero.
pub fn normalize_coefficients(theta: &[f64]) -> Result<Vec<f64>> {
    let clipped: Vec<f64> = theta.iter().map(|t| t.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::invalid("coefficients must contain a positive finite value"));
    }
    Ok(clipped.iter().map(|t| t / total).collect())
}

/// Convex combination `sum_k p_k theta^(k)`, componentwise.
pub fn blend_params_by_class(param_sets: &[Vec<f64>], class_probs: &[f64]) -> Result<Vec<f64>> {
    if param_sets.is_empty() || param_sets.len() != class_probs.len() {
        return Err(Error::invalid("need one coefficient set per class probability"));
    }
    let len = param_sets[0].len();
    if param_sets.iter().any(|s| s.len() != len) {
        return Err(Error::invalid("coefficient sets differ in length"));
    }
    if class_probs.iter().any(|p| !(*p >= 0.0)) || (class_probs.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(Error::invalid("class probabilities must be non-negative and sum to 1"));
    }
    let mut out = vec![0.0; len];
    for (set, p) in param_sets.iter().zip(class_probs) {
        for (o, v) in out.iter_mut().zip(set) {
            *o += p * v;
        }
    }
    Ok(out)
}

/// Blends per-material presets of identical structure into one. Each set is
/// normalized before blending, so the result sums to 1 as well.
pub fn blend_presets(presets: &[DcrfPreset], class_probs: &[f64]) -> Result<DcrfPreset> {
    let first = presets
        .first()
        .ok_or_else(|| Error::invalid("need at least one preset"))?;
    let sets = presets
        .iter()
        .map(|p| {
            let same_shape = p.target == first.target
                && p.kernels.len() == first.kernels.len()
                && p.kernels.iter().zip(&first.kernels).all(|(a, b)| a.features == b.features);
            if !same_shape {
                return Err(Error::invalid(format!("preset {} differs in structure", p.name)));
            }
            normalize_coefficients(&p.coefficients())
        })
        .collect::<Result<Vec<_>>>()?;
    let theta = blend_params_by_class(&sets, class_probs)?;
    let mut out = first.with_coefficients(&theta)?;
    out.name = format!("{}-blend", first.name);
    Ok(out)
}
