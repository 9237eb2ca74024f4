//! Non-neural material estimation: per-pixel roughness grid search and a
//! projected gradient-descent fitter driven by the analytic renderer
//! derivatives.

mod fit;
mod gridsearch;

pub use fit::{
    albedo_from_observation, fit_svbrdf_gd, initial_maps_from_observation, FitConfig, FitOutcome, LitObservation,
    StepSizes,
};
pub use gridsearch::{roughness_grid_search, roughness_grid_search_detailed, GridSearchConfig, GridSearchOutcome};
