//! Echo state networks that store temporal patterns and recall them through
//! conceptors or diagonal conceptors.
//!
//! The pipeline is: build a [`Reservoir`], generate or load [`Pattern`]s,
//! [`train`] a [`LoadedSystem`] and run it autonomously with
//! [`self_generate`] or [`morph_run`]. [`evaluation`] scores the recalls.
//!
//! ```
//! use conceptor_core::*;
//!
//! let res = init_reservoir(&ReservoirConfig::new(40, 1, 7)).unwrap();
//! let patterns = vec![gen_sine(8.8342522, 600).unwrap()];
//! let ridge = RidgeConfig { rho_w: 1e-3, rho_wout: 1e-6 };
//! let plan = TrainingPlan::new(TrainMode::Conceptor, 100, vec![50.0], ridge, 1);
//! let sys = train(&res, &patterns, &plan).unwrap();
//! let recall = self_generate(&sys, 0, 200, None).unwrap();
//! assert_eq!(recall.length(), 200);
//! ```

pub mod conceptor;
pub mod diagonal;
pub mod error;
pub mod evaluation;
pub mod filter;
pub mod loading;
pub mod patterns;
pub mod persist;
pub mod reservoir;
pub mod rng;
pub mod trainer;

pub use conceptor::{
    autoconceptor_step, compute_conceptor, conceptor_loss, correlation, loss_gradient, mix_conceptors,
    Conceptor, CorrelationMatrix,
};
pub use diagonal::{
    apply_conception, compute_conception, diag_autoconceptor_step, fixed_points, integrate_weight_flow,
    mix_conceptions, random_conception, AdaptationRule, ConceptionVector, FixedPoints,
};
pub use error::{Error, Result};
pub use evaluation::{
    evaluate_recall, long_term_stability, nrmse, nrmse_multichannel, phase_align, rmse, NrmseReport,
};
pub use filter::{Filter, FilterKernel};
pub use loading::{harvest, ridge_solve, store_patterns, Readout, RidgeConfig, StateHarvest};
pub use patterns::{
    delay_embed, gen_attractor, gen_multichannel, gen_periodic_random, gen_sine, load_csv, AttractorParams,
    AttractorSystem,
    Pattern,
};
pub use reservoir::{
    drive, drive_step, estimate_washout, init_reservoir, spectral_radius, Reservoir, ReservoirConfig,
    ReservoirState,
};
pub use trainer::{
    morph_run, morph_schedule, self_generate, train, train_with_traces, InitialConception, LoadedSystem,
    MorphSpec, PatternTrace, TrainMode, TrainingPlan,
};
