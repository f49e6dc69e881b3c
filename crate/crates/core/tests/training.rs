//! Loading, recall, morphing and persistence checked against direct computation.

use conceptor_core::reservoir::drive_step;
use conceptor_core::*;
use nalgebra::{DMatrix, DVector};

const LEN: usize = 1500;

fn patterns() -> Vec<Pattern> {
    vec![
        gen_sine(8.8342522, LEN).unwrap(),
        gen_periodic_random(5, LEN, 11, 0.0).unwrap(),
    ]
}

fn reservoir() -> Reservoir {
    init_reservoir(&ReservoirConfig::new(60, 1, 1)).unwrap()
}

fn ridge() -> RidgeConfig {
    RidgeConfig { rho_w: 1e-3, rho_wout: 1e-4 }
}

fn diagonal_plan(mode: TrainMode) -> TrainingPlan {
    let mut plan = TrainingPlan::new(mode, 200, vec![8.0, 8.0], ridge(), 3);
    plan.n_stage1 = 300;
    plan
}

#[test]
fn harvest_collects_every_post_washout_step() {
    let res = init_reservoir(&ReservoirConfig::new(100, 1, 1)).unwrap();
    let p = gen_sine(8.8342522, 5000).unwrap();
    let h = harvest(&res, &p, None, 200, 4800, &ReservoirState::zeros(100)).unwrap();
    assert_eq!(h.len(), 4800);
    assert_eq!(h.states.shape(), (100, 4800));
    assert_eq!(h.prev_states.shape(), (100, 4800));
    assert_eq!(h.w_targets.shape(), (100, 4800));
    assert_eq!(h.inputs.shape(), (1, 4800));
    // the harvested states are exactly the driven trajectory
    let direct = drive(&res, &ReservoirState::zeros(100), &p, 0, 5000).unwrap();
    for k in [0, 1, 2399, 4799] {
        assert_eq!(h.states.column(k), direct[200 + k].x.column(0));
    }
    assert_eq!(h.start.x, direct[199].x);
}

#[test]
fn stored_weights_satisfy_their_normal_equations() {
    let res = reservoir();
    let pats = patterns();
    let plan = TrainingPlan::new(TrainMode::Conceptor, 200, vec![10.0, 10.0], ridge(), 1);
    let (sys, _) = train_with_traces(&res, &pats, &plan).unwrap();
    let harvests: Vec<_> = pats
        .iter()
        .map(|p| harvest(&res, p, None, 200, LEN - 200, &ReservoirState::zeros(60)).unwrap())
        .collect();
    let cat = |f: &dyn Fn(&StateHarvest) -> &DMatrix<f64>| {
        let cols: Vec<_> = harvests.iter().flat_map(|h| f(h).column_iter().map(|c| c.into_owned())).collect();
        DMatrix::from_columns(&cols)
    };
    let (z_prev, targets, z, p) = (cat(&|h| &h.prev_states), cat(&|h| &h.w_targets), cat(&|h| &h.states), cat(&|h| &h.inputs));

    // (W Z − T) Zᵀ + ρ W = 0
    let residual = (&sys.w * &z_prev - &targets) * z_prev.transpose() + &sys.w * ridge().rho_w;
    let scale = (&targets * z_prev.transpose()).norm();
    assert!(residual.norm() < 1e-8 * scale, "W residual {}", residual.norm() / scale);
    let residual = (&sys.w_out * &z - &p) * z.transpose() + &sys.w_out * ridge().rho_wout;
    let scale = (&p * z.transpose()).norm();
    assert!(residual.norm() < 1e-8 * scale, "W_out residual {}", residual.norm() / scale);

    // the loaded network reproduces the driven recurrent input on the training data
    let fit = (&sys.w * &z_prev - &targets).norm() / targets.norm();
    assert!(fit < 1e-2, "relative fit {fit}");
}

#[test]
fn training_is_deterministic() {
    let res = reservoir();
    for mode in [TrainMode::Conceptor, TrainMode::DiagonalExplicit, TrainMode::DiagonalIterative] {
        let plan = diagonal_plan(mode);
        let a = train(&res, &patterns(), &plan).unwrap();
        let b = train(&res, &patterns(), &plan).unwrap();
        assert_eq!(a, b, "{mode:?}");
    }
}

#[test]
fn unit_conception_reduces_to_plain_loading() {
    let res = reservoir();
    let mut diag = diagonal_plan(TrainMode::DiagonalExplicit);
    diag.initial_conception = InitialConception::Ones;
    diag.apertures = vec![1e8, 1e8];
    let plain = TrainingPlan::new(TrainMode::Conceptor, 500, vec![10.0, 10.0], ridge(), 3);
    let a = train(&res, &patterns(), &diag).unwrap();
    let b = train(&res, &patterns(), &plain).unwrap();
    let rel = |x: &DMatrix<f64>, y: &DMatrix<f64>| (x - y).norm() / y.norm();
    assert!(rel(&a.w, &b.w) < 1e-6, "W differs by {}", rel(&a.w, &b.w));
    assert!(rel(&a.w_out, &b.w_out) < 1e-6);
    assert_eq!(a.start_states, b.start_states);
}

#[test]
fn stage_windows_have_the_planned_lengths() {
    let res = reservoir();
    let mut plan = diagonal_plan(TrainMode::DiagonalExplicit);
    plan.n_collect = Some(700);
    let (_, traces) = train_with_traces(&res, &patterns(), &plan).unwrap();
    for t in &traces {
        assert_eq!(t.stage1_states.ncols(), 300);
        assert_eq!(t.collected_states.ncols(), 700);
    }
    plan.reuse_stage1 = true;
    let (_, traces) = train_with_traces(&res, &patterns(), &plan).unwrap();
    assert_eq!(traces[0].collected_states.ncols(), 1000);
    assert_eq!(plan.collection_start(), 200);

    let plain = TrainingPlan::new(TrainMode::Conceptor, 200, vec![10.0, 10.0], ridge(), 1);
    let (_, traces) = train_with_traces(&res, &patterns(), &plain).unwrap();
    assert_eq!(traces[0].collected_states.ncols(), LEN - 200);
    assert_eq!(traces[0].stage1_states.ncols(), 0);
}

#[test]
fn one_recall_step_matches_hand_computation() {
    let res = reservoir();
    for mode in [TrainMode::Conceptor, TrainMode::DiagonalExplicit] {
        let sys = train(&res, &patterns(), &diagonal_plan(mode)).unwrap();
        for j in 0..2 {
            let f = &sys.filters[j];
            let r0 = &sys.start_states[j].x;
            let z0 = f.apply(r0).unwrap();
            let r1 = (&sys.w * z0 + &res.bias).map(f64::tanh);
            let y1 = &sys.w_out * f.apply(&r1).unwrap();
            let got = self_generate(&sys, j, 1, None).unwrap();
            assert!((got.data[(0, 0)] - y1[0]).abs() < 1e-12);
        }
    }
}

#[test]
fn recall_from_training_state_continues_the_pattern() {
    let res = init_reservoir(&ReservoirConfig::new(100, 1, 1)).unwrap();
    let pats = patterns();
    let plan = TrainingPlan::new(TrainMode::Conceptor, 200, vec![100.0, 100.0], ridge(), 1);
    let sys = train(&res, &pats, &plan).unwrap();
    for (j, p) in pats.iter().enumerate() {
        let y = self_generate(&sys, j, 50, None).unwrap();
        // no phase search: recall starts where collection started
        let e = nrmse(&y.channel(0), &p.channel(0)[200..250]).unwrap();
        assert!(e < 0.1, "pattern {j}: {e}");
    }
}

#[test]
fn recall_accepts_an_explicit_start() {
    let res = reservoir();
    let sys = train(&res, &patterns(), &diagonal_plan(TrainMode::Conceptor)).unwrap();
    let stored = self_generate(&sys, 0, 20, None).unwrap();
    let explicit = self_generate(&sys, 0, 20, Some(&sys.start_states[0])).unwrap();
    assert_eq!(stored, explicit);
    assert_eq!(stored.name, "recall_0");
    assert!(self_generate(&sys, 2, 20, None).is_err());
    assert!(self_generate(&sys, 0, 0, None).is_err());
}

#[test]
fn morph_at_zero_is_plain_recall() {
    let res = reservoir();
    for mode in [TrainMode::Conceptor, TrainMode::DiagonalExplicit] {
        let sys = train(&res, &patterns(), &diagonal_plan(mode)).unwrap();
        let spec = MorphSpec { from: 0, to: 1, mu_min: 0.0, mu_max: 0.0, n_pre: 50, n_morph: 10, n_post: 40, nudge: false };
        let (morph, mu) = morph_run(&sys, &spec).unwrap();
        assert_eq!(mu.len(), 100);
        assert!(mu.iter().all(|m| *m == 0.0));
        let recall = self_generate(&sys, 0, 100, None).unwrap();
        assert_eq!(morph.data, recall.data);
    }
}

#[test]
fn morph_filter_is_the_blend() {
    let res = reservoir();
    let sys = train(&res, &patterns(), &diagonal_plan(TrainMode::DiagonalExplicit)).unwrap();
    let spec = MorphSpec { from: 0, to: 1, mu_min: 0.25, mu_max: 0.25, n_pre: 1, n_morph: 1, n_post: 0, nudge: false };
    let (morph, _) = morph_run(&sys, &spec).unwrap();
    let (Filter::Conception(a), Filter::Conception(b)) = (&sys.filters[0], &sys.filters[1]) else {
        panic!("expected conception vectors");
    };
    let c = &a.weights * 0.75 + &b.weights * 0.25;
    let r0 = &sys.start_states[0].x;
    let r1 = (&sys.w * c.component_mul(r0) + &res.bias).map(f64::tanh);
    let y1 = &sys.w_out * c.component_mul(&r1);
    assert!((morph.data[(0, 0)] - y1[0]).abs() < 1e-12);
}

#[test]
fn save_and_load_round_trip() {
    let res = reservoir();
    for mode in [TrainMode::Conceptor, TrainMode::DiagonalIterative] {
        let sys = train(&res, &patterns(), &diagonal_plan(mode)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        sys.save_to_dir(dir.path()).unwrap();
        let back = LoadedSystem::load_from_dir(dir.path()).unwrap();
        assert_eq!(back.w, sys.w);
        assert_eq!(back.w_out, sys.w_out);
        assert_eq!(back.filters, sys.filters);
        assert_eq!(back.start_states, sys.start_states);
        assert_eq!(back.mode, sys.mode);
        assert_eq!(self_generate(&back, 1, 30, None).unwrap(), self_generate(&sys, 1, 30, None).unwrap());
    }
}

#[test]
fn csv_writing_is_idempotent() {
    let m = DMatrix::from_fn(7, 3, |i, j| ((i * 3 + j) as f64).sqrt() * 1e-7 - 3.25);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    persist::write_matrix(&path, &m).unwrap();
    let first = std::fs::read_to_string(&path).unwrap();
    let back = persist::read_matrix(&path).unwrap();
    assert_eq!(back, m);
    persist::write_matrix(&path, &back).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), first);
}

#[test]
fn oversized_conception_weights_are_reported_as_divergence() {
    let res = reservoir();
    let mut sys = train(&res, &patterns(), &diagonal_plan(TrainMode::DiagonalExplicit)).unwrap();
    sys.filters[0] = Filter::Conception(ConceptionVector { weights: DVector::from_element(60, 50.0), aperture: 8.0 });
    sys.start_states[0] = ReservoirState::filled(60, 0.5);
    let err = self_generate(&sys, 0, 100, None).unwrap_err();
    assert!(matches!(err, Error::Divergence { pattern: 0, .. }), "{err}");
}

#[test]
fn zero_regularization_on_rank_deficient_states_is_singular() {
    let res = reservoir();
    let flat = Pattern::from_channel("flat", &vec![0.0; 400]).unwrap();
    let ridge = RidgeConfig { rho_w: 0.0, rho_wout: 0.0 };
    let plan = TrainingPlan::new(TrainMode::Conceptor, 100, vec![1.0], ridge, 1);
    let err = train(&res, &[flat], &plan).unwrap_err();
    assert!(matches!(err, Error::Singular { .. }), "{err}");
}

#[test]
fn recall_matches_a_manual_drive_of_the_loaded_network() {
    // with W standing in for W* and zero inputs the loaded loop is an ordinary drive
    let res = reservoir();
    let sys = train(&res, &patterns(), &diagonal_plan(TrainMode::Conceptor)).unwrap();
    let Filter::Conceptor(c) = &sys.filters[0] else { panic!() };
    let mut r = sys.start_states[0].x.clone();
    let mut shadow = res.clone();
    shadow.w_star = &sys.w * &c.matrix;
    let zero = DVector::zeros(1);
    let y = self_generate(&sys, 0, 25, None).unwrap();
    for n in 0..25 {
        r = drive_step(&shadow, &ReservoirState { x: r }, &zero).unwrap().x;
        let expected = (&sys.w_out * &c.matrix * &r)[0];
        assert!((y.data[(n, 0)] - expected).abs() < 1e-10);
    }
}
