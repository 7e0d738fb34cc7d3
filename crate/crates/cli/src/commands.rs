//! Subcommand implementations. Each returns its CSV tables and a JSON
//! results object; nothing is written here.

use crate::config::{Check, Config, FormFactorKind, KernelKind, ModesKind, PolarizationKind, Quantity};
use crate::output::{num, Csv};
use fiberpath::estimators::{
    expectation_expn, expectation_weyl, green_n_point, ground_energy, partition, Ensemble, EstimateResult, Model,
    Schedule, WeylInsertion,
};
use fiberpath::field_model::{FormFactor, KernelTable, ModeFunction, ModeSet, PairKernel, TableGrid, TableHeader};
use fiberpath::fock::{
    eigenvalues, energy_curves, ground_multiplicity, perturbative_ground_energy, positivity_check,
    relative_bound_check, spectral_gap, FockModel, PositivityConfig,
};
use fiberpath::paths::PathGrid;
use fiberpath::polarization::{covariance_residual, frame_residual, rotation_matrix, theta_angle, PolarizationBasis};
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};
use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

#[derive(Debug)]
pub enum Failure {
    /// Bad input; nothing is written. Exit code 2.
    Validation(Vec<String>),
    /// The estimator cannot produce a meaningful value. Exit code 3.
    Statistical(String),
    /// Internal or I/O failure. Exit code 1.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Statistical(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            Failure::Validation(v) => v.clone(),
            Failure::Statistical(s) | Failure::Runtime(s) => vec![s.clone()],
        }
    }
}

impl From<fiberpath::Error> for Failure {
    fn from(e: fiberpath::Error) -> Self {
        use fiberpath::Error as E;
        match e {
            E::Statistical(_) => Failure::Statistical(e.to_string()),
            E::Numeric(_) | E::Io(_) => Failure::Runtime(e.to_string()),
            E::Domain(_) | E::DegenerateDirection(_) | E::Extrapolation { .. } | E::TableMismatch { .. } => {
                Failure::Validation(vec![e.to_string()])
            }
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Validation(vec![msg.into()]))
}

fn check(errs: Vec<String>) -> Result<(), Failure> {
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(errs))
    }
}

pub struct Report {
    pub csvs: Vec<Csv>,
    pub results: Value,
}

/// Momentum cells `P_x,P_y,P_z`, zero-padded in `d = 2`.
fn p_cells(p: &[f64]) -> Vec<String> {
    (0..3).map(|i| num(p.get(i).copied().unwrap_or(0.0))).collect()
}

fn estimate_json(r: &EstimateResult) -> Value {
    json!({ "re": r.mean.re, "im": r.mean.im, "stderr": r.stderr, "n_samples": r.n_samples, "n_batches": r.n_batches })
}

fn form_factor(cfg: &Config) -> Result<FormFactor, Failure> {
    let m = &cfg.model;
    Ok(match m.form_factor {
        FormFactorKind::SharpCutoff => FormFactor::sharp_cutoff(m.d, m.lambda)?,
        FormFactorKind::Table => FormFactor::table(m.d, m.knots.clone(), m.values.clone())?,
    })
}

fn mode_set(cfg: &Config, ff: &FormFactor) -> Result<ModeSet, Failure> {
    let m = &cfg.model;
    Ok(match m.modes {
        ModesKind::ReferencePair => ModeSet::reference_pair(),
        ModesKind::Handcrafted => {
            let reps: Vec<(Vec<f64>, f64)> = m.pairs.iter().map(|p| (p.k.clone(), p.weight)).collect();
            ModeSet::handcrafted(ff, &reps)?
        }
        ModesKind::Continuum => ModeSet::continuum_quadrature(ff, m.quadrature[0], m.quadrature[1], m.quadrature[2])?,
    })
}

fn polarization(kind: PolarizationKind, axis: &[f64]) -> Result<PolarizationBasis, Failure> {
    Ok(match kind {
        PolarizationKind::Meridian => PolarizationBasis::meridian(),
        PolarizationKind::AxisCross => PolarizationBasis::axis_cross(Vector3::new(axis[0], axis[1], axis[2]))?,
    })
}

fn table_grid(cfg: &Config, ff: &FormFactor, tau_default: f64) -> Result<TableGrid, Failure> {
    let t = &cfg.table;
    let tau_max = t.tau_max.unwrap_or(tau_default);
    let h_tau = t.h_tau.unwrap_or(0.0025 / ff.lambda());
    let h_r = t.h_r.unwrap_or(0.004 / ff.lambda());
    Ok(TableGrid::with_steps(tau_max, t.r_max, h_tau, h_r)?)
}

/// Kernel for the path functionals; the table is loaded from or written to
/// `table.path` when one is configured.
fn pair_kernel(cfg: &Config, ff: &FormFactor, modes: &ModeSet) -> Result<PairKernel, Failure> {
    match cfg.model.kernel {
        KernelKind::ModeSum => Ok(PairKernel::mode_sum(modes.clone())),
        KernelKind::RadialTable => {
            let grid = table_grid(cfg, ff, cfg.paths.t_end)?;
            let table = match &cfg.table.path {
                Some(p) => KernelTable::load_or_build(&PathBuf::from(p), ff, grid)?,
                None => KernelTable::build(ff, grid)?,
            };
            Ok(PairKernel::table(table))
        }
    }
}

fn ensemble(cfg: &Config, seed: u64) -> Result<Ensemble, Failure> {
    let p = &cfg.paths;
    Ok(Ensemble::with_batches(
        PathGrid::new(p.t_end, p.n_steps)?,
        cfg.model.d,
        p.n_paths,
        seed,
        p.antithetic,
        p.n_batches,
    )?)
}

fn on_grid(ens: &Ensemble, label: &str, t: f64) -> Result<(), String> {
    ens.grid.index_of(t).map(|_| ()).map_err(|e| format!("{label} = {t}: {e}"))
}

fn estimator_model(cfg: &Config) -> Result<(Model, ModeSet), Failure> {
    let ff = form_factor(cfg)?;
    let modes = mode_set(cfg, &ff)?;
    let mut model = Model::new(pair_kernel(cfg, &ff, &modes)?, cfg.e);
    model.diagonal_rule = cfg.paths.diagonal_rule;
    Ok((model, modes))
}

pub fn energy(cfg: &Config, seed: u64) -> Result<Report, Failure> {
    check(cfg.validate_common())?;
    check(cfg.validate_paths())?;
    let ens = ensemble(cfg, seed)?;
    let ladder = &cfg.estimator.t_ladder;
    let mut errs = Vec::new();
    if ladder.len() < 2 || ladder.windows(2).any(|w| !(w[1] > w[0])) {
        errs.push("estimator.t_ladder needs ≥ 2 increasing horizons".into());
    }
    for &t in ladder {
        if let Err(e) = on_grid(&ens, "estimator.t_ladder entry", t) {
            errs.push(e);
        }
    }
    check(errs)?;
    let (model, _) = estimator_model(cfg)?;
    let mut csv = Csv::new("energy.csv", &["P_x", "P_y", "P_z", "e", "t1", "t2", "E_hat", "stderr", "n_paths", "n_steps"]);
    let mut results = Vec::new();
    for p in &cfg.estimator.momenta {
        let est = ground_energy(&model, p, ladder, &ens)?;
        for tp in &est.two_point {
            let mut row = p_cells(p);
            row.extend([num(cfg.e), num(tp.t1), num(tp.t2), num(tp.energy), num(tp.stderr)]);
            row.extend([cfg.paths.n_paths.to_string(), cfg.paths.n_steps.to_string()]);
            csv.row(row);
        }
        results.push(json!({
            "P": p,
            "energy": est.energy.mean.re,
            "stderr": est.energy.stderr,
            "t1": ladder[ladder.len() - 2],
            "t2": ladder[ladder.len() - 1],
            "note": "two-point estimate at finite horizons; biased by excited-state admixture, see ladder",
            "ladder": est.ladder.iter().map(|l| json!({ "t": l.t, "Z": estimate_json(&l.z) })).collect::<Vec<_>>(),
            "two_point": est.two_point,
        }));
    }
    Ok(Report { csvs: vec![csv], results: json!({ "energies": results, "ensemble": ens.describe() }) })
}

fn real_function(modes: &ModeSet, per_pair: &[Vec<f64>], label: &str) -> Result<ModeFunction, Failure> {
    if per_pair.len() != modes.n_pairs() || per_pair.iter().any(|v| v.len() != modes.d()) {
        return invalid(format!("{label} needs {} vectors of length {}, one per mode pair", modes.n_pairs(), modes.d()));
    }
    Ok(ModeFunction::real_even(modes, per_pair)?)
}

fn schedule(cfg: &Config, modes: &ModeSet) -> Result<Schedule, Failure> {
    let g = cfg.estimator.green.as_ref().ok_or_else(|| Failure::Validation(vec!["quantity = \"green\" needs [estimator.green]".into()]))?;
    let mut insertions = Vec::new();
    for (i, ins) in g.insertions.iter().enumerate() {
        insertions.push(match (&ins.theta, &ins.f) {
            (None, None) => None,
            (Some(theta), Some(f)) => {
                Some(WeylInsertion { f: real_function(modes, f, &format!("estimator.green.insertions[{i}].f"))?, theta: *theta })
            }
            _ => return invalid(format!("estimator.green.insertions[{i}] needs both theta and f, or neither")),
        });
    }
    // A schedule without listed insertions has none.
    if g.insertions.is_empty() && !g.momenta.is_empty() {
        insertions = vec![None; g.momenta.len() - 1];
    }
    Ok(Schedule { s: g.s.clone(), t: g.t.clone(), momenta: g.momenta.clone(), insertions })
}

pub fn observable(cfg: &Config, seed: u64, quantity: Option<Quantity>) -> Result<Report, Failure> {
    check(cfg.validate_common())?;
    check(cfg.validate_paths())?;
    let quantity = quantity
        .or(cfg.estimator.quantity)
        .ok_or_else(|| Failure::Validation(vec!["estimator.quantity (expN | weyl | green) is required".into()]))?;
    let ens = ensemble(cfg, seed)?;
    let (model, modes) = estimator_model(cfg)?;
    match quantity {
        Quantity::ExpN | Quantity::Weyl => {
            let t = cfg.estimator.t.ok_or_else(|| Failure::Validation(vec!["estimator.t is required".into()]))?;
            check(on_grid(&ens, "2 × estimator.t", 2.0 * t).and(on_grid(&ens, "estimator.t", t)).err().into_iter().collect())?;
            if quantity == Quantity::ExpN {
                if cfg.estimator.beta.iter().any(|b| !(*b >= 0.0)) {
                    return invalid("estimator.beta entries must be nonnegative");
                }
                let mut csv = Csv::new("observable.csv", &["beta", "P_x", "P_y", "P_z", "e", "t", "value", "stderr"]);
                let mut results = Vec::new();
                for &beta in &cfg.estimator.beta {
                    for p in &cfg.estimator.momenta {
                        let r = expectation_expn(&model, beta, p, t, &ens)?;
                        let mut row = vec![num(beta)];
                        row.extend(p_cells(p));
                        row.extend([num(cfg.e), num(t), num(r.mean.re), num(r.stderr)]);
                        csv.row(row);
                        results.push(json!({ "beta": beta, "P": p, "t": t, "value": estimate_json(&r) }));
                    }
                }
                Ok(Report { csvs: vec![csv], results: json!({ "quantity": "expN", "values": results }) })
            } else {
                let f = real_function(&modes, &cfg.estimator.f, "estimator.f")?;
                let mut csv = Csv::new("observable.csv", &["P_x", "P_y", "P_z", "e", "t", "value_re", "value_im", "stderr"]);
                let mut results = Vec::new();
                for p in &cfg.estimator.momenta {
                    let r = expectation_weyl(&model, &f, p, t, &ens)?;
                    let mut row = p_cells(p);
                    row.extend([num(cfg.e), num(t), num(r.mean.re), num(r.mean.im), num(r.stderr)]);
                    csv.row(row);
                    results.push(json!({ "P": p, "t": t, "value": estimate_json(&r) }));
                }
                Ok(Report { csvs: vec![csv], results: json!({ "quantity": "weyl", "values": results }) })
            }
        }
        Quantity::Green => {
            let sched = schedule(cfg, &modes)?;
            let r = green_n_point(&model, &sched, &ens)?;
            let mut csv = Csv::new("observable.csv", &["e", "m", "value_re", "value_im", "stderr"]);
            csv.row(vec![num(cfg.e), sched.m().to_string(), num(r.mean.re), num(r.mean.im), num(r.stderr)]);
            Ok(Report { csvs: vec![csv], results: json!({ "quantity": "green", "value": estimate_json(&r), "metadata": r.metadata }) })
        }
    }
}

fn oracle_model(cfg: &Config, n_max: usize) -> Result<FockModel, Failure> {
    if cfg.model.d != 3 {
        return invalid("the Fock oracle needs model.d = 3");
    }
    let ff = form_factor(cfg)?;
    let modes = mode_set(cfg, &ff)?;
    Ok(FockModel::new(&modes, &polarization(cfg.model.polarization, &cfg.model.axis)?, n_max)?)
}

pub fn compare_oracle(cfg: &Config, seed: u64) -> Result<Report, Failure> {
    check(cfg.validate_common())?;
    check(cfg.validate_paths())?;
    if cfg.model.kernel != KernelKind::ModeSum {
        return invalid("compare-oracle needs model.kernel = \"mode-sum\" on the oracle's mode set");
    }
    let ens = ensemble(cfg, seed)?;
    let mut errs = Vec::new();
    for &t in &cfg.oracle.t {
        if let Err(e) = on_grid(&ens, "oracle.t entry", t) {
            errs.push(e);
        }
    }
    if let Some(t) = cfg.estimator.t {
        if let Err(e) = on_grid(&ens, "2 × estimator.t", 2.0 * t).and(on_grid(&ens, "estimator.t", t)) {
            errs.push(e);
        }
    }
    check(errs)?;
    let fm = oracle_model(cfg, cfg.oracle.n_max)?;
    let (model, modes) = estimator_model(cfg)?;
    let weyl_f = if cfg.estimator.f.is_empty() { None } else { Some(real_function(&modes, &cfg.estimator.f, "estimator.f")?) };
    let mut csv = Csv::new(
        "compare-oracle.csv",
        &[
            "quantity", "P_x", "P_y", "P_z", "e", "t", "beta", "mc_re", "mc_im", "stderr", "oracle_re", "oracle_im",
            "sigma_deviation", "rel_deviation",
        ],
    );
    let mut max_sigma: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut ground = Vec::new();
    let mut push = |csv: &mut Csv, q: &str, p: &[f64], t: f64, beta: Option<f64>, r: &EstimateResult, exact: Complex64| {
        let sigma = r.sigma_deviation(exact);
        let rel = (r.mean - exact).norm() / exact.norm();
        max_sigma = max_sigma.max(sigma);
        max_rel = max_rel.max(rel);
        let mut row = vec![q.to_string()];
        row.extend(p_cells(p));
        row.extend([num(cfg.e), num(t), beta.map(num).unwrap_or_default()]);
        row.extend([num(r.mean.re), num(r.mean.im), num(r.stderr), num(exact.re), num(exact.im), num(sigma), num(rel)]);
        csv.row(row);
    };
    for p in &cfg.estimator.momenta {
        let spec = fm.hamiltonian(p, cfg.e)?;
        for &t in &cfg.oracle.t {
            let r = partition(&model, p, t, &ens)?;
            push(&mut csv, "partition", p, t, None, &r, Complex64::new(spec.vacuum_element(t), 0.0));
        }
        let mut g = json!({ "P": p, "E0": spec.ground_energy(), "multiplicity": spec.ground_multiplicity() });
        if let Some(t) = cfg.estimator.t {
            for &beta in &cfg.estimator.beta {
                let r = expectation_expn(&model, beta, p, t, &ens)?;
                push(&mut csv, "expN", p, t, Some(beta), &r, Complex64::new(fm.expn_expectation(&spec, beta, t), 0.0));
                g[format!("expN_ground_beta_{beta}")] = json!(fm.expn_ground(&spec, beta));
            }
            if let Some(f) = &weyl_f {
                let r = expectation_weyl(&model, f, p, t, &ens)?;
                push(&mut csv, "weyl", p, t, None, &r, fm.weyl_expectation(&spec, f, t)?);
                let w = fm.weyl_ground(&spec, f)?;
                g["weyl_ground"] = json!({ "re": w.re, "im": w.im });
            }
        }
        ground.push(g);
    }
    Ok(Report {
        csvs: vec![csv],
        results: json!({
            "max_sigma_deviation": max_sigma,
            "max_rel_deviation": max_rel,
            "oracle_n_max": cfg.oracle.n_max,
            "oracle_dim": fm.dim(),
            "ground_states": ground,
        }),
    })
}

pub fn oracle(cfg: &Config, seed: u64, checks: &[Check]) -> Result<Report, Failure> {
    check(cfg.validate_common())?;
    let checks: Vec<Check> = if !checks.is_empty() {
        checks.to_vec()
    } else if !cfg.oracle.checks.is_empty() {
        cfg.oracle.checks.clone()
    } else {
        vec![Check::Spectra]
    };
    let mut errs = Vec::new();
    for (i, p) in cfg.estimator.momenta.iter().enumerate() {
        if p.len() != 3 || p.iter().any(|x| !x.is_finite()) {
            errs.push(format!("estimator.momenta[{i}] must be a finite 3-vector"));
        }
    }
    if cfg.oracle.e2.iter().any(|x| !(*x >= 0.0)) {
        errs.push("oracle.e2 entries must be nonnegative".into());
    }
    check(errs)?;
    let needs_fock = checks.iter().any(|c| !matches!(c, Check::Positivity));
    let fm = if needs_fock { Some(oracle_model(cfg, cfg.oracle.n_max)?) } else { None };
    let mut csvs = Vec::new();
    let mut results = serde_json::Map::new();
    for c in checks {
        match c {
            Check::Spectra => {
                let fm = fm.as_ref().expect("built above");
                let mut csv = Csv::new("oracle_spectra.csv", &["P_x", "P_y", "P_z", "e", "level", "eigenvalue"]);
                let mut out = Vec::new();
                for p in &cfg.estimator.momenta {
                    let h = fm.build_h(p, cfg.e)?;
                    let herm = (&h - h.transpose()).amax();
                    let vals = eigenvalues(h)?;
                    for (i, v) in vals.iter().take(cfg.oracle.levels).enumerate() {
                        let mut row = p_cells(p);
                        row.extend([num(cfg.e), i.to_string(), num(*v)]);
                        csv.row(row);
                    }
                    out.push(json!({
                        "P": p,
                        "E0": vals[0],
                        "multiplicity": ground_multiplicity(&vals),
                        "gap": spectral_gap(&vals),
                        "hermiticity_residual": herm,
                    }));
                }
                csvs.push(csv);
                results.insert("spectra".into(), json!({ "dim": fm.dim(), "n_max": cfg.oracle.n_max, "momenta": out }));
            }
            Check::EnergyCurves | Check::Concavity => {
                if results.contains_key("energy_curves") {
                    continue;
                }
                let fm = fm.as_ref().expect("built above");
                let curves = energy_curves(fm, &cfg.estimator.momenta, &cfg.oracle.e2)?;
                let mut csv = Csv::new("oracle_energy_curves.csv", &["P_x", "P_y", "P_z", "e2", "E"]);
                for (p, row_e) in curves.momenta.iter().zip(&curves.energies) {
                    for (e2, en) in curves.e2.iter().zip(row_e) {
                        let mut row = p_cells(p);
                        row.extend([num(*e2), num(*en)]);
                        csv.row(row);
                    }
                }
                csvs.push(csv);
                let second: Vec<Value> = curves
                    .second_differences
                    .iter()
                    .enumerate()
                    .map(|(i, d)| json!({ "e2": curves.e2[i + 1], "second_difference": d }))
                    .collect();
                results.insert(
                    "energy_curves".into(),
                    json!({
                        "E00": curves.e00,
                        "E00_is_zero": curves.e00 == Some(0.0),
                        "monotone": curves.zero_row.map(|_| curves.monotone()),
                        "max_decrease": curves.max_decrease,
                        "concave_1e-9": curves.zero_row.map(|_| curves.concave(1e-9)),
                        "max_second_difference": curves.max_second_difference,
                        "second_differences": second,
                        "ordered": curves.zero_row.map(|_| curves.ordered()),
                        "min_ordering_margin": curves.min_ordering_margin,
                    }),
                );
            }
            Check::Uniqueness => {
                let coarse = fm.as_ref().expect("built above");
                let fine = oracle_model(cfg, cfg.oracle.n_max + 2)?;
                let a = eigenvalues(coarse.build_h(&[0.0; 3], cfg.e)?)?;
                let b = eigenvalues(fine.build_h(&[0.0; 3], cfg.e)?)?;
                let (ga, gb) = (spectral_gap(&a), spectral_gap(&b));
                let drift_e = (a[0] - b[0]).abs() / b[0].abs().max(f64::MIN_POSITIVE);
                let drift_gap = match (ga, gb) {
                    (Some(x), Some(y)) => Some((x - y).abs() / y),
                    _ => None,
                };
                let unique = ground_multiplicity(&a) == 1 && ga.is_some_and(|g| g > 0.0);
                let stable = drift_e < 1e-3 && drift_gap.is_some_and(|d| d < 1e-3);
                results.insert(
                    "uniqueness".into(),
                    json!({
                        "e": cfg.e,
                        "n_max": [cfg.oracle.n_max, cfg.oracle.n_max + 2],
                        "multiplicity": [ground_multiplicity(&a), ground_multiplicity(&b)],
                        "E0": [a[0], b[0]],
                        "gap": [ga, gb],
                        "drift_E0": drift_e,
                        "drift_gap": drift_gap,
                        "unique": unique,
                        "stable": stable,
                    }),
                );
            }
            Check::Positivity => {
                let po = &cfg.oracle.positivity;
                let mut csv = Csv::new(
                    "oracle_positivity.csv",
                    &[
                        "e", "t", "n_max", "grid_size", "min_entry", "reference_tail", "min_resolved_entry",
                        "unresolved_entries", "max_imaginary", "verdict",
                    ],
                );
                let mut out = Vec::new();
                for &e in &po.e {
                    let r = positivity_check(&PositivityConfig::new(po.t, e, po.n_max, po.grid_size))?;
                    csv.row(vec![
                        num(e),
                        num(po.t),
                        po.n_max.to_string(),
                        po.grid_size.to_string(),
                        num(r.min_entry),
                        num(r.reference_tail),
                        num(r.min_resolved_entry),
                        r.unresolved_entries.to_string(),
                        num(r.max_imaginary),
                        serde_json::to_value(r.verdict).expect("verdict serializes").as_str().unwrap_or("").to_string(),
                    ]);
                    out.push(serde_json::to_value(&r).expect("report serializes"));
                }
                csvs.push(csv);
                results.insert("positivity".into(), Value::Array(out));
            }
            Check::RelativeBound => {
                let fm = fm.as_ref().expect("built above");
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f: Vec<Complex64> = (0..fm.oscillators().len())
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect();
                let r = relative_bound_check(fm, &f, cfg.oracle.relative_bound_trials, seed.wrapping_add(1))?;
                results.insert("relative_bound".into(), serde_json::to_value(&r).expect("report serializes"));
            }
            Check::Perturbation => {
                let fm = fm.as_ref().expect("built above");
                let mut out = Vec::new();
                for p in &cfg.estimator.momenta {
                    let exact = fm.ground_energy(p, cfg.e)?;
                    let pt = perturbative_ground_energy(fm, p, cfg.e)?;
                    out.push(json!({ "P": p, "e": cfg.e, "E_oracle": exact, "E_second_order": pt, "difference": exact - pt }));
                }
                results.insert("perturbation".into(), Value::Array(out));
            }
        }
    }
    Ok(Report { csvs, results: Value::Object(results) })
}

pub fn check_polarization(construction: PolarizationKind, axis: &[f64], samples: usize, seed: u64) -> Result<Report, Failure> {
    if axis.len() != 3 {
        return invalid("the axis must be a 3-vector");
    }
    let basis = polarization(construction, axis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut frame, mut cov, mut theta_res, mut theta_law): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut skipped = 0usize;
    for _ in 0..samples {
        let k = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
            * rng.random_range(0.1..5.0);
        let phi: f64 = rng.random_range(-PI..PI);
        let axis_r =
            Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)).normalize();
        let generic = rotation_matrix(&axis_r, rng.random_range(-PI..PI))?;
        let vectors = match basis.vectors(&k) {
            Ok(v) => v,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        frame = frame.max(frame_residual(&vectors, &k)?);
        cov = cov.max(covariance_residual(&basis, &k, phi)?);
        theta_res = theta_res.max(theta_angle(&generic, &k, &basis)?.residual);
        let about = theta_angle(&rotation_matrix(&basis.axis, phi)?, &k, &basis)?;
        let diff = (about.signed() - basis.winding as f64 * phi).rem_euclid(TAU);
        theta_law = theta_law.max(diff.min(TAU - diff));
    }
    let pass = frame <= 1e-12 && cov <= 1e-10 && theta_res <= 1e-10 && theta_law <= 1e-10;
    let name = match construction {
        PolarizationKind::Meridian => "meridian",
        PolarizationKind::AxisCross => "axis-cross",
    };
    let mut csv = Csv::new(
        "check-polarization.csv",
        &["construction", "samples", "frame_residual", "covariance_residual", "theta_residual", "theta_winding_residual"],
    );
    csv.row(vec![name.into(), samples.to_string(), num(frame), num(cov), num(theta_res), num(theta_law)]);
    Ok(Report {
        csvs: vec![csv],
        results: json!({
            "construction": name,
            "axis": axis,
            "winding": basis.winding,
            "samples": samples,
            "degenerate_samples_skipped": skipped,
            "frame_residual": frame,
            "covariance_residual": cov,
            "theta_residual": theta_res,
            "theta_winding_residual": theta_law,
            "pass": pass,
        }),
    })
}

fn header_json(h: &TableHeader) -> Value {
    json!({
        "version": h.version,
        "d": h.d,
        "lambda": h.lambda,
        "fingerprint": format!("{:016x}", h.fingerprint),
        "tau_max": h.grid.tau_max,
        "n_tau": h.grid.n_tau,
        "r_max": h.grid.r_max,
        "n_r": h.grid.n_r,
    })
}

pub fn kernel_table_build(cfg: &Config) -> Result<Report, Failure> {
    check(cfg.validate_common())?;
    if cfg.model.d != 3 {
        return invalid("kernel tables are radial and need model.d = 3");
    }
    let path = cfg.table.path.as_ref().ok_or_else(|| Failure::Validation(vec!["table.path is required".into()]))?;
    let ff = form_factor(cfg)?;
    let grid = table_grid(cfg, &ff, cfg.paths.t_end)?;
    let table = KernelTable::build(&ff, grid)?;
    let path = PathBuf::from(path);
    table.save(&path)?;
    let header = TableHeader::read(&path)?;
    Ok(Report { csvs: Vec::new(), results: json!({ "path": path, "header": header_json(&header) }) })
}

pub fn kernel_table_inspect(path: &std::path::Path) -> Result<Report, Failure> {
    let header = TableHeader::read(path)?;
    let bytes = std::fs::metadata(path).map_err(|e| Failure::Runtime(e.to_string()))?.len();
    Ok(Report { csvs: Vec::new(), results: json!({ "path": path, "bytes": bytes, "header": header_json(&header) }) })
}
