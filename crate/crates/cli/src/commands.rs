use crate::args::*;
use crate::error::{invalid, CliError};
use crate::output::{Cell, Report, Table};
use nalgebra::{DMatrix, Vector3};
use rhomix_core::conv::{banded_inverse_check, banded_inverse_constants, conv_inverse, decay_fit};
use rhomix_core::discrete::{
    density_bound, event_extremes, maxcorr_blocks, maxcorr_pair, markov_chain_checks, mixing_coefficients,
    subjective_maxcorr_blocks,
};
use rhomix_core::event::{chogosov_event_ratio, lambda_integral_identity, lstar_identity, weak_bound, ChogosovModel, NuModel};
use rhomix_core::gaussian::{lines_with_angles, maxcorr_gaussian, ou_chain_joint, ou_small_t_expansion, three_lines, OuChainParams};
use rhomix_core::glauber::{exact_gap, gap_lower_bounds, gap_sweep, glauber_simulate, measured_eps, sublattice_gap, GapSweepConfig, SimConfig};
use rhomix_core::io::{
    format_point, from_json, kernel_to_json, system_to_json, toeplitz_to_json, CovarianceJson, KernelJson, PairJson,
    QuadraticJson, Real, SystemJson,
};
use rhomix_core::lattice::{
    clt_experiment, ising_constants, ising_epsilon, ising_exact, quadratic_covariance, quadratic_rho_report, spin, BlockShape,
    CltConfig, CltModel, EpsMethod, IsingTorus, QuadraticModel,
};
use rhomix_core::tensor::sweep::{soundness_sweep, SweepConfig};
use rhomix_core::tensor::{distance_bound, nm_bound, pf_certificate, simple_bound, sublattice_k, zn_bound, zz_bound, EpsilonMatrix};
use rhomix_core::verify;
use rhomix_core::FiniteSystem;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use std::path::Path;

/// Settings shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub seed: u64,
    pub dry_run: bool,
    pub tol: f64,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    Ok(from_json(&text)?)
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let rows: Vec<Vec<Real>> = read_json(path)?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(invalid(format!("{} must hold a nonempty rectangular array of rows", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j].0))
}

fn read_system(path: &Path) -> Result<FiniteSystem, CliError> {
    Ok(read_json::<SystemJson>(path)?.build()?)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn dry(command: &str) -> Report {
    Report::json(json!({ "command": command, "dry_run": true, "valid": true }))
}

fn check_positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {x}")))
    }
}

fn check_unit(name: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(invalid(format!("{name} entries must lie in [0, 1], got {v}"))),
        None => Ok(()),
    }
}

pub fn dispatch(cmd: &Command, ctx: Ctx) -> Result<Report, CliError> {
    match cmd {
        Command::Maxcorr(a) => maxcorr(a, ctx),
        Command::Subjective(a) => subjective(a, ctx),
        Command::Mixing(a) => mixing(a, ctx),
        Command::TensorBound(a) => tensor(&a.which, ctx),
        Command::EventBound(a) => event(&a.which, ctx),
        Command::Chogosov(a) => chogosov(a, ctx),
        Command::GlauberGap(a) => glauber_gap(a, ctx),
        Command::GlauberSim(a) => glauber_sim(a, ctx),
        Command::Ising(a) => ising(a, ctx),
        Command::Quadratic(a) => quadratic(a, ctx),
        Command::ConvInverse(a) => conv(a, ctx),
        Command::Clt(a) => clt(a, ctx),
        Command::OuChain(a) => ou_chain(a, ctx),
        Command::ThreeLines(a) => lines(a, ctx),
        Command::VerifyAll(a) => verify_all(a, ctx),
    }
}

fn maxcorr(a: &MaxcorrArgs, ctx: Ctx) -> Result<Report, CliError> {
    if let Some(path) = &a.pair {
        let pair = read_json::<PairJson>(path)?.build()?;
        if ctx.dry_run {
            return Ok(dry("maxcorr"));
        }
        return Ok(Report::json(to_value(&maxcorr_pair(&pair))));
    }
    if let Some(path) = &a.gaussian {
        let sys = read_json::<CovarianceJson>(path)?.build()?;
        if let Some(&v) = a.x.iter().chain(&a.y).find(|&&v| v >= sys.dim()) {
            return Err(invalid(format!("variable {v} out of range for dimension {}", sys.dim())));
        }
        if ctx.dry_run {
            return Ok(dry("maxcorr"));
        }
        let rho = maxcorr_gaussian(&sys, &a.x, &a.y)?;
        return Ok(Report::json(json!({ "rho": rho })));
    }
    let path = a.system.as_ref().ok_or_else(|| invalid("give --pair, --system or --gaussian"))?;
    let sys = read_system(path)?;
    let pair = sys.pair(&a.x, &a.y)?;
    if ctx.dry_run {
        return Ok(dry("maxcorr"));
    }
    let mut v = to_value(&maxcorr_pair(&pair));
    v["rho"] = json!(maxcorr_blocks(&sys, &a.x, &a.y)?);
    Ok(Report::json(v))
}

fn subjective(a: &SubjectiveArgs, ctx: Ctx) -> Result<Report, CliError> {
    let sys = read_system(&a.system)?;
    let pool: Vec<usize> = match &a.pool {
        Some(p) => p.clone(),
        None => (0..sys.num_vars()).filter(|v| !a.x.contains(v) && !a.y.contains(v)).collect(),
    };
    sys.pair(&a.x, &a.y)?;
    if let Some(&v) = pool.iter().find(|&&v| v >= sys.num_vars()) {
        return Err(invalid(format!("pool variable {v} out of range")));
    }
    if ctx.dry_run {
        return Ok(dry("subjective"));
    }
    let value = subjective_maxcorr_blocks(&sys, &a.x, &a.y, &pool)?;
    let plain = maxcorr_blocks(&sys, &a.x, &a.y)?;
    Ok(Report::json(json!({ "subjective_rho": value, "rho": plain, "pool": pool })))
}

fn mixing(a: &MixingArgs, ctx: Ctx) -> Result<Report, CliError> {
    if let Some(path) = &a.chain {
        let p = read_matrix(path)?;
        if p.nrows() != p.ncols() {
            return Err(invalid("transition matrix must be square"));
        }
        if ctx.dry_run {
            return Ok(dry("mixing"));
        }
        let rep = markov_chain_checks(&p, a.steps)?;
        let rows = rep
            .lagged_maxcorr
            .iter()
            .zip(&rep.product_bound)
            .enumerate()
            .map(|(k, (&m, &b))| vec![Cell::from(k + 1), m.into(), b.into()])
            .collect();
        let table = Table { figure: None, header: vec!["step", "maxcorr", "product_bound"], rows };
        return Ok(Report::json(to_value(&rep)).with_table(table));
    }
    let path = a.pair.as_ref().ok_or_else(|| invalid("give --pair or --chain"))?;
    let pair = read_json::<PairJson>(path)?.build()?;
    if ctx.dry_run {
        return Ok(dry("mixing"));
    }
    let coeffs = mixing_coefficients(&pair)?;
    let events = event_extremes(&pair)?;
    let rho = maxcorr_pair(&pair).rho;
    Ok(Report::json(json!({
        "alpha": coeffs.alpha,
        "beta": coeffs.beta,
        "mutual_information": coeffs.mutual_information,
        "rho": rho,
        "event": events,
        "density_bound": density_bound(&pair)?,
    })))
}

fn tensor(which: &TensorBound, ctx: Ctx) -> Result<Report, CliError> {
    match which {
        TensorBound::Simple { eps } => {
            check_unit("eps", eps)?;
            if ctx.dry_run {
                return Ok(dry("tensor-bound"));
            }
            Ok(Report::json(json!({ "bound": simple_bound(eps), "eps": eps })))
        }
        TensorBound::Zz { eps } => {
            check_unit("eps", eps)?;
            if ctx.dry_run {
                return Ok(dry("tensor-bound"));
            }
            Ok(Report::json(json!({ "bound": zz_bound(eps), "eps": eps })))
        }
        TensorBound::Nm { matrix } => {
            let eps = EpsilonMatrix::new(read_matrix(matrix)?)?;
            if ctx.dry_run {
                return Ok(dry("tensor-bound"));
            }
            Ok(Report::json(to_value(&nm_bound(&eps))))
        }
        TensorBound::Lattice { kernel, distance } => {
            let k = read_json::<KernelJson>(kernel)?.build()?;
            if ctx.dry_run {
                return Ok(dry("tensor-bound"));
            }
            let zn = zn_bound(&k)?;
            let dist: Vec<Value> = distance
                .iter()
                .map(|&d| distance_bound(&k, d).map(|b| json!({ "d": d, "raw": b.raw, "value": b.value })))
                .collect::<Result<_, _>>()?;
            let sub = match sublattice_k(&k) {
                Ok(s) => to_value(&s),
                Err(rhomix_core::Error::NoValidSpacing { .. }) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            Ok(Report::json(json!({ "zn": zn, "distance": dist, "sublattice": sub })))
        }
        TensorBound::Pf { matrix, delta } => {
            let m = read_matrix(matrix)?;
            check_positive("delta", *delta)?;
            if ctx.dry_run {
                return Ok(dry("tensor-bound"));
            }
            Ok(Report::json(to_value(&pf_certificate(&m, *delta)?)))
        }
        TensorBound::Sweep { instances, max_vars, max_alphabet } => {
            if *instances == 0 || *max_vars == 0 || *max_alphabet < 2 {
                return Err(invalid("need instances ≥ 1, max-vars ≥ 1 and max-alphabet ≥ 2"));
            }
            if ctx.dry_run {
                return Ok(dry("tensor-bound"));
            }
            let cfg = SweepConfig {
                instances: *instances,
                seed: ctx.seed,
                max_vars_per_side: *max_vars,
                max_alphabet: *max_alphabet,
                ..Default::default()
            };
            let rep = soundness_sweep(&cfg)?;
            let sound = rep.min_tensor_slack() >= -ctx.tol && rep.min_event_slack() >= -ctx.tol;
            let mut v = to_value(&rep);
            v["sound"] = json!(sound);
            Ok(Report::json(v))
        }
    }
}

fn event(which: &EventBound, ctx: Ctx) -> Result<Report, CliError> {
    match which {
        EventBound::Pair { pair } => {
            let pair = read_json::<PairJson>(pair)?.build()?;
            if ctx.dry_run {
                return Ok(dry("event-bound"));
            }
            let ev = event_extremes(&pair)?;
            let rho = maxcorr_pair(&pair).rho;
            Ok(Report::json(json!({ "event": ev, "rho": rho })))
        }
        EventBound::Weak { zeta, theta } => {
            if zeta.len() != theta.len() {
                return Err(invalid("zeta and theta need the same number of samples"));
            }
            if ctx.dry_run {
                return Ok(dry("event-bound"));
            }
            Ok(Report::json(to_value(&weak_bound(zeta, theta)?)))
        }
        EventBound::Nu { eps, x, m } => {
            let model = NuModel::new(*eps, *x, *m)?;
            if ctx.dry_run {
                return Ok(dry("event-bound"));
            }
            Ok(Report::json(to_value(&model.event_ratio())))
        }
    }
}

fn chogosov(a: &ChogosovArgs, ctx: Ctx) -> Result<Report, CliError> {
    let model = ChogosovModel::new(a.eps)?;
    match &a.which {
        Chogosov::Opnorm { m } => {
            if ctx.dry_run {
                return Ok(dry("chogosov"));
            }
            Ok(Report::json(to_value(&model.opnorm(*m)?)))
        }
        Chogosov::Sample { n } => {
            if *n == 0 {
                return Err(invalid("sample count must be positive"));
            }
            if ctx.dry_run {
                return Ok(dry("chogosov"));
            }
            let pts = model.sample(*n, ctx.seed);
            let rows = pts
                .iter()
                .map(|s| vec![Cell::from(s.p), s.q.into(), Cell::Text(to_value(&s.branch).as_str().unwrap_or("").to_string())])
                .collect();
            let table = Table { figure: Some("fig-mu cloud"), header: vec!["p", "q", "branch"], rows };
            Ok(Report::json(json!({ "eps": a.eps, "samples": pts })).with_table(table))
        }
        Chogosov::Identity { p } => {
            if let Some(x) = p.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
                return Err(invalid(format!("p must lie in (0, 1), got {x}")));
            }
            if ctx.dry_run {
                return Ok(dry("chogosov"));
            }
            let rows: Vec<_> = p.iter().map(|&x| lambda_integral_identity(&model, x)).collect::<Result<_, _>>()?;
            Ok(Report::json(json!({ "eps": a.eps, "rows": rows })))
        }
        Chogosov::Lstar { points } => {
            if let Some(x) = points.iter().find(|x| x.partial_cmp(&&0.0) != Some(std::cmp::Ordering::Greater)) {
                return Err(invalid(format!("points must be positive, got {x}")));
            }
            if ctx.dry_run {
                return Ok(dry("chogosov"));
            }
            Ok(Report::json(json!({ "eps": a.eps, "relative_residual": lstar_identity(a.eps, points)? })))
        }
        Chogosov::EventRatio { grid } => {
            if *grid < 2 {
                return Err(invalid("grid needs at least 2 cells"));
            }
            if ctx.dry_run {
                return Ok(dry("chogosov"));
            }
            let w = chogosov_event_ratio(&model, *grid)?;
            Ok(Report::json(json!({ "eps": a.eps, "lambda": model.lambda(), "witness": w })))
        }
    }
}

fn glauber_gap(a: &GlauberGapArgs, ctx: Ctx) -> Result<Report, CliError> {
    if let Some(path) = &a.system {
        let sys = read_system(path)?;
        if ctx.dry_run {
            return Ok(dry("glauber-gap"));
        }
        let exact = exact_gap(&sys)?;
        let eps = measured_eps(&sys)?;
        let bounds = gap_lower_bounds(&eps)?;
        let sound = exact.gap >= bounds.bound_m - ctx.tol;
        return Ok(Report::json(json!({
            "gap": exact.gap,
            "spectrum_min": exact.spectrum_min,
            "eps": rows_of(&eps.entries),
            "bounds": bounds,
            "sound": sound,
        })));
    }
    if let Some(path) = &a.eps_matrix {
        let eps = EpsilonMatrix::new(read_matrix(path)?)?;
        if ctx.dry_run {
            return Ok(dry("glauber-gap"));
        }
        return Ok(Report::json(to_value(&gap_lower_bounds(&eps)?)));
    }
    if let Some(path) = &a.kernel {
        let k = read_json::<KernelJson>(path)?.build()?;
        if ctx.dry_run {
            return Ok(dry("glauber-gap"));
        }
        return Ok(Report::json(to_value(&sublattice_gap(&k)?)));
    }
    let systems = a.sweep.ok_or_else(|| invalid("give --system, --eps-matrix, --kernel or --sweep"))?;
    if systems == 0 || a.max_spins < 2 {
        return Err(invalid("need at least one system and max-spins ≥ 2"));
    }
    if ctx.dry_run {
        return Ok(dry("glauber-gap"));
    }
    let rep = gap_sweep(&GapSweepConfig { systems, seed: ctx.seed, max_spins: a.max_spins })?;
    let mut v = to_value(&rep);
    v["sound"] = json!(rep.min_gap_slack >= -ctx.tol && rep.min_chain_slack >= -ctx.tol);
    Ok(Report::json(v))
}

fn glauber_sim(a: &GlauberSimArgs, ctx: Ctx) -> Result<Report, CliError> {
    check_positive("sample-dt", a.sample_dt)?;
    if a.events == 0 {
        return Err(invalid("events must be positive"));
    }
    let cfg = SimConfig {
        events: a.events,
        seed: ctx.seed,
        sample_dt: a.sample_dt,
        burn_in: a.burn_in,
        record_trajectory: a.trajectory,
    };
    let (rep, exact) = if let Some(triple) = &a.ising {
        let torus = torus_from(triple)?;
        if ctx.dry_run {
            return Ok(dry("glauber-sim"));
        }
        let sites = torus.num_sites() as f64;
        let rep = glauber_simulate(&torus, |s| s.iter().map(|&v| spin(v)).sum::<f64>() / sites, &cfg)?;
        (rep, None)
    } else {
        let path = a.system.as_ref().ok_or_else(|| invalid("give --system or --ising"))?;
        let sys = read_system(path)?;
        if ctx.dry_run {
            return Ok(dry("glauber-sim"));
        }
        let exact = exact_gap(&sys)?;
        let f = exact.eigenfunction.clone();
        let rep = glauber_simulate(&sys, |s| f[sys.encode(s)], &cfg)?;
        (rep, Some(exact.gap))
    };
    let mut v = json!({ "events": rep.events, "horizon": rep.horizon, "fit": rep.fit });
    if let Some(gap) = exact {
        v["exact_gap"] = json!(gap);
        v["rate_over_gap"] = json!(rep.fit.rate / gap);
    }
    let mut report = Report::json(v);
    if a.trajectory {
        let rows =
            rep.trajectory.iter().map(|t| vec![Cell::from(t.time), t.site.into(), t.new_state.into()]).collect();
        report = report.with_table(Table { figure: Some("glauber trajectory"), header: vec!["time", "site", "new_state"], rows });
        report.value["trajectory"] = to_value(&rep.trajectory);
    }
    Ok(report)
}

fn torus_from(triple: &[f64]) -> Result<IsingTorus, CliError> {
    let [n, side, t] = triple else { return Err(invalid("--ising takes n,side,temperature")) };
    if n.fract() != 0.0 || side.fract() != 0.0 || *n < 1.0 || *side < 2.0 {
        return Err(invalid("Ising dimension and side must be integers ≥ 1 and ≥ 2"));
    }
    Ok(IsingTorus::new(*n as usize, *side as usize, *t)?)
}

fn ising(a: &IsingArgs, ctx: Ctx) -> Result<Report, CliError> {
    let torus = IsingTorus::new(a.n, a.side, a.temperature)?;
    match &a.which {
        Ising::Constants => {
            if ctx.dry_run {
                return Ok(dry("ising"));
            }
            Ok(Report::json(to_value(&ising_constants(a.n, a.temperature))))
        }
        Ising::Exact => {
            if torus.num_sites() > rhomix_core::lattice::EXACT_SITE_CAP {
                return Err(invalid(format!("exact law needs at most {} sites", rhomix_core::lattice::EXACT_SITE_CAP)));
            }
            if ctx.dry_run {
                return Ok(dry("ising"));
            }
            Ok(Report::json(system_to_json(&ising_exact(&torus)?)))
        }
        Ising::Epsilon { method, samples, burn_in_sweeps, thin_sweeps } => {
            let m = match method {
                EpsMethodArg::Exact => EpsMethod::Exact { subjective: false },
                EpsMethodArg::Subjective => EpsMethod::Exact { subjective: true },
                EpsMethodArg::Mcmc => {
                    if *samples < 2 || *thin_sweeps == 0 {
                        return Err(invalid("mcmc needs samples ≥ 2 and thin-sweeps ≥ 1"));
                    }
                    EpsMethod::Mcmc { samples: *samples, burn_in_sweeps: *burn_in_sweeps, thin_sweeps: *thin_sweeps }
                }
            };
            if ctx.dry_run {
                return Ok(dry("ising"));
            }
            let eps = ising_epsilon(&torus, m, ctx.seed)?;
            let rows = eps
                .intervals
                .iter()
                .map(|iv| vec![Cell::Text(format_point(&iv.offset)), iv.estimate.into(), iv.lower.into(), iv.upper.into()])
                .collect();
            let table = Table { figure: None, header: vec!["offset", "estimate", "lower", "upper"], rows };
            Ok(Report::json(json!({
                "kernel": kernel_to_json(&eps.kernel),
                "constants": eps.constants,
                "intervals": eps.intervals,
                "method": eps.method,
            }))
            .with_table(table))
        }
        Ising::Snapshot { sweeps } => {
            if a.n > 2 {
                return Err(invalid("snapshots are drawn for dimensions 1 and 2"));
            }
            if ctx.dry_run {
                return Ok(dry("ising"));
            }
            let state = snapshot(&torus, *sweeps, ctx.seed);
            let (w, h) = if a.n == 1 { (a.side, 1) } else { (a.side, a.side) };
            let mut text = format!("P1\n# Ising T={} after {sweeps} sweeps\n{w} {h}\n", rhomix_core::io::fmt_f64(a.temperature));
            for row in state.chunks(w) {
                let line: Vec<&str> = row.iter().map(|&s| if s == 1 { "0" } else { "1" }).collect();
                text.push_str(&line.join(" "));
                text.push('\n');
            }
            let magnetization = state.iter().map(|&s| spin(s)).sum::<f64>() / state.len() as f64;
            Ok(Report::json(json!({ "side": a.side, "n": a.n, "sweeps": sweeps, "magnetization": magnetization, "state": state }))
                .with_text(text))
        }
    }
}

fn snapshot(torus: &IsingTorus, sweeps: usize, seed: u64) -> Vec<usize> {
    use rhomix_core::glauber::HeatBath;
    let mut r = rhomix_core::seeds::rng(seed);
    let mut state = torus.initial_state(&mut r);
    for _ in 0..sweeps {
        for site in 0..torus.num_sites() {
            torus.resample(&mut state, site, &mut r);
        }
    }
    state
}

fn quadratic_model(a: &QuadraticArgs) -> Result<QuadraticModel, CliError> {
    match (&a.model, a.gamma) {
        (Some(path), _) => Ok(read_json::<QuadraticJson>(path)?.build()?),
        (None, Some(g)) => Ok(QuadraticModel::nearest_neighbour(a.n, g)?),
        (None, None) => Err(invalid("give --model or --gamma")),
    }
}

fn quadratic(a: &QuadraticArgs, ctx: Ctx) -> Result<Report, CliError> {
    let model = quadratic_model(a)?;
    if ctx.dry_run {
        return Ok(dry("quadratic"));
    }
    let mut v = to_value(&quadratic_rho_report(&model)?);
    if a.covariance {
        let cov = quadratic_covariance(&model)?;
        v["covariance"] = json!({
            "a_inv": toeplitz_to_json(&cov.a_inv),
            "eps_kernel": kernel_to_json(&cov.kernel),
            "window_sum": cov.window_sum,
            "outside_mass": cov.outside_mass,
            "neumann_terms": cov.neumann_terms,
            "identity_residual": cov.identity_residual,
        });
    }
    Ok(Report::json(v))
}

fn conv(a: &ConvInverseArgs, ctx: Ctx) -> Result<Report, CliError> {
    if let Some(path) = &a.kernel {
        let k = read_json::<KernelJson>(path)?.build_toeplitz()?;
        if ctx.dry_run {
            return Ok(dry("conv-inverse"));
        }
        let inv = conv_inverse(&k)?;
        let fit = decay_fit(&inv.kernel, None)?;
        let profile = inv.kernel.shell_profile();
        let rows = profile.iter().enumerate().map(|(s, &m)| vec![Cell::from(s), m.into()]).collect();
        let table = Table { figure: Some("inverse decay profile"), header: vec!["shell", "max_abs"], rows };
        return Ok(Report::json(json!({
            "inverse": toeplitz_to_json(&inv.kernel),
            "norm": inv.norm,
            "terms": inv.terms,
            "series_tail": inv.series_tail,
            "dropped_mass": inv.dropped_mass,
            "error_bound": inv.error_bound,
            "identity_residual": inv.identity_residual,
            "fit": fit,
        }))
        .with_table(table));
    }
    if let Some(path) = &a.banded {
        let m = read_matrix(path)?;
        let gamma = a.gamma.ok_or_else(|| invalid("--banded needs --gamma"))?;
        check_positive("gamma", gamma)?;
        if ctx.dry_run {
            return Ok(dry("conv-inverse"));
        }
        return Ok(Report::json(to_value(&banded_inverse_check(&m, gamma)?)));
    }
    let c = a.constants.as_deref().ok_or_else(|| invalid("give --kernel, --banded or --constants"))?;
    let [r, big_r, amp, gamma] = c else { return Err(invalid("--constants takes r,R,A,gamma")) };
    if ctx.dry_run {
        return Ok(dry("conv-inverse"));
    }
    Ok(Report::json(to_value(&banded_inverse_constants(*r, *big_r, *amp, *gamma)?)))
}

fn clt(a: &CltArgs, ctx: Ctx) -> Result<Report, CliError> {
    if a.ell.is_empty() || a.ell.contains(&0) || a.replicas < 2 {
        return Err(invalid("need block sizes ≥ 1 and at least 2 replicas"));
    }
    let model = match a.model {
        CltModelArg::Independent => {
            if !(0.0..=1.0).contains(&a.p_up) {
                return Err(invalid("p-up must lie in [0, 1]"));
            }
            CltModel::Independent { p_up: a.p_up }
        }
        CltModelArg::Ising => CltModel::Ising {
            torus: IsingTorus::new(a.n, 2, a.temperature)?,
            burn_in_sweeps: a.burn_in_sweeps,
        },
        CltModelArg::Quadratic => CltModel::Quadratic { model: QuadraticModel::nearest_neighbour(a.n, a.gamma)? },
    };
    let cfg = CltConfig {
        block_sizes: a.ell.clone(),
        replicas: a.replicas,
        seed: ctx.seed,
        shape: match a.shape {
            ShapeArg::Cube => BlockShape::Cube,
            ShapeArg::Disk => BlockShape::Disk,
        },
    };
    if ctx.dry_run {
        return Ok(dry("clt"));
    }
    let f: &(dyn Fn(f64) -> f64 + Sync) = match a.observable {
        ObservableArg::Identity => &|x| x,
        ObservableArg::Tanh => &f64::tanh,
    };
    let rep = clt_experiment(&model, f, &cfg)?;
    let rows = rep.rows.iter().map(|r| vec![Cell::from(r.ell), r.sigma_hat2.into(), r.cf_distance.into()]).collect();
    let table = Table { figure: Some("clt cf distance"), header: vec!["ell", "sigma_hat2", "cf_distance"], rows };
    Ok(Report::json(to_value(&rep)).with_table(table))
}

fn ou_params(a: &OuChainArgs) -> Result<OuChainParams, CliError> {
    let mut v = to_value(&OuChainParams::default());
    if let Some(path) = &a.params {
        let file: serde_json::Map<String, Value> = read_json(path)?;
        for (k, x) in file {
            if v.get(&k).is_none() {
                return Err(invalid(format!("unknown parameter {k:?}")));
            }
            v[k.as_str()] = x;
        }
    }
    let mut p: OuChainParams = serde_json::from_value(v).map_err(|e| invalid(e.to_string()))?;
    let set = |slot: &mut f64, x: Option<f64>| {
        if let Some(x) = x {
            *slot = x;
        }
    };
    set(&mut p.m, a.m);
    set(&mut p.omega, a.omega);
    set(&mut p.c, a.c);
    set(&mut p.temperature, a.temperature);
    set(&mut p.lambda, a.lambda);
    set(&mut p.t, a.t);
    if let Some(k) = a.k {
        p.k = k;
    }
    p.validate()?;
    Ok(p)
}

fn ou_chain(a: &OuChainArgs, ctx: Ctx) -> Result<Report, CliError> {
    let params = ou_params(a)?;
    if a.expansion {
        check_positive("t0", a.t0)?;
        if a.levels < 2 {
            return Err(invalid("expansion needs at least 2 levels"));
        }
    }
    if ctx.dry_run {
        return Ok(dry("ou-chain"));
    }
    if a.expansion {
        return Ok(Report::json(to_value(&ou_small_t_expansion(&params, a.t0, a.levels, 3)?)));
    }
    let rep = ou_chain_joint(&params)?;
    Ok(Report::json(json!({
        "params": params,
        "maxcorr": rep.maxcorr,
        "coordinate_correlations": rows_of(&rep.coordinate_correlations),
        "precision_min": rep.precision_min,
        "precision_max": rep.precision_max,
        "stationarity_residual": rep.stationarity_residual,
    })))
}

fn lines(a: &ThreeLinesArgs, ctx: Ctx) -> Result<Report, CliError> {
    let [u1, u2, u3] = match (&a.angles, &a.u1, &a.u2, &a.u3) {
        (Some(ang), ..) => {
            let [a23, a31, a12] = ang.as_slice() else { return Err(invalid("--angles takes a23,a31,a12")) };
            lines_with_angles(a23.to_radians(), a31.to_radians(), a12.to_radians())?
        }
        (None, Some(u1), Some(u2), Some(u3)) => {
            if [u1, u2, u3].iter().any(|u| u.len() != 3) {
                return Err(invalid("each direction needs three coordinates"));
            }
            let v = |u: &[f64]| Vector3::from_column_slice(u);
            [v(u1), v(u2), v(u3)]
        }
        _ => return Err(invalid("give --u1 --u2 --u3 or --angles")),
    };
    if ctx.dry_run {
        return Ok(dry("three-lines"));
    }
    Ok(Report::json(to_value(&three_lines(u1, u2, u3)?)))
}

fn verify_all(a: &VerifyArgs, ctx: Ctx) -> Result<Report, CliError> {
    let known: Vec<u8> = verify::CRITERIA.iter().map(|c| c.0).collect();
    if let Some(id) = a.only.iter().find(|id| !known.contains(id)) {
        return Err(invalid(format!("no criterion {id}; valid ids are 1 to {}", known.len())));
    }
    let ids: Vec<u8> = if a.only.is_empty() { known } else { a.only.clone() };
    if ctx.dry_run {
        return Ok(dry("verify-all"));
    }
    let outcomes: Vec<verify::Outcome> = ids.iter().map(|&id| verify::run(id, ctx.seed)).collect();
    let mut text = String::new();
    for o in &outcomes {
        text.push_str(&o.line());
        text.push('\n');
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    text.push_str(&format!("{passed}/{} criteria passed\n", outcomes.len()));
    let rows = outcomes
        .iter()
        .map(|o| vec![Cell::from(o.id as usize), Cell::Text(if o.passed { "PASS" } else { "FAIL" }.into()), o.title.as_str().into()])
        .collect();
    let value = json!({
        "passed": passed,
        "total": outcomes.len(),
        "criteria": outcomes.iter().map(|o| json!({ "id": o.id, "title": o.title, "passed": o.passed, "detail": o.detail })).collect::<Vec<_>>(),
    });
    Ok(Report::json(value)
        .with_table(Table { figure: None, header: vec!["criterion", "result", "title"], rows })
        .with_text(text)
        .failing_if(passed < outcomes.len(), format!("{} criteria failed", outcomes.len() - passed)))
}
