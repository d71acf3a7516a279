use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use qldp::estimate::{
    fidelity_lower_bound, pauli_coverage, required_samples_lower, required_samples_upper, write_trials_csv,
    AccuracyDemand, CoverageReport,
};
use qldp::privacy::{certify_qldp, qubit_depolarizing_q, PrivacyBudget};
use qldp::search::SearchConfig;
use qldp::shadows::{
    default_batching, effective_depolarizing_q, naive_shadow_required_samples, private_shadow_p_hat, shadow_coverage,
    shadow_required_samples, shadow_sample, shadow_small_epsilon_samples, write_shadow_samples_csv, MAX_SHADOW_QUBITS,
};
use qldp::stats::{format_significant, mean, stream_rng};
use qldp::utility::{optimal_fidelity_utility, optimal_trace_utility};
use qldp::QldpError;

use crate::config::Config;
use crate::error::CliError;
use crate::inputs::{parse_channel, parse_observable, parse_state, Observable};
use crate::svg::{Chart, Series};

pub type Outcome = Result<u8, CliError>;

/// `(epsilon, optimal_fidelity, optimal_trace)` points.
type Curve = Vec<(f64, f64, f64)>;

pub const UTILITY_CURVE_HEADER: &str = "d,epsilon,delta,optimal_fidelity,optimal_trace";
pub const BOUNDS_HEADER: &str = "epsilon,beta,lower,upper,shadow_upper,fidelity_lower,upper_over_lower,theta_regime,notes";

fn num(x: f64) -> String {
    format_significant(x, 12)
}

fn budget(cfg: &Config) -> Result<PrivacyBudget, CliError> {
    let eps = cfg.f64_or("epsilon", 1.0)?;
    let delta = cfg.f64_or("delta", 0.0)?;
    PrivacyBudget::new(eps, delta).map_err(|e| CliError::Usage(e.to_string()))
}

fn demand(cfg: &Config, default_beta: f64) -> Result<AccuracyDemand, CliError> {
    let beta = cfg.f64_or("beta", default_beta)?;
    let eta = cfg.f64_or("eta", 0.05)?;
    AccuracyDemand::new(beta, eta).map_err(|e| CliError::Usage(e.to_string()))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Out-of-regime and infeasible results become a flagged NA cell.
fn cell(r: qldp::Result<u64>) -> Result<Result<u64, String>, CliError> {
    match r {
        Ok(n) => Ok(Ok(n)),
        Err(QldpError::OutOfRegime { condition }) => Ok(Err(format!("requires {condition}"))),
        Err(QldpError::Infeasible(m)) | Err(QldpError::DegenerateObservable(m)) => Ok(Err(m)),
        Err(e) => Err(e.into()),
    }
}

fn show(c: &Result<u64, String>) -> String {
    match c {
        Ok(n) => n.to_string(),
        Err(_) => "NA".into(),
    }
}

pub fn utility_curve(cfg: &Config, out: &mut dyn Write) -> Outcome {
    cfg.check_known(&["output_dir", "d", "deltas", "epsilons", "dims", "dims_delta", "seed"])?;
    let d = cfg.u64_or("d", 10)? as usize;
    let deltas = cfg.f64_list_or("deltas", "0,0.1,0.3")?;
    let eps = cfg.f64_list_or("epsilons", "0:5:51")?;
    let dims = cfg.usize_list_or("dims", "2,10,100")?;
    let dims_delta = cfg.f64_or("dims_delta", 0.1)?;
    if eps.is_empty() {
        return Err(CliError::Usage("epsilon grid is empty".into()));
    }
    if deltas.is_empty() || dims.is_empty() {
        return Err(CliError::Usage("delta list and dimension list must be nonempty".into()));
    }

    let curve = |d: usize, delta: f64| -> Result<Curve, CliError> {
        eps.iter()
            .map(|&e| {
                let b = PrivacyBudget::new(e, delta).map_err(|err| CliError::Usage(err.to_string()))?;
                let f = optimal_fidelity_utility(d, &b).map_err(|err| CliError::Usage(err.to_string()))?;
                let t = optimal_trace_utility(d, &b)?;
                Ok((e, f, t))
            })
            .collect()
    };
    let mut series: Vec<(usize, f64, Curve)> = Vec::new();
    for &delta in &deltas {
        series.push((d, delta, curve(d, delta)?));
    }
    for &dd in &dims {
        if !series.iter().any(|(sd, sdelta, _)| *sd == dd && *sdelta == dims_delta) {
            series.push((dd, dims_delta, curve(dd, dims_delta)?));
        }
    }

    let by_delta = Chart {
        title: format!("Optimal fidelity utility, d = {d}"),
        x_label: "epsilon".into(),
        y_label: "fidelity utility".into(),
        series: deltas
            .iter()
            .map(|&delta| Series {
                label: format!("delta = {delta}"),
                points: curve(d, delta).expect("validated").iter().map(|p| (p.0, p.1)).collect(),
            })
            .collect(),
    };
    let by_dim = Chart {
        title: format!("Optimal fidelity utility, delta = {dims_delta}"),
        x_label: "epsilon".into(),
        y_label: "fidelity utility".into(),
        series: dims
            .iter()
            .map(|&dd| Series {
                label: format!("d = {dd}"),
                points: curve(dd, dims_delta).expect("validated").iter().map(|p| (p.0, p.1)).collect(),
            })
            .collect(),
    };

    let dir = cfg.output_dir();
    prepare_dir(&dir)?;
    let mut csv = create(&dir.join("utility_curve.csv"))?;
    writeln!(csv, "{UTILITY_CURVE_HEADER}")?;
    for (sd, delta, pts) in &series {
        for (e, f, t) in pts {
            writeln!(csv, "{sd},{},{},{},{}", num(*e), num(*delta), num(*f), num(*t))?;
        }
    }
    csv.flush()?;
    fs::write(dir.join("utility_by_delta.svg"), by_delta.render())?;
    fs::write(dir.join("utility_by_dimension.svg"), by_dim.render())?;
    writeln!(
        out,
        "wrote {} rows ({} curves) to {}",
        series.len() * eps.len(),
        series.len(),
        dir.join("utility_curve.csv").display()
    )?;
    writeln!(out, "plots: utility_by_delta.svg, utility_by_dimension.svg")?;
    Ok(0)
}

pub fn certify(cfg: &Config, out: &mut dyn Write) -> Outcome {
    cfg.check_known(&["channel", "epsilon", "delta", "restarts", "local_steps", "step_size", "seed"])?;
    let spec = cfg
        .get("channel")
        .ok_or_else(|| CliError::Usage("missing required key 'channel'".into()))?;
    let b = budget(cfg)?;
    let defaults = SearchConfig::default();
    let search = SearchConfig {
        restarts: cfg.u64_or("restarts", defaults.restarts as u64)? as usize,
        local_steps: cfg.u64_or("local_steps", defaults.local_steps as u64)? as usize,
        step_size: cfg.f64_or("step_size", defaults.step_size)?,
        seed: cfg.seed()?,
    };
    search.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let channel = parse_channel(spec)?;
    let r = certify_qldp(&channel, &b, &search)?;

    writeln!(out, "channel       {spec}")?;
    writeln!(out, "epsilon       {}", num(b.epsilon()))?;
    writeln!(out, "delta         {}", num(b.delta()))?;
    writeln!(out, "sup_estimate  {}", num(r.sup_estimate))?;
    writeln!(out, "restarts      {}", r.restarts_used)?;
    for (name, psi) in [("witness_1", &r.witness.0), ("witness_2", &r.witness.1)] {
        let amps: Vec<String> = psi
            .amplitudes()
            .iter()
            .map(|z| format!("{}:{}", num(z.re), num(z.im)))
            .collect();
        writeln!(out, "{name:<13} {}", amps.join(" "))?;
    }
    let verdict = match (r.satisfied, r.borderline) {
        (true, false) => "satisfied",
        (true, true) => "satisfied (borderline)",
        (false, true) => "violated (borderline)",
        (false, false) => "violated",
    };
    writeln!(out, "verdict       {verdict}")?;
    Ok(if r.satisfied { 0 } else { 1 })
}

fn coverage_summary(out: &mut dyn Write, report: &CoverageReport) -> Result<(), CliError> {
    let errs: Vec<f64> = report.records.iter().map(|r| r.abs_error).collect();
    writeln!(out, "trials           {}", report.records.len())?;
    writeln!(out, "coverage         {}", num(report.fraction_within()))?;
    writeln!(out, "target           {}", num(1.0 - report.eta))?;
    writeln!(out, "mean_abs_error   {}", num(mean(&errs)))?;
    writeln!(
        out,
        "verdict          {}",
        if report.meets_target() { "coverage met" } else { "coverage FAILED" }
    )?;
    Ok(())
}

fn observable_and_state(cfg: &Config, default_obs: String) -> Result<(Observable, qldp::DensityMatrix), CliError> {
    let obs = parse_observable(cfg.get("observable").map(str::to_string).as_deref().unwrap_or(&default_obs))?;
    let rho = parse_state(cfg.str_or("state", "zero"), obs.dim())?;
    Ok((obs, rho))
}

pub fn estimate(cfg: &Config, out: &mut dyn Write) -> Outcome {
    cfg.check_known(&[
        "seed", "trials", "output_dir", "observable", "state", "epsilon", "delta", "beta", "eta", "n",
    ])?;
    let b = budget(cfg)?;
    let dm = demand(cfg, 0.1)?;
    let trials = cfg.u64_or("trials", 200)?;
    let n_override = cfg.u64_opt("n")?;
    let seed = cfg.seed()?;
    let (obs, rho) = observable_and_state(cfg, "Z".into())?;
    if trials == 0 || n_override == Some(0) {
        return Err(CliError::Usage("trials and n must be positive".into()));
    }
    let dec = &obs.decomposition;

    let n_upper = required_samples_upper(dec.weight(), &b, &dm)?;
    let n_lower = cell(required_samples_lower(dec.lambda_max(), dec.lambda_min(), &b, &dm))?;
    let n_fid = cell(fidelity_lower_bound(dec.lambda_max(), dec.lambda_min(), &dm))?;
    let report = pauli_coverage(&rho, dec, &b, &dm, n_override, trials, seed)?;

    let dir = cfg.output_dir();
    prepare_dir(&dir)?;
    let path = dir.join("estimate_trials.csv");
    let mut csv = create(&path)?;
    write_trials_csv(&report.records, &mut csv)?;
    csv.flush()?;

    writeln!(out, "observable       {}", cfg.str_or("observable", "Z"))?;
    writeln!(out, "weight_S         {}", num(dec.weight()))?;
    writeln!(out, "q                {}", num(qubit_depolarizing_q(&b)))?;
    writeln!(out, "n_upper          {n_upper}")?;
    match &n_lower {
        Ok(n) => writeln!(out, "n_lower          {n}")?,
        Err(why) => writeln!(out, "n_lower          NA (out of regime: {why})")?,
    }
    match &n_fid {
        Ok(n) => writeln!(out, "n_fidelity_lower {n}")?,
        Err(why) => writeln!(out, "n_fidelity_lower NA (out of regime: {why})")?,
    }
    writeln!(out, "n_used           {}", report.n)?;
    coverage_summary(out, &report)?;
    writeln!(out, "trials_csv       {}", path.display())?;
    Ok(if report.meets_target() { 0 } else { 1 })
}

pub fn shadows(cfg: &Config, out: &mut dyn Write) -> Outcome {
    cfg.check_known(&[
        "seed", "trials", "output_dir", "observable", "state", "epsilon", "delta", "beta", "eta", "n", "m",
        "dump_samples",
    ])?;
    let b = budget(cfg)?;
    let dm = demand(cfg, 0.25)?;
    let trials = cfg.u64_or("trials", 100)?;
    let n_override = cfg.u64_opt("n")?;
    let dump = cfg.u64_or("dump_samples", 1000)? as usize;
    let seed = cfg.seed()?;
    let m_key = cfg.u64_opt("m")?.map(|m| m as usize);
    let default_obs = "Z".repeat(m_key.unwrap_or(1).max(1));
    let (obs, rho) = observable_and_state(cfg, default_obs)?;
    let m = obs.num_qubits();
    if let Some(mk) = m_key {
        if mk != m {
            return Err(CliError::Usage(format!("m = {mk} but the observable acts on {m} qubits")));
        }
    }
    if m > MAX_SHADOW_QUBITS {
        return Err(CliError::Usage(format!("shadow protocol supports m <= {MAX_SHADOW_QUBITS}, got {m}")));
    }
    if trials == 0 || n_override == Some(0) {
        return Err(CliError::Usage("trials and n must be positive".into()));
    }
    let d = obs.dim();
    let p_hat = private_shadow_p_hat(d, &b)?;
    if p_hat >= 1.0 {
        return Err(CliError::Regime(
            "infeasible: epsilon = delta = 0 forces full depolarization (p_hat = 1) and no estimator exists".into(),
        ));
    }
    let q = effective_depolarizing_q(p_hat, d)?;
    let tr_o2 = obs.operator.matrix().norm_squared();
    let n_formula = shadow_required_samples(tr_o2, d, &b, &dm)?;
    let n_naive = naive_shadow_required_samples(tr_o2, d, &b, &dm)?;
    let n_small = cell(shadow_small_epsilon_samples(tr_o2, &b, &dm))?;
    let target = n_override.unwrap_or(n_formula);
    let (ell, k) = default_batching(target, dm.eta())?;
    let report = shadow_coverage(&rho, &obs.operator, &b, &dm, Some(target), trials, seed)?;
    let samples = if m <= 2 && dump > 0 {
        let mut rng = stream_rng(seed, trials);
        (0..dump)
            .map(|_| shadow_sample(&rho, p_hat, &mut rng))
            .collect::<qldp::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let dir = cfg.output_dir();
    prepare_dir(&dir)?;
    let trials_path = dir.join("shadow_trials.csv");
    let mut csv = create(&trials_path)?;
    write_trials_csv(&report.records, &mut csv)?;
    csv.flush()?;
    if !samples.is_empty() {
        let mut s = create(&dir.join("shadow_samples.csv"))?;
        write_shadow_samples_csv(&samples, &mut s)?;
        s.flush()?;
    }

    writeln!(out, "m                {m}")?;
    writeln!(out, "p_hat            {}", num(p_hat))?;
    writeln!(out, "effective_q      {}", num(q))?;
    writeln!(out, "tr_O2            {}", num(tr_o2))?;
    writeln!(out, "N_bound          {n_formula}")?;
    writeln!(out, "N_naive          {n_naive}")?;
    match &n_small {
        Ok(n) => writeln!(out, "N_small_epsilon  {n}")?,
        Err(why) => writeln!(out, "N_small_epsilon  NA (out of regime: {why})")?,
    }
    writeln!(out, "N_used           {} ({k} batches of {ell})", report.n)?;
    coverage_summary(out, &report)?;
    writeln!(out, "trials_csv       {}", trials_path.display())?;
    if samples.is_empty() {
        writeln!(out, "samples_csv      not written (needs m <= 2 and dump_samples > 0)")?;
    } else {
        writeln!(out, "samples_csv      {}", dir.join("shadow_samples.csv").display())?;
    }
    Ok(if report.meets_target() { 0 } else { 1 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub protocol: &'static str,
    pub communication: &'static str,
    pub unit_count: u64,
    pub unit: &'static str,
    pub classical_bits: Option<u64>,
}

/// Per-sample communication. Independent of the privacy budget.
pub fn cost_table(m: usize, precision_bits: u64) -> Vec<CostRow> {
    let d = 1u64 << m;
    vec![
        CostRow {
            protocol: "pauli",
            communication: "classical",
            unit_count: 2 * m as u64 + 1,
            unit: "bits",
            classical_bits: Some(2 * m as u64 + 1),
        },
        CostRow {
            protocol: "shadow",
            communication: "classical",
            unit_count: d * d,
            unit: "complex entries",
            classical_bits: Some(d * d * 2 * precision_bits),
        },
        CostRow {
            protocol: "depolarized-state",
            communication: "quantum",
            unit_count: m as u64,
            unit: "qubits",
            classical_bits: None,
        },
    ]
}

pub fn cost_report(cfg: &Config, out: &mut dyn Write) -> Outcome {
    cfg.check_known(&["m", "precision_bits", "epsilon", "delta", "seed"])?;
    let m = cfg.u64_or("m", 1)? as usize;
    let precision = cfg.u64_or("precision_bits", 64)?;
    if m == 0 || m > 30 {
        return Err(CliError::Usage(format!("m must lie in [1, 30], got {m}")));
    }
    if precision == 0 {
        return Err(CliError::Usage("precision_bits must be positive".into()));
    }
    writeln!(out, "# per-sample communication, m = {m}, d = {}, {precision} bits per real", 1u64 << m)?;
    writeln!(out, "{:<18} {:<10} {:>8} {:<16} {:>14}", "protocol", "channel", "count", "unit", "classical_bits")?;
    for r in cost_table(m, precision) {
        let bits = r.classical_bits.map_or("NA (quantum)".to_string(), |b| b.to_string());
        writeln!(
            out,
            "{:<18} {:<10} {:>8} {:<16} {:>14}",
            r.protocol, r.communication, r.unit_count, r.unit, bits
        )?;
    }
    Ok(0)
}

#[derive(Clone, Debug)]
pub struct BoundsRow {
    pub epsilon: f64,
    pub beta: f64,
    pub lower: Result<u64, String>,
    pub upper: Result<u64, String>,
    pub shadow_upper: Result<u64, String>,
    pub fidelity_lower: Result<u64, String>,
    /// `ε ∈ (0, 1]`, where the lower and upper bounds share their order.
    pub theta_regime: bool,
}

impl BoundsRow {
    pub fn ratio(&self) -> Option<f64> {
        match (&self.lower, &self.upper) {
            (Ok(l), Ok(u)) if *l > 0 => Some(*u as f64 / *l as f64),
            _ => None,
        }
    }

    /// Lower bounds never exceed either upper bound.
    pub fn consistent(&self) -> bool {
        let lows = [&self.lower, &self.fidelity_lower];
        let ups = [&self.upper, &self.shadow_upper];
        lows.iter()
            .filter_map(|l| l.as_ref().ok())
            .all(|l| ups.iter().filter_map(|u| u.as_ref().ok()).all(|u| l <= u))
    }
}

pub fn bounds_table(obs: &Observable, eps: &[f64], betas: &[f64], delta: f64, eta: f64) -> Result<Vec<BoundsRow>, CliError> {
    let dec = &obs.decomposition;
    let tr_o2 = obs.operator.matrix().norm_squared();
    let mut rows = Vec::new();
    for &e in eps {
        for &beta in betas {
            let b = PrivacyBudget::new(e, delta).map_err(|err| CliError::Usage(err.to_string()))?;
            let dm = AccuracyDemand::new(beta, eta).map_err(|err| CliError::Usage(err.to_string()))?;
            rows.push(BoundsRow {
                epsilon: e,
                beta,
                lower: cell(required_samples_lower(dec.lambda_max(), dec.lambda_min(), &b, &dm))?,
                upper: cell(required_samples_upper(dec.weight(), &b, &dm))?,
                shadow_upper: cell(shadow_required_samples(tr_o2, obs.dim(), &b, &dm))?,
                fidelity_lower: cell(fidelity_lower_bound(dec.lambda_max(), dec.lambda_min(), &dm))?,
                theta_regime: e > 0.0 && e <= 1.0,
            });
        }
    }
    Ok(rows)
}

pub fn bounds(cfg: &Config, out: &mut dyn Write) -> Outcome {
    cfg.check_known(&["observable", "epsilons", "betas", "delta", "eta", "output_dir", "seed"])?;
    let obs = parse_observable(cfg.str_or("observable", "Z"))?;
    let eps = cfg.f64_list_or("epsilons", "0.25,0.5,1,2")?;
    let betas = cfg.f64_list_or("betas", "0.05,0.1")?;
    let delta = cfg.f64_or("delta", 0.0)?;
    let eta = cfg.f64_or("eta", 0.05)?;
    if eps.is_empty() || betas.is_empty() {
        return Err(CliError::Usage("epsilon and beta grids must be nonempty".into()));
    }
    let rows = bounds_table(&obs, &eps, &betas, delta, eta)?;

    let dir = cfg.output_dir();
    prepare_dir(&dir)?;
    let path = dir.join("bounds.csv");
    let mut csv = create(&path)?;
    writeln!(csv, "{BOUNDS_HEADER}")?;
    writeln!(
        out,
        "{:>8} {:>6} {:>10} {:>10} {:>12} {:>10} {:>8} {:>6}",
        "epsilon", "beta", "lower", "upper", "shadow_upper", "fid_lower", "ratio", "theta"
    )?;
    let mut violations = 0;
    for r in &rows {
        let notes: Vec<String> = [
            ("lower", &r.lower),
            ("upper", &r.upper),
            ("shadow_upper", &r.shadow_upper),
            ("fidelity_lower", &r.fidelity_lower),
        ]
        .iter()
        .filter_map(|(name, c)| c.as_ref().err().map(|why| format!("{name} {why}")))
        .collect();
        let ratio = r.ratio().map_or("NA".to_string(), num);
        let theta = if r.theta_regime { "in" } else { "out" };
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            num(r.epsilon),
            num(r.beta),
            show(&r.lower),
            show(&r.upper),
            show(&r.shadow_upper),
            show(&r.fidelity_lower),
            ratio,
            theta,
            notes.join("; ")
        )?;
        writeln!(
            out,
            "{:>8} {:>6} {:>10} {:>10} {:>12} {:>10} {:>8} {:>6}",
            num(r.epsilon),
            num(r.beta),
            show(&r.lower),
            show(&r.upper),
            show(&r.shadow_upper),
            show(&r.fidelity_lower),
            r.ratio().map_or("NA".to_string(), |x| format!("{x:.3}")),
            theta
        )?;
        if r.theta_regime && !r.consistent() {
            violations += 1;
            writeln!(out, "  lower bound exceeds an upper bound at epsilon = {}, beta = {}", r.epsilon, r.beta)?;
        }
    }
    csv.flush()?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(if violations == 0 { 0 } else { 1 })
}
