use std::fs::File;
use std::io::{self, BufWriter, Write};

use super::{parse_config, Command, Reference, RunConfig};
use crate::analysis::{
    estimate_exact_errors, estimate_strong_errors, estimate_sup_moments, fd_richardson, fit_loglog,
    fit_rate, jet_consistency, level_steps, mlmc_variance_table, product_lemma_check,
    random_lemma_instance, LevelRecord, McSettings, Quantity,
};
use crate::engine::{simulate_path, Order, SimConfig};
use crate::error::Error;
use crate::models::{Gbm, ModelRegistry};
use crate::paths::{sample_increments, SeedSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// Floats in CSV output: 17 significant digits, scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

enum Failure {
    Lib(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<bool, Failure>;

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stderr = io::stderr();
    let mut err = stderr.lock();
    let config = match parse_config(argv) {
        Ok(c) => c,
        Err(usage) => {
            if usage.code == EXIT_OK {
                print!("{}", usage.message);
            } else {
                let _ = writeln!(err, "{}", usage.message.trim_end());
            }
            return usage.code;
        }
    };
    match &config.output {
        Some(path) => match File::create(path) {
            Ok(f) => {
                let mut out = BufWriter::new(f);
                let code = dispatch(&config, &mut out, &mut err);
                if let Err(e) = out.flush() {
                    let _ = writeln!(err, "error: writing {}: {e}", path.display());
                    return EXIT_FAILED;
                }
                code
            }
            Err(e) => {
                let _ = writeln!(err, "error: cannot create {}: {e}", path.display());
                EXIT_USAGE
            }
        },
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            let code = dispatch(&config, &mut out, &mut err);
            let _ = out.flush();
            code
        }
    }
}

/// Runs a parsed configuration, writing CSV to `out` and summaries to
/// `err`. Returns 0 on success, 1 when a validation fails, 2 on bad
/// arguments and 3 on divergence.
pub fn dispatch(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let outcome = match config.command {
        Command::Models => run_models(out),
        Command::Simulate => run_simulate(config, out),
        Command::Converge => run_converge(config, out, err),
        Command::Moments => run_moments(config, out),
        Command::Mlmc => run_mlmc(config, out, err),
        Command::Validate => run_validate(config, out, err),
        Command::Lemma => run_lemma(config, out, err),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(Failure::Lib(e @ Error::Divergence { .. })) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DIVERGENCE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILED
        }
    }
}

fn sim_config(c: &RunConfig) -> SimConfig {
    SimConfig {
        theta: c.theta,
        s0: c.s0,
        ds0: c.ds0,
        dds0: c.dds0,
        t_final: c.t_final,
        steps: c.base_steps,
        order: c.quantity.map_or(Order::Second, Quantity::order),
    }
}

fn mc_settings(c: &RunConfig) -> McSettings {
    McSettings::new(c.n_paths, c.seed).with_workers(c.workers)
}

fn selected(c: &RunConfig, q: Quantity) -> bool {
    c.quantity.map_or(true, |sel| sel == q)
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn run_models(out: &mut dyn Write) -> Outcome {
    writeln!(out, "id,description,constants,l_a,l_b")?;
    let bound = |b: Option<f64>| b.map(format_float).unwrap_or_else(|| "none".into());
    for d in ModelRegistry::builtin().descriptors() {
        let constants: Vec<String> = d
            .constants
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            d.id,
            csv_quote(&d.description),
            csv_quote(&constants.join(";")),
            bound(d.bounds.l_a),
            bound(d.bounds.l_b)
        )?;
    }
    Ok(true)
}

fn run_simulate(c: &RunConfig, out: &mut dyn Write) -> Outcome {
    let model = ModelRegistry::builtin().get(&c.model)?;
    let cfg = sim_config(c).with_order(Order::Second);
    cfg.validate()?;
    let incs = sample_increments(SeedSpec::new(c.seed, 0), cfg.steps, cfg.h())?;
    let path = simulate_path(model.as_ref(), &cfg, &incs)?;
    writeln!(out, "t,S,dS,ddS")?;
    for (t, st) in path.times().zip(&path.states) {
        writeln!(
            out,
            "{},{},{},{}",
            format_float(t),
            format_float(st.s),
            format_float(st.ds),
            format_float(st.dds)
        )?;
    }
    Ok(true)
}

fn write_level_records(out: &mut dyn Write, recs: &[LevelRecord]) -> io::Result<()> {
    for r in recs {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.level,
            format_float(r.h),
            r.p,
            r.quantity,
            format_float(r.estimate),
            format_float(r.std_error),
            r.n_paths
        )?;
    }
    Ok(())
}

fn run_converge(c: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let registry = ModelRegistry::builtin();
    let model = registry.get(&c.model)?;
    let cfg = sim_config(c);
    let mc = mc_settings(c);
    let mut all = Vec::new();
    for level in c.levels.0..=c.levels.1 {
        let recs = match c.reference {
            Reference::Coupled => estimate_strong_errors(model.as_ref(), &cfg, level, &c.ps, &mc)?,
            Reference::Exact => {
                if c.model != "gbm" {
                    return Err(
                        Error::invalid("the exact reference is only available for gbm").into(),
                    );
                }
                estimate_exact_errors(&Gbm::default(), &cfg, level, &c.ps, &mc)?
            }
        };
        all.extend(recs.into_iter().filter(|r| selected(c, r.quantity)));
    }
    all.sort_by_key(|r| (r.p, r.quantity, r.level));

    writeln!(out, "level,h,p,quantity,estimate,std_error,n_paths")?;
    write_level_records(out, &all)?;

    for chunk in all.chunk_by(|a, b| a.p == b.p && a.quantity == b.quantity) {
        let (p, q) = (chunk[0].p, chunk[0].quantity);
        match fit_rate(chunk) {
            Ok(fit) => writeln!(
                err,
                "fit p={p} quantity={q}: slope {:.4} ± {:.4} (95% CI), r² {:.4}, {} levels used, {} excluded",
                fit.slope,
                fit.slope_ci_halfwidth,
                fit.r_squared,
                fit.records.len(),
                fit.excluded.len()
            )?,
            Err(e) => writeln!(err, "fit p={p} quantity={q}: not available ({e})")?,
        }
    }
    Ok(true)
}

fn run_moments(c: &RunConfig, out: &mut dyn Write) -> Outcome {
    let model = ModelRegistry::builtin().get(&c.model)?;
    let mc = mc_settings(c);
    writeln!(out, "h,p,quantity,estimate,std_error")?;
    for level in c.levels.0..=c.levels.1 {
        let cfg = sim_config(c).with_steps(level_steps(c.base_steps, level)?);
        for e in estimate_sup_moments(model.as_ref(), &cfg, &c.ps, &mc)? {
            if selected(c, e.quantity) {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    format_float(e.h),
                    e.p,
                    e.quantity,
                    format_float(e.estimate),
                    format_float(e.std_error)
                )?;
            }
        }
    }
    Ok(true)
}

fn run_mlmc(c: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let model = ModelRegistry::builtin().get(&c.model)?;
    let rows = mlmc_variance_table(
        model.as_ref(),
        &sim_config(c),
        c.payoff,
        c.levels.0..=c.levels.1,
        &mc_settings(c),
    )?;
    writeln!(out, "level,h,mean_dP,var_dP,n_paths")?;
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.level,
            format_float(r.h),
            format_float(r.mean_dp),
            format_float(r.var_dp),
            r.n_paths
        )?;
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.var_dp > 0.0)
        .map(|r| (r.h, r.var_dp))
        .collect();
    match fit_loglog(&pts) {
        Ok(fit) => writeln!(
            err,
            "variance slope in h: {:.4} ± {:.4} (95% CI) over {} levels",
            fit.slope, fit.slope_ci_halfwidth, fit.n_points
        )?,
        Err(e) => writeln!(err, "variance slope: not available ({e})")?,
    }
    Ok(true)
}

/// Jet-vs-explicit agreement on N ∈ {2, 16, 256} and finite-difference
/// Richardson ratios for both tangents.
fn run_validate(c: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    const JET_TOLERANCE: f64 = 1e-10;
    let model = ModelRegistry::builtin().get(&c.model)?;
    let cfg = sim_config(c).with_order(Order::Second);
    let mc = mc_settings(c);
    let mut all_ok = true;

    writeln!(out, "check,model,detail,evaluated,value,threshold,pass")?;
    for steps in [2usize, 16, 256] {
        let r = jet_consistency(model.as_ref(), &cfg, steps, &mc)?;
        let pass = r.max_relative_difference <= JET_TOLERANCE;
        all_ok &= pass;
        writeln!(
            out,
            "jet_vs_explicit,{},N={steps},{},{},{},{pass}",
            c.model,
            r.n_paths,
            format_float(r.max_relative_difference),
            format_float(JET_TOLERANCE)
        )?;
        writeln!(
            err,
            "[{}] jet vs explicit, N = {steps}: max relative difference {:.3e}",
            if pass { "PASS" } else { "FAIL" },
            r.max_relative_difference
        )?;
    }

    for q in [Quantity::Tangent1, Quantity::Tangent2] {
        let r = fd_richardson(model.as_ref(), &cfg, q, c.eps, &mc)?;
        let pass = r.passed();
        all_ok &= pass;
        let detail = format!("{q} eps={:e}/{:e}", r.large_bump, r.small_bump);
        let (lo, hi) = if r.evaluated > 0 {
            (r.min_ratio, r.max_ratio)
        } else {
            (f64::NAN, f64::NAN)
        };
        writeln!(
            out,
            "fd_richardson_min,{},{detail},{},{},{},{pass}",
            c.model,
            r.evaluated,
            format_float(lo),
            format_float(50.0)
        )?;
        writeln!(
            out,
            "fd_richardson_max,{},{detail},{},{},{},{pass}",
            c.model,
            r.evaluated,
            format_float(hi),
            format_float(200.0)
        )?;
        writeln!(
            err,
            "[{}] finite differences {detail}: {} paths judged, {} below noise floor, ratios in [{lo:.2}, {hi:.2}], {} outside [50, 200]",
            if pass { "PASS" } else { "FAIL" },
            r.evaluated,
            r.below_noise,
            r.out_of_band
        )?;
    }
    Ok(all_ok)
}

fn run_lemma(c: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let k = c.k.ok_or_else(|| Error::invalid("lemma requires --k"))?;
    writeln!(out, "trial,k,p,lhs,rhs,holds")?;
    let mut failures = 0usize;
    for trial in 0..c.trials {
        let p = c.ps[trial % c.ps.len()];
        let mut rng = SeedSpec::new(c.seed, trial as u64).rng();
        let inst = random_lemma_instance(&mut rng, k, p, 4, 3.0);
        let r = product_lemma_check(&inst)?;
        failures += usize::from(!r.holds);
        writeln!(
            out,
            "{trial},{k},{p},{},{},{}",
            format_float(r.lhs),
            format_float(r.rhs),
            r.holds
        )?;
    }
    writeln!(
        err,
        "{} of {} instances satisfy the bound",
        c.trials - failures,
        c.trials
    )?;
    Ok(failures == 0)
}
