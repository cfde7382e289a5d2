use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mmv_core::decoders::DecoderLimits;
use mmv_core::io::{read_instance_json, read_w_csv, write_instance_json};
use mmv_core::verify::{
    check_net_consistency, hadamard_sweep, lemma1_configs, lemma1_stationary_check, lemma1_suite,
    lemma3_sweep, LemmaCheckReport,
};
use mmv_core::{
    bounds_table, c_of_w, decode_ml, decode_net, generate_instance, run_phase, DecoderKind,
    ProblemConfig, Schedule, SimRng, WMode,
};
use serde_json::{json, Map, Value};

use crate::output::{cell, index_cell, num, opt_num, write_csv, write_json};
use crate::{CliError, Format};

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Domain(format!("cannot open {}: {e}", path.display())))
}

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

pub fn cw(path: &Path, sigma_a_sq: f64, sigma_z_sq: f64, mode: WMode, format: Format) -> Result<(), CliError> {
    let w = read_w_csv(open(path)?, mode)?;
    let report = c_of_w(&w, sigma_a_sq, sigma_z_sq)?;
    let mut out = stdout();
    match format {
        Format::Json => {
            let per_subset: Vec<Value> = report
                .per_subset
                .iter()
                .map(|(s, v)| json!({ "subset": s.one_based(), "value": num(*v) }))
                .collect();
            write_json(
                &mut out,
                &json!({
                    "c_of_W": num(report.c_of_w),
                    "argmin_subset": report.argmin_subset.one_based(),
                    "sigma_a2": num(sigma_a_sq),
                    "sigma_z2": num(sigma_z_sq),
                    "per_subset": per_subset,
                }),
            )?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .per_subset
                .iter()
                .map(|(s, v)| vec![index_cell(&s.one_based()), cell(Some(*v))])
                .collect();
            write_csv(&mut out, &["subset", "value"], &rows)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn bounds(
    k: usize,
    n: f64,
    m: f64,
    sigma_a_sq: f64,
    sigma_z_sq: f64,
    format: Format,
) -> Result<(), CliError> {
    let rows = bounds_table(k, n, m, sigma_a_sq, sigma_z_sq)?;
    let mut out = stdout();
    match format {
        Format::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.case.label().to_string(),
                        cell(r.lower_bound_n),
                        cell(r.upper_bound_m),
                    ]
                })
                .collect();
            write_csv(&mut out, &["label", "lower_bound_n", "upper_bound_m"], &cells)?;
        }
        Format::Json => {
            let values: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "label": r.case.label(),
                        "rate": opt_num(r.rate),
                        "lower_bound_n": opt_num(r.lower_bound_n),
                        "upper_bound_m": opt_num(r.upper_bound_m),
                    })
                })
                .collect();
            write_json(&mut out, &Value::Array(values))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub struct DecodeArgs {
    pub instance: PathBuf,
    pub decoder: DecoderKind,
    pub epsilon: Option<f64>,
    pub budget: u128,
    pub net_cap: usize,
    pub sigma_a_sq: f64,
    pub sigma_z_sq: f64,
}

pub fn decode(args: &DecodeArgs, format: Format) -> Result<(), CliError> {
    let inst = read_instance_json(open(&args.instance)?)?;
    let limits = DecoderLimits {
        net_point_cap: args.net_cap,
        test_budget: args.budget,
    };
    let mut cfg = ProblemConfig::new(inst.m(), inst.n(), args.sigma_a_sq, args.sigma_z_sq, 0);
    if let Some(eps) = args.epsilon {
        cfg = cfg.with_epsilon(eps);
    }
    cfg.validate(inst.k())?;
    let result = match args.decoder {
        DecoderKind::Ml => decode_ml(inst.y(), inst.a(), inst.k(), &limits)?,
        DecoderKind::Net => decode_net(inst.y(), inst.a(), inst.k(), &cfg, &limits)?,
    };
    let mut out = stdout();
    match format {
        Format::Json => write_json(
            &mut out,
            &json!({
                "support": result.support_one_based(),
                "status": result.status.as_str(),
                "residual": num(result.residual),
            }),
        )?,
        Format::Csv => write_csv(
            &mut out,
            &["support", "status", "residual"],
            &[vec![
                index_cell(&result.support_one_based()),
                result.status.as_str().to_string(),
                cell(Some(result.residual)),
            ]],
        )?,
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Lemma {
    #[value(name = "1")]
    Tail,
    #[value(name = "2")]
    Net,
    #[value(name = "3")]
    Gram,
    Hadamard,
}

fn report_fields(r: &LemmaCheckReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("name".into(), json!(r.name));
    m.insert("seed".into(), json!(r.seed));
    m.insert("trials".into(), json!(r.trials));
    m.insert("violations".into(), json!(r.violations));
    m.insert("worst_margin".into(), num(r.worst_margin));
    m.insert("passed".into(), json!(r.passed()));
    m
}

/// Runs the chosen check and prints its report. Returns whether it passed.
pub fn verify(lemma: Lemma, trials: u64, seed: u64) -> Result<bool, CliError> {
    let (report, fields) = match lemma {
        Lemma::Tail => {
            let (report, outcomes) = lemma1_suite(trials, seed)?;
            let mut fields = report_fields(&report);
            let configs: Vec<Value> = lemma1_configs()
                .iter()
                .zip(&outcomes)
                .map(|(c, o)| {
                    json!({
                        "label": c.label,
                        "estimate": num(o.estimate),
                        "bound": num(o.bound),
                        "standard_error": num(o.standard_error),
                        "violations": o.report.violations,
                    })
                })
                .collect();
            fields.insert("configs".into(), Value::Array(configs));
            let s = lemma1_stationary_check(50.0, 2.0, 4.0, 1.0)?;
            fields.insert(
                "stationary_point".into(),
                json!({
                    "p_star": num(s.p_star),
                    "slope": num(s.slope),
                    "finite_difference_slope": num(s.finite_difference_slope),
                    "value": num(s.value),
                    "closed_form": num(s.closed_form),
                }),
            );
            (report, fields)
        }
        Lemma::Net => {
            let out = check_net_consistency(trials, seed)?;
            let mut fields = report_fields(&out.report);
            let radii: Vec<Value> = out.radii.iter().map(|r| num(*r)).collect();
            let freqs: Vec<Value> = out.frequencies.iter().map(|f| num(*f)).collect();
            fields.insert("radii".into(), Value::Array(radii));
            fields.insert("sizes".into(), json!(out.sizes));
            fields.insert("n_schedule".into(), json!(out.ns));
            fields.insert("frequencies".into(), Value::Array(freqs));
            (out.report, fields)
        }
        Lemma::Gram => {
            let r = lemma3_sweep(trials, seed)?;
            let f = report_fields(&r);
            (r, f)
        }
        Lemma::Hadamard => {
            let r = hadamard_sweep(trials, seed)?;
            let f = report_fields(&r);
            (r, f)
        }
    };
    let mut out = stdout();
    write_json(&mut out, &Value::Object(fields))?;
    out.flush()?;
    Ok(report.passed())
}

pub fn simulate(config: &Path, out_path: Option<&Path>, seed: Option<u64>, format: Format) -> Result<(), CliError> {
    let mut schedule: Schedule = serde_json::from_reader(open(config)?)
        .map_err(|e| CliError::Domain(format!("invalid schedule {}: {e}", config.display())))?;
    if let Some(s) = seed {
        schedule.master_seed = s;
    }
    let curve = run_phase(&schedule)?;
    let mut sink: Box<dyn Write> = match out_path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Domain(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(stdout()),
    };
    match format {
        Format::Csv => curve.write_csv(&mut sink)?,
        Format::Json => {
            let points: Vec<Value> = curve
                .points
                .iter()
                .map(|p| {
                    json!({
                        "m": p.m,
                        "n": p.n,
                        "trials": p.trials,
                        "errors": p.errors,
                        "error_rate": opt_num(p.error_rate),
                        "wilson_halfwidth": opt_num(p.wilson_halfwidth),
                        "status": p.status.as_str(),
                    })
                })
                .collect();
            write_json(
                &mut sink,
                &json!({
                    "decoder": curve.decoder.as_str(),
                    "ratio": num(curve.ratio),
                    "c_of_W": num(curve.c_of_w),
                    "master_seed": schedule.master_seed,
                    "points": points,
                }),
            )?;
        }
    }
    sink.flush()?;
    Ok(())
}

pub struct InstanceArgs {
    pub w: PathBuf,
    pub mode: WMode,
    pub m: usize,
    pub n: usize,
    pub sigma_a_sq: f64,
    pub sigma_z_sq: f64,
    pub out: Option<PathBuf>,
}

pub fn instance(args: &InstanceArgs, seed: u64) -> Result<(), CliError> {
    let w = read_w_csv(open(&args.w)?, args.mode)?;
    let cfg = ProblemConfig::new(args.m, args.n, args.sigma_a_sq, args.sigma_z_sq, seed);
    let inst = generate_instance(&w, &cfg, &mut SimRng::new(seed))?;
    match &args.out {
        Some(p) => {
            let file = File::create(p)
                .map_err(|e| CliError::Domain(format!("cannot create {}: {e}", p.display())))?;
            let mut wr = BufWriter::new(file);
            write_instance_json(&mut wr, &inst)?;
            writeln!(wr)?;
            wr.flush()?;
        }
        None => {
            let mut out = stdout();
            write_instance_json(&mut out, &inst)?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}
