use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hypercomm::eval::{self, BenchCell, BenchSettings, Method};
use hypercomm::hypergraph::{load_hyperedge_list, read_labels, write_labels};
use hypercomm::synth::{self, ScenarioParams};
use hypercomm::{fit, EmbeddingMatrix, Execution, FitConfig, FitResult, IngestOptions, Tunable};
use serde_json::json;

use crate::error::{at, usage, CliError, CliResult};
use crate::manifest::{Clock, ManifestBuilder};
use crate::{BenchArgs, DetectArgs, EvalArgs, GenerateArgs};

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn flush(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn execution(threads: usize) -> Execution {
    if threads == 0 {
        Execution::Serial
    } else {
        Execution::Parallel
    }
}

fn check_sparsity(v: f64) -> CliResult<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        usage(format!("--sn must lie in (0, 1], got {v}"))
    }
}

fn check_tunable(name: &str, t: Tunable, allow_zero: bool) -> CliResult<()> {
    match t {
        Tunable::Fixed(v) if !v.is_finite() || v < 0.0 || (v == 0.0 && !allow_zero) => {
            usage(format!("--{name} must be {}, got {v}", if allow_zero { "non-negative" } else { "positive" }))
        }
        _ => Ok(()),
    }
}

pub fn generate(a: &GenerateArgs, args: &[String], threads: usize) -> CliResult<()> {
    let manifest = ManifestBuilder { command: "generate", args, threads, clock: Clock::start() };
    check_sparsity(a.sn)?;
    if a.k == 0 {
        return usage("--k must be at least 1");
    }
    let params = ScenarioParams::new(a.n, a.k, a.m, a.r, a.sn, a.seed);
    let (h, truth) = synth::generate(a.scenario, params)?;

    let hg = with_suffix(&a.out, ".hg");
    let labels = with_suffix(&a.out, ".labels");
    let alpha = with_suffix(&a.out, ".alpha.csv");
    let mut w = create(&hg)?;
    h.write_hg(&mut w).map_err(at(&hg))?;
    flush(w, &hg)?;
    let mut w = create(&labels)?;
    write_labels(truth.labels_star.labels(), &mut w).map_err(at(&labels))?;
    flush(w, &labels)?;
    let mut w = create(&alpha)?;
    truth.alpha_star.write_csv(&mut w).map_err(at(&alpha))?;
    flush(w, &alpha)?;

    let config = json!({
        "scenario": a.scenario,
        "n": a.n,
        "k": a.k,
        "m": a.m,
        "r": a.r,
        "s_n": a.sn,
        "reading": truth.reading,
        "edges": h.num_edges(),
    });
    let manifest_path = with_suffix(&a.out, ".manifest.json");
    manifest.finish(config, a.seed, vec![], vec![hg, labels, alpha], None).write(&manifest_path)?;
    println!("wrote {} hyperedges on {} vertices to {}", h.num_edges(), h.n(), a.out.display());
    Ok(())
}

fn write_trace(res: &FitResult, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    writeln!(w, "iteration,objective,eta").map_err(io)?;
    for (i, (obj, eta)) in res.loss_trace.iter().zip(&res.eta_trace).enumerate() {
        writeln!(w, "{i},{obj},{eta}").map_err(io)?;
    }
    flush(w, path)
}

pub fn detect(a: &DetectArgs, args: &[String], threads: usize) -> CliResult<()> {
    let manifest = ManifestBuilder { command: "detect", args, threads, clock: Clock::start() };
    if a.k < 2 {
        return usage(format!("--k must be at least 2, got {}", a.k));
    }
    if a.r < 1 {
        return usage("--r must be positive");
    }
    if let Tunable::Fixed(v) = a.sn {
        check_sparsity(v)?;
    }
    check_tunable("lambda0", a.lambda0, true)?;
    check_tunable("lambda1", a.lambda1, true)?;
    check_tunable("eta", a.eta, false)?;
    if !(a.tol > 0.0) {
        return usage(format!("--tol must be positive, got {}", a.tol));
    }
    if let (Some(lo), Some(hi)) = (a.min_size, a.max_size) {
        if lo > hi {
            return usage(format!("--min-size {lo} exceeds --max-size {hi}"));
        }
    }
    if a.clique_expand.is_some_and(|c| c < 2) {
        return usage("--clique-expand must be at least 2");
    }

    let options = IngestOptions { min_size: a.min_size, max_size: a.max_size, clique_cap: a.clique_expand, ..Default::default() };
    let h = load_hyperedge_list(open(&a.input)?, &options).map_err(at(&a.input))?;
    let mut cfg = FitConfig::new(a.k, a.r);
    cfg.s_n = a.sn;
    cfg.lambda0 = a.lambda0;
    cfg.lambda1 = a.lambda1;
    cfg.eta0 = a.eta;
    cfg.tol = a.tol;
    cfg.max_outer = a.max_iter;
    cfg.seed = a.seed;
    cfg.execution = execution(threads);
    let res = fit(&h, &cfg)?;

    let labels = with_suffix(&a.out, ".labels");
    let alpha = with_suffix(&a.out, ".alpha.csv");
    let trace = with_suffix(&a.out, ".trace.csv");
    let mut w = create(&labels)?;
    write_labels(res.labels.labels(), &mut w).map_err(at(&labels))?;
    flush(w, &labels)?;
    let mut w = create(&alpha)?;
    res.alpha_hat.write_csv(&mut w).map_err(at(&alpha))?;
    flush(w, &alpha)?;
    write_trace(&res, &trace)?;

    let objective = *res.loss_trace.last().expect("trace is never empty");
    let config = json!({
        "n": h.n(),
        "m": h.m(),
        "edges": h.num_edges(),
        "k": a.k,
        "r": a.r,
        "s_n": res.params.s_n,
        "lambda0": res.params.lambda0,
        "lambda1": res.params.lambda1,
        "eta0": res.eta_trace[0],
        "tol": a.tol,
        "max_iter": a.max_iter,
        "kmeans_restarts": cfg.kmeans_restarts,
        "min_size": a.min_size,
        "max_size": a.max_size,
        "clique_expand": a.clique_expand,
        "execution": cfg.execution,
        "outer_iters": res.outer_iters,
        "final_eta": res.final_eta,
        "final_objective": objective,
    });
    let manifest_path = with_suffix(&a.out, ".manifest.json");
    manifest
        .finish(config, a.seed, vec![a.input.clone()], vec![labels, alpha, trace], Some(res.converged))
        .write(&manifest_path)?;
    if !res.converged {
        log::warn!("stopped at the iteration cap ({}) before converging", a.max_iter);
    }
    println!(
        "n={} edges={} s_n={} iterations={} converged={} objective={}",
        h.n(),
        h.num_edges(),
        res.params.s_n,
        res.outer_iters,
        res.converged,
        objective
    );
    Ok(())
}

fn read_label_file(path: &Path, k: usize) -> CliResult<Vec<usize>> {
    let labels = read_labels(open(path)?).map_err(at(path))?;
    if let Some(bad) = labels.iter().find(|&&l| l < 1 || l > k) {
        return Err(CliError::Data(format!("{}: label {bad} outside 1..={k}", path.display())));
    }
    Ok(labels)
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    if a.k < 1 {
        return usage("--k must be positive");
    }
    let truth = read_label_file(&a.truth, a.k)?;
    let pred = read_label_file(&a.pred, a.k)?;
    if truth.len() != pred.len() {
        return Err(CliError::Data(format!("truth has {} labels but prediction has {}", truth.len(), pred.len())));
    }
    if truth.is_empty() {
        return Err(CliError::Data("label files are empty".into()));
    }
    let hamming = eval::hamming_error(&truth, &pred, a.k)?;

    let hellinger = match (&a.alpha_true, &a.alpha_pred) {
        (Some(t), Some(p)) => {
            let (s_n, m) = (a.sn.expect("clap enforces --sn"), a.m.expect("clap enforces --m"));
            check_sparsity(s_n)?;
            let at_true = EmbeddingMatrix::read_csv(open(t)?).map_err(at(t))?;
            let at_pred = EmbeddingMatrix::read_csv(open(p)?).map_err(at(p))?;
            if at_true.n() != at_pred.n() || at_true.n() != truth.len() {
                return Err(CliError::Data(format!(
                    "embeddings have {} and {} rows for {} vertices",
                    at_true.n(),
                    at_pred.n(),
                    truth.len()
                )));
            }
            Some(eval::hellinger_between(&at_pred, &at_true, m, s_n)?)
        }
        _ => None,
    };

    if a.json {
        let mut out = json!({ "n": truth.len(), "k": a.k, "hamming_error": hamming });
        if let Some(d) = hellinger {
            out["hellinger"] = json!(d);
        }
        println!("{out}");
    } else {
        println!("hamming_error {hamming}");
        if let Some(d) = hellinger {
            println!("hellinger {d}");
        }
    }
    Ok(())
}

pub fn bench(a: &BenchArgs, args: &[String], threads: usize) -> CliResult<()> {
    let manifest = ManifestBuilder { command: "bench", args, threads, clock: Clock::start() };
    let methods = a.methods.split(',').filter(|s| !s.trim().is_empty()).map(str::parse::<Method>).collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return usage("--methods is empty");
    }
    if a.reps == 0 {
        return usage("--reps must be at least 1");
    }
    if a.k < 2 {
        return usage(format!("--k must be at least 2, got {}", a.k));
    }
    for &s in &a.sn_list {
        check_sparsity(s)?;
    }
    check_tunable("lambda0", a.lambda0, true)?;
    check_tunable("lambda1", a.lambda1, true)?;
    check_tunable("eta", a.eta, false)?;

    let grid: Vec<BenchCell> =
        a.n_list.iter().flat_map(|&n| a.sn_list.iter().map(move |&s_n| BenchCell { scenario: a.scenario, n, s_n })).collect();
    let mut settings = BenchSettings::new(a.k, a.m, a.r);
    settings.hem.lambda0 = a.lambda0;
    settings.hem.lambda1 = a.lambda1;
    settings.hem.eta0 = a.eta;
    settings.hem.execution = execution(threads);
    let reports = eval::benchmark(&grid, &methods, a.reps, a.seed, &settings)?;

    let csv = with_suffix(&a.out, ".csv");
    let json_path = with_suffix(&a.out, ".json");
    std::fs::write(&csv, eval::reports_to_csv(&reports)).map_err(|source| CliError::Io { path: csv.clone(), source })?;
    std::fs::write(&json_path, eval::reports_to_json(&reports)? + "\n")
        .map_err(|source| CliError::Io { path: json_path.clone(), source })?;
    for r in reports.iter().filter(|r| !r.failures.is_empty()) {
        log::warn!("{} failed {} of {} replications (n={}, s_n={})", r.method.name(), r.failures.len(), r.reps, r.n, r.s_n);
    }

    let config = json!({
        "scenario": a.scenario,
        "grid": grid,
        "methods": methods,
        "reps": a.reps,
        "settings": settings,
    });
    let manifest_path = with_suffix(&a.out, ".manifest.json");
    manifest.finish(config, a.seed, vec![], vec![csv, json_path], None).write(&manifest_path)?;
    print!("{}", eval::format_table(&reports));
    Ok(())
}
