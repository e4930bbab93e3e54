//! Subcommand implementations shared by the binary and the test suite.

use std::path::Path;

use bta_core::engine::{run_chains, summarize, SummaryAccumulator};
use bta_core::model::Dataset;

use crate::error::{data_err, runtime_err, CliError};
use crate::export::{export_diagnostics, export_summary, TraceWriter};
use crate::panel::{load, present_counts, write_panel};
use crate::simulate::{simulate, TruthFile, TruthRealization};
use crate::spec_file::{RunDefaults, SpecFile};
use crate::store::{chain_file_name, chain_files, read_chain, ChainHeader, FileSink, FORMAT_NAME, FORMAT_VERSION};

pub struct RunArgs<'a> {
    pub data: &'a Path,
    pub spec: &'a Path,
    pub out: &'a Path,
    pub overrides: RunDefaults,
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let spec_file = SpecFile::read(args.spec)?;
    let spec = spec_file.to_model_spec()?;
    let (_, data) = load(args.data, args.spec)?;
    let config = spec_file.run_config(&args.overrides);
    config.validate().map_err(CliError::from)?;

    let chains_dir = args.out.join("chains");
    std::fs::create_dir_all(&chains_dir)
        .map_err(|e| runtime_err(format!("cannot create {}: {e}", chains_dir.display())))?;

    println!(
        "running {} chains x {} iterations (burn-in {}, thin {}, seed {}) on n = {}",
        config.chains, config.iterations, config.burn_in, config.thin, config.seed, data.n
    );

    let spec_for_header = spec.clone();
    let labels = data.labels.clone();
    let groups = data.groups.clone();
    let output = run_chains(&config, &spec, &data, |chain| {
        let header = ChainHeader {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            chain,
            n: data.n,
            spec: spec_for_header.clone(),
            labels: labels.clone(),
            groups: groups.clone(),
        };
        FileSink::create(&chains_dir.join(chain_file_name(chain)), &header)
    })
    .map_err(CliError::from)?;
    for sink in output.sinks {
        sink.finish().map_err(CliError::from)?;
    }

    // summaries come from a single pass over the stores, so `run` and a later
    // `summarize` over the same chains emit byte-identical tables
    let n_samples = summarize_directory(&chains_dir, args.out)?;
    export_diagnostics(&args.out.join("diagnostics.json"), &output.diagnostics)?;

    println!(
        "stored {} samples per chain ({} pooled); max cross-chain inclusion spread {:.4}",
        output.diagnostics.samples_per_chain, n_samples, output.diagnostics.max_inclusion_spread
    );
    println!("results written to {}", args.out.display());
    Ok(())
}

pub fn cmd_summarize(samples_dir: &Path, out_dir: &Path) -> Result<(), CliError> {
    let n_samples = summarize_directory(samples_dir, out_dir)?;
    println!("summarized {n_samples} samples into {}", out_dir.display());
    Ok(())
}

/// Pool every chain file under `samples_dir` (in chain order) and write the
/// summary tables plus the trace export into `out_dir`.
fn summarize_directory(samples_dir: &Path, out_dir: &Path) -> Result<usize, CliError> {
    let files = chain_files(samples_dir)?;
    let mut reference: Option<ChainHeader> = None;
    let mut acc: Option<SummaryAccumulator> = None;
    let mut trace: Option<TraceWriter> = None;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| runtime_err(format!("cannot create {}: {e}", out_dir.display())))?;
    for path in &files {
        let (header, records) = read_chain(path)?;
        if let Some(ref first) = reference {
            if serde_json::to_string(&header.spec).unwrap()
                != serde_json::to_string(&first.spec).unwrap()
                || header.n != first.n
            {
                return Err(data_err(format!(
                    "chain file {} disagrees with the first chain's spec",
                    path.display()
                )));
            }
        } else {
            acc = Some(SummaryAccumulator::new(&header.spec, header.n));
            trace = Some(TraceWriter::create(&out_dir.join("trace.csv"), &header.spec)?);
            reference = Some(header.clone());
        }
        let acc = acc.as_mut().expect("accumulator initialized");
        for rec in &records {
            acc.add(rec);
        }
        trace
            .as_mut()
            .expect("trace initialized")
            .append(header.chain, &records)?;
    }
    let header = reference.expect("at least one chain file");
    let summary = acc
        .expect("accumulator initialized")
        .finalize(&header.groups)
        .map_err(CliError::from)?;
    trace.expect("trace initialized").finish()?;
    export_summary(out_dir, &header.spec, &summary, &header.labels, &header.groups)?;
    Ok(summary.n_samples)
}

pub fn cmd_simulate(
    spec_path: &Path,
    truth_path: &Path,
    n: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let spec_file = SpecFile::read(spec_path)?;
    let truth = TruthFile::read(truth_path)?;
    let sim = simulate(&spec_file, &truth, n, seed)?;
    write_panel(out, &sim.header, &sim.rows)?;
    let sidecar = TruthRealization {
        truth,
        seed,
        n,
        scaled_indices: sim.scaled_indices,
    };
    let sidecar_path = out.with_extension("truth.json");
    std::fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar)
            .map_err(|e| runtime_err(format!("truth encode failure: {e}")))?,
    )
    .map_err(|e| runtime_err(format!("cannot write {}: {e}", sidecar_path.display())))?;
    println!("wrote {} ({} rows) and {}", out.display(), n, sidecar_path.display());
    Ok(())
}

pub fn cmd_validate(data_path: &Path, spec_path: &Path) -> Result<(), CliError> {
    let (spec, data) = load(data_path, spec_path)?;
    print_validation(&spec, &data);
    Ok(())
}

fn print_validation(spec: &bta_core::ModelSpec, data: &Dataset) {
    println!("observations: {}", data.n);
    for (t, th) in spec.theories.iter().enumerate() {
        let flagged = &data.constant_columns[t];
        if flagged.is_empty() {
            println!("theory {}: {} proxies", th.name, th.proxy_names.len());
        } else {
            let names: Vec<&str> = flagged.iter().map(|&j| th.proxy_names[j].as_str()).collect();
            println!(
                "theory {}: {} proxies (constant columns flagged: {})",
                th.name,
                th.proxy_names.len(),
                names.join(", ")
            );
        }
    }
    for (r, oc) in spec.outcomes.iter().enumerate() {
        println!(
            "outcome {}: {:?}, present {} of {}",
            oc.name,
            oc.family,
            present_counts(data)[r],
            data.n
        );
    }
}

/// Re-summarize a sample directory in memory (used by tests to cross-check
/// exported numbers against an independent pass over the raw store).
pub fn recount_summary(samples_dir: &Path) -> Result<bta_core::PosteriorSummary, CliError> {
    let files = chain_files(samples_dir)?;
    let mut all = Vec::new();
    let mut header0 = None;
    for path in &files {
        let (header, mut records) = read_chain(path)?;
        all.append(&mut records);
        header0.get_or_insert(header);
    }
    let header = header0.expect("nonempty");
    summarize(&header.spec, header.n, &header.groups, all.iter()).map_err(CliError::from)
}
