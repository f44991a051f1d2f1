//! Subcommand implementations: thin orchestration of the library with
//! stable, machine-readable output. Every command prints its report to
//! stdout and mirrors it to `--out` when set (JSON where the extension
//! asks for it).

use std::fs;
use std::path::Path;

use serde_json::json;
use statmem_core::inference::{estimate_cq, sweep, sweep_csv, SweepConfig, SWEEP_HEADER};
use statmem_core::machine::{Machine, SymbolSequence};
use statmem_core::perturb::{noise_scaling_experiment, random_zero_sum_delta, weyl_check};
use statmem_core::quantum::{memory_overlaps, quantum_memory, statistical_complexity};
use statmem_core::report::{csv_table, g12, kv_block};
use statmem_core::rng::substream_rng;
use statmem_core::words::effective_markov_order;
use statmem_core::Alphabet;

use crate::config::RunConfig;
use crate::error::CliError;

fn write_out(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Sequence source shared by `infer` and `emo`: an explicit file wins,
/// otherwise the configured process is sampled at the configured length.
fn source_sequence(config: &RunConfig) -> Result<(SymbolSequence, Option<Machine>), CliError> {
    if let Some(path) = &config.sequence {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        let alphabet = Alphabet::new(config.alphabet.chars().collect())?;
        let seq = SymbolSequence::from_text(&text, alphabet)?;
        let machine = config.process.as_ref().map(|p| p.build()).transpose()?;
        Ok((seq, machine))
    } else {
        let machine = config.require_process()?.build()?;
        let n = config.single_n()?;
        let seq = machine.sample_sequence(n as usize, config.seed);
        Ok((seq, Some(machine)))
    }
}

/// Samples a sequence and writes it as a single-line symbol file plus a
/// `.meta.json` sidecar recording exactly how to regenerate it.
pub fn cmd_generate(config: &RunConfig) -> Result<(), CliError> {
    let spec = config.require_process()?;
    let machine = spec.build()?;
    let n = config.single_n()?;
    let out = config
        .out
        .as_ref()
        .ok_or_else(|| CliError::config("generate needs an \"out\" path"))?;

    let seq = machine.sample_sequence(n as usize, config.seed);
    let mut text = seq.to_text();
    text.push('\n');
    write_out(out, &text)?;

    let meta = json!({
        "process": spec.name,
        "params": spec.params,
        "alphabet": machine.alphabet().symbols().iter().collect::<String>(),
        "n": n,
        "seed": config.seed,
    });
    let meta_path = out.with_extension("meta.json");
    write_out(&meta_path, &format!("{:#}\n", meta))?;

    println!(
        "wrote {n} symbols to {} (seed {}), sidecar {}",
        out.display(),
        config.seed,
        meta_path.display()
    );
    Ok(())
}

/// Runs the blind estimator for each configured L over one sequence and
/// emits rows under the sweep schema; reference columns stay empty unless
/// the generating process is named.
pub fn cmd_infer(config: &RunConfig) -> Result<(), CliError> {
    let (seq, machine) = source_sequence(config)?;
    let l_values = config.require_l_values()?;

    let exact = machine
        .as_ref()
        .map(|m| -> Result<_, CliError> {
            Ok((quantum_memory(m)?.entropy_bits, statistical_complexity(m)))
        })
        .transpose()?;
    let process = config
        .process
        .as_ref()
        .map(|p| p.name.clone())
        .unwrap_or_else(|| "sequence".into());
    let params = config
        .process
        .as_ref()
        .map(|p| p.params_label())
        .unwrap_or_default();
    let reff = effective_markov_order(&seq, config.delta, config.r_max)
        .ok()
        .and_then(|p| p.r_eff);

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for &l in l_values {
        let model = estimate_cq(&seq, l)?;
        rows.push(vec![
            process.clone(),
            params.clone(),
            l.to_string(),
            seq.len().to_string(),
            "0".into(),
            seq.seed().map(|s| s.to_string()).unwrap_or_default(),
            g12(model.cq()),
            exact.map(|(cq, _)| g12(cq)).unwrap_or_default(),
            exact.map(|(_, cmu)| g12(cmu)).unwrap_or_default(),
            g12(model.dq()),
            reff.map(|r| r.to_string()).unwrap_or_default(),
            g12(model.trace_renorm),
            g12(model.lost_mass),
            if model.undersampled { "1" } else { "0" }.into(),
        ]);
        json_rows.push(json!({
            "process": process,
            "params": params,
            "L": l,
            "N": seq.len(),
            "seed": seq.seed(),
            "cq_estimate": model.cq(),
            "cq_exact": exact.map(|(cq, _)| cq),
            "cmu": exact.map(|(_, cmu)| cmu),
            "dq": model.dq(),
            "reff": reff,
            "trace_renorm": model.trace_renorm,
            "excluded_mass": model.lost_mass,
            "undersampled": model.undersampled,
            "guideline": model.guideline,
        }));
    }

    let csv = csv_table(SWEEP_HEADER, rows);
    print!("{csv}");
    if let Some(out) = &config.out {
        if is_json(out) {
            write_out(out, &format!("{:#}\n", serde_json::Value::Array(json_rows)))?;
        } else {
            write_out(out, &csv)?;
        }
    }
    Ok(())
}

/// Exact analysis of a named machine: C_μ, C_q, D_q, and the memory-state
/// overlap matrix.
pub fn cmd_exact(config: &RunConfig) -> Result<(), CliError> {
    let spec = config.require_process()?;
    let machine = spec.build()?;
    let overlaps = memory_overlaps(&machine)?;
    let spectrum = quantum_memory(&machine)?;
    let cmu = statistical_complexity(&machine);

    let block = kv_block(&[
        ("process", spec.name.clone()),
        ("params", spec.params_label()),
        ("states", machine.n_states().to_string()),
        ("c_mu", g12(cmu)),
        ("c_q", g12(spectrum.entropy_bits)),
        ("d_q", g12(spectrum.d_q)),
        ("rank", spectrum.rank.to_string()),
    ]);
    print!("{block}");
    println!("overlaps:");
    print!("{}", overlaps.to_csv());

    if let Some(out) = &config.out {
        if is_json(out) {
            let report = json!({
                "process": spec.name,
                "params": spec.params,
                "cmu": cmu,
                "spectrum": spectrum,
                "overlaps": overlaps.to_json(),
            });
            write_out(out, &format!("{:#}\n", report))?;
        } else {
            write_out(out, &overlaps.to_csv())?;
        }
    }
    Ok(())
}

/// Effective-Markov-order profile of a sequence.
pub fn cmd_emo(config: &RunConfig) -> Result<(), CliError> {
    let (seq, _) = source_sequence(config)?;
    let profile = effective_markov_order(&seq, config.delta, config.r_max)?;

    let csv = profile.to_csv();
    print!("{csv}");
    match profile.r_eff {
        Some(r) => println!("R_eff(delta={}) = {r}", config.delta),
        None => println!(
            "threshold never crossed: no r <= {} has statistic < {}",
            config.r_max, config.delta
        ),
    }
    if let Some(out) = &config.out {
        write_out(out, &csv)?;
    }
    Ok(())
}

/// Full (L, N, trial) estimation sweep over a named process.
pub fn cmd_sweep(config: &RunConfig) -> Result<(), CliError> {
    let spec = config.require_process()?;
    let machine = spec.build()?;
    let sweep_config = SweepConfig {
        l_values: config.require_l_values()?.to_vec(),
        n_values: config.require_n_values()?.to_vec(),
        trials: config.trials,
        base_seed: config.seed,
        delta: config.delta,
        r_max: config.r_max,
        params_label: spec.params_label(),
    };
    let rows = sweep(&machine, &sweep_config)?;
    let csv = sweep_csv(&rows);
    print!("{csv}");
    if let Some(out) = &config.out {
        write_out(out, &csv)?;
    }
    Ok(())
}

/// Perturbation experiments on a named process: `weyl` draws one seeded
/// zero-sum ΔP on the exact 2L-word distribution and checks eigenvalue
/// shifts across the ε grid; `scaling` measures estimation error vs N.
pub fn cmd_perturb(config: &RunConfig) -> Result<(), CliError> {
    let spec = config.require_process()?;
    let machine = spec.build()?;
    let options = config
        .perturb
        .as_ref()
        .ok_or_else(|| CliError::config("perturb needs a \"perturb\" options entry"))?;

    let csv = match options.mode.as_str() {
        "weyl" => {
            let l = options.l;
            if l == 0 {
                return Err(CliError::config("perturb.l must be at least 1"));
            }
            if options.epsilons.is_empty() {
                return Err(CliError::config("perturb.epsilons must be nonempty"));
            }
            let base = machine.word_distribution(2 * l)?;
            let delta = random_zero_sum_delta(&base, &mut substream_rng(config.seed, &[0]));
            weyl_check(&base, &delta, &options.epsilons, l)?.to_csv()
        }
        "scaling" => {
            let report = noise_scaling_experiment(
                &machine,
                config.require_l_values()?,
                config.require_n_values()?,
                config.trials,
                config.seed,
            )?;
            report.to_csv()
        }
        other => {
            return Err(CliError::config(format!(
                "unknown perturb mode {other:?} (expected \"weyl\" or \"scaling\")"
            )))
        }
    };
    print!("{csv}");
    if let Some(out) = &config.out {
        write_out(out, &csv)?;
    }
    Ok(())
}
