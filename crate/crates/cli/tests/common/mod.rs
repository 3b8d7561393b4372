#![allow(dead_code)]

use std::path::{Path, PathBuf};

use clap::Parser;
use privecon_cli::{Cli, run};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn instances_dir() -> PathBuf {
    repo_root().join("instances")
}

pub fn golden_instances() -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(instances_dir())
        .expect("instances directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            p.extension().is_some_and(|e| e == "json") && (name.starts_with("economy_") || name.starts_with("game_"))
        })
        .collect();
    out.sort();
    out
}

/// `(report name, command-line arguments after the binary name)` for every
/// golden report.
pub fn golden_runs() -> Vec<(String, Vec<String>)> {
    let dir = instances_dir();
    let mut runs = Vec::new();
    for path in golden_instances() {
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let inst = path.to_string_lossy().into_owned();
        let commands: Vec<Vec<String>> = if stem.starts_with("economy_") {
            vec![vec!["solve".into()], vec!["audit".into()]]
        } else {
            vec![vec!["solve-game".into()], vec!["audit".into()]]
        };
        for c in commands {
            let mut args = vec!["--instance".to_string(), inst.clone()];
            args.extend(c.iter().cloned());
            runs.push((format!("{stem}.{}", c[0]), args));
        }
    }
    let extra: &[(&str, &str, &[&str])] = &[
        (
            "economy_canonical.refine-study",
            "economy_canonical.json",
            &["refine-study", "--ks", "1,2,4,8"],
        ),
        (
            "economy_canonical.solve-refine4",
            "economy_canonical.json",
            &["--refine", "4", "solve"],
        ),
        (
            "economy_cells.verify",
            "economy_cells.json",
            &["verify", "--profile", "PROFILE:profile_cells_violating.json"],
        ),
        (
            "economy_threshold.verify",
            "economy_threshold.json",
            &["verify", "--profile", "PROFILE:profile_threshold_equilibrium.json"],
        ),
        (
            "game_dominant.verify",
            "game_dominant.json",
            &["verify", "--profile", "PROFILE:profile_dominant_nash.json"],
        ),
        (
            "game_shocks.purify",
            "game_shocks.json",
            &["purify", "--player", "p2", "--target", "H=0.625,T=0.375"],
        ),
        (
            "game_shocks.solve-refine2",
            "game_shocks.json",
            &["--refine", "2", "solve-game"],
        ),
    ];
    for (name, inst, args) in extra {
        let mut full = vec!["--instance".to_string(), dir.join(inst).to_string_lossy().into_owned()];
        full.extend(args.iter().map(|a| match a.strip_prefix("PROFILE:") {
            Some(f) => dir.join(f).to_string_lossy().into_owned(),
            None => a.to_string(),
        }));
        runs.push((name.to_string(), full));
    }
    runs
}

pub fn run_args(args: &[String]) -> Result<String, privecon_cli::CliError> {
    let cli = Cli::parse_from(std::iter::once("privecon".to_string()).chain(args.iter().cloned()));
    run(&cli)
}

pub fn expected_path(name: &str) -> PathBuf {
    instances_dir().join("expected").join(format!("{name}.json"))
}
