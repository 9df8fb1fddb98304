//! End-to-end behavior of the `mhlab` binary: exit codes, output schemas,
//! byte-level reproducibility and the bundled configuration documents.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mhlab"))
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn temp_out(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mhlab_cli_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn write_temp_config(tag: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("mhlab_cfg_{tag}_{}.toml", std::process::id()));
    fs::write(&path, contents).unwrap();
    path
}

fn run_ok(subcommand: &str, config: &Path, out: &Path, extra: &[&str]) -> String {
    let output = binary()
        .arg(subcommand)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "{subcommand} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

#[test]
fn classify_bundled_table_prints_ten_rows() {
    let out = temp_out("classify");
    let stdout = run_ok("classify", &configs_dir().join("classify_table.toml"), &out, &[]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 11, "header plus 10 rows:\n{stdout}");
    assert!(lines[0].starts_with("label\tfamily"));
    let records = fs::read_to_string(out.join("verdicts.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 10);
    for line in records.lines() {
        assert!(line.starts_with('{') && line.ends_with('}'));
    }
}

#[test]
fn classify_empty_cells_is_header_only() {
    let config = write_temp_config("empty", "[classify]\ncells = []\n");
    let out = temp_out("classify_empty");
    let stdout = run_ok("classify", &config, &out, &[]);
    assert_eq!(stdout.lines().count(), 1, "header-only output:\n{stdout}");
}

#[test]
fn classify_invalid_parameter_exits_two() {
    let config = write_temp_config(
        "invalid",
        r#"
        [classify]
        cells = [{ family = "imh", eta = 1.0, alpha = -2.0, gamma = 1.0, beta = 2.0 }]
        "#,
    );
    let out = temp_out("classify_invalid");
    let status = binary()
        .arg("classify")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_two() {
    let out = temp_out("missing");
    let status = binary()
        .arg("classify")
        .arg("--config")
        .arg("/nonexistent/nowhere.toml")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_two() {
    let config = write_temp_config(
        "unknown_key",
        r#"
        [classify]
        cells = []
        surprising_key = 1
        "#,
    );
    let out = temp_out("unknown_key");
    let status = binary()
        .arg("classify")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_one() {
    // Disconnected chain: the decay diagnostic rejects it at runtime.
    let config = write_temp_config(
        "numeric",
        r#"
        [chain]
        trans = [[1.0, 0.0], [0.0, 1.0]]

        [ergodicity]
        x0 = 0
        i_max = 10
        "#,
    );
    let out = temp_out("numeric");
    let output = binary()
        .arg("ergodicity")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("numeric failure"));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let config = configs_dir().join("simulate_rwm.toml");
    let out_a = temp_out("sim_a");
    let out_b = temp_out("sim_b");
    run_ok("simulate", &config, &out_a, &[]);
    run_ok("simulate", &config, &out_b, &[]);
    let trace_a = fs::read(out_a.join("trace.csv")).unwrap();
    let trace_b = fs::read(out_b.join("trace.csv")).unwrap();
    assert!(!trace_a.is_empty());
    assert_eq!(trace_a, trace_b, "identical config + seed must give identical bytes");
    let mu_a = fs::read(out_a.join("empirical.csv")).unwrap();
    let mu_b = fs::read(out_b.join("empirical.csv")).unwrap();
    assert_eq!(mu_a, mu_b);

    // A different seed changes the trace.
    let out_c = temp_out("sim_c");
    run_ok("simulate", &config, &out_c, &["--seed", "43"]);
    let trace_c = fs::read(out_c.join("trace.csv")).unwrap();
    assert_ne!(trace_a, trace_c);
}

#[test]
fn probe_critical_step_acceptance_column_near_half() {
    let out = temp_out("probe_mala");
    let stdout = run_ok("probe", &configs_dir().join("probe_mala_critical.toml"), &out, &[]);
    assert!(stdout.contains("acceptance_to_one=fails"), "{stdout}");
    assert!(stdout.contains("cross_validation=consistent"), "{stdout}");

    let csv = fs::read_to_string(
        out.join("probe_radial_power_coeff_0.125_power_2_.csv"),
    )
    .unwrap();
    let last = csv.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    let mass: f64 = fields[3].parse().unwrap();
    assert!((mass - 0.5).abs() <= 0.02, "final acceptance mass {mass}");
}

#[test]
fn probe_matched_independence_all_ones_column() {
    let out = temp_out("probe_imh");
    let stdout = run_ok("probe", &configs_dir().join("probe_imh_matched.toml"), &out, &[]);
    for line in stdout.lines() {
        assert!(line.contains("acceptance_to_one=holds"), "{line}");
    }
    let csv = fs::read_to_string(out.join("probe_radial_power_coeff_0.5_power_2_.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let mass: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((mass - 1.0).abs() <= 1e-8, "acceptance mass {mass}");
    }
}

#[test]
fn rate_at_stationary_is_zero() {
    let out = temp_out("rate");
    let stdout = run_ok("rate", &configs_dir().join("rate_rwm_grid.toml"), &out, &[]);
    assert!(stdout.starts_with("value="));
    let csv = fs::read_to_string(out.join("rate.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let value: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!(value <= 1e-6, "rate at stationary = {value}");
    assert!(out.join("coupling.csv").exists());
    assert!(out.join("chain.csv").exists());
}

#[test]
fn slope_column_is_monotone() {
    let out = temp_out("slope");
    run_ok("slope", &configs_dir().join("slope_two_state.toml"), &out, &[]);
    let csv = fs::read_to_string(out.join("slope.csv")).unwrap();
    let slopes: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(slopes.len(), 6);
    assert!(
        slopes.windows(2).all(|w| w[1] <= w[0] + 1e-6),
        "slopes not monotone: {slopes:?}"
    );
}

#[test]
fn ergodicity_reports_rate_and_minorization() {
    let out = temp_out("ergodicity");
    let stdout = run_ok("ergodicity", &configs_dir().join("ergodicity_two_state.toml"), &out, &[]);
    assert!(stdout.contains("fitted_rate="));
    // C = all states at j = 1: epsilon = min(0.9, 0.2) + min(0.1, 0.8).
    let eps_line = stdout.lines().find(|l| l.starts_with("minorization_epsilon=")).unwrap();
    let eps: f64 = eps_line.split('=').nth(1).unwrap().parse().unwrap();
    assert!((eps - 0.3).abs() < 1e-12, "epsilon {eps}");
    assert!(out.join("tv_decay.csv").exists());
}

#[test]
fn all_bundled_configs_parse_and_validate() {
    let dir = configs_dir();
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let config = mhlab::config::ExperimentConfig::load(&path)
            .unwrap_or_else(|e| panic!("{} failed to parse: {e}", path.display()));
        // Each bundled document must build the pieces it configures.
        if config.classify.is_some() {
            config.classify_cells().unwrap();
        }
        if config.target.is_some() {
            config.build_kernel().unwrap();
        }
        if config.chain.is_some() || config.grid.is_some() {
            config.build_chain().unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 9, "expected the bundled configs, found {seen}");
}
