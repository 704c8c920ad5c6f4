//! End-to-end runs of the compiled `planlab` binary: every subcommand,
//! file outputs, and exit codes.

use std::path::Path;
use std::process::Command;

fn planlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_planlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn full_pipeline_on_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    // gen-grid writes a loadable instance.
    let inst = path("grid.plab");
    let out = planlab(&[
        "gen-grid", "--rows", "6", "--cols", "6", "--out", &inst,
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("36 units 60 edges"));

    // enumerate on the generated instance file.
    let out = planlab(&[
        "enumerate", "--instance", &inst, "--districts", "4", "--deviation", "0",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("count 442791"), "{}", stdout(&out));

    // sample an ensemble.
    let ensemble = path("flood.csv");
    let out = planlab(&[
        "sample", "--instance", &inst, "--districts", "4", "--deviation", "0",
        "--generator", "flood", "--count", "50", "--seed", "5", "--out", &ensemble,
    ]);
    assert!(out.status.success(), "{}", stdout(&out));

    // analyze it: histogram + edge frequency + oracle comparison.
    let hist = path("hist.csv");
    let freq = path("freq.csv");
    let out = planlab(&[
        "analyze", "--instance", &inst, "--ensemble", &ensemble,
        "--hist-out", &hist, "--freq-out", &freq,
        "--oracle", "--districts", "4", "--deviation", "0",
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("p_value"));
    let hist_text = std::fs::read_to_string(&hist).unwrap();
    assert!(hist_text.contains("score,count"));
    let freq_text = std::fs::read_to_string(&freq).unwrap();
    assert!(freq_text.contains("unit_a,unit_b,frequency"));

    // chain from an auto-grown start, then validate a written plan.
    let chain_out = path("chain.csv");
    let out = planlab(&[
        "chain", "--instance", &inst, "--districts", "4", "--deviation", "0",
        "--kind", "recom", "--steps", "200", "--record-every", "20",
        "--seed", "5", "--out", &chain_out,
    ]);
    assert!(out.status.success(), "{}", stdout(&out));

    // geometric methods emit plans.
    let geo_out = path("splitline.csv");
    let out = planlab(&[
        "geo", "--instance", &inst, "--districts", "4", "--method", "splitline",
        "--out", &geo_out,
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(Path::new(&geo_out).exists());

    let power_out = path("power.csv");
    let log_out = path("power_log.csv");
    let out = planlab(&[
        "geo", "--instance", &inst, "--districts", "4", "--method", "power",
        "--seed", "3", "--out", &power_out, "--log", &log_out,
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(Path::new(&log_out).exists());

    // optimize (exact) proves the minimum and writes the plan.
    let best_out = path("best.csv");
    let out = planlab(&[
        "optimize", "--instance", &inst, "--districts", "4", "--deviation", "0",
        "--method", "exact", "--budget-secs", "120", "--out", &best_out,
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(
        stdout(&out).contains("status proven_optimal cut_edges 12"),
        "{}",
        stdout(&out)
    );

    // validate the optimizer's plan file.
    let out = planlab(&[
        "validate", "--instance", &inst, "--plan", &best_out,
        "--districts", "4", "--deviation", "0",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("cut_edges 12"), "{}", stdout(&out));
    assert!(stdout(&out).contains("valid true"));

    // pareto sweep CSV.
    let pareto_out = path("pareto.csv");
    let out = planlab(&[
        "pareto", "--instance", &inst, "--districts", "4",
        "--deviations", "0,0.25", "--budget-each-secs", "120", "--out", &pareto_out,
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = std::fs::read_to_string(&pareto_out).unwrap();
    assert!(text.contains("deviation,cut_edges,status,lower_bound"));
    assert!(text.contains("0,12,proven_optimal,12"), "{text}");
}

#[test]
fn bundled_iowa_validate_matches_report() {
    let out = planlab(&[
        "validate", "--instance", "iowa", "--plan", "enacted",
        "--districts", "4", "--deviation", "0.01",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("district_populations 761548 761624 761612 761571"), "{text}");
    assert!(text.contains("valid true"));
}

#[test]
fn metaheuristic_subcommands_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_plan = dir.path().join("anneal.csv");
    let out = planlab(&[
        "optimize", "--grid", "6x6", "--districts", "4", "--deviation", "0",
        "--method", "anneal", "--neighborhood", "recom", "--seed", "2",
        "--out", out_plan.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("objective"));

    let out_plan = dir.path().join("tabu.csv");
    let out = planlab(&[
        "optimize", "--grid", "6x6", "--districts", "4", "--deviation", "0",
        "--method", "tabu", "--neighborhood", "recom", "--steps", "60",
        "--seed", "2", "--out", out_plan.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stdout(&out));
}

#[test]
fn exit_codes_follow_the_contract() {
    // Usage error: 1.
    let out = planlab(&["enumerate", "--districts", "3"]);
    assert_eq!(out.status.code(), Some(1));
    // Data error: 2.
    let out = planlab(&[
        "validate", "--instance", "/missing.plab", "--plan", "x",
        "--districts", "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Budget guard: 3 (with the partial result printed).
    let out = planlab(&[
        "enumerate", "--grid", "4x4", "--districts", "4", "--deviation", "0",
        "--budget", "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("complete false"));
}
