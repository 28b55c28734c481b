use std::path::Path;
use std::process::{Command, Output};

use fmsched::domain::{CpWorkflow, Task, WorkflowId};
use fmsched::workload::{case_study_config, product_a_workflow, save_plant_config, save_workload};

fn fmsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmsched")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn workload_file_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let workload = dir.path().join("w.json");
    let too_tight = CpWorkflow { id: WorkflowId(2), arrival: 0, deadline: 20, tasks: vec![Task::new(0, "A", 10, &[])] };
    save_workload(&workload, &[product_a_workflow(), too_tight]).unwrap();
    let summary = dir.path().join("out/summary.csv");

    let out = fmsched(&["--workload", path(&workload), "--export-summary", path(&summary)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("mode,priority,selection,workflows,seed,submitted,accepted,assignment_rate,avg_waiting,avg_execution,wall_ms")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..3], ["offline", "lu", "is"]);
    assert_eq!(&row[5..], ["2", "1", "0.500000", "0.000000", "625.000000", ""]);

    let summary = std::fs::read_to_string(summary).unwrap();
    assert_eq!(summary, "id,accepted,start,completion,deadline\n1,true,0,625,1000\n2,false,,,20\n");
}

#[test]
fn custom_plant_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = case_study_config();
    for s in &mut config.stations {
        s.machines.truncate(1);
    }
    let plant = dir.path().join("plant.json");
    save_plant_config(&plant, &config).unwrap();
    let reservations = dir.path().join("r.csv");

    let out = fmsched(&[
        "--plant",
        path(&plant),
        "--mode",
        "online",
        "--selection",
        "ds",
        "--workflows",
        "40",
        "--export-reservations",
        path(&reservations),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(reservations).unwrap();
    let machines: Vec<&str> = text.lines().skip(1).filter(|l| l.contains(",machining,")).collect();
    assert!(!machines.is_empty());
    assert!(machines.iter().all(|l| l.contains("-M1")));
}

#[test]
fn usage_errors() {
    let out = fmsched(&["--selection", "greedy"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = fmsched(&["--repeats", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = fmsched(&["--plant", "/nonexistent/plant.json"]);
    assert_eq!(out.status.code(), Some(3));

    let out = fmsched(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--export-reservations"));
}
