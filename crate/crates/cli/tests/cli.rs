use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn netscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netscale"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A ring of `n` nodes with chords, labeled by strings.
fn write_graph(p: &Path, n: usize) {
    let mut s = String::from("# test graph\n");
    for i in 0..n {
        s += &format!("v{} v{}\n", i, (i + 1) % n);
        s += &format!("v{} v{}\n", i, (i * 7 + 3) % n);
    }
    s += "v0 v0\nv1 v2\n";
    fs::write(p, s).unwrap();
}

#[test]
fn simplify_and_measure() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    write_graph(&g, 40);
    let out = dir.path().join("s.txt");
    let o = netscale(&["simplify", "-i", path(&g), "-o", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(stats["self_loops_removed"], 1);
    let written = fs::read_to_string(&out).unwrap();
    assert!(written.starts_with("# n=40"));

    let o = netscale(&["measure", "-i", path(&g)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n"], 40);
    assert_eq!(v["geodesic_method"], "exact");

    let o = netscale(&["measure", "-i", path(&g), "--exact-path-cutoff", "10", "--format", "csv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("geodesic_method"));
    assert!(text.contains("estimated"));
}

#[test]
fn nullmodel_infer_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    write_graph(&g, 30);
    let draws = dir.path().join("draws");
    let o = netscale(&["nullmodel", "-i", path(&g), "--model", "config", "--samples", "3", "-o", path(&draws)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(&draws).unwrap().count(), 3);

    let o = netscale(&["infer-sbm", "-i", path(&g), "--runs", "4", "--posterior-samples", "5"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["runs"].as_array().unwrap().len(), 4);
    assert_eq!(v["selected"].as_array().unwrap().len(), 5);
    assert_eq!(v["node_labels"].as_array().unwrap().len(), 30);

    let pts = dir.path().join("pts.csv");
    fs::write(&pts, "n,y\n10,3\n100,5\n1000,7\n50,\n").unwrap();
    let o = netscale(&["fit", "-i", path(&pts), "--form", "logarithmic", "--resamples", "100"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["a"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["b"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(v["points_excluded"], 1);

    let bad = netscale(&["nullmodel", "-i", path(&g), "--model", "nope", "-o", path(&draws)]);
    assert!(!bad.status.success());
}

#[test]
fn run_then_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::from("id,path,domain,subdomain\n");
    for (i, n) in [20, 40, 80, 160].iter().enumerate() {
        let g = dir.path().join(format!("g{i}.txt"));
        write_graph(&g, *n);
        manifest += &format!("g{i},g{i}.txt,social,\n");
    }
    manifest += "broken,missing.txt,biological,\n";
    let m = dir.path().join("manifest.csv");
    fs::write(&m, manifest).unwrap();
    let out = dir.path().join("out");
    let o = netscale(&[
        "run",
        "--manifest",
        path(&m),
        "-o",
        path(&out),
        "--models",
        "gnm,config",
        "--samples",
        "3",
        "--resamples",
        "50",
    ]);
    // one failed network gives exit code 1 but the rest still runs
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let failures = fs::read_to_string(out.join("failures.csv")).unwrap();
    assert!(failures.contains("broken"));
    let fits = fs::read_to_string(out.join("fits.csv")).unwrap();
    assert!(fits.lines().any(|l| l.starts_with("social,empirical,")));

    let plot = dir.path().join("plot");
    let o = netscale(&["plot-data", "--bundle", path(&out), "-o", path(&plot)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = fs::read_dir(&plot)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("scatter_social_")).count(), 4);
    assert_eq!(names.iter().filter(|n| n.starts_with("fitline_social_")).count(), 4);
    let line = fs::read_to_string(plot.join("fitline_social_mean_degree.csv")).unwrap();
    // only the empirical series is fitted for ⟨k⟩
    assert_eq!(line.lines().count(), 1 + 100);
}

#[test]
fn fetch_corpus_rejects_bad_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("c.tar");
    fs::write(&archive, vec![0u8; 1024]).unwrap();
    let sums = dir.path().join("SHA256SUMS");
    fs::write(&sums, format!("{}  c.tar\n", "0".repeat(64))).unwrap();
    let dest = dir.path().join("corpus");
    let o = netscale(&["fetch-corpus", "--source", path(&archive), "--checksums", path(&sums), "-o", path(&dest)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum mismatch"));
    assert!(!dest.exists());
}
