#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use gml_core::rng::SplitMix64;

/// Planted-partition citation corpus: `n` papers in `classes` topics, each
/// topic owning a block of binary features, denser links within a topic.
pub fn write_citation(dir: &Path, stem: &str, n: usize, classes: usize, seed: u64) {
    let mut rng = SplitMix64::new(seed);
    let per = 4;
    let d = classes * per;
    let mut content = String::new();
    for i in 0..n {
        let y = i % classes;
        write!(content, "p{}", i).unwrap();
        for f in 0..d {
            let p = if f / per == y { 0.6 } else { 0.1 };
            write!(content, "\t{}", u8::from(rng.uniform() < p)).unwrap();
        }
        writeln!(content, "\ttopic{}", y).unwrap();
    }
    let mut cites = String::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if i % classes == j % classes { 0.15 } else { 0.01 };
            if rng.uniform() < p {
                writeln!(cites, "p{}\tp{}", i, j).unwrap();
            }
        }
    }
    std::fs::write(dir.join(format!("{}.content", stem)), content).unwrap();
    std::fs::write(dir.join(format!("{}.cites", stem)), cites).unwrap();
}

/// Config text for the fixture corpus with a short training budget.
pub fn tiny_config(data_dir: &Path, variant: &str, members: &[&str], extra: &str) -> String {
    let members: Vec<String> = members.iter().map(|m| format!("{:?}", m)).collect();
    format!(
        r#"name = "tiny"
seeds = [0, 1]

[data]
format = "citation"
path = {:?}
stem = "tiny"
split = [0.5, 0.25, 0.25]

[cohort]
members = [{}]
variant = {:?}
max_epochs = 40
patience = 40
weight_hidden = 8
{}
"#,
        data_dir.display().to_string(),
        members.join(", "),
        variant,
        extra
    )
}

pub fn fixture(dir: &Path) {
    write_citation(dir, "tiny", 60, 3, 11);
}
