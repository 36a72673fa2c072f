use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn neosift(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neosift"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// A few hundred posts: one coinage used widely, common words, and noise.
fn small_corpus(dir: &Path) {
    let mut out = String::new();
    for i in 0..400 {
        let sub = ["aww", "pics", "funny", "gaming", "news"][i % 5];
        let body = match i % 4 {
            0 => "take my updoot for this lovely picture",
            1 => "the weather is nice today and the river is calm",
            2 => "aaaaaaaargh my keyboard broke again",
            _ => "have an updoot friend",
        };
        out.push_str(&format!(
            "{{\"id\":\"t{i}\",\"body\":\"{body}\",\"subreddit\":\"{sub}\",\"created_utc\":{}}}\n",
            1_600_000_000 + i
        ));
    }
    fs::write(dir.join("posts.ndjson"), out).unwrap();
    fs::write(
        dir.join("words.txt"),
        "take\nmy\nfor\nthis\nlovely\npicture\nthe\nweather\nis\nnice\ntoday\nand\nriver\ncalm\nkeyboard\nbroke\nagain\nhave\nan\nfriend\n",
    )
    .unwrap();
    fs::write(dir.join("labels.tsv"), "updoot\tNEOLOGISM\n").unwrap();
    fs::write(
        dir.join("neosift.conf"),
        "corpus = posts.ndjson\nvocab = words.txt\nfreq_threshold = 50\n\
voter_endpoints = a, b, c\nverifier_endpoint = v\n\
endpoint.a.provider = mock\nendpoint.a.mock_labels = labels.tsv\nendpoint.a.mock_default = none\n\
endpoint.b.provider = mock\nendpoint.b.mock_labels = labels.tsv\nendpoint.b.mock_default = none\n\
endpoint.c.provider = mock\nendpoint.c.mock_default = none\n\
endpoint.v.provider = mock\nendpoint.v.role = verifier\nendpoint.v.mock_labels = labels.tsv\nendpoint.v.mock_default = none\n",
    )
    .unwrap();
}

#[test]
fn report_from_counts_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("counts.tsv"),
        "tokenize\t124,593,754\nvocab\t113,909,871\npattern\t23,955,763\nconcat\t10,793,055\ntypo\t7,065,796\n\
freq\t208,932\t118,544\nlang\t174,973\nvote\t10,499\nverify\t1,021\n",
    )
    .unwrap();
    let out = stdout(&neosift(dir.path(), &["report", "--counts", "counts.tsv"]));
    assert!(out.contains("Compression ratio: 122,031:1"), "{out}");
    assert!(out.contains("6,975,408"), "{out}");
    let json = stdout(&neosift(
        dir.path(),
        &["report", "--counts", "counts.tsv", "--json"],
    ));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["compression_ratio"], "122,031:1");
}

#[test]
fn run_then_report_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    let out = stdout(&neosift(d, &["run", "--config", "neosift.conf", "--tsv"]));
    assert!(out.contains("Verification"), "{out}");
    let cands = fs::read_to_string(d.join("work/candidates.ndjson")).unwrap();
    assert_eq!(cands.lines().count(), 1, "{cands}");
    assert!(cands.contains("\"surface\":\"updoot\""));
    assert!(d.join("work/candidates.tsv").exists());

    let again = stdout(&neosift(d, &["report", "--work-dir", "work"]));
    assert_eq!(again, out);

    fs::write(d.join("gold.tsv"), "surface\tlabel\nupdoot\tNEOLOGISM\n").unwrap();
    let gold = stdout(&neosift(
        d,
        &["eval-gold", "--gold", "gold.tsv", "--work-dir", "work"],
    ));
    assert!(gold.contains("100.0"), "{gold}");

    fs::write(d.join("ref.tsv"), "surface\tyear\tsource\tstatus\nupdoot\t2016\tKYM\t\naaaaaaaargh\t2016\tnone\t\nyeet\t2018\tMW\tpre-15\n").unwrap();
    let recall = stdout(&neosift(
        d,
        &["eval-recall", "--reference", "ref.tsv", "--work-dir", "work"],
    ));
    assert!(recall.contains("Recall: 1/2 = 50.0%"), "{recall}");
    assert!(recall.contains("Pattern cleaning (1): aaaaaaaargh"), "{recall}");
}

#[test]
fn stage_subcommands_stop_where_named() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    stdout(&neosift(d, &["contexts", "-c", "neosift.conf"]));
    assert!(d.join("work/contexts.ndjson").exists());
    assert!(!d.join("work/votes.ndjson").exists());
    stdout(&neosift(d, &["classify", "-c", "neosift.conf"]));
    assert!(d.join("work/votes.ndjson").exists());
    assert!(!d.join("work/classifications.ndjson").exists());
    let o = neosift(d, &["verify", "-c", "neosift.conf"]);
    stdout(&o);
    let log = String::from_utf8_lossy(&o.stderr);
    assert!(log.contains("resumed from checkpoints: tokenize"), "{log}");
    assert!(d.join("work/classifications.ndjson").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    let out = stdout(&neosift(
        d,
        &[
            "run",
            "-c",
            "neosift.conf",
            "--freq-threshold",
            "7",
            "--set",
            "lang_confidence=0.9",
            "--show-config",
        ],
    ));
    assert!(out.contains("freq_threshold = 7\n"), "{out}");
    assert!(out.contains("lang_confidence = 0.9\n"), "{out}");
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    let o = neosift(d, &["run", "-c", "neosift.conf", "--set", "no_such_key=1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
    let o = neosift(d, &["run", "--max-edit", "9", "--corpus", "posts.ndjson"]);
    assert!(!o.status.success());
    let o = neosift(d, &["report", "--work-dir", "missing"]);
    assert!(!o.status.success());
}
