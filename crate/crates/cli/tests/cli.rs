use std::process::{Command, Output};

use tempfile::TempDir;

fn rfq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfq"))
        .args(args)
        .env_remove("RFQ_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn build(dir: &TempDir, name: &str, content: &[u8], extra: &[&str]) -> String {
    let input = dir.path().join(name);
    std::fs::write(&input, content).unwrap();
    let out = dir.path().join(format!("{name}.rfq"));
    let (i, o) = (input.to_str().unwrap(), out.to_str().unwrap());
    let mut args = vec!["build", i, "-o", o];
    args.extend_from_slice(extra);
    let r = rfq(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    o.to_string()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn abracadabra_queries() {
    let dir = TempDir::new().unwrap();
    for extra in [&[][..], &["--dispatch", "flagged", "--verify", "check"], &["--compressed", "--arity-bits", "2", "--trade", "4"]] {
        let idx = build(&dir, "abra", b"abracadabra", extra);
        let r = json(&rfq(&["query", &idx, "majority", "-i", "1", "-j", "11", "-t", "0.3", "--json"]));
        let res = r["results"].as_array().unwrap();
        assert_eq!(res.len(), 1);
        assert_eq!(res[0]["symbol"], 97);
        assert_eq!(res[0]["count"], 5);

        let r = json(&rfq(&["query", &idx, "mode", "-i", "1", "-j", "11", "--json"]));
        assert_eq!(r["results"][0]["symbol"], 97);
        assert_eq!(r["results"][0]["count"], 5);

        // at tau = 0.2 every symbol but 'a' has at most 2 occurrences
        let r = json(&rfq(&["query", &idx, "minority", "-i", "1", "-j", "11", "-t", "0.2", "--json"]));
        let sym = r["results"][0]["symbol"].as_u64().unwrap();
        assert!(b"bcdr".contains(&(sym as u8)), "{sym}");
        let r = json(&rfq(&["query", &idx, "minority", "-i", "1", "-j", "11", "-t", "0.1", "--json"]));
        let sym = r["results"][0]["symbol"].as_u64().unwrap();
        assert!(b"cd".contains(&(sym as u8)), "{sym}");
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let idx = build(&dir, "abra", b"abracadabra", &[]);
    assert_eq!(rfq(&["query", &idx, "majority", "-i", "5", "-j", "12", "-t", "0.5"]).status.code(), Some(2));
    assert_eq!(rfq(&["query", &idx, "majority", "-i", "1", "-j", "3", "-t", "1.5"]).status.code(), Some(2));
    assert_eq!(rfq(&["query", &idx, "majority", "-i", "1", "-j", "3", "-t", "0"]).status.code(), Some(2));
    let missing = dir.path().join("missing.rfq");
    assert_eq!(rfq(&["info", missing.to_str().unwrap()]).status.code(), Some(3));

    let junk = dir.path().join("junk.rfq");
    std::fs::write(&junk, b"not an index").unwrap();
    assert_eq!(rfq(&["info", junk.to_str().unwrap()]).status.code(), Some(3));

    let empty = dir.path().join("empty");
    std::fs::write(&empty, b"").unwrap();
    let out = dir.path().join("empty.rfq");
    let code = rfq(&["build", empty.to_str().unwrap(), "-o", out.to_str().unwrap()]).status.code();
    assert_ne!(code, Some(0));
}

#[test]
fn other_input_formats() {
    let dir = TempDir::new().unwrap();
    let words: Vec<u8> = [7u32, 1_000_000, 7, 3, 7].iter().flat_map(|x| x.to_le_bytes()).collect();
    let idx = build(&dir, "ints", &words, &["--format", "u32le"]);
    let r = json(&rfq(&["query", &idx, "majority", "-i", "1", "-j", "5", "-t", "0.5", "--json"]));
    assert_eq!(r["results"][0]["symbol"], 7);
    assert_eq!(r["results"][0]["count"], 3);

    let idx = build(&dir, "toks", b"the cat saw the dog near the cat\n", &["--format", "tokens"]);
    let r = json(&rfq(&["query", &idx, "mode", "-i", "1", "-j", "8", "--json"]));
    assert_eq!(r["results"][0]["label"], "the");
    assert_eq!(r["results"][0]["count"], 3);

    // a single symbol is a majority for every tau below 1
    let idx = build(&dir, "one", b"z", &[]);
    let r = json(&rfq(&["query", &idx, "majority", "-i", "1", "-j", "1", "-t", "0.5", "--json"]));
    assert_eq!(r["results"][0]["count"], 1);
    let r = json(&rfq(&["query", &idx, "majority", "-i", "1", "-j", "1", "-t", "1", "--json"]));
    assert!(r["results"].as_array().unwrap().is_empty());
    let r = json(&rfq(&["query", &idx, "minority", "-i", "1", "-j", "1", "-t", "0.5", "--json"]));
    assert!(r["results"].as_array().unwrap().is_empty());
}

#[test]
fn bench_emits_one_row_per_cell() {
    let dir = TempDir::new().unwrap();
    let text: Vec<u8> = (0..5000u32).map(|i| b'a' + (i * i % 7) as u8).collect();
    let idx = build(&dir, "text", &text, &[]);
    let o = rfq(&["bench", &idx, "--taus", "0.5,0.1", "--lens", "10,100,1000", "--reps", "3", "--kinds", "majority,mode"]);
    assert!(o.status.success());
    let mut rows = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(rows.headers().unwrap().iter().next(), Some("tau"));
    assert_eq!(rows.records().count(), 2 * 2 * 3);
}

#[test]
fn info_reports_space() {
    let dir = TempDir::new().unwrap();
    let idx = build(&dir, "abra", b"abracadabra", &[]);
    let r = json(&rfq(&["info", &idx, "--json"]));
    assert_eq!(r["n"], 11);
    assert_eq!(r["sigma"], 5);
    assert!(r["space"]["total_bits"].as_u64().unwrap() > 0);
}

#[test]
fn verify_passes_and_detects_injected_faults() {
    let o = rfq(&["verify", "--cases", "40", "--queries", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));

    let o = rfq(&["verify", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("minimized reproducer"), "{text}");
    assert!(text.contains("FAIL"));
}
