use std::path::Path;
use std::process::{Command, Output};

fn led_ti(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_led-ti"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const PT: &str = "0123456789ABCDEF";
const KEY: &str = "0123456789ABCDEF0123456789ABCDEF";

#[test]
fn encrypt_all_impls_agree() {
    for imp in ["reference", "serial", "ti"] {
        let o = led_ti(&["encrypt", PT, KEY, "--impl", imp]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().next(), Some("D6B824587F014FC2"));
    }
    let o = led_ti(&[
        "encrypt",
        "0000000000000000",
        "00000000000000000000000000000000",
    ]);
    assert_eq!(stdout(&o).trim(), "3DECB2A0850CDBA1");
}

#[test]
fn encrypt_verbose_prints_cycles() {
    let o = led_ti(&[
        "encrypt",
        PT,
        KEY,
        "--impl",
        "ti",
        "--verbose",
        "--seed",
        "0x10",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("cycles: 4320"));
}

#[test]
fn encrypt_writes_transition_log() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.csv");
    let o = led_ti(&[
        "encrypt",
        PT,
        KEY,
        "--impl",
        "serial",
        "--log",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("cycle,state,reg_id,old_hex,new_hex\n"));
    assert!(csv.contains(",SBOX_CAL,sbox_out,"));
}

#[test]
fn malformed_hex_is_a_usage_error() {
    let o = led_ti(&["encrypt", PT, "0123"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("key"));
    let o = led_ti(&["encrypt", "XYZ3456789ABCDEF", KEY]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("plaintext"));
    let o = led_ti(&["encrypt", PT, KEY, "--impl", "bogus"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_ti_exit_codes() {
    let o = led_ti(&["verify-ti"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("uniformity"));

    let dir = tempfile::tempdir().unwrap();
    let good = led_ti::ti::SHIPPED_TABLES;
    let path = dir.path().join("t.tables");
    std::fs::write(&path, good).unwrap();
    assert_eq!(
        code(&led_ti(&["verify-ti", "--tables", path.to_str().unwrap()])),
        0
    );

    // flip one entry of the first table row
    let mut lines: Vec<String> = good.lines().map(String::from).collect();
    let row = lines.iter().position(|l| l.trim() == "G1").unwrap() + 1;
    let first = lines[row].chars().next().unwrap().to_digit(16).unwrap();
    lines[row].replace_range(0..1, &format!("{:X}", first ^ 1));
    std::fs::write(&path, lines.join("\n")).unwrap();
    let o = led_ti(&["verify-ti", "--tables", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("counterexample"));

    let o = led_ti(&[
        "verify-ti",
        "--tables",
        dir.path().join("missing").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

fn gen(
    dir: &Path,
    name: &str,
    design: &str,
    n: &str,
    extra: &[&str],
) -> (Output, std::path::PathBuf) {
    let out = dir.join(name);
    let mut args = vec![
        "gen-traces",
        "--design",
        design,
        "--n",
        n,
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    (led_ti(&args), out)
}

#[test]
fn gen_traces_header_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (o, a) = gen(dir.path(), "a.ledt", "led", "100", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("100 traces"));
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(&bytes[0..4], b"LEDT");
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 100);

    let (_, b) = gen(dir.path(), "b.ledt", "led", "100", &[]);
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let (_, c) = gen(dir.path(), "c.ledt", "led", "100", &["--seed", "7"]);
    assert_ne!(bytes, std::fs::read(&c).unwrap());

    let (_, ti) = gen(dir.path(), "ti.ledt", "led-ti", "4", &[]);
    let ti = std::fs::read(ti).unwrap();
    let samples = |b: &[u8]| u32::from_le_bytes(b[12..16].try_into().unwrap());
    assert!(samples(&ti) > samples(&bytes));
}

#[test]
fn gen_traces_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gen(dir.path(), "x", "led", "1", &[]).0), 2);
    assert_eq!(
        code(&gen(dir.path(), "x", "led", "10", &["--sigma", "-1"]).0),
        2
    );
    let o = led_ti(&[
        "gen-traces",
        "--design",
        "led",
        "--n",
        "10",
        "--out",
        "/nonexistent/dir/x.ledt",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn tvla_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let (_, leaky) = gen(dir.path(), "led.ledt", "led", "2000", &[]);
    let report = dir.path().join("report.json");
    let o = led_ti(&[
        "tvla",
        "--in",
        leaky.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("LEAKS"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["verdict"], "Leaks");
    assert!(json["max_abs_t"].as_f64().unwrap() >= 4.5);
    assert!(!json["t_values"].as_array().unwrap().is_empty());
    let csv = std::fs::read_to_string(report.with_extension("csv")).unwrap();
    assert!(csv.starts_with("sample_index,t\n"));

    let (_, masked) = gen(dir.path(), "ti.ledt", "led-ti", "1000", &[]);
    let o = led_ti(&["tvla", "--in", masked.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn tvla_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = gen(dir.path(), "led.ledt", "led", "20", &[]);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 5);
    std::fs::write(&path, &bytes).unwrap();
    let o = led_ti(&["tvla", "--in", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("length mismatch"));

    // two traces of one class only
    let (_, two) = gen(dir.path(), "two.ledt", "led", "2", &["--seed", "3"]);
    let mut bytes = std::fs::read(&two).unwrap();
    let record = (bytes.len() - 33) / 2;
    bytes[33] = 0;
    bytes[33 + record] = 0;
    std::fs::write(&two, &bytes).unwrap();
    assert_eq!(code(&led_ti(&["tvla", "--in", two.to_str().unwrap()])), 2);
}

#[test]
fn selftest_lists_criteria() {
    let o = led_ti(&["selftest", "--only", "1,2,4,6,9"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    for id in [1, 2, 4, 6, 9] {
        assert!(out.contains(&format!("criterion {id} ")), "{out}");
    }
    assert!(out.contains("all criteria passed"));
    assert_eq!(code(&led_ti(&["selftest", "--only", "12"])), 2);
}

#[test]
fn selftest_fails_on_corrupted_tables() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.tables");
    let mut lines: Vec<String> = led_ti::ti::SHIPPED_TABLES
        .lines()
        .map(String::from)
        .collect();
    let row = lines.iter().position(|l| l.trim() == "F2").unwrap() + 3;
    let last = lines[row].len() - 1;
    let d = lines[row][last..]
        .chars()
        .next()
        .unwrap()
        .to_digit(16)
        .unwrap();
    lines[row].replace_range(last.., &format!("{:X}", d ^ 0xA));
    std::fs::write(&path, lines.join("\n")).unwrap();
    let o = led_ti(&[
        "selftest",
        "--tables",
        path.to_str().unwrap(),
        "--only",
        "1,2,3",
    ]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(
        out.lines()
            .any(|l| l.starts_with("criterion 2 ") && l.contains("FAIL")),
        "{out}"
    );
    assert!(
        out.lines()
            .any(|l| l.starts_with("criterion 1 ") && l.contains("PASS")),
        "{out}"
    );
}
