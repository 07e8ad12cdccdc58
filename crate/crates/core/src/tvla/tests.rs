use super::*;
use crate::power::LeakageModel;
use crate::rng::SplitMix64;

fn small_set(n: usize, n_samples: usize, seed: u64) -> TraceSet {
    let mut rng = SplitMix64::new(seed);
    TraceSet {
        model: LeakageModel::HammingWeight,
        noise_sigma: 0.5,
        base_seed: seed,
        traces: (0..n)
            .map(|_| Trace {
                label: if rng.next_bool() {
                    ClassLabel::Random
                } else {
                    ClassLabel::Fixed
                },
                samples: (0..n_samples).map(|_| rng.next_gaussian() as f32).collect(),
            })
            .collect(),
    }
}

fn bytes(ts: &TraceSet) -> Vec<u8> {
    let mut out = Vec::new();
    ts.write_to(&mut out).unwrap();
    out
}

#[test]
fn round_trip_is_byte_identical() {
    let ts = small_set(1000, 17, 1);
    let b = bytes(&ts);
    assert_eq!(b.len() as u64, ts.header().file_len());
    let back = TraceSet::read_from(&b[..]).unwrap();
    assert_eq!(back, ts);
    assert_eq!(bytes(&back), b);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set.ledt");
    write_trace_set(&ts, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b);
    assert_eq!(read_trace_set(&path).unwrap(), ts);
}

#[test]
fn header_layout() {
    let ts = small_set(3, 2, 9);
    let b = bytes(&ts);
    assert_eq!(&b[0..4], b"LEDT");
    assert_eq!(&b[4..8], &[1, 0, 0, 0]);
    assert_eq!(&b[8..12], &[3, 0, 0, 0]);
    assert_eq!(&b[12..16], &[2, 0, 0, 0]);
    assert_eq!(b[16], 1);
    assert_eq!(&b[17..25], &0.5f64.to_le_bytes());
    assert_eq!(&b[25..33], &9u64.to_le_bytes());
    assert_eq!(b[33], ts.traces[0].label.to_byte());
    assert_eq!(&b[34..38], &ts.traces[0].samples[0].to_le_bytes());
}

#[test]
fn malformed_headers_are_rejected() {
    let good = bytes(&small_set(4, 3, 2));
    let patched = |at: usize, with: &[u8]| {
        let mut b = good.clone();
        b[at..at + with.len()].copy_from_slice(with);
        TraceSet::read_from(&b[..]).unwrap_err()
    };
    assert!(matches!(patched(0, b"LEDX"), TraceFormatError::BadMagic(_)));
    assert!(matches!(
        patched(4, &2u32.to_le_bytes()),
        TraceFormatError::UnsupportedVersion(2)
    ));
    assert!(matches!(
        patched(8, &0u32.to_le_bytes()),
        TraceFormatError::Empty("n_traces")
    ));
    assert!(matches!(
        patched(12, &0u32.to_le_bytes()),
        TraceFormatError::Empty("n_samples")
    ));
    assert!(matches!(
        patched(16, &[7]),
        TraceFormatError::BadModelTag(7)
    ));
    assert!(matches!(
        patched(17, &(-1.0f64).to_le_bytes()),
        TraceFormatError::BadSigma(_)
    ));
    assert!(matches!(
        patched(33, &[5]),
        TraceFormatError::BadLabel { trace: 0, found: 5 }
    ));
    // more traces declared than present
    assert!(matches!(
        patched(8, &5u32.to_le_bytes()),
        TraceFormatError::LengthMismatch {
            field: "payload",
            ..
        }
    ));
    // fewer declared than present
    assert!(matches!(
        patched(8, &3u32.to_le_bytes()),
        TraceFormatError::LengthMismatch {
            field: "payload",
            ..
        }
    ));
    let short = TraceSet::read_from(&good[..20]).unwrap_err();
    assert!(matches!(
        short,
        TraceFormatError::LengthMismatch {
            field: "header",
            found: 20,
            ..
        }
    ));
    let truncated = TraceSet::read_from(&good[..good.len() - 1]).unwrap_err();
    assert!(matches!(
        truncated,
        TraceFormatError::LengthMismatch {
            field: "payload",
            ..
        }
    ));
    assert!(truncated.to_string().contains("length mismatch"));
}

#[test]
fn truncated_file_is_rejected_on_open() {
    let good = bytes(&small_set(4, 3, 2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.ledt");
    std::fs::write(&path, &good[..good.len() - 4]).unwrap();
    let err = read_trace_set(&path).unwrap_err();
    assert!(matches!(
        err,
        TraceFormatError::LengthMismatch { field: "file", .. }
    ));
    let missing = read_trace_set(dir.path().join("nope")).unwrap_err();
    assert!(matches!(missing, TraceFormatError::Io { .. }));
}

#[test]
fn writer_checks_counts() {
    let ts = small_set(2, 3, 3);
    let mut w = TraceSetWriter::new(Vec::new(), ts.header()).unwrap();
    w.push(&ts.traces[0]).unwrap();
    assert!(matches!(
        w.finish(),
        Err(TraceFormatError::TraceCount {
            declared: 2,
            written: 1
        })
    ));
    let mut w = TraceSetWriter::new(Vec::new(), ts.header()).unwrap();
    let short = Trace {
        label: ClassLabel::Fixed,
        samples: vec![0.0],
    };
    assert!(matches!(
        w.push(&short),
        Err(TraceFormatError::SampleCount { .. })
    ));
    let empty = TraceSetHeader {
        n_traces: 0,
        ..ts.header()
    };
    assert!(matches!(
        TraceSetWriter::new(Vec::new(), empty),
        Err(TraceFormatError::Empty("n_traces"))
    ));
}

#[test]
fn report_invariants() {
    let ts = small_set(400, 50, 4);
    let r = tvla_fixed_vs_random(&ts, DEFAULT_THRESHOLD).unwrap();
    assert_eq!(r.t_values.len(), 50);
    let max = r.t_values.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    assert_eq!(r.max_abs_t, max);
    assert_eq!(r.t_values[r.max_index].abs(), max);
    // both classes drawn from one distribution
    assert_eq!(r.verdict, Verdict::NoEvidence);
    assert_eq!((r.n_fixed + r.n_random) as usize, ts.traces.len());
    assert_eq!(r, tvla_fixed_vs_random(&ts, DEFAULT_THRESHOLD).unwrap());

    let strict = tvla_fixed_vs_random(&ts, max).unwrap();
    assert_eq!(strict.verdict, Verdict::Leaks);
    assert!(matches!(
        tvla_fixed_vs_random(&ts, 0.0),
        Err(TvlaError::BadThreshold(_))
    ));
}

#[test]
fn single_class_is_an_error() {
    let mut ts = small_set(10, 4, 5);
    for t in &mut ts.traces {
        t.label = ClassLabel::Random;
    }
    assert!(matches!(
        tvla_fixed_vs_random(&ts, DEFAULT_THRESHOLD),
        Err(TvlaError::TooFewTraces {
            class: ClassLabel::Fixed,
            found: 0
        })
    ));
}

#[test]
fn shifted_fixed_class_leaks() {
    let mut ts = small_set(400, 8, 6);
    for t in &mut ts.traces {
        if t.label == ClassLabel::Fixed {
            t.samples[3] += 1.0;
        }
    }
    let r = tvla_fixed_vs_random(&ts, DEFAULT_THRESHOLD).unwrap();
    assert_eq!(r.verdict, Verdict::Leaks);
    assert_eq!(r.max_index, 3);
}

#[test]
fn report_exports() {
    let ts = small_set(20, 3, 7);
    let r = tvla_fixed_vs_random(&ts, DEFAULT_THRESHOLD).unwrap();
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "sample_index,t");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2], format!("1,{}", r.t_values[1]));

    let mut json = Vec::new();
    r.write_json(&mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["t_values"].as_array().unwrap().len(), 3);
    assert_eq!(v["max_abs_t"].as_f64().unwrap(), r.max_abs_t);
    assert_eq!(v["verdict"], "NoEvidence");
}
