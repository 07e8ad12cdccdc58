//! Binary trace-set files.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 4    | magic `LEDT`                       |
//! | 4      | 4    | version, `1`                       |
//! | 8      | 4    | `n_traces`, at least 1             |
//! | 12     | 4    | `n_samples`, at least 1            |
//! | 16     | 1    | model tag, 0 = HD, 1 = HW          |
//! | 17     | 8    | noise sigma, `f64`                 |
//! | 25     | 8    | base seed, `u64`                   |
//!
//! followed by `n_traces` records of one label byte (0 = fixed,
//! 1 = random) and `n_samples` `f32` values.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::LeakageModel;

pub const MAGIC: [u8; 4] = *b"LEDT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Fixed,
    Random,
}

impl ClassLabel {
    pub fn to_byte(self) -> u8 {
        match self {
            ClassLabel::Fixed => 0,
            ClassLabel::Random => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(ClassLabel::Fixed),
            1 => Some(ClassLabel::Random),
            _ => None,
        }
    }
}

/// One power trace, one sample per clock cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub label: ClassLabel,
    pub samples: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSetHeader {
    pub n_traces: u32,
    pub n_samples: u32,
    pub model: LeakageModel,
    pub noise_sigma: f64,
    pub base_seed: u64,
}

impl TraceSetHeader {
    pub fn record_len(&self) -> usize {
        1 + 4 * self.n_samples as usize
    }

    /// Exact size of a file with this header.
    pub fn file_len(&self) -> u64 {
        HEADER_LEN as u64 + u64::from(self.n_traces) * self.record_len() as u64
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..8].copy_from_slice(&VERSION.to_le_bytes());
        b[8..12].copy_from_slice(&self.n_traces.to_le_bytes());
        b[12..16].copy_from_slice(&self.n_samples.to_le_bytes());
        b[16] = self.model.tag();
        b[17..25].copy_from_slice(&self.noise_sigma.to_le_bytes());
        b[25..33].copy_from_slice(&self.base_seed.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN]) -> Result<Self, TraceFormatError> {
        if b[0..4] != MAGIC {
            return Err(TraceFormatError::BadMagic([b[0], b[1], b[2], b[3]]));
        }
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(TraceFormatError::UnsupportedVersion(version));
        }
        let n_traces = u32_at(8);
        if n_traces == 0 {
            return Err(TraceFormatError::Empty("n_traces"));
        }
        let n_samples = u32_at(12);
        if n_samples == 0 {
            return Err(TraceFormatError::Empty("n_samples"));
        }
        let model = LeakageModel::from_tag(b[16]).ok_or(TraceFormatError::BadModelTag(b[16]))?;
        let noise_sigma = f64::from_le_bytes(b[17..25].try_into().unwrap());
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(TraceFormatError::BadSigma(noise_sigma));
        }
        let base_seed = u64::from_le_bytes(b[25..33].try_into().unwrap());
        Ok(TraceSetHeader {
            n_traces,
            n_samples,
            model,
            noise_sigma,
            base_seed,
        })
    }
}

#[derive(Debug, Error)]
pub enum TraceFormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("i/o error: {0}")]
    Stream(#[from] io::Error),
    #[error("magic: expected \"LEDT\", found {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("version: unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("{0}: must be at least 1")]
    Empty(&'static str),
    #[error("model: unknown tag {0}")]
    BadModelTag(u8),
    #[error("sigma: {0} is not a finite non-negative number")]
    BadSigma(f64),
    #[error("label of trace {trace}: unknown class byte {found}")]
    BadLabel { trace: u32, found: u8 },
    #[error("{field}: length mismatch, expected {expected} bytes, found {found}")]
    LengthMismatch {
        field: &'static str,
        expected: u64,
        found: u64,
    },
    #[error("trace {trace}: expected {expected} samples, found {found}")]
    SampleCount {
        trace: u32,
        expected: u32,
        found: usize,
    },
    #[error("n_traces: header declares {declared} traces, {written} were written")]
    TraceCount { declared: u32, written: u32 },
}

/// An in-memory trace set.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub model: LeakageModel,
    pub noise_sigma: f64,
    pub base_seed: u64,
    pub traces: Vec<Trace>,
}

impl TraceSet {
    pub fn n_samples(&self) -> usize {
        self.traces.first().map_or(0, |t| t.samples.len())
    }

    pub fn header(&self) -> TraceSetHeader {
        TraceSetHeader {
            n_traces: self.traces.len() as u32,
            n_samples: self.n_samples() as u32,
            model: self.model,
            noise_sigma: self.noise_sigma,
            base_seed: self.base_seed,
        }
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.traces.iter().filter(|t| t.label == label).count()
    }

    pub fn write_to(&self, w: impl Write) -> Result<(), TraceFormatError> {
        let mut writer = TraceSetWriter::new(w, self.header())?;
        for t in &self.traces {
            writer.push(t)?;
        }
        writer.finish()?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self, TraceFormatError> {
        TraceSet::from_reader(TraceSetReader::new(r)?)
    }

    fn from_reader<R: Read>(mut reader: TraceSetReader<R>) -> Result<Self, TraceFormatError> {
        let h = reader.header();
        let mut traces = Vec::with_capacity(h.n_traces as usize);
        while let Some(t) = reader.next_trace()? {
            traces.push(t);
        }
        Ok(TraceSet {
            model: h.model,
            noise_sigma: h.noise_sigma,
            base_seed: h.base_seed,
            traces,
        })
    }
}

pub fn write_trace_set(ts: &TraceSet, path: impl AsRef<Path>) -> Result<(), TraceFormatError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| TraceFormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ts.write_to(BufWriter::new(file))
}

pub fn read_trace_set(path: impl AsRef<Path>) -> Result<TraceSet, TraceFormatError> {
    TraceSet::from_reader(TraceSetReader::open(path)?)
}

/// Streams traces to a sink after writing the header up front.
pub struct TraceSetWriter<W: Write> {
    inner: W,
    header: TraceSetHeader,
    written: u32,
    buf: Vec<u8>,
}

impl TraceSetWriter<BufWriter<File>> {
    pub fn create(
        path: impl AsRef<Path>,
        header: TraceSetHeader,
    ) -> Result<Self, TraceFormatError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| TraceFormatError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        TraceSetWriter::new(BufWriter::new(file), header)
    }
}

impl<W: Write> TraceSetWriter<W> {
    pub fn new(mut inner: W, header: TraceSetHeader) -> Result<Self, TraceFormatError> {
        // validate through the same path the reader uses
        TraceSetHeader::from_bytes(&header.to_bytes())?;
        inner.write_all(&header.to_bytes())?;
        Ok(TraceSetWriter {
            inner,
            header,
            written: 0,
            buf: Vec::with_capacity(header.record_len()),
        })
    }

    pub fn push(&mut self, trace: &Trace) -> Result<(), TraceFormatError> {
        if self.written == self.header.n_traces {
            return Err(TraceFormatError::TraceCount {
                declared: self.header.n_traces,
                written: self.written + 1,
            });
        }
        if trace.samples.len() != self.header.n_samples as usize {
            return Err(TraceFormatError::SampleCount {
                trace: self.written,
                expected: self.header.n_samples,
                found: trace.samples.len(),
            });
        }
        self.buf.clear();
        self.buf.push(trace.label.to_byte());
        for s in &trace.samples {
            self.buf.extend_from_slice(&s.to_le_bytes());
        }
        self.inner.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    /// Flushes and checks that every declared trace was written.
    pub fn finish(mut self) -> Result<W, TraceFormatError> {
        if self.written != self.header.n_traces {
            return Err(TraceFormatError::TraceCount {
                declared: self.header.n_traces,
                written: self.written,
            });
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Reads a trace set one trace at a time.
pub struct TraceSetReader<R: Read> {
    inner: R,
    header: TraceSetHeader,
    read: u32,
    buf: Vec<u8>,
}

impl TraceSetReader<BufReader<File>> {
    /// Opens a file and checks its size against the header.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, TraceFormatError> {
        let path = path.as_ref();
        let io_err = |source| TraceFormatError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::open(path).map_err(io_err)?;
        let size = file.metadata().map_err(io_err)?.len();
        let reader = TraceSetReader::new(BufReader::new(file))?;
        let expected = reader.header.file_len();
        if size != expected {
            return Err(TraceFormatError::LengthMismatch {
                field: "file",
                expected,
                found: size,
            });
        }
        Ok(reader)
    }
}

impl<R: Read> TraceSetReader<R> {
    pub fn new(mut inner: R) -> Result<Self, TraceFormatError> {
        let mut h = [0u8; HEADER_LEN];
        let got = read_full(&mut inner, &mut h)?;
        if got < HEADER_LEN {
            return Err(TraceFormatError::LengthMismatch {
                field: "header",
                expected: HEADER_LEN as u64,
                found: got as u64,
            });
        }
        let header = TraceSetHeader::from_bytes(&h)?;
        Ok(TraceSetReader {
            inner,
            header,
            read: 0,
            buf: vec![0; header.record_len()],
        })
    }

    pub fn header(&self) -> TraceSetHeader {
        self.header
    }

    /// The next trace, or `None` after the last one. Bytes past the last
    /// trace are an error.
    pub fn next_trace(&mut self) -> Result<Option<Trace>, TraceFormatError> {
        if self.read == self.header.n_traces {
            let mut probe = [0u8; 1];
            if read_full(&mut self.inner, &mut probe)? != 0 {
                return Err(TraceFormatError::LengthMismatch {
                    field: "payload",
                    expected: self.header.file_len(),
                    found: self.header.file_len() + 1,
                });
            }
            return Ok(None);
        }
        let got = read_full(&mut self.inner, &mut self.buf)?;
        if got < self.buf.len() {
            return Err(TraceFormatError::LengthMismatch {
                field: "payload",
                expected: self.header.file_len(),
                found: HEADER_LEN as u64
                    + u64::from(self.read) * self.buf.len() as u64
                    + got as u64,
            });
        }
        let label = ClassLabel::from_byte(self.buf[0]).ok_or(TraceFormatError::BadLabel {
            trace: self.read,
            found: self.buf[0],
        })?;
        let samples = self.buf[1..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.read += 1;
        Ok(Some(Trace { label, samples }))
    }
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}
