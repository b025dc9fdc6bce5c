//! WAV import/export: mono only; 32-bit float is written, 32-bit float and
//! 16-bit PCM are read.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::Waveform;
use crate::error::{Error, Result};

pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.fs().round() as u32,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let path = path.as_ref();
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut writer = WavWriter::new(std::io::BufWriter::new(tmp.as_file()), spec)?;
        for &s in w.samples() {
            writer.write_sample(s as f32)?;
        }
        writer.finalize()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::invalid(format!(
            "{}: expected mono audio, found {} channels",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::invalid(format!(
                "{}: unsupported sample format {fmt:?}/{bits} bit",
                path.display()
            )))
        }
    };
    Waveform::new(samples, f64::from(spec.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip_and_pcm_import() {
        let dir = tempfile::tempdir().unwrap();
        let w = Waveform::new(vec![0.25, -0.5, 0.125, 0.0], 16000.0).unwrap();
        let p = dir.path().join("a.wav");
        write_wav(&p, &w).unwrap();
        assert_eq!(read_wav(&p).unwrap(), w);

        let p16 = dir.path().join("b.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut wr = WavWriter::create(&p16, spec).unwrap();
        wr.write_sample(16384i16).unwrap();
        wr.write_sample(-32768i16).unwrap();
        wr.finalize().unwrap();
        assert_eq!(read_wav(&p16).unwrap().samples(), &[0.5, -1.0]);
    }
}
