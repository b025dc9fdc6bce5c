use std::io::{Read, Write};

use super::TrialRecord;
use crate::error::{Error, Result};

/// CSV with one row per trial and the `TrialRecord` fields as columns.
pub fn write_trial_log<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_trial_log<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in rd.deserialize().enumerate() {
        let r: TrialRecord = row.map_err(|e| Error::parse("trial log", format!("row {}: {e}", i + 1)))?;
        if r.correct != (r.response == r.target_id) {
            return Err(Error::parse(
                "trial log",
                format!("row {}: correct flag disagrees with response", i + 1),
            ));
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Phase;
    use crate::noise::NoiseKind;
    use crate::targets::TargetId;

    #[test]
    fn round_trip() {
        let r = vec![TrialRecord {
            trial_index: 3,
            block_index: 1,
            noise_kind: NoiseKind::Mps,
            noise_seed: u64::MAX,
            target_id: TargetId::Ada,
            snr: -12.41,
            rove: 1.25,
            response: TargetId::Aba,
            correct: false,
            phase: Phase::Measure,
        }];
        let mut buf = Vec::new();
        write_trial_log(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("trial_index,block_index,noise_kind,noise_seed,target_id,snr,rove,response,correct,phase"));
        assert_eq!(read_trial_log(&buf[..]).unwrap(), r);
    }

    #[test]
    fn inconsistent_row_is_rejected() {
        let text = "trial_index,block_index,noise_kind,noise_seed,target_id,snr,rove,response,correct,phase\n\
                    0,0,white,1,aba,0,0,aba,false,approach\n";
        assert!(read_trial_log(text.as_bytes()).is_err());
    }
}
