//! Report tables. `report.tsv` and `report.json` depend only on the plan
//! and seeds; wall-clock training times go to `timings.tsv`.

use std::io::Write;
use std::path::Path;

use super::EvalReport;
use crate::error::Result;
use crate::fsio::atomic_write;

pub const TSV_HEADER: &str =
    "relation\tmodel\tvariant\tsetting\tfingerprint\ttrial\tseed\ttrain_size\ttest_size\ttp\tfp\tfn\ttn\tprecision\trecall\tf_score\tf_std";

/// One row per trial plus an aggregate row (`trial = mean`) per cell.
pub fn write_tsv<W: Write + ?Sized>(w: &mut W, reports: &[EvalReport]) -> std::io::Result<()> {
    writeln!(w, "{TSV_HEADER}")?;
    for r in reports {
        let prefix = format!(
            "{}\t{}\t{}\t{}\t{}",
            r.relation, r.model, r.variant, r.setting, r.fingerprint
        );
        for t in &r.trials {
            let c = t.confusion;
            writeln!(
                w,
                "{prefix}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t-",
                t.trial, t.seed, r.train_size, r.test_size, c.tp, c.fp, c.fn_, c.tn, t.precision, t.recall, t.f_score
            )?;
        }
        writeln!(
            w,
            "{prefix}\tmean\t-\t{}\t{}\t-\t-\t-\t-\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            r.train_size, r.test_size, r.precision, r.recall, r.f_score, r.f_std
        )?;
    }
    Ok(())
}

pub fn write_timings<W: Write + ?Sized>(w: &mut W, reports: &[EvalReport]) -> std::io::Result<()> {
    writeln!(w, "relation\tmodel\tvariant\tsetting\ttrial\ttrain_seconds")?;
    for r in reports {
        for t in &r.trials {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{:.3}",
                r.relation, r.model, r.variant, r.setting, t.trial, t.train_seconds
            )?;
        }
    }
    Ok(())
}

pub fn to_tsv_string(reports: &[EvalReport]) -> String {
    let mut out = Vec::new();
    write_tsv(&mut out, reports).expect("writing to memory cannot fail");
    String::from_utf8(out).expect("report is UTF-8")
}

/// Write `report.tsv`, `report.json` and `timings.tsv` into `dir`.
pub fn write_report_dir(dir: &Path, reports: &[EvalReport]) -> Result<()> {
    atomic_write(&dir.join("report.tsv"), |w| write_tsv(w, reports))?;
    atomic_write(&dir.join("report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, reports)?;
        w.write_all(b"\n")
    })?;
    atomic_write(&dir.join("timings.tsv"), |w| write_timings(w, reports))
}
