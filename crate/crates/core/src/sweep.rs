//! Batch matings of every `n/d` with one fixed angle.

use std::io::{self, Write};

use crate::angles::{check_mateable, classify_dendrite, Mateability, RationalAngle};
use crate::medusa::{run_mating, MapParams, MatingConfig, MatingResult, Status};
use crate::par::Execution;

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: u64,
    pub angle: RationalAngle,
    pub mateability: Mateability,
    /// Strictly preperiodic angle, i.e. a polynomial with a dendrite Julia set.
    pub dendrite: bool,
    pub status: Status,
    pub params: Option<MapParams>,
    pub iterations: usize,
    pub message: Option<String>,
    pub result: MatingResult,
}

/// Mates `n/d` with `with` for every `n` in `0..d`. Rows come back in order of
/// `n` whatever the execution strategy.
///
/// # Panics
/// If `d < 2`.
pub fn sweep(d: u64, with: RationalAngle, cfg: &MatingConfig, exec: Execution) -> Vec<SweepRow> {
    assert!(d >= 2, "sweep denominator must be at least 2");
    exec.map_indexed(d as usize, |i| {
        let n = i as u64;
        let angle = RationalAngle::new(n, d).expect("d >= 2");
        let mateability = check_mateable(angle, with, cfg.q_max);
        let result = run_mating(angle, with, cfg);
        log::info!("{angle} with {with}: {}", result.status);
        SweepRow {
            n,
            angle,
            mateability,
            dendrite: classify_dendrite(angle),
            status: result.status,
            params: result.best(),
            iterations: result.iterations_run,
            message: result.message.clone(),
            result,
        }
    })
}

/// Whether any row produced a usable map.
pub fn any_success(rows: &[SweepRow]) -> bool {
    rows.iter().any(|r| {
        matches!(
            r.status,
            Status::Converged | Status::Stagnated | Status::Diverged
        )
    })
}

/// Tab-separated summary, one header line and one line per row.
pub fn write_summary<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "angle\tstatus\tre_a\tim_a\tre_b\tim_b\titerations\tdendrite"
    )?;
    for r in rows {
        let (a, b) = match r.params {
            Some(p) => (
                [format!("{:.16e}", p.a.re), format!("{:.16e}", p.a.im)],
                [format!("{:.16e}", p.b.re), format!("{:.16e}", p.b.im)],
            ),
            None => (["-".into(), "-".into()], ["-".into(), "-".into()]),
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.angle, r.status, a[0], a[1], b[0], b[1], r.iterations, r.dendrite
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(rows: &[SweepRow]) -> String {
        let mut buf = Vec::new();
        write_summary(rows, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn thirds_with_one_third() {
        let with: RationalAngle = "1/3".parse().unwrap();
        let rows = sweep(3, with, &MatingConfig::default(), Execution::Sequential);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].status, Status::Converged);
        assert_eq!(rows[1].status, Status::NotMateable);
        assert_eq!(rows[2].status, Status::NotMateable);
        assert!(rows[1].params.is_none());
        assert!(any_success(&rows));
        let text = summary(&rows);
        assert_eq!(text.lines().count(), 4);
        assert!(text
            .lines()
            .nth(2)
            .unwrap()
            .starts_with("1/3\tnot-mateable\t-\t"));
    }

    #[test]
    fn order_and_content_independent_of_execution() {
        let with = RationalAngle::ZERO;
        let cfg = MatingConfig::default();
        let seq = sweep(8, with, &cfg, Execution::Sequential);
        let par = sweep(8, with, &cfg, Execution::with_threads(4));
        assert_eq!(summary(&seq), summary(&par));
        assert_eq!(
            seq.iter().map(|r| r.n).collect::<Vec<_>>(),
            (0..8).collect::<Vec<_>>()
        );
        let dendrites: Vec<bool> = seq.iter().map(|r| r.dendrite).collect();
        // 0/8 = 0, 2/8 = 1/4, 4/8 = 1/2, 6/8 = 3/4 reduce; only 0 is periodic
        assert_eq!(
            dendrites,
            vec![false, true, true, true, true, true, true, true]
        );
        let p = seq[0].params.unwrap();
        assert_eq!(seq[0].status, Status::Converged);
        assert!((p.a - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-9 && p.b.norm() < 1e-9);
    }
}
