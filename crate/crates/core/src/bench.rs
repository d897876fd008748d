//! Erdős–Rényi phase-transition sweep and treewidth-versus-density curve.

use std::io;
use std::time::{Duration, Instant};

use crate::engine::{solve, SolveOptions, StopReason};
use crate::graph::erdos_renyi;
use crate::treedecomp::exact_treewidth;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub target_n: usize,
    pub pattern_n: usize,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub iterations: u64,
    pub timeout: Duration,
    pub memory_budget: u64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            target_n: 60,
            pattern_n: 8,
            start: 0.0,
            stop: 1.0,
            step: 0.1,
            iterations: 10,
            timeout: Duration::from_secs(10),
            memory_budget: 768 << 20,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(format!("step must be positive, got {}", self.step));
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.start) || !unit.contains(&self.stop) || self.start > self.stop {
            return Err(format!("grid [{}, {}] is not within [0, 1]", self.start, self.stop));
        }
        if self.pattern_n == 0 || self.pattern_n > 24 {
            return Err(format!("pattern_n must be in 1..=24, got {}", self.pattern_n));
        }
        Ok(())
    }

    /// Grid points `start, start + step, ...` up to `stop` (inclusive, with rounding slack).
    pub fn grid(&self) -> Vec<f64> {
        probability_grid(self.start, self.stop, self.step)
    }
}

pub fn probability_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| (start + i as f64 * step).min(1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellOutcome {
    Completed,
    Timeout,
    /// The DP exceeded the sweep's memory budget before the deadline.
    MemoryBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub pattern_p: f64,
    pub target_p: f64,
    pub seconds: f64,
    pub outcome: CellOutcome,
    pub treewidth: usize,
    pub occurrences: usize,
    pub iterations_run: u64,
}

impl SweepCell {
    pub fn timed_out(&self) -> bool {
        self.outcome == CellOutcome::Timeout
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for cell `(i, j)` and role `salt`, independent of visiting order.
pub fn cell_seed(master: u64, i: usize, j: usize, salt: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master ^ salt) ^ i as u64) ^ j as u64)
}

/// Measures one grid point. `i` indexes the pattern probability, `j` the target one.
pub fn run_cell(cfg: &SweepConfig, i: usize, j: usize, q: f64, p: f64) -> SweepCell {
    let pattern = erdos_renyi(cfg.pattern_n, q, cell_seed(cfg.seed, i, j, 1));
    let target = erdos_renyi(cfg.target_n, p, cell_seed(cfg.seed, i, j, 2));
    let opts = SolveOptions {
        iterations: Some(cfg.iterations),
        timeout: Some(cfg.timeout),
        memory_budget: cfg.memory_budget,
        seed: cell_seed(cfg.seed, i, j, 3),
        exhaust_iterations: true,
        ..Default::default()
    };
    let start = Instant::now();
    let sol = solve(&target, &pattern, None, &opts).expect("sweep patterns are within limits");
    let mut seconds = start.elapsed().as_secs_f64();
    let outcome = match sol.report.stop {
        StopReason::Completed | StopReason::CapReached => CellOutcome::Completed,
        StopReason::Timeout => {
            seconds = seconds.max(cfg.timeout.as_secs_f64());
            CellOutcome::Timeout
        }
        StopReason::MemoryBudget(_) => CellOutcome::MemoryBudget,
    };
    SweepCell {
        pattern_p: q,
        target_p: p,
        seconds,
        outcome,
        treewidth: sol.report.width,
        occurrences: sol.report.occurrences,
        iterations_run: sol.report.iterations_run,
    }
}

/// Runs every grid cell serially, calling `progress` after each.
pub fn run_sweep(cfg: &SweepConfig, mut progress: impl FnMut(&SweepCell)) -> Result<Vec<SweepCell>, String> {
    cfg.validate()?;
    let grid = cfg.grid();
    let mut cells = Vec::with_capacity(grid.len() * grid.len());
    for (i, &q) in grid.iter().enumerate() {
        for (j, &p) in grid.iter().enumerate() {
            let cell = run_cell(cfg, i, j, q, p);
            progress(&cell);
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// Writes `pattern_p,target_p,seconds,timeout,treewidth`. The timeout
/// column is `1` for a timeout, `memory` for a memory abort, else `0`.
pub fn write_sweep_csv<W: io::Write>(cells: &[SweepCell], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pattern_p", "target_p", "seconds", "timeout", "treewidth"])?;
    for c in cells {
        let flag = match c.outcome {
            CellOutcome::Completed => "0",
            CellOutcome::Timeout => "1",
            CellOutcome::MemoryBudget => "memory",
        };
        w.write_record([
            format!("{:.2}", c.pattern_p),
            format!("{:.2}", c.target_p),
            format!("{:.6}", c.seconds),
            flag.to_string(),
            c.treewidth.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean exact treewidth of `G(pattern_n, q)` per grid point `q`.
pub fn treewidth_curve(pattern_n: usize, step: f64, samples: usize, seed: u64) -> Result<Vec<(f64, f64)>, String> {
    if pattern_n == 0 || pattern_n > 24 {
        return Err(format!("pattern_n must be in 1..=24, got {pattern_n}"));
    }
    if step.is_nan() || step <= 0.0 || samples == 0 {
        return Err("step must be positive and samples at least 1".into());
    }
    let curve = probability_grid(0.0, 1.0, step)
        .into_iter()
        .enumerate()
        .map(|(i, q)| {
            let total: usize = (0..samples)
                .map(|s| {
                    let g = erdos_renyi(pattern_n, q, cell_seed(seed, i, s, 4));
                    exact_treewidth(&g).expect("size checked").width
                })
                .sum();
            (q, total as f64 / samples as f64)
        })
        .collect();
    Ok(curve)
}

pub fn write_curve_csv<W: io::Write>(curve: &[(f64, f64)], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "mean_treewidth"])?;
    for (q, t) in curve {
        w.write_record([format!("{q:.2}"), format!("{t:.4}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        let g = probability_grid(0.0, 1.0, 0.1);
        assert_eq!(g.len(), 11);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(probability_grid(0.0, 1.0, 0.03).len(), 34);
    }

    #[test]
    fn curve_endpoints() {
        let c = treewidth_curve(10, 0.25, 3, 1).unwrap();
        assert_eq!(c.first().unwrap().1, 0.0);
        assert_eq!(c.last().unwrap().1, 9.0);
    }

    #[test]
    fn curve_is_nearly_monotone() {
        let c = treewidth_curve(10, 0.1, 30, 2).unwrap();
        for w in c.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1.0, "{c:?}");
        }
    }

    #[test]
    fn edgeless_cell_is_fast_and_full() {
        let cfg = SweepConfig {
            target_n: 20,
            pattern_n: 4,
            ..Default::default()
        };
        let cell = run_cell(&cfg, 0, 0, 0.0, 0.0);
        assert_eq!(cell.outcome, CellOutcome::Completed);
        assert_eq!(cell.treewidth, 0);
        assert!(cell.occurrences > 0);
        assert_eq!(cell.iterations_run, 10);
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let cfg = SweepConfig {
            target_n: 12,
            pattern_n: 4,
            step: 0.5,
            ..Default::default()
        };
        let a = run_sweep(&cfg, |_| {}).unwrap();
        let b = run_sweep(&cfg, |_| {}).unwrap();
        assert_eq!(a.len(), 9);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.treewidth, x.occurrences, x.outcome), (y.treewidth, y.occurrences, y.outcome));
        }
        for (idx, c) in a.iter().enumerate() {
            let pattern = erdos_renyi(4, c.pattern_p, cell_seed(0, idx / 3, idx % 3, 1));
            assert_eq!(c.treewidth, exact_treewidth(&pattern).unwrap().width);
        }
        let mut buf = Vec::new();
        write_sweep_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("pattern_p,target_p,seconds,timeout,treewidth\n"));
        assert_eq!(text.lines().count(), 10);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = SweepConfig {
            step: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SweepConfig {
            stop: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
