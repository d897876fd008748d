//! The enumeration pipeline: decompose the pattern once, then run colorings
//! until the iteration budget, the result cap or the deadline is reached.

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coloring::{iteration_count, Coloring, IterationError};
use crate::dp::{run_iteration, DpContext, DpError, Limits, DEFAULT_MEMORY_BUDGET};
use crate::graph::{all_pairs_distances, degree_filter, Graph, MappingMask, MAX_PATTERN_VERTICES};
use crate::occurrence::{Mode, OccurrenceSet};
use crate::reconstruct::{collect_occurrences, reconstruct_root, ReconstructError};
use crate::treedecomp::{NiceTreeDecomposition, TreeDecompError};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub epsilon: f64,
    pub max_results: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Overrides the iteration count derived from `epsilon`.
    pub iterations: Option<u64>,
    pub timeout: Option<Duration>,
    /// Report only the count; the occurrence list is dropped at the end.
    pub count_only: bool,
    pub memory_budget: u64,
    /// Keep running colorings after `max_results` is reached (for timing
    /// runs that must complete a fixed number of iterations).
    pub exhaust_iterations: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: (-1.0f64).exp(),
            max_results: 100_000,
            mode: Mode::AllMappings,
            seed: 0,
            iterations: None,
            timeout: Some(Duration::from_secs(600)),
            count_only: false,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            exhaust_iterations: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("pattern has {0} vertices, at most 32 are supported")]
    PatternTooLarge(usize),
    #[error("pattern graph has no vertices")]
    EmptyPattern,
    #[error("mask covers {mask} vertices but the target has {target}")]
    MaskSize { mask: usize, target: usize },
    #[error("max_results must be at least 1")]
    ZeroResults,
    #[error(transparent)]
    Iterations(#[from] IterationError),
    #[error("reconstruction failed: {0}")]
    Reconstruct(#[from] ReconstructError),
}

impl From<TreeDecompError> for SolveError {
    fn from(e: TreeDecompError) -> Self {
        match e {
            TreeDecompError::EmptyGraph => SolveError::EmptyPattern,
            TreeDecompError::PatternTooLarge(n) => SolveError::PatternTooLarge(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    /// Ran every planned iteration.
    Completed,
    /// Collected `max_results` occurrences.
    CapReached,
    Timeout,
    MemoryBudget(DpError),
}

impl StopReason {
    fn from_limit(e: DpError) -> Self {
        match e {
            DpError::Timeout { .. } => StopReason::Timeout,
            e @ DpError::MemoryBudget { .. } => StopReason::MemoryBudget(e),
        }
    }

    pub fn is_abort(&self) -> bool {
        matches!(self, StopReason::Timeout | StopReason::MemoryBudget(_))
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Completed => f.write_str("completed"),
            StopReason::CapReached => f.write_str("cap"),
            StopReason::Timeout => f.write_str("timeout"),
            StopReason::MemoryBudget(_) => f.write_str("memory"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub occurrences: usize,
    pub iterations_planned: u64,
    pub iterations_run: u64,
    /// Colorings whose root list was nonempty.
    pub colorful_hits: u64,
    pub decomposition_time: Duration,
    pub dp_time: Duration,
    pub reconstruction_time: Duration,
    pub peak_bytes: u64,
    pub width: usize,
    pub nice_nodes: usize,
    pub stop: StopReason,
}

impl SolveReport {
    pub fn total_time(&self) -> Duration {
        self.decomposition_time + self.dp_time + self.reconstruction_time
    }
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "occurrences={}", self.occurrences)?;
        writeln!(f, "iterations_planned={}", self.iterations_planned)?;
        writeln!(f, "iterations_run={}", self.iterations_run)?;
        writeln!(f, "colorful_hits={}", self.colorful_hits)?;
        writeln!(f, "width={}", self.width)?;
        writeln!(f, "nice_nodes={}", self.nice_nodes)?;
        writeln!(f, "decomposition_seconds={:.6}", self.decomposition_time.as_secs_f64())?;
        writeln!(f, "dp_seconds={:.6}", self.dp_time.as_secs_f64())?;
        writeln!(f, "reconstruction_seconds={:.6}", self.reconstruction_time.as_secs_f64())?;
        writeln!(f, "peak_bytes={}", self.peak_bytes)?;
        write!(f, "stop={}", self.stop)?;
        if let StopReason::MemoryBudget(e) = &self.stop {
            write!(f, "\nabort_detail={e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub occurrences: OccurrenceSet,
    pub report: SolveReport,
}

/// Random stream for iteration `index`: one ChaCha8 key per seed, one stream
/// per iteration.
pub fn iteration_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Enumerates occurrences of `pattern` in `target`.
///
/// Stops after the planned number of colorings, once `max_results`
/// distinct occurrences are known, or at the deadline. Timeouts and memory
/// aborts are reported through [`SolveReport::stop`] together with whatever
/// was found so far.
pub fn solve(
    target: &Graph,
    pattern: &Graph,
    mask: Option<&MappingMask>,
    opts: &SolveOptions,
) -> Result<Solution, SolveError> {
    let start = Instant::now();
    let deadline = opts.timeout.map(|t| start + t);
    let k = pattern.vertex_count();
    if k > MAX_PATTERN_VERTICES {
        return Err(SolveError::PatternTooLarge(k));
    }
    if k == 0 {
        return Err(SolveError::EmptyPattern);
    }
    if opts.max_results == 0 {
        return Err(SolveError::ZeroResults);
    }
    if let Some(m) = mask {
        if m.len() != target.vertex_count() {
            return Err(SolveError::MaskSize {
                mask: m.len(),
                target: target.vertex_count(),
            });
        }
    }
    let planned = match opts.iterations {
        Some(t) => t,
        None => iteration_count(k, opts.epsilon)?,
    };

    let (ntd, width) = NiceTreeDecomposition::for_pattern(pattern)?;
    let distances = all_pairs_distances(pattern).expect("pattern size checked");
    let base = match mask {
        Some(m) => m.restrict(k),
        None => MappingMask::all(target.vertex_count(), k),
    };
    let mask = degree_filter(target, pattern, &base);

    let mut report = SolveReport {
        occurrences: 0,
        iterations_planned: planned,
        iterations_run: 0,
        colorful_hits: 0,
        decomposition_time: start.elapsed(),
        dp_time: Duration::ZERO,
        reconstruction_time: Duration::ZERO,
        peak_bytes: 0,
        width,
        nice_nodes: ntd.len(),
        stop: StopReason::Completed,
    };
    let mut found = OccurrenceSet::new(opts.mode);
    let limits = Limits {
        memory_budget: opts.memory_budget,
        deadline,
    };

    if k <= target.vertex_count() {
        for index in 0..planned {
            if found.len() >= opts.max_results && !opts.exhaust_iterations {
                report.stop = StopReason::CapReached;
                break;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                report.stop = StopReason::Timeout;
                break;
            }
            let coloring = Coloring::random(target.vertex_count(), k, &mut iteration_rng(opts.seed, index));
            let ctx = DpContext {
                target,
                pattern,
                mask: &mask,
                distances: &distances,
                coloring: &coloring,
            };
            let t = Instant::now();
            let outcome = run_iteration(&ntd, &ctx, limits);
            report.dp_time += t.elapsed();
            let iteration = match outcome {
                Ok(it) => it,
                Err(e) => {
                    report.stop = StopReason::from_limit(e);
                    break;
                }
            };
            report.peak_bytes = report.peak_bytes.max(iteration.peak_bytes);
            if iteration.found() {
                report.colorful_hits += 1;
            }
            if iteration.found() && found.len() < opts.max_results {
                // Ask for what is still missing; mappings seen in earlier
                // iterations can crowd out new ones, so retry with more.
                let mut demand = opts.max_results - found.len();
                let t = Instant::now();
                let stop = loop {
                    match reconstruct_root(&ntd, &iteration, &coloring, k, demand, limits) {
                        Ok(r) => {
                            collect_occurrences(&r, &mut found, opts.max_results);
                            if found.len() >= opts.max_results || !r.is_truncated() {
                                break None;
                            }
                            demand = demand.saturating_mul(4);
                        }
                        Err(ReconstructError::Limit(e)) => break Some(StopReason::from_limit(e)),
                        Err(e) => return Err(e.into()),
                    }
                };
                report.reconstruction_time += t.elapsed();
                if let Some(stop) = stop {
                    report.stop = stop;
                    break;
                }
            }
            report.iterations_run += 1;
        }
        if report.stop == StopReason::Completed && found.len() >= opts.max_results && !opts.exhaust_iterations {
            report.stop = StopReason::CapReached;
        }
    }

    report.occurrences = found.len();
    if opts.count_only {
        found = OccurrenceSet::new(opts.mode);
    }
    Ok(Solution {
        occurrences: found,
        report,
    })
}
