use std::time::Instant;

/// Wall time of a closure and the process's peak resident set afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark {
    pub wall_seconds: f64,
    pub peak_rss_mb: Option<f64>,
}

pub fn benchmark<T>(f: impl FnOnce() -> T) -> (T, Benchmark) {
    let start = Instant::now();
    let out = f();
    let wall_seconds = start.elapsed().as_secs_f64();
    (out, Benchmark { wall_seconds, peak_rss_mb: peak_rss_mb() })
}

/// Peak resident set size (`VmHWM`) in MiB, where `/proc` provides it.
pub fn peak_rss_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    parse_vm_hwm(&status)
}

fn parse_vm_hwm(status: &str) -> Option<f64> {
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}
