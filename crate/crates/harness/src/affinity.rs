//! CPU topology discovery and worker pinning.
//!
//! Workers are placed one per distinct logical CPU, filling physical cores
//! first and SMT siblings after, so low thread counts measure real cores
//! before hyperthread sharing kicks in.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CpuInfo {
    cpu: usize,
    package_id: u32,
    core_id: u32,
}

/// Parse a sysfs cpu list like `0-3,5,7-8`.
fn parse_cpu_list(text: &str) -> Vec<usize> {
    let mut cpus = Vec::new();
    for part in text.trim().split(',') {
        if part.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = part.split_once('-') {
            if let (Ok(lo), Ok(hi)) = (lo.parse::<usize>(), hi.parse::<usize>()) {
                cpus.extend(lo..=hi);
            }
        } else if let Ok(n) = part.parse::<usize>() {
            cpus.push(n);
        }
    }
    cpus
}

fn read_id(path: &Path) -> u32 {
    fs::read_to_string(path).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

/// Online logical CPUs with their core/package ids, in the fill order
/// described above.
fn cpu_fill_order() -> Vec<CpuInfo> {
    let online = fs::read_to_string("/sys/devices/system/cpu/online")
        .map(|s| parse_cpu_list(&s))
        .unwrap_or_else(|_| {
            (0..std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)).collect()
        });
    let infos: Vec<CpuInfo> = online
        .into_iter()
        .map(|cpu| {
            let topo = format!("/sys/devices/system/cpu/cpu{cpu}/topology");
            CpuInfo {
                cpu,
                package_id: read_id(Path::new(&format!("{topo}/physical_package_id"))),
                core_id: read_id(Path::new(&format!("{topo}/core_id"))),
            }
        })
        .collect();

    // Group SMT siblings per (package, core); emit one sibling per core per
    // round.
    let mut cores: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for info in &infos {
        cores.entry((info.package_id, info.core_id)).or_default().push(info.cpu);
    }
    for siblings in cores.values_mut() {
        siblings.sort_unstable();
    }
    let rounds = cores.values().map(Vec::len).max().unwrap_or(1);
    let mut order = Vec::with_capacity(infos.len());
    for round in 0..rounds {
        for siblings in cores.values() {
            if let Some(&cpu) = siblings.get(round) {
                let info = infos.iter().find(|i| i.cpu == cpu).copied().unwrap();
                order.push(info);
            }
        }
    }
    order
}

/// Requested vs achieved worker placement.
#[derive(Debug, Clone)]
pub struct AffinityPlan {
    pub requested: usize,
    /// Target logical cpu per worker.
    pub cpus: Vec<usize>,
    /// Read-back placement per worker (`None` when pinning failed).
    pub achieved: Vec<Option<usize>>,
    /// True when every worker landed on its target cpu.
    pub honored: bool,
}

impl AffinityPlan {
    /// Pin hook for `WorkerPlan::with_pin`: worker `i` pins itself to
    /// `cpus[i]`; failures stay best-effort.
    pub fn pin_fn(&self) -> std::sync::Arc<dyn Fn(usize) + Send + Sync> {
        let cpus = self.cpus.clone();
        std::sync::Arc::new(move |worker| {
            if let Some(&cpu) = cpus.get(worker) {
                let _ = pin_current_thread(cpu);
            }
        })
    }
}

/// Plan one worker per distinct logical CPU. Refuses oversubscription.
///
/// The plan is verified by pinning the calling thread to each target once
/// and reading the placement back; the original mask is restored.
pub fn pin_workers(threads: usize) -> Result<AffinityPlan, HarnessError> {
    if threads == 0 {
        return Err(HarnessError::InvalidConfig("threads must be at least 1".into()));
    }
    let order = cpu_fill_order();
    if threads > order.len() {
        return Err(HarnessError::Oversubscribed { requested: threads, available: order.len() });
    }
    let cpus: Vec<usize> = order.iter().take(threads).map(|i| i.cpu).collect();

    let original = current_affinity();
    let mut achieved = Vec::with_capacity(threads);
    for &cpu in &cpus {
        let got = match pin_current_thread(cpu) {
            Ok(()) => current_affinity().as_deref().and_then(|mask| {
                (mask == [cpu]).then_some(cpu)
            }),
            Err(_) => None,
        };
        achieved.push(got);
    }
    if let Some(mask) = original {
        let _ = set_affinity_mask(&mask);
    }
    let honored = achieved.iter().zip(&cpus).all(|(a, c)| *a == Some(*c));
    Ok(AffinityPlan { requested: threads, cpus, achieved, honored })
}

#[cfg(target_os = "linux")]
pub fn pin_current_thread(cpu: usize) -> std::io::Result<()> {
    set_affinity_mask(&[cpu])
}

#[cfg(target_os = "linux")]
fn set_affinity_mask(cpus: &[usize]) -> std::io::Result<()> {
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_ZERO(&mut set);
        for &cpu in cpus {
            libc::CPU_SET(cpu, &mut set);
        }
        if libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) != 0 {
            return Err(std::io::Error::last_os_error());
        }
    }
    Ok(())
}

/// Logical CPUs the current thread may run on.
#[cfg(target_os = "linux")]
pub fn current_affinity() -> Option<Vec<usize>> {
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        if libc::sched_getaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &mut set) != 0 {
            return None;
        }
        let mut cpus = Vec::new();
        for cpu in 0..libc::CPU_SETSIZE as usize {
            if libc::CPU_ISSET(cpu, &set) {
                cpus.push(cpu);
            }
        }
        Some(cpus)
    }
}

#[cfg(not(target_os = "linux"))]
pub fn pin_current_thread(_cpu: usize) -> std::io::Result<()> {
    Err(std::io::Error::new(std::io::ErrorKind::Unsupported, "no affinity control"))
}

#[cfg(not(target_os = "linux"))]
fn set_affinity_mask(_cpus: &[usize]) -> std::io::Result<()> {
    Err(std::io::Error::new(std::io::ErrorKind::Unsupported, "no affinity control"))
}

#[cfg(not(target_os = "linux"))]
pub fn current_affinity() -> Option<Vec<usize>> {
    None
}

/// Number of online logical CPUs.
pub fn logical_cpus() -> usize {
    cpu_fill_order().len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpu_list_parsing() {
        assert_eq!(parse_cpu_list("0-3,5,7-8\n"), vec![0, 1, 2, 3, 5, 7, 8]);
        assert_eq!(parse_cpu_list("0"), vec![0]);
        assert_eq!(parse_cpu_list(""), Vec::<usize>::new());
    }

    #[test]
    fn one_worker_plan() {
        let plan = pin_workers(1).unwrap();
        assert_eq!(plan.requested, 1);
        assert_eq!(plan.cpus.len(), 1);
        assert_eq!(plan.achieved.len(), 1);
    }

    #[test]
    fn targets_are_distinct() {
        let n = logical_cpus();
        let plan = pin_workers(n).unwrap();
        let mut cpus = plan.cpus.clone();
        cpus.sort_unstable();
        cpus.dedup();
        assert_eq!(cpus.len(), n, "every worker gets its own cpu");
    }

    #[test]
    fn oversubscription_is_refused() {
        let n = logical_cpus();
        let err = pin_workers(n + 1).unwrap_err();
        assert!(matches!(err, HarnessError::Oversubscribed { .. }));
    }
}
