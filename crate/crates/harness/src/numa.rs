//! NUMA node discovery and allocation targeting.
//!
//! The lattice is bound to a node by setting a strict memory policy around
//! allocation and first touch (field initialization writes every element,
//! which commits its pages under the active policy). On machines without
//! the requested node the request fails loudly; silently measuring the
//! wrong memory would defeat the point.

use std::fs;

use crate::error::HarnessError;

/// Online NUMA node ids, sorted.
pub fn numa_nodes() -> Vec<u32> {
    let mut nodes: Vec<u32> = fs::read_dir("/sys/devices/system/node")
        .map(|entries| {
            entries
                .flatten()
                .filter_map(|e| {
                    e.file_name()
                        .to_str()
                        .and_then(|n| n.strip_prefix("node"))
                        .and_then(|n| n.parse().ok())
                })
                .collect()
        })
        .unwrap_or_default();
    nodes.sort_unstable();
    nodes
}

#[cfg(target_os = "linux")]
mod policy {
    const MPOL_DEFAULT: libc::c_long = 0;
    const MPOL_BIND: libc::c_long = 2;

    fn set_mempolicy(mode: libc::c_long, mask: Option<u64>) -> std::io::Result<()> {
        let (mask_ptr, maxnode): (*const u64, libc::c_ulong) = match &mask {
            Some(m) => (m as *const u64, 64),
            None => (std::ptr::null(), 0),
        };
        let rc = unsafe { libc::syscall(libc::SYS_set_mempolicy, mode, mask_ptr, maxnode) };
        if rc != 0 {
            return Err(std::io::Error::last_os_error());
        }
        Ok(())
    }

    /// Strict bind-to-node policy for the current thread; dropped back to
    /// the default policy when the guard goes out of scope.
    #[derive(Debug)]
    pub struct BindGuard(());

    impl BindGuard {
        pub fn bind(node: u32) -> std::io::Result<Self> {
            if node >= 64 {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidInput,
                    "node id beyond the single-word mask",
                ));
            }
            set_mempolicy(MPOL_BIND, Some(1u64 << node))?;
            Ok(Self(()))
        }
    }

    impl Drop for BindGuard {
        fn drop(&mut self) {
            let _ = set_mempolicy(MPOL_DEFAULT, None);
        }
    }
}

#[cfg(not(target_os = "linux"))]
mod policy {
    #[derive(Debug)]
    pub struct BindGuard(());

    impl BindGuard {
        pub fn bind(_node: u32) -> std::io::Result<Self> {
            Err(std::io::Error::new(std::io::ErrorKind::Unsupported, "no numa policy control"))
        }
    }
}

pub use policy::BindGuard;

/// Bind subsequent allocations of this thread to `node`, after checking the
/// node actually exists.
pub fn bind_to_node(node: u32) -> Result<BindGuard, HarnessError> {
    let nodes = numa_nodes();
    if !nodes.contains(&node) {
        return Err(HarnessError::NumaUnavailable {
            node,
            detail: format!("online nodes: {nodes:?}"),
        });
    }
    BindGuard::bind(node)
        .map_err(|e| HarnessError::NumaUnavailable { node, detail: e.to_string() })
}
