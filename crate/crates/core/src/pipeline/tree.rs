use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use super::series::{Activity, ByteSeries, HostSeries};
use super::PipelineError;
use crate::net::{Direction, Ipv4Prefix};

/// Prefix lengths of the tree levels, root first.
pub const TREE_LEVELS: [u8; 5] = [0, 8, 16, 24, 32];

/// A node of the IPv4 aggregation tree. Non-leaf series are the elementwise
/// sum of their children's series.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixNode {
    pub prefix: Ipv4Prefix,
    pub up: ByteSeries,
    pub down: ByteSeries,
    /// Hosts that moved at least one byte in either direction.
    pub active_hosts: BTreeSet<Ipv4Addr>,
    pub flow_keys: BTreeSet<u64>,
    /// Keyed by the next octet below this prefix.
    pub children: BTreeMap<u8, PrefixNode>,
    host_activity: [Activity<Ipv4Addr>; 2],
    flow_activity: [Activity<u64>; 2],
}

fn dir_index(direction: Direction) -> usize {
    match direction {
        Direction::Up => 0,
        Direction::Down => 1,
    }
}

impl PrefixNode {
    pub fn series(&self, direction: Direction) -> &ByteSeries {
        match direction {
            Direction::Up => &self.up,
            Direction::Down => &self.down,
        }
    }

    /// Hosts with traffic in `direction` during each bin.
    pub fn host_activity(&self, direction: Direction) -> &Activity<Ipv4Addr> {
        &self.host_activity[dir_index(direction)]
    }

    pub fn flow_activity(&self, direction: Direction) -> &Activity<u64> {
        &self.flow_activity[dir_index(direction)]
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Pre-order traversal: a node precedes its children, children in octet order.
    pub fn iter(&self) -> impl Iterator<Item = &PrefixNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.values().rev());
            Some(node)
        })
    }

    pub fn find(&self, prefix: &Ipv4Prefix) -> Option<&PrefixNode> {
        let mut node = self;
        while node.prefix != *prefix {
            if node.prefix.prefix_len() >= prefix.prefix_len() || !node.prefix.contains(prefix.network()) {
                return None;
            }
            let octet = prefix.network().octets()[usize::from(node.prefix.prefix_len() / 8)];
            node = node.children.get(&octet)?;
        }
        Some(node)
    }

    fn leaf(host: &HostSeries) -> Self {
        let mut host_activity: [Activity<Ipv4Addr>; 2] = Default::default();
        for dir in Direction::BOTH {
            for (bin, &b) in host.series(dir).bins.iter().enumerate() {
                if b > 0 {
                    host_activity[dir_index(dir)].record(host.host, bin as u32);
                }
            }
        }
        let mut flow_keys: BTreeSet<u64> = host.up_flows.keys().copied().collect();
        flow_keys.extend(host.down_flows.keys().copied());
        let active = host.up.total() + host.down.total() > 0;
        Self {
            prefix: Ipv4Prefix::host(host.host),
            up: host.up.clone(),
            down: host.down.clone(),
            active_hosts: if active {
                BTreeSet::from([host.host])
            } else {
                BTreeSet::new()
            },
            flow_keys,
            children: BTreeMap::new(),
            host_activity,
            flow_activity: [host.up_flows.clone(), host.down_flows.clone()],
        }
    }

    fn absorb(&mut self, child: &PrefixNode) {
        self.up.add_assign(&child.up);
        self.down.add_assign(&child.down);
        self.active_hosts.extend(&child.active_hosts);
        self.flow_keys.extend(&child.flow_keys);
        for i in 0..2 {
            self.host_activity[i].merge(&child.host_activity[i]);
            self.flow_activity[i].merge(&child.flow_activity[i]);
        }
    }
}

/// Aggregates host series into the /32 → /24 → /16 → /8 → root tree.
pub fn build_prefix_tree(hosts: &[HostSeries]) -> Result<PrefixNode, PipelineError> {
    let first = hosts.first().ok_or(PipelineError::NoHosts)?;
    for h in hosts {
        if !h.up.is_aligned_with(&first.up) || !h.down.is_aligned_with(&first.up) {
            return Err(PipelineError::MisalignedSeries {
                host: h.host,
                expected: first.up.len(),
                found: h.up.len().max(h.down.len()),
            });
        }
    }
    let refs: Vec<&HostSeries> = hosts.iter().collect();
    Ok(build_level(Ipv4Prefix::root(), &refs, first))
}

fn build_level(prefix: Ipv4Prefix, hosts: &[&HostSeries], template: &HostSeries) -> PrefixNode {
    if prefix.prefix_len() == 32 {
        let mut node = PrefixNode::leaf(hosts[0]);
        for extra in &hosts[1..] {
            node.absorb(&PrefixNode::leaf(extra));
        }
        return node;
    }
    let octet_idx = usize::from(prefix.prefix_len() / 8);
    let mut by_octet: BTreeMap<u8, Vec<&HostSeries>> = BTreeMap::new();
    for h in hosts {
        by_octet.entry(h.host.octets()[octet_idx]).or_default().push(h);
    }
    let empty = |s: &ByteSeries| ByteSeries::zeros(s.bin_width_ms, s.start_time, s.len());
    let mut node = PrefixNode {
        prefix,
        up: empty(&template.up),
        down: empty(&template.down),
        active_hosts: BTreeSet::new(),
        flow_keys: BTreeSet::new(),
        children: BTreeMap::new(),
        host_activity: Default::default(),
        flow_activity: Default::default(),
    };
    for (octet, members) in by_octet {
        let child_prefix = Ipv4Prefix::new(members[0].host, prefix.prefix_len() + 8)
            .expect("tree depth never exceeds /32");
        let child = build_level(child_prefix, &members, template);
        node.absorb(&child);
        node.children.insert(octet, child);
    }
    node
}

#[cfg(test)]
mod tests {
    use super::*;

    fn host(addr: [u8; 4], up: Vec<u64>, down: Vec<u64>) -> HostSeries {
        HostSeries {
            host: addr.into(),
            up: ByteSeries { bin_width_ms: 100, start_time: 0.0, bins: up },
            down: ByteSeries { bin_width_ms: 100, start_time: 0.0, bins: down },
            up_flows: Activity::default(),
            down_flows: Activity::default(),
        }
    }

    #[test]
    fn subnet_sums_hosts() {
        let tree = build_prefix_tree(&[
            host([10, 0, 1, 2], vec![100, 0], vec![0, 0]),
            host([10, 0, 1, 3], vec![0, 50], vec![0, 0]),
        ])
        .unwrap();
        let subnet = tree.find(&"10.0.1.0/24".parse().unwrap()).unwrap();
        assert_eq!(subnet.up.bins, vec![100, 50]);
        assert_eq!(subnet.children.len(), 2);
    }

    #[test]
    fn single_host_ancestors_match() {
        let tree = build_prefix_tree(&[host([10, 0, 1, 2], vec![1, 2, 3], vec![4, 5, 6])]).unwrap();
        let nodes: Vec<_> = tree.iter().collect();
        assert_eq!(nodes.len(), 5);
        for n in &nodes {
            assert_eq!(n.up.bins, vec![1, 2, 3]);
            assert_eq!(n.down.bins, vec![4, 5, 6]);
        }
        let lens: Vec<u8> = nodes.iter().map(|n| n.prefix.prefix_len()).collect();
        assert_eq!(lens, TREE_LEVELS);
    }

    #[test]
    fn common_ancestor_and_union() {
        let tree = build_prefix_tree(&[
            host([10, 0, 1, 2], vec![1], vec![0]),
            host([10, 0, 2, 2], vec![0], vec![1]),
        ])
        .unwrap();
        let sixteen = tree.find(&"10.0.0.0/16".parse().unwrap()).unwrap();
        assert_eq!(sixteen.children.len(), 2);
        assert_eq!(tree.active_hosts.len(), 2);
    }

    #[test]
    fn mismatched_lengths_error() {
        let err = build_prefix_tree(&[
            host([10, 0, 1, 2], vec![1, 2], vec![0, 0]),
            host([10, 0, 1, 3], vec![1], vec![0]),
        ]);
        assert!(matches!(err, Err(PipelineError::MisalignedSeries { .. })));
        assert!(matches!(build_prefix_tree(&[]), Err(PipelineError::NoHosts)));
    }
}
