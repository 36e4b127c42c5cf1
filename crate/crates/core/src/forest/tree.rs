use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::split::{best_split_with, SplitScratch};

/// Means of `a`, `y` and `a * y` over a leaf's estimation members.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LeafStats {
    pub count: u32,
    pub mean_a: f64,
    pub mean_y: f64,
    pub mean_ay: f64,
}

impl LeafStats {
    fn of(members: &[u32], a: &[f64], y: &[f64]) -> Self {
        let m = members.len() as f64;
        let (mut sa, mut sy, mut say) = (0.0, 0.0, 0.0);
        for &i in members {
            let (ai, yi) = (a[i as usize], y[i as usize]);
            sa += ai;
            sy += yi;
            say += ai * yi;
        }
        LeafStats {
            count: members.len() as u32,
            mean_a: sa / m,
            mean_y: sy / m,
            mean_ay: say / m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub split_covariate: Option<usize>,
    pub split_value: f64,
    pub children: Option<[u32; 2]>,
    /// Estimation-sample rows of a leaf; empty for internal nodes.
    pub leaf_members: Vec<u32>,
    pub stats: Option<LeafStats>,
}

impl TreeNode {
    fn leaf(members: Vec<u32>) -> Self {
        TreeNode {
            split_covariate: None,
            split_value: 0.0,
            children: None,
            leaf_members: members,
            stats: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
    /// Rows used to choose splits.
    pub split_sample: Vec<u32>,
    /// Rows used to populate leaves; equal to `split_sample` without honesty.
    pub estimation_sample: Vec<u32>,
    pub group: u32,
    /// False when even the root holds a single treatment arm.
    pub usable: bool,
}

impl Tree {
    /// Index of the leaf that `feature(j)` routes to.
    pub fn leaf_for(&self, feature: impl Fn(usize) -> f64) -> usize {
        let mut id = 0usize;
        while let Some([l, r]) = self.nodes[id].children {
            let j = self.nodes[id].split_covariate.expect("internal node has a split");
            id = if feature(j) <= self.nodes[id].split_value {
                l as usize
            } else {
                r as usize
            };
        }
        id
    }

    pub fn leaf_stats(&self, leaf: usize) -> &LeafStats {
        self.nodes[leaf].stats.as_ref().expect("leaf statistics are computed at growth")
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, id: usize) -> usize {
            match t.nodes[id].children {
                Some([l, r]) => 1 + go(t, l as usize).max(go(t, r as usize)),
                None => 0,
            }
        }
        go(self, 0)
    }
}

pub(crate) struct GrowParams {
    pub min_node_size: usize,
    pub mtry: usize,
    pub honesty: bool,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn grow_tree<R: Rng>(
    columns: &[Vec<f64>],
    a: &[f64],
    y: &[f64],
    split_sample: Vec<u32>,
    estimation_sample: Vec<u32>,
    group: u32,
    params: &GrowParams,
    rng: &mut R,
) -> Tree {
    let mut builder = Builder {
        columns,
        a,
        y,
        params,
        nodes: Vec::new(),
        scratch: SplitScratch::default(),
    };
    builder.build(split_sample.clone(), rng);
    let mut nodes = builder.nodes;

    if params.honesty {
        for n in nodes.iter_mut() {
            n.leaf_members.clear();
        }
        for &i in &estimation_sample {
            let leaf = route(&nodes, |j| columns[j][i as usize]);
            nodes[leaf].leaf_members.push(i);
        }
    }
    settle(&mut nodes, 0, a, params.min_node_size);
    let mut nodes = compact(nodes);
    let usable = admissible(&nodes[0].leaf_members, a, 1) || !nodes[0].is_leaf();
    for n in nodes.iter_mut().filter(|n| n.is_leaf()) {
        if !n.leaf_members.is_empty() {
            n.stats = Some(LeafStats::of(&n.leaf_members, a, y));
        }
    }
    Tree {
        nodes,
        split_sample,
        estimation_sample,
        group,
        usable,
    }
}

struct Builder<'a> {
    columns: &'a [Vec<f64>],
    a: &'a [f64],
    y: &'a [f64],
    params: &'a GrowParams,
    nodes: Vec<TreeNode>,
    scratch: SplitScratch,
}

impl Builder<'_> {
    fn build<R: Rng>(&mut self, members: Vec<u32>, rng: &mut R) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(TreeNode::leaf(Vec::new()));
        let p = self.columns.len();
        let split = if p > 0 && members.len() >= 2 * self.params.min_node_size {
            let cands = sample(rng, p, self.params.mtry.min(p)).into_vec();
            best_split_with(
                &members,
                self.a,
                self.y,
                self.columns,
                &cands,
                self.params.min_node_size,
                &mut self.scratch,
            )
        } else {
            None
        };
        match split {
            Some(s) => {
                let col = &self.columns[s.covariate];
                let (left, right): (Vec<u32>, Vec<u32>) =
                    members.into_iter().partition(|&i| col[i as usize] <= s.threshold);
                let l = self.build(left, rng);
                let r = self.build(right, rng);
                let node = &mut self.nodes[id as usize];
                node.split_covariate = Some(s.covariate);
                node.split_value = s.threshold;
                node.children = Some([l, r]);
            }
            None => self.nodes[id as usize].leaf_members = members,
        }
        id
    }
}

fn route(nodes: &[TreeNode], feature: impl Fn(usize) -> f64) -> usize {
    let mut id = 0usize;
    while let Some([l, r]) = nodes[id].children {
        let j = nodes[id].split_covariate.unwrap();
        id = if feature(j) <= nodes[id].split_value {
            l as usize
        } else {
            r as usize
        };
    }
    id
}

fn admissible(members: &[u32], a: &[f64], min_size: usize) -> bool {
    let treated = members.iter().filter(|&&i| a[i as usize] == 1.0).count();
    members.len() >= min_size && treated > 0 && treated < members.len()
}

/// Collapses every internal node with an inadmissible child into a leaf
/// holding the union of its estimation members. Returns whether the
/// subtree rooted at `id` ends up admissible.
fn settle(nodes: &mut [TreeNode], id: usize, a: &[f64], min_size: usize) -> bool {
    match nodes[id].children {
        None => admissible(&nodes[id].leaf_members, a, min_size),
        Some([l, r]) => {
            let ok_l = settle(nodes, l as usize, a, min_size);
            let ok_r = settle(nodes, r as usize, a, min_size);
            if ok_l && ok_r {
                return true;
            }
            let mut members = Vec::new();
            gather(nodes, id, &mut members);
            let node = &mut nodes[id];
            node.children = None;
            node.split_covariate = None;
            node.split_value = 0.0;
            node.leaf_members = members;
            admissible(&nodes[id].leaf_members, a, min_size)
        }
    }
}

fn gather(nodes: &[TreeNode], id: usize, out: &mut Vec<u32>) {
    match nodes[id].children {
        None => out.extend_from_slice(&nodes[id].leaf_members),
        Some([l, r]) => {
            gather(nodes, l as usize, out);
            gather(nodes, r as usize, out);
        }
    }
}

/// Drops nodes orphaned by pruning and renumbers in depth-first order.
fn compact(nodes: Vec<TreeNode>) -> Vec<TreeNode> {
    fn visit(old: &[TreeNode], id: usize, out: &mut Vec<TreeNode>) -> u32 {
        let new_id = out.len() as u32;
        out.push(old[id].clone());
        if let Some([l, r]) = old[id].children {
            let nl = visit(old, l as usize, out);
            let nr = visit(old, r as usize, out);
            out[new_id as usize].children = Some([nl, nr]);
        }
        new_id
    }
    let mut out = Vec::with_capacity(nodes.len());
    visit(&nodes, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let a: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| a[i] * if cols[0][i] > 0.5 { 2.0 } else { -2.0 } + rng.gen_range(0.0..0.1))
            .collect();
        (cols, a, y)
    }

    fn collect_leaves(t: &Tree) -> Vec<&TreeNode> {
        t.nodes.iter().filter(|n| n.is_leaf()).collect()
    }

    #[test]
    fn honest_leaves_are_admissible_and_partition_estimation_half() {
        let (cols, a, y) = toy(400, 3);
        let split: Vec<u32> = (0..200).collect();
        let est: Vec<u32> = (200..400).collect();
        let params = GrowParams {
            min_node_size: 5,
            mtry: 2,
            honesty: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = grow_tree(&cols, &a, &y, split, est.clone(), 0, &params, &mut rng);
        assert!(t.usable);
        assert!(t.leaf_count() > 1);
        let mut all: Vec<u32> = Vec::new();
        for leaf in collect_leaves(&t) {
            assert!(admissible(&leaf.leaf_members, &a, 5), "{:?}", leaf.leaf_members);
            all.extend(&leaf.leaf_members);
        }
        all.sort_unstable();
        assert_eq!(all, est);
    }

    #[test]
    fn routing_is_deterministic() {
        let (cols, a, y) = toy(300, 8);
        let params = GrowParams {
            min_node_size: 3,
            mtry: 1,
            honesty: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let all: Vec<u32> = (0..300).collect();
        let t = grow_tree(&cols, &a, &y, all.clone(), all, 0, &params, &mut rng);
        for i in 0..300 {
            let f = |j: usize| cols[j][i];
            assert_eq!(t.leaf_for(f), t.leaf_for(f));
            assert!(t.nodes[t.leaf_for(f)].leaf_members.contains(&(i as u32)));
        }
    }

    #[test]
    fn large_min_node_size_gives_single_leaf() {
        let (cols, a, y) = toy(40, 5);
        let params = GrowParams {
            min_node_size: 40,
            mtry: 2,
            honesty: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow_tree(&cols, &a, &y, (0..20).collect(), (20..40).collect(), 0, &params, &mut rng);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].leaf_members, (20..40).collect::<Vec<u32>>());
        assert!(t.usable);
    }

    #[test]
    fn single_arm_root_is_unusable() {
        let cols = vec![vec![0.0, 1.0, 2.0, 3.0]];
        let a = vec![1.0; 4];
        let y = vec![0.0, 1.0, 0.0, 1.0];
        let params = GrowParams {
            min_node_size: 1,
            mtry: 1,
            honesty: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all: Vec<u32> = (0..4).collect();
        let t = grow_tree(&cols, &a, &y, all.clone(), all, 0, &params, &mut rng);
        assert!(!t.usable);
    }
}
