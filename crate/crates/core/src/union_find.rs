//! Disjoint-set forest with path compression and union by size.

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    clusters: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "too many elements for a u32 forest");
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            clusters: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Resets to `n` singletons, reusing the allocation.
    pub fn reset(&mut self, n: usize) {
        self.parent.clear();
        self.parent.extend(0..n as u32);
        self.size.clear();
        self.size.resize(n, 1);
        self.clusters = n;
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x as u32;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut node = x as u32;
        while node != root {
            let next = self.parent[node as usize];
            self.parent[node as usize] = root;
            node = next;
        }
        root as usize
    }

    /// Merges the sets of `a` and `b`; returns `false` if already merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.clusters -= 1;
        true
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters
    }

    pub fn cluster_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons() {
        let uf = UnionFind::new(10);
        assert_eq!(uf.cluster_count(), 10);
    }

    #[test]
    fn chain_merges_to_one() {
        let n = 1000;
        let mut uf = UnionFind::new(n);
        for i in 1..n {
            let before = uf.cluster_count();
            assert!(uf.union(i - 1, i));
            assert_eq!(uf.cluster_count(), before - 1);
        }
        assert_eq!(uf.cluster_count(), 1);
        assert_eq!(uf.cluster_size(0), n);
        assert!(!uf.union(0, n - 1));
    }

    #[test]
    fn reset_restores_singletons() {
        let mut uf = UnionFind::new(4);
        uf.union(0, 1);
        uf.reset(6);
        assert_eq!(uf.cluster_count(), 6);
        assert!(!uf.connected(0, 1));
    }
}
