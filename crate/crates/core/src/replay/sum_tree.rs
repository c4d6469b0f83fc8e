/// Complete binary tree over a fixed number of leaves that keeps subtree
/// sums and maxima, giving O(log n) updates, prefix-sum search and max.
#[derive(Clone, Debug)]
pub struct SumTree {
    leaves: usize,
    sums: Vec<f64>,
    maxes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self {
            leaves,
            sums: vec![0.0; 2 * leaves],
            maxes: vec![0.0; 2 * leaves],
        }
    }

    pub fn total(&self) -> f64 {
        self.sums[1]
    }

    pub fn max(&self) -> f64 {
        self.maxes[1]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.sums[self.leaves + index]
    }

    /// Set leaf `index` to a nonnegative value.
    pub fn set(&mut self, index: usize, value: f64) {
        debug_assert!(value >= 0.0);
        let mut node = self.leaves + index;
        self.sums[node] = value;
        self.maxes[node] = value;
        node /= 2;
        while node >= 1 {
            self.sums[node] = self.sums[2 * node] + self.sums[2 * node + 1];
            self.maxes[node] = self.maxes[2 * node].max(self.maxes[2 * node + 1]);
            node /= 2;
        }
    }

    /// Leaf whose cumulative range contains `mass`, for `0 ≤ mass < total`.
    /// Never returns a zero-valued leaf while the total is positive.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = 2 * node;
            if mass < self.sums[left] || self.sums[left + 1] <= 0.0 {
                node = left;
            } else {
                mass -= self.sums[left];
                node = left + 1;
            }
        }
        node - self.leaves
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_and_search() {
        let mut t = SumTree::new(5);
        for (i, v) in [1.0, 2.0, 0.0, 4.0, 3.0].into_iter().enumerate() {
            t.set(i, v);
        }
        assert_eq!(t.total(), 10.0);
        assert_eq!(t.max(), 4.0);
        assert_eq!(t.find(0.0), 0);
        assert_eq!(t.find(0.999), 0);
        assert_eq!(t.find(1.0), 1);
        assert_eq!(t.find(2.999), 1);
        assert_eq!(t.find(3.0), 3);
        assert_eq!(t.find(6.999), 3);
        assert_eq!(t.find(7.0), 4);
        // overshoot from rounding still lands on a populated leaf
        assert_eq!(t.find(10.5), 4);
        t.set(3, 0.5);
        assert_eq!(t.max(), 3.0);
        assert_eq!(t.total(), 6.5);
    }
}
