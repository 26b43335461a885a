/// Square matrix of linear power gains; entry `(j, i)` is the gain from
/// transmitter `j` to receiver `i`, so the diagonal holds the direct links.
#[derive(Clone, Debug, PartialEq)]
pub struct GainMatrix {
    k: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(k * k);
        for j in 0..k {
            for i in 0..k {
                data.push(f(j, i));
            }
        }
        Self { k, data }
    }

    /// Row-major data, `k * k` entries.
    pub fn from_vec(k: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == k * k).then_some(Self { k, data })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, tx: usize, rx: usize) -> f64 {
        self.data[tx * self.k + rx]
    }

    pub fn direct(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Gains arriving at receiver `rx` from every transmitter.
    pub fn column(&self, rx: usize) -> Vec<f64> {
        (0..self.k).map(|j| self.get(j, rx)).collect()
    }

    /// Relabels nodes: entry `(a, b)` of the result is entry `(perm[a], perm[b])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.k, |j, i| self.get(perm[j], perm[i]))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { k: self.k, data: self.data.iter().map(|v| v * c).collect() }
    }
}
