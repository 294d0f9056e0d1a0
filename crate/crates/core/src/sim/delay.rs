/// Tapped delay line producing contiguous regressors `[x_n, x_{n-1}, ...]`.
///
/// Every sample is stored twice so the current window is always a single
/// slice; no copying per sample.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    pos: usize,
    len: usize,
}

impl DelayLine {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "delay line needs at least one tap");
        Self {
            buf: vec![0.0; 2 * len],
            pos: 0,
            len,
        }
    }

    pub fn push(&mut self, sample: f64) {
        self.pos = if self.pos == 0 { self.len - 1 } else { self.pos - 1 };
        self.buf[self.pos] = sample;
        self.buf[self.pos + self.len] = sample;
    }

    /// Newest sample first.
    pub fn window(&self) -> &[f64] {
        &self.buf[self.pos..self.pos + self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
