/// Keep-fraction schedule `tau_t = (T - t) / (T - 1)` for `t = 1..=T`:
/// every source example at the first outer iteration, none at the last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaceSchedule {
    outer_iters: usize,
}

impl PaceSchedule {
    /// `outer_iters` must be at least 2.
    pub fn new(outer_iters: usize) -> Self {
        assert!(
            outer_iters >= 2,
            "pace schedule needs at least two outer iterations"
        );
        Self { outer_iters }
    }

    pub fn len(&self) -> usize {
        self.outer_iters
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `tau_t` for 1-based `t`.
    pub fn keep_fraction(&self, t: usize) -> f64 {
        assert!((1..=self.outer_iters).contains(&t));
        (self.outer_iters - t) as f64 / (self.outer_iters - 1) as f64
    }

    /// `ceil(tau_t * n)` in exact integer arithmetic.
    pub fn keep_count(&self, t: usize, n: usize) -> usize {
        assert!((1..=self.outer_iters).contains(&t));
        let num = (self.outer_iters - t) * n;
        let den = self.outer_iters - 1;
        num.div_ceil(den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotone() {
        for t_o in 2..15 {
            let s = PaceSchedule::new(t_o);
            assert_eq!(s.keep_fraction(1), 1.0);
            assert_eq!(s.keep_fraction(t_o), 0.0);
            for t in 1..t_o {
                assert!(s.keep_fraction(t + 1) < s.keep_fraction(t));
            }
        }
    }

    #[test]
    fn counts_are_exact_ceilings() {
        let s = PaceSchedule::new(10);
        // 6/9 * 600 is 400 exactly; floating point gives 400.00000000000006
        assert_eq!(s.keep_count(4, 600), 400);
        assert_eq!(s.keep_count(2, 7), 7);
        assert_eq!(s.keep_count(9, 7), 1);
        assert_eq!(s.keep_count(10, 7), 0);
        assert_eq!(PaceSchedule::new(2).keep_count(1, 5), 5);
    }
}
