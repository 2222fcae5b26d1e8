use crate::rational::Rational;

/// The affine condition `coeffs · z = rhs` on a point `z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineEvent {
    pub coeffs: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

impl AffineEvent {
    pub fn new(coeffs: Vec<(usize, Rational)>, rhs: Rational) -> Self {
        AffineEvent { coeffs, rhs }
    }

    /// `coeffs · z - rhs`.
    pub fn residual(&self, z: &[Rational]) -> Rational {
        let lhs: Rational = self.coeffs.iter().map(|(j, a)| a * &z[*j]).sum();
        lhs - &self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopTime {
    pub t: Rational,
    /// Indices into the event slice, ascending.
    pub triggered: Vec<usize>,
}

/// First `t ∈ (0, 1]` at which some event holds on `z(t) = (1-t)·from + t·to`.
///
/// Events whose residual is constant along the segment never trigger. The
/// caller is responsible for dropping events that already hold at `t = 0`;
/// such events are ignored here as well.
pub fn line_stop_time(from: &[Rational], to: &[Rational], events: &[AffineEvent]) -> Option<StopTime> {
    assert_eq!(from.len(), to.len(), "segment endpoints differ in dimension");
    let mut best: Option<StopTime> = None;
    for (i, ev) in events.iter().enumerate() {
        let g0 = ev.residual(from);
        let g1 = ev.residual(to);
        if g0.is_zero() || g0 == g1 {
            continue;
        }
        // g(t) = g0 + t (g1 - g0) = 0
        let t = &g0 / &(&g0 - &g1);
        if !t.is_positive() || t > Rational::one() {
            continue;
        }
        match &mut best {
            Some(b) if b.t == t => b.triggered.push(i),
            Some(b) if b.t < t => {}
            _ => best = Some(StopTime { t, triggered: vec![i] }),
        }
    }
    best
}

/// `(1-t)·from + t·to`.
pub fn interpolate(from: &[Rational], to: &[Rational], t: &Rational) -> Vec<Rational> {
    let s = Rational::one() - t;
    from.iter().zip(to).map(|(a, b)| &s * a + t * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn crossing_midpoint() {
        let ev = AffineEvent::new(vec![(0, q(1, 1))], q(1, 2));
        let stop = line_stop_time(&[q(3, 4)], &[q(1, 4)], &[ev]).unwrap();
        assert_eq!(stop.t, q(1, 2));
        assert_eq!(stop.triggered, vec![0]);
    }

    #[test]
    fn unreachable_event() {
        let ev = AffineEvent::new(vec![(0, q(1, 1))], q(0, 1));
        assert_eq!(line_stop_time(&[q(1, 4)], &[q(3, 4)], &[ev]), None);
    }

    #[test]
    fn earliest_of_two_events() {
        // x = y at t = 1/2; y = 3/4 at t = 3/4.
        let x_eq_y = AffineEvent::new(vec![(0, q(1, 1)), (1, q(-1, 1))], q(0, 1));
        let y_34 = AffineEvent::new(vec![(1, q(1, 1))], q(3, 4));
        let from = [q(1, 1), q(0, 1)];
        let to = [q(0, 1), q(1, 1)];
        let stop = line_stop_time(&from, &to, &[x_eq_y, y_34]).unwrap();
        assert_eq!(stop.t, q(1, 2));
        assert_eq!(stop.triggered, vec![0]);
    }

    #[test]
    fn simultaneous_and_endpoint_events() {
        let a = AffineEvent::new(vec![(0, q(1, 1))], q(0, 1));
        let b = AffineEvent::new(vec![(0, q(2, 1))], q(0, 1));
        let stop = line_stop_time(&[q(1, 1)], &[q(0, 1)], &[a, b]).unwrap();
        assert_eq!(stop.t, q(1, 1));
        assert_eq!(stop.triggered, vec![0, 1]);
    }

    #[test]
    fn constant_and_initially_true_events_ignored() {
        let constant = AffineEvent::new(vec![(1, q(1, 1))], q(5, 1));
        let at_start = AffineEvent::new(vec![(0, q(1, 1))], q(1, 1));
        let from = [q(1, 1), q(0, 1)];
        let to = [q(0, 1), q(0, 1)];
        assert_eq!(line_stop_time(&from, &to, &[constant, at_start]), None);
    }

    #[test]
    fn interpolation() {
        let z = interpolate(&[q(1, 1), q(0, 1)], &[q(0, 1), q(1, 1)], &q(1, 4));
        assert_eq!(z, vec![q(3, 4), q(1, 4)]);
    }
}
