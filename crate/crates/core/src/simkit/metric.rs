//! Deviation area between binary waveforms.

use super::trace::DigitalTrace;

/// Total time within `[0, horizon]` during which the two traces disagree.
pub fn deviation_area(reference: &DigitalTrace, candidate: &DigitalTrace, horizon: f64) -> f64 {
    if !(horizon > 0.0) {
        return 0.0;
    }
    let mut a = reference.level_at(0.0);
    let mut b = candidate.level_at(0.0);
    let ra = &reference.transitions[reference.transitions.partition_point(|&t| t <= 0.0)..];
    let rb = &candidate.transitions[candidate.transitions.partition_point(|&t| t <= 0.0)..];
    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    let mut area = 0.0;
    loop {
        let ta = ra.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = rb.get(j).copied().unwrap_or(f64::INFINITY);
        let t = ta.min(tb).min(horizon);
        if a != b {
            area += t - prev;
        }
        if t >= horizon {
            return area;
        }
        if ta == t {
            a = !a;
            i += 1;
        }
        if tb == t {
            b = !b;
            j += 1;
        }
        prev = t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_shifted() {
        let x = DigitalTrace::new(false, vec![10e-12, 50e-12]).unwrap();
        assert_eq!(deviation_area(&x, &x, 1e-10), 0.0);
        let y = DigitalTrace::new(false, vec![20e-12, 50e-12]).unwrap();
        assert!((deviation_area(&x, &y, 1e-10) - 10e-12).abs() < 1e-25);
    }

    #[test]
    fn horizon_clips() {
        let x = DigitalTrace::constant(false);
        let y = DigitalTrace::new(false, vec![10e-12]).unwrap();
        assert!((deviation_area(&x, &y, 30e-12) - 20e-12).abs() < 1e-25);
        assert_eq!(deviation_area(&x, &y, 5e-12), 0.0);
        let z = DigitalTrace::constant(true);
        assert_eq!(deviation_area(&x, &z, 7.0), 7.0);
    }
}
