//! Time-dependent source waveforms.

use crate::float::Scalar;

/// Kinematics of a periodic back-and-forth stroke with a trapezoidal velocity
/// profile: accelerate for a quarter of the moving time, cruise for half,
/// decelerate for a quarter, then dwell. The carriage swings symmetrically
/// between -stroke/2 and +stroke/2, so one period covers two strokes and the
/// net displacement per period is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeProfile<T> {
    /// Travel per sweep (peak-to-peak excursion), in m.
    pub stroke: T,
    /// Repetition frequency of the full there-and-back cycle, in Hz.
    pub frequency_hz: T,
    /// Fraction of each half-period spent at rest at the turnaround.
    pub dwell_fraction: T,
}

impl<T: Scalar> StrokeProfile<T> {
    fn timing(&self) -> (T, T, T, T) {
        let half = T::of(0.5) / self.frequency_hz;
        let moving = half * (T::one() - self.dwell_fraction);
        let ramp = moving * T::of(0.25);
        let peak_velocity = self.stroke / (moving - ramp);
        (half, moving, ramp, peak_velocity)
    }

    /// Signed phase-local time: (direction, time into the half-period).
    fn local(&self, t: T) -> (T, T) {
        let period = T::one() / self.frequency_hz;
        let half = period * T::of(0.5);
        let tau = t - (t / period).floor() * period;
        if tau < half {
            (T::one(), tau)
        } else {
            (-T::one(), tau - half)
        }
    }

    pub fn acceleration(&self, t: T) -> T {
        let (_, moving, ramp, peak_velocity) = self.timing();
        let (dir, u) = self.local(t);
        let a = peak_velocity / ramp;
        let value = if u < ramp {
            a
        } else if u < moving - ramp {
            T::zero()
        } else if u < moving {
            -a
        } else {
            T::zero()
        };
        dir * value
    }

    pub fn velocity(&self, t: T) -> T {
        let (_, moving, ramp, peak_velocity) = self.timing();
        let (dir, u) = self.local(t);
        let a = peak_velocity / ramp;
        let value = if u < ramp {
            a * u
        } else if u < moving - ramp {
            peak_velocity
        } else if u < moving {
            peak_velocity - a * (u - (moving - ramp))
        } else {
            T::zero()
        };
        dir * value
    }

    /// Base position; starts at -stroke/2 and sweeps to +stroke/2 in the
    /// first half-period.
    pub fn position(&self, t: T) -> T {
        let (_, moving, ramp, peak_velocity) = self.timing();
        let (dir, u) = self.local(t);
        let a = peak_velocity / ramp;
        let half_stroke = self.stroke * T::of(0.5);
        let travelled = if u < ramp {
            a * u * u * T::of(0.5)
        } else if u < moving - ramp {
            a * ramp * ramp * T::of(0.5) + peak_velocity * (u - ramp)
        } else if u < moving {
            // Deceleration mirrors the ramp-up.
            let remaining = moving - u;
            self.stroke - a * remaining * remaining * T::of(0.5)
        } else {
            self.stroke
        };
        dir * (travelled - half_stroke)
    }

    pub fn peak_velocity(&self) -> T {
        self.timing().3
    }

    pub fn peak_acceleration(&self) -> T {
        let (_, _, ramp, peak_velocity) = self.timing();
        peak_velocity / ramp
    }
}

/// Analytic source value as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform<T> {
    Constant { value: T },
    Sine { amplitude: T, angular_frequency: T, phase: T },
    /// Acceleration of a stroke profile scaled by `scale` (e.g. `-m` for an
    /// inertial force source).
    StrokeAcceleration { profile: StrokeProfile<T>, scale: T },
}

impl<T: Scalar> Waveform<T> {
    pub fn value(&self, t: T) -> T {
        match self {
            Waveform::Constant { value } => *value,
            Waveform::Sine {
                amplitude,
                angular_frequency,
                phase,
            } => *amplitude * (*angular_frequency * t + *phase).sin(),
            Waveform::StrokeAcceleration { profile, scale } => *scale * profile.acceleration(t),
        }
    }

    /// Fundamental frequency of the waveform, if periodic.
    pub fn frequency_hz(&self) -> Option<T> {
        match self {
            Waveform::Constant { .. } => None,
            Waveform::Sine {
                angular_frequency, ..
            } => Some(*angular_frequency / (T::of(2.0) * T::of(std::f64::consts::PI))),
            Waveform::StrokeAcceleration { profile, .. } => Some(profile.frequency_hz),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> StrokeProfile<f64> {
        StrokeProfile {
            stroke: 0.25,
            frequency_hz: 2.0,
            dwell_fraction: 0.1,
        }
    }

    #[test]
    fn stroke_covers_the_full_travel() {
        let p = profile();
        assert!((p.position(0.0) + 0.125).abs() < 1e-12);
        // End of the first half-period: at +stroke/2.
        assert!((p.position(0.2499999) - 0.125).abs() < 1e-6);
        // Back home after a full period.
        assert!((p.position(0.4999999) + 0.125).abs() < 1e-6);
    }

    #[test]
    fn velocity_is_the_derivative_of_position() {
        let p = profile();
        let h = 1e-7;
        for i in 0..500 {
            let t = 0.001 + i as f64 * 0.001;
            let numeric = (p.position(t + h) - p.position(t - h)) / (2.0 * h);
            let analytic = p.velocity(t);
            assert!(
                (numeric - analytic).abs() < 2e-4 * p.peak_velocity().max(1.0),
                "t={t}: numeric {numeric} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn acceleration_integrates_to_velocity() {
        let p = profile();
        let dt = 1e-6;
        let mut v = 0.0;
        let mut t = 0.0;
        while t < 0.25 {
            v += 0.5 * dt * (p.acceleration(t) + p.acceleration(t + dt));
            t += dt;
        }
        assert!((v - p.velocity(0.25 - 1e-9)).abs() < 1e-3);
    }

    #[test]
    fn net_displacement_per_period_is_zero() {
        let p = profile();
        assert!((p.position(0.5 - 1e-12) - p.position(0.0)).abs() < 1e-6);
    }
}
