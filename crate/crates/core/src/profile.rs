//! Mission power-demand profiles.
//!
//! A profile is a piecewise-constant (sample-and-hold) signal: the demand of
//! sample `i` holds over `[t_i, t_{i+1})`. The final sample marks the end of
//! the mission at `t_last`; its value only matters for the peak.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_fraction, ensure_non_negative, ensure_positive, Error, Result};
use crate::sigfig::{format_sig, DIGITS};

/// CSV header line, exact.
pub const CSV_HEADER: &str = "time_s,power_w";

/// Default idle margin above the compute-only base load.
pub const IDLE_MARGIN_W: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Seconds since mission start.
    pub time: f64,
    /// Electrical demand in watts.
    pub power: f64,
}

impl Sample {
    pub fn new(time: f64, power: f64) -> Self {
        Self { time, power }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    name: String,
    samples: Vec<Sample>,
}

impl PowerProfile {
    /// Builds a validated profile.
    ///
    /// Times must start at zero and increase strictly; demands must be finite
    /// and non-negative; at least two samples are required.
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self> {
        validate_samples(&samples)?;
        Ok(Self {
            name: name.into(),
            samples,
        })
    }

    /// Constant demand from `0` to `duration` seconds.
    pub fn constant(name: impl Into<String>, power: f64, duration: f64) -> Result<Self> {
        ensure_positive("duration", duration)?;
        Self::new(
            name,
            vec![Sample::new(0.0, power), Sample::new(duration, power)],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Mission length in seconds (time of the last sample).
    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].time
    }

    /// Hold-interpolated demand at `t`. Clamps to the first/last sample
    /// outside the profile range.
    pub fn demand_at(&self, t: f64) -> f64 {
        let idx = self.samples.partition_point(|s| s.time <= t);
        self.samples[idx.saturating_sub(1)].power
    }

    /// Hold-integrated energy in watt-hours.
    pub fn energy_wh(&self) -> f64 {
        hold_energy_joules(&self.samples) / 3600.0
    }

    pub fn stats(&self, idle_threshold: f64) -> ProfileStats {
        profile_stats(self, idle_threshold)
    }
}

fn validate_samples(samples: &[Sample]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::validation(
            "profile",
            format!("needs at least 2 samples, got {}", samples.len()),
        ));
    }
    if samples[0].time != 0.0 {
        return Err(Error::validation(
            "profile",
            format!("first sample must be at time 0, got {}", samples[0].time),
        ));
    }
    for (i, s) in samples.iter().enumerate() {
        if !s.time.is_finite() {
            return Err(Error::validation(
                "profile",
                format!("sample {i}: time is not finite"),
            ));
        }
        if !(s.power.is_finite() && s.power >= 0.0) {
            return Err(Error::validation(
                "profile",
                format!("sample {i}: power must be finite and >= 0, got {}", s.power),
            ));
        }
        if i > 0 && s.time <= samples[i - 1].time {
            return Err(Error::validation(
                "profile",
                format!(
                    "sample {i}: non-increasing time ({} after {})",
                    s.time,
                    samples[i - 1].time
                ),
            ));
        }
    }
    Ok(())
}

fn hold_energy_joules(samples: &[Sample]) -> f64 {
    samples
        .windows(2)
        .map(|w| w[0].power * (w[1].time - w[0].time))
        .sum()
}

/// Summary of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileStats {
    #[serde(
        rename = "average_power_w",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub average_power: f64,
    #[serde(rename = "peak_power_w", serialize_with = "crate::sigfig::serde6::f64")]
    pub peak_power: f64,
    #[serde(serialize_with = "crate::sigfig::serde6::f64")]
    pub idle_fraction: f64,
    #[serde(rename = "duration_s", serialize_with = "crate::sigfig::serde6::f64")]
    pub duration: f64,
    #[serde(rename = "energy_wh", serialize_with = "crate::sigfig::serde6::f64")]
    pub energy: f64,
    #[serde(
        rename = "idle_threshold_w",
        serialize_with = "crate::sigfig::serde6::f64"
    )]
    pub idle_threshold: f64,
}

/// Time-weighted statistics under sample-and-hold.
///
/// `idle_fraction` is the share of mission time spent at or below
/// `idle_threshold`; the peak is the largest sample value.
pub fn profile_stats(p: &PowerProfile, idle_threshold: f64) -> ProfileStats {
    let duration = p.duration();
    let energy_j = hold_energy_joules(&p.samples);
    let idle_time: f64 = p
        .samples
        .windows(2)
        .filter(|w| w[0].power <= idle_threshold)
        .map(|w| w[1].time - w[0].time)
        .sum();
    let peak_power = p.samples.iter().map(|s| s.power).fold(0.0, f64::max);
    ProfileStats {
        // The hold average can exceed the peak only through rounding.
        average_power: (energy_j / duration).min(peak_power),
        peak_power,
        idle_fraction: (idle_time / duration).clamp(0.0, 1.0),
        duration,
        energy: energy_j / 3600.0,
        idle_threshold,
    }
}

/// Resamples onto a uniform grid of step `dt`.
///
/// Each output cell carries the time-average of the input over that cell, so
/// the hold-integrated energy is preserved. A final sample is emitted at the
/// original end time, giving a shorter last cell when `dt` does not divide the
/// duration.
pub fn resample(p: &PowerProfile, dt: f64) -> Result<PowerProfile> {
    ensure_positive("dt", dt)?;
    let end = p.duration();
    let src = &p.samples;
    let mut out = Vec::with_capacity((end / dt).ceil() as usize + 1);
    let mut cursor = 0usize;
    let mut k = 0u64;
    loop {
        let start = k as f64 * dt;
        if start >= end {
            break;
        }
        let stop = ((k + 1) as f64 * dt).min(end);
        while cursor + 1 < src.len() && src[cursor + 1].time <= start {
            cursor += 1;
        }
        // Single source piece covering the whole cell: copy it verbatim.
        let power = if cursor + 1 >= src.len() || src[cursor + 1].time >= stop {
            src[cursor].power
        } else {
            let mut acc = 0.0;
            let mut i = cursor;
            while i + 1 < src.len() && src[i].time < stop {
                let a = src[i].time.max(start);
                let b = src[i + 1].time.min(stop);
                if b > a {
                    acc += src[i].power * (b - a);
                }
                i += 1;
            }
            acc / (stop - start)
        };
        out.push(Sample::new(start, power));
        k += 1;
    }
    out.push(Sample::new(end, src[src.len() - 1].power));
    PowerProfile::new(p.name.clone(), out)
}

/// Parameters of the rectangular walking-gait generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Compute and sensor load that is always on, watts.
    pub base_load: f64,
    /// Seconds per gait cycle.
    pub gait_period: f64,
    /// Fraction of each cycle spent in the powered stride.
    pub stride_duty: f64,
    /// Mechanical servo output during the stride, watts.
    pub mech_peak: f64,
    /// Electrical-to-mechanical servo efficiency.
    pub servo_efficiency: f64,
    /// Profile length in seconds.
    pub duration: f64,
    /// Grid points per cycle; the step is `gait_period / samples_per_period`.
    pub samples_per_period: usize,
}

impl Default for GaitParams {
    /// 40 W base load, 10 W mechanical stride peak at 50 % servo efficiency
    /// and 25 % duty: a 45 W average with 60 W strides over one hour.
    fn default() -> Self {
        Self {
            base_load: 40.0,
            gait_period: 1.0,
            stride_duty: 0.25,
            mech_peak: 10.0,
            servo_efficiency: 0.5,
            duration: 3600.0,
            samples_per_period: 50,
        }
    }
}

impl GaitParams {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("base_load", self.base_load)?;
        ensure_non_negative("mech_peak", self.mech_peak)?;
        ensure_fraction("servo_efficiency", self.servo_efficiency)?;
        ensure_fraction("stride_duty", self.stride_duty)?;
        ensure_positive("gait_period", self.gait_period)?;
        ensure_positive("duration", self.duration)?;
        if self.samples_per_period == 0 {
            return Err(Error::validation("samples_per_period", "must be >= 1"));
        }
        Ok(())
    }

    /// Electrical demand while striding.
    pub fn stride_demand(&self) -> f64 {
        self.base_load + self.mech_peak / self.servo_efficiency
    }

    /// Closed-form average over whole cycles.
    pub fn average_demand(&self) -> f64 {
        self.base_load + self.stride_duty * self.mech_peak / self.servo_efficiency
    }
}

/// Rectangular gait wave: `stride_demand` for the first `stride_duty` of every
/// cycle and `base_load` otherwise.
///
/// Samples sit on a fixed grid of `gait_period / samples_per_period`, with an
/// extra breakpoint at the stride's end whenever it falls between grid points,
/// so the hold integral is exact for any duty.
pub fn synthesize_walk_profile(params: &GaitParams) -> Result<PowerProfile> {
    params.validate()?;
    let period = params.gait_period;
    let n = params.samples_per_period;
    let duty = params.stride_duty;
    let eps = 1e-9;

    // Phase offsets within one cycle, as fractions of the period.
    let mut phases: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    if duty < 1.0 && !phases.iter().any(|&f| (f - duty).abs() < eps) {
        let at = phases.partition_point(|&f| f < duty);
        phases.insert(at, duty);
    }
    let level = |phase: f64| {
        if phase < duty - eps {
            params.stride_demand()
        } else {
            params.base_load
        }
    };

    let mut samples = Vec::new();
    let mut cycle = 0u64;
    'outer: loop {
        let cycle_start = cycle as f64 * period;
        for &phase in &phases {
            let t = cycle_start + phase * period;
            if t >= params.duration - eps * period {
                break 'outer;
            }
            samples.push(Sample::new(t, level(phase)));
        }
        cycle += 1;
    }
    let end_phase = (params.duration / period).fract();
    samples.push(Sample::new(params.duration, level(end_phase)));
    PowerProfile::new(
        format!("walk-{}W", format_sig(params.average_demand(), DIGITS)),
        samples,
    )
}

/// Reads the `time_s,power_w` CSV format. Blank lines are ignored and CRLF
/// line endings are accepted.
pub fn load_profile<R: BufRead>(reader: R, name: impl Into<String>) -> Result<PowerProfile> {
    let mut samples = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if !saw_header {
            if line.trim_start_matches('\u{feff}') != CSV_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header `{CSV_HEADER}`, got `{line}`"),
                });
            }
            saw_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let (t, p) = line.split_once(',').ok_or_else(|| {
            parse_err(format!("expected two comma-separated fields, got `{line}`"))
        })?;
        if p.contains(',') {
            return Err(parse_err(format!("expected two fields, got `{line}`")));
        }
        let time: f64 = t
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad time value `{t}`")))?;
        let power: f64 = p
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad power value `{p}`")))?;
        samples.push(Sample::new(time, power));
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            message: format!("missing header `{CSV_HEADER}`"),
        });
    }
    PowerProfile::new(name, samples)
}

/// Writes the profile as CSV with LF line endings.
///
/// Power uses six significant digits. Time uses six as well unless that
/// would merge neighbouring samples, in which case the whole column gets the
/// fewest extra digits that keep it strictly increasing.
pub fn write_profile<W: Write>(p: &PowerProfile, mut out: W) -> std::io::Result<()> {
    let time_digits = time_column_digits(&p.samples);
    writeln!(out, "{CSV_HEADER}")?;
    for s in &p.samples {
        writeln!(
            out,
            "{},{}",
            format_sig(s.time, time_digits),
            format_sig(s.power, DIGITS)
        )?;
    }
    Ok(())
}

pub fn profile_to_csv(p: &PowerProfile) -> String {
    let mut buf = Vec::new();
    write_profile(p, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

fn time_column_digits(samples: &[Sample]) -> usize {
    (DIGITS..=17)
        .find(|&d| {
            let rounded: Vec<f64> = samples
                .iter()
                .map(|s| {
                    format_sig(s.time, d)
                        .parse()
                        .expect("formatted number parses")
                })
                .collect();
            rounded.windows(2).all(|w| w[1] > w[0])
        })
        .unwrap_or(17)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn load(text: &str) -> Result<PowerProfile> {
        load_profile(text.as_bytes(), "test")
    }

    #[test]
    fn loads_two_sample_constant() {
        let p = load("time_s,power_w\n0,40\n1,40").unwrap();
        assert_eq!(
            p.samples(),
            &[Sample::new(0.0, 40.0), Sample::new(1.0, 40.0)]
        );
    }

    #[test]
    fn accepts_crlf_and_trailing_blank_line() {
        let p = load("time_s,power_w\r\n0,40\r\n2.5,60\r\n\r\n").unwrap();
        assert_eq!(p.duration(), 2.5);
    }

    #[test]
    fn rejects_non_increasing_time() {
        let err = load("time_s,power_w\n0,40\n0,50").unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
        assert!(err.to_string().contains("non-increasing"));
    }

    #[test]
    fn rejects_negative_power() {
        let err = load("time_s,power_w\n0,40\n1,-3").unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let err = load("time_s,power_w\n0,40\n1;40\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let err = load("time_s,power_w\n0,40\n1,forty\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn rejects_wrong_header_and_short_profiles() {
        assert!(matches!(
            load("t,p\n0,1\n1,1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            load("time_s,power_w\n0,40\n"),
            Err(Error::Validation { .. })
        ));
        assert!(matches!(
            load("time_s,power_w\n1,40\n2,40"),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn demand_holds_between_samples() {
        let p = PowerProfile::new(
            "x",
            vec![
                Sample::new(0.0, 1.0),
                Sample::new(2.0, 5.0),
                Sample::new(3.0, 9.0),
            ],
        )
        .unwrap();
        assert_eq!(p.demand_at(0.0), 1.0);
        assert_eq!(p.demand_at(1.999), 1.0);
        assert_eq!(p.demand_at(2.0), 5.0);
        assert_eq!(p.demand_at(10.0), 9.0);
    }

    #[test]
    fn constant_profile_stats() {
        let p = PowerProfile::constant("c", 45.0, 10.0 * 3600.0).unwrap();
        let s = profile_stats(&p, 41.0);
        assert_eq!(s.average_power, 45.0);
        assert_eq!(s.peak_power, 45.0);
        assert_relative_eq!(s.energy, 450.0, max_relative = 1e-12);
        assert_eq!(s.idle_fraction, 0.0);
    }

    #[test]
    fn two_level_profile_stats() {
        let p = PowerProfile::new(
            "two-level",
            vec![
                Sample::new(0.0, 40.0),
                Sample::new(10.0, 250.0),
                Sample::new(20.0, 40.0),
            ],
        )
        .unwrap();
        let s = profile_stats(&p, 41.0);
        assert_eq!(s.average_power, 145.0);
        assert_eq!(s.peak_power, 250.0);
        assert_eq!(s.idle_fraction, 0.5);
    }

    #[test]
    fn zero_mech_peak_is_base_load() {
        let params = GaitParams {
            mech_peak: 0.0,
            ..GaitParams::default()
        };
        let p = synthesize_walk_profile(&params).unwrap();
        assert!(p.samples().iter().all(|s| s.power == 40.0));
    }

    #[test]
    fn stride_demand_accounts_for_servo_efficiency() {
        let params = GaitParams {
            base_load: 40.0,
            mech_peak: 10.0,
            servo_efficiency: 0.5,
            ..GaitParams::default()
        };
        let p = synthesize_walk_profile(&params).unwrap();
        assert_eq!(p.samples()[0].power, 60.0);
        assert_eq!(p.stats(41.0).peak_power, 60.0);
    }

    #[test]
    fn full_duty_walk_is_constant_45() {
        let params = GaitParams {
            mech_peak: 2.5,
            stride_duty: 1.0,
            duration: 600.0,
            ..GaitParams::default()
        };
        let p = synthesize_walk_profile(&params).unwrap();
        let s = p.stats(41.0);
        assert_relative_eq!(s.average_power, 45.0, max_relative = 1e-12);
        assert_eq!(s.peak_power, 45.0);
    }

    #[test]
    fn synthesis_rejects_bad_params() {
        for bad in [
            GaitParams {
                duration: 0.0,
                ..GaitParams::default()
            },
            GaitParams {
                gait_period: -1.0,
                ..GaitParams::default()
            },
            GaitParams {
                servo_efficiency: 0.0,
                ..GaitParams::default()
            },
            GaitParams {
                base_load: -1.0,
                ..GaitParams::default()
            },
        ] {
            assert!(matches!(
                synthesize_walk_profile(&bad),
                Err(Error::Validation { .. })
            ));
        }
    }

    #[test]
    fn partial_final_cycle_ends_at_duration() {
        let params = GaitParams {
            duration: 2.3,
            ..GaitParams::default()
        };
        let p = synthesize_walk_profile(&params).unwrap();
        assert_eq!(p.duration(), 2.3);
    }

    #[test]
    fn resample_rejects_non_positive_step() {
        let p = PowerProfile::constant("c", 10.0, 5.0).unwrap();
        assert!(resample(&p, 0.0).is_err());
        assert!(resample(&p, -1.0).is_err());
    }

    #[test]
    fn resample_constant_keeps_level_and_energy() {
        let p = PowerProfile::constant("c", 45.0, 100.0).unwrap();
        for dt in [0.3, 1.0, 7.0, 250.0] {
            let r = resample(&p, dt).unwrap();
            assert!(r.samples().iter().all(|s| s.power == 45.0));
            assert_relative_eq!(r.energy_wh(), p.energy_wh(), max_relative = 1e-12);
        }
    }

    #[test]
    fn resample_is_idempotent() {
        let p = synthesize_walk_profile(&GaitParams {
            duration: 13.7,
            stride_duty: 0.37,
            ..GaitParams::default()
        })
        .unwrap();
        for dt in [0.013, 0.1, 0.77] {
            let once = resample(&p, dt).unwrap();
            let twice = resample(&once, dt).unwrap();
            assert_eq!(once, twice, "dt = {dt}");
        }
    }

    #[test]
    fn csv_emit_uses_six_digits() {
        let p = PowerProfile::new(
            "x",
            vec![Sample::new(0.0, 2.0 / 45.0), Sample::new(1.25, 123.456789)],
        )
        .unwrap();
        assert_eq!(
            profile_to_csv(&p),
            "time_s,power_w\n0,0.0444444\n1.25,123.457\n"
        );
    }

    #[test]
    fn csv_time_column_widens_instead_of_merging_samples() {
        let p = PowerProfile::new(
            "x",
            vec![
                Sample::new(0.0, 1.0),
                Sample::new(100000.01, 1.0),
                Sample::new(100000.02, 1.0),
            ],
        )
        .unwrap();
        let text = profile_to_csv(&p);
        let back = load(&text).unwrap();
        assert_eq!(back.samples().len(), 3);
        assert_eq!(back.samples()[2].time, 100000.02);
    }
}
