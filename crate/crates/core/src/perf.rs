//! Analytical energy / throughput / density model.
//!
//! Latency comes from the MAC cycle formula scaled so that one 1-bit pass
//! takes `cycles_per_mac_pass` clock cycles; every other mode scales by the
//! same factor. A CAM lookup costs one cycle. Energy is linear in the op
//! tallies and scales with (v / v_nominal)².

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::{MacResult, PrecisionMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerfError {
    #[error("voltage {v} V outside [{min}, {max}] V")]
    VoltageOutOfRange { v: f64, min: f64, max: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub e_pim_fj_per_bit: f64,
    pub e_cam_fj_per_search_bit: f64,
    pub f_nominal_mhz: f64,
    pub v_nominal: f64,
    pub v_range: [f64; 2],
    /// Operating voltage.
    pub voltage: f64,
    /// Clock cycles per 1-bit MAC pass (calibrated).
    pub cycles_per_mac_pass: f64,
    /// Effective macro area including periphery (calibrated).
    pub macro_area_mm2: f64,
    pub cell_area_um2: f64,
    /// Fraction of billed PIM bit operations that dissipate the per-bit
    /// energy in a sustained workload (calibrated).
    pub pim_activity: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            e_pim_fj_per_bit: 17.65,
            e_cam_fj_per_search_bit: 0.55,
            f_nominal_mhz: 350.0,
            v_nominal: 0.9,
            v_range: [0.8, 1.2],
            voltage: 0.9,
            cycles_per_mac_pass: 1.486,
            macro_area_mm2: 0.4214,
            cell_area_um2: 2.63,
            pim_activity: 0.15565,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), PerfError> {
        let positive = [
            ("e_pim_fj_per_bit", self.e_pim_fj_per_bit),
            ("e_cam_fj_per_search_bit", self.e_cam_fj_per_search_bit),
            ("f_nominal_mhz", self.f_nominal_mhz),
            ("v_nominal", self.v_nominal),
            ("voltage", self.voltage),
            ("cycles_per_mac_pass", self.cycles_per_mac_pass),
            ("macro_area_mm2", self.macro_area_mm2),
            ("cell_area_um2", self.cell_area_um2),
            ("pim_activity", self.pim_activity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PerfError::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        let [lo, hi] = self.v_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(PerfError::InvalidParam(format!("v_range [{lo}, {hi}]")));
        }
        self.check_voltage(self.voltage)
    }

    fn check_voltage(&self, v: f64) -> Result<(), PerfError> {
        let [min, max] = self.v_range;
        if (min..=max).contains(&v) {
            Ok(())
        } else {
            Err(PerfError::VoltageOutOfRange { v, min, max })
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PerfError> {
        let p: Self = toml::from_str(text).map_err(|e| PerfError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("params serialise")
    }

    /// Copy running at voltage `v`.
    pub fn at_voltage(&self, v: f64) -> Result<Self, PerfError> {
        self.check_voltage(v)?;
        Ok(Self {
            voltage: v,
            ..self.clone()
        })
    }

    fn energy_scale(&self) -> f64 {
        (self.voltage / self.v_nominal).powi(2)
    }

    fn f_mhz(&self) -> f64 {
        self.f_nominal_mhz * self.voltage / self.v_nominal
    }

    /// Raw bit-cell area of a 64×64 array.
    pub fn cell_array_area_mm2(&self) -> f64 {
        4096.0 * self.cell_area_um2 * 1e-6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DvfsPoint {
    pub f_mhz: f64,
    pub energy_scale: f64,
}

/// f = f_nom·v/v_nom, energy_scale = (v/v_nom)².
pub fn dvfs(v: f64, params: &EnergyParams) -> Result<DvfsPoint, PerfError> {
    params.check_voltage(v)?;
    let r = v / params.v_nominal;
    Ok(DvfsPoint {
        f_mhz: params.f_nominal_mhz * r,
        energy_scale: r * r,
    })
}

/// PIM energy in fJ at the operating voltage.
pub fn energy_pim(bit_ops: u64, params: &EnergyParams) -> f64 {
    bit_ops as f64 * params.e_pim_fj_per_bit * params.energy_scale()
}

/// CAM energy in fJ at the operating voltage.
pub fn energy_cam(searches: u64, bits_per_search: u64, params: &EnergyParams) -> f64 {
    searches as f64 * bits_per_search as f64 * params.e_cam_fj_per_search_bit * params.energy_scale()
}

/// Clock cycles for one pass in `mode`.
pub fn cycles_per_pass(mode: PrecisionMode, params: &EnergyParams) -> f64 {
    params.cycles_per_mac_pass * cycle_scale(mode)
}

fn cycle_scale(mode: PrecisionMode) -> f64 {
    mode.cycles_per_pass() as f64 / PrecisionMode::binary().cycles_per_pass() as f64
}

/// Sustained TOPS with every lane busy.
pub fn throughput(mode: PrecisionMode, params: &EnergyParams) -> f64 {
    mode.lanes() as f64 * 2.0 * params.f_mhz() / cycles_per_pass(mode, params) * 1e-6
}

/// Bit-level tallies collected from the MAC engine and LUTs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OpTally {
    /// Arithmetic ops (multiply + add per product).
    pub ops: u64,
    pub pim_bit_ops: u64,
    pub cam_search_bits: u64,
    pub cam_searches: u64,
    /// Formula cycles (see [`PrecisionMode::cycles_per_pass`]).
    pub mac_cycles: u64,
}

impl OpTally {
    pub fn record_mac(&mut self, r: &MacResult, mode: PrecisionMode) {
        let n2 = u64::from(mode.bits()).pow(2);
        self.ops += r.bit_op_count / n2;
        self.pim_bit_ops += r.bit_op_count;
        self.mac_cycles += r.cycle_count;
    }

    /// Removes `count` zero-weight products from the tally; they still sit
    /// in the array but need not be computed.
    pub fn skip_products(&mut self, count: u64, mode: PrecisionMode) {
        let n2 = u64::from(mode.bits()).pow(2);
        self.ops = self.ops.saturating_sub(2 * count);
        self.pim_bit_ops = self.pim_bit_ops.saturating_sub(2 * n2 * count);
    }

    pub fn record_lookups(&mut self, lookups: u64, search_bits: u64) {
        self.cam_searches += lookups;
        self.cam_search_bits += search_bits;
    }

    /// `passes` fully occupied passes in `mode`.
    pub fn sustained(mode: PrecisionMode, passes: u64) -> Self {
        Self {
            ops: passes * 2 * mode.lanes() as u64,
            pim_bit_ops: passes * crate::mac::BIT_OPS_PER_PASS,
            mac_cycles: passes * mode.cycles_per_pass(),
            ..Self::default()
        }
    }

    pub fn merge(&mut self, other: &OpTally) {
        self.ops += other.ops;
        self.pim_bit_ops += other.pim_bit_ops;
        self.cam_search_bits += other.cam_search_bits;
        self.cam_searches += other.cam_searches;
        self.mac_cycles += other.mac_cycles;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfReport {
    pub tops: f64,
    pub tops_per_watt: f64,
    pub tops_per_mm2: f64,
    pub energy_pj: f64,
    pub power_mw: f64,
    pub latency_us: f64,
    pub voltage: f64,
    pub f_mhz: f64,
    pub op_counts: OpTally,
}

impl PerfReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub const CSV_HEADER: &'static str = "tops,tops_per_watt,tops_per_mm2,energy_pj,power_mw,latency_us,voltage,f_mhz,ops,pim_bit_ops,cam_search_bits,cam_searches,mac_cycles";

    pub fn to_csv(&self) -> String {
        let o = &self.op_counts;
        format!(
            "{}\n{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            Self::CSV_HEADER,
            self.tops,
            self.tops_per_watt,
            self.tops_per_mm2,
            self.energy_pj,
            self.power_mw,
            self.latency_us,
            self.voltage,
            self.f_mhz,
            o.ops,
            o.pim_bit_ops,
            o.cam_search_bits,
            o.cam_searches,
            o.mac_cycles
        )
    }
}

pub fn report(workload: &OpTally, params: &EnergyParams) -> PerfReport {
    let f_mhz = params.f_mhz();
    let cycles = workload.mac_cycles as f64 * params.cycles_per_mac_pass
        / PrecisionMode::binary().cycles_per_pass() as f64
        + workload.cam_searches as f64;
    let latency_us = cycles / f_mhz;
    let energy_fj = params.pim_activity * energy_pim(workload.pim_bit_ops, params)
        + energy_cam(workload.cam_search_bits, 1, params);
    let energy_pj = energy_fj * 1e-3;
    let (tops, power_mw) = if latency_us > 0.0 {
        (
            workload.ops as f64 / latency_us * 1e-6,
            energy_pj / latency_us * 1e-3,
        )
    } else {
        (0.0, 0.0)
    };
    let tops_per_watt = if power_mw > 0.0 { tops / (power_mw * 1e-3) } else { 0.0 };
    PerfReport {
        tops,
        tops_per_watt,
        tops_per_mm2: tops / params.macro_area_mm2,
        energy_pj,
        power_mw,
        latency_us,
        voltage: params.voltage,
        f_mhz,
        op_counts: *workload,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn energy_units() {
        let p = EnergyParams::default();
        assert_eq!(energy_pim(0, &p), 0.0);
        assert!(close(energy_pim(1, &p), 17.65, 1e-12));
        assert!(close(energy_pim(4096, &p), 72_294.4, 1e-6));
        assert!(close(energy_cam(1, 64, &p), 35.2, 1e-9));
        assert!(close(energy_cam(16, 4, &p), 35.2, 1e-9));
        assert_eq!(energy_cam(0, 64, &p), 0.0);
    }

    #[test]
    fn headlines() {
        let p = EnergyParams::default();
        let r = report(&OpTally::sustained(PrecisionMode::binary(), 1000), &p);
        assert_eq!(format!("{:.2}", r.tops), "1.93");
        assert_eq!(format!("{:.0}", r.tops_per_watt), "364");
        assert_eq!(format!("{:.2}", r.tops_per_mm2), "4.58");
        assert!(close(throughput(PrecisionMode::binary(), &p), r.tops, 1e-12));
        assert!(close(r.tops_per_watt * r.power_mw * 1e-3, r.tops, 1e-12));
    }

    #[test]
    fn throughput_scaling() {
        let p = EnergyParams::default();
        let i8m = PrecisionMode::signed(8).unwrap();
        let i4m = PrecisionMode::signed(4).unwrap();
        let ratio = throughput(i8m, &p) / throughput(i4m, &p);
        let expected = (64.0 / 256.0) * (19.0 / 68.0);
        assert!(close(ratio, expected, 1e-12));
        let half = EnergyParams {
            f_nominal_mhz: 175.0,
            ..p.clone()
        };
        assert!(close(throughput(i8m, &half), throughput(i8m, &p) / 2.0, 1e-12));
    }

    #[test]
    fn dvfs_points() {
        let p = EnergyParams::default();
        assert_eq!(
            dvfs(0.9, &p).unwrap(),
            DvfsPoint {
                f_mhz: 350.0,
                energy_scale: 1.0
            }
        );
        let hi = dvfs(1.2, &p).unwrap();
        assert!(close(hi.f_mhz, 466.666_666, 1e-3));
        assert!(close(hi.energy_scale, 1.777_777, 1e-5));
        assert!(matches!(dvfs(0.7, &p), Err(PerfError::VoltageOutOfRange { .. })));
        let wide = EnergyParams {
            v_range: [0.6, 1.2],
            ..p
        };
        let low = dvfs(0.9 / 2f64.sqrt(), &wide).unwrap();
        assert!(close(low.energy_scale, 0.5, 1e-12));
    }

    #[test]
    fn zero_workload() {
        let r = report(&OpTally::default(), &EnergyParams::default());
        assert_eq!((r.tops, r.tops_per_watt, r.energy_pj, r.power_mw), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn toml_round_trip() {
        let p = EnergyParams::default();
        let q = EnergyParams::from_toml_str(&p.to_toml_string()).unwrap();
        assert_eq!(p, q);
        let partial = EnergyParams::from_toml_str("voltage = 1.0\n").unwrap();
        assert_eq!(partial.voltage, 1.0);
        assert!(EnergyParams::from_toml_str("voltage = 2.0\n").is_err());
        assert!(EnergyParams::from_toml_str("bogus = 1\n").is_err());
        assert!(EnergyParams::from_toml_str("e_pim_fj_per_bit = -1.0\n").is_err());
    }
}
