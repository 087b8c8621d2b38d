//! Plan and scenario files: sectioned `key = value` text.
//!
//! Format:
//!
//! ```text
//! # comment
//! [scenario]
//! n_elements = 64
//! tx_power_dbm = 30
//!
//! [clutter.1]
//! theta_h_deg = -20
//! ...
//!
//! [plan]
//! sweep_param = tx_power_dbm
//! sweep_values = 0, 10, 20, 30
//! schemes = proposed, bts
//! trials = 1000
//! seed = 1
//! output = results.csv
//! ```
//!
//! Physical quantities carry their unit in the key name (`_dbm`, `_dbsm`,
//! `_m`, `_deg`). Unknown sections or keys are hard errors so a misspelled
//! key can never fall back to a default silently.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::channel::{ClutterSpec, ScenarioConfig};
use crate::harness::scheme::{BenchmarkGeometry, SchemeId};
use crate::{dbm_to_linear, dbsm_to_m2, Error, Result};

/// Parameter a plan sweeps over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    TxPowerDbm,
    Sensors,
    Elements,
    DItM,
    DUiM,
}

impl SweepParam {
    pub fn key(&self) -> &'static str {
        match self {
            SweepParam::TxPowerDbm => "tx_power_dbm",
            SweepParam::Sensors => "m_sensors",
            SweepParam::Elements => "n_elements",
            SweepParam::DItM => "d_it_m",
            SweepParam::DUiM => "d_ui_m",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "tx_power_dbm" => Ok(SweepParam::TxPowerDbm),
            "m_sensors" => Ok(SweepParam::Sensors),
            "n_elements" => Ok(SweepParam::Elements),
            "d_it_m" => Ok(SweepParam::DItM),
            "d_ui_m" => Ok(SweepParam::DUiM),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter '{other}' \
                 (expected tx_power_dbm | m_sensors | n_elements | d_it_m | d_ui_m)"
            ))),
        }
    }
}

/// A fully parsed experiment plan.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub base: ScenarioConfig<f64>,
    pub bench: BenchmarkGeometry,
    pub sweep_param: SweepParam,
    pub sweep_values: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub trials: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Spectrum-search grid step, degrees.
    pub grid_step_deg: f64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.bench.validate()?;
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::InvalidConfig("sweep_values must be nonempty".into()));
        }
        if self.sweep_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sweep_values must be strictly increasing".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("schemes must be nonempty".into()));
        }
        if self.grid_step_deg <= 0.0 {
            return Err(Error::InvalidConfig("grid_step_deg must be positive".into()));
        }
        Ok(())
    }

    /// Scenario at one sweep point.
    pub fn at(&self, value: f64) -> Result<ScenarioConfig<f64>> {
        apply_sweep(&self.base, self.sweep_param, value)
    }
}

/// Apply one sweep value to a base scenario.
pub fn apply_sweep(
    base: &ScenarioConfig<f64>,
    param: SweepParam,
    value: f64,
) -> Result<ScenarioConfig<f64>> {
    let mut cfg = base.clone();
    match param {
        SweepParam::TxPowerDbm => cfg.tx_power = dbm_to_linear(value),
        SweepParam::Sensors => {
            cfg.layout.m = as_count(value, "m_sensors")?;
        }
        SweepParam::Elements => {
            cfg.layout.n_h = as_count(value, "n_elements")?;
            if cfg.snapshots < cfg.layout.n_h {
                cfg.snapshots = cfg.layout.n_h;
            }
        }
        SweepParam::DItM => {
            // keep the co-located controller geometry: the direct echo hop
            // moves with the target
            let ratio = base.d_ct / base.d_it;
            cfg.d_it = value;
            cfg.d_ct = value * ratio;
        }
        SweepParam::DUiM => {
            let moved = crate::harness::scheme::user_aided_config(base, value)?;
            cfg = moved;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn as_count(value: f64, name: &str) -> Result<usize> {
    if value < 1.0 || value.fract() != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "{name} sweep values must be positive integers, got {value}"
        )));
    }
    Ok(value as usize)
}

// ---------------------------------------------------------------------------
// file parsing
// ---------------------------------------------------------------------------

/// Raw sectioned key/value view of a file, with line numbers for error
/// reporting.
#[derive(Debug, Default)]
pub struct SectionedFile {
    pub file: String,
    /// section name -> key -> (line, value)
    pub sections: BTreeMap<String, BTreeMap<String, (usize, String)>>,
}

impl SectionedFile {
    pub fn parse(text: &str, file_name: &str) -> Result<Self> {
        let mut out = SectionedFile {
            file: file_name.to_string(),
            sections: BTreeMap::new(),
        };
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(out.err(line_no, "unterminated section header"));
                }
                let name = line[1..line.len() - 1].trim().to_string();
                if name.is_empty() {
                    return Err(out.err(line_no, "empty section name"));
                }
                out.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(out.err(line_no, "expected 'key = value'"));
            };
            let Some(section) = current.clone() else {
                return Err(out.err(line_no, "key outside of any [section]"));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let entry = out.sections.get_mut(&section).unwrap();
            if entry.insert(key.clone(), (line_no, value)).is_some() {
                return Err(out.err(line_no, &format!("duplicate key '{key}'")));
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn err(&self, line: usize, msg: &str) -> Error {
        Error::Parse {
            file: self.file.clone(),
            line,
            msg: msg.to_string(),
        }
    }
}

/// Typed accessor over one section that tracks which keys were consumed and
/// rejects leftovers.
struct SectionReader<'a> {
    file: &'a str,
    name: &'a str,
    entries: BTreeMap<String, (usize, String)>,
}

impl<'a> SectionReader<'a> {
    fn take(sf: &'a mut SectionedFile, name: &'a str) -> Option<Self> {
        sf.sections.remove(name).map(|entries| SectionReader {
            file: &sf.file,
            name,
            entries,
        })
    }

    fn get(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse_err(&self, line: usize, msg: String) -> Error {
        Error::Parse {
            file: self.file.to_string(),
            line,
            msg,
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse::<f64>()
                .map_err(|_| self.parse_err(line, format!("'{key}' expects a number, got '{v}'"))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse::<usize>()
                .map_err(|_| self.parse_err(line, format!("'{key}' expects an integer, got '{v}'"))),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse::<u64>()
                .map_err(|_| self.parse_err(line, format!("'{key}' expects an integer, got '{v}'"))),
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        self.get(key).map(|(_, v)| v).unwrap_or_else(|| default.to_string())
    }

    fn required(&mut self, key: &str) -> Result<(usize, String)> {
        self.get(key).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{}: section [{}] is missing required key '{key}'",
                self.file, self.name
            ))
        })
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some((line, v)) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    out.push(part.parse::<f64>().map_err(|_| {
                        self.parse_err(line, format!("'{key}' has a non-numeric entry '{part}'"))
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            return Err(Error::Parse {
                file: self.file.to_string(),
                line,
                msg: format!("unknown key '{key}' in section [{}]", self.name),
            });
        }
        Ok(())
    }
}

/// Read the `[scenario]` and `[clutter.*]` sections into a scenario,
/// starting from the table-anchored defaults.
pub fn scenario_from_sections(sf: &mut SectionedFile) -> Result<ScenarioConfig<f64>> {
    let mut cfg = ScenarioConfig::<f64>::default_scene();
    if let Some(mut s) = SectionReader::take(sf, "scenario") {
        cfg.layout.n_h = s.usize("n_elements", cfg.layout.n_h)?;
        cfg.layout.n_v = s.usize("n_elements_vertical", cfg.layout.n_v)?;
        cfg.layout.m = s.usize("m_sensors", cfg.layout.m)?;
        cfg.layout.wavelength = s.f64("wavelength_m", cfg.layout.wavelength)?;
        cfg.layout.d_i = s.f64("element_spacing_m", cfg.layout.d_i)?;
        cfg.layout.d_s = s.f64("sensor_spacing_m", cfg.layout.d_s)?;
        cfg.angles.theta_it_h = s.f64("theta_deg", cfg.angles.theta_it_h.to_degrees())?.to_radians();
        cfg.angles.theta_it_v =
            s.f64("theta_it_v_deg", cfg.angles.theta_it_v.to_degrees())?.to_radians();
        cfg.angles.theta_ci_h =
            s.f64("theta_ci_h_deg", cfg.angles.theta_ci_h.to_degrees())?.to_radians();
        cfg.angles.theta_ci_v =
            s.f64("theta_ci_v_deg", cfg.angles.theta_ci_v.to_degrees())?.to_radians();
        cfg.d_ci = s.f64("d_ci_m", cfg.d_ci)?;
        cfg.d_it = s.f64("d_it_m", cfg.d_it)?;
        cfg.d_ct = s.f64("d_ct_m", cfg.d_ct)?;
        cfg.kappa = dbsm_to_m2(s.f64("kappa_dbsm", 10.0 * cfg.kappa.log10())?);
        cfg.noise_power = dbm_to_linear(s.f64("noise_dbm", crate::linear_to_dbm(cfg.noise_power))?);
        cfg.tx_power = dbm_to_linear(s.f64("tx_power_dbm", crate::linear_to_dbm(cfg.tx_power))?);
        cfg.snapshots = s.usize("snapshots", cfg.snapshots)?;
        cfg.eta_r = s.f64("eta_r", cfg.eta_r)?;
        cfg.success_delta =
            s.f64("success_delta_deg", cfg.success_delta.to_degrees())?.to_radians();
        s.finish()?;
    }
    let clutter_names: Vec<String> = sf
        .sections
        .keys()
        .filter(|k| k.starts_with("clutter."))
        .cloned()
        .collect();
    for name in clutter_names {
        let mut s = SectionReader::take(sf, &name).unwrap();
        let (line, theta) = s.required("theta_h_deg")?;
        let theta_h = theta
            .parse::<f64>()
            .map_err(|_| s.parse_err(line, format!("'theta_h_deg' expects a number, got '{theta}'")))?
            .to_radians();
        let spec = ClutterSpec {
            theta_h,
            theta_v: s.f64("theta_v_deg", 90.0)?.to_radians(),
            d_ic: s.f64("d_ic_m", 20.0)?,
            d_cc: s.f64("d_cc_m", 20.0)?,
            kappa: dbsm_to_m2(s.f64("kappa_dbsm", 0.0)?),
        };
        s.finish()?;
        cfg.clutters.push(spec);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Read the `[benchmark]` section (all keys optional, defaults per the
/// benchmark table).
pub fn benchmark_from_sections(sf: &mut SectionedFile) -> Result<BenchmarkGeometry> {
    let mut bench = BenchmarkGeometry::default();
    if let Some(mut s) = SectionReader::take(sf, "benchmark") {
        bench.d_bi = s.f64("d_bi_m", bench.d_bi)?;
        bench.theta_i = s.f64("theta_i_deg", bench.theta_i.to_degrees())?.to_radians();
        bench.theta_b = s.f64("theta_b_deg", bench.theta_b.to_degrees())?.to_radians();
        bench.bs_tx_antennas = s.usize("bs_tx_antennas", bench.bs_tx_antennas)?;
        bench.bs_rx_antennas = s.usize("bs_rx_antennas", bench.bs_rx_antennas)?;
        bench.mus_d_ui_min = s.f64("mus_d_ui_min_m", bench.mus_d_ui_min)?;
        bench.mus_d_ui_max = s.f64("mus_d_ui_max_m", bench.mus_d_ui_max)?;
        s.finish()?;
    }
    bench.validate()?;
    Ok(bench)
}

fn reject_leftover_sections(sf: &SectionedFile) -> Result<()> {
    if let Some(name) = sf.sections.keys().next() {
        return Err(Error::InvalidConfig(format!(
            "{}: unknown section [{name}]",
            sf.file
        )));
    }
    Ok(())
}

/// Parse a full experiment plan file.
pub fn parse_plan(text: &str, file_name: &str) -> Result<ExperimentPlan> {
    let mut sf = SectionedFile::parse(text, file_name)?;
    let base = scenario_from_sections(&mut sf)?;
    let bench = benchmark_from_sections(&mut sf)?;
    let mut s = SectionReader::take(&mut sf, "plan").ok_or_else(|| {
        Error::InvalidConfig(format!("{file_name}: missing [plan] section"))
    })?;
    let (_, sweep_raw) = s.required("sweep_param")?;
    let sweep_param = SweepParam::parse(&sweep_raw)?;
    let sweep_values = s
        .f64_list("sweep_values")?
        .ok_or_else(|| Error::InvalidConfig(format!("{file_name}: [plan] needs sweep_values")))?;
    let (_, schemes_raw) = s.required("schemes")?;
    let schemes = schemes_raw
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(SchemeId::parse)
        .collect::<Result<Vec<_>>>()?;
    let plan = ExperimentPlan {
        base,
        bench,
        sweep_param,
        sweep_values,
        schemes,
        trials: s.usize("trials", 1000)?,
        seed: s.u64("seed", 1)?,
        output: PathBuf::from(s.string("output", "results.csv")),
        grid_step_deg: s.f64("grid_step_deg", 0.01)?,
    };
    s.finish()?;
    reject_leftover_sections(&sf)?;
    plan.validate()?;
    Ok(plan)
}

pub fn load_plan(path: &Path) -> Result<ExperimentPlan> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_plan(&text, &path.display().to_string())
}

/// Parse a scenario-only file (used by `crb`, `powers`, and `spectrum`).
/// `extra` names one optional tool section whose reader is handed back to the
/// caller before leftover sections are rejected.
pub fn parse_scenario(
    text: &str,
    file_name: &str,
) -> Result<(ScenarioConfig<f64>, BenchmarkGeometry, SectionedFile)> {
    let mut sf = SectionedFile::parse(text, file_name)?;
    let cfg = scenario_from_sections(&mut sf)?;
    let bench = benchmark_from_sections(&mut sf)?;
    Ok((cfg, bench, sf))
}

/// Reject any section not consumed by the caller.
pub fn finish_scenario(sf: SectionedFile) -> Result<()> {
    reject_leftover_sections(&sf)
}

/// Consume one optional tool section as a raw key/value map; the caller
/// interprets the keys and is responsible for rejecting unknown ones via the
/// returned reader pattern. Keys: returns `(line, value)` pairs.
pub fn take_section(
    sf: &mut SectionedFile,
    name: &str,
) -> Option<BTreeMap<String, (usize, String)>> {
    sf.sections.remove(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = "\n[scenario]\nn_elements = 8\nm_sensors = 4\nsnapshots = 8\n\n[plan]\nsweep_param = tx_power_dbm\nsweep_values = 0, 10\nschemes = proposed, bts\ntrials = 2\nseed = 9\noutput = out.csv\n";

    #[test]
    fn parses_minimal_plan() {
        let plan = parse_plan(MINI, "mini.plan").unwrap();
        assert_eq!(plan.base.layout.n_h, 8);
        assert_eq!(plan.base.layout.m, 4);
        assert_eq!(plan.sweep_values, vec![0.0, 10.0]);
        assert_eq!(plan.schemes, vec![SchemeId::Proposed, SchemeId::Bts]);
        assert_eq!(plan.trials, 2);
        assert_eq!(plan.seed, 9);
    }

    #[test]
    fn unknown_key_is_an_error_with_location() {
        let text = MINI.replace("m_sensors", "m_sensros");
        match parse_plan(&text, "mini.plan") {
            Err(Error::Parse { line, msg, .. }) => {
                assert!(msg.contains("m_sensros"), "{msg}");
                assert!(line > 0);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_is_an_error() {
        let text = format!("{MINI}\n[extra]\nfoo = 1\n");
        assert!(parse_plan(&text, "mini.plan").is_err());
    }

    #[test]
    fn unknown_scheme_is_an_error() {
        let text = MINI.replace("proposed, bts", "proposed, warp");
        assert!(parse_plan(&text, "mini.plan").is_err());
    }

    #[test]
    fn unsorted_sweep_rejected() {
        let text = MINI.replace("0, 10", "10, 0");
        assert!(parse_plan(&text, "mini.plan").is_err());
    }

    #[test]
    fn units_are_converted() {
        let text = MINI.replace(
            "[plan]",
            "theta_deg = 30\ntx_power_dbm = 20\nsuccess_delta_deg = 1\n\n[plan]",
        );
        let plan = parse_plan(&text, "mini.plan").unwrap();
        assert!((plan.base.angles.theta_it_h - 30f64.to_radians()).abs() < 1e-12);
        assert!((plan.base.tx_power - 100.0).abs() < 1e-9);
        assert!((plan.base.success_delta - 1f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn clutter_sections_accumulate() {
        let text = MINI.replace(
            "[plan]",
            "[clutter.1]\ntheta_h_deg = -20\nd_ic_m = 15\nd_cc_m = 15\nkappa_dbsm = 3\n\n[plan]",
        );
        let plan = parse_plan(&text, "mini.plan").unwrap();
        assert_eq!(plan.base.clutters.len(), 1);
        assert!((plan.base.clutters[0].theta_h - (-20f64).to_radians()).abs() < 1e-12);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = format!("# header\n{MINI}\n# tail\n");
        assert!(parse_plan(&text, "mini.plan").is_ok());
    }

    #[test]
    fn sweep_application() {
        let base = ScenarioConfig::<f64>::default_scene();
        let a = apply_sweep(&base, SweepParam::TxPowerDbm, 20.0).unwrap();
        assert!((a.tx_power - 100.0).abs() < 1e-9);
        let b = apply_sweep(&base, SweepParam::Elements, 128.0).unwrap();
        assert_eq!(b.layout.n_h, 128);
        assert_eq!(b.snapshots, 128); // schedule needs T >= N
        let c = apply_sweep(&base, SweepParam::DUiM, 2.0).unwrap();
        assert!((c.d_ci - 2.0).abs() < 1e-12);
        assert!(apply_sweep(&base, SweepParam::Sensors, 4.5).is_err());
    }
}
