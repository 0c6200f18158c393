//! Run configuration: versioned JSON schema, shipped presets, and the
//! fault-specification mini-language used on the command line.

use anyhow::{anyhow, bail, Context};
use gearsim_core::faults::FaultSpec;
use gearsim_core::pipeline::SimConfig;
use gearsim_core::profile_errors::Wheel;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level configuration file: schema version plus the simulation config.
/// Unknown keys anywhere are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub sim: SimConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).context("configuration does not match the schema")?;
        if config.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            );
        }
        config
            .sim
            .validate()
            .map_err(|e| anyhow!("invalid configuration: {e}"))?;
        Ok(config)
    }
}

/// Shipped experiment presets.
pub const PRESET_NAMES: [&str; 3] = ["tooth-breakage", "pitting", "involute-destruction"];

pub fn preset(name: &str) -> anyhow::Result<RunConfig> {
    let text = match name {
        "tooth-breakage" => include_str!("../resources/presets/tooth-breakage.json"),
        "pitting" => include_str!("../resources/presets/pitting.json"),
        "involute-destruction" => {
            include_str!("../resources/presets/involute-destruction.json")
        }
        other => bail!(
            "unknown preset '{other}' (available: {})",
            PRESET_NAMES.join(", ")
        ),
    };
    RunConfig::parse(text)
}

/// Parse the `--fault` mini-language:
///
/// * `healthy`
/// * `breakage:<tip_loss>:tooth=<n>[:wheel=gear|pinion]`
/// * `pitting:depth=<mm>:pos=<0..1>:extent=<0..1>:teeth=<a,b,..>[:wheel=..]`
/// * `involute:amp=<um>:teeth=<a,b,..>[:wheel=..]`
pub fn parse_fault(text: &str) -> anyhow::Result<FaultSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let kind = parts[0];
    let mut kv = std::collections::BTreeMap::new();
    let mut positional = Vec::new();
    for p in &parts[1..] {
        match p.split_once('=') {
            Some((k, v)) => {
                kv.insert(k.to_string(), v.to_string());
            }
            None => positional.push(p.to_string()),
        }
    }
    let wheel = match kv.get("wheel").map(|s| s.as_str()) {
        None => Wheel::Gear,
        Some("gear") => Wheel::Gear,
        Some("pinion") => Wheel::Pinion,
        Some(other) => bail!("unknown wheel '{other}'"),
    };
    let teeth = |kv: &std::collections::BTreeMap<String, String>| -> anyhow::Result<Vec<u32>> {
        kv.get("teeth")
            .ok_or_else(|| anyhow!("missing teeth=<a,b,..>"))?
            .split(',')
            .map(|t| t.parse::<u32>().context("bad tooth index"))
            .collect()
    };
    match kind {
        "healthy" => Ok(FaultSpec::Healthy),
        "breakage" => {
            let tip_loss: f64 = positional
                .first()
                .ok_or_else(|| anyhow!("breakage needs a tip-loss fraction"))?
                .parse()
                .context("bad tip-loss fraction")?;
            let tooth: u32 = kv
                .get("tooth")
                .ok_or_else(|| anyhow!("breakage needs tooth=<n>"))?
                .parse()
                .context("bad tooth index")?;
            Ok(FaultSpec::ToothBreakage {
                tip_loss_fraction: tip_loss,
                tooth_index: tooth,
                wheel,
            })
        }
        "pitting" => Ok(FaultSpec::Pitting {
            pit_depth_mm: kv
                .get("depth")
                .ok_or_else(|| anyhow!("pitting needs depth=<mm>"))?
                .parse()
                .context("bad depth")?,
            flank_position: kv
                .get("pos")
                .ok_or_else(|| anyhow!("pitting needs pos=<0..1>"))?
                .parse()
                .context("bad pos")?,
            axial_extent_fraction: kv
                .get("extent")
                .ok_or_else(|| anyhow!("pitting needs extent=<0..1>"))?
                .parse()
                .context("bad extent")?,
            tooth_indices: teeth(&kv)?,
            wheel,
        }),
        "involute" => Ok(FaultSpec::InvoluteDestruction {
            deviation_amplitude_um: kv
                .get("amp")
                .ok_or_else(|| anyhow!("involute needs amp=<um>"))?
                .parse()
                .context("bad amp")?,
            tooth_indices: teeth(&kv)?,
            wheel,
        }),
        other => bail!("unknown fault kind '{other}'"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_match_experiment_table() {
        let tb = preset("tooth-breakage").unwrap();
        assert_eq!(tb.sim.pinion.tooth_count, 17);
        assert_eq!(tb.sim.gear.tooth_count, 38);
        assert_eq!(tb.sim.din_grade, 7);
        assert_eq!(tb.sim.conditions.input_speed_hz, 40.0);
        assert_eq!(tb.sim.conditions.output_load_nm, 10.0);
        assert_eq!(tb.sim.conditions.sampling_rate_hz, 25_000.0);
        assert_eq!(tb.sim.conditions.duration_s, 60.0);
        assert_eq!(tb.sim.pinion.module_mm, 3.0);

        let pit = preset("pitting").unwrap();
        assert_eq!(pit.sim.pinion.tooth_count, 17);
        assert_eq!(pit.sim.gear.tooth_count, 38);
        assert_eq!(pit.sim.din_grade, 7);
        assert_eq!(pit.sim.conditions.sampling_rate_hz, 25_000.0);

        let inv = preset("involute-destruction").unwrap();
        assert_eq!(inv.sim.pinion.tooth_count, 18);
        assert_eq!(inv.sim.gear.tooth_count, 35);
        assert_eq!(inv.sim.din_grade, 8);
        assert_eq!(inv.sim.conditions.input_speed_hz, 45.0);
        assert_eq!(inv.sim.conditions.output_load_nm, 15.0);
        assert_eq!(inv.sim.conditions.sampling_rate_hz, 50_000.0);
        assert_eq!(inv.sim.conditions.duration_s, 60.0);

        assert!(preset("nope").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = include_str!("../resources/presets/tooth-breakage.json").to_string();
        text = text.replace("\"schema_version\": 1,", "\"schema_version\": 1, \"bogus\": 2,");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn fault_language() {
        assert_eq!(parse_fault("healthy").unwrap(), FaultSpec::Healthy);
        assert_eq!(
            parse_fault("breakage:0.25:tooth=3").unwrap(),
            FaultSpec::ToothBreakage {
                tip_loss_fraction: 0.25,
                tooth_index: 3,
                wheel: Wheel::Gear
            }
        );
        assert_eq!(
            parse_fault("pitting:depth=0.4:pos=0.5:extent=0.3:teeth=2,7:wheel=pinion").unwrap(),
            FaultSpec::Pitting {
                pit_depth_mm: 0.4,
                flank_position: 0.5,
                axial_extent_fraction: 0.3,
                tooth_indices: vec![2, 7],
                wheel: Wheel::Pinion
            }
        );
        assert!(parse_fault("breakage:nope:tooth=1").is_err());
        assert!(parse_fault("exotic:1").is_err());
    }
}
