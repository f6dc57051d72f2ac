//! Preset strings: a name followed by `key=value` parameters, e.g.
//! `random seed=7 max_mode=4 amplitude=1`.

use std::collections::BTreeMap;

use chflow::presets::Preset;

pub const DEFAULT_MAX_MODE: u32 = 4;

fn take<T: std::str::FromStr>(params: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>, String> {
    match params.remove(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| format!("invalid value for {key}: {v:?}")),
    }
}

pub fn parse_preset(text: &str) -> Result<Preset, String> {
    let mut words = text.split_whitespace();
    let name = words.next().ok_or("empty preset")?;
    let mut params = BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected key=value, got {w:?}"))?;
        if params.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("duplicate parameter {k}"));
        }
    }
    let preset = match name {
        "shear" => Preset::Shear,
        "eigenstate" => Preset::Eigenstate,
        "traveling_wave" => {
            let c = take(&mut params, "c")?.ok_or("traveling_wave needs c=<speed>")?;
            Preset::TravelingWave { c }
        }
        "random" => Preset::Random {
            seed: take(&mut params, "seed")?.unwrap_or(0),
            max_mode: take(&mut params, "max_mode")?.unwrap_or(DEFAULT_MAX_MODE),
            amplitude: take(&mut params, "amplitude")?.unwrap_or(1.0),
        },
        "perturbed_eigenstate" => Preset::PerturbedEigenstate {
            eps: take(&mut params, "eps")?.unwrap_or(0.01),
            seed: take(&mut params, "seed")?.unwrap_or(0),
            max_mode: take(&mut params, "max_mode")?.unwrap_or(DEFAULT_MAX_MODE),
        },
        other => return Err(format!("unknown preset {other:?}")),
    };
    if let Some(k) = params.keys().next() {
        return Err(format!("unknown parameter {k} for preset {name}"));
    }
    Ok(preset)
}
