//! Named states used by the command line and the browser demo.

use std::path::Path;

use serde_json::Value;

use crate::apps::{gibbs_state, heisenberg_hamiltonian, interval::dirichlet_spectrum, renyi::gibbs_z, HeisenbergSpec};
use crate::sim::{shot_rng, MixedState, StateJson};
use crate::{Error, Result};

fn nums(args: &str, what: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{s}' in {what}")))
        })
        .collect()
}

fn count(x: f64, what: &str) -> Result<usize> {
    if x >= 0.0 && x.fract() == 0.0 && x < 1e9 {
        Ok(x as usize)
    } else {
        Err(Error::Parse(format!("{what} must be a nonnegative integer")))
    }
}

/// Parses `name:args`. Known names: `pure-zero:m`, `max-mixed:m`,
/// `gibbs-z:β`, `heisenberg-gibbs:n,β[,J,h]`, `dirichlet:rank,seed` and
/// `file:path` (state JSON).
pub fn parse_state_preset(text: &str) -> Result<MixedState> {
    let (name, args) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("state spec '{text}' has no ':'")))?;
    if name == "file" {
        return load_state_file(Path::new(args));
    }
    let v = nums(args, name)?;
    let want = |lo: usize, hi: usize| {
        if v.len() < lo || v.len() > hi {
            Err(Error::Parse(format!("preset {name} takes {lo}..={hi} arguments, got {}", v.len())))
        } else {
            Ok(())
        }
    };
    match name {
        "pure-zero" => {
            want(1, 1)?;
            MixedState::zero(count(v[0], "m")?)
        }
        "max-mixed" => {
            want(1, 1)?;
            MixedState::maximally_mixed(count(v[0], "m")?)
        }
        "gibbs-z" => {
            want(1, 1)?;
            gibbs_z(v[0])
        }
        "heisenberg-gibbs" => {
            want(2, 4)?;
            let spec = HeisenbergSpec::new(
                count(v[0], "n")?,
                v.get(2).copied().unwrap_or(1.0),
                v.get(3).copied().unwrap_or(1.0),
            )?;
            gibbs_state(&heisenberg_hamiltonian(&spec)?, v[1])
        }
        "dirichlet" => {
            want(2, 2)?;
            let rank = count(v[0], "rank")?;
            if rank == 0 {
                return Err(Error::Parse("rank must be positive".into()));
            }
            let qubits = rank.next_power_of_two().trailing_zeros() as usize;
            let mut rng = shot_rng(count(v[1], "seed")? as u64, 0);
            let mut probs = dirichlet_spectrum(rank, &mut rng);
            probs.resize(1 << qubits, 0.0);
            MixedState::diagonal(&probs)
        }
        _ => Err(Error::Parse(format!("unknown preset '{name}'"))),
    }
}

/// Reads state JSON, either an explicit matrix or `{"preset": …}` with
/// named parameters.
pub fn load_state_file(path: &Path) -> Result<MixedState> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    state_from_json(&text)
}

pub fn state_from_json(text: &str) -> Result<MixedState> {
    let js: StateJson = serde_json::from_str(text).map_err(|e| Error::Parse(format!("state JSON: {e}")))?;
    state_from(&js)
}

pub fn state_from(js: &StateJson) -> Result<MixedState> {
    if let Some(s) = js.matrix_state() {
        return s;
    }
    let StateJson::Preset { preset, params } = js else {
        unreachable!()
    };
    let get = |k: &str| -> Result<Option<String>> {
        match params.get(k) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(other) => Err(Error::Parse(format!("parameter {k} must be a number, got {other}"))),
        }
    };
    let need = |k: &str| get(k)?.ok_or_else(|| Error::Parse(format!("preset {preset} needs '{k}'")));
    let args = match preset.as_str() {
        "pure-zero" | "max-mixed" => need("m")?,
        "gibbs-z" => need("beta")?,
        "heisenberg-gibbs" => {
            let mut a = vec![need("n")?, need("beta")?];
            match (get("j")?, get("h")?) {
                (None, None) => {}
                (j, h) => {
                    a.push(j.unwrap_or_else(|| "1".into()));
                    a.push(h.unwrap_or_else(|| "1".into()));
                }
            }
            a.join(",")
        }
        "dirichlet" => format!("{},{}", need("rank")?, need("seed")?),
        other => return Err(Error::Parse(format!("unknown preset '{other}'"))),
    };
    parse_state_preset(&format!("{preset}:{args}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff, CMatrix};

    #[test]
    fn presets() {
        let mm = parse_state_preset("max-mixed:2").unwrap();
        assert!(max_abs_diff(mm.matrix(), &(CMatrix::identity(4, 4) * c(0.25, 0.0))) < 1e-15);
        let g = parse_state_preset("gibbs-z:0.5").unwrap();
        assert!((g.matrix()[(0, 0)].re - 0.268941).abs() < 1e-6);
        assert!((g.matrix()[(1, 1)].re - 0.731059).abs() < 1e-6);
        let h = parse_state_preset("heisenberg-gibbs:4,0.5").unwrap();
        assert_eq!(h.dim(), 16);
        assert!((h.matrix().trace().re - 1.0).abs() < 1e-12);
        let d = parse_state_preset("dirichlet:3,9").unwrap();
        assert_eq!(d.qubits(), 2);
        assert_eq!(parse_state_preset("pure-zero:1").unwrap().moment(3), 1.0);
    }

    #[test]
    fn malformed() {
        for bad in ["gibbs-z", "gibbs-z:x", "nope:1", "max-mixed:1.5", "heisenberg-gibbs:4", "dirichlet:0,1"] {
            assert!(parse_state_preset(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_forms() {
        let a = state_from_json(r#"{"preset": "gibbs-z", "beta": 0.5}"#).unwrap();
        assert!((a.moment(3) - 0.4101642).abs() < 1e-6);
        let b = state_from_json(&serde_json::to_string(&a.to_json()).unwrap()).unwrap();
        assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-15);
        assert!(state_from_json(r#"{"m": 1, "matrix": [[[1,0]]]}"#).is_err());
    }
}
