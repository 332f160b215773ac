//! Single-file checkpoint container.
//!
//! Layout: the 8-byte magic `HDCGCKPT`, a little-endian `u32` format version,
//! a little-endian `u64` header length, the JSON header, then every tensor
//! listed in the header as consecutive little-endian `f64` values.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::cyclegan::CycleGan;
use crate::error::{ModelError, Result};
use crate::optim::{Adam, AdamConfig};
use crate::params::{Param, ParamSet};
use crate::train::{LossRecord, TrainConfig, TrainState};

pub const MAGIC: &[u8; 8] = b"HDCGCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub epoch: usize,
    pub step: usize,
    pub gen_h: ParamSet,
    pub gen_l: ParamSet,
    pub critic: Vec<ParamSet>,
    pub gen_opt: Adam,
    pub critic_opt: Adam,
    pub history: Vec<LossRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    epoch: usize,
    step: usize,
    n_critics: usize,
    gen_opt: OptHeader,
    critic_opt: OptHeader,
    history: Vec<LossRecord>,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OptHeader {
    config: AdamConfig,
    step: u64,
}

impl Checkpoint {
    pub fn from_state(state: &TrainState) -> Self {
        let m = &state.model;
        Checkpoint {
            config: state.config.clone(),
            epoch: state.epoch,
            step: state.step,
            gen_h: m.gen_h.params().clone(),
            gen_l: m.gen_l.params().clone(),
            critic: m.critic_params().into_iter().cloned().collect(),
            gen_opt: state.gen_opt.clone(),
            critic_opt: state.critic_opt.clone(),
            history: state.history.clone(),
        }
    }

    /// Rebuilds the training state, ready to resume.
    pub fn to_state(&self) -> Result<TrainState> {
        let mut state = TrainState::new(&self.config)?;
        let err = |e: String| ModelError::Checkpoint(e);
        state.model.gen_h.params_mut().load_from(&self.gen_h).map_err(err)?;
        state.model.gen_l.params_mut().load_from(&self.gen_l).map_err(err)?;
        state.init_critic(&self.critic).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        check_opt_shape(&state.gen_opt, &self.gen_opt)?;
        check_opt_shape(&state.critic_opt, &self.critic_opt)?;
        state.gen_opt = self.gen_opt.clone();
        state.critic_opt = self.critic_opt.clone();
        state.epoch = self.epoch;
        state.step = self.step;
        state.history = self.history.clone();
        Ok(state)
    }

    /// The networks only.
    pub fn model(&self) -> Result<CycleGan> {
        Ok(self.to_state()?.model)
    }

    fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (prefix, ps) in [("gen_h", &self.gen_h), ("gen_l", &self.gen_l)]
            .into_iter()
            .chain(self.critic.iter().enumerate().map(|(i, p)| (CRITIC_PREFIXES[i], p)))
        {
            for p in &ps.params {
                out.push((format!("{prefix}/{}", p.name), p.shape.clone(), p.data.as_slice()));
            }
        }
        for (prefix, opt) in [("opt_gen", &self.gen_opt), ("opt_critic", &self.critic_opt)] {
            for (kind, moments) in [("m", &opt.m), ("v", &opt.v)] {
                for (s, set) in moments.iter().enumerate() {
                    for (t, data) in set.iter().enumerate() {
                        out.push((format!("{prefix}/{kind}/{s}/{t}"), vec![data.len()], data.as_slice()));
                    }
                }
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let tensors = self.tensors();
        let header = Header {
            config: self.config.clone(),
            epoch: self.epoch,
            step: self.step,
            n_critics: self.critic.len(),
            gen_opt: OptHeader {
                config: self.gen_opt.cfg,
                step: self.gen_opt.step,
            },
            critic_opt: OptHeader {
                config: self.critic_opt.cfg,
                step: self.critic_opt.step,
            },
            history: self.history.clone(),
            tensors: tensors
                .iter()
                .map(|(name, shape, _)| TensorEntry {
                    name: name.clone(),
                    shape: shape.clone(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        let mut out = Vec::with_capacity(json.len() + 64);
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        out.write_u64::<LittleEndian>(json.len() as u64)?;
        out.write_all(&json)?;
        for (_, _, data) in tensors {
            for &v in data {
                out.write_f64::<LittleEndian>(v)?;
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| ModelError::Checkpoint(m);
        let mut cur = Cursor::new(bytes);
        let mut magic = [0u8; 8];
        cur.read_exact(&mut magic).map_err(|_| bad("file too short".into()))?;
        if &magic != MAGIC {
            return Err(bad("not a checkpoint (bad magic)".into()));
        }
        let version = cur.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let len = cur.read_u64::<LittleEndian>()? as usize;
        let start = cur.position() as usize;
        let json = bytes.get(start..start + len).ok_or_else(|| bad("truncated header".into()))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| bad(e.to_string()))?;
        cur.set_position((start + len) as u64);

        let mut read_tensor = |entry: &TensorEntry| -> Result<Vec<f64>> {
            let n: usize = entry.shape.iter().product();
            (0..n)
                .map(|_| cur.read_f64::<LittleEndian>().map_err(|_| bad(format!("truncated tensor {}", entry.name))))
                .collect()
        };
        let mut gen_h = ParamSet::default();
        let mut gen_l = ParamSet::default();
        let mut critic = vec![ParamSet::default(); header.n_critics];
        let mut opts: [(Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>); 2] = Default::default();
        for entry in &header.tensors {
            let data = read_tensor(entry)?;
            let (prefix, rest) = entry.name.split_once('/').ok_or_else(|| bad(format!("bad tensor name {}", entry.name)))?;
            let param = |name: &str| Param {
                name: name.to_string(),
                shape: entry.shape.clone(),
                data: data.clone(),
            };
            match prefix {
                "gen_h" => gen_h.params.push(param(rest)),
                "gen_l" => gen_l.params.push(param(rest)),
                p if CRITIC_PREFIXES.contains(&p) => {
                    let i = CRITIC_PREFIXES.iter().position(|c| *c == p).unwrap();
                    critic
                        .get_mut(i)
                        .ok_or_else(|| bad(format!("unexpected critic tensor {}", entry.name)))?
                        .params
                        .push(param(rest));
                }
                "opt_gen" | "opt_critic" => {
                    let which = usize::from(prefix == "opt_critic");
                    let parts: Vec<&str> = rest.split('/').collect();
                    let [kind, s, t] = parts[..] else {
                        return Err(bad(format!("bad optimizer tensor name {}", entry.name)));
                    };
                    let s: usize = s.parse().map_err(|_| bad(entry.name.clone()))?;
                    let t: usize = t.parse().map_err(|_| bad(entry.name.clone()))?;
                    let target = if kind == "m" { &mut opts[which].0 } else { &mut opts[which].1 };
                    if target.len() <= s {
                        target.resize(s + 1, Vec::new());
                    }
                    if target[s].len() != t {
                        return Err(bad(format!("optimizer tensors out of order at {}", entry.name)));
                    }
                    target[s].push(data);
                }
                _ => return Err(bad(format!("unknown tensor group {prefix}"))),
            }
        }
        let [(gm, gv), (cm, cv)] = opts;
        let ckpt = Checkpoint {
            config: header.config,
            epoch: header.epoch,
            step: header.step,
            gen_h,
            gen_l,
            critic,
            gen_opt: Adam {
                cfg: header.gen_opt.config,
                step: header.gen_opt.step,
                m: gm,
                v: gv,
            },
            critic_opt: Adam {
                cfg: header.critic_opt.config,
                step: header.critic_opt.step,
                m: cm,
                v: cv,
            },
            history: header.history,
        };
        // Validates structure against the declared configuration.
        ckpt.to_state()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?;
        Checkpoint::from_bytes(&bytes)
    }
}

const CRITIC_PREFIXES: [&str; 2] = ["critic0", "critic1"];

fn check_opt_shape(expected: &Adam, got: &Adam) -> Result<()> {
    let shape = |a: &Adam| -> Vec<Vec<usize>> { a.m.iter().map(|s| s.iter().map(Vec::len).collect()).collect() };
    let shape_v = |a: &Adam| -> Vec<Vec<usize>> { a.v.iter().map(|s| s.iter().map(Vec::len).collect()).collect() };
    if shape(expected) != shape(got) || shape_v(expected) != shape_v(got) {
        return Err(ModelError::Checkpoint("optimizer state does not match the model".into()));
    }
    Ok(())
}
