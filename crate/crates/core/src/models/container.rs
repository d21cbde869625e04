//! Binary model container.
//!
//! ```text
//! magic "ADWM" | version u8 | kind u8 | payload
//! ```
//!
//! All integers are little-endian `u64`, all parameters little-endian `f64`,
//! so loading restores every value bit for bit.
//!
//! * MNB: `dims, alpha, log_prior[2], log_likelihood[political; dims], log_likelihood[non; dims]`
//! * LogReg: `dim, bias, l2, lr, weights[dim]`
//! * CNN: `embed_dim, n_widths, widths[n_widths], filters_per_width, hidden, dropout_p`,
//!   then every tensor in [`CnnParams::tensors`] order.

use std::io::{Cursor, Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{CnnConfig, CnnModel, CnnParams, LogRegModel, MnbModel, ModelError};

pub const CONTAINER_MAGIC: [u8; 4] = *b"ADWM";
pub const CONTAINER_VERSION: u8 = 1;

/// Which classifier a model is. Also the container's kind byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mnb = 1,
    LogReg = 2,
    Cnn = 3,
}

impl ModelKind {
    fn from_byte(b: u8) -> Result<Self, ModelError> {
        match b {
            1 => Ok(ModelKind::Mnb),
            2 => Ok(ModelKind::LogReg),
            3 => Ok(ModelKind::Cnn),
            other => Err(ModelError::UnknownKind(other)),
        }
    }
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Mnb, ModelKind::LogReg, ModelKind::Cnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mnb => "mnb",
            ModelKind::LogReg => "logreg",
            ModelKind::Cnn => "cnn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mnb" | "nb" => Ok(ModelKind::Mnb),
            "logreg" | "lr" => Ok(ModelKind::LogReg),
            "cnn" => Ok(ModelKind::Cnn),
            other => Err(format!("unknown model kind {other:?} (expected mnb, logreg or cnn)")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Any model the container can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Mnb(MnbModel),
    LogReg(LogRegModel),
    Cnn(CnnModel),
}

impl AnyModel {
    pub fn tag(&self) -> ModelKind {
        match self {
            AnyModel::Mnb(_) => ModelKind::Mnb,
            AnyModel::LogReg(_) => ModelKind::LogReg,
            AnyModel::Cnn(_) => ModelKind::Cnn,
        }
    }

    pub fn expect_mnb(self) -> Result<MnbModel, ModelError> {
        match self {
            AnyModel::Mnb(m) => Ok(m),
            other => Err(ModelError::KindMismatch {
                expected: ModelKind::Mnb,
                found: other.tag(),
            }),
        }
    }

    pub fn expect_logreg(self) -> Result<LogRegModel, ModelError> {
        match self {
            AnyModel::LogReg(m) => Ok(m),
            other => Err(ModelError::KindMismatch {
                expected: ModelKind::LogReg,
                found: other.tag(),
            }),
        }
    }

    pub fn expect_cnn(self) -> Result<CnnModel, ModelError> {
        match self {
            AnyModel::Cnn(m) => Ok(m),
            other => Err(ModelError::KindMismatch {
                expected: ModelKind::Cnn,
                found: other.tag(),
            }),
        }
    }
}

fn put_len<W: Write>(w: &mut W, n: usize) -> std::io::Result<()> {
    w.write_u64::<LE>(n as u64)
}

fn put_f64s<W: Write>(w: &mut W, xs: &[f64]) -> std::io::Result<()> {
    xs.iter().try_for_each(|&x| w.write_f64::<LE>(x))
}

/// Serializes a model into a fresh buffer.
pub fn save_model(model: &AnyModel) -> Vec<u8> {
    let mut out = Vec::new();
    write_model(model, &mut out).expect("writing to memory cannot fail");
    out
}

fn write_model<W: Write>(model: &AnyModel, w: &mut W) -> std::io::Result<()> {
    w.write_all(&CONTAINER_MAGIC)?;
    w.write_u8(CONTAINER_VERSION)?;
    w.write_u8(model.tag() as u8)?;
    match model {
        AnyModel::Mnb(m) => {
            put_len(w, m.dims)?;
            w.write_f64::<LE>(m.alpha)?;
            put_f64s(w, &m.log_prior)?;
            put_f64s(w, &m.log_likelihood[0])?;
            put_f64s(w, &m.log_likelihood[1])?;
        }
        AnyModel::LogReg(m) => {
            put_len(w, m.weights.len())?;
            w.write_f64::<LE>(m.bias)?;
            w.write_f64::<LE>(m.l2)?;
            w.write_f64::<LE>(m.lr)?;
            put_f64s(w, &m.weights)?;
        }
        AnyModel::Cnn(m) => {
            let c = &m.config;
            put_len(w, c.embed_dim)?;
            put_len(w, c.filter_widths.len())?;
            for &fw in &c.filter_widths {
                put_len(w, fw)?;
            }
            put_len(w, c.filters_per_width)?;
            put_len(w, c.hidden)?;
            w.write_f64::<LE>(c.dropout_p)?;
            for t in m.params.tensors() {
                put_f64s(w, t)?;
            }
        }
    }
    Ok(())
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

fn eof_to_truncated(e: std::io::Error) -> ModelError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        ModelError::Truncated
    } else {
        ModelError::Io(e)
    }
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.cur.get_ref().len() - self.cur.position() as usize
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        self.cur.read_u8().map_err(eof_to_truncated)
    }

    fn len(&mut self) -> Result<usize, ModelError> {
        let v = self.cur.read_u64::<LE>().map_err(eof_to_truncated)?;
        usize::try_from(v).map_err(|_| ModelError::ShapeMismatch(format!("length {v} too large")))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        self.cur.read_f64::<LE>().map_err(eof_to_truncated)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ModelError> {
        // check before allocating so a corrupt length cannot exhaust memory
        if n.checked_mul(8).is_none_or(|bytes| bytes > self.remaining()) {
            return Err(ModelError::Truncated);
        }
        let mut out = vec![0.0; n];
        self.cur.read_f64_into::<LE>(&mut out).map_err(eof_to_truncated)?;
        Ok(out)
    }
}

fn nonzero(name: &str, v: usize) -> Result<usize, ModelError> {
    if v == 0 {
        return Err(ModelError::ShapeMismatch(format!("{name} must be nonzero")));
    }
    Ok(v)
}

/// Parses a container. Fails with [`ModelError::Truncated`] when the bytes
/// end early and [`ModelError::ShapeMismatch`] when declared shapes are
/// inconsistent or bytes are left over.
pub fn load_model(bytes: &[u8]) -> Result<AnyModel, ModelError> {
    let mut r = Reader {
        cur: Cursor::new(bytes),
    };
    let mut magic = [0u8; 4];
    r.cur.read_exact(&mut magic).map_err(eof_to_truncated)?;
    if magic != CONTAINER_MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = r.u8()?;
    if version != CONTAINER_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let tag = ModelKind::from_byte(r.u8()?)?;
    let model = match tag {
        ModelKind::Mnb => {
            let dims = nonzero("dims", r.len()?)?;
            let alpha = r.f64()?;
            let prior = r.f64s(2)?;
            let pol = r.f64s(dims)?;
            let non = r.f64s(dims)?;
            AnyModel::Mnb(MnbModel {
                dims,
                alpha,
                log_prior: [prior[0], prior[1]],
                log_likelihood: [pol, non],
            })
        }
        ModelKind::LogReg => {
            let dim = r.len()?;
            let bias = r.f64()?;
            let l2 = r.f64()?;
            let lr = r.f64()?;
            let weights = r.f64s(dim)?;
            AnyModel::LogReg(LogRegModel { weights, bias, l2, lr })
        }
        ModelKind::Cnn => {
            let embed_dim = nonzero("embed_dim", r.len()?)?;
            let n_widths = nonzero("filter width count", r.len()?)?;
            if n_widths > r.remaining() / 8 {
                return Err(ModelError::Truncated);
            }
            let filter_widths = (0..n_widths).map(|_| r.len()).collect::<Result<Vec<_>, _>>()?;
            let filters_per_width = nonzero("filters_per_width", r.len()?)?;
            let hidden = nonzero("hidden", r.len()?)?;
            let dropout_p = r.f64()?;
            let config = CnnConfig {
                embed_dim,
                filter_widths,
                filters_per_width,
                hidden,
                dropout_p,
            };
            config
                .validate()
                .map_err(|e| ModelError::ShapeMismatch(e.to_string()))?;
            let mut params = CnnParams::zeros(&config);
            for t in params.tensors_mut() {
                let vals = r.f64s(t.len())?;
                t.copy_from_slice(&vals);
            }
            AnyModel::Cnn(CnnModel { config, params })
        }
    };
    if r.remaining() != 0 {
        return Err(ModelError::ShapeMismatch(format!(
            "{} trailing bytes after {tag} payload",
            r.remaining()
        )));
    }
    Ok(model)
}
