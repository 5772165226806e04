//! Model checkpoint files: a metadata header (system config, train config,
//! seed, final loss) followed by the network parameter container. Loading
//! reproduces transmit/decode outputs bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CsiMode, SystemConfig, TrainConfig, TrainMeta, TrainedModel};
use crate::channel::{ChannelModel, FadingMode};
use crate::nn::{read_network, write_network};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"AEMC";
const VERSION: u32 = 1;

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_header(&mut w, model).map_err(|e| Error::io(path, e))?;
    write_network(&mut w, &model.network).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let (system, train, gamma, meta) = read_header(&mut r)?;
    let network = read_network(&mut r)?;

    // The stored network must be exactly the layout this config builds.
    let expected = if gamma.is_some() {
        super::mimo_architecture(&system, train.csi)
    } else {
        super::siso_architecture(&system, train.csi)
    };
    if network.arch() != &expected {
        return Err(Error::Checkpoint(
            "stored network does not match the stored system/CSI configuration".into(),
        ));
    }
    Ok(TrainedModel {
        system,
        train,
        gamma,
        network,
        meta,
    })
}

fn write_header<W: Write>(w: &mut W, model: &TrainedModel) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [
        model.system.n as u32,
        model.system.k as u32,
        model.system.m_t as u32,
        model.system.m_r as u32,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&[
        match model.train.csi {
            CsiMode::Genie => 0,
            CsiMode::None => 1,
        },
        match model.train.fading {
            FadingMode::Block => 0,
            FadingMode::PerUse => 1,
        },
        match model.train.channel {
            ChannelModel::AwgnOnly => 0,
            ChannelModel::Rayleigh => 1,
        },
        u8::from(model.gamma.is_some()),
    ])?;
    w.write_all(&model.gamma.unwrap_or(0.0).to_le_bytes())?;
    w.write_all(&(model.train.batch as u64).to_le_bytes())?;
    w.write_all(&model.train.eta.to_le_bytes())?;
    w.write_all(&model.train.ebn0_db.to_le_bytes())?;
    w.write_all(&(model.train.iterations as u64).to_le_bytes())?;
    w.write_all(&model.train.seed.to_le_bytes())?;
    w.write_all(&[u8::from(model.meta.trained)])?;
    w.write_all(&model.meta.final_loss.to_le_bytes())?;
    w.write_all(&model.meta.saturated_samples.to_le_bytes())?;
    Ok(())
}

type Header = (SystemConfig, TrainConfig, Option<f64>, TrainMeta);

fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad model checkpoint magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported model checkpoint version {version}"
        )));
    }
    let system = SystemConfig {
        n: read_u32(r)? as usize,
        k: read_u32(r)? as usize,
        m_t: read_u32(r)? as usize,
        m_r: read_u32(r)? as usize,
    };
    let mut flags = [0u8; 4];
    read_exact(r, &mut flags)?;
    let csi = match flags[0] {
        0 => CsiMode::Genie,
        1 => CsiMode::None,
        other => return Err(Error::Checkpoint(format!("unknown CSI tag {other}"))),
    };
    let fading = match flags[1] {
        0 => FadingMode::Block,
        1 => FadingMode::PerUse,
        other => return Err(Error::Checkpoint(format!("unknown fading tag {other}"))),
    };
    let channel = match flags[2] {
        0 => ChannelModel::AwgnOnly,
        1 => ChannelModel::Rayleigh,
        other => return Err(Error::Checkpoint(format!("unknown channel tag {other}"))),
    };
    let has_gamma = match flags[3] {
        0 => false,
        1 => true,
        other => return Err(Error::Checkpoint(format!("unknown gamma flag {other}"))),
    };
    let gamma_val = read_f64(r)?;
    let train = TrainConfig {
        batch: read_u64(r)? as usize,
        eta: read_f64(r)?,
        ebn0_db: read_f64(r)?,
        iterations: read_u64(r)? as usize,
        seed: read_u64(r)?,
        csi,
        fading,
        channel,
    };
    let mut trained = [0u8; 1];
    read_exact(r, &mut trained)?;
    let meta = TrainMeta {
        trained: trained[0] != 0,
        final_loss: read_f64(r)?,
        loss_trajectory: Vec::new(),
        saturated_samples: read_u64(r)?,
    };
    Ok((system, train, has_gamma.then_some(gamma_val), meta))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
