//! Versioned binary container for a network: architecture widths, layer
//! order, and all weights/biases row-major, little-endian. Write→read
//! roundtrips are bit-exact.

use std::io::{Read, Write};

use super::network::{Architecture, LayerSpec, Network};
use super::{Activation, DenseLayerParams, NetworkParameters};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"AENW";
const VERSION: u32 = 1;

const TAG_DENSE: u8 = 0;
const TAG_NORMALIZE: u8 = 1;
const TAG_CHANNEL: u8 = 2;
const TAG_AWGN: u8 = 3;
const TAG_CONCAT_CSI: u8 = 4;
const TAG_SOFTMAX: u8 = 5;

pub fn write_network<W: Write>(w: &mut W, network: &Network) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(network.arch().input_width() as u32).to_le_bytes())?;
    w.write_all(&(network.arch().layers().len() as u32).to_le_bytes())?;
    for layer in network.arch().layers() {
        match *layer {
            LayerSpec::Dense {
                in_width,
                out_width,
                activation,
            } => {
                w.write_all(&[TAG_DENSE])?;
                w.write_all(&(in_width as u32).to_le_bytes())?;
                w.write_all(&(out_width as u32).to_le_bytes())?;
                w.write_all(&[match activation {
                    Activation::Relu => 0,
                    Activation::Linear => 1,
                }])?;
            }
            LayerSpec::Normalize { width } => {
                w.write_all(&[TAG_NORMALIZE])?;
                w.write_all(&(width as u32).to_le_bytes())?;
            }
            LayerSpec::ChannelMultiply {
                tx,
                rx,
                samples_per_stream,
            } => {
                w.write_all(&[TAG_CHANNEL])?;
                w.write_all(&(tx as u32).to_le_bytes())?;
                w.write_all(&(rx as u32).to_le_bytes())?;
                w.write_all(&(samples_per_stream as u32).to_le_bytes())?;
            }
            LayerSpec::Awgn { width } => {
                w.write_all(&[TAG_AWGN])?;
                w.write_all(&(width as u32).to_le_bytes())?;
            }
            LayerSpec::ConcatCsi { width, csi_width } => {
                w.write_all(&[TAG_CONCAT_CSI])?;
                w.write_all(&(width as u32).to_le_bytes())?;
                w.write_all(&(csi_width as u32).to_le_bytes())?;
            }
            LayerSpec::SoftmaxHeads { width, heads } => {
                w.write_all(&[TAG_SOFTMAX])?;
                w.write_all(&(width as u32).to_le_bytes())?;
                w.write_all(&(heads as u32).to_le_bytes())?;
            }
        }
    }
    for layer in network.params().layers() {
        for v in layer.weights() {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in layer.bias() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_network<R: Read>(r: &mut R) -> Result<Network> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad network container magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported network container version {version}"
        )));
    }
    let input_width = read_u32(r)? as usize;
    let layer_count = read_u32(r)? as usize;
    if layer_count > 1024 {
        return Err(Error::Checkpoint(format!(
            "implausible layer count {layer_count}"
        )));
    }
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let mut tag = [0u8; 1];
        read_exact(r, &mut tag)?;
        let layer = match tag[0] {
            TAG_DENSE => {
                let in_width = read_u32(r)? as usize;
                let out_width = read_u32(r)? as usize;
                let mut act = [0u8; 1];
                read_exact(r, &mut act)?;
                let activation = match act[0] {
                    0 => Activation::Relu,
                    1 => Activation::Linear,
                    other => {
                        return Err(Error::Checkpoint(format!("unknown activation tag {other}")))
                    }
                };
                LayerSpec::Dense {
                    in_width,
                    out_width,
                    activation,
                }
            }
            TAG_NORMALIZE => LayerSpec::Normalize {
                width: read_u32(r)? as usize,
            },
            TAG_CHANNEL => LayerSpec::ChannelMultiply {
                tx: read_u32(r)? as usize,
                rx: read_u32(r)? as usize,
                samples_per_stream: read_u32(r)? as usize,
            },
            TAG_AWGN => LayerSpec::Awgn {
                width: read_u32(r)? as usize,
            },
            TAG_CONCAT_CSI => LayerSpec::ConcatCsi {
                width: read_u32(r)? as usize,
                csi_width: read_u32(r)? as usize,
            },
            TAG_SOFTMAX => LayerSpec::SoftmaxHeads {
                width: read_u32(r)? as usize,
                heads: read_u32(r)? as usize,
            },
            other => return Err(Error::Checkpoint(format!("unknown layer tag {other}"))),
        };
        layers.push(layer);
    }
    let arch = Architecture::new(input_width, layers)
        .map_err(|e| Error::Checkpoint(format!("invalid stored architecture: {e}")))?;
    let mut dense = Vec::new();
    for (in_w, out_w, _) in arch.dense_shapes() {
        let mut weights = Vec::with_capacity(in_w * out_w);
        for _ in 0..in_w * out_w {
            weights.push(read_f64(r)?);
        }
        let mut bias = Vec::with_capacity(out_w);
        for _ in 0..out_w {
            bias.push(read_f64(r)?);
        }
        dense.push(
            DenseLayerParams::new(in_w, out_w, weights, bias)
                .map_err(|e| Error::Checkpoint(format!("invalid stored parameters: {e}")))?,
        );
    }
    Network::new(arch, NetworkParameters::new(dense))
        .map_err(|e| Error::Checkpoint(format!("inconsistent container: {e}")))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Checkpoint(format!("truncated container: {e}")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn sample_network() -> Network {
        let arch = Architecture::new(
            4,
            vec![
                LayerSpec::Dense {
                    in_width: 4,
                    out_width: 8,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    in_width: 8,
                    out_width: 6,
                    activation: Activation::Linear,
                },
                LayerSpec::Normalize { width: 6 },
                LayerSpec::ChannelMultiply {
                    tx: 1,
                    rx: 1,
                    samples_per_stream: 3,
                },
                LayerSpec::Awgn { width: 6 },
                LayerSpec::Dense {
                    in_width: 6,
                    out_width: 4,
                    activation: Activation::Linear,
                },
                LayerSpec::SoftmaxHeads { width: 4, heads: 1 },
            ],
        )
        .unwrap();
        let mut rng = stream_rng(77, 0, 0);
        Network::init(arch, &mut rng)
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let net = sample_network();
        let mut buf = Vec::new();
        write_network(&mut buf, &net).unwrap();
        let restored = read_network(&mut buf.as_slice()).unwrap();
        assert_eq!(restored.arch(), net.arch());
        assert_eq!(restored.params(), net.params());

        let mut buf2 = Vec::new();
        write_network(&mut buf2, &restored).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn bad_magic_and_truncation_are_rejected() {
        let net = sample_network();
        let mut buf = Vec::new();
        write_network(&mut buf, &net).unwrap();

        let mut corrupted = buf.clone();
        corrupted[0] = b'X';
        assert!(matches!(
            read_network(&mut corrupted.as_slice()),
            Err(Error::Checkpoint(_))
        ));

        let truncated = &buf[..buf.len() - 9];
        assert!(matches!(
            read_network(&mut &truncated[..]),
            Err(Error::Checkpoint(_))
        ));
    }
}
