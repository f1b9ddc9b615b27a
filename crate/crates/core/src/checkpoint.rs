//! Plain-text parameter checkpoints.
//!
//! ```text
//! sdgcl-checkpoint 1
//! dims <num_nodes> <input> <hidden> <embed> <layers>
//! meta inference_q <value>
//! tensor <name> <rows> <cols>
//! <cols values>      (one line per row)
//! ...
//! end
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a save/load
//! cycle reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::{init_params, EncoderParams, ModelDims};
use crate::error::{Error, Result};

const MAGIC: &str = "sdgcl-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: EncoderParams,
    /// Phase used to encode the unperturbed graph at inference time.
    pub inference_q: f64,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let dims = self.params.dims();
        let mut out = String::new();
        writeln!(out, "{MAGIC} {VERSION}").unwrap();
        writeln!(
            out,
            "dims {} {} {} {} {}",
            self.params.num_nodes(),
            dims.input,
            dims.hidden,
            dims.embed,
            dims.layers
        )
        .unwrap();
        writeln!(out, "meta inference_q {:?}", self.inference_q).unwrap();
        for t in self.params.tensors() {
            let (rows, cols) = t.shape;
            writeln!(out, "tensor {} {rows} {cols}", t.name).unwrap();
            for row in t.data.chunks(cols.max(1)) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Checkpoint> {
        let bad = |msg: String| Error::Checkpoint(msg);
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| bad(format!("unexpected end of file, expected {what}")))
        };

        let (_, header) = next("header")?;
        let mut header_fields = header.split_whitespace();
        if header_fields.next() != Some(MAGIC) {
            return Err(bad("missing checkpoint header".into()));
        }
        let version: u32 = header_fields
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing version".into()))?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }

        let (lineno, dims_line) = next("dims")?;
        let fields: Vec<&str> = dims_line.split_whitespace().collect();
        let nums: Vec<usize> = fields
            .iter()
            .skip(1)
            .map(|v| v.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(format!("line {}: bad dims", lineno + 1)))?;
        if fields.first() != Some(&"dims") || nums.len() != 5 {
            return Err(bad(format!("line {}: bad dims", lineno + 1)));
        }
        let num_nodes = nums[0];
        let dims = ModelDims {
            input: nums[1],
            hidden: nums[2],
            embed: nums[3],
            layers: nums[4],
        };
        dims.validate()?;

        let (lineno, meta) = next("meta")?;
        let inference_q = match meta.split_whitespace().collect::<Vec<_>>()[..] {
            ["meta", "inference_q", v] => v
                .parse::<f64>()
                .map_err(|_| bad(format!("line {}: bad inference_q", lineno + 1)))?,
            _ => return Err(bad(format!("line {}: expected meta inference_q", lineno + 1))),
        };

        // Shapes come from a template built with the declared dims.
        let mut params = init_params(num_nodes, &dims, &mut ChaCha8Rng::seed_from_u64(0));
        for t in params.tensors_mut() {
            let (lineno, head) = next("tensor header")?;
            let expected = format!("tensor {} {} {}", t.name, t.shape.0, t.shape.1);
            if head.trim() != expected {
                return Err(bad(format!(
                    "line {}: expected '{expected}', found '{head}'",
                    lineno + 1
                )));
            }
            let cols = t.shape.1;
            for (r, chunk) in t.data.chunks_mut(cols.max(1)).enumerate() {
                let (lineno, row) = next("tensor row")?;
                let values: Vec<f64> = row
                    .split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(format!("line {}: unparsable value", lineno + 1)))?;
                if values.len() != chunk.len() {
                    return Err(bad(format!(
                        "line {}: {} row {r} has {} values, expected {}",
                        lineno + 1,
                        t.name,
                        values.len(),
                        chunk.len()
                    )));
                }
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return Err(bad(format!("line {}: non-finite value {v}", lineno + 1)));
                }
                chunk.copy_from_slice(&values);
            }
        }
        match next("end marker")? {
            (_, "end") => {}
            (lineno, other) => {
                return Err(bad(format!("line {}: expected 'end', found '{other}'", lineno + 1)))
            }
        }
        Ok(Checkpoint {
            params,
            inference_q,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::parse(&text)
    }
}
