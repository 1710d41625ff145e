//! Wire format of the model bridge: one compact JSON object per line over the
//! child's stdin/stdout.
//!
//! ```text
//! -> {"type":"hello","protocol":1}
//! <- {"type":"ready","protocol":1,"modalities":["image","text"]}
//! -> {"type":"score","id":0,"modality":"text","target_class":1,"inputs":[{"text":"I love you"}]}
//! <- {"type":"scores","id":0,"scores":[0.93]}
//! <- {"type":"error","id":0,"message":"..."}
//! ```

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::decompose::{Modality, RawInput};
use crate::image::{ImageBuffer, CHANNELS};

pub const PROTOCOL_VERSION: u32 = 1;

/// Messages sent by the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Request {
    Hello {
        protocol: u32,
    },
    Score {
        id: u64,
        modality: Modality,
        target_class: usize,
        inputs: Vec<WireInput>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireInput {
    Image {
        width: usize,
        height: usize,
        channels: usize,
        /// Base64 of the raw RGB8 row-major bytes.
        pixels: String,
    },
    Text {
        text: String,
    },
}

impl WireInput {
    pub fn encode(input: &RawInput) -> Self {
        match input {
            RawInput::Image(img) => WireInput::Image {
                width: img.width(),
                height: img.height(),
                channels: CHANNELS,
                pixels: BASE64.encode(img.pixels()),
            },
            RawInput::Text(text) => WireInput::Text { text: text.clone() },
        }
    }

    pub fn decode(&self) -> Result<RawInput, ModelError> {
        match self {
            WireInput::Image {
                width,
                height,
                channels,
                pixels,
            } => {
                if *channels != CHANNELS {
                    return Err(ModelError::ProtocolError(format!(
                        "unsupported channel count {channels}"
                    )));
                }
                let bytes = BASE64
                    .decode(pixels)
                    .map_err(|e| ModelError::ProtocolError(format!("bad base64: {e}")))?;
                let img = ImageBuffer::new(*width, *height, bytes)
                    .map_err(|e| ModelError::ProtocolError(e.to_string()))?;
                Ok(RawInput::Image(img))
            }
            WireInput::Text { text } => Ok(RawInput::Text(text.clone())),
        }
    }
}

/// Messages sent by the bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Response {
    Ready {
        protocol: u32,
        #[serde(default)]
        modalities: Vec<String>,
    },
    Scores {
        id: u64,
        /// `None` stands for a non-finite value the bridge emitted.
        scores: Vec<Option<f64>>,
    },
    Error {
        #[serde(default)]
        id: Option<u64>,
        message: String,
    },
}

impl Request {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("requests always serialize");
        s.push('\n');
        s
    }
}

impl Response {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("responses always serialize");
        s.push('\n');
        s
    }

    /// Parses one line. Bare `NaN`/`Infinity`/`-Infinity` tokens, which some
    /// JSON encoders emit, are read as `null` so they surface as non-finite
    /// scores instead of parse failures.
    pub fn parse(line: &str) -> Result<Self, ModelError> {
        let cleaned = replace_non_finite_literals(line.trim_end());
        serde_json::from_str(&cleaned)
            .map_err(|e| ModelError::ProtocolError(format!("malformed response `{}`: {e}", line.trim_end())))
    }
}

fn replace_non_finite_literals(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut rest = line;
    while let Some(c) = rest.chars().next() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
        } else if c == '"' {
            in_string = true;
        } else {
            let literal = ["-Infinity", "Infinity", "NaN"]
                .into_iter()
                .find(|lit| rest.starts_with(lit));
            if let Some(lit) = literal {
                out.push_str("null");
                rest = &rest[lit.len()..];
                continue;
            }
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    out
}
