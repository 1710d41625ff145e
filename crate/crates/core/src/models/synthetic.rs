//! Built-in models with known ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{BlackBox, ModelError, ModelHandle, ScoreQuery};
use crate::decompose::RawInput;
use crate::image::ImageBuffer;

/// `bias + Σ coeff·[u and v adjacent] + N(0, σ²)`, computed from placement
/// metadata rather than from the rendered input.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub terms: Vec<((usize, usize), f64)>,
    pub bias: f64,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl SyntheticSpec {
    pub fn new(terms: Vec<((usize, usize), f64)>) -> Self {
        Self {
            terms,
            bias: 0.0,
            noise_sigma: 0.0,
            noise_seed: 0,
        }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.noise_seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct PairSyntheticModel {
    spec: SyntheticSpec,
    noise: Option<Normal<f64>>,
}

impl PairSyntheticModel {
    pub fn new(spec: SyntheticSpec) -> Result<Self, ModelError> {
        let invalid = |reason: String| ModelError::InvalidSpec {
            spec: format!("{spec:?}"),
            reason,
        };
        if let Some(((u, v), _)) = spec.terms.iter().find(|((u, v), _)| u == v) {
            return Err(invalid(format!("pair ({u}, {v}) is a self-pair")));
        }
        if spec.terms.iter().any(|(_, c)| !c.is_finite()) || !spec.bias.is_finite() {
            return Err(invalid("coefficients must be finite".into()));
        }
        if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
            return Err(invalid("noise sigma must be >= 0".into()));
        }
        let noise = (spec.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, spec.noise_sigma).expect("sigma validated"));
        Ok(Self { spec, noise })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }
}

fn fnv1a(seed: u64, values: &[usize]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for &v in values {
        for b in (v as u64).to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

impl BlackBox for PairSyntheticModel {
    fn score(&mut self, queries: &[ScoreQuery<'_>], _: usize) -> Result<Vec<f64>, ModelError> {
        queries
            .iter()
            .map(|q| {
                let info = q.placement.ok_or_else(|| {
                    ModelError::InvalidInput("pair model needs placement metadata".into())
                })?;
                let mut score = self.spec.bias;
                for &((u, v), coeff) in &self.spec.terms {
                    if u.max(v) >= info.element_count {
                        return Err(ModelError::InvalidInput(format!(
                            "pair ({u}, {v}) outside {} elements",
                            info.element_count
                        )));
                    }
                    if info.adjacent(u, v) {
                        score += coeff;
                    }
                }
                if let Some(noise) = &self.noise {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(fnv1a(self.spec.noise_seed, info.placement));
                    score += noise.sample(&mut rng);
                }
                Ok(score)
            })
            .collect()
    }

    fn describe(&self) -> String {
        let terms: Vec<String> = self
            .spec
            .terms
            .iter()
            .map(|((u, v), c)| format!("{u}-{v}={c}"))
            .collect();
        format!(
            "builtin:pairs:{};bias={};noise={};noise_seed={}",
            terms.join(","),
            self.spec.bias,
            self.spec.noise_sigma,
            self.spec.noise_seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantModel(pub f64);

impl BlackBox for ConstantModel {
    fn score(&mut self, queries: &[ScoreQuery<'_>], _: usize) -> Result<Vec<f64>, ModelError> {
        Ok(vec![self.0; queries.len()])
    }

    fn describe(&self) -> String {
        format!("builtin:const:{}", self.0)
    }
}

fn image_of<'a>(q: &ScoreQuery<'a>) -> Result<&'a ImageBuffer, ModelError> {
    match q.input {
        RawInput::Image(img) => Ok(img),
        RawInput::Text(_) => Err(ModelError::InvalidInput("image model got text".into())),
    }
}

/// Fraction of pixels that differ from a fill color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurvivingPixelModel {
    pub fill: [u8; 3],
}

impl BlackBox for SurvivingPixelModel {
    fn score(&mut self, queries: &[ScoreQuery<'_>], _: usize) -> Result<Vec<f64>, ModelError> {
        queries
            .iter()
            .map(|q| {
                let img = image_of(q)?;
                let surviving = img
                    .pixels()
                    .chunks_exact(3)
                    .filter(|px| **px != self.fill)
                    .count();
                Ok(surviving as f64 / img.pixel_count() as f64)
            })
            .collect()
    }

    fn describe(&self) -> String {
        format!("builtin:pixel-fraction:{}", hex_color(self.fill))
    }
}

/// Responds to two colors touching: counts 4-neighbor pixel pairs where one
/// pixel has color `first` and the other `second`, and maps the count to
/// `floor + (1 − floor)·min(1, count / reference_len)`.
///
/// On an image where a `first` patch sits next to a `second` patch, the
/// score depends on whether those two patches stay adjacent, and drops when
/// either is painted over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorBoundaryModel {
    pub first: [u8; 3],
    pub second: [u8; 3],
    pub reference_len: usize,
    pub floor: f64,
}

impl ColorBoundaryModel {
    pub const RED: [u8; 3] = [255, 0, 0];
    pub const BLUE: [u8; 3] = [0, 0, 255];

    pub fn red_blue(reference_len: usize) -> Self {
        Self {
            first: Self::RED,
            second: Self::BLUE,
            reference_len: reference_len.max(1),
            floor: 0.05,
        }
    }

    pub fn contact_count(&self, img: &ImageBuffer) -> usize {
        let w = img.width();
        let class: Vec<u8> = img
            .pixels()
            .chunks_exact(3)
            .map(|p| {
                if p == self.first {
                    1
                } else if p == self.second {
                    2
                } else {
                    0
                }
            })
            .collect();
        let touching = |a: u8, b: u8| a | b == 3;
        let horizontal: usize = class
            .chunks_exact(w)
            .map(|row| row.windows(2).filter(|p| touching(p[0], p[1])).count())
            .sum();
        let vertical = class
            .iter()
            .zip(&class[w..])
            .filter(|(&a, &b)| touching(a, b))
            .count();
        horizontal + vertical
    }
}

impl BlackBox for ColorBoundaryModel {
    fn score(&mut self, queries: &[ScoreQuery<'_>], _: usize) -> Result<Vec<f64>, ModelError> {
        queries
            .iter()
            .map(|q| {
                let contact = self.contact_count(image_of(q)?) as f64;
                let frac = (contact / self.reference_len as f64).min(1.0);
                Ok(self.floor + (1.0 - self.floor) * frac)
            })
            .collect()
    }

    fn describe(&self) -> String {
        format!(
            "builtin:boundary:{}:{}:{}",
            self.reference_len,
            hex_color(self.first),
            hex_color(self.second)
        )
    }
}

/// Word-valence sentiment fixture with negation of the following word.
///
/// Class 1 is the positive-sentiment probability, class 0 its complement.
#[derive(Debug, Clone)]
pub struct LexiconSentimentModel {
    lexicon: Vec<(&'static str, f64)>,
}

const NEGATORS: [&str; 5] = ["not", "never", "no", "don't", "isn't"];

impl Default for LexiconSentimentModel {
    fn default() -> Self {
        Self {
            lexicon: vec![
                ("love", 2.0),
                ("like", 1.0),
                ("happy", 2.0),
                ("good", 1.5),
                ("great", 2.0),
                ("nice", 1.0),
                ("wonderful", 2.0),
                ("enjoyed", 1.5),
                ("hate", -2.0),
                ("suffer", -2.0),
                ("bad", -1.5),
                ("terrible", -2.0),
                ("awful", -2.0),
                ("boring", -1.5),
                ("sad", -1.5),
            ],
        }
    }
}

impl LexiconSentimentModel {
    fn valence(&self, word: &str) -> f64 {
        self.lexicon
            .iter()
            .find(|(w, _)| *w == word)
            .map_or(0.0, |(_, v)| *v)
    }

    pub fn positive_probability(&self, text: &str) -> f64 {
        let words: Vec<String> = text
            .split_whitespace()
            .map(|w| {
                w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
                    .to_lowercase()
            })
            .collect();
        let mut logit = 0.0;
        for (i, w) in words.iter().enumerate() {
            let negated = i > 0 && NEGATORS.contains(&words[i - 1].as_str());
            let v = self.valence(w);
            logit += if negated { -v } else { v };
        }
        1.0 / (1.0 + (-logit).exp())
    }
}

impl BlackBox for LexiconSentimentModel {
    fn score(&mut self, queries: &[ScoreQuery<'_>], target_class: usize) -> Result<Vec<f64>, ModelError> {
        queries
            .iter()
            .map(|q| match q.input {
                RawInput::Text(t) => {
                    let p = self.positive_probability(t);
                    Ok(if target_class == 0 { 1.0 - p } else { p })
                }
                RawInput::Image(_) => Err(ModelError::InvalidInput("text model got an image".into())),
            })
            .collect()
    }

    fn describe(&self) -> String {
        "builtin:sentiment".into()
    }
}

fn hex_color(c: [u8; 3]) -> String {
    format!("{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn parse_hex_color(s: &str) -> Option<[u8; 3]> {
    let s = s.trim_start_matches('#');
    if s.len() != 6 {
        return None;
    }
    let byte = |i: usize| u8::from_str_radix(&s[i..i + 2], 16).ok();
    Some([byte(0)?, byte(2)?, byte(4)?])
}

/// Parses a built-in model spec:
///
/// * `const:<value>`
/// * `pairs:<u>-<v>=<coeff>[,...][;bias=<b>][;noise=<sigma>][;noise_seed=<s>]`
/// * `boundary[:<reference_len>[:<rrggbb>:<rrggbb>]]`
/// * `pixel-fraction:<rrggbb>`
/// * `sentiment`
pub fn parse_builtin(spec: &str) -> Result<ModelHandle, ModelError> {
    let invalid = |reason: &str| ModelError::InvalidSpec {
        spec: spec.to_owned(),
        reason: reason.to_owned(),
    };
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "const" => {
            let v: f64 = rest.parse().map_err(|_| invalid("expected const:<value>"))?;
            Ok(ModelHandle::builtin(ConstantModel(v)))
        }
        "pairs" => {
            let mut parts = rest.split(';');
            let mut terms = Vec::new();
            for term in parts.next().unwrap_or("").split(',').filter(|t| !t.is_empty()) {
                let (pair, coeff) = term.split_once('=').ok_or_else(|| invalid("term must be u-v=coeff"))?;
                let (u, v) = pair.split_once('-').ok_or_else(|| invalid("pair must be u-v"))?;
                let u: usize = u.trim().parse().map_err(|_| invalid("bad element index"))?;
                let v: usize = v.trim().parse().map_err(|_| invalid("bad element index"))?;
                let c: f64 = coeff.trim().parse().map_err(|_| invalid("bad coefficient"))?;
                terms.push(((u, v), c));
            }
            let mut s = SyntheticSpec::new(terms);
            for opt in parts {
                let (key, value) = opt.split_once('=').ok_or_else(|| invalid("option must be key=value"))?;
                match key.trim() {
                    "bias" => s.bias = value.parse().map_err(|_| invalid("bad bias"))?,
                    "noise" => s.noise_sigma = value.parse().map_err(|_| invalid("bad noise"))?,
                    "noise_seed" => s.noise_seed = value.parse().map_err(|_| invalid("bad noise_seed"))?,
                    _ => return Err(invalid("unknown option")),
                }
            }
            Ok(ModelHandle::builtin(PairSyntheticModel::new(s)?))
        }
        "boundary" => {
            let fields: Vec<&str> = rest.split(':').filter(|f| !f.is_empty()).collect();
            let mut model = ColorBoundaryModel::red_blue(32);
            if let Some(len) = fields.first() {
                model.reference_len = len.parse::<usize>().map_err(|_| invalid("bad reference length"))?.max(1);
            }
            match fields.len() {
                0 | 1 => {}
                3 => {
                    model.first = parse_hex_color(fields[1]).ok_or_else(|| invalid("bad color"))?;
                    model.second = parse_hex_color(fields[2]).ok_or_else(|| invalid("bad color"))?;
                }
                _ => return Err(invalid("expected boundary[:len[:rrggbb:rrggbb]]")),
            }
            Ok(ModelHandle::builtin(model))
        }
        "pixel-fraction" => {
            let fill = parse_hex_color(rest).ok_or_else(|| invalid("expected pixel-fraction:<rrggbb>"))?;
            Ok(ModelHandle::builtin(SurvivingPixelModel { fill }))
        }
        "sentiment" => Ok(ModelHandle::builtin(LexiconSentimentModel::default())),
        _ => Err(invalid("unknown builtin model")),
    }
}
