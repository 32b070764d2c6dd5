//! Named experiment definitions loaded from a TOML file.
//!
//! ```toml
//! [[scenario]]
//! name = "s2-oec"
//! dataset = "s2"
//! seed = 0
//! [scenario.run]
//! algorithm = { kind = "oec" }
//! lambda = 0.9
//! ```
//!
//! A scenario reads either a generated `dataset` or an `input` CSV (with an
//! optional `schema` and `change_events` sidecar). Relative input paths are
//! resolved against the scenario file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cvi::IndexKind;
use crate::datagen::Dataset;
use crate::engine::{run, Algorithm, RunConfig, RunOutput};
use crate::error::{Error, Result};
use crate::io::{read_change_events, read_stream, write_events, write_trace, StreamSchema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub dataset: Option<Dataset>,
    pub input: Option<PathBuf>,
    pub schema: Option<StreamSchema>,
    /// Event file whose `ground_truth_change` records mark changes in `input`.
    pub change_events: Option<PathBuf>,
    /// Dataset seed; defaults to the dataset's default seed.
    pub seed: Option<u64>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub scenario: Vec<Scenario>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioFile {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
        file.base_dir = base_dir.into();
        for (i, s) in file.scenario.iter().enumerate() {
            if file.scenario[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Config(format!("scenario name '{}' is not unique", s.name)));
            }
            if s.dataset.is_some() == s.input.is_some() {
                return Err(Error::Scenario {
                    name: s.name.clone(),
                    source: Box::new(Error::Config("exactly one of `dataset` and `input` is required".into())),
                });
            }
            s.run.validate().map_err(|e| Error::Scenario {
                name: s.name.clone(),
                source: Box::new(e),
            })?;
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn get(&self, name: &str) -> Result<&Scenario> {
        self.scenario.iter().find(|s| s.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.scenario.iter().map(|s| s.name.as_str()).collect();
            Error::Config(format!("unknown scenario '{name}' (known: {})", known.join(", ")))
        })
    }
}

/// Command-line adjustments applied on top of a scenario.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub indices: Option<Vec<IndexKind>>,
}

impl Scenario {
    pub fn with_overrides(&self, o: &Overrides) -> Result<Scenario> {
        let mut s = self.clone();
        if let Some(seed) = o.seed {
            s.seed = Some(seed);
        }
        if let Some(lambda) = o.lambda {
            s.run.lambda = lambda;
        }
        if let Some(k) = o.k {
            match &mut s.run.algorithm {
                Algorithm::SkMeans { k: current } => *current = k,
                Algorithm::Oec(_) => {
                    return Err(Error::Config("--k applies only to sequential k-means scenarios".into()))
                }
            }
        }
        if let Some(indices) = &o.indices {
            s.run.indices = indices.clone();
        }
        s.run.seed = s.seed.unwrap_or(0);
        s.run.validate()?;
        Ok(s)
    }

    /// Loads or generates the stream and runs it.
    pub fn execute(&self, base_dir: &Path) -> Result<RunOutput> {
        self.execute_inner(base_dir).map_err(|e| Error::Scenario {
            name: self.name.clone(),
            source: Box::new(e),
        })
    }

    fn execute_inner(&self, base_dir: &Path) -> Result<RunOutput> {
        let (points, changes) = match (&self.dataset, &self.input) {
            (Some(d), _) => {
                let stream = d.generate(self.seed.unwrap_or_else(|| d.default_seed()));
                (stream.points, stream.change_events)
            }
            (None, Some(input)) => {
                let schema = self.schema.clone().unwrap_or_default();
                let data = read_stream(base_dir.join(input), &schema)?;
                let changes = match &self.change_events {
                    Some(p) => read_change_events(base_dir.join(p))?,
                    None => Vec::new(),
                };
                (data.points, changes)
            }
            (None, None) => return Err(Error::Config("no dataset or input".into())),
        };
        let mut config = self.run.clone();
        config.seed = self.seed.unwrap_or(config.seed);
        run(&points, &changes, &config)
    }

    pub fn trace_path(&self, out_dir: &Path) -> PathBuf {
        out_dir.join(format!("{}.trace.csv", self.name))
    }

    pub fn events_path(&self, out_dir: &Path) -> PathBuf {
        out_dir.join(format!("{}.events.jsonl", self.name))
    }

    /// Runs the scenario and writes `<name>.trace.csv` and `<name>.events.jsonl` into `out_dir`.
    pub fn run_to(&self, base_dir: &Path, out_dir: &Path) -> Result<RunOutput> {
        let out = self.execute(base_dir)?;
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        write_trace(&out.trace, self.trace_path(out_dir))?;
        write_events(&out.events, self.events_path(out_dir))?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = r#"
[[scenario]]
name = "a"
dataset = "s3"
seed = 7
[scenario.run]
algorithm = { kind = "sk_means", k = 10 }
indices = ["xb", "xb_lambda"]

[[scenario]]
name = "b"
dataset = "s2"
[scenario.run]
algorithm = { kind = "oec", n_s = 25 }
"#;

    #[test]
    fn parses_blocks() {
        let f = ScenarioFile::parse(FILE, ".").unwrap();
        let a = f.get("a").unwrap();
        assert_eq!(a.run.algorithm, Algorithm::SkMeans { k: 10 });
        assert_eq!(a.run.indices, vec![IndexKind::Xb, IndexKind::XbLambda]);
        assert_eq!(a.run.lambda, 0.9);
        match &f.get("b").unwrap().run.algorithm {
            Algorithm::Oec(c) => {
                assert_eq!(c.n_s, 25);
                assert_eq!(c.gamma_eff, 0.99);
            }
            other => panic!("{other:?}"),
        }
        assert!(f.get("c").is_err());
    }

    #[test]
    fn rejects_duplicates_and_bad_blocks() {
        let dup = "[[scenario]]\nname='x'\ndataset='s1'\n[[scenario]]\nname='x'\ndataset='s2'\n";
        assert!(ScenarioFile::parse(dup, ".").is_err());
        let neither = "[[scenario]]\nname='x'\n";
        assert!(ScenarioFile::parse(neither, ".").is_err());
        let typo = "[[scenario]]\nname='x'\ndataset='s1'\nlamda=0.5\n";
        assert!(ScenarioFile::parse(typo, ".").is_err());
    }

    #[test]
    fn overrides() {
        let f = ScenarioFile::parse(FILE, ".").unwrap();
        let o = Overrides {
            k: Some(4),
            lambda: Some(0.5),
            seed: Some(3),
            ..Overrides::default()
        };
        let a = f.get("a").unwrap().with_overrides(&o).unwrap();
        assert_eq!(a.run.algorithm, Algorithm::SkMeans { k: 4 });
        assert_eq!(a.run.lambda, 0.5);
        assert_eq!(a.seed, Some(3));
        assert!(f.get("b").unwrap().with_overrides(&o).is_err());
    }

    #[test]
    fn missing_input_names_path() {
        let text = "[[scenario]]\nname='real'\ninput='no/such/file.csv'\n";
        let f = ScenarioFile::parse(text, "/tmp").unwrap();
        let err = f.get("real").unwrap().execute(Path::new("/tmp")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("real") && msg.contains("no/such/file.csv"), "{msg}");
    }
}
