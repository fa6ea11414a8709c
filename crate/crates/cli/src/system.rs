//! Line-oriented `.sys` input files.
//!
//! ```text
//! system = l3
//! coordinates = q1 q2 q3:pq3
//! order = 1
//! parameters = m
//! L = (1/2)*d(q1)^2 + ...
//!
//! [options]
//! path = legendre
//! endpoint = t1
//! gauge_fixing = true
//! epsilon.Psi1 = 1/2
//!
//! [gauge]
//! zeta1 = -P1
//!
//! [chart]
//! file = chart.json
//! ```
//!
//! `[chart]` holds either `file = ...` or one `Xi1 = <expr>` row per chart
//! coordinate. Blank lines and `#` comments are ignored.

use std::path::{Path, PathBuf};

use wellposed_core::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SystemFile {
    pub name: String,
    /// Coordinate names with optional momentum names.
    pub coordinates: Vec<(String, Option<String>)>,
    pub order: u8,
    pub parameters: Vec<String>,
    pub lagrangian: String,
    pub options: Options,
    /// `(multiplier, expression)` in file order.
    pub gauge: Vec<(String, String)>,
    pub chart: Option<ChartSource>,
    /// Directory relative chart files are resolved against.
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Options {
    pub path: Option<String>,
    pub endpoint: Option<String>,
    pub gauge_fixing: Option<bool>,
    pub epsilon: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChartSource {
    File(PathBuf),
    Rows(Vec<(String, String)>),
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Top,
    Options,
    Gauge,
    Chart,
}

fn input(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Input(format!("line {line}: {msg}"))
}

impl SystemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let mut sf = Self::parse(&text).map_err(|e| match e {
            Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
            e => e,
        })?;
        sf.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(sf)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sf = SystemFile::default();
        let mut section = Section::Top;
        let mut seen: Vec<String> = Vec::new();
        let mut order = None;
        let mut chart_file = None;
        let mut chart_rows = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let l = raw.split('#').next().unwrap().trim();
            if l.is_empty() {
                continue;
            }
            if let Some(name) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = match name.trim() {
                    "options" => Section::Options,
                    "gauge" => Section::Gauge,
                    "chart" => Section::Chart,
                    other => return Err(input(line, format!("unknown section [{other}]"))),
                };
                let tag = format!("[{}]", name.trim());
                if seen.contains(&tag) {
                    return Err(input(line, format!("duplicate section {tag}")));
                }
                seen.push(tag);
                continue;
            }
            let (key, value) = l
                .split_once('=')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| input(line, "expected `key = value`"))?;
            if key.is_empty() || value.is_empty() {
                return Err(input(line, "expected `key = value`"));
            }
            let scoped = match section {
                Section::Top => key.to_string(),
                Section::Options => format!("options.{key}"),
                Section::Gauge => format!("gauge.{key}"),
                Section::Chart => format!("chart.{key}"),
            };
            if seen.contains(&scoped) {
                return Err(input(line, format!("duplicate key `{key}`")));
            }
            seen.push(scoped);
            match section {
                Section::Top => match key {
                    "system" => sf.name = value.to_string(),
                    "coordinates" => {
                        for c in value.split_whitespace() {
                            sf.coordinates.push(match c.split_once(':') {
                                Some((q, p)) => (q.to_string(), Some(p.to_string())),
                                None => (c.to_string(), None),
                            });
                        }
                    }
                    "order" => {
                        order = Some(
                            value
                                .parse::<u8>()
                                .map_err(|_| input(line, format!("order `{value}` is not an integer")))?,
                        )
                    }
                    "parameters" => sf.parameters = value.split_whitespace().map(str::to_string).collect(),
                    "L" => sf.lagrangian = value.to_string(),
                    _ => return Err(input(line, format!("unknown key `{key}`"))),
                },
                Section::Options => match key {
                    "path" => sf.options.path = Some(value.to_string()),
                    "endpoint" => sf.options.endpoint = Some(value.to_string()),
                    "gauge_fixing" => {
                        sf.options.gauge_fixing = Some(match value {
                            "true" => true,
                            "false" => false,
                            _ => return Err(input(line, "gauge_fixing must be true or false")),
                        })
                    }
                    _ => match key.strip_prefix("epsilon.") {
                        Some(coord) if !coord.is_empty() => {
                            sf.options.epsilon.push((coord.to_string(), value.to_string()))
                        }
                        _ => return Err(input(line, format!("unknown option `{key}`"))),
                    },
                },
                Section::Gauge => sf.gauge.push((key.to_string(), value.to_string())),
                Section::Chart => {
                    if key == "file" {
                        chart_file = Some(PathBuf::from(value));
                    } else {
                        chart_rows.push((key.to_string(), value.to_string()));
                    }
                }
            }
        }
        for required in ["system", "coordinates", "order", "L"] {
            if !seen.iter().any(|s| s == required) {
                return Err(Error::Input(format!("missing required key `{required}`")));
            }
        }
        if sf.coordinates.is_empty() {
            return Err(Error::Input("no coordinates declared".into()));
        }
        sf.order = order.unwrap();
        sf.chart = match (chart_file, chart_rows.is_empty()) {
            (Some(_), false) => {
                return Err(Error::Input("[chart] takes either `file` or rows, not both".into()))
            }
            (Some(f), true) => Some(ChartSource::File(f)),
            (None, false) => Some(ChartSource::Rows(chart_rows)),
            (None, true) => None,
        };
        Ok(sf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_sections() {
        let sf = SystemFile::parse(
            "system = s\ncoordinates = x y:py\norder = 1\nL = d(x)^2 # kinetic\n\n[options]\npath = legendre\nepsilon.Psi1 = 1/2\n[gauge]\nzeta1 = -P1\n[chart]\nfile = c.json\n",
        )
        .unwrap();
        assert_eq!(sf.coordinates, vec![("x".into(), None), ("y".into(), Some("py".into()))]);
        assert_eq!(sf.lagrangian, "d(x)^2");
        assert_eq!(sf.options.epsilon, vec![("Psi1".into(), "1/2".into())]);
        assert_eq!(sf.gauge, vec![("zeta1".into(), "-P1".into())]);
        assert_eq!(sf.chart, Some(ChartSource::File("c.json".into())));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SystemFile::parse("system = s\ncoordinates = x\norder = 1\nL = x\nmass = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 5: unknown key `mass`"));
        let err = SystemFile::parse("system = s\ncoordinates = x\norder = 1\nL = x\n[options]\nfoo = 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown option `foo`"));
        assert!(SystemFile::parse("system = s\n[extras]\n").is_err());
    }

    #[test]
    fn missing_and_duplicate_keys() {
        let err = SystemFile::parse("system = s\ncoordinates = x\nL = x\n").unwrap_err();
        assert!(err.to_string().contains("`order`"));
        assert!(SystemFile::parse("system = s\nsystem = t\n").is_err());
    }
}
