//! Runs a system file through reduction, constraint analysis, chart
//! construction and embedding, producing the JSON report sections.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num::BigRational;
use serde::Serialize;
use wellposed_core::chart::{
    affine_form, build_chart, fmt_float, frobenius_check, CanonicalChart, ChartFile, Entries,
    Entry, FloatPoly, Role, RowRole, Violation,
};
use wellposed_core::dirac::{analyze, ConstraintClass, DiracResult};
use wellposed_core::embedding::{
    boundary_report, chart_hamiltonian, effective_hamiltonian, integral_constant_budget,
    plan_embedding, pullback_total_lagrangian, select_embedding, BoundaryReport, ChartPoly,
    EmbeddingPlan, EmbeddingRegistry, Endpoint, Gauge, IntegralConstants, PlanOptions,
};
use wellposed_core::error::{Error, Result};
use wellposed_core::mechanics::{LagrangianSystem, Reduced, ReductionRegistry};
use wellposed_core::symkernel::{parse_expr, Expr, SymbolKind, SymbolTable};

use crate::system::{ChartSource, SystemFile};

pub const SCHEMA_VERSION: u32 = 1;

/// Command-line overrides of the file's `[options]`.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub path: Option<String>,
    pub gauge_fixing: Option<GaugeRequest>,
    pub endpoint: Option<String>,
    pub epsilon: Vec<(String, String)>,
    pub chart: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GaugeRequest {
    /// Use the file's `[gauge]` section, or solve for the multipliers.
    Default,
    Conditions(Vec<(String, String)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartOrigin {
    Constructed,
    Supplied,
}

pub struct Session {
    pub file: SystemFile,
    pub settings: Settings,
    pub table: SymbolTable,
    pub path: String,
    pub reduced: Reduced,
    pub dirac: DiracResult,
}

fn parse_in(text: &str, table: &SymbolTable, what: &str) -> Result<Expr> {
    parse_expr(text, table).map_err(|e| Error::Input(format!("{what}: {e}")))
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    parse_expr(text, &SymbolTable::new())
        .ok()
        .and_then(|e| e.as_constant())
        .ok_or_else(|| Error::Input(format!("`{text}` is not a rational constant")))
}

impl Session {
    pub fn open(file: SystemFile, settings: Settings) -> Result<Self> {
        let mut table = SymbolTable::new();
        table.add("t", SymbolKind::Time)?;
        for p in &file.parameters {
            table.add(p, SymbolKind::Parameter)?;
        }
        let mut coords = Vec::new();
        let mut momenta = Vec::new();
        for (q, p) in &file.coordinates {
            if table.contains(q) {
                return Err(Error::Input(format!("coordinate `{q}` declared twice")));
            }
            coords.push(table.add_position(q)?);
            momenta.push(p.clone().unwrap_or_else(|| wellposed_core::mechanics::momentum_name(q)));
        }
        let l = parse_in(&file.lagrangian, &table, "L")?;
        let sys = LagrangianSystem::with_momenta(coords, momenta, file.order, l, &table)?;
        let path = settings
            .path
            .clone()
            .or_else(|| file.options.path.clone())
            .unwrap_or_else(|| if file.order == 1 { "legendre" } else { "counter-term" }.to_string());
        let reduced = ReductionRegistry::with_builtins().reduce(Some(&path), &sys, &mut table)?;
        let dirac = analyze(&reduced.system, &mut table)?;
        Ok(Session {
            file,
            settings,
            table,
            path,
            reduced,
            dirac,
        })
    }

    pub fn load(path: &Path, settings: Settings) -> Result<Self> {
        Self::open(SystemFile::load(path)?, settings)
    }

    /// The supplied chart (command line, then file), or a constructed one.
    pub fn chart(&mut self) -> Result<(CanonicalChart, ChartOrigin)> {
        let source = match &self.settings.chart {
            Some(p) => Some(ChartSource::File(p.clone())),
            None => self.file.chart.clone().map(|s| match s {
                ChartSource::File(p) if p.is_relative() => ChartSource::File(self.file.base_dir.join(p)),
                s => s,
            }),
        };
        let Some(source) = source else {
            return Ok((build_chart(&self.dirac, &mut self.table)?, ChartOrigin::Constructed));
        };
        let phase = &self.dirac.phase;
        let mut chart = match source {
            ChartSource::File(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::Input(format!("cannot read chart {}: {e}", p.display())))?;
                let cf: ChartFile = serde_json::from_str(&text)
                    .map_err(|e| Error::Input(format!("chart {}: {e}", p.display())))?;
                cf.to_chart(phase, &self.table)?
            }
            ChartSource::Rows(rows) => {
                let mut parsed = Vec::new();
                for (name, text) in rows {
                    let (role, index) = Role::parse_name(&name)
                        .ok_or_else(|| Error::Input(format!("`{name}` is not a chart coordinate name")))?;
                    let e = parse_in(&text, &self.table, &name)?;
                    let f = affine_form(&e, phase)
                        .ok_or_else(|| Error::Input(format!("chart row `{name}` is not affine in phase space")))?;
                    parsed.push((
                        RowRole { role, index },
                        Entry::Exact {
                            coeffs: f.coeffs,
                            offset: f.constant,
                        },
                    ));
                }
                CanonicalChart::from_rows(phase, parsed)?
            }
        };
        chart.register(&mut self.table)?;
        Ok((chart, ChartOrigin::Supplied))
    }

    pub fn gauge_fixing(&self) -> Option<GaugeRequest> {
        self.settings.gauge_fixing.clone().or(match self.file.options.gauge_fixing {
            Some(true) => Some(GaugeRequest::Default),
            _ => None,
        })
    }

    pub fn plan_options(&self) -> Result<PlanOptions> {
        let endpoint = match self
            .settings
            .endpoint
            .as_deref()
            .or(self.file.options.endpoint.as_deref())
        {
            None | Some("t1") => Endpoint::T1,
            Some("t2") => Endpoint::T2,
            Some(other) => return Err(Error::Input(format!("endpoint must be t1 or t2, got `{other}`"))),
        };
        let mut epsilon = BTreeMap::new();
        for (k, v) in self.file.options.epsilon.iter().chain(&self.settings.epsilon) {
            epsilon.insert(k.clone(), parse_rational(v)?);
        }
        let request = self.gauge_fixing();
        let conditions = match &request {
            Some(GaugeRequest::Conditions(c)) => c.clone(),
            Some(GaugeRequest::Default) => self.file.gauge.clone(),
            None => Vec::new(),
        };
        let gauge = if request.is_none() {
            Gauge::None
        } else if conditions.is_empty() {
            Gauge::Auto
        } else {
            let mut map = BTreeMap::new();
            for (z, text) in conditions {
                let v = self
                    .table
                    .get(&z)
                    .filter(|v| self.dirac.zetas.contains(v))
                    .ok_or_else(|| Error::Input(format!("`{z}` is not a Lagrange multiplier")))?;
                map.insert(v, parse_in(&text, &self.table, &z)?);
            }
            Gauge::Conditions(map)
        };
        Ok(PlanOptions {
            gauge_fixing: request.is_some(),
            gauge,
            endpoint,
            epsilon,
        })
    }

    pub fn plan(&self, chart: &CanonicalChart) -> Result<EmbeddingPlan> {
        let opts = self.plan_options()?;
        let registry = EmbeddingRegistry::with_builtins();
        let emb = select_embedding(&self.dirac, opts.gauge_fixing, &registry)?;
        plan_embedding(&self.dirac, chart, emb, &opts, &self.table)
    }

    fn s(&self, e: &Expr) -> String {
        e.to_string_with(&self.table)
    }

    pub fn analysis_report(&self) -> Result<AnalysisReport> {
        let d = &self.dirac;
        let red = &self.reduced;
        let frob = frobenius_check(d)?;
        let constraints = d
            .constraints
            .iter()
            .map(|c| ConstraintReport {
                expr: self.s(&c.expr),
                chain: c.chain + 1,
                generation: c.generation + 1,
                class: c.class,
                repeated_factor: c.repeated_factor,
                original: c.original.as_ref().map(|e| self.s(e)),
            })
            .collect();
        Ok(AnalysisReport {
            schema_version: SCHEMA_VERSION,
            system: self.file.name.clone(),
            reduction: ReductionReport {
                path: self.path.clone(),
                phase_space: d.phase.z().iter().map(|&v| self.table.name(v).to_string()).collect(),
                hamiltonian: self.s(&red.system.hamiltonian),
                primaries: red.system.primaries.iter().map(|e| self.s(e)).collect(),
                pivots: red.system.pivots.iter().map(|e| self.s(e)).collect(),
                counter_term: red.counter_term.as_ref().map(|ct| CounterTermReport {
                    w: self.s(&ct.w),
                    lagrangian: self.s(&ct.reduced.lagrangian),
                }),
            },
            constraints,
            multipliers: MultiplierReport {
                solved: d
                    .multipliers
                    .iter()
                    .filter(|(z, _)| !d.free_multipliers.contains(z))
                    .map(|(z, e)| Assignment {
                        name: self.table.name(*z).to_string(),
                        value: self.s(e),
                    })
                    .collect(),
                free: d.free_multipliers.iter().map(|&z| self.table.name(z).to_string()).collect(),
            },
            total_hamiltonian: self.s(&d.total_hamiltonian),
            counts: Counts {
                phase_dimension: 2 * d.n(),
                first_class: d.first_class,
                second_class: d.second_class,
                dof: d.dof(),
            },
            assumptions: d.assumptions.iter().map(|e| self.s(e)).collect(),
            flags: Flags {
                irreducibility_reductions: d.constraints.iter().filter(|c| c.original.is_some()).count(),
                rebased: d.rebased,
            },
            frobenius: FrobeniusSection {
                pass: frob.pass,
                residuals: frob
                    .residuals
                    .iter()
                    .map(|(v, e)| Assignment {
                        name: self.table.name(*v).to_string(),
                        value: self.s(e),
                    })
                    .collect(),
            },
            chart: None,
            embedding: None,
        })
    }

    pub fn chart_section(&self, chart: &CanonicalChart, origin: ChartOrigin) -> Result<ChartSection> {
        let check = chart.verify();
        let names: Vec<String> = if chart.symbols.len() == chart.roles.len() {
            chart.symbols.iter().map(|&v| self.table.name(v).to_string()).collect()
        } else {
            chart.names(&self.table)
        };
        let (matrix, offsets): (Vec<Vec<String>>, Vec<String>) = match &chart.entries {
            Entries::Exact { rows, offsets } => (
                rows.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
                offsets.iter().map(|c| c.to_string()).collect(),
            ),
            Entries::Float { rows, offsets } => (
                rows.iter().map(|r| r.iter().map(|&c| fmt_float(c)).collect()).collect(),
                offsets.iter().map(|&c| fmt_float(c)).collect(),
            ),
        };
        let rows = chart
            .roles
            .iter()
            .enumerate()
            .map(|(i, r)| ChartRowReport {
                name: names[i].clone(),
                role: r.role,
                index: r.index,
                expr: self.render_row(chart, i),
                coefficients: matrix[i].clone(),
                offset: offsets[i].clone(),
            })
            .collect();
        let hamiltonian = if check.symplectic {
            Some(if chart.is_exact() {
                self.s(&chart_hamiltonian::<Expr>(&self.dirac, chart)?)
            } else {
                chart_hamiltonian::<FloatPoly>(&self.dirac, chart)?
                    .cleaned(1e-12)
                    .to_string_with(&self.table)
            })
        } else {
            None
        };
        Ok(ChartSection {
            origin,
            exact: chart.is_exact(),
            symplectic: check.symplectic,
            violations: check.violations,
            rows,
            hamiltonian,
        })
    }

    fn render_row(&self, chart: &CanonicalChart, i: usize) -> String {
        match chart.row_expr(i) {
            Some(e) => self.s(&e),
            None => {
                let (rows, offsets) = chart.float_rows();
                let mut p = FloatPoly::constant(offsets[i]);
                for (k, &v) in chart.phase.z().iter().enumerate() {
                    p = p.add(&FloatPoly::var(v).scale(rows[i][k]));
                }
                p.to_string_with(&self.table)
            }
        }
    }

    pub fn embedding_section(&self, chart: &CanonicalChart, plan: &EmbeddingPlan) -> Result<EmbeddingSection> {
        let d = &self.dirac;
        let pullback = if chart.is_exact() {
            self.pullback_section::<Expr>(chart, plan)?
        } else {
            self.pullback_section::<FloatPoly>(chart, plan)?
        };
        let effective_hamiltonian = if d.first_class > 0 && chart.is_exact() {
            Some(self.s(&effective_hamiltonian(d, chart)?))
        } else {
            None
        };
        Ok(EmbeddingSection {
            name: plan.name.to_string(),
            symbol: plan.symbol.to_string(),
            quasi_canonical: plan.quasi,
            gauge_fixed: plan.gauge_fixed,
            fixed: plan
                .fixed
                .iter()
                .map(|(v, c)| Assignment {
                    name: self.table.name(*v).to_string(),
                    value: c.to_string(),
                })
                .collect(),
            gauge_multipliers: plan
                .gauge_multiplier_solutions
                .iter()
                .map(|(z, e)| Assignment {
                    name: self.table.name(*z).to_string(),
                    value: self.s(e),
                })
                .collect(),
            pullback,
            effective_hamiltonian,
            boundary: boundary_report(d, chart, plan, &self.table)?,
            budget: integral_constant_budget(d, plan),
        })
    }

    fn pullback_section<P: ChartPoly>(&self, chart: &CanonicalChart, plan: &EmbeddingPlan) -> Result<PullbackSection> {
        let pb = pullback_total_lagrangian::<P>(&self.dirac, chart, plan, &self.table)?;
        Ok(PullbackSection {
            lagrangian: pb.lagrangian.render(&self.table),
            constant: pb.constant.render(&self.table),
            hamiltonian: pb.hamiltonian.render(&self.table),
            total_derivative: self.s(&pb.total_derivative),
        })
    }

    /// Analysis plus chart plus embedding.
    pub fn full_report(&mut self) -> Result<AnalysisReport> {
        let mut report = self.analysis_report()?;
        let (chart, origin) = self.chart()?;
        let section = self.chart_section(&chart, origin)?;
        if !section.symplectic {
            return Err(Error::Input("supplied chart is not canonical (S^T J S != J)".into()));
        }
        report.chart = Some(section);
        let plan = self.plan(&chart)?;
        report.embedding = Some(self.embedding_section(&chart, &plan)?);
        Ok(report)
    }

    pub fn chart_report(&mut self) -> Result<AnalysisReport> {
        let mut report = self.analysis_report()?;
        let (chart, origin) = self.chart()?;
        report.chart = Some(self.chart_section(&chart, origin)?);
        Ok(report)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub system: String,
    pub reduction: ReductionReport,
    pub constraints: Vec<ConstraintReport>,
    pub multipliers: MultiplierReport,
    pub total_hamiltonian: String,
    pub counts: Counts,
    pub assumptions: Vec<String>,
    pub flags: Flags,
    pub frobenius: FrobeniusSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSection>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    pub path: String,
    pub phase_space: Vec<String>,
    pub hamiltonian: String,
    pub primaries: Vec<String>,
    /// Expressions assumed nonzero when pivoting.
    pub pivots: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counter_term: Option<CounterTermReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterTermReport {
    pub w: String,
    pub lagrangian: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintReport {
    pub expr: String,
    pub chain: usize,
    pub generation: usize,
    pub class: Option<ConstraintClass>,
    pub repeated_factor: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub original: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub name: String,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplierReport {
    pub solved: Vec<Assignment>,
    pub free: Vec<String>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Counts {
    pub phase_dimension: usize,
    pub first_class: usize,
    pub second_class: usize,
    pub dof: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Flags {
    pub irreducibility_reductions: usize,
    pub rebased: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrobeniusSection {
    pub pass: bool,
    pub residuals: Vec<Assignment>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartSection {
    pub origin: ChartOrigin,
    pub exact: bool,
    pub symplectic: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
    pub rows: Vec<ChartRowReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartRowReport {
    pub name: String,
    pub role: Role,
    pub index: usize,
    pub expr: String,
    pub coefficients: Vec<String>,
    pub offset: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PullbackSection {
    pub lagrangian: String,
    pub constant: String,
    pub hamiltonian: String,
    pub total_derivative: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingSection {
    pub name: String,
    pub symbol: String,
    pub quasi_canonical: bool,
    pub gauge_fixed: bool,
    pub fixed: Vec<Assignment>,
    pub gauge_multipliers: Vec<Assignment>,
    pub pullback: PullbackSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_hamiltonian: Option<String>,
    pub boundary: BoundaryReport,
    pub budget: IntegralConstants,
}
