//! The `sgcalc` batch driver. Every command writes one JSON document
//! `{result, budget, meta}` (the `verify` report is a bare array).
//!
//! Exit codes: 0 success, 1 domain error (one diagnostic line on stderr),
//! 2 usage error.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::TimeGrid;
use crate::backend::SemigroupBackend;
use crate::error::{Error, Result};
use crate::funcalc::{funcalc_h1, funcalc_quotient, generator, qm_evaluate};
use crate::hardy::{inverse_laplace_fft, ClassTag, HalfPlaneFunction};
use crate::operator::Operator;
use crate::resolvent::{arveson_spectrum, resolvent_continued, resolvent_laplace, DEFAULT_MARGIN};
use crate::verify::{run_suite, StockBackend, SuiteConfig};

/// Backend mini-syntax: `diag:a1,a2,…`, `mat:FILE.json`, `nilshift:DIM:UNIT`.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Diag(Vec<Complex64>),
    Mat(PathBuf),
    Nilshift { dim: usize, unit: f64 },
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| {
            format!("expected diag:..., mat:FILE or nilshift:DIM:UNIT, got '{s}'")
        })?;
        match kind {
            "diag" => rest
                .split(',')
                .map(parse_complex)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(BackendSpec::Diag),
            "mat" if !rest.is_empty() => Ok(BackendSpec::Mat(PathBuf::from(rest))),
            "nilshift" => {
                let (d, u) = rest
                    .split_once(':')
                    .ok_or_else(|| "nilshift needs DIM:UNIT".to_string())?;
                Ok(BackendSpec::Nilshift {
                    dim: d.parse().map_err(|_| format!("bad dimension '{d}'"))?,
                    unit: u.parse().map_err(|_| format!("bad unit '{u}'"))?,
                })
            }
            _ => Err(format!("unknown backend kind '{kind}'")),
        }
    }
}

impl BackendSpec {
    pub fn build(&self) -> Result<SemigroupBackend> {
        match self {
            BackendSpec::Diag(e) => SemigroupBackend::diagonal(e.clone()),
            BackendSpec::Mat(path) => {
                let text = read(path)?;
                let a: Operator = serde_json::from_str(&text)
                    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
                SemigroupBackend::matrix_exp(a)
            }
            BackendSpec::Nilshift { dim, unit } => SemigroupBackend::nilpotent_shift(*dim, *unit),
        }
    }
}

/// Parses `re+imi`, `re-imi`, `imi` or a plain real.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let s = s.trim();
    let bad = || format!("expected a complex number like -5+0i, got '{s}'");
    let Some(body) = s.strip_suffix('i') else {
        return s
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| bad());
    };
    // the sign that starts the imaginary part, skipping exponent signs
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        v => v,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    /// H¹ if the numerical check passes, else the quotient calculus
    Auto,
    H1,
    Hinf,
    Smirnov,
}

#[derive(Debug, Parser)]
#[command(
    name = "sgcalc",
    version,
    about = "Semigroup resolvents, spectra and half-plane functional calculus"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// (λI − A)⁻¹ by the Laplace integral, or by continuation
    Resolvent {
        #[arg(long)]
        backend: BackendSpec,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: Complex64,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        /// continue analytically from growth bound + 1 when λ is left of it
        #[arg(long = "continue")]
        continued: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Arveson spectrum of the generator
    Spectrum {
        #[arg(long)]
        backend: BackendSpec,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// F(−A) for an expression F on Re z > alpha
    Funcalc {
        #[arg(long)]
        backend: BackendSpec,
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = ClassArg::Auto)]
        class: ClassArg,
        /// outer H¹ denominator for the quotient path
        #[arg(long, allow_hyphen_values = true)]
        denominator: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The generator as the fraction −φ(v_λ′)/φ(v_λ)
    Generator {
        #[arg(long)]
        backend: BackendSpec,
        /// defaults to growth bound + 1
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inverse Laplace transform of an H¹ expression on a time grid
    Invlaplace {
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = crate::algebra::DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = crate::algebra::DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance battery
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// comma separated: matrix_exp, diagonal, nilpotent_shift
        #[arg(long, value_delimiter = ',', value_parser = parse_stock)]
        backends: Option<Vec<StockBackend>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_stock(s: &str) -> std::result::Result<StockBackend, String> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| format!("unknown stock backend '{s}'"))
}

#[derive(Serialize)]
struct Output<T: Serialize> {
    result: T,
    budget: f64,
    meta: Value,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))
}

fn emit<T: Serialize + ?Sized>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = crate::json::to_string(value).map_err(|e| Error::Format(e.to_string()))?;
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::Format(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn growth_json(g: f64) -> Value {
    if g.is_finite() {
        json!(g)
    } else {
        json!("-inf")
    }
}

fn funcalc(
    b: &SemigroupBackend,
    expr: &str,
    alpha: f64,
    class: ClassArg,
    denominator: Option<&str>,
) -> Result<(Operator, f64, Value)> {
    let tag = match class {
        ClassArg::Auto | ClassArg::H1 => ClassTag::H1,
        ClassArg::Hinf => ClassTag::Hinf,
        ClassArg::Smirnov => ClassTag::Smirnov,
    };
    let f = HalfPlaneFunction::parse(expr, alpha, tag)?;
    let canonical = f.expr().map(|e| e.to_string()).unwrap_or_default();
    let h1 = match class {
        ClassArg::H1 => true,
        ClassArg::Auto => f.check_class(alpha).is_ok(),
        _ => false,
    };
    if h1 {
        let x = funcalc_h1(&f, b, alpha)?;
        let meta = json!({"path": "h1", "expr": canonical, "alpha": alpha});
        return Ok((x.value, x.budget, meta));
    }
    let f = if class == ClassArg::Auto {
        let bounded = f.with_class(ClassTag::Hinf);
        if bounded.check_class(alpha).is_ok() {
            bounded
        } else {
            f.with_class(ClassTag::Smirnov)
        }
    } else {
        f
    };
    let h = denominator
        .map(|d| HalfPlaneFunction::parse(d, alpha, ClassTag::H1))
        .transpose()?;
    let q = funcalc_quotient(&f, h.as_ref(), b, alpha)?;
    let x = qm_evaluate(&q)?;
    let meta = json!({
        "path": "quotient",
        "class": f.class(),
        "expr": canonical,
        "alpha": alpha,
        "denominator": h.and_then(|h| h.expr().map(|e| e.to_string())),
    });
    Ok((x.value, x.budget, meta))
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Resolvent {
            backend,
            lambda,
            margin,
            continued,
            out,
        } => {
            let b = backend.build()?;
            let g = b.growth_bound();
            let left = !(lambda.re > g + margin);
            let (r, method) = if left && *continued && g.is_finite() {
                let seed = Complex64::new(g + 1.0, 0.0);
                (resolvent_continued(&b, *lambda, seed)?, "continuation")
            } else {
                (resolvent_laplace(&b, *lambda, *margin)?, "laplace")
            };
            let meta = json!({
                "lambda": [lambda.re, lambda.im],
                "method": method,
                "growth_bound": growth_json(g),
            });
            emit(
                &Output {
                    result: r.value,
                    budget: r.budget,
                    meta,
                },
                out.as_deref(),
            )
        }
        Command::Spectrum { backend, out } => {
            let b = backend.build()?;
            let s = arveson_spectrum(&b);
            let meta = json!({"growth_bound": growth_json(b.growth_bound())});
            emit(
                &Output {
                    result: s,
                    budget: 0.0,
                    meta,
                },
                out.as_deref(),
            )
        }
        Command::Funcalc {
            backend,
            expr,
            alpha,
            class,
            denominator,
            out,
        } => {
            let b = backend.build()?;
            let (value, budget, meta) = funcalc(&b, expr, *alpha, *class, denominator.as_deref())?;
            emit(
                &Output {
                    result: value,
                    budget,
                    meta,
                },
                out.as_deref(),
            )
        }
        Command::Generator {
            backend,
            lambda,
            out,
        } => {
            let b = backend.build()?;
            let g = b.growth_bound();
            let lambda = lambda.unwrap_or(if g.is_finite() { g + 1.0 } else { 1.0 });
            let x = qm_evaluate(&generator(&b, lambda)?)?;
            let meta = json!({"lambda": lambda, "witness": "phi_v_lambda"});
            emit(
                &Output {
                    result: x.value,
                    budget: x.budget,
                    meta,
                },
                out.as_deref(),
            )
        }
        Command::Invlaplace {
            expr,
            alpha,
            step,
            horizon,
            out,
        } => {
            let f = HalfPlaneFunction::parse(expr, *alpha, ClassTag::H1)?;
            let grid = TimeGrid::with_horizon(*step, *horizon)?;
            let r = inverse_laplace_fft(&f, *alpha, &grid)?;
            let meta = json!({"alpha": alpha, "leakage": r.leakage});
            emit(
                &Output {
                    result: r.function,
                    budget: r.budget,
                    meta,
                },
                out.as_deref(),
            )
        }
        Command::Verify {
            seed,
            backends,
            out,
        } => {
            let mut config = SuiteConfig {
                seed: *seed,
                ..SuiteConfig::default()
            };
            if let Some(b) = backends {
                config.backends = b.clone();
            }
            let report = run_suite(&config);
            let failed: Vec<u32> = report.iter().filter(|r| !r.pass).map(|r| r.id).collect();
            if !failed.is_empty() {
                eprintln!("sgcalc: criteria not met: {failed:?}");
            }
            emit(&report, out.as_deref())
        }
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sgcalc: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("-5+0i").unwrap(), c(-5.0, 0.0));
        assert_eq!(parse_complex("1.5-2i").unwrap(), c(1.5, -2.0));
        assert_eq!(parse_complex("1e-3+2e+1i").unwrap(), c(1e-3, 20.0));
        assert_eq!(parse_complex("-2i").unwrap(), c(0.0, -2.0));
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("1+i").unwrap(), c(1.0, 1.0));
        assert!(parse_complex("1+2j").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn backend_specs() {
        assert_eq!(
            "diag:-1,-2".parse::<BackendSpec>().unwrap(),
            BackendSpec::Diag(vec![c(-1.0, 0.0), c(-2.0, 0.0)])
        );
        assert_eq!(
            "nilshift:8:0.125".parse::<BackendSpec>().unwrap(),
            BackendSpec::Nilshift {
                dim: 8,
                unit: 0.125
            }
        );
        assert_eq!(
            "mat:a.json".parse::<BackendSpec>().unwrap(),
            BackendSpec::Mat("a.json".into())
        );
        for bad in ["diag", "diag:x", "nilshift:8", "cube:3", "mat:"] {
            assert!(bad.parse::<BackendSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["sgcalc", "frobnicate"]), 2);
        assert_eq!(
            main_with_args(["sgcalc", "spectrum", "--backend", "cube:1"]),
            2
        );
        // Re λ below the growth bound without continuation
        assert_eq!(
            main_with_args([
                "sgcalc",
                "resolvent",
                "--backend",
                "diag:-1,-2",
                "--lambda",
                "-3+0i"
            ]),
            1
        );
        assert_eq!(
            main_with_args(["sgcalc", "spectrum", "--backend", "mat:/nonexistent/a.json"]),
            1
        );
    }

    #[test]
    fn funcalc_paths() {
        let b = SemigroupBackend::diagonal(vec![c(-1.0, 0.0), c(-2.0, 0.0)]).unwrap();
        let (x, _, meta) = funcalc(&b, "exp(-0.5*z)", -0.4, ClassArg::Auto, None).unwrap();
        assert_eq!(meta["path"], "quotient");
        assert_eq!(meta["class"], "hinf");
        let exact = Operator::from_diagonal(&[c((-0.5f64).exp(), 0.0), c((-1f64).exp(), 0.0)]);
        assert!((&x - &exact).norm() < 1e-6);
        let (x, _, meta) = funcalc(&b, "1/((z+2)^2)", -0.4, ClassArg::Auto, None).unwrap();
        assert_eq!(meta["path"], "h1");
        assert!((x.get(1, 1) - 1.0 / 16.0).norm() < 1e-9);
        // −z over 1/(z+1.4)² is only O(1/|y|); a cubic denominator is needed
        assert!(funcalc(&b, "-z", -0.4, ClassArg::Auto, None).is_err());
        let (x, _, meta) = funcalc(&b, "-z", -0.4, ClassArg::Auto, Some("1/((z+1.4)^3)")).unwrap();
        assert_eq!(meta["class"], "smirnov");
        assert!((x.get(0, 0) + 1.0).norm() < 1e-6 && (x.get(1, 1) + 2.0).norm() < 1e-6);
    }
}
