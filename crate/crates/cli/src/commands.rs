use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use fractal_counts::formats::parse_instant;
use fractal_counts::ingest::ingest_reader;
use fractal_counts::plot::{plot_rows, write_plot_csv};
use fractal_counts::series::{read_counts_csv, write_counts_csv};
use fractal_counts::sim::DEFAULT_SCALE_INTERVALS;
use fractal_counts::{
    emit_events, fit_p, forecast::write_forecast_csv, lp_combine, run_sim, saturation_ceiling,
    CountSeries, CumulativeSeries, DimensionFit, FitSettings, ForecastRegistry, FormatRegistry,
    NormExponent, Origin, ParetoLifetimeModel, ParseMode, SimConfig,
};
use tempfile::NamedTempFile;

use crate::{
    manifest, CombineArgs, Command, CountArgs, Failure, FitArgs, ForecastArgs, PlotArgs, Run,
    SimulateArgs, EXIT_NUMERIC, EXIT_OK,
};

pub fn dispatch(command: &Command, run: &mut Run) -> Result<u8, Failure> {
    match command {
        Command::Simulate(a) => simulate(a, run),
        Command::Count(a) => count(a, run),
        Command::Fit(a) => fit(a, run),
        Command::Combine(a) => combine(a, run),
        Command::Forecast(a) => forecast(a, run),
        Command::Plotdata(a) => plotdata(a, run),
        Command::Replay(a) => manifest::replay(&a.path, run),
    }
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Failure::from(e.error))?;
    Ok(())
}

/// Sends output to `path`, or to the run's stdout when there is none.
fn emit(
    path: Option<&Path>,
    run: &mut Run,
    body: impl FnOnce(&mut dyn Write) -> Result<(), Failure>,
) -> Result<(), Failure> {
    match path {
        Some(p) => {
            write_atomic(p, body)?;
            run.outputs.push(p.to_owned());
            Ok(())
        }
        None => body(&mut run.stdout),
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::from(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open(path: &Path, run: &mut Run) -> Result<BufReader<File>, Failure> {
    let f = File::open(path).map_err(io_at(path))?;
    run.inputs.push(path.to_owned());
    Ok(BufReader::new(f))
}

fn read_counts(path: &Path, run: &mut Run) -> Result<(CountSeries, CumulativeSeries), Failure> {
    let input = open(path, run)?;
    read_counts_csv(input).map_err(|e| Failure::from(e).context(path))
}

fn read_fit(path: &Path, run: &mut Run) -> Result<DimensionFit, Failure> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    run.inputs.push(path.to_owned());
    DimensionFit::from_json(&text).map_err(|e| Failure::from(e).context(path))
}

impl Failure {
    fn context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

fn sim_config(a: &SimulateArgs, run: &mut Run) -> Result<SimConfig, Failure> {
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        run.inputs.push(path.clone());
        return SimConfig::from_kv(&text).map_err(|e| Failure::from(e).context(path));
    }
    let need =
        |name: &str| Failure::usage(format!("--{name} is required unless --config is given"));
    let width = a.width.unwrap_or(1.0);
    let model = ParetoLifetimeModel::new(
        a.scale_a.unwrap_or(DEFAULT_SCALE_INTERVALS * width),
        a.shape_b.ok_or_else(|| need("shape-b"))?,
        a.n.ok_or_else(|| need("n"))?,
    )?;
    let mut config = SimConfig::new(
        model,
        a.horizon.ok_or_else(|| need("horizon"))?,
        a.seed.ok_or_else(|| need("seed"))?,
    );
    config.interval_width = width;
    config.burn_in = a.burn_in.unwrap_or(0);
    config.validate()?;
    Ok(config)
}

fn simulate(a: &SimulateArgs, run: &mut Run) -> Result<u8, Failure> {
    let config = sim_config(a, run)?;
    run.seed = Some(config.seed);
    let registry = FormatRegistry::default();
    let events_path = a.out.join(&a.events);
    let format = registry.for_path(&events_path)?;
    fs::create_dir_all(&a.out)?;

    let result = run_sim(&config)?;
    let mut written = 0;
    write_atomic(&events_path, |w| {
        let mut sink = format.writer(Box::new(w))?;
        written = emit_events(&config, sink.as_mut())?;
        Ok(())
    })?;
    run.outputs.push(events_path);

    let counts_path = a.out.join("counts.csv");
    write_atomic(&counts_path, |w| {
        Ok(write_counts_csv(
            w,
            &result.interval_counts,
            &result.cumulative_counts,
        )?)
    })?;
    run.outputs.push(counts_path);

    writeln!(run.stdout, "events: {written}")?;
    writeln!(run.stdout, "distinct_ids: {}", result.distinct_ids)?;
    writeln!(run.stdout, "r: {}", config.model.r())?;
    Ok(EXIT_OK)
}

fn parse_origin(s: &str) -> Result<Origin, Failure> {
    if s == "first" {
        return Ok(Origin::FirstEvent);
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .or_else(|| parse_instant(s))
        .map(Origin::At)
        .ok_or_else(|| Failure::usage(format!("invalid --origin {s:?}")))
}

fn count(a: &CountArgs, run: &mut Run) -> Result<u8, Failure> {
    let registry = FormatRegistry::default();
    let format = match &a.format {
        Some(name) => registry.get(name).ok_or_else(|| {
            Failure::usage(format!(
                "unknown format {name:?}; available: {}",
                registry.names().collect::<Vec<_>>().join(", ")
            ))
        })?,
        None => registry.for_path(&a.events)?,
    };
    let origin = a.origin.as_deref().map(parse_origin).transpose()?;
    let mode = if a.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };
    let input = open(&a.events, run)?;
    let report = ingest_reader(Box::new(input), format, a.width, origin, mode)
        .map_err(|e| Failure::from(e).context(&a.events))?;
    for w in &report.warnings {
        eprintln!("warning: {}: {w}", a.events.display());
    }
    if report.skipped > 0 {
        eprintln!(
            "warning: skipped {} malformed record(s) of {}",
            report.skipped,
            report.skipped + report.records
        );
    }
    let (c, q) = report.index.series();
    emit(a.out.as_deref(), run, |w| Ok(write_counts_csv(w, &c, &q)?))?;
    Ok(EXIT_OK)
}

fn settings(a: &FitArgs) -> Result<FitSettings, Failure> {
    let d = FitSettings::default();
    let s = FitSettings {
        damping: a.damping.unwrap_or(d.damping),
        tolerance: a.tolerance.unwrap_or(d.tolerance),
        max_iterations: a.max_iterations.unwrap_or(d.max_iterations),
        initial_p: a.initial_p,
    };
    s.validate()?;
    Ok(s)
}

fn fit_counts(
    c: &CountSeries,
    q: &CumulativeSeries,
    s: &FitSettings,
) -> Result<DimensionFit, Failure> {
    if c.len() < 2 {
        return Err(Failure::usage(format!(
            "need at least 2 intervals to fit, got {}",
            c.len()
        )));
    }
    Ok(fit_p(c, q, s)?)
}

fn fit(a: &FitArgs, run: &mut Run) -> Result<u8, Failure> {
    let s = settings(a)?;
    let (c, q) = read_counts(&a.counts, run)?;
    let fit = fit_counts(&c, &q, &s)?;
    let json = fit.to_json()?;
    writeln!(run.stdout, "{json}")?;
    if let Some(path) = &a.out {
        write_atomic(path, |w| Ok(writeln!(w, "{json}")?))?;
        run.outputs.push(path.clone());
    }
    if fit.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "error: fit did not converge after {} iterations (p = {})",
            fit.iterations, fit.p
        );
        Ok(EXIT_NUMERIC)
    }
}

fn combine(a: &CombineArgs, run: &mut Run) -> Result<u8, Failure> {
    let p: NormExponent = a.p.parse()?;
    let (c, _) = read_counts(&a.counts, run)?;
    writeln!(run.stdout, "{}", lp_combine(c.counts(), p)?)?;
    Ok(EXIT_OK)
}

fn forecast(a: &ForecastArgs, run: &mut Run) -> Result<u8, Failure> {
    let registry = ForecastRegistry::default();
    let method = registry.get(&a.method)?;
    let (c, q) = read_counts(&a.counts, run)?;
    let fit = match &a.fit {
        Some(path) => read_fit(path, run)?,
        None => fit_counts(&c, &q, &FitSettings::default())?,
    };
    if !fit.converged && !a.force {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: format!(
                "fit did not converge (p = {}); pass --force to forecast anyway",
                fit.p
            ),
        });
    }
    let f = method.forecast(&fit, &c, a.horizon, a.force)?;
    emit(a.out.as_deref(), run, |w| {
        Ok(write_forecast_csv(w, &c, &q, &f)?)
    })?;
    let ceiling = saturation_ceiling(&fit).ceiling;
    let summary = format!(
        "p: {}\npredicted: {}\nsaturation_ceiling: {ceiling}",
        fit.p,
        f.last().unwrap_or(0.0)
    );
    if a.out.is_some() {
        writeln!(run.stdout, "{summary}")?;
    } else {
        eprintln!("{summary}");
    }
    Ok(EXIT_OK)
}

fn plotdata(a: &PlotArgs, run: &mut Run) -> Result<u8, Failure> {
    let (c, q) = read_counts(&a.counts, run)?;
    let fit = read_fit(&a.fit, run)?;
    let rows = plot_rows(&c, &q, &fit)?;
    emit(a.out.as_deref(), run, |w| Ok(write_plot_csv(w, &rows)?))?;
    Ok(EXIT_OK)
}
