use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;

use stormbench::dataset::CorruptionGrid;
use stormbench::{DatasetManifest, SeverityLevel, WeatherKind};

use super::{load_config, thousands, Context, Dataset};
use crate::error::{CliError, CliResult};
use crate::fsutil::StagedDir;

/// `all` or a comma-separated list.
#[derive(Debug, Clone)]
pub struct Selection<T>(pub Vec<T>);

impl FromStr for Selection<WeatherKind> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Selection(WeatherKind::ALL.to_vec()));
        }
        let mut kinds: Vec<WeatherKind> = s
            .split(',')
            .map(|k| k.trim().parse::<WeatherKind>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        kinds.sort();
        kinds.dedup();
        Ok(Selection(kinds))
    }
}

impl FromStr for Selection<SeverityLevel> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Selection(SeverityLevel::all().collect()));
        }
        let mut levels: Vec<SeverityLevel> = s
            .split(',')
            .map(|l| {
                let n: u8 = l
                    .trim()
                    .parse()
                    .map_err(|_| format!("level must be 1-5 or all, got {l:?}"))?;
                SeverityLevel::new(n).map_err(|e| e.to_string())
            })
            .collect::<Result<_, _>>()?;
        levels.sort();
        levels.dedup();
        Ok(Selection(levels))
    }
}

#[derive(Args)]
pub struct CorruptArgs {
    /// Input manifest.
    #[arg(long = "in")]
    input: PathBuf,

    /// Output dataset directory (must not exist, or be empty).
    #[arg(long, required_unless_present = "dry_run")]
    out: Option<PathBuf>,

    /// rain, fog, snow, a comma-separated list, or all.
    #[arg(long, default_value = "all")]
    kind: Selection<WeatherKind>,

    /// 1-5, a comma-separated list, or all.
    #[arg(long, default_value = "all")]
    level: Selection<SeverityLevel>,

    /// TOML file whose [weather] section overrides the severity table.
    #[arg(long)]
    weather_config: Option<PathBuf>,

    /// Do not copy the clean sequences into the output.
    #[arg(long)]
    no_clean: bool,

    /// Report what would be written, reading only the manifest.
    #[arg(long)]
    dry_run: bool,
}

struct GridSummary {
    input_sequences: usize,
    input_frames: usize,
    clean_frames: usize,
    /// kind → (sequences, frames)
    per_kind: BTreeMap<String, (usize, usize)>,
}

impl GridSummary {
    fn planned(input: &DatasetManifest, grid: &CorruptionGrid) -> Self {
        let frames = input.total_frames();
        let n = input.sequences.len();
        let levels = grid.levels.len();
        GridSummary {
            input_sequences: n,
            input_frames: frames,
            clean_frames: if grid.include_clean { frames } else { 0 },
            per_kind: grid
                .kinds
                .iter()
                .map(|k| (k.to_string(), (n * levels, frames * levels)))
                .collect(),
        }
    }

    fn written(input: &DatasetManifest, output: &DatasetManifest) -> Self {
        let mut per_kind: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let mut clean_frames = 0;
        for e in &output.sequences {
            match e.tag("weather") {
                Some(w) if w != "clean" => {
                    let slot = per_kind.entry(w.to_string()).or_default();
                    slot.0 += 1;
                    slot.1 += e.frame_count;
                }
                _ => clean_frames += e.frame_count,
            }
        }
        GridSummary {
            input_sequences: input.sequences.len(),
            input_frames: input.total_frames(),
            clean_frames,
            per_kind,
        }
    }

    fn corrupted(&self) -> usize {
        self.per_kind.values().map(|v| v.1).sum()
    }

    fn print(&self, levels: &[SeverityLevel]) {
        let lv: Vec<String> = levels.iter().map(|l| l.get().to_string()).collect();
        println!(
            "input: {} sequences, {} frames",
            thousands(self.input_sequences),
            thousands(self.input_frames)
        );
        println!("{:<6} {:<10} {:>10} {:>10}", "kind", "levels", "sequences", "frames");
        for (kind, (s, f)) in &self.per_kind {
            println!(
                "{:<6} {:<10} {:>10} {:>10}",
                kind,
                lv.join(","),
                thousands(*s),
                thousands(*f)
            );
        }
        println!(
            "{} corrupted frames, {} clean frames",
            thousands(self.corrupted()),
            thousands(self.clean_frames)
        );
    }
}

pub fn run(ctx: &Context, args: CorruptArgs) -> CliResult<()> {
    if args.kind.0.is_empty() || args.level.0.is_empty() {
        return Err(CliError::Usage("--kind and --level must select something".into()));
    }
    let table = load_config(args.weather_config.as_deref())?.weather;
    let grid = CorruptionGrid {
        kinds: args.kind.0.clone(),
        levels: args.level.0.clone(),
        table,
        seed: ctx.seed(),
        include_clean: !args.no_clean,
    };
    let input = Dataset::open(&args.input)?;

    if args.dry_run {
        grid.table.validate()?;
        GridSummary::planned(&input.manifest, &grid).print(&grid.levels);
        return Ok(());
    }
    let out = args.out.as_ref().expect("clap requires --out without --dry-run");
    let mut clean = input.sequences()?;
    clean.sort_by(|a, b| a.sequence_id.cmp(&b.sequence_id));
    let staged = StagedDir::new(out)?;
    let manifest = grid.write(staged.path(), &format!("{}-corrupted", input.manifest.name), &clean)?;
    staged.commit()?;
    GridSummary::written(&input.manifest, &manifest).print(&grid.levels);
    println!("wrote {} (seed {})", out.display(), grid.seed);
    Ok(())
}
