#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dipasm/evaluator.hpp"
#include "dipasm/pipeline.hpp"
#include "dipasm/seqio.hpp"
#include "dipasm/simkit.hpp"
#include "dipasm/spectrum.hpp"
#include "dipasm/ufx.hpp"

using namespace dipasm;
namespace fs = std::filesystem;

namespace {

std::optional<Stage> parse_stage(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto st = stage_from_name(s);
  if (!st) throw CLI::ValidationError("unknown stage " + s);
  return st;
}

// Output stream: a file, or stdout for "-".
struct Sink {
  std::ofstream file;
  std::ostream* out = &std::cout;
  explicit Sink(const std::string& path) {
    if (path == "-") return;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    out = &file;
  }
};

int cmd_run(const std::string& config, const std::string& from, const std::string& to, bool force, int threads) {
  RunConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  if (threads > 0) cfg.threads = static_cast<unsigned>(threads);
  RunOptions opts;
  try {
    opts = {.from = parse_stage(from), .to = parse_stage(to), .force = force};
  } catch (const CLI::ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  auto r = run_pipeline(cfg, opts);
  if (r.exit_code != 0) {
    spdlog::error("{}", r.error);
  } else {
    spdlog::info("{} stage(s) executed, {} up to date; final scaffolds in {}", r.executed.size(), r.up_to_date.size(),
                 (cfg.output / kFinalFasta).string());
  }
  return r.exit_code;
}

int cmd_spectrum(const std::vector<std::string>& reads, const std::string& hist_in, int k, int threads,
                 std::optional<double> genome_size, const std::string& report, const std::string& hist_out,
                 const std::string& panels) {
  KmerHistogram hist;
  std::uint64_t n = 0;
  int longest = 0;
  if (!hist_in.empty()) {
    std::ifstream in(hist_in);
    if (!in) throw std::runtime_error("cannot read " + hist_in);
    hist = read_histogram(in);
    if (hist.k == 0) hist.k = k;
  } else {
    std::vector<QualSeq> all;
    for (const auto& p : reads) {
      auto r = read_fastq(p);
      all.insert(all.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    for (const auto& r : all) longest = std::max(longest, static_cast<int>(r.bases.size()));
    n = all.size();
    hist = count_spectrum(all, k, static_cast<unsigned>(threads));
  }
  if (!hist_out.empty()) {
    Sink s(hist_out);
    write_histogram(*s.out, hist);
  }
  SpectrumFit fit;
  try {
    fit = analyze_spectrum(hist, {.genome_size = genome_size, .num_reads = n, .read_length = longest});
  } catch (const FitError& e) {
    spdlog::error("spectrum fit failed: {}", e.what());
    return 2;
  }
  Sink s(report);
  write_spectrum_report(*s.out, hist, fit);
  if (!panels.empty()) {
    fs::create_directories(panels);
    std::ofstream a(fs::path(panels) / "spectrum.tsv"), b(fs::path(panels) / "fit.tsv"),
        c(fs::path(panels) / "cumulative.tsv");
    write_spectrum_panel(a, hist);
    write_fit_panel(b, hist, fit);
    write_cumulative_panel(c, hist, fit.d_max);
  }
  return 0;
}

int cmd_evaluate(const std::string& hap_a, const std::string& hap_b, const std::string& assembly, int m,
                 double sample_frac, int min_markers, std::uint64_t seed, const std::string& report) {
  if (m % 2 == 0) {
    spdlog::error("--marker-len must be odd");
    return 1;
  }
  auto a = read_fasta(hap_a);
  auto b = hap_b.empty() ? a : read_fasta(hap_b);
  auto asm_recs = read_fasta(assembly);
  auto r = evaluate(a, b, asm_recs, {.markers = {.m = m, .sample_frac = sample_frac, .seed = seed}, .min_markers = min_markers});
  Sink s(report);
  write_report(*s.out, r);
  return 0;
}

struct SimArgs {
  std::size_t length = 100000;
  int chromosomes = 1;
  double gc = 0.5;
  double snv_rate = 0;
  double indel_rate = 0;
  std::size_t min_spacing = 0;
  int read_length = 100;
  double insert_mean = 300, insert_sd = 30;
  double coverage = 30;
  double error_rate = 0;
  std::size_t jump_mean = 0;
  double jump_sd = 0, jump_coverage = 5;
  int k = 31;
  std::uint64_t seed = 1;
  std::string out = "sim";
};

int cmd_simulate(const SimArgs& a) {
  fs::path dir(a.out);
  fs::create_directories(dir);
  auto g = sim::generate_genome({.length = a.length, .chromosomes = a.chromosomes, .gc = a.gc, .seed = a.seed});
  const bool diploid = a.snv_rate > 0 || a.indel_rate > 0;
  auto d = diploid ? sim::diploidize(g.chromosomes, {.snv_rate = a.snv_rate,
                                                     .indel_rate = a.indel_rate,
                                                     .min_spacing = a.min_spacing,
                                                     .seed = a.seed + 1})
                   : sim::Diploid{g.chromosomes, g.chromosomes, {}};
  write_fasta(dir / "hap_a.fa", d.hap_a);
  write_fasta(dir / "hap_b.fa", d.hap_b);
  {
    std::ofstream t(dir / "repeats.tsv");
    sim::write_repeat_truth(t, g);
    std::ofstream v(dir / "variants.tsv");
    sim::write_variant_truth(v, d);
  }
  std::vector<std::vector<FastaRecord>> haps{d.hap_a};
  if (diploid) haps.push_back(d.hap_b);
  auto emit = [&](const std::string& name, const sim::ReadSpec& spec) {
    auto rs = sim::simulate_reads(haps, spec);
    std::ofstream fq(dir / (name + ".fq"));
    for (const auto& r : rs.reads) write_fastq_record(fq, r);
    std::ofstream t(dir / (name + ".truth.tsv"));
    sim::write_read_truth(t, rs);
  };
  emit("frag", {.read_length = a.read_length,
                .insert_mean = a.insert_mean,
                .insert_sd = a.insert_sd,
                .coverage = a.coverage,
                .error_rate = a.error_rate,
                .prefix = "f",
                .seed = a.seed + 2});
  if (a.jump_mean > 0)
    emit("jump", {.read_length = a.read_length,
                  .insert_mean = static_cast<double>(a.jump_mean),
                  .insert_sd = a.jump_sd > 0 ? a.jump_sd : a.jump_mean * 0.1,
                  .coverage = a.jump_coverage,
                  .error_rate = a.error_rate,
                  .prefix = "j",
                  .seed = a.seed + 3});
  std::ofstream cfg(dir / "assembly.cfg");
  cfg << "k = " << a.k << "\ndiploid = " << (diploid ? "true" : "false") << "\nseed = " << a.seed
      << "\noutput = run\n\n[library]\nname = frag\nreads = frag.fq\ninsert_mean = " << a.insert_mean
      << "\ninsert_sd = " << a.insert_sd << "\ntier = 0\n";
  if (a.jump_mean > 0)
    cfg << "\n[library]\nname = jump\nreads = jump.fq\ninsert_mean = " << a.jump_mean
        << "\ninsert_sd = " << (a.jump_sd > 0 ? a.jump_sd : a.jump_mean * 0.1)
        << "\ntier = 1\nrole = matepair\norientation = innie\n";
  spdlog::info("wrote simulation to {}", dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diploid-aware short-read assembler"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run assembly stages from a config file");
  std::string config, from, to;
  bool force = false;
  int run_threads = 0;
  run->add_option("-c,--config", config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--from", from, "first stage to execute");
  run->add_option("--to", to, "last stage to execute");
  run->add_flag("--force", force, "re-execute stages even when up to date");
  run->add_option("-t,--threads", run_threads, "override the worker count");

  auto* spec = app.add_subcommand("spectrum", "k-mer spectrum diagnostics");
  std::vector<std::string> reads;
  std::string hist_in, report = "-", hist_out, panels;
  int k = 31, threads = 1;
  std::optional<double> genome_size;
  auto* reads_opt = spec->add_option("-r,--reads", reads, "FASTQ files")->check(CLI::ExistingFile);
  spec->add_option("--histogram-in", hist_in, "read a histogram instead of counting")
      ->check(CLI::ExistingFile)
      ->excludes(reads_opt);
  spec->add_option("-k", k, "k-mer length")->check(CLI::Range(1, 63));
  spec->add_option("-t,--threads", threads)->check(CLI::PositiveNumber);
  spec->add_option("-g,--genome-size", genome_size, "known genome size");
  spec->add_option("-o,--report", report, "key=value report ('-' for stdout)");
  spec->add_option("--histogram-out", hist_out, "write the histogram");
  spec->add_option("--panels", panels, "directory for plot-ready tables");

  auto* eval = app.add_subcommand("evaluate", "marker-based assembly evaluation");
  std::string hap_a, hap_b, assembly, eval_report = "-";
  int m = 101, min_markers = 10;
  double sample_frac = 0.001;
  std::uint64_t seed = 1;
  eval->add_option("-a,--hap-a", hap_a, "first reference haplotype")->required()->check(CLI::ExistingFile);
  eval->add_option("-b,--hap-b", hap_b, "second haplotype (defaults to the first)")->check(CLI::ExistingFile);
  eval->add_option("-s,--assembly", assembly, "assembly FASTA")->required()->check(CLI::ExistingFile);
  eval->add_option("--marker-len", m, "marker length")->check(CLI::Range(3, 127));
  eval->add_option("--sample-frac", sample_frac, "fraction of single-copy markers for scaffold metrics")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--min-markers", min_markers, "markers needed to tie a scaffold to a chromosome")
      ->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed, "marker sampling seed");
  eval->add_option("-o,--report", eval_report, "report path ('-' for stdout)");

  auto* simc = app.add_subcommand("simulate", "write a simulated genome, reads, truth files and config");
  SimArgs sa;
  simc->add_option("--length", sa.length, "bases per chromosome");
  simc->add_option("--chromosomes", sa.chromosomes);
  simc->add_option("--gc", sa.gc);
  simc->add_option("--snv-rate", sa.snv_rate, "heterozygous SNV rate (0 = haploid)");
  simc->add_option("--indel-rate", sa.indel_rate);
  simc->add_option("--min-spacing", sa.min_spacing, "minimum distance between variants");
  simc->add_option("--read-length", sa.read_length);
  simc->add_option("--insert-mean", sa.insert_mean);
  simc->add_option("--insert-sd", sa.insert_sd);
  simc->add_option("--coverage", sa.coverage);
  simc->add_option("--error-rate", sa.error_rate);
  simc->add_option("--jump-mean", sa.jump_mean, "add a mate-pair library with this insert");
  simc->add_option("--jump-sd", sa.jump_sd);
  simc->add_option("--jump-coverage", sa.jump_coverage);
  simc->add_option("-k", sa.k, "k written into the generated config");
  simc->add_option("--seed", sa.seed);
  simc->add_option("-o,--out", sa.out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, from, to, force, run_threads);
    if (*spec) {
      if (reads.empty() && hist_in.empty()) throw CLI::ValidationError("spectrum needs --reads or --histogram-in");
      return cmd_spectrum(reads, hist_in, k, threads, genome_size, report, hist_out, panels);
    }
    if (*eval) return cmd_evaluate(hap_a, hap_b, assembly, m, sample_frac, min_markers, seed, eval_report);
    if (*simc) return cmd_simulate(sa);
  } catch (const CLI::ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
