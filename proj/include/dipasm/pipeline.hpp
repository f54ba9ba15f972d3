#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dipasm {

struct LibraryConfig {
  std::string name;
  std::filesystem::path reads;  // interleaved FASTQ, mates named /1 and /2
  double insert_mean = 0;
  double insert_sd = 0;
  int tier = 0;
  bool mate_pair = false;      // role = matepair
  bool innie = true;           // orientation = innie | outie
  std::optional<bool> count;   // defaults to !mate_pair
  bool counted() const { return count.value_or(!mate_pair); }
};

struct RunConfig {
  int k = 31;
  std::uint32_t d_min = 2;
  int q_min = 20;
  bool diploid = false;
  std::vector<LibraryConfig> libraries;
  std::vector<std::uint32_t> min_support{1, 2, 3, 4, 5, 6, 8, 10};
  int min_gap_ns = 10;
  double repeat_copy_count = 2.0;
  bool aggressive = false;
  std::filesystem::path output = "run";
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// key = value lines; each "[library]" line opens a library section.
/// Relative paths resolve against `base_dir`. Throws ConfigError on syntax.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const RunConfig& cfg);

struct ConfigIssue {
  std::string field;
  std::string message;
};

struct ConfigCheck {
  RunConfig config;  // defaults resolved
  std::vector<ConfigIssue> errors;
  std::vector<ConfigIssue> warnings;
  bool ok() const { return errors.empty(); }
};

ConfigCheck validate_config(RunConfig cfg);

/// SHA-256 hex of a byte string / file.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Digest of everything that affects outputs: library contents rather than
/// paths; worker count and output directory excluded.
std::string config_digest(const RunConfig& cfg);

enum class Stage : std::uint8_t { Import, Mercount, Mergraph, Ufx, Contigs, Bubble, Merblast, Ono, GapClosure };
inline constexpr std::array<std::string_view, 9> kStageNames{"import",  "mercount", "mergraph", "ufx",        "contigs",
                                                              "bubble",  "merblast", "ono",      "gap_closure"};
std::string_view stage_name(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

struct StageRecord {
  std::string status = "pending";  // pending | done | skipped | failed
  std::string input_digest;
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  std::string message;
};

struct RunState {
  std::string config_digest;
  std::map<std::string, StageRecord> stages;

  static RunState load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct RunOptions {
  std::optional<Stage> from;
  std::optional<Stage> to;
  bool force = false;  // re-execute stages in range even when up to date
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 config error, 2 stage failure
  std::vector<std::string> executed;
  std::vector<std::string> up_to_date;
  std::string error;
};

/// Runs stages in order inside cfg.output. State lives in state.json there.
RunResult run_pipeline(const RunConfig& cfg, const RunOptions& opts = {});

/// Relative path of the final scaffold FASTA inside the run directory.
inline constexpr std::string_view kFinalFasta = "final.scaffolds.fa";

}  // namespace dipasm
