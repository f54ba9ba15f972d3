#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dipasm/scaffolder.hpp"
#include "dipasm/seqio.hpp"

namespace dipasm {

struct GapTask {
  std::uint32_t scaffold = 0;
  std::uint32_t gap = 0;
  std::string left_flank;   // ends at the gap, scaffold strand
  std::string right_flank;  // starts at the gap
  double estimate = 0;
  double sd = 0;
  double scaffold_depth = 0;
  std::vector<QualSeq> reads;  // oriented to the scaffold strand
  std::vector<std::uint32_t> read_ids;  // original read indices, parallel to `reads`
};

struct ProjectOptions {
  std::size_t flank_keep = 1000;  // flank bases kept per side
  double window_sd = 2.0;         // mate placement window, in insert sd
};

/// Assigns reads to gaps: reads whose own alignment footprint overlaps a gap,
/// and unaligned reads whose mate places them over it. `alns` are on the base
/// sequences; read_index points into `reads`.
std::vector<GapTask> project_reads(const std::vector<ScaffoldLayout>& layouts, const std::vector<std::string>& base,
                                   std::span<const ReadAlignment> alns, std::span<const std::uint16_t> library_of,
                                   const std::vector<Library>& libraries, std::span<const QualSeq> reads,
                                   const ProjectOptions& opts = {});

enum class CloseMethod : std::uint8_t { None, Splint, RightWalk, LeftWalk, Patch };
const char* close_method_name(CloseMethod m);

struct Closure {
  std::uint32_t scaffold = 0;
  std::uint32_t gap = 0;
  CloseMethod method = CloseMethod::None;
  std::string seq;        // bases between the flanks when size >= 0
  std::int64_t size = 0;  // negative: the flanks overlap by -size bases
  double estimate = 0;
  double sd = 0;
  bool accepted = false;
  std::string status;
};

/// Splints: reads holding both anchor k-mers. Haploid mode needs two or more
/// that all agree; polymorphic mode takes a strict most-frequent answer.
std::optional<Closure> close_by_splint(const GapTask& task, int k, bool polymorphic);

enum class Direction : std::uint8_t { Right, Left };

struct WalkOptions {
  int k = 31;
  int k_floor = 21;
  int k_ceiling = 0;  // 0: longest read - 1
  int max_shifts = 8;
  bool polymorphic = false;
  std::size_t max_length = 0;  // 0: derived from the gap estimate
};

struct Walk {
  std::string seq;  // new bases; for a left walk, those preceding the right flank
  bool reached = false;
  int final_k = 0;
  int shifts = 0;
};

/// Phred bins used by the walk: 0-10, 11-20, 21-30, >30.
int quality_bin(std::uint8_t q);
/// Acceptance rule on per-base, per-bin tallies; returns the base index or -1,
/// and sets `fork` when two or more bases compete at the top.
int accept_extension(const std::array<std::array<std::uint32_t, 4>, 4>& tally, bool polymorphic, bool& fork);

Walk mer_walk(const GapTask& task, Direction dir, const WalkOptions& opts);

/// Splices two walks on an exact overlap of at least `min_overlap` bases.
std::optional<std::string> patch_walks(const std::string& right_walk, const std::string& left_walk,
                                       std::size_t min_overlap = 10);

struct GapCloseOptions {
  int k = 31;
  int k_floor = 21;
  int max_shifts = 8;
  bool polymorphic = false;
  bool aggressive = false;
  std::size_t min_overlap = 10;
  double repeat_copy_count = 2.0;
  double d_max = 0;  // 0 disables the repeat-depth skip
};

Closure close_gap(const GapTask& task, const GapCloseOptions& opts);
std::vector<Closure> close_gaps(std::span<const GapTask> tasks, const GapCloseOptions& opts, unsigned threads = 1);

struct EmitOptions {
  int min_gap_ns = 10;
  bool aggressive = false;
};

/// Final scaffold sequences: accepted closures spliced, other gaps as N runs.
std::vector<FastaRecord> render_scaffolds(const std::vector<ScaffoldLayout>& layouts, const std::vector<std::string>& base,
                                          std::span<const Closure> closures, const EmitOptions& opts = {});

void write_closure_report(std::ostream& out, std::span<const Closure> closures);

}  // namespace dipasm
