#pragma once

#include <absl/container/flat_hash_map.h>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dipasm/mer_aligner.hpp"

namespace dipasm {

struct Library {
  std::string name;
  double insert_mean = 0;
  double insert_sd = 0;
  bool innie = true;  // false for outward-facing mate pairs
  int tier = 0;
};

// Sequence ends: 2*seq for the head (start of the forward strand), 2*seq+1 for the tail.
using EndId = std::uint32_t;
inline EndId head_of(std::uint32_t seq) { return 2 * seq; }
inline EndId tail_of(std::uint32_t seq) { return 2 * seq + 1; }
inline std::uint32_t seq_of(EndId e) { return e / 2; }
inline bool is_tail(EndId e) { return e & 1; }
inline EndId opposite(EndId e) { return e ^ 1; }

struct SpanObs {
  std::uint16_t library = 0;
  std::int32_t tails = 0;  // tail_a + tail_b
  bool operator==(const SpanObs&) const = default;
  auto operator<=>(const SpanObs&) const = default;
};

struct SplintObs {
  std::uint32_t read_index = 0;
  std::int32_t gap = 0;
  std::int32_t read_start = 0;  // read bases bridging the gap, on the read as given
  std::int32_t read_end = 0;
  bool operator==(const SplintObs&) const = default;
  auto operator<=>(const SplintObs&) const = default;
};

struct LinkEdge {
  enum class Kind : std::uint8_t { Span, Splint };
  EndId end_a = 0, end_b = 0;  // end_a <= end_b
  Kind kind = Kind::Span;      // Splint once any bridging read is seen
  std::uint32_t support = 0;
  double gap_estimate = 0;
  double gap_sd = 0;
  std::vector<SpanObs> spans;
  std::vector<SplintObs> splints;

  EndId other(EndId e) const { return e == end_a ? end_b : end_a; }
};

struct ObjectInfo {
  std::int64_t length = 0;
  double depth = 0;
};

struct LinkOptions {
  std::uint32_t min_support = 1;
  int min_anchor = 31;  // shortest read anchor that still yields an alignment
  unsigned threads = 1;
};

/// Alignments from several libraries at once; `library_of` gives each
/// alignment's library index. Pairs are reads sharing an id.
std::vector<LinkEdge> build_links(std::span<const ReadAlignment> alns, std::span<const std::uint16_t> library_of,
                                  const std::vector<ObjectInfo>& objects, const std::vector<Library>& libraries,
                                  const LinkOptions& opts = {});

struct GapEstimate {
  double gap = 0;
  double sd = 0;
};

/// Expected insert for a pair observed across a gap of `gap` bases between
/// flanks of the given lengths, with each read anchored at least `min_anchor`
/// bases inside its flank. Larger fragments span a gap in more ways, so the
/// spanning inserts are biased long.
double expected_spanning_insert(double gap, double mean, double sd, std::int64_t len_a, std::int64_t len_b,
                                int min_anchor);
/// Solves for the gap whose expected spanning insert matches the observed tails.
double corrected_span_gap(double mean_tails, double mean, double sd, std::int64_t len_a, std::int64_t len_b,
                          int min_anchor);
GapEstimate estimate_gap_size(const LinkEdge& edge, const std::vector<Library>& libraries,
                              const std::vector<ObjectInfo>& objects, int min_anchor);

struct DefectOptions {
  double depth_factor = 2.0;
  double conflict_slack = 2.0;  // bases beyond 3 combined sd
};

struct Eligibility {
  std::vector<bool> end_ok;   // per end
  std::vector<bool> edge_ok;  // per edge; false when the depth test rejects it
};

Eligibility check_end_defects(const std::vector<LinkEdge>& edges, const std::vector<ObjectInfo>& objects,
                              const DefectOptions& opts = {});

struct Placed {
  std::uint32_t object = 0;
  bool reversed = false;
  std::int64_t start = 0;
  std::int64_t length = 0;
  double depth = 0;
  bool operator==(const Placed&) const = default;
};

struct GapEntry {
  std::int64_t size = 0;
  double sd = 0;
  bool operator==(const GapEntry&) const = default;
};

struct ScaffoldLayout {
  std::vector<Placed> pieces;
  std::vector<GapEntry> gaps;  // gaps[i] sits between pieces[i] and pieces[i+1]

  std::int64_t length() const { return pieces.empty() ? 0 : pieces.back().start + pieces.back().length; }
  double depth() const;
  bool operator==(const ScaffoldLayout&) const = default;
};

/// Recomputes starts from lengths and gaps. A gap may not swallow the whole
/// preceding piece.
void relayout(ScaffoldLayout& s);

struct TraverseOptions {
  double long_length = 0;  // objects longer than this are "long"
};

/// Every object lands in exactly one layout, in deterministic order.
std::vector<ScaffoldLayout> traverse(const std::vector<LinkEdge>& edges, const Eligibility& elig,
                                     const std::vector<ObjectInfo>& objects, const TraverseOptions& opts);

struct N50Stats {
  std::int64_t n50 = 0;
  std::size_t l50 = 0;
  std::int64_t total = 0;
};
N50Stats compute_n50(std::vector<std::int64_t> lengths, std::int64_t min_length = 0);

struct SweepResult {
  std::uint32_t threshold = 0;
  std::vector<ScaffoldLayout> layouts;
  N50Stats n50;
  std::vector<std::pair<std::uint32_t, std::int64_t>> tried;  // threshold, N50
};

SweepResult sweep_min_support(const std::vector<LinkEdge>& edges, const std::vector<ObjectInfo>& objects,
                              const TraverseOptions& topts, const DefectOptions& dopts,
                              std::vector<std::uint32_t> thresholds);

/// Expands layouts over tier objects into layouts over the base sequences.
std::vector<ScaffoldLayout> flatten(const std::vector<ScaffoldLayout>& upper, const std::vector<ScaffoldLayout>& lower);
/// Base sequence -> scaffold placement, for projecting alignments.
PlacementMap placement_map(const std::vector<ScaffoldLayout>& layouts);

struct TierRun {
  std::vector<std::size_t> libraries;  // indices into the library list
  std::uint32_t threshold = 0;
  std::size_t edges = 0;
  std::size_t joins = 0;
  N50Stats n50;
};

struct ScaffoldOptions {
  std::vector<std::uint32_t> thresholds{1, 2, 3, 4, 5, 6, 8, 10};
  DefectOptions defects;
  int min_anchor = 31;
  unsigned threads = 1;
};

struct ScaffoldResult {
  std::vector<ScaffoldLayout> layouts;  // over base sequences
  std::vector<TierRun> tiers;
};

/// Tiers run in increasing insert size; alignments on the base sequences are
/// projected onto each tier's scaffolds.
ScaffoldResult scaffold_tiers(const std::vector<ObjectInfo>& base, std::span<const ReadAlignment> alns,
                              std::span<const std::uint16_t> library_of, const std::vector<Library>& libraries,
                              const ScaffoldOptions& opts = {});

/// Singleton layouts, one per base sequence.
std::vector<ScaffoldLayout> trivial_layouts(const std::vector<ObjectInfo>& base);

void write_srf(std::ostream& out, const std::vector<ScaffoldLayout>& layouts, const std::vector<std::string>& names);
std::vector<ScaffoldLayout> read_srf(std::istream& in, const absl::flat_hash_map<std::string, std::uint32_t>& ids);

}  // namespace dipasm
