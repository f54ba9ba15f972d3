#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dipasm/kmer.hpp"
#include "dipasm/ufx.hpp"

namespace dipasm {

/// Two UU contigs that leave and rejoin the graph through the same pair of
/// anchor k-mers. Anchors and branch orientations are given in the bubble's
/// own reading direction.
struct Bubble {
  std::uint32_t id = 0;
  std::uint32_t branch_a = 0, branch_b = 0;  // contig ids, a < b
  bool a_reversed = false, b_reversed = false;
  Kmer left_anchor, right_anchor;  // oriented words
  double depth_a = 0, depth_b = 0;
  std::size_t len_a = 0, len_b = 0;

  std::size_t len_diff() const { return len_a > len_b ? len_a - len_b : len_b - len_a; }
};

/// Left anchor (base before + first k-1) and right anchor (last k-1 + base
/// after) of a contig read in the given direction; nullopt when an end has
/// no extension.
std::optional<std::pair<Kmer, Kmer>> contig_anchors(const UUContig& c, int k, bool reversed = false);

std::vector<Bubble> detect_bubbles(const std::vector<UUContig>& contigs, const UfxTable& table);

struct ChainElement {
  enum class Kind : std::uint8_t { Contig, Bubble };
  Kind kind = Kind::Contig;
  std::uint32_t id = 0;
  bool reversed = false;

  bool operator==(const ChainElement&) const = default;
};

struct AltAllele {
  std::uint32_t bubble = 0;
  std::size_t offset = 0;  // start of the allele core in the consensus
  std::string consensus;   // core of the chosen branch, k-1 flanks stripped
  std::string alternate;
};

struct Diplotig {
  std::uint32_t id = 0;
  std::vector<ChainElement> chain;
  std::string consensus;
  double mean_depth = 0;
  std::vector<AltAllele> alts;
};

struct ChainResult {
  std::vector<Diplotig> diplotigs;
  std::vector<std::uint32_t> leftovers;  // contig ids used by no diplotig
};

/// Joins contigs and bubbles that meet at a shared anchor k-mer when each is
/// the other's only partner there, alternating contig and bubble.
ChainResult chain_diplotigs(const std::vector<UUContig>& contigs, const std::vector<Bubble>& bubbles, int k);

struct IsotigOptions {
  double min_length_factor = 2.0;  // times k
  double depth_lo = 0.66;          // times d_max
  double depth_hi = 1.5;
};

struct Isotig {
  std::uint32_t contig = 0;
  double depth = 0;
};

std::vector<Isotig> select_isotigs(const std::vector<UUContig>& contigs, const std::vector<std::uint32_t>& leftovers,
                                   int k, double d_max, const IsotigOptions& opts = {});

struct BubbleStats {
  std::map<std::size_t, std::size_t> len_diff_hist;
  std::map<std::size_t, std::size_t> branch_len_hist;
  // (lower depth bin, higher depth bin) -> bubbles
  std::map<std::pair<int, int>, std::size_t> depth_heatmap;
  double bin_width = 1;
  std::size_t half_depth = 0;  // both branches within [0.25, 0.75] d_max
  std::size_t other_depth = 0;
};

BubbleStats bubble_stats(const std::vector<Bubble>& bubbles, double d_max, double bin_width = 1.0);

void write_alt_alleles(std::ostream& out, const std::vector<Diplotig>& diplotigs);
void write_bubble_stats(std::ostream& out, const BubbleStats& stats);

}  // namespace dipasm
