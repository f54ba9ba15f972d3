#pragma once

#include <absl/container/flat_hash_map.h>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dipasm/kmer.hpp"
#include "dipasm/seqio.hpp"

namespace dipasm {

struct MarkerEntry {
  Marker kmer;  // canonical
  std::uint32_t chrom = 0;
  std::uint32_t pos = 0;  // first occurrence in haplotype A
  bool flipped = false;   // haplotype A forward strand reads as the complement of `kmer`
  std::uint32_t count_a = 0;
  std::uint32_t count_b = 0;
  char next_a = 0;  // base after the first A occurrence, A orientation; 0 at a chromosome end
  char next_b = 0;  // same locus in B, expressed in A orientation
  bool sampled = false;

  bool equal_frequency() const { return count_a == count_b; }
  bool single_copy() const { return count_a == 1 && count_b == 1; }
};

/// Distinct m-mers present in both haplotypes, in haplotype-A order.
struct MarkerTable {
  int m = 101;
  std::vector<MarkerEntry> entries;
  absl::flat_hash_map<Marker, std::uint32_t> index;
  std::uint64_t seed = 0;
  double sample_frac = 0;
};

struct MarkerOptions {
  int m = 101;
  double sample_frac = 0.001;  // of single-copy markers, for scaffold metrics
  std::uint64_t seed = 1;
};

MarkerTable extract_markers(const std::vector<FastaRecord>& hap_a, const std::vector<FastaRecord>& hap_b,
                            const MarkerOptions& opts = {});

/// Where each marker lands in an assembly.
struct AssemblyHits {
  std::vector<std::uint32_t> count;  // per marker entry
  struct Hit {
    std::uint32_t scaffold = 0;
    std::uint32_t pos = 0;
    bool same_strand = true;  // assembly reads the marker in haplotype-A orientation
  };
  std::vector<Hit> first;
};

AssemblyHits locate_markers(const MarkerTable& markers, const std::vector<FastaRecord>& assembly);

struct CompletenessRow {
  std::string label;  // "1", "2", "3", "4+"
  std::uint64_t total = 0;
  std::uint64_t absent = 0, fewer = 0, equal = 0, more = 0;
};

/// Rows for n = 1, 2, 3, 4+ over equal-frequency markers.
std::array<CompletenessRow, 4> completeness_by_copy(const MarkerTable& markers, const AssemblyHits& hits);

struct FidelityRates {
  double mu = 0, mu_M = 0, mu_U = 0;  // per 10 kbp of assessed loci
  std::uint64_t loci_assessed = 0;
  std::uint64_t mismatches = 0;
  std::uint64_t unspecified = 0;
};

FidelityRates base_fidelity(const MarkerTable& markers, const AssemblyHits& hits,
                            const std::vector<FastaRecord>& assembly);

struct MarkerPlacement {
  std::uint32_t chrom = 0;
  std::uint64_t ref_rank = 0;  // order along the reference, chromosome by chromosome
  std::uint32_t scaffold = 0;
  std::int64_t pos = 0;
  bool same_strand = true;
};

struct ScaffoldAccuracy {
  double f_U = 0, f_M = 0, f_N = 0;
  std::array<double, 3> pi{};   // precision error fractions
  std::array<double, 3> rho{};  // recall error fractions
  std::uint64_t markers_used = 0;
  std::uint64_t precision_pairs = 0;
  std::uint64_t recall_pairs = 0;
};

/// Length fractions of scaffolds tied to one, several, or no chromosome.
void chromosome_assignment(const std::vector<MarkerPlacement>& placed, const std::vector<std::int64_t>& scaffold_lengths,
                           int min_markers, ScaffoldAccuracy& out);
void order_precision_recall(std::vector<MarkerPlacement> placed, ScaffoldAccuracy& out);

/// Sampled markers found exactly once in the assembly.
std::vector<MarkerPlacement> sampled_placements(const MarkerTable& markers, const AssemblyHits& hits);

struct EvalOptions {
  MarkerOptions markers;
  int min_markers = 10;
};

struct EvalReport {
  int m = 0;
  std::uint64_t markers = 0;
  std::uint64_t equal_frequency = 0;
  std::array<CompletenessRow, 4> completeness;
  FidelityRates fidelity;
  ScaffoldAccuracy scaffolds;
  std::uint64_t seed = 0;
  double sample_frac = 0;
  int min_markers = 0;
};

EvalReport evaluate(const std::vector<FastaRecord>& hap_a, const std::vector<FastaRecord>& hap_b,
                    const std::vector<FastaRecord>& assembly, const EvalOptions& opts = {});
EvalReport evaluate(const MarkerTable& markers, const std::vector<FastaRecord>& assembly, int min_markers = 10);

/// Text tables followed by key=value lines.
void write_report(std::ostream& out, const EvalReport& r);

}  // namespace dipasm
