#pragma once

#include <absl/container/flat_hash_map.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dipasm/kmer.hpp"
#include "dipasm/spectrum.hpp"

namespace dipasm {

/// High-quality extension tallies; side 0 is left, side 1 is right, both in
/// canonical orientation.
using ExtTallies = std::array<std::array<std::uint32_t, 4>, 2>;

enum class EndCode : char { U = 'U', F = 'F', X = 'X' };

struct UfxCode {
  EndCode left = EndCode::X;
  EndCode right = EndCode::X;
  std::int8_t left_base = -1;   // 2-bit code when left == U
  std::int8_t right_base = -1;  // 2-bit code when right == U

  bool is_uu() const { return left == EndCode::U && right == EndCode::U; }
  std::string str() const { return {static_cast<char>(left), static_cast<char>(right)}; }
  bool operator==(const UfxCode&) const = default;
};

UfxCode classify_ufx(const ExtTallies& ext);

struct UfxRecord {
  Kmer kmer;
  std::uint32_t count = 0;
  ExtTallies ext{};
  UfxCode code;

  bool operator==(const UfxRecord&) const = default;
};

/// The UFX graph: records sorted by canonical k-mer plus a hash index.
class UfxTable {
 public:
  UfxTable() = default;
  UfxTable(int k, std::vector<UfxRecord> records);

  int k() const { return k_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<UfxRecord>& records() const { return records_; }
  const UfxRecord* find(const Kmer& canonical) const;
  std::optional<std::size_t> index_of(const Kmer& canonical) const;

  void write_binary(const std::filesystem::path& path, const std::string& provenance = {}) const;
  static UfxTable read_binary(const std::filesystem::path& path);
  void write_text(std::ostream& out) const;

 private:
  int k_ = 0;
  std::vector<UfxRecord> records_;
  absl::flat_hash_map<Kmer, std::uint32_t> index_;
};

struct CountOptions {
  int k = 31;
  std::uint32_t d_min = 2;
  std::uint8_t q_min = 20;
  unsigned threads = 1;
  std::size_t num_buckets = 256;
};

/// Partitioned count: each worker owns the prefix buckets congruent to its
/// index and scans the whole read set. Workers share nothing; results are
/// concatenated and sorted.
UfxTable count_kmers(std::span<const QualSeq> reads, const CountOptions& opts);

/// Single-map reference count.
UfxTable count_kmers_serial(std::span<const QualSeq> reads, const CountOptions& opts);

/// Spectrum over all k-mers (no D_min cut), counted by prefix partition.
KmerHistogram count_spectrum(std::span<const QualSeq> reads, int k, unsigned threads = 1);

struct UUContig {
  std::uint32_t id = 0;
  std::string seq;
  double mean_depth = 0;
  std::optional<char> left_ext;   // base preceding seq
  std::optional<char> right_ext;  // base following seq
  bool cyclic = false;

  std::size_t length() const { return seq.size(); }
};

/// Maximal reciprocal-unique walks over UU k-mers. Walkers run concurrently
/// and deduplicate by registering each walk under its least k-mer, so the
/// output does not depend on thread count or start order.
std::vector<UUContig> traverse_uu_contigs(const UfxTable& table, unsigned threads = 1);

/// Mean count of the contig's k-mers in the table.
double contig_depth(std::string_view seq, const UfxTable& table);

}  // namespace dipasm
