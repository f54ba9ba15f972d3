#pragma once

#include <absl/container/flat_hash_map.h>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipasm/kmer.hpp"

namespace dipasm {

class DuplicateKmerError : public std::runtime_error {
 public:
  DuplicateKmerError(const std::string& kmer, std::uint32_t first, std::uint32_t second)
      : std::runtime_error("k-mer " + kmer + " occurs in sequences " + std::to_string(first) + " and " +
                           std::to_string(second)),
        first_seq(first),
        second_seq(second) {}
  std::uint32_t first_seq, second_seq;
};

struct SeedLocation {
  std::uint32_t seq = 0;
  std::uint32_t offset = 0;  // window start on the sequence's forward strand
  bool flipped = false;      // canonical word is the reverse complement of that window
};

/// Canonical k-mer -> single location. Owns a copy of the sequences.
class SeedIndex {
 public:
  SeedIndex() = default;
  /// Throws DuplicateKmerError when any k-mer occurs twice (on either strand).
  SeedIndex(std::vector<std::string> seqs, int k);

  int k() const { return k_; }
  std::size_t size() const { return index_.size(); }
  const std::vector<std::string>& seqs() const { return seqs_; }
  std::optional<SeedLocation> lookup(const Kmer& canonical) const;

 private:
  int k_ = 0;
  std::vector<std::string> seqs_;
  absl::flat_hash_map<Kmer, SeedLocation> index_;
};

enum class AlignClass : std::uint8_t { Full, EndExtended, InnerScan };
const char* align_class_name(AlignClass c);

struct ReadAlignment {
  std::string read_id;
  std::uint8_t pair_slot = 0;
  std::uint32_t read_index = 0;  // position in the input batch
  int read_len = 0;
  int rstart = 0, rend = 0;  // on the read as given
  std::uint32_t seq = 0;
  int sstart = 0, send = 0;  // on the sequence's forward strand
  bool reversed = false;     // read aligns to the reverse strand
  int mismatches = 0;
  int indels = 0;
  AlignClass cls = AlignClass::Full;

  bool operator==(const ReadAlignment&) const = default;
};

/// Result of extending an alignment edge outward from a seed.
struct EndExtension {
  int read_used = 0;
  int seq_used = 0;
  int mismatches = 0;
  int indels = 0;
  bool complete = false;  // reached the read end or the sequence end
};

/// Tolerant extension along read[0..) vs seq[0..): exact until the first
/// difference, then one mismatch, read insertion or read deletion, then
/// exact to the end. Fewest edits wins; among one-edit options a mismatch is
/// preferred, then an insertion. Falls back to the exact run when no option
/// completes.
EndExtension extend_tolerant(std::string_view read, std::string_view seq);
/// Length of the exact common prefix.
int extend_exact(std::string_view read, std::string_view seq);

/// Leftmost/rightmost unique-seed alignment with bounded end extension.
std::vector<ReadAlignment> align_read(const QualSeq& read, const SeedIndex& index, std::uint32_t read_index = 0);

/// Aligns a batch; output ordered by read index regardless of thread count.
std::vector<ReadAlignment> align_reads(std::span<const QualSeq> reads, const SeedIndex& index, unsigned threads = 1);

/// Where a sequence sits inside a scaffold.
struct ContigPlacement {
  std::uint32_t scaffold = 0;
  std::int64_t offset = 0;
  bool reversed = false;
  std::int64_t length = 0;
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using PlacementMap = absl::flat_hash_map<std::uint32_t, ContigPlacement>;

/// Translates an alignment onto scaffold coordinates; throws PlacementError
/// when its sequence is not placed.
ReadAlignment project_alignment(const ReadAlignment& aln, const PlacementMap& layout);
/// Inverse of project_alignment for a known placement.
ReadAlignment unproject_alignment(const ReadAlignment& aln, std::uint32_t seq, const ContigPlacement& p);

void write_alignments(std::ostream& out, std::span<const ReadAlignment> alns, const std::vector<std::string>& seq_names);
std::vector<ReadAlignment> read_alignments(std::istream& in, const absl::flat_hash_map<std::string, std::uint32_t>& seq_ids);

}  // namespace dipasm
