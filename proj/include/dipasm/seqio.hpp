#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipasm/kmer.hpp"

namespace dipasm {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FastaRecord {
  std::string name;
  std::string seq;
};

/// Streaming 4-line FASTQ reader, phred+33. Read names ending in /1 or /2
/// have the suffix stripped into `pair_slot`.
class FastqReader {
 public:
  explicit FastqReader(std::istream& in) : in_(&in) {}
  explicit FastqReader(const std::filesystem::path& path);

  std::optional<QualSeq> next();

 private:
  std::ifstream file_;
  std::istream* in_;
  std::size_t line_ = 0;
};

/// Streaming FASTA reader; sequences may be wrapped. Lines starting with
/// ';' or '#' before a record are treated as comments.
class FastaReader {
 public:
  explicit FastaReader(std::istream& in) : in_(&in) {}
  explicit FastaReader(const std::filesystem::path& path);

  std::optional<FastaRecord> next();

 private:
  std::ifstream file_;
  std::istream* in_;
  std::string pending_header_;
  bool started_ = false;
  bool done_ = false;
};

std::vector<QualSeq> read_fastq(const std::filesystem::path& path);
std::vector<FastaRecord> read_fasta(const std::filesystem::path& path);

void write_fastq_record(std::ostream& out, const QualSeq& read);
void write_fasta_record(std::ostream& out, const std::string& name, const std::string& seq, std::size_t width = 80);
void write_fasta(const std::filesystem::path& path, const std::vector<FastaRecord>& records,
                 const std::string& comment = {});

}  // namespace dipasm
