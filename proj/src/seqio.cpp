#include "dipasm/seqio.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

namespace dipasm {

namespace {

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path.string());
  return f;
}

}  // namespace

FastqReader::FastqReader(const std::filesystem::path& path) : file_(open_or_throw(path)), in_(&file_) {}

std::optional<QualSeq> FastqReader::next() {
  std::string header, bases, plus, quals;
  do {
    if (!std::getline(*in_, header)) return std::nullopt;
    ++line_;
    strip_cr(header);
  } while (header.empty());
  if (header[0] != '@') throw FormatError("FASTQ line " + std::to_string(line_) + ": expected '@'");
  if (!std::getline(*in_, bases) || !std::getline(*in_, plus) || !std::getline(*in_, quals))
    throw FormatError("FASTQ line " + std::to_string(line_) + ": truncated record");
  line_ += 3;
  strip_cr(bases);
  strip_cr(plus);
  strip_cr(quals);
  if (plus.empty() || plus[0] != '+') throw FormatError("FASTQ line " + std::to_string(line_ - 1) + ": expected '+'");
  if (bases.size() != quals.size())
    throw FormatError("FASTQ line " + std::to_string(line_) + ": sequence and quality lengths differ");

  QualSeq r;
  std::string name = header.substr(1);
  if (auto ws = name.find_first_of(" \t"); ws != std::string::npos) name.resize(ws);
  if (name.size() > 2 && name[name.size() - 2] == '/' && (name.back() == '1' || name.back() == '2')) {
    r.pair_slot = static_cast<std::uint8_t>(name.back() - '0');
    name.resize(name.size() - 2);
  }
  r.id = std::move(name);
  std::transform(bases.begin(), bases.end(), bases.begin(), [](char c) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return base_code(c) < 0 ? 'N' : c;
  });
  r.bases = std::move(bases);
  r.quals.resize(quals.size());
  for (std::size_t i = 0; i < quals.size(); ++i) {
    int q = static_cast<unsigned char>(quals[i]) - 33;
    if (q < 0) throw FormatError("FASTQ line " + std::to_string(line_) + ": quality below phred+33 range");
    r.quals[i] = static_cast<std::uint8_t>(q);
  }
  return r;
}

FastaReader::FastaReader(const std::filesystem::path& path) : file_(open_or_throw(path)), in_(&file_) {}

std::optional<FastaRecord> FastaReader::next() {
  std::string line;
  if (!started_) {
    while (std::getline(*in_, line)) {
      strip_cr(line);
      if (line.empty() || line[0] == ';' || line[0] == '#') continue;
      if (line[0] != '>') throw FormatError("FASTA: expected '>' header");
      pending_header_ = line.substr(1);
      started_ = true;
      break;
    }
    if (!started_) return std::nullopt;
  }
  if (done_) return std::nullopt;

  FastaRecord rec;
  rec.name = pending_header_;
  if (auto ws = rec.name.find_first_of(" \t"); ws != std::string::npos) rec.name.resize(ws);
  pending_header_.clear();
  bool more = false;
  while (std::getline(*in_, line)) {
    strip_cr(line);
    if (!line.empty() && line[0] == '>') {
      pending_header_ = line.substr(1);
      more = true;
      break;
    }
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      rec.seq.push_back(base_code(u) < 0 ? 'N' : u);
    }
  }
  if (!more) done_ = true;
  return rec;
}

std::vector<QualSeq> read_fastq(const std::filesystem::path& path) {
  FastqReader r(path);
  std::vector<QualSeq> out;
  while (auto rec = r.next()) out.push_back(std::move(*rec));
  return out;
}

std::vector<FastaRecord> read_fasta(const std::filesystem::path& path) {
  FastaReader r(path);
  std::vector<FastaRecord> out;
  while (auto rec = r.next()) out.push_back(std::move(*rec));
  return out;
}

void write_fastq_record(std::ostream& out, const QualSeq& read) {
  out << '@' << read.id;
  if (read.pair_slot) out << '/' << static_cast<int>(read.pair_slot);
  out << '\n' << read.bases << "\n+\n";
  for (auto q : read.quals) out << static_cast<char>(q + 33);
  out << '\n';
}

void write_fasta_record(std::ostream& out, const std::string& name, const std::string& seq, std::size_t width) {
  out << '>' << name << '\n';
  if (seq.empty()) {
    out << '\n';
    return;
  }
  for (std::size_t i = 0; i < seq.size(); i += width) out << seq.substr(i, width) << '\n';
}

void write_fasta(const std::filesystem::path& path, const std::vector<FastaRecord>& records,
                 const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  if (!comment.empty()) out << ';' << comment << '\n';
  for (const auto& r : records) write_fasta_record(out, r.name, r.seq);
}

}  // namespace dipasm
